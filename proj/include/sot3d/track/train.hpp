#pragma once

#include <chrono>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "sot3d/nn/adam.hpp"
#include "sot3d/rng.hpp"
#include "sot3d/track/loss.hpp"

namespace sot3d::track {

// One supervised example: predict frame t of *seq anchored on the previous
// present frame, with up to K earlier present frames as memory.
struct TrainTuple {
  const Sequence* seq = nullptr;
  int t = 0;
  int prev_t = 0;
  std::vector<int> memory_frames;  // ascending, oldest first
};

inline std::vector<TrainTuple> build_tuples(const std::vector<Sequence>& seqs,
                                            const TrackerConfig& cfg) {
  std::vector<TrainTuple> tuples;
  for (const Sequence& seq : seqs) {
    std::vector<int> present;
    for (int t = 1; t <= seq.num_frames(); ++t) {
      if (!seq.frame(t).present) continue;
      if (t >= 2 && !present.empty()) {
        TrainTuple tup;
        tup.seq = &seq;
        tup.t = t;
        tup.prev_t = present.back();
        const std::size_t k = std::min<std::size_t>(present.size(),
                                                    static_cast<std::size_t>(cfg.memory_size));
        tup.memory_frames.assign(present.end() - static_cast<std::ptrdiff_t>(k), present.end());
        tuples.push_back(std::move(tup));
      }
      present.push_back(t);
    }
  }
  return tuples;
}

struct TrainLogEntry {
  int epoch = 0;
  int tuples = 0;
  LossBreakdown mean;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
};

// Forward + loss for one tuple. Returns nothing when the search region or
// every memory crop is empty; such tuples are skipped.
inline std::optional<nn::Tensor> tuple_loss(nn::Tape* tape, const TrainTuple& tup,
                                            const TrackerConfig& cfg, nn::Parameters& params,
                                            Rng& rng, LossBreakdown* breakdown) {
  const Sequence& seq = *tup.seq;
  Box9DoF prev = *seq.frame(tup.prev_t).box;
  if (cfg.train_jitter > 0.0) {
    prev = Box9DoF(prev.center + Vec3{cfg.train_jitter * rng.normal(),
                                      cfg.train_jitter * rng.normal(),
                                      cfg.train_jitter * rng.normal()},
                   prev.size, prev.angles);
  }

  TrackerMemory memory(static_cast<std::size_t>(cfg.memory_size));
  for (int mt : tup.memory_frames) {
    const Box9DoF& mbox = *seq.frame(mt).box;
    const CropResult crop = crop_points(seq.cloud(mt), mbox, cfg.region_scale);
    if (crop.points.empty()) continue;
    BackboneOut bb = backbone_forward(tape, crop.points, mbox.center, cfg, params);
    MemoryEntry e{bb.coords, bb.coords_t, bb.features, containment_mask(mbox, bb.coords)};
    memory.push(std::move(e));
  }
  if (memory.empty()) return std::nullopt;

  const CropResult crop = crop_points(seq.cloud(tup.t), prev, cfg.region_scale);
  if (crop.points.empty()) return std::nullopt;

  const MemoryView mem = memory.view(tape);
  const CascadeOutput out = cascade_forward(tape, crop.points, prev, mem, cfg, params);
  return loss_total(tape, out, prev, *seq.frame(tup.t).box, cfg, breakdown);
}

// Minibatch Adam training with gradient averaging over each batch. All
// randomness (tuple order, jitter) comes from the one seeded stream.
inline TrainResult train_tracker(const std::vector<Sequence>& train_seqs, const TrackerConfig& cfg,
                                 nn::Parameters& params, std::uint64_t seed,
                                 std::ostream* log_stream = nullptr) {
  cfg.validate();
  const std::vector<TrainTuple> tuples = build_tuples(train_seqs, cfg);
  if (tuples.empty()) {
    throw std::invalid_argument("train_tracker: no usable training tuples");
  }
  Rng rng(seed);
  nn::Adam adam(params, cfg.learning_rate);
  TrainResult result;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(tuples.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    if (cfg.tuples_per_epoch > 0 && order.size() > static_cast<std::size_t>(cfg.tuples_per_epoch)) {
      order.resize(static_cast<std::size_t>(cfg.tuples_per_epoch));
    }

    LossBreakdown sums;
    int used = 0;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(cfg.batch_size));
      params.zero_grad();
      int batch_used = 0;
      for (std::size_t j = i; j < end; ++j) {
        nn::Tape tape;
        LossBreakdown one;
        std::optional<nn::Tensor> loss =
            tuple_loss(&tape, tuples[order[j]], cfg, params, rng, &one);
        if (!loss) continue;
        tape.backward(*loss);
        ++batch_used;
        sums.total += one.total;
        sums.mask += one.mask;
        sums.center += one.center;
        sums.proposal += one.proposal;
        sums.score += one.score;
        sums.bbox += one.bbox;
      }
      if (batch_used == 0) continue;
      params.scale_grads(1.0 / batch_used);
      adam.step();
      used += batch_used;
    }
    if (used == 0) throw std::invalid_argument("train_tracker: every tuple was skipped");

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.tuples = used;
    entry.mean.total = sums.total / used;
    entry.mean.mask = sums.mask / used;
    entry.mean.center = sums.center / used;
    entry.mean.proposal = sums.proposal / used;
    entry.mean.score = sums.score / used;
    entry.mean.bbox = sums.bbox / used;
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (log_stream) {
      (*log_stream) << json{{"epoch", entry.epoch},
                            {"tuples", entry.tuples},
                            {"loss", entry.mean.total},
                            {"mask", entry.mean.mask},
                            {"center", entry.mean.center},
                            {"proposal", entry.mean.proposal},
                            {"score", entry.mean.score},
                            {"bbox", entry.mean.bbox},
                            {"seconds", entry.seconds}}
                        .dump()
                    << "\n"
                    << std::flush;
    }
    result.log.push_back(entry);
  }
  return result;
}

}  // namespace sot3d::track
