#pragma once

#include <vector>

#include "sot3d/track/tracker.hpp"

namespace sot3d::track {

struct LossBreakdown {
  double total = 0.0;
  double mask = 0.0;
  double center = 0.0;
  double proposal = 0.0;
  double score = 0.0;
  double bbox = 0.0;
};

// Supervision targets derive from the ground-truth box of the current frame
// and the reference box the offsets are anchored on.
inline nn::Tensor loss_total(nn::Tape* tape, const CascadeOutput& out, const Box9DoF& prev,
                             const Box9DoF& gt, const TrackerConfig& cfg,
                             LossBreakdown* breakdown = nullptr) {
  const double r = cfg.proposal_radius;
  nn::Tensor mask_sum = nn::Tensor::scalar(0.0);
  nn::Tensor center_sum = nn::Tensor::scalar(0.0);
  nn::Tensor proposal_sum = nn::Tensor::scalar(0.0);

  const int first_stage = cfg.per_stage_losses ? 0 : cfg.stages - 1;
  for (int s = first_stage; s < cfg.stages; ++s) {
    const StageOutput& so = out.stages[static_cast<std::size_t>(s)];
    const std::vector<double> in_box = containment_mask(gt, so.input_coords);
    mask_sum = nn::add(tape, mask_sum, nn::bce_with_logits_mean(tape, so.mask_logits, in_box));

    double n_in = 0.0;
    for (double v : in_box) n_in += v;
    if (n_in > 0.0) {
      const nn::Tensor diff = nn::sub_rowvec(tape, so.votes, rowvec3(gt.center));
      center_sum =
          nn::add(tape, center_sum, nn::weighted_sq_sum(tape, diff, in_box, 3.0 * n_in));
    }

    const std::vector<Vec3> votes = points_from_tensor(so.votes);
    std::vector<double> near(votes.size());
    for (std::size_t i = 0; i < votes.size(); ++i) {
      near[i] = norm(votes[i] - gt.center) < r ? 1.0 : 0.0;
    }
    proposal_sum =
        nn::add(tape, proposal_sum, nn::bce_with_logits_mean(tape, so.score_logits, near));
  }

  const nn::Tensor score_logits = nn::slice_cols(tape, out.final_table, 9, 10);
  std::vector<double> final_near(out.final_table.rows());
  for (std::size_t i = 0; i < out.final_table.rows(); ++i) {
    const Vec3 c = prev.center + Vec3{out.final_table.at(i, 0), out.final_table.at(i, 1),
                                      out.final_table.at(i, 2)};
    final_near[i] = norm(c - gt.center) < r ? 1.0 : 0.0;
  }
  const nn::Tensor score_loss = nn::bce_with_logits_mean(tape, score_logits, final_near);

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.final_table.rows(); ++i) {
    if (out.final_table.at(i, 9) > out.final_table.at(best, 9)) best = i;
  }
  const nn::Tensor selected =
      nn::slice_cols(tape, nn::gather_rows(tape, out.final_table, {best}), 0, 9);
  std::vector<double> targets = {gt.center.x - prev.center.x,
                                 gt.center.y - prev.center.y,
                                 gt.center.z - prev.center.z,
                                 gt.size.x - prev.size.x,
                                 gt.size.y - prev.size.y,
                                 gt.size.z - prev.size.z,
                                 wrap_angle(gt.angles.x - prev.angles.x),
                                 wrap_angle(gt.angles.y - prev.angles.y),
                                 wrap_angle(gt.angles.z - prev.angles.z)};
  if (!cfg.predict_full_rotation) {
    targets[7] = 0.0;
    targets[8] = 0.0;
  }
  const nn::Tensor bbox_loss = nn::smooth_l1_mean(tape, selected, targets);

  nn::Tensor total = nn::add(tape, nn::scale(tape, mask_sum, cfg.lambda_mask),
                             nn::scale(tape, center_sum, cfg.lambda_center));
  total = nn::add(tape, total, nn::scale(tape, proposal_sum, cfg.lambda_proposal));
  total = nn::add(tape, total, nn::scale(tape, score_loss, cfg.lambda_score));
  total = nn::add(tape, total, bbox_loss);

  if (breakdown) {
    breakdown->mask = mask_sum.item();
    breakdown->center = center_sum.item();
    breakdown->proposal = proposal_sum.item();
    breakdown->score = score_loss.item();
    breakdown->bbox = bbox_loss.item();
    breakdown->total = total.item();
  }
  return total;
}

}  // namespace sot3d::track
