#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sot3d/errors.hpp"
#include "sot3d/geom/iou.hpp"
#include "sot3d/sequence.hpp"

namespace sot3d {

// Per-frame symmetric IoU between predictions and ground truth. Frames 1 and
// absent-labeled frames are excluded; every remaining frame must be predicted
// exactly once. Extra predictions for excluded frames are ignored.
inline std::vector<double> frame_overlaps(const SequenceResult& result, const Sequence& gt) {
  std::map<int, const ResultRow*> by_frame;
  for (const ResultRow& r : result.rows) {
    if (!by_frame.emplace(r.frame, &r).second) {
      throw ProtocolError("sequence " + gt.meta.id + ": duplicate prediction for frame " +
                          std::to_string(r.frame));
    }
    if (r.frame > gt.num_frames()) {
      throw ProtocolError("sequence " + gt.meta.id + ": prediction for frame " +
                          std::to_string(r.frame) + " beyond the last frame " +
                          std::to_string(gt.num_frames()));
    }
  }
  std::vector<double> overlaps;
  for (int t = 2; t <= gt.num_frames(); ++t) {
    const FrameRecord& f = gt.frame(t);
    if (!f.present) continue;
    auto it = by_frame.find(t);
    if (it == by_frame.end()) {
      throw ProtocolError("sequence " + gt.meta.id + ": missing prediction for frame " +
                          std::to_string(t));
    }
    overlaps.push_back(iou3d_symmetric(it->second->box, *f.box, gt.meta.symmetry));
  }
  return overlaps;
}

inline double average_overlap(const std::vector<double>& overlaps) {
  if (overlaps.empty()) throw ProtocolError("average overlap of an empty frame set");
  return std::accumulate(overlaps.begin(), overlaps.end(), 0.0) /
         static_cast<double>(overlaps.size());
}

// Success rate at threshold tau; an overlap exactly equal to tau fails.
inline double success_rate(const std::vector<double>& overlaps, double tau) {
  if (overlaps.empty()) throw ProtocolError("success rate of an empty frame set");
  std::size_t hits = 0;
  for (double v : overlaps) {
    if (v > tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(overlaps.size());
}

struct SequenceScore {
  std::string id;
  std::string category;
  AttributeVector attributes{};
  int frames = 0;
  double ao = 0.0;
  double sr50 = 0.0;
  double sr75 = 0.0;
};

struct ClassScore {
  std::string category;
  int sequences = 0;
  double ao = 0.0;
  double sr50 = 0.0;
  double sr75 = 0.0;
};

struct AttributeScore {
  std::string name;
  int sequences = 0;
  double mao = 0.0;
  double msr50 = 0.0;
  double msr75 = 0.0;
};

struct MetricsReport {
  double mao = 0.0;
  double msr50 = 0.0;
  double msr75 = 0.0;
  std::vector<ClassScore> per_class;
  std::vector<SequenceScore> per_sequence;
  std::vector<AttributeScore> per_attribute;
};

// Class-balanced aggregation: sequence scores are averaged within each
// category, then categories are averaged with equal weight.
inline MetricsReport aggregate(const std::vector<SequenceResult>& results,
                               const std::vector<Sequence>& gts) {
  if (results.empty()) throw ProtocolError("aggregate: no results");
  std::map<std::string, const Sequence*> gt_by_id;
  for (const Sequence& s : gts) gt_by_id[s.meta.id] = &s;

  MetricsReport report;
  for (const SequenceResult& r : results) {
    auto it = gt_by_id.find(r.id);
    if (it == gt_by_id.end()) {
      throw ProtocolError("result for unknown sequence '" + r.id + "'");
    }
    const Sequence& gt = *it->second;
    const std::vector<double> overlaps = frame_overlaps(r, gt);
    SequenceScore s;
    s.id = r.id;
    s.category = gt.meta.category;
    s.attributes = gt.meta.attributes;
    s.frames = static_cast<int>(overlaps.size());
    s.ao = average_overlap(overlaps);
    s.sr50 = success_rate(overlaps, 0.5);
    s.sr75 = success_rate(overlaps, 0.75);
    report.per_sequence.push_back(std::move(s));
  }
  std::sort(report.per_sequence.begin(), report.per_sequence.end(),
            [](const SequenceScore& a, const SequenceScore& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < report.per_sequence.size(); ++i) {
    if (report.per_sequence[i].id == report.per_sequence[i - 1].id) {
      throw ProtocolError("duplicate result for sequence '" + report.per_sequence[i].id + "'");
    }
  }

  std::map<std::string, ClassScore> classes;
  for (const SequenceScore& s : report.per_sequence) {
    ClassScore& c = classes[s.category];
    c.category = s.category;
    c.sequences += 1;
    c.ao += s.ao;
    c.sr50 += s.sr50;
    c.sr75 += s.sr75;
  }
  for (auto& [name, c] : classes) {
    c.ao /= c.sequences;
    c.sr50 /= c.sequences;
    c.sr75 /= c.sequences;
    report.per_class.push_back(c);
    report.mao += c.ao;
    report.msr50 += c.sr50;
    report.msr75 += c.sr75;
  }
  const double nc = static_cast<double>(report.per_class.size());
  report.mao /= nc;
  report.msr50 /= nc;
  report.msr75 /= nc;
  if (report.msr75 > report.msr50 + 1e-12) {
    throw NumericError("metrics invariant violated: mSR75 > mSR50");
  }
  return report;
}

// Per-attribute aggregation over the subset of sequences carrying each flag.
inline std::vector<AttributeScore> attribute_report(const std::vector<SequenceResult>& results,
                                                    const std::vector<Sequence>& gts) {
  std::map<std::string, const Sequence*> gt_by_id;
  for (const Sequence& s : gts) gt_by_id[s.meta.id] = &s;
  std::vector<AttributeScore> out;
  for (std::size_t a = 0; a < kAttributeNames.size(); ++a) {
    std::vector<SequenceResult> sub_results;
    std::vector<Sequence> sub_gts;
    for (const SequenceResult& r : results) {
      auto it = gt_by_id.find(r.id);
      if (it == gt_by_id.end()) {
        throw ProtocolError("result for unknown sequence '" + r.id + "'");
      }
      if (it->second->meta.attributes[a]) {
        sub_results.push_back(r);
        sub_gts.push_back(*it->second);
      }
    }
    AttributeScore s;
    s.name = kAttributeNames[a];
    s.sequences = static_cast<int>(sub_results.size());
    if (!sub_results.empty()) {
      const MetricsReport r = aggregate(sub_results, sub_gts);
      s.mao = r.mao;
      s.msr50 = r.msr50;
      s.msr75 = r.msr75;
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline MetricsReport evaluate_results(const std::vector<SequenceResult>& results,
                                      const std::vector<Sequence>& gts) {
  MetricsReport report = aggregate(results, gts);
  report.per_attribute = attribute_report(results, gts);
  return report;
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json j{{"mAO", r.mao}, {"mSR50", r.msr50}, {"mSR75", r.msr75}};
  j["per_class"] = nlohmann::json::array();
  for (const ClassScore& c : r.per_class) {
    j["per_class"].push_back({{"category", c.category},
                              {"sequences", c.sequences},
                              {"AO", c.ao},
                              {"SR50", c.sr50},
                              {"SR75", c.sr75}});
  }
  j["per_sequence"] = nlohmann::json::array();
  for (const SequenceScore& s : r.per_sequence) {
    nlohmann::json attrs = nlohmann::json::array();
    for (std::size_t a = 0; a < kAttributeNames.size(); ++a) {
      if (s.attributes[a]) attrs.push_back(kAttributeNames[a]);
    }
    j["per_sequence"].push_back({{"id", s.id},
                                 {"category", s.category},
                                 {"attributes", attrs},
                                 {"frames", s.frames},
                                 {"AO", s.ao},
                                 {"SR50", s.sr50},
                                 {"SR75", s.sr75}});
  }
  j["per_attribute"] = nlohmann::json::array();
  for (const AttributeScore& a : r.per_attribute) {
    j["per_attribute"].push_back({{"attribute", a.name},
                                  {"sequences", a.sequences},
                                  {"mAO", a.mao},
                                  {"mSR50", a.msr50},
                                  {"mSR75", a.msr75}});
  }
  return j;
}

inline std::string report_to_text(const MetricsReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "overall  mAO " << r.mao << "  mSR50 " << r.msr50 << "  mSR75 " << r.msr75 << "\n\n";
  os << std::left << std::setw(16) << "category" << std::right << std::setw(6) << "seqs"
     << std::setw(10) << "AO" << std::setw(10) << "SR50" << std::setw(10) << "SR75" << "\n";
  for (const ClassScore& c : r.per_class) {
    os << std::left << std::setw(16) << c.category << std::right << std::setw(6) << c.sequences
       << std::setw(10) << c.ao << std::setw(10) << c.sr50 << std::setw(10) << c.sr75 << "\n";
  }
  if (!r.per_attribute.empty()) {
    os << "\n" << std::left << std::setw(16) << "attribute" << std::right << std::setw(6) << "seqs"
       << std::setw(10) << "mAO" << std::setw(10) << "mSR50" << std::setw(10) << "mSR75" << "\n";
    for (const AttributeScore& a : r.per_attribute) {
      os << std::left << std::setw(16) << a.name << std::right << std::setw(6) << a.sequences;
      if (a.sequences > 0) {
        os << std::setw(10) << a.mao << std::setw(10) << a.msr50 << std::setw(10) << a.msr75;
      } else {
        os << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(10) << "-";
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace sot3d
