#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sot3d/geom/box.hpp"
#include "sot3d/geom/vec3.hpp"

namespace sot3d {

enum class AbsenceReason { None, FullOcclusion, OutOfView };

inline std::string absence_name(AbsenceReason r) {
  switch (r) {
    case AbsenceReason::FullOcclusion: return "full_occlusion";
    case AbsenceReason::OutOfView: return "out_of_view";
    default: return "none";
  }
}

// One annotated frame. present <=> box is set <=> absence reason is none.
struct FrameRecord {
  int frame = 1;  // 1-based
  bool present = true;
  AbsenceReason absence = AbsenceReason::None;
  std::optional<Box9DoF> box;
};

// Per-sequence difficulty attributes, in file order.
inline constexpr std::array<const char*, 7> kAttributeNames = {
    "INV", "DEF", "FM", "ROT", "SV", "SD", "SPA"};

using AttributeVector = std::array<bool, 7>;

struct SequenceMeta {
  std::string id;
  std::string category;
  AttributeVector attributes{};
  SymmetrySpec symmetry;
  double fps = 20.0;
  int num_frames = 0;
};

// A point-cloud sequence with per-frame annotation. Clouds load lazily from
// `dir` unless the sequence was built in memory (clouds non-empty).
struct Sequence {
  SequenceMeta meta;
  std::vector<FrameRecord> frames;
  std::filesystem::path dir;
  std::vector<PointSet> clouds;  // optional cache; index 0 <-> frame 1

  const FrameRecord& frame(int t) const { return frames.at(static_cast<std::size_t>(t - 1)); }
  int num_frames() const { return static_cast<int>(frames.size()); }
  PointSet cloud(int t) const;  // defined in io/sequence_io.hpp
};

// One predicted frame of a tracker result file.
struct ResultRow {
  int frame = 1;
  Box9DoF box;
  double score = 0.0;
};

// A tracker's output over one sequence.
struct SequenceResult {
  std::string id;
  std::vector<ResultRow> rows;
};

}  // namespace sot3d
