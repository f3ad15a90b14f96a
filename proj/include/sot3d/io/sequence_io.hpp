#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "sot3d/io/cloud_io.hpp"
#include "sot3d/io/json_util.hpp"
#include "sot3d/sequence.hpp"

namespace sot3d {

// On-disk layout of one sequence:
//   <dir>/meta.json
//   <dir>/anno.jsonl       one line per frame, frame indices 1..num_frames
//   <dir>/frames/000001.bin ...

inline json box_to_json(const Box9DoF& b) {
  return json{{"center", {b.center.x, b.center.y, b.center.z}},
              {"size", {b.size.x, b.size.y, b.size.z}},
              {"angles", {b.angles.x, b.angles.y, b.angles.z}}};
}

inline Box9DoF box_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw FormatError(ctx + ": box must be an object");
  Vec3 v[3];
  const char* keys[3] = {"center", "size", "angles"};
  for (int f = 0; f < 3; ++f) {
    const json& arr = jsonu::get_array(j, keys[f], ctx);
    if (arr.size() != 3) {
      throw FormatError(ctx + ": '" + keys[f] + "' must hold exactly 3 numbers");
    }
    for (int c = 0; c < 3; ++c) {
      if (!arr[c].is_number()) throw FormatError(ctx + ": '" + keys[f] + "' must hold numbers");
      v[f][c] = arr[c].get<double>();
    }
  }
  try {
    return Box9DoF(v[0], v[1], v[2]);
  } catch (const std::invalid_argument& e) {
    throw FormatError(ctx + ": " + e.what());
  }
}

inline json meta_to_json(const SequenceMeta& m) {
  json attrs = json::object();
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) attrs[kAttributeNames[i]] = m.attributes[i];
  return json{{"id", m.id},
              {"category", m.category},
              {"attributes", attrs},
              {"symmetry",
               {{"symmetric", m.symmetry.symmetric},
                {"axis", axis_name(m.symmetry.axis)},
                {"k", m.symmetry.k}}},
              {"fps", m.fps},
              {"num_frames", m.num_frames}};
}

inline SequenceMeta meta_from_json(const json& j, const std::string& ctx) {
  SequenceMeta m;
  m.id = jsonu::get_string(j, "id", ctx);
  if (m.id.empty()) throw FormatError(ctx + ": 'id' must be non-empty");
  m.category = jsonu::get_string(j, "category", ctx);
  if (m.category.empty()) throw FormatError(ctx + ": 'category' must be non-empty");
  const json& attrs = jsonu::get_object(j, "attributes", ctx);
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) {
    m.attributes[i] = jsonu::get_bool(attrs, kAttributeNames[i], ctx + ".attributes");
  }
  const json& sym = jsonu::get_object(j, "symmetry", ctx);
  m.symmetry.symmetric = jsonu::get_bool(sym, "symmetric", ctx + ".symmetry");
  const std::string axis = jsonu::get_string(sym, "axis", ctx + ".symmetry");
  if (axis == "x") m.symmetry.axis = Axis::X;
  else if (axis == "y") m.symmetry.axis = Axis::Y;
  else if (axis == "z") m.symmetry.axis = Axis::Z;
  else throw FormatError(ctx + ".symmetry: axis must be one of x, y, z");
  const std::int64_t k = jsonu::get_int(sym, "k", ctx + ".symmetry");
  if (k < 1) throw FormatError(ctx + ".symmetry: k must be >= 1");
  m.symmetry.k = static_cast<int>(k);
  m.fps = jsonu::get_double(j, "fps", ctx);
  if (!(std::isfinite(m.fps) && m.fps > 0.0)) throw FormatError(ctx + ": fps must be positive");
  const std::int64_t nf = jsonu::get_int(j, "num_frames", ctx);
  if (nf < 2) throw FormatError(ctx + ": num_frames must be >= 2");
  m.num_frames = static_cast<int>(nf);
  return m;
}

inline json frame_to_json(const FrameRecord& f) {
  json j{{"frame", f.frame}, {"present", f.present}, {"absence", absence_name(f.absence)}};
  j["box"] = f.box ? box_to_json(*f.box) : json(nullptr);
  return j;
}

inline FrameRecord frame_from_json(const json& j, const std::string& ctx) {
  FrameRecord f;
  const std::int64_t idx = jsonu::get_int(j, "frame", ctx);
  if (idx < 1) throw FormatError(ctx + ": frame index must be >= 1");
  f.frame = static_cast<int>(idx);
  f.present = jsonu::get_bool(j, "present", ctx);
  const std::string absence = jsonu::get_string(j, "absence", ctx);
  if (absence == "none") f.absence = AbsenceReason::None;
  else if (absence == "full_occlusion") f.absence = AbsenceReason::FullOcclusion;
  else if (absence == "out_of_view") f.absence = AbsenceReason::OutOfView;
  else throw FormatError(ctx + ": unknown absence reason '" + absence + "'");
  const json& box = jsonu::field(j, "box", ctx);
  if (f.present) {
    if (f.absence != AbsenceReason::None) {
      throw FormatError(ctx + ": present frame must have absence 'none'");
    }
    if (box.is_null()) throw FormatError(ctx + ": present frame must carry a box");
    f.box = box_from_json(box, ctx);
  } else {
    if (f.absence == AbsenceReason::None) {
      throw FormatError(ctx + ": absent frame must name an absence reason");
    }
    if (!box.is_null()) throw FormatError(ctx + ": absent frame must not carry a box");
  }
  return f;
}

inline void write_sequence(const std::filesystem::path& dir, const Sequence& seq) {
  if (seq.clouds.size() != seq.frames.size()) {
    throw std::invalid_argument("write_sequence: sequence has no in-memory clouds");
  }
  if (static_cast<int>(seq.frames.size()) != seq.meta.num_frames) {
    throw std::invalid_argument("write_sequence: frame count disagrees with meta.num_frames");
  }
  std::filesystem::create_directories(dir / "frames");
  jsonu::write_file(dir / "meta.json", meta_to_json(seq.meta));
  std::ofstream anno(dir / "anno.jsonl", std::ios::trunc);
  if (!anno) throw FormatError("cannot write " + (dir / "anno.jsonl").string());
  for (const FrameRecord& f : seq.frames) anno << frame_to_json(f).dump() << "\n";
  if (!anno) throw FormatError("short write on " + (dir / "anno.jsonl").string());
  for (std::size_t i = 0; i < seq.clouds.size(); ++i) {
    write_frame_cloud(dir / "frames" / frame_file_name(static_cast<int>(i) + 1), seq.clouds[i]);
  }
}

inline Sequence read_sequence(const std::filesystem::path& dir) {
  Sequence seq;
  seq.dir = dir;
  seq.meta = meta_from_json(jsonu::parse_file(dir / "meta.json"), (dir / "meta.json").string());
  const std::filesystem::path anno_path = dir / "anno.jsonl";
  std::ifstream anno(anno_path);
  if (!anno) throw FormatError("cannot open " + anno_path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(anno, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = anno_path.string() + ":" + std::to_string(line_no);
    FrameRecord f = frame_from_json(jsonu::parse_line(line, ctx), ctx);
    const int expect = static_cast<int>(seq.frames.size()) + 1;
    if (f.frame != expect) {
      throw FormatError(ctx + ": expected frame " + std::to_string(expect) + ", got " +
                        std::to_string(f.frame));
    }
    seq.frames.push_back(std::move(f));
  }
  if (static_cast<int>(seq.frames.size()) != seq.meta.num_frames) {
    throw FormatError(anno_path.string() + ": " + std::to_string(seq.frames.size()) +
                      " annotation lines but meta declares " + std::to_string(seq.meta.num_frames));
  }
  if (seq.frames.empty() || !seq.frames.front().present) {
    throw FormatError(anno_path.string() + ": first frame must be present");
  }
  for (const FrameRecord& f : seq.frames) {
    const std::filesystem::path p = dir / "frames" / frame_file_name(f.frame);
    if (!std::filesystem::exists(p)) throw FormatError("missing cloud file: " + p.string());
  }
  return seq;
}

inline PointSet Sequence::cloud(int t) const {
  if (t < 1 || t > num_frames()) {
    throw std::out_of_range("Sequence::cloud: frame index out of range");
  }
  if (!clouds.empty()) return clouds[static_cast<std::size_t>(t - 1)];
  return read_frame_cloud(dir / "frames" / frame_file_name(t));
}

// Collects every violation instead of stopping at the first. An empty return
// guarantees read_sequence(dir) succeeds.
inline std::vector<std::string> validate_sequence(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  SequenceMeta meta;
  bool have_meta = false;
  try {
    meta = meta_from_json(jsonu::parse_file(dir / "meta.json"), (dir / "meta.json").string());
    have_meta = true;
  } catch (const FormatError& e) {
    out.push_back(e.what());
  }

  std::vector<FrameRecord> frames;
  const std::filesystem::path anno_path = dir / "anno.jsonl";
  std::ifstream anno(anno_path);
  if (!anno) {
    out.push_back("cannot open " + anno_path.string());
  } else {
    std::string line;
    int line_no = 0;
    int expect = 1;
    while (std::getline(anno, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string ctx = anno_path.string() + ":" + std::to_string(line_no);
      try {
        FrameRecord f = frame_from_json(jsonu::parse_line(line, ctx), ctx);
        if (f.frame != expect) {
          out.push_back(ctx + ": expected frame " + std::to_string(expect) + ", got " +
                        std::to_string(f.frame));
          expect = f.frame;
        }
        ++expect;
        frames.push_back(std::move(f));
      } catch (const FormatError& e) {
        out.push_back(e.what());
        ++expect;
      }
    }
    if (have_meta && static_cast<int>(frames.size()) != meta.num_frames) {
      out.push_back(anno_path.string() + ": " + std::to_string(frames.size()) +
                    " annotation lines but meta declares " + std::to_string(meta.num_frames));
    }
    if (!frames.empty() && !frames.front().present) {
      out.push_back(anno_path.string() + ": first frame must be present");
    }
  }

  const int check_frames = have_meta ? meta.num_frames : static_cast<int>(frames.size());
  for (int t = 1; t <= check_frames; ++t) {
    const std::filesystem::path p = dir / "frames" / frame_file_name(t);
    if (!std::filesystem::exists(p)) {
      out.push_back("missing cloud file: " + p.string());
      continue;
    }
    try {
      read_frame_cloud(p);
    } catch (const FormatError& e) {
      out.push_back(e.what());
    }
  }
  return out;
}

}  // namespace sot3d
