#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "sot3d/io/json_util.hpp"
#include "sot3d/sequence.hpp"

namespace sot3d {

// One result file per sequence: <results_dir>/<sequence-id>.jsonl, one line per
// predicted frame {"frame": t, "box": [cx,cy,cz,w,h,l,alpha,beta,gamma], "score": s}.

inline json result_row_to_json(const ResultRow& r) {
  return json{{"frame", r.frame},
              {"box",
               {r.box.center.x, r.box.center.y, r.box.center.z, r.box.size.x, r.box.size.y,
                r.box.size.z, r.box.angles.x, r.box.angles.y, r.box.angles.z}},
              {"score", r.score}};
}

inline ResultRow result_row_from_json(const json& j, const std::string& ctx) {
  ResultRow r;
  const std::int64_t frame = jsonu::get_int(j, "frame", ctx);
  if (frame < 1) throw FormatError(ctx + ": frame index must be >= 1");
  r.frame = static_cast<int>(frame);
  const json& arr = jsonu::get_array(j, "box", ctx);
  if (arr.size() != 9) {
    throw FormatError(ctx + ": 'box' must hold exactly 9 numbers, got " +
                      std::to_string(arr.size()));
  }
  double v[9];
  for (int i = 0; i < 9; ++i) {
    if (!arr[i].is_number()) throw FormatError(ctx + ": 'box' must hold numbers");
    v[i] = arr[i].get<double>();
  }
  try {
    r.box = Box9DoF(Vec3{v[0], v[1], v[2]}, Vec3{v[3], v[4], v[5]}, Vec3{v[6], v[7], v[8]});
  } catch (const std::invalid_argument& e) {
    throw FormatError(ctx + ": " + e.what());
  }
  r.score = jsonu::get_double(j, "score", ctx);
  if (!std::isfinite(r.score)) throw FormatError(ctx + ": score must be finite");
  return r;
}

inline void write_results(const std::filesystem::path& path, const SequenceResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const ResultRow& r : result.rows) out << result_row_to_json(r).dump() << "\n";
  if (!out) throw FormatError("short write on " + path.string());
}

inline SequenceResult read_results(const std::filesystem::path& path) {
  SequenceResult result;
  result.id = path.stem().string();
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    result.rows.push_back(result_row_from_json(jsonu::parse_line(line, ctx), ctx));
  }
  return result;
}

}  // namespace sot3d
