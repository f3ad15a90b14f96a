#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sot3d/io/json_util.hpp"

namespace sot3d {

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<std::string> warnings;
};

// Deterministic category-stratified split. Per category the train count is
// round(fraction * n) clamped to [1, n-1]; single-sequence categories go to
// train with a warning.
inline SplitManifest make_split(const std::vector<std::pair<std::string, std::string>>& id_category,
                                double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("make_split: train fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<std::string>> by_cat;
  std::set<std::string> seen;
  for (const auto& [id, cat] : id_category) {
    if (!seen.insert(id).second) throw std::invalid_argument("make_split: duplicate id " + id);
    by_cat[cat].push_back(id);
  }
  if (by_cat.empty()) throw std::invalid_argument("make_split: no sequences");

  std::mt19937_64 rng(seed);
  SplitManifest out;
  for (auto& [cat, ids] : by_cat) {
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = ids.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(ids[i - 1], ids[j]);
    }
    const std::size_t n = ids.size();
    std::size_t k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n == 1) {
      k = 1;
      out.warnings.push_back("category '" + cat + "' has a single sequence; assigned to train");
    } else {
      k = std::clamp<std::size_t>(k, 1, n - 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      (i < k ? out.train : out.test).push_back(ids[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline void write_split(const std::filesystem::path& path, const SplitManifest& split) {
  json j{{"train", split.train}, {"test", split.test}};
  if (!split.warnings.empty()) j["warnings"] = split.warnings;
  jsonu::write_file(path, j);
}

inline SplitManifest read_split(const std::filesystem::path& path) {
  const json j = jsonu::parse_file(path);
  const std::string ctx = path.string();
  SplitManifest split;
  for (const char* key : {"train", "test"}) {
    const json& arr = jsonu::get_array(j, key, ctx);
    auto& dst = std::string(key) == "train" ? split.train : split.test;
    for (const json& v : arr) {
      if (!v.is_string()) throw FormatError(ctx + ": '" + key + "' must hold strings");
      dst.push_back(v.get<std::string>());
    }
  }
  std::set<std::string> seen;
  for (const auto& id : split.train) {
    if (!seen.insert(id).second) throw FormatError(ctx + ": duplicate id " + id);
  }
  for (const auto& id : split.test) {
    if (!seen.insert(id).second) {
      throw FormatError(ctx + ": id " + id + " appears in both train and test");
    }
  }
  return split;
}

}  // namespace sot3d
