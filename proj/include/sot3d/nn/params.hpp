#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sot3d/errors.hpp"
#include "sot3d/io/json_util.hpp"
#include "sot3d/nn/tensor.hpp"
#include "sot3d/rng.hpp"

namespace sot3d::nn {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Named trainable tensors. Initialization draws in registration order from
// one seeded stream; checkpoints serialize in name order.
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  // Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) initialization.
  Tensor& add(const std::string& name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor t(rows, cols, 0.0, true);
    for (double& v : t.mutable_values()) v = rng_.uniform(-bound, bound);
    return insert(name, std::move(t));
  }

  Tensor& add_constant(const std::string& name, std::size_t rows, std::size_t cols, double fill) {
    return insert(name, Tensor(rows, cols, fill, true));
  }

  Tensor& at(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }
  Tensor& operator[](const std::string& name) { return at(name); }

  const std::vector<std::string>& names() const { return order_; }
  std::size_t count() const { return order_.size(); }

  std::uint64_t seed() const { return seed_; }
  const std::string& config_hash() const { return config_hash_; }
  void set_config_hash(std::string h) { config_hash_ = std::move(h); }

  void zero_grad() {
    for (const std::string& n : order_) by_name_.at(n).zero_grad();
  }

  void scale_grads(double s) {
    for (const std::string& n : order_) {
      for (double& g : by_name_.at(n).grad()) g *= s;
    }
  }

  void save(const std::filesystem::path& path) const;
  static Parameters load(const std::filesystem::path& path);

 private:
  Tensor& insert(const std::string& name, Tensor t) {
    auto [it, fresh] = by_name_.emplace(name, std::move(t));
    if (!fresh) throw std::invalid_argument("duplicate parameter name " + name);
    order_.push_back(name);
    return it->second;
  }

  std::vector<std::string> order_;
  std::map<std::string, Tensor> by_name_;
  std::uint64_t seed_ = 0;
  Rng rng_{0};
  std::string config_hash_;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'O', 'T', '3', 'D', 'C', 'P', '1'};

inline void Parameters::save(const std::filesystem::path& path) const {
  json names = json::array();
  json shapes = json::object();
  std::vector<std::string> sorted;
  for (const auto& [name, t] : by_name_) {
    sorted.push_back(name);
    names.push_back(name);
    shapes[name] = {t.rows(), t.cols()};
  }
  const json header{{"format", 1},
                    {"names", names},
                    {"shapes", shapes},
                    {"seed", seed_},
                    {"config_hash", config_hash_}};
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 8);
  const std::uint64_t len = head.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const std::string& name : sorted) {
    const auto& v = by_name_.at(name).values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw FormatError("short write on checkpoint " + path.string());
}

inline Parameters Parameters::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FormatError("checkpoint " + path.string() + ": bad magic");
  }
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), 8)) {
    throw FormatError("checkpoint " + path.string() + ": truncated header length");
  }
  std::string head(len, '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(len))) {
    throw FormatError("checkpoint " + path.string() + ": truncated header");
  }
  const json header = jsonu::parse_line(head, path.string() + " header");
  const std::string ctx = path.string();
  Parameters p;
  p.seed_ = static_cast<std::uint64_t>(jsonu::get_int(header, "seed", ctx));
  p.config_hash_ = jsonu::get_string(header, "config_hash", ctx);
  const json& names = jsonu::get_array(header, "names", ctx);
  const json& shapes = jsonu::get_object(header, "shapes", ctx);
  for (const json& jn : names) {
    if (!jn.is_string()) throw FormatError(ctx + ": parameter names must be strings");
    const std::string name = jn.get<std::string>();
    const json& sh = jsonu::get_array(shapes, name.c_str(), ctx);
    if (sh.size() != 2 || !sh[0].is_number_integer() || !sh[1].is_number_integer()) {
      throw FormatError(ctx + ": bad shape for parameter " + name);
    }
    Tensor t(sh[0].get<std::size_t>(), sh[1].get<std::size_t>(), 0.0, true);
    if (!in.read(reinterpret_cast<char*>(t.mutable_values().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw FormatError(ctx + ": truncated payload for parameter " + name);
    }
    for (double v : t.values()) {
      if (!std::isfinite(v)) throw FormatError(ctx + ": non-finite value in parameter " + name);
    }
    p.insert(name, std::move(t));
  }
  char extra;
  if (in.read(&extra, 1)) throw FormatError(ctx + ": trailing bytes after payload");
  return p;
}

}  // namespace sot3d::nn
