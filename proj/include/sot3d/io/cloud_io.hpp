#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sot3d/errors.hpp"
#include "sot3d/geom/vec3.hpp"

namespace sot3d {

static_assert(std::endian::native == std::endian::little,
              "cloud io assumes a little-endian host");

// Frame clouds are raw little-endian float32 xyz triples with no header.
inline PointSet read_frame_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open cloud file: " + path.string());
  const std::streamoff bytes = in.tellg();
  if (bytes % 12 != 0) {
    throw FormatError("cloud file " + path.string() + ": size " + std::to_string(bytes) +
                      " is not a multiple of 12 bytes");
  }
  in.seekg(0);
  const std::size_t n = static_cast<std::size_t>(bytes) / 12;
  std::vector<float> raw(n * 3);
  if (n > 0 && !in.read(reinterpret_cast<char*>(raw.data()), bytes)) {
    throw FormatError("cloud file " + path.string() + ": short read");
  }
  PointSet points(n);
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = Vec3{raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]};
    if (!finite(points[i])) {
      throw FormatError("cloud file " + path.string() + ": non-finite value at point " +
                        std::to_string(i));
    }
  }
  return points;
}

inline void write_frame_cloud(const std::filesystem::path& path, const PointSet& points) {
  std::vector<float> raw(points.size() * 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    raw[3 * i] = static_cast<float>(points[i].x);
    raw[3 * i + 1] = static_cast<float>(points[i].y);
    raw[3 * i + 2] = static_cast<float>(points[i].z);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write cloud file: " + path.string());
  if (!raw.empty()) out.write(reinterpret_cast<const char*>(raw.data()),
                              static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw FormatError("short write on cloud file: " + path.string());
}

inline std::string frame_file_name(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.bin", frame);
  return buf;
}

}  // namespace sot3d
