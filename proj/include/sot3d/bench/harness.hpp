#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sot3d/io/results_io.hpp"
#include "sot3d/io/sequence_io.hpp"
#include "sot3d/io/split.hpp"
#include "sot3d/metrics.hpp"

namespace sot3d::bench {

// Worker-count resolution: explicit flag, else SOT3D_JOBS, else 1.
inline int resolve_jobs(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SOT3D_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on `jobs` threads. Exceptions are rethrown in
// the caller; outputs must be written to per-index slots by the callee.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Sequence directories are the immediate children of the dataset root that
// contain a meta.json.
inline std::vector<std::filesystem::path> find_sequence_dirs(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw FormatError("dataset root is not a directory: " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

inline std::map<std::string, std::filesystem::path> index_sequences(
    const std::filesystem::path& root) {
  std::map<std::string, std::filesystem::path> index;
  for (const auto& dir : find_sequence_dirs(root)) {
    const Sequence seq = read_sequence(dir);
    if (!index.emplace(seq.meta.id, dir).second) {
      throw FormatError("duplicate sequence id '" + seq.meta.id + "' under " + root.string());
    }
  }
  if (index.empty()) throw FormatError("no sequences found under " + root.string());
  return index;
}

inline std::vector<Sequence> load_sequences(const std::filesystem::path& root,
                                            const std::vector<std::string>& ids) {
  const auto index = index_sequences(root);
  std::vector<Sequence> out;
  for (const std::string& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw ProtocolError("split references unknown sequence '" + id + "'");
    }
    out.push_back(read_sequence(it->second));
  }
  return out;
}

// Reads one result file per id from a results directory and scores them.
inline MetricsReport evaluate_run(const std::filesystem::path& results_dir,
                                  const std::vector<Sequence>& gts) {
  std::vector<SequenceResult> results;
  for (const Sequence& seq : gts) {
    const std::filesystem::path path = results_dir / (seq.meta.id + ".jsonl");
    if (!std::filesystem::exists(path)) {
      throw ProtocolError("missing results file " + path.string());
    }
    results.push_back(read_results(path));
  }
  return evaluate_results(results, gts);
}

struct RunManifest {
  std::string tool;
  json details = json::object();
  double seconds = 0.0;

  void write(const std::filesystem::path& path) const {
    jsonu::write_file(path, json{{"tool", tool}, {"details", details}, {"seconds", seconds}});
  }
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace sot3d::bench
