#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sot3d/bench/baselines.hpp"
#include "sot3d/bench/harness.hpp"
#include "sot3d/bench/report.hpp"
#include "sot3d/rng.hpp"

using namespace sot3d;
using namespace sot3d::bench;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir() {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("sot3d_bench_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

// All-present sequence with an in-memory cloud of 20 points per frame.
Sequence make_seq(const std::string& id, const std::string& category, int n_frames,
                  std::uint64_t seed) {
  Rng rng(seed);
  Sequence seq;
  seq.meta.id = id;
  seq.meta.category = category;
  seq.meta.num_frames = n_frames;
  for (int t = 1; t <= n_frames; ++t) {
    const Box9DoF box(Vec3{0.25 * (t - 1), 0.0, 0.0}, Vec3{1, 1, 1}, Vec3{0, 0, 0});
    FrameRecord rec;
    rec.frame = t;
    rec.box = box;
    seq.frames.push_back(rec);
    PointSet cloud(20);
    for (Vec3& p : cloud) {
      p = box.center + Vec3{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                            rng.uniform(-0.4, 0.4)};
    }
    seq.clouds.push_back(cloud);
  }
  return seq;
}

}  // namespace

TEST_CASE("baseline_static repeats the first box") {
  const Sequence seq = make_seq("s1", "widget", 4, 1);
  const Box9DoF first = *seq.frames[0].box;
  const std::vector<ResultRow> rows = baseline_static(seq, first);
  REQUIRE(rows.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(rows[static_cast<std::size_t>(i)].frame == i + 2);
    CHECK(rows[static_cast<std::size_t>(i)].box.center == first.center);
    CHECK(rows[static_cast<std::size_t>(i)].box.size == first.size);
    CHECK(rows[static_cast<std::size_t>(i)].score == 1.0);
  }
}

TEST_CASE("baseline_centroid follows the crop centroid") {
  Sequence seq;
  seq.meta.id = "s1";
  seq.meta.category = "widget";
  seq.meta.num_frames = 3;
  const Box9DoF first(Vec3{0, 0, 0}, Vec3{1, 1, 1}, Vec3{0, 0, 0});
  for (int t = 1; t <= 3; ++t) {
    FrameRecord rec;
    rec.frame = t;
    rec.box = first;
    seq.frames.push_back(rec);
  }
  seq.clouds.push_back({Vec3{0, 0, 0}});
  // Frame 2: two points inside the doubled box, one far outside.
  seq.clouds.push_back({Vec3{0.1, 0, 0}, Vec3{0.3, 0, 0}, Vec3{5, 0, 0}});
  // Frame 3: nothing in reach; the box must stay put.
  seq.clouds.push_back({Vec3{50, 0, 0}});

  const std::vector<ResultRow> rows = baseline_centroid(seq, first, 2.0);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].box.center.x == Catch::Approx(0.2).margin(1e-12));
  CHECK(rows[0].box.center.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(rows[0].box.size == first.size);
  CHECK(rows[0].box.angles == first.angles);
  CHECK(rows[1].box.center.x == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("resolve_jobs prefers the flag, then the environment") {
  unsetenv("SOT3D_JOBS");
  CHECK(resolve_jobs(3) == 3);
  CHECK(resolve_jobs(0) == 1);
  CHECK(resolve_jobs(-1) == 1);

  setenv("SOT3D_JOBS", "5", 1);
  CHECK(resolve_jobs(0) == 5);
  CHECK(resolve_jobs(2) == 2);  // the flag wins

  setenv("SOT3D_JOBS", "0", 1);
  CHECK(resolve_jobs(0) == 1);
  setenv("SOT3D_JOBS", "junk", 1);
  CHECK(resolve_jobs(0) == 1);
  unsetenv("SOT3D_JOBS");
}

TEST_CASE("parallel_for covers every index exactly once") {
  for (int jobs : {1, 4}) {
    std::vector<int> hits(257, 0);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  // n = 0 is a no-op.
  CHECK_NOTHROW(parallel_for(0, 4, [](std::size_t) { throw std::runtime_error("never"); }));
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  std::atomic<int> done{0};
  auto boom = [&](std::size_t i) {
    if (i == 37) throw std::runtime_error("boom 37");
    done.fetch_add(1);
  };
  CHECK_THROWS_WITH(parallel_for(100, 4, boom), "boom 37");
  CHECK_THROWS_WITH(parallel_for(100, 1, boom), "boom 37");
}

TEST_CASE("parallel results are independent of the worker count") {
  std::vector<double> seq_out(64), par_out(64);
  auto work = [](std::size_t i) { return std::sqrt(static_cast<double>(i) + 0.5); };
  parallel_for(64, 1, [&](std::size_t i) { seq_out[i] = work(i); });
  parallel_for(64, 8, [&](std::size_t i) { par_out[i] = work(i); });
  CHECK(seq_out == par_out);
}

TEST_CASE("find_sequence_dirs and index_sequences") {
  const fs::path root = make_temp_dir();
  const Sequence s1 = make_seq("alpha", "widget", 3, 2);
  const Sequence s2 = make_seq("beta", "gadget", 3, 3);
  // Directory names deliberately differ from the sequence ids.
  write_sequence(root / "dir_b", s2);
  write_sequence(root / "dir_a", s1);
  fs::create_directories(root / "not_a_sequence");
  std::ofstream(root / "stray.txt") << "ignore me";

  const auto dirs = find_sequence_dirs(root);
  REQUIRE(dirs.size() == 2);
  CHECK(dirs[0].filename() == "dir_a");
  CHECK(dirs[1].filename() == "dir_b");

  const auto index = index_sequences(root);
  REQUIRE(index.size() == 2);
  CHECK(index.at("alpha") == root / "dir_a");
  CHECK(index.at("beta") == root / "dir_b");

  const std::vector<Sequence> loaded = load_sequences(root, {"beta", "alpha"});
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].meta.id == "beta");
  CHECK(loaded[1].meta.id == "alpha");
  CHECK_THROWS_AS(load_sequences(root, {"gamma"}), ProtocolError);

  CHECK_THROWS_AS(find_sequence_dirs(root / "missing"), FormatError);
  CHECK_THROWS_AS(index_sequences(root / "not_a_sequence"), FormatError);

  // A second copy of an existing id is rejected.
  write_sequence(root / "dir_c", s1);
  CHECK_THROWS_AS(index_sequences(root), FormatError);
  fs::remove_all(root);
}

TEST_CASE("evaluate_run scores result files against ground truth") {
  const fs::path dir = make_temp_dir();
  const std::vector<Sequence> gts = {make_seq("alpha", "widget", 3, 4),
                                     make_seq("beta", "widget", 3, 5)};

  for (const Sequence& seq : gts) {
    SequenceResult res;
    res.id = seq.meta.id;
    for (int t = 2; t <= seq.num_frames(); ++t) {
      res.rows.push_back(ResultRow{t, *seq.frame(t).box, 1.0});
    }
    write_results(dir / (seq.meta.id + ".jsonl"), res);
  }

  const MetricsReport report = evaluate_run(dir, gts);
  CHECK(report.mao == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.msr50 == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.msr75 == Catch::Approx(1.0).margin(1e-12));

  fs::remove(dir / "beta.jsonl");
  CHECK_THROWS_AS(evaluate_run(dir, gts), ProtocolError);
  fs::remove_all(dir);
}

TEST_CASE("comparison tables render all rows") {
  const std::vector<ComparisonRow> rows = {{"prot3d", 0.8, 0.9, 0.55},
                                           {"static", 0.25, 0.2, 0.1}};
  const json j = comparison_to_json(rows);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["tracker"] == "prot3d");
  CHECK(j[0]["mAO"] == 0.8);
  CHECK(j[1]["mSR75"] == 0.1);

  const std::string text = comparison_to_text(rows);
  CHECK(text.find("tracker") != std::string::npos);
  CHECK(text.find("prot3d") != std::string::npos);
  CHECK(text.find("0.8000") != std::string::npos);
  CHECK(text.find("0.2500") != std::string::npos);
}

TEST_CASE("ablation tables render axis and value") {
  const std::vector<AblationRow> rows = {{"stages", 1, 0.5, 0.6, 0.3},
                                         {"stages", 2, 0.7, 0.8, 0.5},
                                         {"memory_size", 3, 0.72, 0.81, 0.52}};
  const json j = ablation_to_json(rows);
  REQUIRE(j.size() == 3);
  CHECK(j[1]["axis"] == "stages");
  CHECK(j[1]["value"] == 2);
  CHECK(j[2]["mAO"] == 0.72);

  const std::string text = ablation_to_text(rows);
  CHECK(text.find("axis") != std::string::npos);
  CHECK(text.find("memory_size") != std::string::npos);
  CHECK(text.find("0.7000") != std::string::npos);
}

TEST_CASE("run manifest serializes tool, details and timing") {
  const fs::path dir = make_temp_dir();
  RunManifest m;
  m.tool = "track";
  m.details = json{{"seed", 7}, {"config_hash", "abc"}};
  m.seconds = 1.25;
  m.write(dir / "manifest.json");

  std::ifstream in(dir / "manifest.json");
  const json j = json::parse(in);
  CHECK(j["tool"] == "track");
  CHECK(j["details"]["seed"] == 7);
  CHECK(j["seconds"] == 1.25);

  const Stopwatch sw;
  CHECK(sw.seconds() >= 0.0);
  fs::remove_all(dir);
}
