// Command line interface for the sot3d laboratory: dataset generation,
// splitting, training, tracking, evaluation, ablations and report tables.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sot3d/sot3d.hpp"

namespace fs = std::filesystem;
using sot3d::json;

namespace {

struct GenOptions {
  std::string recipe;
  std::string out;
  int jobs = 0;
};

json merged(const json& base, const json& overrides) {
  json out = base;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) out[it.key()] = it.value();
  return out;
}

std::vector<sot3d::synth::ScenarioConfig> expand_recipe(const fs::path& path) {
  const json recipe = sot3d::jsonu::parse_file(path);
  const std::string ctx = path.string();
  const std::uint64_t seed =
      recipe.contains("seed") ? static_cast<std::uint64_t>(sot3d::jsonu::get_int(recipe, "seed", ctx))
                              : 0;
  const json base = recipe.contains("base") ? sot3d::jsonu::get_object(recipe, "base", ctx)
                                            : json::object();
  std::vector<sot3d::synth::ScenarioConfig> scenarios;
  if (recipe.contains("sequences")) {
    const json& seqs = sot3d::jsonu::get_array(recipe, "sequences", ctx);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      json one = merged(base, seqs[i]);
      if (!one.contains("seed")) one["seed"] = seed * 1000003ULL + i;
      scenarios.push_back(sot3d::synth::scenario_from_json(one, ctx + ".sequences"));
    }
  }
  if (recipe.contains("groups")) {
    const json& groups = sot3d::jsonu::get_array(recipe, "groups", ctx);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const json& group = groups[g];
      const std::string gctx = ctx + ".groups[" + std::to_string(g) + "]";
      const std::string category = sot3d::jsonu::get_string(group, "category", gctx);
      const int count = static_cast<int>(sot3d::jsonu::get_int(group, "count", gctx));
      if (count < 1) throw sot3d::FormatError(gctx + ": count must be >= 1");
      const json overrides =
          group.contains("overrides") ? sot3d::jsonu::get_object(group, "overrides", gctx)
                                      : json::object();
      for (int i = 0; i < count; ++i) {
        json one = merged(base, overrides);
        one["category"] = category;
        char id[64];
        std::snprintf(id, sizeof(id), "%s_%04d", category.c_str(), i);
        one["id"] = id;
        if (!one.contains("seed")) {
          one["seed"] = seed * 1000003ULL + (g + 1) * 7919ULL + static_cast<std::uint64_t>(i);
        }
        scenarios.push_back(sot3d::synth::scenario_from_json(one, gctx));
      }
    }
  }
  if (scenarios.empty()) {
    throw sot3d::FormatError(ctx + ": recipe produced no sequences ('sequences' or 'groups')");
  }
  std::map<std::string, int> ids;
  for (const auto& s : scenarios) {
    if (++ids[s.id] > 1) throw sot3d::FormatError(ctx + ": duplicate sequence id '" + s.id + "'");
  }
  return scenarios;
}

int run_gen(const GenOptions& opt) {
  const auto scenarios = expand_recipe(opt.recipe);
  const fs::path out(opt.out);
  fs::create_directories(out);
  sot3d::bench::Stopwatch watch;
  std::vector<double> seconds(scenarios.size(), 0.0);
  sot3d::bench::parallel_for(scenarios.size(), sot3d::bench::resolve_jobs(opt.jobs),
                             [&](std::size_t i) {
                               sot3d::bench::Stopwatch one;
                               const sot3d::Sequence seq =
                                   sot3d::synth::generate_sequence(scenarios[i]);
                               sot3d::write_sequence(out / scenarios[i].id, seq);
                               seconds[i] = one.seconds();
                             });
  sot3d::bench::RunManifest manifest;
  manifest.tool = "gen";
  manifest.seconds = watch.seconds();
  json per = json::object();
  for (std::size_t i = 0; i < scenarios.size(); ++i) per[scenarios[i].id] = seconds[i];
  manifest.details = {{"recipe", opt.recipe}, {"sequences", scenarios.size()}, {"seconds_per_sequence", per}};
  manifest.write(out / "gen_manifest.json");
  std::cout << "generated " << scenarios.size() << " sequences in " << out.string() << "\n";
  return 0;
}

std::vector<std::string> subset_ids(const sot3d::SplitManifest& split, const std::string& subset) {
  if (subset == "train") return split.train;
  if (subset == "test") return split.test;
  if (subset == "all") {
    std::vector<std::string> ids = split.train;
    ids.insert(ids.end(), split.test.begin(), split.test.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }
  throw sot3d::ProtocolError("unknown subset '" + subset + "' (train, test, all)");
}

int run_split(const std::string& data, double fraction, std::uint64_t seed,
              const std::string& out) {
  std::vector<std::pair<std::string, std::string>> id_category;
  for (const auto& [id, dir] : sot3d::bench::index_sequences(data)) {
    const sot3d::SequenceMeta meta =
        sot3d::meta_from_json(sot3d::jsonu::parse_file(dir / "meta.json"), (dir / "meta.json").string());
    id_category.emplace_back(id, meta.category);
  }
  const sot3d::SplitManifest split = sot3d::make_split(id_category, fraction, seed);
  sot3d::write_split(out, split);
  for (const std::string& w : split.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "split: " << split.train.size() << " train, " << split.test.size() << " test -> "
            << out << "\n";
  return 0;
}

sot3d::track::TrackerConfig load_config(const std::string& path) {
  if (path.empty()) return sot3d::track::TrackerConfig{};
  return sot3d::track::config_from_json(sot3d::jsonu::parse_file(path), path);
}

int run_train(const std::string& data, const std::string& split_path, const std::string& config_path,
              std::uint64_t seed, const std::string& out, const std::string& log_path) {
  const sot3d::track::TrackerConfig cfg = load_config(config_path);
  const sot3d::SplitManifest split = sot3d::read_split(split_path);
  const std::vector<sot3d::Sequence> seqs = sot3d::bench::load_sequences(data, split.train);

  sot3d::nn::Parameters params = sot3d::track::create_parameters(cfg, seed);
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::trunc);
    if (!log) throw sot3d::FormatError("cannot write " + log_path);
  }
  sot3d::bench::Stopwatch watch;
  const sot3d::track::TrainResult result =
      sot3d::track::train_tracker(seqs, cfg, params, seed, log_path.empty() ? nullptr : &log);
  for (const auto& e : result.log) {
    std::cout << "epoch " << e.epoch << "  loss " << e.mean.total << "  (" << e.tuples
              << " tuples, " << e.seconds << "s)\n";
  }
  params.save(out);
  sot3d::jsonu::write_file(out + ".json", sot3d::track::config_to_json(cfg));
  std::cout << "trained " << result.log.size() << " epochs in " << watch.seconds() << "s -> " << out
            << "\n";
  return 0;
}

int run_track(const std::string& data, const std::string& split_path, const std::string& subset,
              const std::string& tracker, const std::string& model_path,
              const std::string& config_path, const std::string& out_dir, int jobs) {
  const sot3d::SplitManifest split = sot3d::read_split(split_path);
  const std::vector<std::string> ids = subset_ids(split, subset);
  const auto index = sot3d::bench::index_sequences(data);
  for (const std::string& id : ids) {
    if (!index.count(id)) throw sot3d::ProtocolError("split references unknown sequence '" + id + "'");
  }

  sot3d::track::TrackerConfig cfg;
  sot3d::nn::Parameters params;
  if (tracker == "prot3d") {
    if (model_path.empty()) throw sot3d::ProtocolError("tracker prot3d requires --model");
    params = sot3d::nn::Parameters::load(model_path);
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else {
      const fs::path sidecar = model_path + ".json";
      if (!fs::exists(sidecar)) {
        throw sot3d::ProtocolError("no config given and no sidecar " + sidecar.string());
      }
      cfg = sot3d::track::config_from_json(sot3d::jsonu::parse_file(sidecar), sidecar.string());
    }
    if (sot3d::track::config_hash(cfg) != params.config_hash()) {
      throw sot3d::ProtocolError("config hash does not match the checkpoint");
    }
  } else if (tracker != "static" && tracker != "centroid") {
    throw sot3d::ProtocolError("unknown tracker '" + tracker + "' (prot3d, static, centroid)");
  }

  fs::create_directories(out_dir);
  sot3d::bench::Stopwatch watch;
  std::vector<double> seconds(ids.size(), 0.0);
  sot3d::bench::parallel_for(
      ids.size(), sot3d::bench::resolve_jobs(jobs), [&](std::size_t i) {
        sot3d::bench::Stopwatch one;
        const sot3d::Sequence seq = sot3d::read_sequence(index.at(ids[i]));
        if (!seq.frames.front().box) {
          throw sot3d::ProtocolError("sequence " + ids[i] + ": first frame has no box");
        }
        const sot3d::Box9DoF first = *seq.frames.front().box;
        sot3d::SequenceResult result;
        result.id = ids[i];
        if (tracker == "static") {
          result.rows = sot3d::bench::baseline_static(seq, first);
        } else if (tracker == "centroid") {
          result.rows = sot3d::bench::baseline_centroid(seq, first, cfg.region_scale);
        } else {
          result.rows = sot3d::track::track_sequence(seq, first, cfg, params);
        }
        sot3d::write_results(fs::path(out_dir) / (ids[i] + ".jsonl"), result);
        seconds[i] = one.seconds();
      });

  sot3d::bench::RunManifest manifest;
  manifest.tool = "track";
  manifest.seconds = watch.seconds();
  json per = json::object();
  for (std::size_t i = 0; i < ids.size(); ++i) per[ids[i]] = seconds[i];
  manifest.details = {{"tracker", tracker}, {"sequences", ids.size()}, {"seconds_per_sequence", per}};
  manifest.write(fs::path(out_dir) / "track_manifest.json");
  std::cout << tracker << ": tracked " << ids.size() << " sequences -> " << out_dir << "\n";
  return 0;
}

int run_eval(const std::string& data, const std::string& split_path, const std::string& subset,
             const std::string& results_dir, const std::string& out_json,
             const std::string& out_text) {
  const sot3d::SplitManifest split = sot3d::read_split(split_path);
  const std::vector<std::string> ids = subset_ids(split, subset);
  const std::vector<sot3d::Sequence> gts = sot3d::bench::load_sequences(data, ids);
  const sot3d::MetricsReport report = sot3d::bench::evaluate_run(results_dir, gts);
  if (!out_json.empty()) sot3d::jsonu::write_file(out_json, sot3d::report_to_json(report));
  const std::string text = sot3d::report_to_text(report);
  if (!out_text.empty()) {
    std::ofstream f(out_text, std::ios::trunc);
    f << text;
  }
  std::cout << text;
  return 0;
}

int run_ablate(const std::string& data, const std::string& split_path,
               const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
               const std::string& axis, int jobs) {
  const sot3d::track::TrackerConfig base = load_config(config_path);
  const sot3d::SplitManifest split = sot3d::read_split(split_path);
  const std::vector<sot3d::Sequence> train_seqs = sot3d::bench::load_sequences(data, split.train);
  const std::vector<sot3d::Sequence> test_seqs = sot3d::bench::load_sequences(data, split.test);
  const auto index = sot3d::bench::index_sequences(data);

  struct Arm {
    std::string axis;
    int value;
    sot3d::track::TrackerConfig cfg;
  };
  std::vector<Arm> arms;
  if (axis == "stages" || axis == "both") {
    for (int n : {1, 2, 3}) {
      Arm a{"stages", n, base};
      a.cfg.stages = n;
      arms.push_back(a);
    }
  }
  if (axis == "memory" || axis == "both") {
    for (int k : {2, 3, 4}) {
      Arm a{"memory", k, base};
      a.cfg.memory_size = k;
      arms.push_back(a);
    }
  }
  if (arms.empty()) throw sot3d::ProtocolError("unknown ablation axis '" + axis + "' (stages, memory, both)");

  fs::create_directories(out_dir);
  std::vector<sot3d::bench::AblationRow> rows;
  for (const Arm& arm : arms) {
    const std::string label = arm.axis + "_" + std::to_string(arm.value);
    std::cout << "ablation arm " << label << ": training\n";
    sot3d::nn::Parameters params = sot3d::track::create_parameters(arm.cfg, seed);
    sot3d::track::train_tracker(train_seqs, arm.cfg, params, seed, nullptr);

    const fs::path results = fs::path(out_dir) / ("results_" + label);
    fs::create_directories(results);
    sot3d::bench::parallel_for(
        test_seqs.size(), sot3d::bench::resolve_jobs(jobs), [&](std::size_t i) {
          const sot3d::Sequence& seq = test_seqs[i];
          sot3d::SequenceResult result;
          result.id = seq.meta.id;
          result.rows = sot3d::track::track_sequence(seq, *seq.frames.front().box, arm.cfg, params);
          sot3d::write_results(results / (seq.meta.id + ".jsonl"), result);
        });
    const sot3d::MetricsReport report = sot3d::bench::evaluate_run(results, test_seqs);
    rows.push_back(sot3d::bench::AblationRow{arm.axis, arm.value, report.mao, report.msr50,
                                             report.msr75});
  }
  sot3d::jsonu::write_file(fs::path(out_dir) / "ablation.json",
                           sot3d::bench::ablation_to_json(rows));
  const std::string text = sot3d::bench::ablation_to_text(rows);
  std::ofstream f(fs::path(out_dir) / "ablation.txt", std::ios::trunc);
  f << text;
  std::cout << text;
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_json,
               const std::string& out_text) {
  std::vector<sot3d::bench::ComparisonRow> rows;
  for (const std::string& spec : inputs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw sot3d::ProtocolError("report inputs must look like label=report.json");
    }
    const std::string label = spec.substr(0, eq);
    const std::string path = spec.substr(eq + 1);
    const json j = sot3d::jsonu::parse_file(path);
    rows.push_back(sot3d::bench::ComparisonRow{label, sot3d::jsonu::get_double(j, "mAO", path),
                                               sot3d::jsonu::get_double(j, "mSR50", path),
                                               sot3d::jsonu::get_double(j, "mSR75", path)});
  }
  if (!out_json.empty()) {
    sot3d::jsonu::write_file(out_json, sot3d::bench::comparison_to_json(rows));
  }
  const std::string text = sot3d::bench::comparison_to_text(rows);
  if (!out_text.empty()) {
    std::ofstream f(out_text, std::ios::trunc);
    f << text;
  }
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sot3d: a desk-scale laboratory for 9DoF point-cloud single object tracking"};
  app.require_subcommand(1);

  GenOptions gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset from a recipe");
  cmd_gen->add_option("--recipe", gen.recipe, "recipe json")->required();
  cmd_gen->add_option("--out", gen.out, "output dataset directory")->required();
  cmd_gen->add_option("--jobs", gen.jobs, "worker threads (default SOT3D_JOBS or 1)");

  std::string sp_data, sp_out;
  double sp_fraction = 0.7;
  std::uint64_t sp_seed = 0;
  CLI::App* cmd_split = app.add_subcommand("split", "write a stratified train/test split");
  cmd_split->add_option("--data", sp_data, "dataset directory")->required();
  cmd_split->add_option("--fraction", sp_fraction, "train fraction (default 0.7)");
  cmd_split->add_option("--seed", sp_seed, "shuffle seed");
  cmd_split->add_option("--out", sp_out, "output split json")->required();

  std::string tr_data, tr_split, tr_config, tr_out, tr_log;
  std::uint64_t tr_seed = 0;
  CLI::App* cmd_train = app.add_subcommand("train", "train the tracker on the train split");
  cmd_train->add_option("--data", tr_data, "dataset directory")->required();
  cmd_train->add_option("--split", tr_split, "split json")->required();
  cmd_train->add_option("--config", tr_config, "tracker config json (defaults when omitted)");
  cmd_train->add_option("--seed", tr_seed, "training seed");
  cmd_train->add_option("--out", tr_out, "output checkpoint path")->required();
  cmd_train->add_option("--log", tr_log, "per-epoch jsonl log path");

  std::string tk_data, tk_split, tk_subset = "test", tk_tracker = "prot3d", tk_model, tk_config,
              tk_out;
  int tk_jobs = 0;
  CLI::App* cmd_track = app.add_subcommand("track", "run a tracker over a split subset");
  cmd_track->add_option("--data", tk_data, "dataset directory")->required();
  cmd_track->add_option("--split", tk_split, "split json")->required();
  cmd_track->add_option("--subset", tk_subset, "train, test or all (default test)");
  cmd_track->add_option("--tracker", tk_tracker, "prot3d, static or centroid (default prot3d)");
  cmd_track->add_option("--model", tk_model, "checkpoint path (prot3d)");
  cmd_track->add_option("--config", tk_config, "tracker config json (defaults to checkpoint sidecar)");
  cmd_track->add_option("--out", tk_out, "output results directory")->required();
  cmd_track->add_option("--jobs", tk_jobs, "worker threads (default SOT3D_JOBS or 1)");

  std::string ev_data, ev_split, ev_subset = "test", ev_results, ev_json, ev_text;
  CLI::App* cmd_eval = app.add_subcommand("eval", "score a results directory against ground truth");
  cmd_eval->add_option("--data", ev_data, "dataset directory")->required();
  cmd_eval->add_option("--split", ev_split, "split json")->required();
  cmd_eval->add_option("--subset", ev_subset, "train, test or all (default test)");
  cmd_eval->add_option("--results", ev_results, "results directory")->required();
  cmd_eval->add_option("--out", ev_json, "output report json");
  cmd_eval->add_option("--text", ev_text, "output report text");

  std::string ab_data, ab_split, ab_config, ab_out, ab_axis = "both";
  std::uint64_t ab_seed = 0;
  int ab_jobs = 0;
  CLI::App* cmd_ablate = app.add_subcommand("ablate", "retrain and score ablation arms");
  cmd_ablate->add_option("--data", ab_data, "dataset directory")->required();
  cmd_ablate->add_option("--split", ab_split, "split json")->required();
  cmd_ablate->add_option("--config", ab_config, "base tracker config json");
  cmd_ablate->add_option("--seed", ab_seed, "training seed");
  cmd_ablate->add_option("--out", ab_out, "output directory")->required();
  cmd_ablate->add_option("--axis", ab_axis, "stages, memory or both (default both)");
  cmd_ablate->add_option("--jobs", ab_jobs, "worker threads (default SOT3D_JOBS or 1)");

  std::vector<std::string> rp_inputs;
  std::string rp_json, rp_text;
  CLI::App* cmd_report = app.add_subcommand("report", "combine eval reports into one table");
  cmd_report->add_option("--inputs", rp_inputs, "label=report.json entries")->required();
  cmd_report->add_option("--out", rp_json, "output comparison json");
  cmd_report->add_option("--text", rp_text, "output comparison text");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) return run_gen(gen);
    if (cmd_split->parsed()) return run_split(sp_data, sp_fraction, sp_seed, sp_out);
    if (cmd_train->parsed()) return run_train(tr_data, tr_split, tr_config, tr_seed, tr_out, tr_log);
    if (cmd_track->parsed()) {
      return run_track(tk_data, tk_split, tk_subset, tk_tracker, tk_model, tk_config, tk_out,
                       tk_jobs);
    }
    if (cmd_eval->parsed()) return run_eval(ev_data, ev_split, ev_subset, ev_results, ev_json, ev_text);
    if (cmd_ablate->parsed()) {
      return run_ablate(ab_data, ab_split, ab_config, ab_seed, ab_out, ab_axis, ab_jobs);
    }
    if (cmd_report->parsed()) return run_report(rp_inputs, rp_json, rp_text);
  } catch (const sot3d::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const sot3d::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
