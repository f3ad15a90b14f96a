#pragma once

#include <cstdint>
#include <string>

#include "sot3d/io/json_util.hpp"
#include "sot3d/nn/params.hpp"

namespace sot3d::track {

struct TrackerConfig {
  int stages = 2;           // progressive refinement stages N
  int memory_size = 3;      // past frames kept K
  int spt_layers = 2;       // transformer layers per stage L
  int search_points = 128;  // resampled search-region size P
  int sampled_points = 64;  // votes kept per stage D
  int feature_width = 64;   // channels F
  int knn = 8;
  int voxel_grid = 8;
  int conv1d_width = 1;
  double region_scale = 2.0;
  double proposal_radius = 0.3;
  double lambda_mask = 0.2;
  double lambda_center = 10.0;
  double lambda_proposal = 1.0;
  double lambda_score = 1.0;
  bool per_stage_losses = true;
  bool predict_full_rotation = true;
  double learning_rate = 0.001;
  int batch_size = 9;
  int epochs = 80;
  int tuples_per_epoch = 0;  // 0 keeps every tuple
  double train_jitter = 0.05;

  void validate() const {
    if (stages < 1) throw std::invalid_argument("config: stages must be >= 1");
    if (memory_size < 1) throw std::invalid_argument("config: memory_size must be >= 1");
    if (spt_layers < 1) throw std::invalid_argument("config: spt_layers must be >= 1");
    if (search_points < 2) throw std::invalid_argument("config: search_points must be >= 2");
    if (sampled_points < 2 || sampled_points > search_points) {
      throw std::invalid_argument("config: need 2 <= sampled_points <= search_points");
    }
    if (feature_width < 1) throw std::invalid_argument("config: feature_width must be >= 1");
    if (knn < 1 || knn >= search_points || knn >= sampled_points) {
      throw std::invalid_argument("config: need 1 <= knn < sampled_points");
    }
    if (voxel_grid < 2) throw std::invalid_argument("config: voxel_grid must be >= 2");
    if (conv1d_width < 1 || conv1d_width % 2 == 0) {
      throw std::invalid_argument("config: conv1d_width must be odd");
    }
    if (!(region_scale >= 1.0)) throw std::invalid_argument("config: region_scale must be >= 1");
    if (!(proposal_radius > 0.0)) throw std::invalid_argument("config: proposal_radius must be positive");
    if (lambda_mask < 0.0 || lambda_center < 0.0 || lambda_proposal < 0.0 || lambda_score < 0.0) {
      throw std::invalid_argument("config: loss weights must be >= 0");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (tuples_per_epoch < 0) throw std::invalid_argument("config: tuples_per_epoch must be >= 0");
    if (train_jitter < 0.0) throw std::invalid_argument("config: train_jitter must be >= 0");
  }
};

inline json config_to_json(const TrackerConfig& c) {
  return json{{"stages", c.stages},
              {"memory_size", c.memory_size},
              {"spt_layers", c.spt_layers},
              {"search_points", c.search_points},
              {"sampled_points", c.sampled_points},
              {"feature_width", c.feature_width},
              {"knn", c.knn},
              {"voxel_grid", c.voxel_grid},
              {"conv1d_width", c.conv1d_width},
              {"region_scale", c.region_scale},
              {"proposal_radius", c.proposal_radius},
              {"lambda_mask", c.lambda_mask},
              {"lambda_center", c.lambda_center},
              {"lambda_proposal", c.lambda_proposal},
              {"lambda_score", c.lambda_score},
              {"per_stage_losses", c.per_stage_losses},
              {"predict_full_rotation", c.predict_full_rotation},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"tuples_per_epoch", c.tuples_per_epoch},
              {"train_jitter", c.train_jitter}};
}

inline TrackerConfig config_from_json(const json& j, const std::string& ctx) {
  TrackerConfig c;
  auto opt_int = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = static_cast<int>(jsonu::get_int(j, key, ctx));
  };
  auto opt_num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = jsonu::get_double(j, key, ctx);
  };
  auto opt_bool = [&](const char* key, bool& dst) {
    if (j.contains(key)) dst = jsonu::get_bool(j, key, ctx);
  };
  opt_int("stages", c.stages);
  opt_int("memory_size", c.memory_size);
  opt_int("spt_layers", c.spt_layers);
  opt_int("search_points", c.search_points);
  opt_int("sampled_points", c.sampled_points);
  opt_int("feature_width", c.feature_width);
  opt_int("knn", c.knn);
  opt_int("voxel_grid", c.voxel_grid);
  opt_int("conv1d_width", c.conv1d_width);
  opt_num("region_scale", c.region_scale);
  opt_num("proposal_radius", c.proposal_radius);
  opt_num("lambda_mask", c.lambda_mask);
  opt_num("lambda_center", c.lambda_center);
  opt_num("lambda_proposal", c.lambda_proposal);
  opt_num("lambda_score", c.lambda_score);
  opt_bool("per_stage_losses", c.per_stage_losses);
  opt_bool("predict_full_rotation", c.predict_full_rotation);
  opt_num("learning_rate", c.learning_rate);
  opt_int("batch_size", c.batch_size);
  opt_int("epochs", c.epochs);
  opt_int("tuples_per_epoch", c.tuples_per_epoch);
  opt_num("train_jitter", c.train_jitter);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(ctx + ": " + e.what());
  }
  return c;
}

inline std::string config_hash(const TrackerConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(nn::fnv1a(config_to_json(c).dump())));
  return buf;
}

}  // namespace sot3d::track
