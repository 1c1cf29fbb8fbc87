#pragma once

#include <cstdint>
#include <string>

#include "declineforge/augment.hpp"
#include "declineforge/cohort.hpp"
#include "declineforge/gbt.hpp"
#include "declineforge/models/vit.hpp"
#include "declineforge/trajectory.hpp"

namespace df {

struct ClusteringConfig {
  int k = 4;
  int restarts = 10;
  int max_iter = 50;
  int k_max = 8;
  DtwConfig dtw;
};

struct SplitConfig {
  double ratio = 0.2;
  uint64_t seed = 1;
};

struct ReductionConfig {
  double variance_target = 0.95;
  int max_components = 15;
};

struct EvaluationConfig {
  int repetitions = 5;
  uint64_t base_seed = 100;
  bool resplit_per_repetition = false;
};

struct PipelineConfig {
  std::string workspace = "workspace";
  CohortSpec cohort;
  AugmentConfig augment;
  int copies_per_volume = 2;
  ClusteringConfig clustering;
  SplitConfig split;
  ViTConfig vit;
  TrainConfig pretrain{200, 1e-4, 4, 0.0, 0};
  int monitor_count = 8;
  bool clean_targets = true;  // augmented copies reconstruct their originals
  ReductionConfig reduction;
  GbtParams gbt;
  TrainConfig fc_head{200, 1e-4, 0, 0.3, 0};
  TrainConfig cnn{20, 1e-4, 4, 0.0, 0};
  TrainConfig tabular_ae{300, 1e-2, 0, 0.0, 0};
  EvaluationConfig evaluation;

  std::string config_hash;  // over the raw config file bytes
};

// Throws ConfigError on unreadable file, bad JSON, or invalid values.
PipelineConfig load_pipeline_config(const std::string& path);
PipelineConfig parse_pipeline_config(const std::string& json_text);

}  // namespace df
