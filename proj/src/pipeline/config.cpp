#include "declineforge/pipeline/config.hpp"

#include <fstream>
#include <sstream>

#include "declineforge/error.hpp"
#include "json.hpp"

namespace df {

namespace {

using nlohmann::json;

template <typename T>
void opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void parse_train(const json& j, TrainConfig& t) {
  opt(j, "epochs", t.epochs);
  opt(j, "learning_rate", t.learning_rate);
  opt(j, "batch_size", t.batch_size);
  opt(j, "dropout_rate", t.dropout_rate);
  opt(j, "seed", t.seed);
}

std::string content_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }

  PipelineConfig cfg;
  try {
    opt(j, "workspace", cfg.workspace);
    if (j.contains("cohort")) {
      const auto& c = j.at("cohort");
      opt(c, "n_subjects", cfg.cohort.n_subjects);
      opt(c, "group_proportions", cfg.cohort.group_proportions);
      opt(c, "visit_count_min", cfg.cohort.visit_count_min);
      opt(c, "visit_count_max", cfg.cohort.visit_count_max);
      opt(c, "visit_spacing_months", cfg.cohort.visit_spacing_months);
      opt(c, "visit_jitter_months", cfg.cohort.visit_jitter_months);
      opt(c, "traj_noise_sigma", cfg.cohort.traj_noise_sigma);
      opt(c, "traj_baseline_jitter", cfg.cohort.traj_baseline_jitter);
      opt(c, "tabular_signal", cfg.cohort.tabular_signal);
      opt(c, "tabular_noise_sigma", cfg.cohort.tabular_noise_sigma);
      opt(c, "missing_rate", cfg.cohort.missing_rate);
      opt(c, "volume_dims", cfg.cohort.volume_dims);
      opt(c, "volume_noise_sigma", cfg.cohort.volume_noise_sigma);
      opt(c, "volume_shape_jitter", cfg.cohort.volume_shape_jitter);
      opt(c, "seed", cfg.cohort.seed);
    }
    if (j.contains("augmentation")) {
      const auto& a = j.at("augmentation");
      opt(a, "p_noise", cfg.augment.p_noise);
      opt(a, "noise_sigma_range", cfg.augment.noise_sigma_range);
      opt(a, "p_bias", cfg.augment.p_bias);
      opt(a, "bias_field_order", cfg.augment.bias_field_order);
      opt(a, "bias_coeff_range", cfg.augment.bias_coeff_range);
      opt(a, "p_ghost", cfg.augment.p_ghost);
      opt(a, "ghost_intensity_range", cfg.augment.ghost_intensity_range);
      opt(a, "ghost_count", cfg.augment.ghost_count);
      opt(a, "p_flip", cfg.augment.p_flip);
      opt(a, "flip_axes", cfg.augment.flip_axes);
      opt(a, "p_rigid", cfg.augment.p_rigid);
      opt(a, "max_rotation_deg", cfg.augment.max_rotation_deg);
      opt(a, "max_translation_voxels", cfg.augment.max_translation_voxels);
      opt(a, "p_gamma", cfg.augment.p_gamma);
      opt(a, "gamma_range", cfg.augment.gamma_range);
      opt(a, "seed", cfg.augment.seed);
      opt(a, "copies_per_volume", cfg.copies_per_volume);
    }
    if (j.contains("clustering")) {
      const auto& c = j.at("clustering");
      opt(c, "k", cfg.clustering.k);
      opt(c, "restarts", cfg.clustering.restarts);
      opt(c, "max_iter", cfg.clustering.max_iter);
      opt(c, "k_max", cfg.clustering.k_max);
      if (c.contains("cost")) {
        const std::string cost = c.at("cost").get<std::string>();
        if (cost == "squared")
          cfg.clustering.dtw.cost = DtwCost::Squared;
        else if (cost == "absolute")
          cfg.clustering.dtw.cost = DtwCost::Absolute;
        else
          throw ConfigError("config: unknown DTW cost '" + cost + "'");
      }
      if (c.contains("band_radius") && !c.at("band_radius").is_null())
        cfg.clustering.dtw.band_radius = c.at("band_radius").get<int>();
    }
    if (j.contains("split")) {
      opt(j.at("split"), "ratio", cfg.split.ratio);
      opt(j.at("split"), "seed", cfg.split.seed);
    }
    if (j.contains("pretraining")) {
      const auto& p = j.at("pretraining");
      if (p.contains("vit")) {
        const auto& v = p.at("vit");
        opt(v, "patch_size", cfg.vit.patch_size);
        opt(v, "embed_dim", cfg.vit.embed_dim);
        opt(v, "depth", cfg.vit.depth);
        opt(v, "heads", cfg.vit.heads);
        opt(v, "mlp_ratio", cfg.vit.mlp_ratio);
        opt(v, "dropout_rate", cfg.vit.dropout_rate);
      }
      if (p.contains("train")) parse_train(p.at("train"), cfg.pretrain);
      opt(p, "monitor_count", cfg.monitor_count);
      opt(p, "clean_targets", cfg.clean_targets);
    }
    if (j.contains("reduction")) {
      opt(j.at("reduction"), "variance_target", cfg.reduction.variance_target);
      opt(j.at("reduction"), "max_components", cfg.reduction.max_components);
    }
    if (j.contains("classifiers")) {
      const auto& c = j.at("classifiers");
      if (c.contains("gbt")) {
        const auto& g = c.at("gbt");
        opt(g, "n_rounds", cfg.gbt.n_rounds);
        opt(g, "max_depth", cfg.gbt.max_depth);
        opt(g, "learning_rate", cfg.gbt.learning_rate);
        opt(g, "l2_lambda", cfg.gbt.l2_lambda);
        opt(g, "gamma", cfg.gbt.gamma);
        opt(g, "min_child_hessian", cfg.gbt.min_child_hessian);
        opt(g, "seed", cfg.gbt.seed);
      }
      if (c.contains("fc_head")) parse_train(c.at("fc_head"), cfg.fc_head);
      if (c.contains("cnn")) parse_train(c.at("cnn"), cfg.cnn);
      if (c.contains("tabular_ae"))
        parse_train(c.at("tabular_ae"), cfg.tabular_ae);
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      opt(e, "repetitions", cfg.evaluation.repetitions);
      opt(e, "base_seed", cfg.evaluation.base_seed);
      opt(e, "resplit_per_repetition", cfg.evaluation.resplit_per_repetition);
    }
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }

  // eager validation so a bad config fails before any stage runs
  try {
    cfg.cohort.validate();
    cfg.augment.validate();
    cfg.vit.vol_dims = cfg.cohort.volume_dims;
    cfg.vit.validate();
    cfg.gbt.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.evaluation.repetitions < 1)
    throw ConfigError("config: repetitions must be >= 1");
  if (!(cfg.split.ratio > 0.0 && cfg.split.ratio < 1.0))
    throw ConfigError("config: split ratio must be in (0,1)");
  if (cfg.clustering.k < 1 || cfg.clustering.restarts < 1)
    throw ConfigError("config: clustering k and restarts must be positive");

  cfg.config_hash = content_hash(text);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_pipeline_config(ss.str());
}

}  // namespace df
