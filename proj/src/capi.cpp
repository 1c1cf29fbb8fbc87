#include "declineforge.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "declineforge/error.hpp"
#include "declineforge/pipeline/stages.hpp"
#include "declineforge/trajectory.hpp"
#include "declineforge/volume.hpp"

namespace {

thread_local std::string g_last_error;

df_status to_status(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const df::ConfigError*>(&e)) return DF_CONFIG;
  if (dynamic_cast<const df::DependencyError*>(&e)) return DF_DEPENDENCY;
  if (dynamic_cast<const df::DivergedError*>(&e)) return DF_DIVERGED;
  return DF_ERROR;
}

template <typename F>
df_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return DF_OK;
  } catch (const std::exception& e) {
    return to_status(e);
  } catch (...) {
    g_last_error = "unknown error";
    return DF_ERROR;
  }
}

df_status require(bool ok, const char* msg) {
  if (ok) return DF_OK;
  g_last_error = msg;
  return DF_ERROR;
}

df::PipelineConfig load_config(const char* config_path,
                               const char* workspace_override,
                               long long seed_override) {
  df::PipelineConfig cfg = df::load_pipeline_config(config_path);
  if (workspace_override && *workspace_override)
    cfg.workspace = workspace_override;
  if (seed_override >= 0)
    cfg.cohort.seed = static_cast<uint64_t>(seed_override);
  return cfg;
}

}  // namespace

struct df_volume {
  df::Volume v;
};

extern "C" {

const char* df_last_error(void) { return g_last_error.c_str(); }

df_status df_run_stage(const char* config_path, const char* stage, int force,
                       const char* workspace_override,
                       long long seed_override) {
  if (df_status s = require(config_path && stage, "null argument")) return s;
  return guarded([&] {
    const df::PipelineConfig cfg =
        load_config(config_path, workspace_override, seed_override);
    df::run_stage(cfg, stage, force != 0);
  });
}

df_status df_report(const char* config_path, const char* workspace_override,
                    char** out) {
  if (df_status s = require(config_path && out, "null argument")) return s;
  return guarded([&] {
    const df::PipelineConfig cfg =
        load_config(config_path, workspace_override, -1);
    const std::string text = df::render_report(cfg);
    *out = static_cast<char*>(std::malloc(text.size() + 1));
    if (!*out) throw std::bad_alloc();
    std::memcpy(*out, text.c_str(), text.size() + 1);
  });
}

void df_string_free(char* s) { std::free(s); }

df_status df_volume_load(const char* path, df_volume** out) {
  if (df_status s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new df_volume{df::load_volume(path)}; });
}

df_status df_volume_save(const df_volume* v, const char* path) {
  if (df_status s = require(v && path, "null argument")) return s;
  return guarded([&] { df::save_volume(v->v, path); });
}

df_status df_volume_normalize(const df_volume* v, df_volume** out) {
  if (df_status s = require(v && out, "null argument")) return s;
  return guarded([&] { *out = new df_volume{df::normalize_intensity(v->v)}; });
}

df_status df_volume_dims(const df_volume* v, int dims[3]) {
  if (df_status s = require(v && dims, "null argument")) return s;
  dims[0] = v->v.dims[0];
  dims[1] = v->v.dims[1];
  dims[2] = v->v.dims[2];
  return DF_OK;
}

df_status df_volume_data(const df_volume* v, const float** data, size_t* n) {
  if (df_status s = require(v && data && n, "null argument")) return s;
  *data = v->v.data.data();
  *n = v->v.data.size();
  return DF_OK;
}

void df_volume_free(df_volume* v) { delete v; }

df_status df_dtw_distance(const double* a, int na, const double* b, int nb,
                          int cost, int band_radius, double* out) {
  if (df_status s = require(a && b && out, "null argument")) return s;
  return guarded([&] {
    df::DtwConfig cfg;
    cfg.cost = cost == 1 ? df::DtwCost::Absolute : df::DtwCost::Squared;
    if (band_radius >= 0) cfg.band_radius = band_radius;
    *out = df::dtw_distance(std::vector<double>(a, a + na),
                            std::vector<double>(b, b + nb), cfg);
  });
}

}  // extern "C"
