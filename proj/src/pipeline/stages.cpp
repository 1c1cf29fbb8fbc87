#include "declineforge/pipeline/stages.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "declineforge/augment.hpp"
#include "declineforge/error.hpp"
#include "declineforge/gbt.hpp"
#include "declineforge/metrics.hpp"
#include "declineforge/models/cnn.hpp"
#include "declineforge/models/tabular_ae.hpp"
#include "declineforge/models/vit.hpp"
#include "declineforge/pipeline/csvio.hpp"
#include "declineforge/pipeline/svg.hpp"
#include "declineforge/trajectory.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace df {

namespace {

const char* kStageOrder[] = {"synth",    "cluster", "split",
                             "pretrain", "embed",   "evaluate"};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Manifest {
  fs::path path;
  nlohmann::json j;

  static Manifest open(const fs::path& workspace, const std::string& hash,
                       bool force) {
    Manifest m;
    m.path = workspace / "manifest.json";
    if (fs::exists(m.path)) {
      std::ifstream f(m.path);
      try {
        m.j = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest: '" + m.path.string() +
                         "' is corrupted: " + e.what());
      }
      if (m.j.value("format", "") != "declineforge-manifest" ||
          m.j.value("version", 0) != 1)
        throw ParseError("manifest: '" + m.path.string() +
                         "' has an unrecognized format");
      if (m.j.value("config_hash", "") != hash) {
        if (!force)
          throw ConfigError(
              "workspace was produced with a different configuration; use a "
              "fresh workspace or pass --force to reset it");
        m.j["config_hash"] = hash;
        m.j["stages"] = nlohmann::json::object();
      }
    } else {
      m.j = {{"format", "declineforge-manifest"},
             {"version", 1},
             {"config_hash", hash},
             {"stages", nlohmann::json::object()}};
    }
    return m;
  }

  bool done(const std::string& stage) const {
    const auto& stages = j.at("stages");
    return stages.contains(stage) && stages.at(stage).value("done", false);
  }

  void mark_done(const std::string& stage, uint64_t seed,
                 std::vector<std::string> outputs) {
    j["stages"][stage] = {
        {"done", true}, {"seed", seed}, {"outputs", std::move(outputs)}};
    save();
  }

  void save() const {
    std::ofstream f(path);
    if (!f) throw IoError("manifest: cannot write '" + path.string() + "'");
    f << j.dump(2) << "\n";
  }
};

void require_done(const Manifest& m, const std::string& stage,
                  const std::string& needed) {
  if (!m.done(needed))
    throw DependencyError("stage '" + stage + "' requires completed stage '" +
                          needed + "'; run it first");
}

// Returns false when the stage should be skipped (run_all resume). Outside
// run_all a completed stage refuses to overwrite itself without force.
bool begin_stage(const Manifest& m, const std::string& stage, bool force,
                 bool skip_done) {
  if (!m.done(stage) || force) return true;
  if (skip_done) return false;
  throw Error("stage '" + stage +
              "' outputs already exist in the workspace; pass --force to "
              "overwrite them");
}

std::string vol_path(const fs::path& ws, const std::string& id) {
  return (ws / "synth" / "volumes" / (id + ".nii")).string();
}

std::vector<std::string> subject_ids(const std::vector<TabularRecord>& recs) {
  std::vector<std::string> ids;
  ids.reserve(recs.size());
  for (const auto& r : recs) ids.push_back(r.subject_id);
  return ids;
}

// ---- synth -----------------------------------------------------------

void stage_synth(const PipelineConfig& cfg, const fs::path& ws, Manifest& m) {
  const auto labeled = gen_trajectories(cfg.cohort);
  std::vector<Trajectory> trajectories;
  std::vector<int> groups;
  for (const auto& [t, g] : labeled) {
    trajectories.push_back(t);
    groups.push_back(g);
  }
  const auto tabular = gen_tabular(groups, cfg.cohort);
  const auto volumes = gen_volumes(groups, cfg.cohort);

  fs::create_directories(ws / "synth" / "volumes");
  write_trajectories_csv((ws / "synth" / "trajectories.csv").string(),
                         trajectories);
  write_tabular_csv((ws / "synth" / "tabular.csv").string(), tabular);

  std::vector<std::vector<std::string>> truth_rows;
  for (size_t i = 0; i < groups.size(); ++i)
    truth_rows.push_back({trajectories[i].subject_id,
                          std::to_string(groups[i]),
                          group_name(groups[i])});
  write_csv((ws / "synth" / "truth.csv").string(),
            {"subject_id", "group", "group_name"}, truth_rows);

  for (size_t i = 0; i < volumes.size(); ++i)
    save_volume(volumes[i], vol_path(ws, trajectories[i].subject_id));

  std::printf("[synth] wrote %zu subjects to %s\n", trajectories.size(),
              (ws / "synth").string().c_str());
  m.mark_done("synth", cfg.cohort.seed,
              {"synth/trajectories.csv", "synth/tabular.csv",
               "synth/truth.csv", "synth/volumes"});
}

// ---- cluster ---------------------------------------------------------

void stage_cluster(const PipelineConfig& cfg, const fs::path& ws,
                   Manifest& m) {
  require_done(m, "cluster", "synth");
  const auto trajectories =
      read_trajectories_csv((ws / "synth" / "trajectories.csv").string());
  const uint64_t seed = Rng::derive(cfg.cohort.seed, 171);
  fs::create_directories(ws / "cluster");

  const auto elbow =
      elbow_curve(trajectories, cfg.clustering.k_max, cfg.clustering.restarts,
                  seed, cfg.clustering.dtw);
  std::vector<std::vector<std::string>> elbow_rows;
  SvgSeries elbow_series;
  elbow_series.markers = true;
  for (const auto& [k, inertia] : elbow) {
    elbow_rows.push_back({std::to_string(k), format_double(inertia)});
    elbow_series.x.push_back(k);
    elbow_series.y.push_back(inertia);
  }
  write_csv((ws / "cluster" / "elbow.csv").string(), {"k", "inertia"},
            elbow_rows);
  write_svg((ws / "cluster" / "elbow.svg").string(),
            render_line_plot({elbow_series}, "Elbow curve (best of restarts)",
                             "k", "inertia"));

  const ClusterModel model =
      kmeans_dtw(trajectories, cfg.clustering.k, cfg.clustering.restarts,
                 cfg.clustering.max_iter, seed, cfg.clustering.dtw);
  std::map<std::string, int> labels;
  if (cfg.clustering.k == 4) {
    for (const auto& [id, lab] : assign_labels(model))
      labels[id] = static_cast<int>(lab);
  } else {
    for (const auto& [id, c] : model.assignments) labels[id] = c;
  }

  std::vector<std::vector<std::string>> assign_rows;
  for (const auto& t : trajectories)
    assign_rows.push_back({t.subject_id,
                           std::to_string(model.assignments.at(t.subject_id)),
                           std::to_string(labels.at(t.subject_id))});
  write_csv((ws / "cluster" / "assignments.csv").string(),
            {"subject_id", "cluster", "label"}, assign_rows);

  std::vector<std::vector<std::string>> bary_rows;
  for (int c = 0; c < model.k; ++c)
    for (size_t s = 0; s < model.barycenters[c].size(); ++s)
      bary_rows.push_back({std::to_string(c), std::to_string(s),
                           format_double(model.barycenters[c][s])});
  write_csv((ws / "cluster" / "barycenters.csv").string(),
            {"cluster", "step", "value"}, bary_rows);

  std::vector<SvgSeries> spaghetti;
  for (const auto& t : trajectories) {
    SvgSeries s;
    s.x = t.times;
    s.y = t.values;
    s.color = kPalette[model.assignments.at(t.subject_id) % 8];
    spaghetti.push_back(std::move(s));
  }
  for (int c = 0; c < model.k; ++c) {
    SvgSeries s;
    for (size_t i = 0; i < model.barycenters[c].size(); ++i) {
      s.x.push_back(i * cfg.cohort.visit_spacing_months);
      s.y.push_back(model.barycenters[c][i]);
    }
    s.color = "#000000";
    s.markers = true;
    spaghetti.push_back(std::move(s));
  }
  write_svg((ws / "cluster" / "trajectories.svg").string(),
            render_line_plot(spaghetti, "CDR-SB trajectories by cluster",
                             "months since baseline", "CDR-SB"));

  std::printf("[cluster] k=%d inertia=%.6g\n", model.k, model.inertia);
  m.mark_done("cluster", seed,
              {"cluster/assignments.csv", "cluster/barycenters.csv",
               "cluster/elbow.csv", "cluster/elbow.svg",
               "cluster/trajectories.svg"});
}

// ---- split -----------------------------------------------------------

std::map<std::string, int> read_labels(const fs::path& ws) {
  std::vector<std::string> header;
  const auto rows =
      read_csv((ws / "cluster" / "assignments.csv").string(), &header);
  std::map<std::string, int> labels;
  for (const auto& row : rows) {
    if (row.size() != 3)
      throw ParseError("assignments.csv: bad row");
    labels[row[0]] = std::stoi(row[2]);
  }
  return labels;
}

void stage_split(const PipelineConfig& cfg, const fs::path& ws, Manifest& m) {
  require_done(m, "split", "synth");
  require_done(m, "split", "cluster");
  const auto tabular =
      read_tabular_csv((ws / "synth" / "tabular.csv").string());
  const auto labels = read_labels(ws);
  std::vector<int> groups;
  for (const auto& rec : tabular) groups.push_back(labels.at(rec.subject_id));

  const SplitSpec split =
      stratified_split(tabular, groups, cfg.split.ratio, cfg.split.seed);

  fs::create_directories(ws / "split");
  std::vector<std::vector<std::string>> rows;
  for (const auto& id : split.train_ids) rows.push_back({id, "train"});
  for (const auto& id : split.test_ids) rows.push_back({id, "test"});
  std::sort(rows.begin(), rows.end());
  write_csv((ws / "split" / "split.csv").string(),
            {"subject_id", "partition"}, rows);

  std::printf("[split] %zu train / %zu test\n", split.train_ids.size(),
              split.test_ids.size());
  m.mark_done("split", cfg.split.seed, {"split/split.csv"});
}

std::set<std::string> read_partition(const fs::path& ws,
                                     const std::string& which) {
  std::vector<std::string> header;
  const auto rows = read_csv((ws / "split" / "split.csv").string(), &header);
  std::set<std::string> ids;
  for (const auto& row : rows) {
    if (row.size() != 2) throw ParseError("split.csv: bad row");
    if (row[1] == which) ids.insert(row[0]);
  }
  return ids;
}

// ---- pretrain --------------------------------------------------------

void stage_pretrain(const PipelineConfig& cfg, const fs::path& ws,
                    Manifest& m) {
  require_done(m, "pretrain", "synth");
  require_done(m, "pretrain", "split");
  const auto tabular =
      read_tabular_csv((ws / "synth" / "tabular.csv").string());
  const auto train_ids = read_partition(ws, "train");

  std::vector<Volume> train_vols;
  for (const auto& rec : tabular)
    if (train_ids.count(rec.subject_id))
      train_vols.push_back(load_volume(vol_path(ws, rec.subject_id)));
  if (train_vols.empty())
    throw DataError("pretrain: no training volumes found");

  const auto inputs =
      make_training_set(train_vols, cfg.augment, cfg.copies_per_volume);
  std::vector<Volume> targets;
  if (cfg.clean_targets) {
    targets = train_vols;
    for (size_t i = 0; i < train_vols.size(); ++i)
      for (int c = 0; c < cfg.copies_per_volume; ++c)
        targets.push_back(train_vols[i]);
  } else {
    targets = inputs;
  }

  const int n_mon =
      std::min<int>(cfg.monitor_count, static_cast<int>(train_vols.size()));
  const std::vector<Volume> monitors(train_vols.begin(),
                                     train_vols.begin() + n_mon);

  ViTModel model(cfg.vit, Rng::derive(cfg.pretrain.seed, 5));
  const ReconHistory hist =
      pretrain_reconstruction(model, inputs, targets, monitors, cfg.pretrain);

  fs::create_directories(ws / "pretrain");
  nn::save_checkpoint(model.params(),
                      (ws / "pretrain" / "encoder.ckpt").string());

  std::vector<std::vector<std::string>> rows;
  SvgSeries mse_series, ssim_series;
  ssim_series.color = "#d62728";
  for (size_t e = 0; e < hist.train_mse.size(); ++e) {
    rows.push_back({std::to_string(e + 1), format_double(hist.train_mse[e]),
                    format_double(hist.monitor_ssim[e])});
    mse_series.x.push_back(static_cast<double>(e + 1));
    mse_series.y.push_back(hist.train_mse[e]);
    ssim_series.x.push_back(static_cast<double>(e + 1));
    ssim_series.y.push_back(hist.monitor_ssim[e]);
  }
  write_csv((ws / "pretrain" / "history.csv").string(),
            {"epoch", "train_mse", "monitor_ssim"}, rows);
  write_svg((ws / "pretrain" / "loss.svg").string(),
            render_line_plot({mse_series}, "Reconstruction loss", "epoch",
                             "train MSE"));
  write_svg((ws / "pretrain" / "ssim.svg").string(),
            render_line_plot({ssim_series}, "Reconstruction quality", "epoch",
                             "monitor SSIM"));

  std::printf("[pretrain] %zu epochs, final mse=%.6g ssim=%.4f\n",
              hist.train_mse.size(),
              hist.train_mse.empty() ? 0.0 : hist.train_mse.back(),
              hist.monitor_ssim.empty() ? 0.0 : hist.monitor_ssim.back());
  m.mark_done("pretrain", cfg.pretrain.seed,
              {"pretrain/encoder.ckpt", "pretrain/history.csv",
               "pretrain/loss.svg", "pretrain/ssim.svg"});
}

// ---- embed -----------------------------------------------------------

void stage_embed(const PipelineConfig& cfg, const fs::path& ws, Manifest& m) {
  require_done(m, "embed", "synth");
  require_done(m, "embed", "pretrain");
  const auto tabular =
      read_tabular_csv((ws / "synth" / "tabular.csv").string());

  ViTModel model(cfg.vit, 0);
  nn::load_checkpoint(model.params(),
                      (ws / "pretrain" / "encoder.ckpt").string());

  std::vector<Volume> vols;
  for (const auto& rec : tabular)
    vols.push_back(load_volume(vol_path(ws, rec.subject_id)));
  const auto embeddings = extract_embeddings(model, vols);

  fs::create_directories(ws / "embed");
  std::vector<std::string> header{"subject_id"};
  for (int d = 0; d < cfg.vit.embed_dim; ++d)
    header.push_back("e" + std::to_string(d));
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    std::vector<std::string> row{tabular[i].subject_id};
    for (double v : embeddings[i]) row.push_back(format_double(v));
    rows.push_back(std::move(row));
  }
  write_csv((ws / "embed" / "embeddings.csv").string(), header, rows);

  std::printf("[embed] %zu embeddings of dim %d\n", embeddings.size(),
              cfg.vit.embed_dim);
  m.mark_done("embed", 0, {"embed/embeddings.csv"});
}

// ---- evaluate --------------------------------------------------------

using Runs = std::vector<std::array<std::optional<double>, 4>>;

std::string fmt_table(
    const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::array<double, 4> best{-1, -1, -1, -1};
  for (const auto& [name, rep] : rows)
    for (int c = 0; c < 4; ++c)
      if (rep.per_class[c].mean)
        best[c] = std::max(best[c], *rep.per_class[c].mean);
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-22s %-15s %-15s %-15s %-15s\n", "method",
                "Stable", "Mild", "Moderate", "Severe");
  out << buf;
  for (const auto& [name, rep] : rows) {
    std::snprintf(buf, sizeof(buf), "%-22s", name.c_str());
    out << buf;
    for (int c = 0; c < 4; ++c) {
      std::string cell = rep.per_class[c].formatted();
      if (rep.per_class[c].mean && *rep.per_class[c].mean == best[c])
        cell += "*";
      std::snprintf(buf, sizeof(buf), " %-14s", cell.c_str());
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

void write_table(const fs::path& csv_path, const fs::path& txt_path,
                 const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::vector<std::vector<std::string>> csv_rows;
  for (const auto& [name, rep] : rows) {
    std::vector<std::string> row{name};
    for (int c = 0; c < 4; ++c) {
      const auto& cell = rep.per_class[c];
      row.push_back(cell.mean ? format_double(*cell.mean) : "");
      row.push_back(cell.stddev ? format_double(*cell.stddev) : "");
    }
    csv_rows.push_back(std::move(row));
  }
  write_csv(csv_path.string(),
            {"method", "stable_mean", "stable_std", "mild_mean", "mild_std",
             "moderate_mean", "moderate_std", "severe_mean", "severe_std"},
            csv_rows);
  std::ofstream f(txt_path);
  if (!f) throw IoError("evaluate: cannot write '" + txt_path.string() + "'");
  f << fmt_table(rows);
}

std::vector<std::vector<double>> read_embeddings(
    const fs::path& ws, const std::vector<std::string>& ids) {
  std::vector<std::string> header;
  const auto rows =
      read_csv((ws / "embed" / "embeddings.csv").string(), &header);
  std::map<std::string, std::vector<double>> by_id;
  for (const auto& row : rows) {
    std::vector<double> e;
    for (size_t j = 1; j < row.size(); ++j) e.push_back(std::stod(row[j]));
    by_id[row[0]] = std::move(e);
  }
  std::vector<std::vector<double>> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("evaluate: no embedding for subject " + id);
    out.push_back(it->second);
  }
  return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& xs, const std::vector<size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(xs[i]);
  return out;
}

void stage_evaluate(const PipelineConfig& cfg, const fs::path& ws,
                    Manifest& m) {
  for (const char* dep : {"synth", "cluster", "split", "embed"})
    require_done(m, "evaluate", dep);

  const auto tabular =
      read_tabular_csv((ws / "synth" / "tabular.csv").string());
  const auto ids = subject_ids(tabular);
  const auto label_map = read_labels(ws);
  std::vector<int> labels;
  for (const auto& id : ids) {
    const int lab = label_map.at(id);
    if (lab < 0 || lab > 3)
      throw ConfigError("evaluate: labels must lie in 0..3 (k=4 clustering)");
    labels.push_back(lab);
  }
  const auto embeddings = read_embeddings(ws, ids);
  std::vector<Volume> volumes;
  for (const auto& id : ids) volumes.push_back(load_volume(vol_path(ws, id)));

  const auto base_train = read_partition(ws, "train");
  const auto split_indices = [&](const std::set<std::string>& train_set) {
    std::pair<std::vector<size_t>, std::vector<size_t>> idx;
    for (size_t i = 0; i < ids.size(); ++i)
      (train_set.count(ids[i]) ? idx.first : idx.second).push_back(i);
    return idx;
  };

  const auto& groups_spec = feature_groups();
  std::map<std::string, Runs> runs;  // method name -> per-rep AUCs
  std::vector<std::vector<std::string>> run_rows;
  const auto record_run = [&](int rep, const std::string& method,
                              const std::array<std::optional<double>, 4>& a) {
    runs[method].push_back(a);
    std::vector<std::string> row{std::to_string(rep), method};
    for (int c = 0; c < 4; ++c)
      row.push_back(a[c] ? format_double(*a[c]) : "");
    run_rows.push_back(std::move(row));
  };

  for (int rep = 0; rep < cfg.evaluation.repetitions; ++rep) {
    const uint64_t s = cfg.evaluation.base_seed + rep;
    std::set<std::string> train_set = base_train;
    if (cfg.evaluation.resplit_per_repetition) {
      const SplitSpec sp = stratified_split(tabular, labels, cfg.split.ratio,
                                            cfg.split.seed + rep);
      train_set = {sp.train_ids.begin(), sp.train_ids.end()};
    }
    const auto [train_idx, test_idx] = split_indices(train_set);
    const auto train_labels = take(labels, train_idx);
    const auto test_labels = take(labels, test_idx);

    // tabular routes: per-feature-group autoencoder latents -> GBT
    for (size_t gi = 0; gi < groups_spec.size(); ++gi) {
      const auto& fg = groups_spec[gi];
      std::vector<std::vector<double>> X;
      for (const auto& rec : tabular) X.push_back(rec.groups.at(fg.name));
      TrainConfig ae_cfg = cfg.tabular_ae;
      ae_cfg.seed = Rng::derive(s, 401 + gi);
      const TabularAeResult ae = train_tabular_autoencoder(X, train_idx, ae_cfg);
      GbtParams gbt = cfg.gbt;
      gbt.seed = s;
      const GbtModel model =
          fit_gbt(take(ae.latents, train_idx), train_labels, gbt);
      const auto probs = predict_proba(model, take(ae.latents, test_idx));
      record_run(rep, fg.name, auc_ovr(probs, test_labels));
    }

    // ViT embeddings -> PCA -> GBT
    {
      const PcaModel pca =
          pca_fit(take(embeddings, train_idx), cfg.reduction.variance_target,
                  cfg.reduction.max_components);
      GbtParams gbt = cfg.gbt;
      gbt.seed = s;
      const GbtModel model = fit_gbt(
          pca_transform(pca, take(embeddings, train_idx)), train_labels, gbt);
      const auto probs =
          predict_proba(model, pca_transform(pca, take(embeddings, test_idx)));
      record_run(rep, "vit_gbt", auc_ovr(probs, test_labels));
    }

    // ViT embeddings -> FC head
    {
      TrainConfig fc_cfg = cfg.fc_head;
      fc_cfg.seed = s;
      const FcHeadResult res = train_fc_head_on_embeddings(
          take(embeddings, train_idx), train_labels,
          take(embeddings, test_idx), fc_cfg);
      record_run(rep, "vit_fc", auc_ovr(res.val_probs, test_labels));
    }

    // end-to-end CNN baseline
    {
      TrainConfig cnn_cfg = cfg.cnn;
      cnn_cfg.seed = s;
      CnnBaseline cnn =
          train_cnn_baseline(take(volumes, train_idx), train_labels, cnn_cfg);
      const auto probs = cnn.predict_proba(take(volumes, test_idx));
      record_run(rep, "cnn", auc_ovr(probs, test_labels));
    }
    std::printf("[evaluate] repetition %d/%d done\n", rep + 1,
                cfg.evaluation.repetitions);
  }

  fs::create_directories(ws / "evaluate");
  write_csv((ws / "evaluate" / "auc_runs.csv").string(),
            {"repetition", "method", "stable", "mild", "moderate", "severe"},
            run_rows);

  std::vector<std::pair<std::string, MetricReport>> table1;
  for (const auto& fg : groups_spec)
    table1.emplace_back(fg.name, aggregate_runs(runs.at(fg.name)));
  write_table(ws / "evaluate" / "table1.csv", ws / "evaluate" / "table1.txt",
              table1);

  std::vector<std::pair<std::string, MetricReport>> table2;
  table2.emplace_back("brain_volumetrics",
                      aggregate_runs(runs.at("volumetrics")));
  table2.emplace_back("vit_gbt", aggregate_runs(runs.at("vit_gbt")));
  table2.emplace_back("vit_fc", aggregate_runs(runs.at("vit_fc")));
  table2.emplace_back("cnn", aggregate_runs(runs.at("cnn")));
  write_table(ws / "evaluate" / "table2.csv", ws / "evaluate" / "table2.txt",
              table2);

  std::printf("[evaluate] wrote tables for %d repetitions\n",
              cfg.evaluation.repetitions);
  m.mark_done("evaluate", cfg.evaluation.base_seed,
              {"evaluate/auc_runs.csv", "evaluate/table1.csv",
               "evaluate/table1.txt", "evaluate/table2.csv",
               "evaluate/table2.txt"});
}

void dispatch(const PipelineConfig& cfg, const fs::path& ws, Manifest& m,
              const std::string& stage) {
  if (stage == "synth")
    stage_synth(cfg, ws, m);
  else if (stage == "cluster")
    stage_cluster(cfg, ws, m);
  else if (stage == "split")
    stage_split(cfg, ws, m);
  else if (stage == "pretrain")
    stage_pretrain(cfg, ws, m);
  else if (stage == "embed")
    stage_embed(cfg, ws, m);
  else if (stage == "evaluate")
    stage_evaluate(cfg, ws, m);
  else
    throw ArgumentError("unknown stage '" + stage + "'");
}

}  // namespace

void run_stage(const PipelineConfig& cfg, const std::string& stage,
               bool force) {
  const fs::path ws(cfg.workspace);
  fs::create_directories(ws);
  Manifest manifest = Manifest::open(ws, cfg.config_hash, force);
  manifest.save();

  if (stage == "report") {
    std::fputs(render_report(cfg).c_str(), stdout);
    return;
  }
  if (stage == "run-all" || stage == "run_all") {
    int executed = 0;
    for (const char* s : kStageOrder) {
      if (!begin_stage(manifest, s, force, /*skip_done=*/true)) continue;
      dispatch(cfg, ws, manifest, s);
      ++executed;
    }
    if (executed == 0) std::printf("run-all: workspace is up to date\n");
    return;
  }
  begin_stage(manifest, stage, force, /*skip_done=*/false);
  dispatch(cfg, ws, manifest, stage);
}

std::string render_report(const PipelineConfig& cfg) {
  const fs::path ws(cfg.workspace);
  Manifest manifest = Manifest::open(ws, cfg.config_hash, false);
  require_done(manifest, "report", "evaluate");
  std::ostringstream out;
  for (const auto& [title, file] :
       std::initializer_list<std::pair<const char*, const char*>>{
           {"Per-feature-group AUC (tabular routes)", "table1.txt"},
           {"Cross-modal comparison AUC", "table2.txt"}}) {
    std::ifstream f(ws / "evaluate" / file);
    if (!f)
      throw IoError(std::string("report: missing evaluate output ") + file);
    out << title << "\n";
    out << f.rdbuf() << "\n";
  }
  return out.str();
}

}  // namespace df
