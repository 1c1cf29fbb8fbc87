#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "declineforge/error.hpp"
#include "declineforge/pipeline/config.hpp"
#include "declineforge/pipeline/csvio.hpp"
#include "declineforge/pipeline/stages.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace df;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Minimal fast configuration for stage tests.
std::string smoke_config(const fs::path& ws) {
  return std::string("{\n") + "\"workspace\": \"" + ws.string() + "\",\n" +
         R"("cohort": {"n_subjects": 40, "volume_dims": [16,16,16], "seed": 3},
"clustering": {"restarts": 3, "max_iter": 15, "k_max": 5},
"pretraining": {"vit": {"patch_size": 8, "embed_dim": 16, "depth": 1, "heads": 2},
                "train": {"epochs": 2, "batch_size": 4}, "monitor_count": 2},
"augmentation": {"copies_per_volume": 1},
"classifiers": {"gbt": {"n_rounds": 5}, "fc_head": {"epochs": 10},
                "cnn": {"epochs": 1}, "tabular_ae": {"epochs": 10}},
"evaluation": {"repetitions": 1}
})";
}

PipelineConfig smoke(const fs::path& ws) {
  return parse_pipeline_config(smoke_config(ws));
}

fs::path fresh_ws(const std::string& name) {
  const fs::path ws = fs::temp_directory_path() / ("df_test_" + name);
  fs::remove_all(ws);
  return ws;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults survive an empty object") {
    const PipelineConfig cfg = parse_pipeline_config("{}");
    CHECK(cfg.cohort.n_subjects == 400);
    CHECK(cfg.clustering.k == 4);
    CHECK(cfg.split.ratio == 0.2);
    CHECK(cfg.pretrain.epochs == 200);
    CHECK(cfg.pretrain.learning_rate == 1e-4);
    CHECK(cfg.reduction.variance_target == 0.95);
    CHECK(cfg.reduction.max_components == 15);
    CHECK(cfg.evaluation.repetitions == 5);
    CHECK_FALSE(cfg.config_hash.empty());
  }
  SUBCASE("invalid JSON is a config error") {
    CHECK_THROWS_AS(parse_pipeline_config("{nope"), ConfigError);
  }
  SUBCASE("invalid values are config errors") {
    CHECK_THROWS_AS(parse_pipeline_config(R"({"split": {"ratio": 1.5}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_pipeline_config(R"({"evaluation": {"repetitions": 0}})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_pipeline_config(R"({"cohort": {"volume_dims": [8, 16, 16]}})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_pipeline_config(R"({"clustering": {"cost": "cubic"}})"),
        ConfigError);
  }
  SUBCASE("vit dims follow the cohort volume dims") {
    const PipelineConfig cfg = parse_pipeline_config(
        R"({"cohort": {"volume_dims": [16,16,16]},
            "pretraining": {"vit": {"patch_size": 8, "embed_dim": 16,
                                    "depth": 1, "heads": 2}}})");
    CHECK(cfg.vit.vol_dims == std::array<int, 3>{16, 16, 16});
  }
  SUBCASE("hash tracks content") {
    CHECK(parse_pipeline_config("{}").config_hash !=
          parse_pipeline_config("{ }").config_hash);
  }
}

TEST_CASE("csv round-trips") {
  const fs::path dir = fresh_ws("csv");
  fs::create_directories(dir);
  SUBCASE("trajectories") {
    std::vector<Trajectory> ts(2);
    ts[0] = {"S0000", {0, 6.5, 12}, {1.0, 1.5, 2.0}};
    ts[1] = {"S0001", {0, 5}, {0.0, 0.5}};
    const auto path = (dir / "t.csv").string();
    write_trajectories_csv(path, ts);
    const auto back = read_trajectories_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].subject_id == "S0000");
    CHECK(back[0].times == ts[0].times);
    CHECK(back[1].values == ts[1].values);
  }
  SUBCASE("tabular with missing cells") {
    TabularRecord rec;
    rec.subject_id = "S0000";
    for (const auto& fg : feature_groups())
      rec.groups[fg.name] =
          std::vector<double>(fg.features.size(), 1.25);
    rec.groups["csf"][1] = std::numeric_limits<double>::quiet_NaN();
    const auto path = (dir / "tab.csv").string();
    write_tabular_csv(path, {rec});
    const auto back = read_tabular_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].groups.at("cognitive")[0] == 1.25);
    CHECK(std::isnan(back[0].groups.at("csf")[1]));
  }
}

TEST_CASE("stage dependency and collision rules") {
  const fs::path ws = fresh_ws("deps");
  const PipelineConfig cfg = smoke(ws);

  SUBCASE("cluster before synth is a dependency error") {
    CHECK_THROWS_AS(run_stage(cfg, "cluster", false), DependencyError);
  }
  SUBCASE("rerunning synth without force is refused") {
    run_stage(cfg, "synth", false);
    CHECK_THROWS_AS(run_stage(cfg, "synth", false), Error);
    CHECK_NOTHROW(run_stage(cfg, "synth", true));
  }
  SUBCASE("unknown stage name rejected") {
    CHECK_THROWS_AS(run_stage(cfg, "bogus", false), ArgumentError);
  }
}

TEST_CASE("synth output contract") {
  const fs::path ws = fresh_ws("synth");
  const PipelineConfig cfg = smoke(ws);
  run_stage(cfg, "synth", false);
  CHECK(read_trajectories_csv((ws / "synth/trajectories.csv").string()).size()
        == 40);
  CHECK(read_tabular_csv((ws / "synth/tabular.csv").string()).size() == 40);
  int volumes = 0;
  for (const auto& e : fs::directory_iterator(ws / "synth/volumes")) ++volumes;
  CHECK(volumes == 40);

  SUBCASE("re-running with force is byte-identical") {
    const std::string before = read_file(ws / "synth/trajectories.csv");
    const std::string before_tab = read_file(ws / "synth/tabular.csv");
    run_stage(cfg, "synth", true);
    CHECK(read_file(ws / "synth/trajectories.csv") == before);
    CHECK(read_file(ws / "synth/tabular.csv") == before_tab);
  }
}

TEST_CASE("manifest guards") {
  const fs::path ws = fresh_ws("manifest");
  const PipelineConfig cfg = smoke(ws);
  run_stage(cfg, "synth", false);

  SUBCASE("corrupted manifest is reported, not silently re-run") {
    std::ofstream(ws / "manifest.json") << "{{{ definitely not json";
    CHECK_THROWS_AS(run_stage(cfg, "synth", true), ParseError);
  }
  SUBCASE("config change without force is refused") {
    PipelineConfig other = smoke(ws);
    other.config_hash = "different";
    CHECK_THROWS_AS(run_stage(other, "cluster", false), ConfigError);
  }
}

TEST_CASE("full pipeline smoke run") {
  const fs::path ws = fresh_ws("runall");
  const PipelineConfig cfg = smoke(ws);
  run_stage(cfg, "run-all", false);

  SUBCASE("all artifacts present") {
    for (const char* p :
         {"synth/trajectories.csv", "synth/tabular.csv", "synth/truth.csv",
          "cluster/assignments.csv", "cluster/elbow.csv", "cluster/elbow.svg",
          "cluster/trajectories.svg", "split/split.csv",
          "pretrain/encoder.ckpt", "pretrain/history.csv", "pretrain/loss.svg",
          "embed/embeddings.csv", "evaluate/table1.csv", "evaluate/table1.txt",
          "evaluate/table2.csv", "evaluate/table2.txt",
          "evaluate/auc_runs.csv"})
      CHECK_MESSAGE(fs::exists(ws / p), p);
  }
  SUBCASE("elbow csv has k_max rows") {
    std::vector<std::string> header;
    CHECK(read_csv((ws / "cluster/elbow.csv").string(), &header).size() == 5);
  }
  SUBCASE("history csv has one row per epoch") {
    std::vector<std::string> header;
    CHECK(read_csv((ws / "pretrain/history.csv").string(), &header).size() ==
          2);
  }
  SUBCASE("rerun is an up-to-date no-op that changes nothing") {
    const std::string before = read_file(ws / "evaluate/table2.csv");
    const auto stamp = fs::last_write_time(ws / "pretrain/encoder.ckpt");
    run_stage(cfg, "run-all", false);
    CHECK(read_file(ws / "evaluate/table2.csv") == before);
    CHECK(fs::last_write_time(ws / "pretrain/encoder.ckpt") == stamp);
  }
  SUBCASE("report renders both tables") {
    const std::string report = render_report(cfg);
    CHECK(report.find("Stable") != std::string::npos);
    CHECK(report.find("vit_fc") != std::string::npos);
    CHECK(report.find("brain_volumetrics") != std::string::npos);
  }
  SUBCASE("stage reruns under fixed seeds are byte-identical") {
    const std::string emb = read_file(ws / "embed/embeddings.csv");
    const std::string table = read_file(ws / "evaluate/auc_runs.csv");
    run_stage(cfg, "embed", true);
    run_stage(cfg, "evaluate", true);
    CHECK(read_file(ws / "embed/embeddings.csv") == emb);
    CHECK(read_file(ws / "evaluate/auc_runs.csv") == table);
  }
}
