#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "declineforge.h"
#include "declineforge/rng.hpp"
#include "declineforge/trajectory.hpp"
#include "declineforge/volume.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

fs::path tmpdir() {
  const fs::path p = fs::temp_directory_path() / "df_test_capi";
  fs::create_directories(p);
  return p;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = tmpdir() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("c api volume handles") {
  // build a fixture through the C++ side, then drive it via the C interface
  df::Volume v(4, 4, 4);
  df::Rng rng(1);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(-50.0, 400.0));
  const std::string path = (tmpdir() / "vol.nii").string();
  df::save_volume(v, path);

  df_volume* h = nullptr;
  REQUIRE(df_volume_load(path.c_str(), &h) == DF_OK);
  int dims[3];
  REQUIRE(df_volume_dims(h, dims) == DF_OK);
  CHECK(dims[0] == 4);
  CHECK(dims[2] == 4);
  const float* data = nullptr;
  size_t n = 0;
  REQUIRE(df_volume_data(h, &data, &n) == DF_OK);
  REQUIRE(n == v.data.size());
  CHECK(std::memcmp(data, v.data.data(), n * sizeof(float)) == 0);

  df_volume* norm = nullptr;
  REQUIRE(df_volume_normalize(h, &norm) == DF_OK);
  REQUIRE(df_volume_data(norm, &data, &n) == DF_OK);
  float mx = 0;
  for (size_t i = 0; i < n; ++i) mx = std::max(mx, data[i]);
  CHECK(mx == doctest::Approx(255.0f));

  const std::string out = (tmpdir() / "norm.nii").string();
  CHECK(df_volume_save(norm, out.c_str()) == DF_OK);
  df_volume_free(norm);
  df_volume_free(h);

  SUBCASE("errors set df_last_error and return DF_ERROR") {
    df_volume* bad = nullptr;
    CHECK(df_volume_load((tmpdir() / "missing.nii").string().c_str(), &bad) ==
          DF_ERROR);
    CHECK(std::string(df_last_error()).find("missing.nii") !=
          std::string::npos);
    CHECK(df_volume_load(nullptr, &bad) == DF_ERROR);
  }
}

TEST_CASE("c api dtw matches the library") {
  const double a[] = {0, 1, 2};
  const double b[] = {0, 2};
  double out = -1;
  REQUIRE(df_dtw_distance(a, 3, b, 2, 0, -1, &out) == DF_OK);
  CHECK(out == 1.0);
  REQUIRE(df_dtw_distance(a, 3, b, 2, 1, -1, &out) == DF_OK);
  CHECK(out == df::dtw_distance({0, 1, 2}, {0, 2},
                                {df::DtwCost::Absolute, std::nullopt}));
  SUBCASE("infeasible band maps to DF_ERROR") {
    const double c[] = {0, 1, 2, 3, 4, 5};
    CHECK(df_dtw_distance(c, 6, b, 2, 0, 1, &out) == DF_ERROR);
  }
}

TEST_CASE("c api stage errors map to documented codes") {
  SUBCASE("bad config file is DF_CONFIG") {
    const auto cfg = write_config("bad.json", "{broken");
    CHECK(df_run_stage(cfg.c_str(), "synth", 0, nullptr, -1) == DF_CONFIG);
  }
  SUBCASE("missing dependency is DF_DEPENDENCY") {
    const fs::path ws = tmpdir() / "ws_dep";
    fs::remove_all(ws);
    const auto cfg = write_config(
        "dep.json", "{\"workspace\": \"" + ws.string() +
                        "\", \"cohort\": {\"n_subjects\": 20, "
                        "\"volume_dims\": [16,16,16]}}");
    CHECK(df_run_stage(cfg.c_str(), "cluster", 0, nullptr, -1) ==
          DF_DEPENDENCY);
    CHECK(std::string(df_last_error()).find("synth") != std::string::npos);
  }
  SUBCASE("report before evaluate fails with a message") {
    const fs::path ws = tmpdir() / "ws_rep";
    fs::remove_all(ws);
    const auto cfg = write_config(
        "rep.json", "{\"workspace\": \"" + ws.string() + "\"}");
    char* text = nullptr;
    CHECK(df_report(cfg.c_str(), nullptr, &text) == DF_DEPENDENCY);
  }
  SUBCASE("workspace override is honored") {
    const fs::path ws = tmpdir() / "ws_override";
    fs::remove_all(ws);
    const auto cfg = write_config(
        "ovr.json",
        R"({"workspace": "/nonexistent/should/not/be/used",
            "cohort": {"n_subjects": 20, "volume_dims": [16,16,16]}})");
    CHECK(df_run_stage(cfg.c_str(), "synth", 0, ws.string().c_str(), -1) ==
          DF_OK);
    CHECK(fs::exists(ws / "synth/trajectories.csv"));
  }
}
