#include <algorithm>
#include <cmath>
#include <set>

#include "declineforge/cohort.hpp"
#include "declineforge/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace df;

namespace {

CohortSpec small_spec() {
  CohortSpec s;
  s.n_subjects = 60;
  s.volume_dims = {16, 16, 16};
  s.seed = 11;
  return s;
}

}  // namespace

TEST_CASE("trajectory invariants hold for every subject") {
  const auto cohort = gen_trajectories(small_spec());
  REQUIRE(cohort.size() == 60);
  for (const auto& [t, g] : cohort) {
    CHECK(t.times.size() == t.values.size());
    CHECK(t.times.size() >= 3);
    CHECK(t.times.size() <= 10);
    for (size_t i = 1; i < t.times.size(); ++i)
      CHECK(t.times[i] > t.times[i - 1]);
    for (double v : t.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 18.0);
      CHECK(std::fmod(v, 0.5) == doctest::Approx(0.0));  // 0.5 grid
    }
    CHECK(g >= 0);
    CHECK(g <= 3);
  }
}

TEST_CASE("zero-noise stable trajectories are flat") {
  CohortSpec s = small_spec();
  s.traj_noise_sigma = 0.0;
  s.traj_baseline_jitter = 0.0;
  for (const auto& [t, g] : gen_trajectories(s)) {
    if (g != static_cast<int>(Group::Stable)) continue;
    const auto [mn, mx] = std::minmax_element(t.values.begin(), t.values.end());
    CHECK(*mx - *mn == 0.0);
  }
}

TEST_CASE("generators are deterministic under the seed") {
  const auto a = gen_trajectories(small_spec());
  const auto b = gen_trajectories(small_spec());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].second == b[i].second);
    CHECK(a[i].first.times == b[i].first.times);
    CHECK(a[i].first.values == b[i].first.values);
  }
}

TEST_CASE("per-group mean slopes are ordered stable < mild < moderate < severe") {
  CohortSpec s;
  s.n_subjects = 400;
  s.seed = 42;
  const auto cohort = gen_trajectories(s);
  std::array<double, 4> slope_sum{};
  std::array<int, 4> count{};
  for (const auto& [t, g] : cohort) {
    slope_sum[g] += oracle::ls_slope(t.times, t.values);
    count[g] += 1;
  }
  for (int g = 0; g < 4; ++g) REQUIRE(count[g] > 0);
  for (int g = 1; g < 4; ++g)
    CHECK(slope_sum[g] / count[g] > slope_sum[g - 1] / count[g - 1]);
}

TEST_CASE("tabular missingness and null-signal configurations") {
  CohortSpec s = small_spec();
  const auto cohort = gen_trajectories(s);
  std::vector<int> groups;
  for (const auto& [t, g] : cohort) groups.push_back(g);

  SUBCASE("missing rate 0 produces no NaNs") {
    s.missing_rate = 0.0;
    for (const auto& rec : gen_tabular(groups, s))
      for (const auto& [name, vals] : rec.groups)
        for (double v : vals) CHECK(std::isfinite(v));
  }
  SUBCASE("signal 0 equalizes group means") {
    s.tabular_signal = 0.0;
    s.missing_rate = 0.0;
    s.n_subjects = 400;
    const auto big = gen_trajectories(s);
    std::vector<int> g2;
    for (const auto& [t, g] : big) g2.push_back(g);
    const auto recs = gen_tabular(g2, s);
    // group-conditional means of the first cognitive feature should agree
    // within sampling error
    std::array<double, 4> sum{}, n{};
    for (size_t i = 0; i < recs.size(); ++i) {
      sum[g2[i]] += recs[i].groups.at("cognitive")[0];
      n[g2[i]] += 1;
    }
    for (int g = 1; g < 4; ++g)
      CHECK(std::fabs(sum[g] / n[g] - sum[0] / n[0]) < 0.5);
  }
}

TEST_CASE("cognitive scores separate severe from stable") {
  CohortSpec s;
  s.n_subjects = 400;
  s.seed = 42;
  const auto cohort = gen_trajectories(s);
  std::vector<int> groups;
  for (const auto& [t, g] : cohort) groups.push_back(g);
  const auto recs = gen_tabular(groups, s);

  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (size_t i = 0; i < recs.size(); ++i) {
    if (groups[i] == 0 || groups[i] == 3) {
      X.push_back(recs[i].groups.at("cognitive"));
      y.push_back(groups[i] == 3 ? 1 : 0);
    }
  }
  CHECK(oracle::class_mean_separator_accuracy(X, y) > 0.85);
}

TEST_CASE("volumes are deterministic, clamped, and carry the cavity signal") {
  CohortSpec s = small_spec();
  const auto cohort = gen_trajectories(s);
  std::vector<int> groups;
  for (const auto& [t, g] : cohort) groups.push_back(g);

  SUBCASE("values within [0,255]") {
    for (const auto& v : gen_volumes(groups, s))
      for (float x : v.data) {
        CHECK(x >= 0.0f);
        CHECK(x <= 255.0f);
      }
  }
  SUBCASE("zero jitter and noise make same-group volumes identical") {
    CohortSpec z = s;
    z.volume_noise_sigma = 0.0;
    z.volume_shape_jitter = 0.0;
    const auto vols = gen_volumes(groups, z);
    int first[4] = {-1, -1, -1, -1};
    for (size_t i = 0; i < vols.size(); ++i) {
      const int g = groups[i];
      if (first[g] < 0) {
        first[g] = static_cast<int>(i);
        continue;
      }
      CHECK(vols[i].data == vols[first[g]].data);
    }
  }
  SUBCASE("severe cavity is darker than stable inside the severe mask") {
    CohortSpec z = s;
    z.volume_noise_sigma = 0.0;
    z.volume_shape_jitter = 0.0;
    const auto vols = gen_volumes(groups, z);
    const Volume mask = ventricle_mask(3, z);
    int i_stable = -1, i_severe = -1;
    for (size_t i = 0; i < groups.size(); ++i) {
      if (groups[i] == 0 && i_stable < 0) i_stable = static_cast<int>(i);
      if (groups[i] == 3 && i_severe < 0) i_severe = static_cast<int>(i);
    }
    REQUIRE(i_stable >= 0);
    REQUIRE(i_severe >= 0);
    double mean_stable = 0, mean_severe = 0, n = 0;
    for (size_t i = 0; i < mask.data.size(); ++i) {
      if (mask.data[i] == 0.0f) continue;
      mean_stable += vols[i_stable].data[i];
      mean_severe += vols[i_severe].data[i];
      n += 1;
    }
    REQUIRE(n > 0);
    // severe has a larger cavity: inside its mask, severe shows cavity
    // intensity while stable still shows brain tissue
    CHECK(mean_severe / n < mean_stable / n - 50.0);
  }
}

TEST_CASE("ventricle radius grows with progression group") {
  const CohortSpec s = small_spec();
  for (int g = 1; g < 4; ++g)
    CHECK(ventricle_radius(g, s) > ventricle_radius(g - 1, s));
}

TEST_CASE("stratified_split allocation rules") {
  SUBCASE("single stratum, exact fraction") {
    CohortSpec s;
    s.n_subjects = 100;
    s.seed = 5;
    s.missing_rate = 0.0;
    const auto cohort = gen_trajectories(s);
    std::vector<int> groups(100, 2);  // one group
    auto recs = gen_tabular(groups, s);
    // force one stratum: same age and sex for everyone
    for (auto& r : recs) {
      r.groups.at("risk")[0] = 70.0;  // AGE
      r.groups.at("risk")[1] = 1.0;   // SEX
    }
    const SplitSpec sp = stratified_split(recs, groups, 0.2, 1);
    CHECK(sp.test_ids.size() == 20);
    CHECK(sp.train_ids.size() == 80);
  }
  SUBCASE("round-half-up on uneven strata {7, 13}") {
    CohortSpec s;
    s.n_subjects = 20;
    s.seed = 5;
    s.missing_rate = 0.0;
    std::vector<int> groups(20, 0);
    const auto cohort = gen_trajectories(s);
    auto recs = gen_tabular(groups, s);
    for (size_t i = 0; i < recs.size(); ++i) {
      recs[i].groups.at("risk")[0] = i < 7 ? 60.0 : 80.0;
      recs[i].groups.at("risk")[1] = 1.0;
    }
    const SplitSpec sp = stratified_split(recs, groups, 0.2, 1);
    // floor(7*0.2+0.5)=1 and floor(13*0.2+0.5)=3
    CHECK(sp.test_ids.size() == 4);
  }
  SUBCASE("disjoint and exhaustive") {
    CohortSpec s = small_spec();
    const auto cohort = gen_trajectories(s);
    std::vector<int> groups;
    for (const auto& [t, g] : cohort) groups.push_back(g);
    const auto recs = gen_tabular(groups, s);
    const SplitSpec sp = stratified_split(recs, groups, 0.2, 1);
    std::set<std::string> all(sp.train_ids.begin(), sp.train_ids.end());
    for (const auto& id : sp.test_ids) CHECK(all.insert(id).second);
    CHECK(all.size() == recs.size());
  }
  SUBCASE("deterministic under seed") {
    CohortSpec s = small_spec();
    const auto cohort = gen_trajectories(s);
    std::vector<int> groups;
    for (const auto& [t, g] : cohort) groups.push_back(g);
    const auto recs = gen_tabular(groups, s);
    const SplitSpec a = stratified_split(recs, groups, 0.2, 9);
    const SplitSpec b = stratified_split(recs, groups, 0.2, 9);
    CHECK(a.train_ids == b.train_ids);
    CHECK(a.test_ids == b.test_ids);
  }
}

TEST_CASE("spec validation rejects bad configurations") {
  CohortSpec s;
  SUBCASE("too few subjects") {
    s.n_subjects = 3;
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  SUBCASE("proportions must sum to 1") {
    s.group_proportions = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  SUBCASE("volume dims at least 16") {
    s.volume_dims = {8, 16, 16};
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
}
