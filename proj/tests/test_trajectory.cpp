#include <cmath>

#include "declineforge/cohort.hpp"
#include "declineforge/error.hpp"
#include "declineforge/rng.hpp"
#include "declineforge/trajectory.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace df;

namespace {

std::vector<Trajectory> planted_cohort(int n, double noise, uint64_t seed) {
  CohortSpec s;
  s.n_subjects = n;
  s.traj_noise_sigma = noise;
  if (noise == 0.0) s.traj_baseline_jitter = 0.0;
  s.seed = seed;
  std::vector<Trajectory> out;
  for (const auto& [t, g] : gen_trajectories(s)) out.push_back(t);
  return out;
}

std::vector<int> planted_groups(int n, double noise, uint64_t seed) {
  CohortSpec s;
  s.n_subjects = n;
  s.traj_noise_sigma = noise;
  if (noise == 0.0) s.traj_baseline_jitter = 0.0;
  s.seed = seed;
  std::vector<int> out;
  for (const auto& [t, g] : gen_trajectories(s)) out.push_back(g);
  return out;
}

}  // namespace

TEST_CASE("dtw hand examples and oracle equivalence") {
  SUBCASE("self distance is zero") {
    const std::vector<double> x{1.0, 2.5, -3.0, 4.0};
    CHECK(dtw_distance(x, x) == 0.0);
  }
  SUBCASE("hand case [0,1,2] vs [0,2] squared = 1") {
    CHECK(dtw_distance({0, 1, 2}, {0, 2}) == 1.0);
  }
  SUBCASE("hand case [0,0,0] vs [1,1,1] squared = 3") {
    CHECK(dtw_distance({0, 0, 0}, {1, 1, 1}) == 3.0);
  }
  SUBCASE("random pairs match exhaustive enumeration exactly") {
    Rng rng(99);
    for (int it = 0; it < 50; ++it) {
      const int na = 1 + rng.uniform_int(0, 5), nb = 1 + rng.uniform_int(0, 5);
      std::vector<double> a(na), b(nb);
      for (auto& v : a) v = rng.uniform(-5.0, 5.0);
      for (auto& v : b) v = rng.uniform(-5.0, 5.0);
      for (DtwCost cost : {DtwCost::Squared, DtwCost::Absolute}) {
        DtwConfig cfg;
        cfg.cost = cost;
        CHECK(dtw_distance(a, b, cfg) ==
              oracle::dtw_exhaustive(a, b, cost == DtwCost::Squared));
      }
    }
  }
  SUBCASE("symmetry") {
    const std::vector<double> a{0, 3, 1, 2}, b{2, 2, 0};
    CHECK(dtw_distance(a, b) == dtw_distance(b, a));
  }
  SUBCASE("empty series rejected") {
    CHECK_THROWS_AS(dtw_distance({}, {1.0}), ArgumentError);
  }
}

TEST_CASE("sakoe-chiba band") {
  const std::vector<double> a{0, 1, 2, 3, 4, 5}, b{0, 2, 4};
  SUBCASE("wide band equals unbanded") {
    DtwConfig cfg;
    cfg.band_radius = 6;
    CHECK(dtw_distance(a, b, cfg) == dtw_distance(a, b));
  }
  SUBCASE("band narrower than the length difference is infeasible") {
    DtwConfig cfg;
    cfg.band_radius = 1;  // |6-3| = 3 > 1
    CHECK_THROWS_AS(dtw_distance(a, b, cfg), ArgumentError);
  }
}

TEST_CASE("dba barycenter") {
  SUBCASE("single member is a fixed point") {
    const std::vector<double> m{1, 2, 3, 4};
    CHECK(dba_barycenter({m}, 4, 5) == m);
  }
  SUBCASE("two identical members return that series") {
    const std::vector<double> m{0.5, 1.5, 0.5};
    CHECK(dba_barycenter({m, m}, 3, 5) == m);
  }
  SUBCASE("hand case: [0,0,0] and [2,2,2] average to [1,1,1]") {
    const auto bc = dba_barycenter({{0, 0, 0}, {2, 2, 2}}, 3, 10);
    REQUIRE(bc.size() == 3);
    for (double v : bc) CHECK(v == doctest::Approx(1.0));
  }
}

TEST_CASE("kmeans_dtw basics") {
  const auto trajectories = planted_cohort(40, 0.3, 21);

  SUBCASE("k=1 inertia is the sum of distances to the single barycenter") {
    const ClusterModel m = kmeans_dtw(trajectories, 1, 3, 20, 7);
    double total = 0;
    for (const auto& t : trajectories)
      total += dtw_distance(t.values, m.barycenters[0]);
    CHECK(m.inertia == doctest::Approx(total).epsilon(1e-9));
  }
  SUBCASE("deterministic under the seed") {
    const ClusterModel a = kmeans_dtw(trajectories, 3, 3, 20, 7);
    const ClusterModel b = kmeans_dtw(trajectories, 3, 3, 20, 7);
    CHECK(a.inertia == b.inertia);
    CHECK(a.assignments == b.assignments);
    CHECK(a.barycenters == b.barycenters);
  }
  SUBCASE("every subject assigned to a cluster in range") {
    const ClusterModel m = kmeans_dtw(trajectories, 4, 3, 20, 7);
    CHECK(m.assignments.size() == trajectories.size());
    for (const auto& [id, c] : m.assignments) {
      CHECK(c >= 0);
      CHECK(c < 4);
    }
  }
  SUBCASE("fewer trajectories than k rejected") {
    const std::vector<Trajectory> two(trajectories.begin(),
                                      trajectories.begin() + 2);
    CHECK_THROWS_AS(kmeans_dtw(two, 4, 2, 10, 7), ArgumentError);
  }
}

TEST_CASE("zero-noise planted archetypes are recovered exactly") {
  const auto trajectories = planted_cohort(80, 0.0, 33);
  const auto truth = planted_groups(80, 0.0, 33);
  const ClusterModel m = kmeans_dtw(trajectories, 4, 10, 50, 7);
  std::vector<int> found;
  for (const auto& t : trajectories) found.push_back(m.assignments.at(t.subject_id));
  CHECK(oracle::adjusted_rand_index(found, truth) == doctest::Approx(1.0));

  SUBCASE("labels match the planted archetypes end to end") {
    const auto labels = assign_labels(m);
    for (size_t i = 0; i < trajectories.size(); ++i)
      CHECK(static_cast<int>(labels.at(trajectories[i].subject_id)) ==
            truth[i]);
  }
}

TEST_CASE("elbow curve") {
  const auto trajectories = planted_cohort(60, 0.0, 44);
  const auto curve = elbow_curve(trajectories, 6, 5, 7);
  REQUIRE(curve.size() == 6);
  SUBCASE("ascending k, non-increasing inertia") {
    for (size_t i = 0; i < curve.size(); ++i)
      CHECK(curve[i].first == static_cast<int>(i) + 1);
    for (size_t i = 1; i < curve.size(); ++i)
      CHECK(curve[i].second <= curve[i - 1].second + 1e-9);
  }
  SUBCASE("k_max=1 equals kmeans k=1 inertia") {
    const auto single = elbow_curve(trajectories, 1, 5, 7);
    const ClusterModel m = kmeans_dtw(trajectories, 1, 5, 50, 7);
    CHECK(single[0].second == doctest::Approx(m.inertia));
  }
}

TEST_CASE("assign_labels ordering rules") {
  ClusterModel m;
  m.k = 4;
  // net changes: 5.0, 0.1, 11.0, 2.0 -> labels Moderate, Stable, Severe, Mild
  m.barycenters = {{1, 3, 6}, {2, 2, 2.1}, {0, 5, 11}, {1, 2, 3}};
  m.assignments = {{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}};
  const auto labels = assign_labels(m);
  CHECK(labels.at("a") == ProgressionLabel::Moderate);
  CHECK(labels.at("b") == ProgressionLabel::Stable);
  CHECK(labels.at("c") == ProgressionLabel::Severe);
  CHECK(labels.at("d") == ProgressionLabel::Mild);

  SUBCASE("ties broken by smaller baseline") {
    ClusterModel t;
    t.k = 4;
    t.barycenters = {{4, 4, 5}, {0, 0, 1}, {0, 3, 9}, {1, 6, 13}};
    t.assignments = {{"hi", 0}, {"lo", 1}, {"m", 2}, {"s", 3}};
    const auto lab = assign_labels(t);
    // equal net change 1.0; baseline 0 sorts before baseline 4
    CHECK(lab.at("lo") == ProgressionLabel::Stable);
    CHECK(lab.at("hi") == ProgressionLabel::Mild);
  }
  SUBCASE("k != 4 rejected") {
    ClusterModel bad;
    bad.k = 3;
    bad.barycenters = {{0}, {1}, {2}};
    CHECK_THROWS_AS(assign_labels(bad), ArgumentError);
  }
}
