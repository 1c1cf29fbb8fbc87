#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "declineforge/volume.hpp"

namespace df {

// Progression archetypes, ordered by increasing decline rate.
enum class Group : int { Stable = 0, Mild = 1, Moderate = 2, Severe = 3 };

inline const char* group_name(int g) {
  static const char* names[4] = {"Stable", "Mild", "Moderate", "Severe"};
  return names[g];
}

// One subject's CDR-SB time series. Times are months since baseline,
// strictly increasing; values lie in [0, 18] on a 0.5 grid.
struct Trajectory {
  std::string subject_id;
  std::vector<double> times;
  std::vector<double> values;
};

// Wide per-subject feature vectors, grouped. NaN marks a missing entry.
struct TabularRecord {
  std::string subject_id;
  std::map<std::string, std::vector<double>> groups;
};

struct FeatureGroupSpec {
  std::string name;
  std::vector<std::string> features;
};

// The five ADNI-Merge-style feature groups, fixed order and arity.
const std::vector<FeatureGroupSpec>& feature_groups();

struct CohortSpec {
  int n_subjects = 400;
  std::array<double, 4> group_proportions{0.10, 0.33, 0.29, 0.28};
  int visit_count_min = 3;
  int visit_count_max = 10;
  double visit_spacing_months = 6.0;
  double visit_jitter_months = 1.0;

  // trajectory noise knobs
  double traj_noise_sigma = 0.3;
  double traj_baseline_jitter = 0.5;

  // tabular knobs
  double tabular_signal = 1.0;  // scales all group-conditional mean shifts
  double tabular_noise_sigma = 1.0;
  double missing_rate = 0.05;

  // volume knobs
  std::array<int, 3> volume_dims{32, 32, 32};
  double volume_noise_sigma = 4.0;
  double volume_shape_jitter = 0.4;  // voxels, on ellipsoid radii

  uint64_t seed = 42;

  void validate() const;  // throws ConfigError
};

struct SplitSpec {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::string strata_key;
};

// Archetype parameters (exposed so tests can check planted structure).
double archetype_slope(int group);          // CDR-SB points per month
double archetype_baseline(int group);       // CDR-SB at month 0
double ventricle_radius(int group, const CohortSpec& spec);  // voxels

std::vector<std::pair<Trajectory, int>> gen_trajectories(const CohortSpec& spec);
std::vector<TabularRecord> gen_tabular(const std::vector<int>& groups,
                                       const CohortSpec& spec);
std::vector<Volume> gen_volumes(const std::vector<int>& groups,
                                const CohortSpec& spec);

// Analytic cavity mask for a subject with no shape jitter; 1 inside the
// planted ventricle, 0 elsewhere.
Volume ventricle_mask(int group, const CohortSpec& spec);

// Stratified by age quartile x sex x group; round-half-up test allocation
// per stratum.
SplitSpec stratified_split(const std::vector<TabularRecord>& records,
                           const std::vector<int>& groups, double ratio,
                           uint64_t seed);

}  // namespace df
