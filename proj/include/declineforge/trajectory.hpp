#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "declineforge/cohort.hpp"

namespace df {

enum class DtwCost { Squared, Absolute };

struct DtwConfig {
  DtwCost cost = DtwCost::Squared;
  std::optional<int> band_radius;  // Sakoe-Chiba; none = unconstrained
};

enum class ProgressionLabel : int { Stable = 0, Mild = 1, Moderate = 2, Severe = 3 };

struct ClusterModel {
  int k = 0;
  std::vector<std::vector<double>> barycenters;
  std::map<std::string, int> assignments;  // subject_id -> cluster index
  double inertia = 0.0;
  // cluster index -> label; identity-sized permutation, only meaningful k=4
  std::vector<int> label_order;
};

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                    const DtwConfig& cfg = {});

std::vector<double> dba_barycenter(
    const std::vector<std::vector<double>>& members, int length,
    int iterations, const DtwConfig& cfg = {});

ClusterModel kmeans_dtw(const std::vector<Trajectory>& trajectories, int k,
                        int restarts, int max_iter, uint64_t seed,
                        const DtwConfig& cfg = {});

std::vector<std::pair<int, double>> elbow_curve(
    const std::vector<Trajectory>& trajectories, int k_max, int restarts,
    uint64_t seed, const DtwConfig& cfg = {});

// Orders the four clusters by barycenter net change (last - first value);
// ties broken by smaller baseline first. Requires k == 4.
std::map<std::string, ProgressionLabel> assign_labels(const ClusterModel& model);

}  // namespace df
