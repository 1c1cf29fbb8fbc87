#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "declineforge/volume.hpp"

namespace df {

struct PcaModel {
  std::vector<double> mean;                  // length p
  std::vector<std::vector<double>> components;  // m rows of length p
  std::vector<double> explained_variance_ratio;  // all p ratios
  int retained = 0;
  bool zero_variance = false;  // warning status for degenerate input
};

// Covariance eigendecomposition (divisor n-1); retains the smallest m whose
// cumulative ratio reaches variance_target, capped by max_components. Sign
// convention: each component's largest-magnitude entry is positive.
PcaModel pca_fit(const std::vector<std::vector<double>>& X,
                 double variance_target,
                 std::optional<int> max_components = std::nullopt);

std::vector<std::vector<double>> pca_transform(
    const PcaModel& model, const std::vector<std::vector<double>>& X);

// Per-class one-vs-rest Mann-Whitney AUC with midrank ties; nullopt when the
// class is absent.
std::array<std::optional<double>, 4> auc_ovr(
    const std::vector<std::array<double, 4>>& scores,
    const std::vector<int>& labels);

// Uniform-window SSIM averaged over all valid window positions.
// L defaults to the data range of the pair when <= 0.
double ssim3d(const Volume& a, const Volume& b, int window = 7, double L = 0.0);

struct MetricCell {
  std::optional<double> mean;
  std::optional<double> stddev;
  std::string formatted() const;  // "0.71 ± 0.01" or "n/a"
};

struct MetricReport {
  std::array<MetricCell, 4> per_class;  // Stable, Mild, Moderate, Severe
  int repetitions = 0;
};

MetricReport aggregate_runs(
    const std::vector<std::array<std::optional<double>, 4>>& runs);

}  // namespace df
