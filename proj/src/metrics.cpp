#include "declineforge/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "declineforge/error.hpp"

namespace df {

PcaModel pca_fit(const std::vector<std::vector<double>>& X,
                 double variance_target, std::optional<int> max_components) {
  const int n = static_cast<int>(X.size());
  if (n < 2) throw ArgumentError("pca_fit: need at least 2 samples");
  const int p = static_cast<int>(X[0].size());
  for (const auto& row : X)
    if (static_cast<int>(row.size()) != p)
      throw ArgumentError("pca_fit: ragged input");
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw ArgumentError("pca_fit: variance_target must be in (0,1]");

  Eigen::MatrixXd M(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) M(i, j) = X[i][j];
  const Eigen::RowVectorXd mean = M.colwise().mean();
  M.rowwise() -= mean;
  const Eigen::MatrixXd cov = (M.transpose() * M) / (n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  // ascending eigenvalues from Eigen; reverse to descending
  Eigen::VectorXd evals = es.eigenvalues().reverse();
  Eigen::MatrixXd evecs = es.eigenvectors().rowwise().reverse();

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + p);
  const double total = std::max(0.0, evals.sum());
  if (total <= 0.0) {
    model.zero_variance = true;
    model.retained = 0;
    model.explained_variance_ratio.assign(p, 0.0);
    return model;
  }
  model.explained_variance_ratio.resize(p);
  for (int j = 0; j < p; ++j)
    model.explained_variance_ratio[j] = std::max(0.0, evals(j)) / total;

  int m = 0;
  double cum = 0.0;
  while (m < p && cum < variance_target - 1e-12) {
    cum += model.explained_variance_ratio[m];
    ++m;
  }
  if (max_components) m = std::min(m, *max_components);
  model.retained = m;
  model.components.resize(m, std::vector<double>(p));
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd v = evecs.col(j);
    int argmax = 0;
    for (int i = 1; i < p; ++i)
      if (std::abs(v(i)) > std::abs(v(argmax))) argmax = i;
    if (v(argmax) < 0) v = -v;
    for (int i = 0; i < p; ++i) model.components[j][i] = v(i);
  }
  return model;
}

std::vector<std::vector<double>> pca_transform(
    const PcaModel& model, const std::vector<std::vector<double>>& X) {
  const int p = static_cast<int>(model.mean.size());
  std::vector<std::vector<double>> out;
  out.reserve(X.size());
  for (const auto& row : X) {
    if (static_cast<int>(row.size()) != p)
      throw ArgumentError("pca_transform: feature arity mismatch (expected " +
                          std::to_string(p) + ", got " +
                          std::to_string(row.size()) + ")");
    std::vector<double> score(model.retained, 0.0);
    for (int j = 0; j < model.retained; ++j)
      for (int i = 0; i < p; ++i)
        score[j] += (row[i] - model.mean[i]) * model.components[j][i];
    out.push_back(std::move(score));
  }
  return out;
}

namespace {

// Mann-Whitney AUC via midranks.
double rank_auc(const std::vector<double>& scores,
                const std::vector<bool>& positive) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
    i = j + 1;
  }
  double rank_sum = 0;
  size_t n_pos = 0;
  for (size_t k = 0; k < n; ++k)
    if (positive[k]) {
      rank_sum += rank[k];
      ++n_pos;
    }
  const size_t n_neg = n - n_pos;
  const double u = rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * n_neg);
}

}  // namespace

std::array<std::optional<double>, 4> auc_ovr(
    const std::vector<std::array<double, 4>>& scores,
    const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ArgumentError("auc_ovr: scores/labels size mismatch");
  for (int y : labels)
    if (y < 0 || y > 3) throw ArgumentError("auc_ovr: label out of range");

  std::array<std::optional<double>, 4> out;
  for (int c = 0; c < 4; ++c) {
    std::vector<double> col;
    std::vector<bool> pos;
    size_t n_pos = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      col.push_back(scores[i][c]);
      pos.push_back(labels[i] == c);
      if (labels[i] == c) ++n_pos;
    }
    if (n_pos == 0 || n_pos == scores.size())
      out[c] = std::nullopt;  // undefined: class absent (or no negatives)
    else
      out[c] = rank_auc(col, pos);
  }
  return out;
}

double ssim3d(const Volume& a, const Volume& b, int window, double L) {
  if (a.dims != b.dims) throw ShapeError("ssim3d: dimension mismatch");
  if (window % 2 == 0 || window < 1)
    throw ArgumentError("ssim3d: window must be odd and positive");
  for (int i = 0; i < 3; ++i)
    if (window > a.dims[i])
      throw ArgumentError("ssim3d: window exceeds volume dimension");

  if (L <= 0.0) {
    float lo = a.data[0], hi = a.data[0];
    for (float v : a.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (float v : b.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    L = hi - lo;
    if (L <= 0.0) L = 1.0;
  }
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  const int w3 = window * window * window;

  double acc = 0.0;
  long count = 0;
  const auto& d = a.dims;
#pragma omp parallel for reduction(+ : acc, count) schedule(static)
  for (int z = 0; z <= d[2] - window; ++z)
    for (int y = 0; y <= d[1] - window; ++y)
      for (int x = 0; x <= d[0] - window; ++x) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dz = 0; dz < window; ++dz)
          for (int dy = 0; dy < window; ++dy)
            for (int dx = 0; dx < window; ++dx) {
              const double va = a.at(x + dx, y + dy, z + dz);
              const double vb = b.at(x + dx, y + dy, z + dz);
              sa += va;
              sb += vb;
              saa += va * va;
              sbb += vb * vb;
              sab += va * vb;
            }
        const double mu_a = sa / w3, mu_b = sb / w3;
        const double var_a = saa / w3 - mu_a * mu_a;
        const double var_b = sbb / w3 - mu_b * mu_b;
        const double cov = sab / w3 - mu_a * mu_b;
        const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
        const double den =
            (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
        acc += num / den;
        ++count;
      }
  return acc / count;
}

std::string MetricCell::formatted() const {
  if (!mean) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", *mean,
                stddev.value_or(0.0));
  return buf;
}

MetricReport aggregate_runs(
    const std::vector<std::array<std::optional<double>, 4>>& runs) {
  if (runs.empty()) throw ArgumentError("aggregate_runs: no runs");
  MetricReport report;
  report.repetitions = static_cast<int>(runs.size());
  for (int c = 0; c < 4; ++c) {
    const bool defined0 = runs[0][c].has_value();
    std::vector<double> vals;
    for (const auto& run : runs) {
      if (run[c].has_value() != defined0)
        throw ArgumentError("aggregate_runs: inconsistent class sets");
      if (run[c]) vals.push_back(*run[c]);
    }
    if (vals.empty()) continue;
    const double mean =
        std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
    double sd = 0.0;
    if (vals.size() > 1) {
      double ss = 0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      sd = std::sqrt(ss / (vals.size() - 1));
    }
    report.per_class[c].mean = mean;
    report.per_class[c].stddev = sd;
  }
  return report;
}

}  // namespace df
