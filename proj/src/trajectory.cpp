#include "declineforge/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "declineforge/error.hpp"
#include "declineforge/rng.hpp"

namespace df {

namespace {

double point_cost(double a, double b, DtwCost cost) {
  const double d = a - b;
  return cost == DtwCost::Squared ? d * d : std::abs(d);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Full DP matrix; series here are short (clinic visit counts).
std::vector<double> dtw_matrix(const std::vector<double>& a,
                               const std::vector<double>& b,
                               const DtwConfig& cfg) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  std::vector<double> D(static_cast<size_t>(n + 1) * (m + 1), kInf);
  const auto at = [&](int i, int j) -> double& {
    return D[static_cast<size_t>(i) * (m + 1) + j];
  };
  at(0, 0) = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      if (cfg.band_radius && std::abs(i - j) > *cfg.band_radius) continue;
      const double best =
          std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      if (best == kInf) continue;
      at(i, j) = point_cost(a[i - 1], b[j - 1], cfg.cost) + best;
    }
  }
  return D;
}

}  // namespace

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                    const DtwConfig& cfg) {
  if (a.empty() || b.empty())
    throw ArgumentError("dtw: empty series");
  if (cfg.band_radius &&
      *cfg.band_radius < std::abs(static_cast<int>(a.size()) -
                                  static_cast<int>(b.size())))
    throw ArgumentError("dtw: band radius " +
                        std::to_string(*cfg.band_radius) +
                        " too narrow for length difference");
  const auto D = dtw_matrix(a, b, cfg);
  return D[static_cast<size_t>(a.size()) * (b.size() + 1) + b.size()];
}

namespace {

// Optimal alignment as (a index, b index) pairs; ties prefer the diagonal.
std::vector<std::pair<int, int>> dtw_path(const std::vector<double>& a,
                                          const std::vector<double>& b,
                                          const DtwConfig& cfg) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const auto D = dtw_matrix(a, b, cfg);
  const auto at = [&](int i, int j) {
    return D[static_cast<size_t>(i) * (m + 1) + j];
  };
  std::vector<std::pair<int, int>> path;
  int i = n, j = m;
  while (i > 0 && j > 0) {
    path.emplace_back(i - 1, j - 1);
    const double diag = at(i - 1, j - 1);
    const double up = at(i - 1, j);
    const double left = at(i, j - 1);
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<double> resample_linear(const std::vector<double>& s, int length) {
  if (static_cast<int>(s.size()) == length) return s;
  std::vector<double> out(length);
  if (s.size() == 1) {
    std::fill(out.begin(), out.end(), s[0]);
    return out;
  }
  for (int i = 0; i < length; ++i) {
    const double pos = length == 1
                           ? 0.0
                           : static_cast<double>(i) * (s.size() - 1) / (length - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min<int>(lo + 1, static_cast<int>(s.size()) - 1);
    out[i] = s[lo] + (pos - lo) * (s[hi] - s[lo]);
  }
  return out;
}

}  // namespace

std::vector<double> dba_barycenter(
    const std::vector<std::vector<double>>& members, int length,
    int iterations, const DtwConfig& cfg) {
  if (members.empty()) throw ArgumentError("dba: no members");
  if (length < 1) throw ArgumentError("dba: length < 1");

  // medoid init: member minimizing summed DTW distance to the others
  int medoid = 0;
  if (members.size() > 1) {
    double best = kInf;
    for (size_t i = 0; i < members.size(); ++i) {
      double sum = 0;
      for (size_t j = 0; j < members.size(); ++j)
        if (i != j) sum += dtw_distance(members[i], members[j], cfg);
      if (sum < best) {
        best = sum;
        medoid = static_cast<int>(i);
      }
    }
  }
  std::vector<double> bary = resample_linear(members[medoid], length);

  for (int it = 0; it < iterations; ++it) {
    std::vector<double> sum(length, 0.0);
    std::vector<int> count(length, 0);
    for (const auto& mem : members) {
      for (const auto& [mi, bi] : dtw_path(mem, bary, cfg)) {
        sum[bi] += mem[mi];
        ++count[bi];
      }
    }
    double max_change = 0.0;
    for (int i = 0; i < length; ++i) {
      if (count[i] == 0) continue;  // index unreached; keep previous value
      const double next = sum[i] / count[i];
      max_change = std::max(max_change, std::abs(next - bary[i]));
      bary[i] = next;
    }
    if (max_change <= 1e-9) break;
  }
  return bary;
}

namespace {

int label_rank_permutation(const std::vector<std::vector<double>>& barycenters,
                           std::vector<int>* out_order) {
  // rank clusters by net change, ties by baseline value
  std::vector<int> idx(barycenters.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double na = barycenters[a].back() - barycenters[a].front();
    const double nb = barycenters[b].back() - barycenters[b].front();
    if (na != nb) return na < nb;
    return barycenters[a].front() < barycenters[b].front();
  });
  out_order->assign(barycenters.size(), 0);
  for (size_t rank = 0; rank < idx.size(); ++rank)
    (*out_order)[idx[rank]] = static_cast<int>(rank);
  return 0;
}

struct RestartResult {
  std::vector<int> assignment;
  std::vector<std::vector<double>> barycenters;
  double inertia = kInf;
};

RestartResult run_restart(const std::vector<const std::vector<double>*>& series,
                          int k, int max_iter, uint64_t seed,
                          const DtwConfig& cfg) {
  const int n = static_cast<int>(series.size());
  Rng rng(seed);

  // k-means++ seeding with D^2 sampling under DTW distance
  std::vector<int> centers;
  std::vector<bool> chosen(n, false);
  const int first = static_cast<int>(rng.uniform_int(0, n - 1));
  centers.push_back(first);
  chosen[first] = true;
  std::vector<double> mind(n, kInf);
  while (static_cast<int>(centers.size()) < k) {
    const auto& last = *series[centers.back()];
    for (int i = 0; i < n; ++i)
      mind[i] = std::min(mind[i], dtw_distance(*series[i], last, cfg));
    double total = 0;
    for (int i = 0; i < n; ++i)
      if (!chosen[i]) total += mind[i] * mind[i];
    int pick = -1;
    if (total > 0) {
      double r = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        r -= mind[i] * mind[i];
        if (r <= 0) {
          pick = i;
          break;
        }
      }
    }
    if (pick < 0) {
      // all remaining points coincide with a center; take the first unchosen
      for (int i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    centers.push_back(pick);
    chosen[pick] = true;
  }

  std::vector<std::vector<double>> barys;
  barys.reserve(k);
  for (int c : centers) barys.push_back(*series[c]);

  std::vector<int> assign(n, -1);
  std::vector<double> dist_to_bary(n, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<int> next(n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      double best = kInf;
      int bc = 0;
      for (int c = 0; c < k; ++c) {
        const double d = dtw_distance(*series[i], barys[c], cfg);
        if (d < best) {
          best = d;
          bc = c;
        }
      }
      next[i] = bc;
      dist_to_bary[i] = best;
    }

    // empty-cluster repair: reseed with the point farthest from its barycenter
    for (int c = 0; c < k; ++c) {
      if (std::find(next.begin(), next.end(), c) != next.end()) continue;
      int far = static_cast<int>(
          std::max_element(dist_to_bary.begin(), dist_to_bary.end()) -
          dist_to_bary.begin());
      next[far] = c;
      dist_to_bary[far] = 0.0;
    }

    const bool stable = next == assign;
    assign = next;

    for (int c = 0; c < k; ++c) {
      std::vector<std::vector<double>> members;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) members.push_back(*series[i]);
      std::vector<size_t> lens;
      for (const auto& m : members) lens.push_back(m.size());
      std::sort(lens.begin(), lens.end());
      const int length = static_cast<int>(lens[lens.size() / 2]);
      barys[c] = dba_barycenter(members, length, 10, cfg);
    }
    if (stable) break;
  }

  RestartResult res;
  res.assignment = assign;
  res.barycenters = barys;
  res.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    res.inertia += dtw_distance(*series[i], barys[assign[i]], cfg);
  return res;
}

}  // namespace

ClusterModel kmeans_dtw(const std::vector<Trajectory>& trajectories, int k,
                        int restarts, int max_iter, uint64_t seed,
                        const DtwConfig& cfg) {
  if (k < 1) throw ArgumentError("kmeans: k < 1");
  if (static_cast<int>(trajectories.size()) < k)
    throw ArgumentError("kmeans: fewer trajectories than clusters");
  if (restarts < 1) throw ArgumentError("kmeans: restarts < 1");

  std::vector<const std::vector<double>*> series;
  series.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    if (t.values.empty()) throw ArgumentError("kmeans: empty trajectory");
    series.push_back(&t.values);
  }

  RestartResult best;
  for (int r = 0; r < restarts; ++r) {
    RestartResult res =
        run_restart(series, k, max_iter, Rng::derive(seed, 9000 + r), cfg);
    if (res.inertia < best.inertia) best = std::move(res);
  }

  ClusterModel model;
  model.k = k;
  model.barycenters = best.barycenters;
  model.inertia = best.inertia;
  for (size_t i = 0; i < trajectories.size(); ++i)
    model.assignments[trajectories[i].subject_id] = best.assignment[i];
  model.label_order.resize(k);
  if (k == 4) {
    label_rank_permutation(model.barycenters, &model.label_order);
  } else {
    std::iota(model.label_order.begin(), model.label_order.end(), 0);
  }
  return model;
}

std::vector<std::pair<int, double>> elbow_curve(
    const std::vector<Trajectory>& trajectories, int k_max, int restarts,
    uint64_t seed, const DtwConfig& cfg) {
  if (k_max < 1) throw ArgumentError("elbow: k_max < 1");
  std::vector<std::pair<int, double>> curve;
  for (int k = 1; k <= k_max; ++k) {
    const auto model = kmeans_dtw(trajectories, k, restarts, 50, seed, cfg);
    curve.emplace_back(k, model.inertia);
  }
  return curve;
}

std::map<std::string, ProgressionLabel> assign_labels(const ClusterModel& model) {
  if (model.k != 4)
    throw ArgumentError("assign_labels: only k=4 supported, got k=" +
                        std::to_string(model.k));
  std::vector<int> order;
  label_rank_permutation(model.barycenters, &order);
  std::map<std::string, ProgressionLabel> labels;
  for (const auto& [id, cluster] : model.assignments)
    labels[id] = static_cast<ProgressionLabel>(order[cluster]);
  return labels;
}

}  // namespace df
