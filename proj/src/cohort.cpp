#include "declineforge/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "declineforge/error.hpp"
#include "declineforge/rng.hpp"

namespace df {

namespace {

constexpr double kBrainIntensity = 150.0;
constexpr double kCavityIntensity = 30.0;
constexpr double kSkullIntensity = 220.0;

constexpr double kSlopes[4] = {0.0, 0.05, 0.12, 0.25};
// Baselines keep the four archetype value bands separated over a 3-10 visit
// follow-up so DTW clustering can tell a short steep decline from a long
// shallow one: stable sits flat between the mild band and the moderate band,
// and the 18-point ceiling keeps long severe courses compact.
constexpr double kBaselines[4] = {4.5, 0.5, 7.0, 12.0};

// Ventricle radius as a fraction of the x dimension. Stable is planted far
// from the progressive groups so imaging carries a strong stable-vs-rest
// signal; the progressive radii sit close together.
constexpr double kVentricleFrac[4] = {0.06, 0.16, 0.175, 0.19};

struct GroupEffect {
  std::vector<double> base;
  std::vector<double> dir;       // mean shift per unit effect
  std::vector<double> noise;     // per-feature sigma multiplier
  std::array<double, 4> effect;  // per-group effect size
};

const std::map<std::string, GroupEffect>& effects() {
  static const std::map<std::string, GroupEffect> e = {
      {"cognitive",
       {{10, 28, 40, 2, 26},
        {6, -4, -8, 5, -4},
        {3, 2, 5, 2, 2},
        {0.0, 0.15, 0.25, 1.0}}},
      {"csf",
       {{800, 250, 25},
        {-150, 60, 8},
        {120, 50, 6},
        {0.0, 0.3, 0.5, 0.7}}},
      {"pet",
       {{1.2, 1.1, 1.4, 1.2},
        {-0.15, 0.12, 0.1, 0.1},
        {0.12, 0.1, 0.1, 0.1},
        {0.0, 0.4, 0.6, 0.8}}},
      {"volumetrics",
       {{7000, 3800, 20000, 17000, 30000},
        {-600, -350, -1200, -900, 4000},
        {350, 250, 900, 700, 2500},
        {0.0, 0.4, 0.6, 1.0}}},
  };
  return e;
}

std::string subject_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%04d", i);
  return buf;
}

std::vector<int> assign_groups(const CohortSpec& spec) {
  // largest-remainder allocation, then a seeded shuffle
  const int n = spec.n_subjects;
  std::array<int, 4> counts{};
  std::array<double, 4> rem{};
  int total = 0;
  for (int g = 0; g < 4; ++g) {
    const double want = spec.group_proportions[g] * n;
    counts[g] = static_cast<int>(std::floor(want));
    rem[g] = want - counts[g];
    total += counts[g];
  }
  while (total < n) {
    const int g = static_cast<int>(std::max_element(rem.begin(), rem.end()) -
                                   rem.begin());
    ++counts[g];
    rem[g] = -1;
    ++total;
  }
  std::vector<int> groups;
  groups.reserve(n);
  for (int g = 0; g < 4; ++g) groups.insert(groups.end(), counts[g], g);
  Rng rng(Rng::derive(spec.seed, 7));
  for (int i = n - 1; i > 0; --i)
    std::swap(groups[i], groups[rng.uniform_int(0, i)]);
  return groups;
}

}  // namespace

const std::vector<FeatureGroupSpec>& feature_groups() {
  static const std::vector<FeatureGroupSpec> g = {
      {"cognitive", {"ADAS", "MMSE", "RAVLT", "FAQ", "MOCA"}},
      {"csf", {"ABETA", "TAU", "PTAU"}},
      {"pet", {"FDG", "AV45", "PIB", "FBB"}},
      {"risk", {"AGE", "SEX", "EDUCATION", "APOE4"}},
      {"volumetrics",
       {"HIPPOCAMPUS", "ENTORHINAL", "MIDTEMP", "FUSIFORM", "VENTRICLES"}},
  };
  return g;
}

void CohortSpec::validate() const {
  if (n_subjects < 4)
    throw ConfigError("cohort: n_subjects must be at least the group count");
  double sum = 0;
  for (double p : group_proportions) {
    if (p < 0) throw ConfigError("cohort: negative group proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("cohort: group proportions must sum to 1");
  for (int d : volume_dims)
    if (d < 16) throw ConfigError("cohort: volume dims must be >= 16");
  if (visit_count_min < 2 || visit_count_max < visit_count_min)
    throw ConfigError("cohort: bad visit count range");
}

double archetype_slope(int group) { return kSlopes[group]; }
double archetype_baseline(int group) { return kBaselines[group]; }

double ventricle_radius(int group, const CohortSpec& spec) {
  return kVentricleFrac[group] * spec.volume_dims[0];
}

std::vector<std::pair<Trajectory, int>> gen_trajectories(
    const CohortSpec& spec) {
  spec.validate();
  const auto groups = assign_groups(spec);
  std::vector<std::pair<Trajectory, int>> out;
  out.reserve(spec.n_subjects);
  for (int i = 0; i < spec.n_subjects; ++i) {
    const int g = groups[i];
    Rng rng(Rng::derive(spec.seed, 1000000 + i));
    const int visits =
        static_cast<int>(rng.uniform_int(spec.visit_count_min, spec.visit_count_max));
    double baseline =
        kBaselines[g] + spec.traj_baseline_jitter * rng.normal();
    baseline = std::max(0.0, baseline);

    Trajectory t;
    t.subject_id = subject_id(i);
    double month = 0.0;
    for (int v = 0; v < visits; ++v) {
      if (v > 0) {
        double step = spec.visit_spacing_months +
                      spec.visit_jitter_months * rng.normal();
        month += std::max(0.5, step);
      }
      double score =
          baseline + kSlopes[g] * month + spec.traj_noise_sigma * rng.normal();
      score = std::clamp(score, 0.0, 18.0);
      score = std::round(score * 2.0) / 2.0;  // CDR-SB half-point grid
      t.times.push_back(month);
      t.values.push_back(score);
    }
    out.emplace_back(std::move(t), g);
  }
  return out;
}

std::vector<TabularRecord> gen_tabular(const std::vector<int>& groups,
                                       const CohortSpec& spec) {
  spec.validate();
  std::vector<TabularRecord> out;
  out.reserve(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) {
    const int g = groups[i];
    Rng rng(Rng::derive(spec.seed, 2000000 + i));
    TabularRecord rec;
    rec.subject_id = subject_id(static_cast<int>(i));

    for (const auto& fg : feature_groups()) {
      std::vector<double> vals;
      if (fg.name == "risk") {
        const double age = 73.0 + 0.8 * g * spec.tabular_signal +
                           6.0 * rng.normal();
        const double sex = rng.uniform() < 0.55 ? 1.0 : 0.0;
        const double edu = 16.0 - 0.2 * g * spec.tabular_signal +
                           2.5 * rng.normal();
        const double p_apoe =
            std::clamp(0.3 + 0.08 * g * spec.tabular_signal, 0.0, 1.0);
        double apoe = 0.0;
        if (rng.uniform() < p_apoe) apoe += 1.0;
        if (rng.uniform() < p_apoe * 0.4) apoe += 1.0;
        vals = {age, sex, edu, apoe};
      } else {
        const auto& eff = effects().at(fg.name);
        const double e = eff.effect[g] * spec.tabular_signal;
        for (size_t j = 0; j < fg.features.size(); ++j) {
          vals.push_back(eff.base[j] + e * eff.dir[j] +
                         spec.tabular_noise_sigma * eff.noise[j] * rng.normal());
        }
      }
      // AGE and SEX stay present: they are stratification variables.
      for (size_t j = 0; j < vals.size(); ++j) {
        const bool protected_col =
            fg.name == "risk" && (fg.features[j] == "AGE" || fg.features[j] == "SEX");
        if (!protected_col && rng.uniform() < spec.missing_rate)
          vals[j] = std::numeric_limits<double>::quiet_NaN();
      }
      rec.groups[fg.name] = std::move(vals);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

// Normalized ellipsoid distance; <= 1 means inside.
double rho(double x, double y, double z, const std::array<double, 3>& c,
           const std::array<double, 3>& r) {
  const double dx = (x - c[0]) / r[0];
  const double dy = (y - c[1]) / r[1];
  const double dz = (z - c[2]) / r[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Volume render_phantom(const CohortSpec& spec, double cavity_r,
                      double outer_jit, double noise_sigma, Rng* rng) {
  const auto& d = spec.volume_dims;
  Volume v(d[0], d[1], d[2]);
  const std::array<double, 3> center = {(d[0] - 1) / 2.0, (d[1] - 1) / 2.0,
                                        (d[2] - 1) / 2.0};
  const std::array<double, 3> outer = {0.42 * d[0] + outer_jit,
                                       0.45 * d[1] + outer_jit,
                                       0.42 * d[2] + outer_jit};
  const std::array<double, 3> cavity = {cavity_r, cavity_r, 1.3 * cavity_r};
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        const double ro = rho(x, y, z, center, outer);
        double val = 0.0;
        if (ro <= 1.0) {
          val = ro > 0.88 ? kSkullIntensity : kBrainIntensity;
          // gentle radial shading for texture
          if (ro <= 0.88) val += 15.0 * std::cos(2.5 * ro);
          if (rho(x, y, z, center, cavity) <= 1.0) val = kCavityIntensity;
        }
        if (noise_sigma > 0 && rng) val += noise_sigma * rng->normal();
        v.at(x, y, z) = static_cast<float>(std::clamp(val, 0.0, 255.0));
      }
  return v;
}

}  // namespace

std::vector<Volume> gen_volumes(const std::vector<int>& groups,
                                const CohortSpec& spec) {
  spec.validate();
  std::vector<Volume> out;
  out.reserve(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) {
    Rng rng(Rng::derive(spec.seed, 3000000 + i));
    const double cavity_jit = spec.volume_shape_jitter * rng.normal();
    const double outer_jit = spec.volume_shape_jitter * rng.normal();
    const double cavity_r =
        std::max(1.0, ventricle_radius(groups[i], spec) + cavity_jit);
    out.push_back(
        render_phantom(spec, cavity_r, outer_jit, spec.volume_noise_sigma, &rng));
  }
  return out;
}

Volume ventricle_mask(int group, const CohortSpec& spec) {
  const auto& d = spec.volume_dims;
  Volume m(d[0], d[1], d[2]);
  const std::array<double, 3> center = {(d[0] - 1) / 2.0, (d[1] - 1) / 2.0,
                                        (d[2] - 1) / 2.0};
  const double r = ventricle_radius(group, spec);
  const std::array<double, 3> cavity = {r, r, 1.3 * r};
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x)
        m.at(x, y, z) = rho(x, y, z, center, cavity) <= 1.0 ? 1.0f : 0.0f;
  return m;
}

SplitSpec stratified_split(const std::vector<TabularRecord>& records,
                           const std::vector<int>& groups, double ratio,
                           uint64_t seed) {
  if (records.empty()) throw ConfigError("split: empty cohort");
  if (records.size() != groups.size())
    throw ArgumentError("split: records/groups size mismatch");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ArgumentError("split: ratio must be in (0,1)");

  std::vector<double> ages(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const auto it = records[i].groups.find("risk");
    if (it == records[i].groups.end() || it->second.size() < 2 ||
        !std::isfinite(it->second[0]) || !std::isfinite(it->second[1]))
      throw ConfigError("split: subject " + records[i].subject_id +
                        " lacks strata variables (age/sex)");
    ages[i] = it->second[0];
  }
  std::vector<double> sorted_ages = ages;
  std::sort(sorted_ages.begin(), sorted_ages.end());
  const auto quartile = [&](double q) {
    return sorted_ages[std::min(sorted_ages.size() - 1,
                                static_cast<size_t>(q * sorted_ages.size()))];
  };
  const double q1 = quartile(0.25), q2 = quartile(0.5), q3 = quartile(0.75);
  const auto age_bin = [&](double a) {
    if (a < q1) return 0;
    if (a < q2) return 1;
    if (a < q3) return 2;
    return 3;
  };

  std::map<int, std::vector<size_t>> strata;
  for (size_t i = 0; i < records.size(); ++i) {
    const double sex = records[i].groups.at("risk")[1];
    const int key = age_bin(ages[i]) * 8 + (sex > 0.5 ? 4 : 0) + groups[i];
    strata[key].push_back(i);
  }

  SplitSpec split;
  split.strata_key = "age_quartile x sex x group";
  for (auto& [key, members] : strata) {
    Rng rng(Rng::derive(seed, 5000000 + key));
    for (size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.uniform_int(0, i - 1)]);
    const size_t n_test =
        static_cast<size_t>(std::floor(members.size() * ratio + 0.5));
    for (size_t i = 0; i < members.size(); ++i) {
      auto& dst = i < n_test ? split.test_ids : split.train_ids;
      dst.push_back(records[members[i]].subject_id);
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

}  // namespace df
