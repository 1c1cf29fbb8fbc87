#include "declineforge/augment.hpp"

#include <algorithm>
#include <cmath>

#include "declineforge/error.hpp"
#include "declineforge/rng.hpp"

namespace df {

void AugmentConfig::validate() const {
  const auto check_p = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(std::string("augment: probability out of [0,1]: ") +
                        name);
  };
  check_p(p_noise, "p_noise");
  check_p(p_bias, "p_bias");
  check_p(p_ghost, "p_ghost");
  check_p(p_flip, "p_flip");
  check_p(p_rigid, "p_rigid");
  check_p(p_gamma, "p_gamma");
  const auto check_range = [](const std::array<double, 2>& r,
                              const char* name) {
    if (!(std::isfinite(r[0]) && std::isfinite(r[1]) && r[0] <= r[1]))
      throw ConfigError(std::string("augment: bad range: ") + name);
  };
  check_range(noise_sigma_range, "noise_sigma_range");
  check_range(bias_coeff_range, "bias_coeff_range");
  check_range(ghost_intensity_range, "ghost_intensity_range");
  check_range(gamma_range, "gamma_range");
  if (bias_field_order < 0) throw ConfigError("augment: bias_field_order < 0");
  if (ghost_count < 1) throw ConfigError("augment: ghost_count < 1");
}

namespace {

void apply_noise(Volume& v, double sigma, Rng& rng) {
  for (float& x : v.data) x += static_cast<float>(sigma * rng.normal());
}

void apply_bias(Volume& v, int order, const std::array<double, 2>& crange,
                Rng& rng) {
  // monomials x^a y^b z^c with a+b+c <= order, coordinates in [-1, 1]
  std::vector<std::array<int, 3>> monos;
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b)
      for (int c = 0; a + b + c <= order; ++c)
        if (a + b + c > 0) monos.push_back({a, b, c});
  std::vector<double> coeff(monos.size());
  for (double& cv : coeff) cv = rng.uniform(crange[0], crange[1]);

  const auto& d = v.dims;
  for (int z = 0; z < d[2]; ++z) {
    const double zn = d[2] > 1 ? 2.0 * z / (d[2] - 1) - 1.0 : 0.0;
    for (int y = 0; y < d[1]; ++y) {
      const double yn = d[1] > 1 ? 2.0 * y / (d[1] - 1) - 1.0 : 0.0;
      for (int x = 0; x < d[0]; ++x) {
        const double xn = d[0] > 1 ? 2.0 * x / (d[0] - 1) - 1.0 : 0.0;
        double p = 0.0;
        for (size_t m = 0; m < monos.size(); ++m)
          p += coeff[m] * std::pow(xn, monos[m][0]) *
               std::pow(yn, monos[m][1]) * std::pow(zn, monos[m][2]);
        v.at(x, y, z) *= static_cast<float>(std::exp(p));
      }
    }
  }
}

void apply_ghost(Volume& v, int ghost_count, double alpha, int axis) {
  const auto& d = v.dims;
  const int shift = std::max(1, d[axis] / ghost_count);
  Volume src = v;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        int s[3] = {x, y, z};
        s[axis] = (s[axis] + shift) % d[axis];
        v.at(x, y, z) += static_cast<float>(alpha) * src.at(s[0], s[1], s[2]);
      }
}

void apply_flip(Volume& v, int axis) {
  const auto& d = v.dims;
  Volume src = v;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        int s[3] = {x, y, z};
        s[axis] = d[axis] - 1 - s[axis];
        v.at(x, y, z) = src.at(s[0], s[1], s[2]);
      }
}

float trilinear(const Volume& v, double x, double y, double z) {
  const auto& d = v.dims;
  if (x < 0 || y < 0 || z < 0 || x > d[0] - 1 || y > d[1] - 1 || z > d[2] - 1)
    return 0.0f;  // background fill
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int z0 = static_cast<int>(std::floor(z));
  const int x1 = std::min(x0 + 1, d[0] - 1);
  const int y1 = std::min(y0 + 1, d[1] - 1);
  const int z1 = std::min(z0 + 1, d[2] - 1);
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) *
                         (dz ? fz : 1 - fz);
        acc += w * v.at(dx ? x1 : x0, dy ? y1 : y0, dz ? z1 : z0);
      }
  return static_cast<float>(acc);
}

void apply_rigid(Volume& v, const std::array<double, 3>& angles_deg,
                 const std::array<double, 3>& trans) {
  const double ax = angles_deg[0] * M_PI / 180.0;
  const double ay = angles_deg[1] * M_PI / 180.0;
  const double az = angles_deg[2] * M_PI / 180.0;
  const double cx = std::cos(ax), sx = std::sin(ax);
  const double cy = std::cos(ay), sy = std::sin(ay);
  const double cz = std::cos(az), sz = std::sin(az);
  // R = Rz * Ry * Rx
  const double R[3][3] = {
      {cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx},
      {sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx},
      {-sy, cy * sx, cy * cx}};
  const auto& d = v.dims;
  const double c[3] = {(d[0] - 1) / 2.0, (d[1] - 1) / 2.0, (d[2] - 1) / 2.0};
  Volume src = v;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        // inverse map: source = R^T * (out - c - t) + c
        const double o[3] = {x - c[0] - trans[0], y - c[1] - trans[1],
                             z - c[2] - trans[2]};
        const double sxp = R[0][0] * o[0] + R[1][0] * o[1] + R[2][0] * o[2] + c[0];
        const double syp = R[0][1] * o[0] + R[1][1] * o[1] + R[2][1] * o[2] + c[1];
        const double szp = R[0][2] * o[0] + R[1][2] * o[1] + R[2][2] * o[2] + c[2];
        v.at(x, y, z) = trilinear(src, sxp, syp, szp);
      }
}

void apply_gamma(Volume& v, double gamma) {
  for (float& x : v.data)
    x = static_cast<float>(
        std::pow(static_cast<double>(std::max(0.0f, x)) / 255.0, gamma) * 255.0);
}

}  // namespace

Volume augment_volume(const Volume& v, const AugmentConfig& cfg) {
  cfg.validate();
  v.validate();
  for (float x : v.data)
    if (x < -1e-3f || x > 255.0f + 1e-3f)
      throw ArgumentError("augment: input not normalized to [0,255]");

  Rng rng(cfg.seed);
  Volume out = v;

  if (rng.uniform() < cfg.p_noise) {
    const double sigma =
        rng.uniform(cfg.noise_sigma_range[0], cfg.noise_sigma_range[1]) * 255.0;
    apply_noise(out, sigma, rng);
  }
  if (rng.uniform() < cfg.p_bias)
    apply_bias(out, cfg.bias_field_order, cfg.bias_coeff_range, rng);
  if (rng.uniform() < cfg.p_ghost) {
    const double alpha =
        rng.uniform(cfg.ghost_intensity_range[0], cfg.ghost_intensity_range[1]);
    const int axis = static_cast<int>(rng.uniform_int(0, 2));
    apply_ghost(out, cfg.ghost_count, alpha, axis);
  }
  if (rng.uniform() < cfg.p_flip) {
    std::vector<int> axes;
    for (int a = 0; a < 3; ++a)
      if (cfg.flip_axes[a]) axes.push_back(a);
    if (!axes.empty())
      apply_flip(out, axes[rng.uniform_int(0, static_cast<int64_t>(axes.size()) - 1)]);
  }
  if (rng.uniform() < cfg.p_rigid) {
    std::array<double, 3> angles, trans;
    for (int a = 0; a < 3; ++a)
      angles[a] = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    for (int a = 0; a < 3; ++a)
      trans[a] =
          rng.uniform(-cfg.max_translation_voxels, cfg.max_translation_voxels);
    apply_rigid(out, angles, trans);
  }
  if (rng.uniform() < cfg.p_gamma)
    apply_gamma(out, rng.uniform(cfg.gamma_range[0], cfg.gamma_range[1]));

  for (float& x : out.data)
    x = std::clamp(x, 0.0f, 255.0f);
  return out;
}

std::vector<Volume> make_training_set(const std::vector<Volume>& volumes,
                                      const AugmentConfig& cfg,
                                      int copies_per_volume) {
  if (copies_per_volume < 0)
    throw ArgumentError("make_training_set: copies_per_volume < 0");
  std::vector<Volume> out = volumes;
  for (size_t i = 0; i < volumes.size(); ++i) {
    for (int c = 0; c < copies_per_volume; ++c) {
      AugmentConfig derived = cfg;
      derived.seed = Rng::derive(cfg.seed, i * 131071 + c + 1);
      out.push_back(augment_volume(volumes[i], derived));
    }
  }
  return out;
}

}  // namespace df
