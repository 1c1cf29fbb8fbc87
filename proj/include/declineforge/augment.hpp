#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "declineforge/volume.hpp"

namespace df {

// Artifact simulation knobs. Transforms are applied in a fixed order:
// noise, bias field, ghosting, flip, rigid motion, gamma.
struct AugmentConfig {
  double p_noise = 0.5;
  std::array<double, 2> noise_sigma_range{0.005, 0.03};  // fraction of 255

  double p_bias = 0.5;
  int bias_field_order = 3;
  std::array<double, 2> bias_coeff_range{-0.1, 0.1};

  double p_ghost = 0.5;
  std::array<double, 2> ghost_intensity_range{0.05, 0.2};
  int ghost_count = 4;

  double p_flip = 0.5;
  std::array<bool, 3> flip_axes{true, true, true};

  double p_rigid = 0.5;
  double max_rotation_deg = 5.0;
  double max_translation_voxels = 3.0;

  double p_gamma = 0.5;
  std::array<double, 2> gamma_range{0.8, 1.25};

  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Input must already be normalized to [0, 255]; output is clamped back into
// that range and keeps dims/spacing.
Volume augment_volume(const Volume& v, const AugmentConfig& cfg);

// Originals followed by copies_per_volume augmented variants each, every
// variant under a distinct derived seed.
std::vector<Volume> make_training_set(const std::vector<Volume>& volumes,
                                      const AugmentConfig& cfg,
                                      int copies_per_volume);

}  // namespace df
