#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace df {

// Dense 3D scalar image, x-fastest voxel order, float32 storage.
struct Volume {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<float> data;

  Volume() = default;
  Volume(int nx, int ny, int nz, float fill = 0.0f)
      : dims{nx, ny, nz},
        data(static_cast<size_t>(nx) * ny * nz, fill) {}

  size_t size() const {
    return static_cast<size_t>(dims[0]) * dims[1] * dims[2];
  }

  size_t index(int x, int y, int z) const {
    return static_cast<size_t>(z) * dims[1] * dims[0] +
           static_cast<size_t>(y) * dims[0] + x;
  }

  float& at(int x, int y, int z) { return data[index(x, y, z)]; }
  float at(int x, int y, int z) const { return data[index(x, y, z)]; }

  // Throws if data length mismatches dims or any value is non-finite.
  void validate() const;
};

// Format chosen by extension: ".nii" -> NIfTI-1, ".f32raw" -> raw + JSON
// sidecar.
Volume load_volume(const std::string& path);
void save_volume(const Volume& v, const std::string& path);

// Linear map of the value range onto [0, 255]; a constant volume maps to
// all zeros.
Volume normalize_intensity(const Volume& v);

namespace nifti {
Volume load(const std::string& path);
void save(const Volume& v, const std::string& path);
}  // namespace nifti

namespace rawio {
Volume load(const std::string& path);
void save(const Volume& v, const std::string& path);
}  // namespace rawio

}  // namespace df
