#include "declineforge/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "declineforge/error.hpp"
#include "json.hpp"

namespace df {

void Volume::validate() const {
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    throw ArgumentError("Volume: non-positive dimension");
  if (spacing[0] <= 0 || spacing[1] <= 0 || spacing[2] <= 0)
    throw ArgumentError("Volume: non-positive spacing");
  if (data.size() != size())
    throw ArgumentError("Volume: data length " + std::to_string(data.size()) +
                        " does not match dims product " +
                        std::to_string(size()));
  for (float v : data) {
    if (!std::isfinite(v))
      throw ArgumentError("Volume: non-finite voxel value");
  }
}

static bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Volume load_volume(const std::string& path) {
  if (ends_with(path, ".nii")) return nifti::load(path);
  if (ends_with(path, ".f32raw")) return rawio::load(path);
  throw ArgumentError("load_volume: unrecognized extension on '" + path +
                      "' (expected .nii or .f32raw)");
}

void save_volume(const Volume& v, const std::string& path) {
  v.validate();
  if (ends_with(path, ".nii")) return nifti::save(v, path);
  if (ends_with(path, ".f32raw")) return rawio::save(v, path);
  throw ArgumentError("save_volume: unrecognized extension on '" + path +
                      "' (expected .nii or .f32raw)");
}

Volume normalize_intensity(const Volume& v) {
  v.validate();
  Volume out = v;
  const auto [mn_it, mx_it] = std::minmax_element(v.data.begin(), v.data.end());
  const float mn = *mn_it, mx = *mx_it;
  if (mx <= mn) {
    std::fill(out.data.begin(), out.data.end(), 0.0f);
    return out;
  }
  const float scale = 255.0f / (mx - mn);
  for (float& x : out.data) x = (x - mn) * scale;
  return out;
}

namespace rawio {

static std::string sidecar_path(const std::string& path) {
  return path.substr(0, path.size() - std::string(".f32raw").size()) + ".json";
}

Volume load(const std::string& path) {
  std::ifstream side(sidecar_path(path));
  if (!side)
    throw IoError("rawio: missing sidecar '" + sidecar_path(path) + "'");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rawio: bad sidecar JSON: " + std::string(e.what()));
  }
  Volume v;
  try {
    for (int i = 0; i < 3; ++i) v.dims[i] = j.at("dims").at(i).get<int>();
    for (int i = 0; i < 3; ++i)
      v.spacing[i] = j.at("spacing").at(i).get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rawio: sidecar missing dims/spacing: " +
                     std::string(e.what()));
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("rawio: cannot open '" + path + "'");
  v.data.resize(static_cast<size_t>(v.dims[0]) * v.dims[1] * v.dims[2]);
  f.read(reinterpret_cast<char*>(v.data.data()),
         static_cast<std::streamsize>(v.data.size() * sizeof(float)));
  if (static_cast<size_t>(f.gcount()) != v.data.size() * sizeof(float))
    throw ParseError("rawio: truncated payload in '" + path + "'");
  v.validate();
  return v;
}

void save(const Volume& v, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("rawio: cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(v.data.data()),
          static_cast<std::streamsize>(v.data.size() * sizeof(float)));
  if (!f) throw IoError("rawio: short write to '" + path + "'");
  nlohmann::json j;
  j["dims"] = v.dims;
  j["spacing"] = v.spacing;
  std::ofstream side(sidecar_path(path));
  if (!side) throw IoError("rawio: cannot write sidecar for '" + path + "'");
  side << j.dump(2) << "\n";
}

}  // namespace rawio
}  // namespace df
