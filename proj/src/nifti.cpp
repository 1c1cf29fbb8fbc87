#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "declineforge/error.hpp"
#include "declineforge/volume.hpp"

namespace df::nifti {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;
constexpr int16_t kDtUint8 = 2;
constexpr int16_t kDtInt16 = 4;
constexpr int16_t kDtFloat32 = 16;

template <typename T>
T byteswap_val(T v) {
  auto bytes = std::bit_cast<std::array<uint8_t, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

// Field reader over the raw 348-byte header; swaps on demand.
struct HeaderView {
  const uint8_t* raw;
  bool swap;

  int32_t i32(int offset) const {
    int32_t v;
    std::memcpy(&v, raw + offset, 4);
    return swap ? byteswap_val(v) : v;
  }
  int16_t i16(int offset) const {
    int16_t v;
    std::memcpy(&v, raw + offset, 2);
    return swap ? byteswap_val(v) : v;
  }
  float f32(int offset) const {
    float v;
    std::memcpy(&v, raw + offset, 4);
    return swap ? byteswap_val(v) : v;
  }
};

}  // namespace

Volume load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("nifti: cannot open '" + path + "'");
  uint8_t raw[kHeaderSize];
  f.read(reinterpret_cast<char*>(raw), kHeaderSize);
  if (f.gcount() != kHeaderSize)
    throw ParseError("nifti: truncated header in '" + path + "'");

  HeaderView h{raw, false};
  if (h.i32(0) != kHeaderSize) {
    h.swap = true;
    if (h.i32(0) != kHeaderSize)
      throw ParseError("nifti: sizeof_hdr is not 348 in either byte order");
  }
  if (std::memcmp(raw + 344, "n+1\0", 4) != 0)
    throw ParseError("nifti: bad magic (expected \"n+1\\0\")");

  const int16_t ndim = h.i16(40);
  if (ndim != 3 && ndim != 4)
    throw ParseError("nifti: dim[0] must be 3 or 4, got " +
                     std::to_string(ndim));
  int dims[4] = {h.i16(42), h.i16(44), h.i16(46), ndim == 4 ? h.i16(48) : 1};
  if (ndim == 4 && dims[3] > 1)
    throw ParseError("nifti: dim[4] > 1 not supported (got " +
                     std::to_string(dims[3]) + ")");
  for (int i = 0; i < 3; ++i)
    if (dims[i] <= 0)
      throw ParseError("nifti: non-positive dim[" + std::to_string(i + 1) +
                       "]");

  const int16_t datatype = h.i16(70);
  if (datatype != kDtUint8 && datatype != kDtInt16 && datatype != kDtFloat32)
    throw ParseError("nifti: unsupported datatype code " +
                     std::to_string(datatype));

  Volume v;
  v.dims = {dims[0], dims[1], dims[2]};
  for (int i = 0; i < 3; ++i) v.spacing[i] = h.f32(76 + 4 * (i + 1));

  float vox_offset = h.f32(108);
  if (vox_offset < kHeaderSize) vox_offset = kVoxOffset;
  float scl_slope = h.f32(112);
  const float scl_inter = h.f32(116);

  f.seekg(static_cast<std::streamoff>(vox_offset), std::ios::beg);
  const size_t n = static_cast<size_t>(dims[0]) * dims[1] * dims[2];
  v.data.resize(n);

  const auto read_exact = [&](char* dst, size_t bytes) {
    f.read(dst, static_cast<std::streamsize>(bytes));
    if (static_cast<size_t>(f.gcount()) != bytes)
      throw ParseError("nifti: truncated voxel payload in '" + path + "'");
  };

  if (datatype == kDtUint8) {
    std::vector<uint8_t> buf(n);
    read_exact(reinterpret_cast<char*>(buf.data()), n);
    for (size_t i = 0; i < n; ++i) v.data[i] = static_cast<float>(buf[i]);
  } else if (datatype == kDtInt16) {
    std::vector<int16_t> buf(n);
    read_exact(reinterpret_cast<char*>(buf.data()), n * 2);
    for (size_t i = 0; i < n; ++i) {
      int16_t x = h.swap ? byteswap_val(buf[i]) : buf[i];
      v.data[i] = static_cast<float>(x);
    }
  } else {
    read_exact(reinterpret_cast<char*>(v.data.data()), n * 4);
    if (h.swap)
      for (float& x : v.data) x = byteswap_val(x);
  }

  // scl_slope == 0 means "no scaling" per the standard.
  if (scl_slope != 0.0f && (scl_slope != 1.0f || scl_inter != 0.0f)) {
    for (float& x : v.data) x = x * scl_slope + scl_inter;
  }
  v.validate();
  return v;
}

void save(const Volume& v, const std::string& path) {
  v.validate();
  uint8_t raw[kHeaderSize];
  std::memset(raw, 0, sizeof(raw));

  const auto put_i32 = [&](int off, int32_t val) {
    std::memcpy(raw + off, &val, 4);
  };
  const auto put_i16 = [&](int off, int16_t val) {
    std::memcpy(raw + off, &val, 2);
  };
  const auto put_f32 = [&](int off, float val) {
    std::memcpy(raw + off, &val, 4);
  };

  put_i32(0, kHeaderSize);
  put_i16(40, 3);
  for (int i = 0; i < 3; ++i)
    put_i16(42 + 2 * i, static_cast<int16_t>(v.dims[i]));
  for (int i = 3; i < 7; ++i) put_i16(42 + 2 * i, 1);
  put_i16(70, kDtFloat32);
  put_i16(72, 32);  // bitpix
  put_f32(76, 1.0f);
  for (int i = 0; i < 3; ++i)
    put_f32(80 + 4 * i, static_cast<float>(v.spacing[i]));
  put_f32(108, static_cast<float>(kVoxOffset));
  put_f32(112, 1.0f);  // scl_slope
  put_f32(116, 0.0f);  // scl_inter
  std::memcpy(raw + 344, "n+1\0", 4);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("nifti: cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(raw), kHeaderSize);
  const char filler[4] = {0, 0, 0, 0};
  f.write(filler, 4);
  f.write(reinterpret_cast<const char*>(v.data.data()),
          static_cast<std::streamsize>(v.data.size() * sizeof(float)));
  if (!f) throw IoError("nifti: short write to '" + path + "'");
}

}  // namespace df::nifti
