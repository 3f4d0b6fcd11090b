#pragma once

#include <zlib.h>

#include <array>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "bmseg/core/volume.hpp"

namespace bmseg {

// Minimal NIfTI-1 support: single-file .nii / .nii.gz, 3D volumes, the common
// scalar datatypes. Data is returned as float with scl_slope/scl_inter applied.
// Axis convention: NIfTI stores x fastest; we map to Volume's (z,y,x) with
// shape {dim3, dim2, dim1} and spacing {pixdim3, pixdim2, pixdim1}.
struct NiftiVolume {
  Shape3 shape{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<float> data;
  std::array<unsigned char, 348> raw_header{};  // kept so writers can preserve geometry
  bool has_header = false;
};

namespace nifti_detail {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

template <typename T>
T read_field(const unsigned char* hdr, size_t offset) {
  T v;
  std::memcpy(&v, hdr + offset, sizeof(T));
  return v;
}

template <typename T>
void write_field(unsigned char* hdr, size_t offset, T v) {
  std::memcpy(hdr + offset, &v, sizeof(T));
}

struct GzReader {
  gzFile f = nullptr;
  explicit GzReader(const std::string& path) {
    f = gzopen(path.c_str(), "rb");  // reads plain files transparently too
    require(f != nullptr, "cannot open ", path);
  }
  ~GzReader() {
    if (f) gzclose(f);
  }
  void read(void* dst, size_t bytes, const std::string& path) {
    size_t got = 0;
    auto* p = static_cast<unsigned char*>(dst);
    while (got < bytes) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<size_t>(bytes - got, 1u << 30));
      const int r = gzread(f, p + got, chunk);
      require(r > 0, "truncated NIfTI file ", path);
      got += static_cast<size_t>(r);
    }
  }
};

template <typename Src>
void convert_to_float(const std::vector<unsigned char>& raw, std::vector<float>& out) {
  const auto* src = reinterpret_cast<const Src*>(raw.data());
  const size_t n = raw.size() / sizeof(Src);
  out.resize(n);
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(src[i]);
}

}  // namespace nifti_detail

inline NiftiVolume read_nifti(const std::string& path) {
  namespace nd = nifti_detail;
  require(std::filesystem::exists(path), "file not found: ", path);
  nd::GzReader in(path);

  NiftiVolume vol;
  in.read(vol.raw_header.data(), nd::kHeaderSize, path);
  vol.has_header = true;
  const unsigned char* h = vol.raw_header.data();

  require(nd::read_field<int32_t>(h, 0) == nd::kHeaderSize,
          path, ": not a little-endian NIfTI-1 file");
  const char* magic = reinterpret_cast<const char*>(h + 344);
  require(std::strncmp(magic, "n+1", 3) == 0, path, ": unsupported NIfTI magic");

  std::array<int16_t, 8> dim;
  for (int i = 0; i < 8; ++i) dim[i] = nd::read_field<int16_t>(h, 40 + 2 * i);
  require(dim[0] >= 3, path, ": expected a 3D volume");
  for (int i = 4; i <= dim[0]; ++i)
    require(dim[i] <= 1, path, ": expected a 3D volume, got dim[", i, "]=", dim[i]);

  vol.shape = {dim[3], dim[2], dim[1]};
  vol.spacing = {nd::read_field<float>(h, 76 + 4 * 3), nd::read_field<float>(h, 76 + 4 * 2),
                 nd::read_field<float>(h, 76 + 4 * 1)};

  const int16_t datatype = nd::read_field<int16_t>(h, 70);
  const float vox_offset = nd::read_field<float>(h, 108);
  float scl_slope = nd::read_field<float>(h, 112);
  const float scl_inter = nd::read_field<float>(h, 116);
  if (scl_slope == 0.f) scl_slope = 1.f;

  const int64_t n = shape_numel(vol.shape);
  require(n > 0, path, ": empty volume");

  size_t elem = 0;
  switch (datatype) {
    case 2: elem = 1; break;    // uint8
    case 4: elem = 2; break;    // int16
    case 8: elem = 4; break;    // int32
    case 16: elem = 4; break;   // float32
    case 64: elem = 8; break;   // float64
    case 256: elem = 1; break;  // int8
    case 512: elem = 2; break;  // uint16
    default: fail(path, ": unsupported NIfTI datatype ", datatype);
  }

  // skip from end of header to the data offset
  const size_t skip = static_cast<size_t>(vox_offset) - nd::kHeaderSize;
  if (skip > 0) {
    std::vector<unsigned char> junk(skip);
    in.read(junk.data(), skip, path);
  }

  std::vector<unsigned char> raw(static_cast<size_t>(n) * elem);
  in.read(raw.data(), raw.size(), path);

  switch (datatype) {
    case 2: nd::convert_to_float<uint8_t>(raw, vol.data); break;
    case 4: nd::convert_to_float<int16_t>(raw, vol.data); break;
    case 8: nd::convert_to_float<int32_t>(raw, vol.data); break;
    case 16: nd::convert_to_float<float>(raw, vol.data); break;
    case 64: nd::convert_to_float<double>(raw, vol.data); break;
    case 256: nd::convert_to_float<int8_t>(raw, vol.data); break;
    case 512: nd::convert_to_float<uint16_t>(raw, vol.data); break;
  }
  if (scl_slope != 1.f || scl_inter != 0.f)
    for (auto& v : vol.data) v = v * scl_slope + scl_inter;
  return vol;
}

namespace nifti_detail {

inline std::array<unsigned char, 348> make_header(const Shape3& shape,
                                                  const std::array<double, 3>& spacing,
                                                  int16_t datatype, int16_t bitpix,
                                                  const unsigned char* ref_header) {
  std::array<unsigned char, 348> h{};
  if (ref_header) std::memcpy(h.data(), ref_header, kHeaderSize);
  write_field<int32_t>(h.data(), 0, kHeaderSize);
  const int16_t dim[8] = {3, static_cast<int16_t>(shape[2]), static_cast<int16_t>(shape[1]),
                          static_cast<int16_t>(shape[0]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) write_field<int16_t>(h.data(), 40 + 2 * i, dim[i]);
  write_field<int16_t>(h.data(), 70, datatype);
  write_field<int16_t>(h.data(), 72, bitpix);
  if (!ref_header) {
    write_field<float>(h.data(), 76 + 4 * 0, 1.f);
    write_field<float>(h.data(), 76 + 4 * 1, static_cast<float>(spacing[2]));
    write_field<float>(h.data(), 76 + 4 * 2, static_cast<float>(spacing[1]));
    write_field<float>(h.data(), 76 + 4 * 3, static_cast<float>(spacing[0]));
    // identity-orientation sform scaled by spacing
    write_field<int16_t>(h.data(), 254, 1);
    write_field<float>(h.data(), 280, static_cast<float>(spacing[2]));
    write_field<float>(h.data(), 296 + 4, static_cast<float>(spacing[1]));
    write_field<float>(h.data(), 312 + 8, static_cast<float>(spacing[0]));
  }
  write_field<float>(h.data(), 108, static_cast<float>(kVoxOffset));
  write_field<float>(h.data(), 112, 1.f);  // scl_slope
  write_field<float>(h.data(), 116, 0.f);  // scl_inter
  std::memcpy(h.data() + 344, "n+1\0", 4);
  return h;
}

inline void write_bytes(const std::string& path, const std::array<unsigned char, 348>& header,
                        const void* data, size_t bytes) {
  const std::array<unsigned char, 4> extender{0, 0, 0, 0};
  if (path.size() > 3 && path.substr(path.size() - 3) == ".gz") {
    gzFile f = gzopen(path.c_str(), "wb");
    require(f != nullptr, "cannot open ", path, " for writing");
    bool ok = gzwrite(f, header.data(), kHeaderSize) == kHeaderSize &&
              gzwrite(f, extender.data(), 4) == 4;
    size_t written = 0;
    const auto* p = static_cast<const unsigned char*>(data);
    while (ok && written < bytes) {
      const unsigned chunk = static_cast<unsigned>(std::min<size_t>(bytes - written, 1u << 30));
      const int r = gzwrite(f, p + written, chunk);
      ok = r > 0;
      written += static_cast<size_t>(std::max(r, 0));
    }
    gzclose(f);
    require(ok, "failed writing ", path);
  } else {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, "cannot open ", path, " for writing");
    const bool ok = std::fwrite(header.data(), 1, kHeaderSize, f) == kHeaderSize &&
                    std::fwrite(extender.data(), 1, 4, f) == 4 &&
                    std::fwrite(data, 1, bytes, f) == bytes;
    std::fclose(f);
    require(ok, "failed writing ", path);
  }
}

}  // namespace nifti_detail

inline void write_nifti(const std::string& path, const Shape3& shape,
                        const std::array<double, 3>& spacing, const float* data,
                        const unsigned char* ref_header = nullptr) {
  const auto h = nifti_detail::make_header(shape, spacing, 16, 32, ref_header);
  nifti_detail::write_bytes(path, h, data, static_cast<size_t>(shape_numel(shape)) * 4);
}

inline void write_nifti_labels(const std::string& path, const Shape3& shape,
                               const std::array<double, 3>& spacing, const uint8_t* data,
                               const unsigned char* ref_header = nullptr) {
  const auto h = nifti_detail::make_header(shape, spacing, 2, 8, ref_header);
  nifti_detail::write_bytes(path, h, data, static_cast<size_t>(shape_numel(shape)));
}

}  // namespace bmseg
