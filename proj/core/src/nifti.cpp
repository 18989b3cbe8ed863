#include "dental/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace dental {

namespace {

constexpr std::size_t kExtensionFlagOffset = 348;
constexpr std::size_t kMinVoxOffset = 352;
constexpr std::int32_t kCommentExtension = 6;
constexpr std::string_view kLabelExtensionTag = "dental-label-names\n";

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <class T>
  T get(std::size_t offset) const {
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw.begin(), raw.end());
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
  }

  std::string text(std::size_t offset, std::size_t max_len) const {
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset), max_len);
    return s.substr(0, s.find('\0'));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool swap_;
};

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  // Output is little-endian regardless of host order.
  template <class T>
  void put(std::size_t offset, T value) {
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    std::memcpy(out_.data() + offset, raw.data(), sizeof(T));
  }

  void text(std::size_t offset, std::string_view s, std::size_t max_len) {
    std::memcpy(out_.data() + offset, s.data(), std::min(s.size(), max_len - 1));
  }

 private:
  Bytes& out_;
};

std::int32_t byteswap32(std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  return static_cast<std::int32_t>((u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24));
}

bool host_is_big_endian() { return std::endian::native == std::endian::big; }

bool is_supported(std::int16_t code) {
  switch (static_cast<VoxelType>(code)) {
    case VoxelType::uint8:
    case VoxelType::int16:
    case VoxelType::int32:
    case VoxelType::float32:
    case VoxelType::int8:
    case VoxelType::uint16: return true;
  }
  return false;
}

double decode_voxel(const ByteReader& r, std::size_t offset, VoxelType type) {
  switch (type) {
    case VoxelType::uint8: return r.get<std::uint8_t>(offset);
    case VoxelType::int8: return r.get<std::int8_t>(offset);
    case VoxelType::int16: return r.get<std::int16_t>(offset);
    case VoxelType::uint16: return r.get<std::uint16_t>(offset);
    case VoxelType::int32: return r.get<std::int32_t>(offset);
    case VoxelType::float32: return r.get<float>(offset);
  }
  return 0.0;
}

std::pair<double, double> type_range(VoxelType type) {
  switch (type) {
    case VoxelType::uint8: return {0, 255};
    case VoxelType::int8: return {-128, 127};
    case VoxelType::int16: return {-32768, 32767};
    case VoxelType::uint16: return {0, 65535};
    case VoxelType::int32: return {std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max()};
    case VoxelType::float32: return {-std::numeric_limits<float>::max(), std::numeric_limits<float>::max()};
  }
  return {0, 0};
}

void encode_voxel(ByteWriter& w, std::size_t offset, VoxelType type, double v) {
  switch (type) {
    case VoxelType::uint8: w.put(offset, static_cast<std::uint8_t>(v)); break;
    case VoxelType::int8: w.put(offset, static_cast<std::int8_t>(v)); break;
    case VoxelType::int16: w.put(offset, static_cast<std::int16_t>(v)); break;
    case VoxelType::uint16: w.put(offset, static_cast<std::uint16_t>(v)); break;
    case VoxelType::int32: w.put(offset, static_cast<std::int32_t>(v)); break;
    case VoxelType::float32: w.put(offset, static_cast<float>(v)); break;
  }
}

std::string type_name(VoxelType t) {
  switch (t) {
    case VoxelType::uint8: return "uint8";
    case VoxelType::int8: return "int8";
    case VoxelType::int16: return "int16";
    case VoxelType::uint16: return "uint16";
    case VoxelType::int32: return "int32";
    case VoxelType::float32: return "float32";
  }
  return "?";
}

struct DecodedImage {
  NiftiHeader header;
  Grid grid;
  std::vector<double> values;
  std::string comment;  // payload of our label-name extension, if any
};

/// Rotation matrix of the qform quaternion (b, c, d); a is implied.
Mat3 quaternion_matrix(double b, double c, double d) {
  const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
  Mat3 r;
  r(0, 0) = a * a + b * b - c * c - d * d;
  r(0, 1) = 2 * (b * c - a * d);
  r(0, 2) = 2 * (b * d + a * c);
  r(1, 0) = 2 * (b * c + a * d);
  r(1, 1) = a * a + c * c - b * b - d * d;
  r(1, 2) = 2 * (c * d - a * b);
  r(2, 0) = 2 * (b * d - a * c);
  r(2, 1) = 2 * (c * d + a * b);
  r(2, 2) = a * a + d * d - c * c - b * b;
  return r;
}

bool is_axis_aligned(const Mat3& m) {
  double scale = 0.0;
  for (double v : m.a) scale = std::max(scale, std::abs(v));
  const double tol = 1e-6 * std::max(scale, 1e-30);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (r != c && std::abs(m(r, c)) > tol) return false;
  return true;
}

Vec3 resolve_origin(const NiftiHeader& h) {
  if (h.sform_code > 0) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = h.srow[r][c];
    if (!is_axis_aligned(m)) throw Error(Errc::format, "oblique sform orientation is not supported");
    return {h.srow[0][3], h.srow[1][3], h.srow[2][3]};
  }
  if (h.qform_code > 0) {
    if (!is_axis_aligned(quaternion_matrix(h.quatern[0], h.quatern[1], h.quatern[2]))) {
      throw Error(Errc::format, "oblique qform orientation is not supported");
    }
    return {h.quatern[3], h.quatern[4], h.quatern[5]};
  }
  return {};
}

DecodedImage decode(std::span<const std::uint8_t> bytes) {
  DecodedImage img;
  img.header = parse_nifti_header(bytes);
  const NiftiHeader& h = img.header;
  const bool swap = h.big_endian != host_is_big_endian();
  const ByteReader r(bytes, swap);

  for (int a = 0; a < 3; ++a) {
    img.grid.dims[a] = a < h.dim[0] ? h.dim[a + 1] : 1;
    img.grid.spacing[a] = a < h.dim[0] ? h.pixdim[a + 1] : 1.0;
  }
  img.grid.origin = resolve_origin(h);
  img.grid.validate();

  const auto type = static_cast<VoxelType>(h.datatype);
  const auto bytes_per = static_cast<std::size_t>(bits_per_voxel(type) / 8);
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  const auto count = static_cast<std::size_t>(img.grid.count());
  if (bytes.size() < offset || (bytes.size() - offset) / bytes_per < count) {
    throw Error(Errc::truncation, "voxel payload truncated: need " + std::to_string(count * bytes_per) +
                                      " bytes after offset " + std::to_string(offset));
  }
  img.values.resize(count);
  for (std::size_t n = 0; n < count; ++n) img.values[n] = decode_voxel(r, offset + n * bytes_per, type);

  // Extensions live between byte 352 and vox_offset.
  if (bytes[kExtensionFlagOffset] != 0) {
    std::size_t pos = kMinVoxOffset;
    while (pos + 8 <= offset) {
      const auto esize = r.get<std::int32_t>(pos);
      const auto ecode = r.get<std::int32_t>(pos + 4);
      if (esize < 8 || pos + static_cast<std::size_t>(esize) > offset) break;
      if (ecode == kCommentExtension) {
        std::string payload = r.text(pos + 8, static_cast<std::size_t>(esize) - 8);
        if (payload.starts_with(kLabelExtensionTag)) img.comment = payload.substr(kLabelExtensionTag.size());
      }
      pos += static_cast<std::size_t>(esize);
    }
  }
  return img;
}

std::map<std::uint32_t, std::string> parse_label_names(const std::string& text) {
  std::map<std::uint32_t, std::string> names;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    names[static_cast<std::uint32_t>(std::stoul(line.substr(0, tab)))] = line.substr(tab + 1);
  }
  return names;
}

Bytes encode(const Grid& grid, const std::vector<double>& values, VoxelType type, std::int16_t intent,
             const std::string& descrip, const std::string& extension) {
  grid.validate();
  std::string ext_payload;
  std::size_t ext_size = 0;
  if (!extension.empty()) {
    ext_payload = extension;
    ext_size = (8 + ext_payload.size() + 1 + 15) / 16 * 16;
  }
  const std::size_t offset = kMinVoxOffset + ext_size;
  const auto bytes_per = static_cast<std::size_t>(bits_per_voxel(type) / 8);
  Bytes out(offset + values.size() * bytes_per, 0);
  ByteWriter w(out);

  w.put<std::int32_t>(0, kNiftiHeaderSize);
  w.put<std::int16_t>(40, 3);
  for (int a = 0; a < 3; ++a) w.put<std::int16_t>(42 + 2 * a, static_cast<std::int16_t>(grid.dims[a]));
  for (int a = 3; a < 7; ++a) w.put<std::int16_t>(42 + 2 * a, 1);
  w.put<std::int16_t>(68, intent);
  w.put<std::int16_t>(70, static_cast<std::int16_t>(type));
  w.put<std::int16_t>(72, static_cast<std::int16_t>(bits_per_voxel(type)));
  w.put<float>(76, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) w.put<float>(80 + 4 * a, static_cast<float>(grid.spacing[a]));
  w.put<float>(108, static_cast<float>(offset));
  w.put<float>(112, 1.0f);
  w.put<float>(116, 0.0f);
  w.put<std::uint8_t>(123, 2);  // NIFTI_UNITS_MM
  w.text(148, descrip, 80);
  w.put<std::int16_t>(252, 1);
  w.put<std::int16_t>(254, 1);
  for (int a = 0; a < 3; ++a) w.put<float>(268 + 4 * a, static_cast<float>(grid.origin[a]));
  for (int r = 0; r < 3; ++r) {
    w.put<float>(280 + 16 * r + 4 * r, static_cast<float>(grid.spacing[r]));
    w.put<float>(280 + 16 * r + 12, static_cast<float>(grid.origin[r]));
  }
  if (intent == kNiftiIntentLabel) w.text(328, "labels", 16);
  std::memcpy(out.data() + 344, "n+1\0", 4);

  if (ext_size > 0) {
    out[kExtensionFlagOffset] = 1;
    w.put<std::int32_t>(kMinVoxOffset, static_cast<std::int32_t>(ext_size));
    w.put<std::int32_t>(kMinVoxOffset + 4, kCommentExtension);
    std::memcpy(out.data() + kMinVoxOffset + 8, ext_payload.data(), ext_payload.size());
  }

  const auto [lo, hi] = type_range(type);
  for (std::size_t n = 0; n < values.size(); ++n) {
    const double v = values[n];
    if (!(v >= lo && v <= hi) || (is_integer(type) && v != std::trunc(v))) {
      throw Error(Errc::parameter, "voxel value " + std::to_string(v) + " not representable as " + type_name(type));
    }
    encode_voxel(w, offset + n * bytes_per, type, v);
  }
  return out;
}

}  // namespace

NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(Errc::truncation, "NIfTI header truncated");
  std::int32_t size_le;
  std::memcpy(&size_le, bytes.data(), 4);
  NiftiHeader h;
  bool swap = false;
  if (size_le == kNiftiHeaderSize) {
    swap = false;
  } else if (byteswap32(size_le) == kNiftiHeaderSize) {
    swap = true;
  } else {
    throw Error(Errc::format, "sizeof_hdr is " + std::to_string(size_le) + ", expected 348");
  }
  h.big_endian = host_is_big_endian() != swap;
  if (bytes.size() < kMinVoxOffset) throw Error(Errc::truncation, "NIfTI header truncated");
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
    throw Error(Errc::format, "magic is not \"n+1\" (only single-file .nii is supported)");
  }

  const ByteReader r(bytes, swap);
  for (int n = 0; n < 8; ++n) h.dim[n] = r.get<std::int16_t>(40 + 2 * n);
  h.intent_code = r.get<std::int16_t>(68);
  h.datatype = r.get<std::int16_t>(70);
  h.bitpix = r.get<std::int16_t>(72);
  for (int n = 0; n < 8; ++n) h.pixdim[n] = r.get<float>(76 + 4 * n);
  h.vox_offset = r.get<float>(108);
  h.scl_slope = r.get<float>(112);
  h.scl_inter = r.get<float>(116);
  h.descrip = r.text(148, 80);
  h.qform_code = r.get<std::int16_t>(252);
  h.sform_code = r.get<std::int16_t>(254);
  for (int n = 0; n < 6; ++n) h.quatern[n] = r.get<float>(256 + 4 * n);
  for (int row = 0; row < 3; ++row)
    for (int c = 0; c < 4; ++c) h.srow[row][c] = r.get<float>(280 + 16 * row + 4 * c);
  h.intent_name = r.text(328, 16);

  if (h.dim[0] < 1 || h.dim[0] > 7) throw Error(Errc::format, "dim[0] out of range");
  for (int n = 1; n <= h.dim[0]; ++n) {
    if (h.dim[n] < 1) throw Error(Errc::format, "non-positive dimension in header");
    if (n > 3 && h.dim[n] != 1) throw Error(Errc::dimension, "only 3D volumes are supported");
  }
  if (!is_supported(h.datatype)) {
    throw Error(Errc::unsupported_type, "unsupported NIfTI datatype code " + std::to_string(h.datatype));
  }
  if (h.bitpix != bits_per_voxel(static_cast<VoxelType>(h.datatype))) {
    throw Error(Errc::format, "bitpix does not match datatype");
  }
  if (!(h.vox_offset >= static_cast<float>(kMinVoxOffset))) throw Error(Errc::format, "vox_offset must be >= 352");
  return h;
}

ScalarVolume read_nifti(std::span<const std::uint8_t> bytes) {
  DecodedImage img = decode(bytes);
  ScalarVolume vol;
  vol.grid = img.grid;
  vol.data = std::move(img.values);
  vol.storage = static_cast<VoxelType>(img.header.datatype);
  const double slope = img.header.scl_slope;
  const double inter = img.header.scl_inter;
  if (slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0)) {
    for (double& v : vol.data) v = v * slope + inter;
    vol.storage = VoxelType::float32;
  }
  return vol;
}

LabelVolume read_label_nifti(std::span<const std::uint8_t> bytes) {
  DecodedImage img = decode(bytes);
  const auto type = static_cast<VoxelType>(img.header.datatype);
  if (!is_integer(type)) throw Error(Errc::unsupported_type, "label volumes must have an integer datatype");
  LabelVolume vol;
  vol.grid = img.grid;
  vol.storage = type;
  vol.data.resize(img.values.size());
  for (std::size_t n = 0; n < img.values.size(); ++n) {
    if (img.values[n] < 0) throw Error(Errc::format, "negative label in label volume");
    vol.data[n] = static_cast<std::uint32_t>(img.values[n]);
  }
  vol.label_names = parse_label_names(img.comment);
  for (std::uint32_t label : vol.data) {
    if (label != 0 && !vol.label_names.contains(label)) vol.label_names[label] = "Label_" + std::to_string(label);
  }
  return vol;
}

Bytes write_nifti(const ScalarVolume& volume) {
  volume.validate();
  return encode(volume.grid, volume.data, volume.storage, 0, "dental-workbench scalar", "");
}

VoxelType narrowest_label_type(std::uint32_t max_label) {
  if (max_label <= 255) return VoxelType::uint8;
  if (max_label <= 32767) return VoxelType::int16;
  if (max_label <= 65535) return VoxelType::uint16;
  return VoxelType::int32;
}

Bytes write_nifti(const LabelVolume& volume) {
  volume.validate();
  const VoxelType type = volume.storage.value_or(narrowest_label_type(volume.max_label()));
  if (!is_integer(type)) throw Error(Errc::parameter, "label volumes need an integer datatype");
  std::vector<double> values(volume.data.begin(), volume.data.end());
  std::string names;
  for (const auto& [label, name] : volume.label_names) names += std::to_string(label) + "\t" + name + "\n";
  // Nothing here may depend on whether storage was chosen or inherited, so
  // that read -> write reproduces the file.
  const std::string descrip = "dental-workbench labels " + type_name(type);
  return encode(volume.grid, values, type, kNiftiIntentLabel, descrip, std::string(kLabelExtensionTag) + names);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dental
