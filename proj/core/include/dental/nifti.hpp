#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dental/volume.hpp"

namespace dental {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::int32_t kNiftiHeaderSize = 348;
inline constexpr std::int16_t kNiftiIntentLabel = 1002;

/// The subset of NIfTI-1 header fields the workbench reads or writes.
struct NiftiHeader {
  bool big_endian = false;
  std::array<std::int16_t, 8> dim{};
  std::int16_t intent_code = 0;
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  std::array<float, 8> pixdim{};
  float vox_offset = 0.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  std::array<float, 6> quatern{};  // b, c, d, qoffset_x, qoffset_y, qoffset_z
  std::array<std::array<float, 4>, 3> srow{};
  std::string descrip;
  std::string intent_name;
};

/// Parses and validates the 348-byte header. Throws format/truncation errors.
NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes);

ScalarVolume read_nifti(std::span<const std::uint8_t> bytes);

/// Loads an integer-typed image as labels. Label names come from the
/// workbench's comment extension when present, otherwise "Label_<n>".
LabelVolume read_label_nifti(std::span<const std::uint8_t> bytes);

Bytes write_nifti(const ScalarVolume& volume);

/// Uses volume.storage when set, otherwise the narrowest integer type that
/// holds max_label(). The chosen type is noted in the descrip field.
Bytes write_nifti(const LabelVolume& volume);

VoxelType narrowest_label_type(std::uint32_t max_label);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dental
