#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dental {

// Integer label layout used by every stage of the pipeline:
//
//   0            Background
//   1            Jaw                  (Omega_1)
//   2            Dentition            (uncut teeth, segmentation only)
//   10..99       Tooth_XX, XX = tooth number (Omega_3)
//   110..199     PDL_XX = 100 + XX    (Omega_2)
//   201..255     Prosthesis_N = 200+N (Omega_4)
//
// Tooth numbers follow the two-digit dental notation (11..48), so every
// label fits in a uint8 NIfTI volume.
namespace labels {

inline constexpr std::uint32_t kBackground = 0;
inline constexpr std::uint32_t kJaw = 1;
inline constexpr std::uint32_t kDentition = 2;
inline constexpr std::uint32_t kToothMin = 10;
inline constexpr std::uint32_t kToothMax = 99;
inline constexpr std::uint32_t kPdlOffset = 100;
inline constexpr std::uint32_t kProsthesisOffset = 200;
inline constexpr std::uint32_t kProsthesisMax = 55;

bool valid_tooth_number(int tooth);
std::uint32_t tooth(int tooth_number);
std::uint32_t pdl(int tooth_number);
std::uint32_t prosthesis(int index);

bool is_tooth(std::uint32_t label);
bool is_pdl(std::uint32_t label);
bool is_prosthesis(std::uint32_t label);

/// Tooth number for Tooth_XX and PDL_XX labels.
std::optional<int> tooth_number(std::uint32_t label);

/// Canonical name ("Jaw", "Tooth_14", "PDL_14", "Prosthesis_1", ...).
std::string name(std::uint32_t label);

/// Inverse of name(); nullopt for unknown names.
std::optional<std::uint32_t> from_name(const std::string& name);

}  // namespace labels

enum class SubdomainKind { background, jaw, dentition, pdl, tooth, prosthesis };

/// Material region of a tet: Omega_1..Omega_4 plus the per-tooth or
/// per-prosthesis index.
struct SubdomainId {
  SubdomainKind kind = SubdomainKind::background;
  int index = 0;  // tooth number or prosthesis index, 0 otherwise

  friend bool operator==(const SubdomainId&, const SubdomainId&) = default;
  friend auto operator<=>(const SubdomainId&, const SubdomainId&) = default;
};

SubdomainId subdomain_of(std::uint32_t label);
std::string_view kind_name(SubdomainKind kind);

}  // namespace dental
