#include "dental/labels.hpp"

#include "dental/error.hpp"

namespace dental {
namespace labels {

bool valid_tooth_number(int t) { return t >= static_cast<int>(kToothMin) && t <= static_cast<int>(kToothMax); }

std::uint32_t tooth(int t) {
  if (!valid_tooth_number(t)) throw Error(Errc::parameter, "tooth number " + std::to_string(t) + " outside 10..99");
  return static_cast<std::uint32_t>(t);
}

std::uint32_t pdl(int t) { return kPdlOffset + tooth(t); }

std::uint32_t prosthesis(int index) {
  if (index < 1 || index > static_cast<int>(kProsthesisMax)) {
    throw Error(Errc::parameter, "prosthesis index " + std::to_string(index) + " outside 1..55");
  }
  return kProsthesisOffset + static_cast<std::uint32_t>(index);
}

bool is_tooth(std::uint32_t l) { return l >= kToothMin && l <= kToothMax; }
bool is_pdl(std::uint32_t l) { return l >= kPdlOffset + kToothMin && l <= kPdlOffset + kToothMax; }
bool is_prosthesis(std::uint32_t l) { return l > kProsthesisOffset && l <= kProsthesisOffset + kProsthesisMax; }

std::optional<int> tooth_number(std::uint32_t l) {
  if (is_tooth(l)) return static_cast<int>(l);
  if (is_pdl(l)) return static_cast<int>(l - kPdlOffset);
  return std::nullopt;
}

std::string name(std::uint32_t l) {
  if (l == kBackground) return "Background";
  if (l == kJaw) return "Jaw";
  if (l == kDentition) return "Dentition";
  if (is_tooth(l)) return "Tooth_" + std::to_string(l);
  if (is_pdl(l)) return "PDL_" + std::to_string(l - kPdlOffset);
  if (is_prosthesis(l)) return "Prosthesis_" + std::to_string(l - kProsthesisOffset);
  return "Label_" + std::to_string(l);
}

std::optional<std::uint32_t> from_name(const std::string& n) {
  auto suffix = [&](std::string_view prefix) -> std::optional<int> {
    if (!n.starts_with(prefix)) return std::nullopt;
    try {
      std::size_t used = 0;
      const int v = std::stoi(n.substr(prefix.size()), &used);
      if (used + prefix.size() != n.size()) return std::nullopt;
      return v;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  if (n == "Background") return kBackground;
  if (n == "Jaw") return kJaw;
  if (n == "Dentition") return kDentition;
  if (auto t = suffix("Tooth_"); t && valid_tooth_number(*t)) return tooth(*t);
  if (auto t = suffix("PDL_"); t && valid_tooth_number(*t)) return pdl(*t);
  if (auto p = suffix("Prosthesis_"); p && *p >= 1 && *p <= static_cast<int>(kProsthesisMax)) return prosthesis(*p);
  return std::nullopt;
}

}  // namespace labels

SubdomainId subdomain_of(std::uint32_t l) {
  if (l == labels::kJaw) return {SubdomainKind::jaw, 0};
  if (l == labels::kDentition) return {SubdomainKind::dentition, 0};
  if (labels::is_tooth(l)) return {SubdomainKind::tooth, static_cast<int>(l)};
  if (labels::is_pdl(l)) return {SubdomainKind::pdl, static_cast<int>(l - labels::kPdlOffset)};
  if (labels::is_prosthesis(l)) return {SubdomainKind::prosthesis, static_cast<int>(l - labels::kProsthesisOffset)};
  return {SubdomainKind::background, 0};
}

std::string_view kind_name(SubdomainKind kind) {
  switch (kind) {
    case SubdomainKind::background: return "Background";
    case SubdomainKind::jaw: return "Jaw";
    case SubdomainKind::dentition: return "Dentition";
    case SubdomainKind::pdl: return "PDL";
    case SubdomainKind::tooth: return "Tooth";
    case SubdomainKind::prosthesis: return "Prosthesis";
  }
  return "?";
}

}  // namespace dental
