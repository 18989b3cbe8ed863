#pragma once

#include <string_view>

#include "json.hpp"

#include "dental/error.hpp"

namespace dental::detail {

inline nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::format, std::string("malformed JSON: ") + e.what());
  }
}

// Turns nlohmann type/range errors into parameter errors.
template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parameter, std::string("invalid field: ") + e.what());
  }
}

}  // namespace dental::detail
