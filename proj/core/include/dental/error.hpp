#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dental {

enum class Errc {
  format,
  unsupported_type,
  truncation,
  bounds,
  empty_input,
  dimension,
  marker,
  placement,
  ambiguity,
  incomplete_assignment,
  parameter,
  reference,
  empty_domain,
  singular_setup,
  element,
  configuration,
  near_incompressible,
  non_convergence,
  setup,
  sequencing,
  busy,
  io,
  usage,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure in the library is reported through this type. The code is
/// stable and is what the HTTP layer and the CLI surface to callers.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// CG ran out of iterations. Keeps the relative residual after every step.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, std::vector<double> history)
      : Error(Errc::non_convergence, message), history_(std::move(history)) {}

  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace dental
