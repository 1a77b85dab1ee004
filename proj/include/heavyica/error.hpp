#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heavyica {

enum class ErrorKind {
  configuration,      // invalid parameters or schema violations
  dimension_mismatch,
  numerical,          // singular matrices, non-finite values
  convergence,        // iteration or retry budget exhausted
  sampling,           // walk stuck, zero acceptances, too few samples
  io,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `stage()` is filled in by the pipeline when an
/// error crosses a stage boundary; it is empty for errors raised directly
/// by a module.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(kind_, what(), std::move(stage)); }

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace heavyica
