#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ibplab {

enum class Errc {
  ZeroVector,
  StepTooLarge,
  UnboundedVolume,
  NumericBlowup,
  GridMismatch,
  BadWindow,
  DegenerateWeight,
  NotGradientSystem,
  NonFiniteSample,
  InsufficientData,
  InvalidArgument,
  ParseError,
  UnknownName,
  RangeError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception carrying a machine-readable error kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ibplab
