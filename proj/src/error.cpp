#include "ibplab/error.hpp"

namespace ibplab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::StepTooLarge: return "StepTooLarge";
    case Errc::UnboundedVolume: return "UnboundedVolume";
    case Errc::NumericBlowup: return "NumericBlowup";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::BadWindow: return "BadWindow";
    case Errc::DegenerateWeight: return "DegenerateWeight";
    case Errc::NotGradientSystem: return "NotGradientSystem";
    case Errc::NonFiniteSample: return "NonFiniteSample";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownName: return "UnknownName";
    case Errc::RangeError: return "RangeError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ibplab
