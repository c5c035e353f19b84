#include "iotddos/error.hpp"

namespace iotddos {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
  case Errc::MalformedHeader: return "MalformedHeader";
  case Errc::TruncatedRecord: return "TruncatedRecord";
  case Errc::MalformedRecord: return "MalformedRecord";
  case Errc::IoFailure: return "IoFailure";
  case Errc::UnsortedInput: return "UnsortedInput";
  case Errc::SchedulingInfeasible: return "SchedulingInfeasible";
  case Errc::InvalidConfig: return "InvalidConfig";
  case Errc::MissingLabel: return "MissingLabel";
  case Errc::TooFewRows: return "TooFewRows";
  case Errc::DegenerateLabels: return "DegenerateLabels";
  case Errc::DimensionMismatch: return "DimensionMismatch";
  case Errc::ArityMismatch: return "ArityMismatch";
  case Errc::EmptyNode: return "EmptyNode";
  case Errc::WrongKind: return "WrongKind";
  case Errc::DegenerateSplit: return "DegenerateSplit";
  case Errc::LengthMismatch: return "LengthMismatch";
  case Errc::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

std::string Error::format(Errc code, const std::string& what, std::optional<std::uint64_t> offset) {
  std::string msg{to_string(code)};
  msg += ": ";
  msg += what;
  if (offset) {
    msg += " (at offset ";
    msg += std::to_string(*offset);
    msg += ")";
  }
  return msg;
}

} // namespace iotddos
