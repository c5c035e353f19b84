#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iotddos {

enum class Errc {
  MalformedHeader,
  TruncatedRecord,
  MalformedRecord,
  IoFailure,
  UnsortedInput,
  SchedulingInfeasible,
  InvalidConfig,
  MissingLabel,
  TooFewRows,
  DegenerateLabels,
  DimensionMismatch,
  ArityMismatch,
  EmptyNode,
  WrongKind,
  DegenerateSplit,
  LengthMismatch,
  VersionMismatch,
};

std::string_view to_string(Errc code) noexcept;

// All library failures are reported as Error. `offset` carries a byte offset
// (binary input) or line number (text input) when one is meaningful.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what, std::optional<std::uint64_t> offset = std::nullopt)
      : std::runtime_error(format(code, what, offset)), code_(code), offset_(offset) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

private:
  static std::string format(Errc code, const std::string& what, std::optional<std::uint64_t> offset);

  Errc code_;
  std::optional<std::uint64_t> offset_;
};

} // namespace iotddos
