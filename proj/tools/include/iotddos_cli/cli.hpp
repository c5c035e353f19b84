#pragma once

#include <ostream>

namespace iotddos::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kBadInput = 3;
inline constexpr int kThresholdViolated = 4;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace iotddos::cli
