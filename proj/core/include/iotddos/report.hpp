#pragma once

#include "iotddos/eval.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace iotddos {

enum class ReportFormat { Text, Csv, Json };

std::string_view to_string(ReportFormat f) noexcept;
std::optional<ReportFormat> report_format_from_string(std::string_view s) noexcept;

inline constexpr int kReportSchemaVersion = 1;

std::string emit_report(const EvalReport& report, ReportFormat format);
// Inverse of emit_report(..., Json).
EvalReport report_from_json(std::string_view text);

} // namespace iotddos
