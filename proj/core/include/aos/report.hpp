#pragma once

#include <span>
#include <string>

#include "aos/eval.hpp"

namespace aos {

/// Aligned table with columns ID, GT, AP, FP, TP and a closing aggregate row.
/// AP is printed in percent; "n/a" where a scene has no ground truth.
std::string format_report_text(const EvalReport& report, const std::string& title = {});

/// Same rows as comma-separated values with a header line.
std::string format_report_csv(const EvalReport& report);

/// "rank,recall,precision" lines of a PR curve.
std::string format_pr_csv(std::span<const PrPoint> curve);

}  // namespace aos
