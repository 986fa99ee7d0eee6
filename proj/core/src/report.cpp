#include "aos/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

namespace aos {
namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string count(double v, EvalMode mode) {
  return mode == EvalMode::kIntegral ? fixed(v, 0) : fixed(v, 1);
}

std::string percent(const std::optional<double>& ap) {
  return ap ? fixed(100.0 * *ap, 1) : "n/a";
}

std::vector<std::vector<std::string>> rows(const EvalReport& report) {
  std::vector<std::vector<std::string>> out;
  out.push_back({"ID", "GT", "AP", "FP", "TP"});
  auto add = [&](const SceneRow& r) {
    out.push_back({r.id, count(r.gt, report.mode), percent(r.ap), count(r.fp, report.mode),
                   count(r.tp, report.mode)});
  };
  for (const auto& r : report.scenes) {
    add(r);
  }
  add(report.aggregate);
  return out;
}

}  // namespace

std::string format_report_text(const EvalReport& report, const std::string& title) {
  const auto table = rows(report);
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  std::ostringstream os;
  if (!title.empty()) {
    os << title << '\n';
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i + 1 == table.size()) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
    const auto& r = table[i];
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      // First column left-aligned, numbers right-aligned.
      os << (c == 0 ? r[c] + pad : pad + r[c]) << (c + 1 < r.size() ? "  " : "");
    }
    os << '\n';
  }
  if (report.mean_scene_ap) {
    os << "mean scene AP: " << fixed(100.0 * *report.mean_scene_ap, 1) << '\n';
  }
  os << "precision: " << fixed(report.precision, 4) << "  recall: " << fixed(report.recall, 4)
     << '\n';
  return os.str();
}

std::string format_report_csv(const EvalReport& report) {
  std::ostringstream os;
  for (const auto& r : rows(report)) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      os << r[c] << (c + 1 < r.size() ? "," : "\n");
    }
  }
  return os.str();
}

std::string format_pr_csv(std::span<const PrPoint> curve) {
  std::ostringstream os;
  os << "rank,recall,precision\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    os << i + 1 << ',' << fixed(curve[i].recall, 6) << ',' << fixed(curve[i].precision, 6) << '\n';
  }
  return os.str();
}

}  // namespace aos
