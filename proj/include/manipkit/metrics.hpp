#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "manipkit/errors.hpp"
#include "manipkit/grid.hpp"

namespace manipkit {

struct MaskPairScore {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  double iou = 0.0;
  double f1 = 0.0;
  double fpr_union = 0.0;  // fp / |pred ∪ gt|
};

/// Pixel-count scores. Both masks empty scores perfect (iou = f1 = 1,
/// fpr_union = 0).
inline MaskPairScore score_pair(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_size(pred, gt, "pred vs gt mask");
  MaskPairScore s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data()[i] != 0;
    const bool g = gt.data()[i] != 0;
    s.tp += (p && g);
    s.fp += (p && !g);
    s.fn += (!p && g);
    s.tn += (!p && !g);
  }
  const std::int64_t un = s.tp + s.fp + s.fn;
  if (un > 0) {
    s.iou = static_cast<double>(s.tp) / un;
    s.f1 = 2.0 * s.tp / (2.0 * s.tp + s.fp + s.fn);
    s.fpr_union = static_cast<double>(s.fp) / un;
  } else {
    s.iou = 1.0;
    s.f1 = 1.0;
    s.fpr_union = 0.0;
  }
  return s;
}

/// True = proceed with the manipulation. Skips only when fpr_union strictly
/// exceeds 0.5; the boundary value proceeds.
inline bool gate(const MaskPairScore& s) { return s.fpr_union <= 0.5; }

/// Keep only the largest 4-connected foreground component; ties go to the
/// component containing the smallest row-major pixel index.
inline BinaryMask largest_region(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height(), 0);
  std::vector<std::int32_t> label(m.size(), -1);
  std::int32_t best_label = -1;
  std::size_t best_size = 0;
  std::int32_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m.data()[start] || label[start] != -1) continue;
    const std::int32_t cur = next++;
    std::size_t sz = 0;
    stack.assign(1, start);
    label[start] = cur;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++sz;
      const int x = static_cast<int>(i % m.width());
      const int y = static_cast<int>(i / m.width());
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (!m.in_bounds(nx[k], ny[k])) continue;
        const std::size_t j = m.index(nx[k], ny[k]);
        if (m.data()[j] && label[j] == -1) {
          label[j] = cur;
          stack.push_back(j);
        }
      }
    }
    // Scan order means earlier labels start at smaller row-major indices,
    // so strict > implements the tie-break.
    if (sz > best_size) {
      best_size = sz;
      best_label = cur;
    }
  }
  if (best_label >= 0)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (label[i] == best_label) out.data()[i] = 1;
  return out;
}

struct CategoryStat {
  std::string category;
  std::size_t pairs = 0;
  double miou_pct = 0.0;  // percent, 1 decimal
  double f1_pct = 0.0;
};

struct MetricsReport {
  std::vector<CategoryStat> categories;  // sorted by category name
  CategoryStat overall;                  // category = "all", mean over every pair
};

inline double to_percent_1dp(double fraction) {
  return round_half_up(fraction * 1000.0) / 10.0;
}

/// Per-category and overall per-image means of iou and f1.
inline MetricsReport aggregate(
    const std::vector<std::pair<std::string, MaskPairScore>>& scores) {
  if (scores.empty()) throw DataError("aggregate over empty score list");
  struct Acc {
    double iou = 0.0, f1 = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> by_cat;
  Acc all;
  for (const auto& [cat, s] : scores) {
    Acc& a = by_cat[cat];
    a.iou += s.iou;
    a.f1 += s.f1;
    ++a.n;
    all.iou += s.iou;
    all.f1 += s.f1;
    ++all.n;
  }
  MetricsReport r;
  for (const auto& [cat, a] : by_cat)
    r.categories.push_back(
        {cat, a.n, to_percent_1dp(a.iou / a.n), to_percent_1dp(a.f1 / a.n)});
  r.overall = {"all", all.n, to_percent_1dp(all.iou / all.n), to_percent_1dp(all.f1 / all.n)};
  return r;
}

inline nlohmann::json metrics_report_to_json(const MetricsReport& r) {
  nlohmann::json cats = nlohmann::json::array();
  for (const CategoryStat& c : r.categories)
    cats.push_back({{"category", c.category},
                    {"pairs", c.pairs},
                    {"miou_pct", c.miou_pct},
                    {"f1_pct", c.f1_pct}});
  return nlohmann::json{{"categories", cats},
                        {"overall",
                         {{"category", r.overall.category},
                          {"pairs", r.overall.pairs},
                          {"miou_pct", r.overall.miou_pct},
                          {"f1_pct", r.overall.f1_pct}}}};
}

inline std::string metrics_report_table(const MetricsReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-20s %8s %8s\n", "Method", "mIoU", "F1");
  out += line;
  auto row = [&](const CategoryStat& c) {
    std::snprintf(line, sizeof(line), "%-20s %8.1f %8.1f\n", c.category.c_str(), c.miou_pct,
                  c.f1_pct);
    out += line;
  };
  for (const CategoryStat& c : r.categories) row(c);
  row(r.overall);
  return out;
}

}  // namespace manipkit
