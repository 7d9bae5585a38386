#include "reinflect/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "reinflect/errors.hpp"
#include "reinflect/text.hpp"

namespace reinflect {

namespace {

void check_aligned(const std::vector<std::string>& predictions, const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) {
    throw InputError("prediction/gold length mismatch: " + std::to_string(predictions.size()) + " vs " +
                     std::to_string(golds.size()));
  }
  if (golds.empty()) throw InputError("cannot evaluate an empty list");
}

}  // namespace

std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
  // Two-row dynamic program over prefixes.
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t substitute = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitute});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t edit_distance(std::string_view a, std::string_view b) { return edit_distance(to_u32(a), to_u32(b)); }

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds) {
  check_aligned(predictions, golds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) correct += predictions[i] == golds[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

Evaluation evaluate(const std::vector<std::string>& predictions, const std::vector<std::string>& golds) {
  check_aligned(predictions, golds);
  Evaluation e;
  e.count = golds.size();
  e.accuracy = accuracy(predictions, golds);
  std::size_t total = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) total += edit_distance(predictions[i], golds[i]);
  e.mean_edit_distance = static_cast<double>(total) / static_cast<double>(golds.size());
  return e;
}

std::string format_report(const Evaluation& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "count: %zu\naccuracy: %.4f\nedit_distance: %.2f\naccuracy_full: %.17g\nedit_distance_full: %.17g\n",
                e.count, e.accuracy, e.mean_edit_distance, e.accuracy, e.mean_edit_distance);
  return buf;
}

}  // namespace reinflect
