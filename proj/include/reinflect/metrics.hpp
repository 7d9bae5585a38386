#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace reinflect {

// Levenshtein distance over Unicode scalar values, unit costs.
std::size_t edit_distance(std::string_view a, std::string_view b);
std::size_t edit_distance(const std::u32string& a, const std::u32string& b);

// Fraction of exact matches. Lists must be nonempty and equally long.
double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds);

struct Evaluation {
  std::size_t count = 0;
  double accuracy = 0.0;
  double mean_edit_distance = 0.0;
};

Evaluation evaluate(const std::vector<std::string>& predictions, const std::vector<std::string>& golds);

// Accuracy to 4 decimals and edit distance to 2, plus full precision.
std::string format_report(const Evaluation& e);

}  // namespace reinflect
