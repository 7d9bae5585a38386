#pragma once

#include <string>
#include <vector>

namespace reinflect {

// An annotated reinflection pair: source form plus target tag -> target form.
struct LabeledExample {
  std::string source_form;
  std::vector<std::string> target_tag;  // subtags in file order
  std::string target_form;

  bool operator==(const LabeledExample&) const = default;
};

// A word used for the autoencoding task.
struct UnlabeledExample {
  std::string word;

  bool operator==(const UnlabeledExample&) const = default;
};

}  // namespace reinflect
