#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "reinflect/example.hpp"

namespace reinflect {

enum class AffixKind { kPrefix, kSuffix };

std::string to_string(AffixKind kind);

struct AffixRule {
  AffixKind kind = AffixKind::kSuffix;
  std::string source_affix;
  std::string target_affix;
  std::string tag;  // comma-joined subtags
  std::size_t support = 1;

  bool operator==(const AffixRule&) const = default;
};

// Prefix/suffix substitution rules keyed by (kind, source affix, tag).
class AffixRuleTable {
 public:
  using Key = std::tuple<AffixKind, std::string, std::string>;

  // Each pair splits into prefix, middle and suffix around the longest common
  // substring of source and target. Suffix rules are also recorded for every
  // extension into the middle. Pairs sharing no character give one suffix
  // rule rewriting the whole word.
  static AffixRuleTable extract(const std::vector<LabeledExample>& train);

  // Replaces the longest matching source suffix and the most supported
  // source prefix that starts the word. Unknown tags and unmatched words
  // are copied.
  std::string apply(const std::string& source_form, const std::vector<std::string>& tag) const;
  std::string apply(const std::string& source_form, const std::string& tag) const;

  // Adds a rule; on key collision the higher support wins, then the smaller target.
  void insert(const AffixRule& rule);

  std::vector<AffixRule> rules() const;
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  // kind<TAB>tag<TAB>source<TAB>target<TAB>support, sorted by key.
  void write(std::ostream& out) const;
  static AffixRuleTable read(std::istream& in, const std::string& source_name = "<stream>");

  bool operator==(const AffixRuleTable&) const = default;

 private:
  std::map<Key, AffixRule> rules_;
};

std::string canonical_tag(const std::vector<std::string>& tag);

}  // namespace reinflect
