#include "reinflect/affix_baseline.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "reinflect/errors.hpp"
#include "reinflect/text.hpp"

namespace reinflect {

namespace {

using Chars = std::vector<std::string>;

struct Match {
  std::size_t length = 0;
  std::size_t source_start = 0;
  std::size_t target_start = 0;
};

// Longest common substring; ties go to the leftmost start in the source, then the target.
Match longest_common_substring(const Chars& s, const Chars& t) {
  Match best;
  std::vector<std::size_t> prev(t.size() + 1, 0), cur(t.size() + 1, 0);
  for (std::size_t i = 1; i <= s.size(); ++i) {
    for (std::size_t j = 1; j <= t.size(); ++j) {
      cur[j] = s[i - 1] == t[j - 1] ? prev[j - 1] + 1 : 0;
      if (cur[j] == 0) continue;
      const std::size_t si = i - cur[j], tj = j - cur[j];
      if (cur[j] > best.length ||
          (cur[j] == best.length && (si < best.source_start || (si == best.source_start && tj < best.target_start)))) {
        best = {cur[j], si, tj};
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

std::string slice(const Chars& c, std::size_t begin, std::size_t end) {
  std::string s;
  for (std::size_t i = begin; i < end; ++i) s += c[i];
  return s;
}

AffixKind kind_from_string(const std::string& s) {
  if (s == "prefix") return AffixKind::kPrefix;
  if (s == "suffix") return AffixKind::kSuffix;
  throw DataError("unknown affix kind '" + s + "'");
}

}  // namespace

std::string to_string(AffixKind kind) { return kind == AffixKind::kPrefix ? "prefix" : "suffix"; }

std::string canonical_tag(const std::vector<std::string>& tag) { return join(tag, ","); }

void AffixRuleTable::insert(const AffixRule& rule) {
  if (rule.support < 1) throw DataError("affix rule support must be at least 1");
  Key key{rule.kind, rule.source_affix, rule.tag};
  auto [it, inserted] = rules_.emplace(key, rule);
  if (inserted) return;
  AffixRule& old = it->second;
  if (rule.support > old.support || (rule.support == old.support && rule.target_affix < old.target_affix)) {
    old = rule;
  }
}

AffixRuleTable AffixRuleTable::extract(const std::vector<LabeledExample>& train) {
  // (kind, source, tag) -> target -> support
  std::map<Key, std::map<std::string, std::size_t>> counts;
  const auto add = [&](AffixKind kind, std::string src, std::string tgt, const std::string& tag) {
    ++counts[Key{kind, std::move(src), tag}][std::move(tgt)];
  };

  for (const LabeledExample& ex : train) {
    const std::string tag = canonical_tag(ex.target_tag);
    const Chars s = code_points(ex.source_form);
    const Chars t = code_points(ex.target_form);
    const Match m = longest_common_substring(s, t);
    if (m.length == 0) {
      add(AffixKind::kSuffix, ex.source_form, ex.target_form, tag);
      continue;
    }
    const std::size_t s_end = m.source_start + m.length, t_end = m.target_start + m.length;
    const std::string s_suffix = slice(s, s_end, s.size());
    const std::string t_suffix = slice(t, t_end, t.size());
    add(AffixKind::kPrefix, slice(s, 0, m.source_start), slice(t, 0, m.target_start), tag);
    add(AffixKind::kSuffix, s_suffix, t_suffix, tag);
    for (std::size_t k = 1; k <= m.length; ++k) {
      const std::string tail = slice(s, s_end - k, s_end);
      add(AffixKind::kSuffix, tail + s_suffix, tail + t_suffix, tag);
    }
  }

  AffixRuleTable table;
  for (const auto& [key, targets] : counts) {
    for (const auto& [target, support] : targets) {
      table.insert({std::get<0>(key), std::get<1>(key), target, std::get<2>(key), support});
    }
  }
  return table;
}

std::string AffixRuleTable::apply(const std::string& source_form, const std::vector<std::string>& tag) const {
  return apply(source_form, canonical_tag(tag));
}

std::string AffixRuleTable::apply(const std::string& source_form, const std::string& tag) const {
  const Chars chars = code_points(source_form);

  // Suffixes are tried longest first, so the first hit is the longest match.
  const AffixRule* suffix = nullptr;
  for (std::size_t start = 0; start <= chars.size() && !suffix; ++start) {
    const auto it = rules_.find(Key{AffixKind::kSuffix, slice(chars, start, chars.size()), tag});
    if (it != rules_.end()) suffix = &it->second;
  }

  // Prefix rules must match the start of the word without reaching into the suffix.
  const std::size_t suffix_len = suffix ? suffix->source_affix.size() : 0;
  const AffixRule* prefix = nullptr;
  for (const auto& [key, rule] : rules_) {
    if (rule.kind != AffixKind::kPrefix || rule.tag != tag) continue;
    if (!source_form.starts_with(rule.source_affix) || rule.source_affix.size() + suffix_len > source_form.size()) {
      continue;
    }
    if (!prefix || rule.support > prefix->support ||
        (rule.support == prefix->support && rule.source_affix.size() > prefix->source_affix.size())) {
      prefix = &rule;
    }
  }

  if (!suffix && !prefix) return source_form;
  const std::size_t begin = prefix ? prefix->source_affix.size() : 0;
  return (prefix ? prefix->target_affix : std::string()) +
         source_form.substr(begin, source_form.size() - begin - suffix_len) +
         (suffix ? suffix->target_affix : std::string());
}

std::vector<AffixRule> AffixRuleTable::rules() const {
  std::vector<AffixRule> out;
  out.reserve(rules_.size());
  for (const auto& [key, rule] : rules_) out.push_back(rule);
  return out;
}

void AffixRuleTable::write(std::ostream& out) const {
  for (const auto& [key, r] : rules_) {
    out << to_string(r.kind) << '\t' << r.tag << '\t' << r.source_affix << '\t' << r.target_affix << '\t'
        << r.support << '\n';
  }
}

AffixRuleTable AffixRuleTable::read(std::istream& in, const std::string& source_name) {
  AffixRuleTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 5) throw ParseError(source_name, line_no, "expected 5 tab-separated fields");
    AffixRule r;
    try {
      r.kind = kind_from_string(f[0]);
    } catch (const DataError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    r.tag = f[1];
    r.source_affix = f[2];
    r.target_affix = f[3];
    const auto [ptr, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.support);
    if (ec != std::errc() || ptr != f[4].data() + f[4].size() || r.support == 0) {
      throw ParseError(source_name, line_no, "support must be a positive integer, got '" + f[4] + "'");
    }
    table.insert(r);
  }
  return table;
}

}  // namespace reinflect
