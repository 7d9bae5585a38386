#include "reinflect/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "reinflect/errors.hpp"
#include "reinflect/rng.hpp"
#include "reinflect/text.hpp"

namespace reinflect {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  return idx;
}

}  // namespace

bool Alphabet::contains(const std::string& ch) const {
  return std::binary_search(symbols.begin(), symbols.end(), ch);
}

bool Alphabet::covers(const std::string& word) const {
  const auto chars = code_points(word);
  return std::all_of(chars.begin(), chars.end(), [&](const std::string& c) { return contains(c); });
}

std::vector<LabeledExample> read_labeled(std::istream& in, const std::string& source_name,
                                         const LabeledReadOptions& options) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(source_name, line_no, "expected 3 tab-separated columns, found " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (fields[i].empty()) throw ParseError(source_name, line_no, "empty field in column " + std::to_string(i + 1));
    }
    LabeledExample ex;
    try {
      ex.source_form = nfc(fields[0]);
      ex.target_form = nfc(fields[2]);
      for (const std::string& subtag : split(nfc(fields[1]), options.tag_delimiter)) {
        if (subtag.empty()) throw ParseError(source_name, line_no, "empty subtag in tag '" + fields[1] + "'");
        ex.target_tag.push_back(subtag);
      }
    } catch (const DataError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> read_labeled(const std::filesystem::path& path, const LabeledReadOptions& options) {
  auto in = open_input(path);
  return read_labeled(in, path.string(), options);
}

void write_labeled(std::ostream& out, const std::vector<LabeledExample>& examples, char tag_delimiter) {
  for (const LabeledExample& ex : examples) {
    out << ex.source_form << '\t' << join(ex.target_tag, std::string(1, tag_delimiter)) << '\t' << ex.target_form
        << '\n';
  }
}

std::vector<TokenCount> read_token_counts(std::istream& in, const std::string& source_name) {
  std::vector<TokenCount> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() > 2 || fields[0].empty()) {
      throw ParseError(source_name, line_no, "expected 'token' or 'token<TAB>count'");
    }
    TokenCount tc;
    try {
      tc.token = nfc(fields[0]);
    } catch (const DataError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (fields.size() == 2) {
      const std::string& c = fields[1];
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), tc.count);
      if (ec != std::errc() || ptr != c.data() + c.size() || tc.count == 0) {
        throw ParseError(source_name, line_no, "count must be a positive integer, got '" + c + "'");
      }
    }
    if (const auto it = seen.find(tc.token); it != seen.end()) {
      out[it->second].count += tc.count;
    } else {
      seen.emplace(tc.token, out.size());
      out.push_back(std::move(tc));
    }
  }
  return out;
}

std::vector<TokenCount> read_token_counts(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_token_counts(in, path.string());
}

std::vector<UnlabeledExample> read_words(const std::filesystem::path& path) {
  std::vector<UnlabeledExample> out;
  for (const TokenCount& tc : read_token_counts(path)) out.push_back({tc.token});
  return out;
}

void write_words(std::ostream& out, const std::vector<UnlabeledExample>& words) {
  for (const UnlabeledExample& w : words) out << w.word << '\n';
}

Alphabet build_alphabet(const std::vector<LabeledExample>& examples, const std::vector<UnlabeledExample>& extra_words) {
  std::set<std::string> chars;
  const auto add = [&](const std::string& word) {
    for (std::string& c : code_points(word)) chars.insert(std::move(c));
  };
  for (const LabeledExample& ex : examples) {
    add(ex.source_form);
    add(ex.target_form);
  }
  for (const UnlabeledExample& w : extra_words) add(w.word);
  return {std::vector<std::string>(chars.begin(), chars.end())};
}

Alphabet alphabet_from_string(const std::string& characters) {
  std::set<std::string> chars;
  for (std::string& c : code_points(nfc(characters))) chars.insert(std::move(c));
  return {std::vector<std::string>(chars.begin(), chars.end())};
}

std::vector<std::string> collect_subtags(const std::vector<LabeledExample>& examples) {
  std::set<std::string> subtags;
  for (const LabeledExample& ex : examples) subtags.insert(ex.target_tag.begin(), ex.target_tag.end());
  return {subtags.begin(), subtags.end()};
}

Sample sample_corpus(const std::vector<TokenCount>& tokens, const Alphabet& alphabet, std::size_t n,
                     std::uint64_t min_count, std::uint64_t seed) {
  // Distinct types in first-occurrence order, counts merged.
  std::vector<TokenCount> types;
  std::unordered_map<std::string, std::size_t> seen;
  for (const TokenCount& tc : tokens) {
    if (const auto it = seen.find(tc.token); it != seen.end()) {
      types[it->second].count += tc.count;
    } else {
      seen.emplace(tc.token, types.size());
      types.push_back(tc);
    }
  }
  std::vector<std::string> eligible;
  for (const TokenCount& tc : types) {
    if (!tc.token.empty() && tc.count >= min_count && alphabet.covers(tc.token)) eligible.push_back(tc.token);
  }
  Sample sample;
  sample.requested = n;
  const auto order = shuffled_indices(eligible.size(), seed);
  for (std::size_t i = 0; i < std::min(n, eligible.size()); ++i) sample.words.push_back({eligible[order[i]]});
  return sample;
}

std::vector<UnlabeledExample> gen_random_strings(const Alphabet& alphabet, std::size_t n, std::size_t min_len,
                                                 std::size_t max_len, std::uint64_t seed) {
  if (alphabet.empty()) throw ConfigError("cannot generate random strings over an empty alphabet");
  if (min_len < 1 || min_len > max_len) {
    throw ConfigError("random string lengths need 1 <= min_len <= max_len, got [" + std::to_string(min_len) + ", " +
                      std::to_string(max_len) + "]");
  }
  Rng rng(seed);
  std::vector<UnlabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(min_len),
                                                          static_cast<std::int64_t>(max_len)));
    std::string word;
    for (std::size_t j = 0; j < len; ++j) word += alphabet.symbols[rng.below(alphabet.size())];
    out.push_back({std::move(word)});
  }
  return out;
}

Sample apply_ratio(std::size_t labeled_count, const std::vector<UnlabeledExample>& unlabeled, double ratio,
                   std::uint64_t seed) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw ConfigError("ratio must be a finite nonnegative number");
  Sample sample;
  sample.requested = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(labeled_count)));
  const auto order = shuffled_indices(unlabeled.size(), seed);
  for (std::size_t i = 0; i < std::min(sample.requested, unlabeled.size()); ++i) {
    sample.words.push_back(unlabeled[order[i]]);
  }
  return sample;
}

std::vector<LabeledExample> take_fraction(const std::vector<LabeledExample>& examples, std::size_t denominator,
                                          std::uint64_t seed) {
  if (denominator == 0) throw ConfigError("fraction denominator must be positive");
  const std::size_t keep = (examples.size() + denominator - 1) / denominator;
  const auto order = shuffled_indices(examples.size(), seed);
  std::vector<LabeledExample> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(examples[order[i]]);
  return out;
}

}  // namespace reinflect
