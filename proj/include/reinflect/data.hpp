#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "reinflect/example.hpp"

namespace reinflect {

struct TokenCount {
  std::string token;
  std::uint64_t count = 1;

  bool operator==(const TokenCount&) const = default;
};

// Σ: distinct characters (NFC code points) in code point order.
struct Alphabet {
  std::vector<std::string> symbols;

  bool contains(const std::string& ch) const;
  // True when every character of the word belongs to the alphabet.
  bool covers(const std::string& word) const;
  bool empty() const { return symbols.empty(); }
  std::size_t size() const { return symbols.size(); }
};

struct LabeledReadOptions {
  char tag_delimiter = ',';
};

// Three tab-separated columns: source form, target tag, target form.
// Blank lines are skipped; text is NFC-normalized.
std::vector<LabeledExample> read_labeled(std::istream& in, const std::string& source_name = "<stream>",
                                         const LabeledReadOptions& options = {});
std::vector<LabeledExample> read_labeled(const std::filesystem::path& path, const LabeledReadOptions& options = {});
void write_labeled(std::ostream& out, const std::vector<LabeledExample>& examples, char tag_delimiter = ',');

// "token<TAB>count" per line, count optional (default 1). Repeated tokens
// have their counts summed; first-occurrence order is kept.
std::vector<TokenCount> read_token_counts(std::istream& in, const std::string& source_name = "<stream>");
std::vector<TokenCount> read_token_counts(const std::filesystem::path& path);

std::vector<UnlabeledExample> read_words(const std::filesystem::path& path);
void write_words(std::ostream& out, const std::vector<UnlabeledExample>& words);

Alphabet build_alphabet(const std::vector<LabeledExample>& examples,
                        const std::vector<UnlabeledExample>& extra_words = {});
Alphabet alphabet_from_string(const std::string& characters);

// Distinct subtags of all target tags, sorted.
std::vector<std::string> collect_subtags(const std::vector<LabeledExample>& examples);

// A subsample that could not reach the requested size.
struct Sample {
  std::vector<UnlabeledExample> words;
  std::size_t requested = 0;
  bool short_of_request() const { return words.size() < requested; }
};

// Samples n distinct tokens, without replacement, among those made only of
// Σ characters and occurring at least min_count times.
Sample sample_corpus(const std::vector<TokenCount>& tokens, const Alphabet& alphabet, std::size_t n,
                     std::uint64_t min_count, std::uint64_t seed);

// n strings with length uniform in [min_len, max_len] and characters uniform over Σ.
std::vector<UnlabeledExample> gen_random_strings(const Alphabet& alphabet, std::size_t n, std::size_t min_len,
                                                 std::size_t max_len, std::uint64_t seed);

// Keeps round(ratio · labeled_count) unlabeled examples, chosen by a seeded shuffle.
Sample apply_ratio(std::size_t labeled_count, const std::vector<UnlabeledExample>& unlabeled, double ratio,
                   std::uint64_t seed);

// The first ceil(n/denominator) examples after a seeded shuffle.
std::vector<LabeledExample> take_fraction(const std::vector<LabeledExample>& examples, std::size_t denominator,
                                          std::uint64_t seed);

}  // namespace reinflect
