#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "reinflect/data.hpp"
#include "reinflect/errors.hpp"
#include "reinflect/rng.hpp"
#include "reinflect/text.hpp"

using namespace reinflect;

namespace {

std::vector<LabeledExample> parse(const std::string& text, char delimiter = ',') {
  std::istringstream in(text);
  return read_labeled(in, "fixture", LabeledReadOptions{delimiter});
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

const Alphabet kLetters = alphabet_from_string("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ");

}  // namespace

TEST_CASE("labeled TSV reading") {
  const auto ex = parse("smiling\tpos=V,tense=PST\tsmiled\n");
  REQUIRE(ex.size() == 1);
  CHECK(ex[0] == LabeledExample{"smiling", {"pos=V", "tense=PST"}, "smiled"});
  CHECK(parse("").empty());
  CHECK(parse("\n\n").empty());
  CHECK(parse("a\tX\tb\r\n\nc\tY;Z\td\n", ';')[1].target_tag == std::vector<std::string>{"Y", "Z"});
}

TEST_CASE("labeled TSV errors name the line") {
  CHECK(parse_error_line("a\tX\tb\nonly\ttwo\n") == 2);
  CHECK(parse_error_line("a\tX\tb\tc\n") == 1);
  CHECK(parse_error_line("a\tX\tb\n\n\t X\tb\n") == 3);
  CHECK(parse_error_line("a\t\tb\n") == 1);
  CHECK(parse_error_line("a\tX,,Y\tb\n") == 1);
  CHECK(parse_error_line("a\tX\t\xff\n") == 1);
  CHECK_THROWS_WITH_AS(parse("x\ty\n"), doctest::Contains("fixture:1"), ParseError);
  CHECK_THROWS_AS(read_labeled(std::filesystem::path("/nonexistent/file.tsv")), DataError);
}

TEST_CASE("reading normalizes to NFC") {
  const auto ex = parse("cafe\xcc\x81\tN\tcaf\xc3\xa9s\n");
  CHECK(ex[0].source_form == "caf\xc3\xa9");
}

TEST_CASE("write then read is the identity") {
  const std::vector<LabeledExample> data{{"smiling", {"pos=V", "tense=PST"}, "smiled"},
                                         {"Haus", {"N", "PL"}, "Häuser"}};
  std::ostringstream out;
  write_labeled(out, data);
  CHECK(out.str() == "smiling\tpos=V,tense=PST\tsmiled\nHaus\tN,PL\tHäuser\n");
  CHECK(parse(out.str()) == data);
}

TEST_CASE("token count files") {
  std::istringstream in("Haus\t3\nzu\nHaus\t2\n\nbaum\t1\n");
  const auto tc = read_token_counts(in);
  REQUIRE(tc.size() == 3);
  CHECK(tc[0] == TokenCount{"Haus", 5});
  CHECK(tc[1] == TokenCount{"zu", 1});
  CHECK(tc[2] == TokenCount{"baum", 1});
  std::istringstream bad("Haus\tmany\n");
  CHECK_THROWS_AS(read_token_counts(bad), ParseError);
  std::istringstream zero("Haus\t0\n");
  CHECK_THROWS_AS(read_token_counts(zero), ParseError);
}

TEST_CASE("alphabet construction") {
  const std::vector<LabeledExample> ex{{"ab", {"T"}, "bc"}};
  const Alphabet sigma = build_alphabet(ex);
  CHECK(sigma.symbols == std::vector<std::string>{"a", "b", "c"});
  CHECK(build_alphabet({}).empty());
  const Alphabet more = build_alphabet(ex, {{"zä"}});
  for (const auto& s : sigma.symbols) CHECK(more.contains(s));
  CHECK(more.size() == 5);
  CHECK(sigma.covers("cab"));
  CHECK_FALSE(sigma.covers("cad"));
  CHECK(alphabet_from_string("cbac").symbols == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("subtags collected and sorted") {
  const std::vector<LabeledExample> ex{{"a", {"V", "PST"}, "b"}, {"a", {"N", "PL"}, "b"}, {"a", {"V"}, "b"}};
  CHECK(collect_subtags(ex) == std::vector<std::string>{"N", "PL", "PST", "V"});
}

TEST_CASE("corpus sampling filters") {
  const std::vector<TokenCount> tokens{{"Haus", 3}, {"haus7", 5}, {"zu", 1}};
  const Sample s = sample_corpus(tokens, kLetters, 10, 2, 1);
  CHECK(s.words == std::vector<UnlabeledExample>{{"Haus"}});
  CHECK(s.short_of_request());
  CHECK(sample_corpus(tokens, kLetters, 0, 2, 1).words.empty());
  CHECK(sample_corpus(tokens, kLetters, 10, 1, 1).words.size() == 2);
}

TEST_CASE("corpus sampling is a seeded draw without replacement") {
  std::vector<TokenCount> tokens;
  for (int i = 0; i < 200; ++i) {
    std::string w;
    for (int k = i; k > 0 || w.empty(); k /= 26) w += static_cast<char>('a' + k % 26);
    tokens.push_back({w, static_cast<std::uint64_t>(1 + i % 4)});
  }
  tokens.push_back({"bad1", 10});
  const Sample a = sample_corpus(tokens, kLetters, 50, 2, 9);
  const Sample b = sample_corpus(tokens, kLetters, 50, 2, 9);
  const Sample c = sample_corpus(tokens, kLetters, 50, 2, 10);
  CHECK(a.words == b.words);
  CHECK_FALSE(a.words == c.words);
  REQUIRE(a.words.size() == 50);
  CHECK_FALSE(a.short_of_request());
  std::set<std::string> seen;
  std::map<std::string, std::uint64_t> count;
  for (const auto& t : tokens) count[t.token] = t.count;
  for (const auto& w : a.words) {
    CHECK(seen.insert(w.word).second);
    CHECK(kLetters.covers(w.word));
    CHECK(count[w.word] >= 2);
  }
}

TEST_CASE("random strings respect length bounds and alphabet") {
  const Alphabet sigma = alphabet_from_string("abcdefghij");
  const auto words = gen_random_strings(sigma, 1000, 3, 20, 4);
  REQUIRE(words.size() == 1000);
  std::set<std::size_t> lengths;
  for (const auto& w : words) {
    CHECK(w.word.size() >= 3);
    CHECK(w.word.size() <= 20);
    CHECK(sigma.covers(w.word));
    lengths.insert(w.word.size());
  }
  CHECK(lengths.size() == 18);
  for (const auto& w : gen_random_strings(sigma, 100, 5, 5, 1)) CHECK(w.word.size() == 5);
}

TEST_CASE("random strings golden output") {
  const auto words = gen_random_strings(alphabet_from_string("abc"), 5, 3, 6, 7);
  const std::vector<UnlabeledExample> expected{{"aaabaa"}, {"acbaa"}, {"accaa"}, {"bcbba"}, {"aca"}};
  CHECK(words == expected);
  CHECK_FALSE(gen_random_strings(alphabet_from_string("abc"), 5, 3, 6, 8) == expected);
}

TEST_CASE("random string errors") {
  CHECK_THROWS_AS(gen_random_strings(Alphabet{}, 3, 3, 20, 1), ConfigError);
  CHECK_THROWS_AS(gen_random_strings(alphabet_from_string("ab"), 3, 0, 20, 1), ConfigError);
  CHECK_THROWS_AS(gen_random_strings(alphabet_from_string("ab"), 3, 5, 4, 1), ConfigError);
}

TEST_CASE("labeled to unlabeled ratio") {
  std::vector<UnlabeledExample> pool;
  for (int i = 0; i < 300; ++i) pool.push_back({"w" + std::to_string(i)});
  CHECK(apply_ratio(50, pool, 4.0, 1).words.size() == 200);
  CHECK(apply_ratio(50, pool, 0.0, 1).words.empty());
  CHECK(apply_ratio(64, pool, 0.5, 1).words.size() == 32);
  const Sample all = apply_ratio(100, pool, 4.0, 1);
  CHECK(all.words.size() == 300);
  CHECK(all.short_of_request());
  CHECK(apply_ratio(50, pool, 4.0, 1).words == apply_ratio(50, pool, 4.0, 1).words);
  CHECK_THROWS_AS(apply_ratio(50, pool, -1.0, 1), ConfigError);
}

TEST_CASE("fractional subsets") {
  std::vector<LabeledExample> ex;
  for (int i = 0; i < 100; ++i) ex.push_back({"s" + std::to_string(i), {"T"}, "t"});
  CHECK(take_fraction(ex, 1, 3).size() == 100);
  CHECK(take_fraction(ex, 32, 3).size() == 4);
  CHECK(take_fraction(ex, 8, 3).size() == 13);
  CHECK(take_fraction(ex, 8, 3) == take_fraction(ex, 8, 3));
  CHECK_THROWS_AS(take_fraction(ex, 0, 3), ConfigError);
}

TEST_CASE("text helpers") {
  CHECK(nfc("e\xcc\x81") == "\xc3\xa9");
  CHECK_THROWS_AS(nfc("\xc3"), DataError);
  CHECK(code_points("añb") == std::vector<std::string>{"a", "ñ", "b"});
  CHECK(to_u32("añ") == std::u32string{U'a', U'ñ'});
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(join({"a", "b"}, ", ") == "a, b");
}

TEST_CASE("seeded generator") {
  // First draw of the standard 64-bit Mersenne Twister with its default seed.
  Rng r(5489);
  CHECK(r.next() == 14514284786278117030ULL);

  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng u(11);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = u.below(7);
    REQUIRE(k < 7);
    ++hist[k];
    const double x = u.unit();
    CHECK((x >= 0.0 && x < 1.0));
    const auto y = u.between(-2, 2);
    CHECK((y >= -2 && y <= 2));
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);

  std::vector<int> perm{0, 1, 2, 3, 4, 5, 6, 7};
  u.shuffle(std::span(perm));
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});

  std::set<std::uint64_t> seeds{derive_seed(1, "shuffle", 0), derive_seed(1, "shuffle", 1), derive_seed(1, "init", 0),
                                derive_seed(2, "shuffle", 0), derive_seed(1, "sampling", 0)};
  CHECK(seeds.size() == 5);
  CHECK(derive_seed(1, "shuffle", 3) == derive_seed(1, "shuffle", 3));
}
