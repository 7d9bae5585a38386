#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reinflect {

enum class SymbolClass { kChar, kSubtag, kMarker };

std::string_view to_string(SymbolClass c);
SymbolClass symbol_class_from_string(std::string_view s);

struct Symbol {
  SymbolClass cls;
  std::string text;

  bool operator==(const Symbol&) const = default;
  auto operator<=>(const Symbol&) const = default;
};

// Bijection between symbols and contiguous ids.
//
// Input ids cover every symbol: the markers B, E, A, UNK come first (ids 0..3),
// then characters, then subtags. Output ids cover E and the characters only:
// output id 0 is E, output id 1 + j is the j-th character. UNK is never an
// output symbol.
class Vocabulary {
 public:
  static constexpr std::size_t kBegin = 0;
  static constexpr std::size_t kEnd = 1;
  static constexpr std::size_t kAutoencode = 2;
  static constexpr std::size_t kUnknown = 3;
  static constexpr std::size_t kOutputEnd = 0;

  Vocabulary();

  // Characters and subtags are deduplicated and sorted; order is deterministic.
  static Vocabulary build(const std::vector<std::string>& characters, const std::vector<std::string>& subtags);
  // Rebuilds a vocabulary from an explicit ordered symbol list (as saved).
  static Vocabulary from_symbols(std::vector<Symbol> symbols);

  const std::vector<Symbol>& symbols() const noexcept { return symbols_; }
  std::size_t input_size() const noexcept { return symbols_.size(); }
  std::size_t output_size() const noexcept { return 1 + characters_.size(); }
  std::size_t character_count() const noexcept { return characters_.size(); }

  std::optional<std::size_t> find(SymbolClass cls, std::string_view text) const;
  // Input id of a character or subtag, UNK when absent.
  std::size_t char_id(std::string_view ch) const;
  std::size_t subtag_id(std::string_view subtag) const;
  std::optional<std::size_t> output_char_id(std::string_view ch) const;

  // Output id -> input id (to embed the previous output symbol).
  std::size_t input_id_of_output(std::size_t output_id) const { return output_to_input_.at(output_id); }
  // Character text of an output id; empty for E.
  const std::string& output_text(std::size_t output_id) const;

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  void index();

  std::vector<Symbol> symbols_;
  std::map<std::string, std::size_t, std::less<>> ids_;  // keyed by class tag + text
  std::vector<std::size_t> characters_;  // input ids of characters, in order
  std::vector<std::size_t> output_to_input_;
  std::map<std::string, std::size_t, std::less<>> output_ids_;
};

}  // namespace reinflect
