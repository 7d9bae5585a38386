#include "reinflect/vocabulary.hpp"

#include <algorithm>
#include <set>

#include "reinflect/errors.hpp"

namespace reinflect {

namespace {

const char* const kMarkerText[] = {"<B>", "<E>", "<A>", "<UNK>"};

std::string key(SymbolClass cls, std::string_view text) {
  std::string k(1, static_cast<char>('0' + static_cast<int>(cls)));
  k += '\x1f';
  k += text;
  return k;
}

const std::string kEmpty;

}  // namespace

std::string_view to_string(SymbolClass c) {
  switch (c) {
    case SymbolClass::kChar: return "char";
    case SymbolClass::kSubtag: return "subtag";
    case SymbolClass::kMarker: return "marker";
  }
  return "?";
}

SymbolClass symbol_class_from_string(std::string_view s) {
  if (s == "char") return SymbolClass::kChar;
  if (s == "subtag") return SymbolClass::kSubtag;
  if (s == "marker") return SymbolClass::kMarker;
  throw VocabularyError("unknown symbol class '" + std::string(s) + "'");
}

Vocabulary::Vocabulary() {
  for (const char* m : kMarkerText) symbols_.push_back({SymbolClass::kMarker, m});
  index();
}

Vocabulary Vocabulary::build(const std::vector<std::string>& characters, const std::vector<std::string>& subtags) {
  std::vector<Symbol> symbols;
  for (const char* m : kMarkerText) symbols.push_back({SymbolClass::kMarker, m});
  for (const std::string& c : std::set<std::string>(characters.begin(), characters.end())) {
    symbols.push_back({SymbolClass::kChar, c});
  }
  for (const std::string& t : std::set<std::string>(subtags.begin(), subtags.end())) {
    symbols.push_back({SymbolClass::kSubtag, t});
  }
  return from_symbols(std::move(symbols));
}

Vocabulary Vocabulary::from_symbols(std::vector<Symbol> symbols) {
  if (symbols.size() < 4) throw VocabularyError("vocabulary lacks the four marker symbols");
  for (std::size_t i = 0; i < 4; ++i) {
    if (symbols[i] != Symbol{SymbolClass::kMarker, kMarkerText[i]}) {
      throw VocabularyError("vocabulary position " + std::to_string(i) + " must hold marker " + kMarkerText[i]);
    }
  }
  Vocabulary v;
  v.symbols_ = std::move(symbols);
  v.index();
  return v;
}

void Vocabulary::index() {
  ids_.clear();
  characters_.clear();
  output_ids_.clear();
  output_to_input_.assign(1, kEnd);
  for (std::size_t id = 0; id < symbols_.size(); ++id) {
    const Symbol& s = symbols_[id];
    if (s.text.empty()) throw VocabularyError("empty symbol at id " + std::to_string(id));
    if (s.cls == SymbolClass::kMarker && id >= 4) {
      throw VocabularyError("duplicate marker symbol '" + s.text + "'");
    }
    if (!ids_.emplace(key(s.cls, s.text), id).second) {
      throw VocabularyError("duplicate " + std::string(to_string(s.cls)) + " symbol '" + s.text + "'");
    }
    if (s.cls == SymbolClass::kChar) {
      characters_.push_back(id);
      output_ids_.emplace(s.text, output_to_input_.size());
      output_to_input_.push_back(id);
    }
  }
}

std::optional<std::size_t> Vocabulary::find(SymbolClass cls, std::string_view text) const {
  const auto it = ids_.find(key(cls, text));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::char_id(std::string_view ch) const {
  return find(SymbolClass::kChar, ch).value_or(kUnknown);
}

std::size_t Vocabulary::subtag_id(std::string_view subtag) const {
  return find(SymbolClass::kSubtag, subtag).value_or(kUnknown);
}

std::optional<std::size_t> Vocabulary::output_char_id(std::string_view ch) const {
  const auto it = output_ids_.find(ch);
  if (it == output_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::output_text(std::size_t output_id) const {
  if (output_id == kOutputEnd) return kEmpty;
  return symbols_.at(output_to_input_.at(output_id)).text;
}

}  // namespace reinflect
