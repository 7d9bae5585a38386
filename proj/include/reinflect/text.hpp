#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace reinflect {

// Unicode NFC normalization of UTF-8 text. Throws DataError on invalid UTF-8.
std::string nfc(std::string_view utf8);

// Splits UTF-8 text into one string per Unicode scalar value.
std::vector<std::string> code_points(std::string_view utf8);

// Decodes UTF-8 to scalar values.
std::u32string to_u32(std::string_view utf8);

// Splits on a single-byte delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view text, char delimiter);

// Joins with a delimiter.
std::string join(const std::vector<std::string>& parts, std::string_view delimiter);

}  // namespace reinflect
