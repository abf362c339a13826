#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace charparse::utf8 {

/// Decodes UTF-8 into Unicode scalar values. Throws charparse::Error on
/// malformed input, naming the byte offset.
std::vector<char32_t> decode(std::string_view s);

/// Encodes one scalar value as UTF-8.
std::string encode(char32_t cp);

/// Encodes a sequence of scalar values as UTF-8.
std::string encode(const std::vector<char32_t>& cps);

}  // namespace charparse::utf8
