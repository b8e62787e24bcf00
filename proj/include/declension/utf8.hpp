#pragma once

#include <string>
#include <string_view>

namespace declension::utf8 {

// Throws declension::Error on malformed sequences or surrogate code points.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view chars);
std::string encode(char32_t c);

// Simple case mapping for Latin, Greek and Cyrillic letters; everything else
// passes through unchanged.
char32_t to_lower(char32_t c);
/// Lowercases, using the final form for a word-final capital sigma.
std::string to_lower(std::string_view text);

}  // namespace declension::utf8
