#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace postreason::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

/// Replaces every run of ASCII whitespace with a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Whitespace-delimited tokens.
std::vector<std::string_view> split_whitespace(std::string_view s);

bool is_word_char(char c);

/// Position of `needle` in `haystack` where neither neighbour is a word
/// character, or npos.
std::size_t find_word_bounded(std::string_view haystack, std::string_view needle,
                              std::size_t from = 0);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace postreason::text
