#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace relprompt {

using Tokens = std::vector<std::string>;

// Whitespace tokenization, the unit every model in this library works in.
Tokens split_words(std::string_view text);

std::string join_words(std::span<const std::string> words);

std::string_view trim(std::string_view text);

// Trim and collapse internal whitespace runs to a single space.
std::string collapse_whitespace(std::string_view text);

std::string to_lower(std::string_view text);

bool ends_with(std::span<const std::string> seq, std::span<const std::string> suffix);

}  // namespace relprompt
