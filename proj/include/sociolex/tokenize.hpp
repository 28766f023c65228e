#pragma once

#include <string>
#include <vector>

namespace sociolex {

inline constexpr const char* kUrlToken = "<url>";
inline constexpr const char* kMentionToken = "<mention>";

// Normalizes a message text into match-ready tokens: Unicode NFC, lowercase
// (root locale), whitespace split, URL/@-mention placeholders, and
// leading/trailing non-alphanumeric characters stripped from each token.
// Internal punctuation (apostrophes, hyphens) survives. Total function:
// never throws on any input; invalid UTF-8 bytes are replaced.
std::vector<std::string> tokenize(const std::string& text);

// Single-token normalization used to validate variant/precursor lexicons:
// returns the one token tokenize() would yield, or "" if the input does not
// normalize to exactly one token identical in spirit.
std::string normalize_token(const std::string& raw);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace sociolex
