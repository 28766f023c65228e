#include "sociolex/tokenize.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <vector>

namespace sociolex {

namespace {

const icu::Normalizer2* nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  return U_SUCCESS(status) ? n : nullptr;
}

bool starts_with(const std::vector<UChar32>& cps, const char* prefix) {
  std::size_t i = 0;
  for (; prefix[i] != '\0'; ++i) {
    if (i >= cps.size() || cps[i] != static_cast<UChar32>(prefix[i])) return false;
  }
  return true;
}

bool equals_ascii(const std::vector<UChar32>& cps, const char* s) {
  std::size_t i = 0;
  for (; s[i] != '\0'; ++i) {
    if (i >= cps.size() || cps[i] != static_cast<UChar32>(s[i])) return false;
  }
  return i == cps.size();
}

bool is_url_like(const std::vector<UChar32>& cps) {
  return starts_with(cps, "http://") || starts_with(cps, "https://") ||
         starts_with(cps, "www.");
}

std::string to_utf8(const UChar32* begin, const UChar32* end) {
  icu::UnicodeString us = icu::UnicodeString::fromUTF32(begin, static_cast<int32_t>(end - begin));
  std::string out;
  us.toUTF8String(out);
  return out;
}

void emit_chunk(const std::vector<UChar32>& chunk, std::vector<std::string>& out) {
  if (chunk.empty()) return;
  // Placeholder tokens pass through so tokenize is idempotent on its output.
  if (equals_ascii(chunk, kUrlToken) || equals_ascii(chunk, kMentionToken)) {
    out.push_back(to_utf8(chunk.data(), chunk.data() + chunk.size()));
    return;
  }
  if (is_url_like(chunk)) {
    out.emplace_back(kUrlToken);
    return;
  }
  if (chunk[0] == U'@' && chunk.size() > 1) {
    for (std::size_t i = 1; i < chunk.size(); ++i) {
      if (u_isalnum(chunk[i])) {
        out.emplace_back(kMentionToken);
        return;
      }
    }
  }
  std::size_t first = 0, last = chunk.size();
  while (first < last && !u_isalnum(chunk[first])) ++first;
  while (last > first && !u_isalnum(chunk[last - 1])) --last;
  if (first == last) return;
  // A URL that arrived wrapped in brackets or quotes.
  std::vector<UChar32> inner(chunk.begin() + first, chunk.begin() + last);
  if (is_url_like(inner)) {
    out.emplace_back(kUrlToken);
    return;
  }
  out.push_back(to_utf8(inner.data(), inner.data() + inner.size()));
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(text);
  if (const icu::Normalizer2* n = nfc()) {
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString tmp = n->normalize(us, status);
    if (U_SUCCESS(status)) us = std::move(tmp);
  }
  us.toLower(icu::Locale::getRoot());

  std::vector<std::string> out;
  std::vector<UChar32> chunk;
  for (int32_t i = 0; i < us.length();) {
    const UChar32 cp = us.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      emit_chunk(chunk, out);
      chunk.clear();
    } else {
      chunk.push_back(cp);
    }
  }
  emit_chunk(chunk, out);
  return out;
}

std::string normalize_token(const std::string& raw) {
  const auto toks = tokenize(raw);
  return toks.size() == 1 ? toks[0] : std::string{};
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.push_back(' ');
    s += tokens[i];
  }
  return s;
}

}  // namespace sociolex
