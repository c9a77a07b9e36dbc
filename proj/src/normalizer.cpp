#include "blasbench/normalizer.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/ustring.h>
#include <unicode/utf8.h>

#include <cstdint>

namespace blasbench {
namespace {

std::vector<UChar32> decode_utf8(std::string_view s) {
  std::vector<UChar32> out;
  out.reserve(s.size());
  std::int32_t i = 0;
  const std::int32_t n = static_cast<std::int32_t>(s.size());
  const std::uint8_t* p = reinterpret_cast<const std::uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) c = 0xFFFD;  // invalid byte sequence
    out.push_back(c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t len = 0;
  UBool err = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), len, U8_MAX_LENGTH, c, err);
  if (!err) out.append(buf, static_cast<std::size_t>(len));
}

std::vector<UChar32> nfc(const std::vector<UChar32>& in) {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec)) throw std::runtime_error("ICU NFC instance unavailable");
  icu::UnicodeString us;
  for (UChar32 c : in) us.append(c);
  icu::UnicodeString composed = norm->normalize(us, ec);
  if (U_FAILURE(ec)) throw std::runtime_error("NFC normalisation failed");
  std::vector<UChar32> out;
  out.reserve(static_cast<std::size_t>(composed.countChar32()));
  for (std::int32_t i = 0; i < composed.length();) {
    UChar32 c = composed.char32At(i);
    out.push_back(c);
    i += U16_LENGTH(c);
  }
  return out;
}

bool is_letter(UChar32 c) {
  switch (u_charType(c)) {
    case U_UPPERCASE_LETTER:
    case U_LOWERCASE_LETTER:
    case U_TITLECASE_LETTER:
    case U_MODIFIER_LETTER:
    case U_OTHER_LETTER:
      return true;
    default:
      return false;
  }
}

bool is_punct_or_symbol(UChar32 c) {
  switch (u_charType(c)) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

bool is_space_like(UChar32 c) {
  return u_isUWhiteSpace(c) || c == u'\t' || c == u'\n' || c == u'\r';
}

}  // namespace

NormalizedText normalize(std::string_view raw, const NormConfig& config) {
  // Zero-width and control characters go first; whitespace controls
  // (tab, LF, CR...) stay so they can separate words at the collapse stage.
  std::vector<UChar32> cps;
  for (UChar32 c : decode_utf8(raw)) {
    const auto type = u_charType(c);
    if (type == U_FORMAT_CHAR) continue;  // ZWSP, ZWNJ, BOM, ...
    if (type == U_CONTROL_CHAR && !is_space_like(c)) continue;
    cps.push_back(c);
  }

  cps = nfc(cps);

  if (config.lowercase) {
    for (UChar32& c : cps) c = u_tolower(c);
  }

  if (config.digit_policy == DigitPolicy::Reject) {
    for (UChar32 c : cps) {
      if (u_charType(c) == U_DECIMAL_DIGIT_NUMBER) {
        throw ConfigViolation("digit_policy=reject but input contains a digit");
      }
    }
  }

  std::vector<UChar32> kept;
  kept.reserve(cps.size());
  if (config.strip_punctuation) {
    for (std::size_t i = 0; i < cps.size(); ++i) {
      UChar32 c = cps[i];
      if (c == 0x2019) c = '\'';  // curly apostrophe folds to ASCII
      if (!is_punct_or_symbol(c)) {
        kept.push_back(c);
        continue;
      }
      if (c == '\'' && config.apostrophe_policy == ApostrophePolicy::KeepIntraWord &&
          i > 0 && i + 1 < cps.size() && is_letter(cps[i - 1]) && is_letter(cps[i + 1])) {
        kept.push_back(c);
        continue;
      }
      if (u_charType(c) == U_DASH_PUNCTUATION) {
        kept.push_back(' ');  // hyphenated compounds split, never fuse
      }
      // everything else: deleted
    }
  } else {
    kept = std::move(cps);
  }

  NormalizedText out;
  if (config.collapse_whitespace) {
    bool pending_space = false;
    for (UChar32 c : kept) {
      if (is_space_like(c)) {
        pending_space = !out.text.empty();
        continue;
      }
      if (pending_space) {
        append_utf8(out.text, ' ');
        ++out.char_count;
        pending_space = false;
      }
      append_utf8(out.text, c);
      ++out.char_count;
    }
  } else {
    for (UChar32 c : kept) {
      append_utf8(out.text, c);
      ++out.char_count;
    }
  }

  // word_count: space-separated tokens
  bool in_token = false;
  for (UChar32 c : decode_utf8(out.text)) {
    if (is_space_like(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++out.word_count;
    }
  }
  return out;
}

std::vector<std::string> word_tokens(const NormalizedText& t) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < t.text.size()) {
    std::size_t end = t.text.find(' ', start);
    if (end == std::string::npos) end = t.text.size();
    tokens.push_back(t.text.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

std::vector<char32_t> char_tokens(const NormalizedText& t) {
  std::vector<char32_t> out;
  out.reserve(t.char_count);
  for (UChar32 c : decode_utf8(t.text)) out.push_back(static_cast<char32_t>(c));
  return out;
}

}  // namespace blasbench
