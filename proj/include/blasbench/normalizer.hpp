#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blasbench {

enum class ApostrophePolicy { KeepIntraWord, StripAll };
enum class DigitPolicy { Keep, Reject };

// Normaliser configuration. The defaults are the evaluation protocol; they
// are recorded verbatim in run metadata so every score is auditable.
struct NormConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool collapse_whitespace = true;
  ApostrophePolicy apostrophe_policy = ApostrophePolicy::KeepIntraWord;
  DigitPolicy digit_policy = DigitPolicy::Keep;

  bool operator==(const NormConfig&) const = default;
};

// NFC text with no leading/trailing whitespace, no tabs/newlines, and no
// runs of more than one space. char_count counts Unicode scalar values,
// spaces included; word_count counts space-separated tokens.
struct NormalizedText {
  std::string text;
  std::size_t word_count = 0;
  std::size_t char_count = 0;

  bool operator==(const NormalizedText&) const = default;
};

// Raised when digit_policy is Reject and the input contains a digit.
class ConfigViolation : public std::runtime_error {
 public:
  explicit ConfigViolation(const std::string& what) : std::runtime_error(what) {}
};

// Irish-aware normalisation. Fixed pipeline: drop zero-width/control
// characters, NFC-compose, lowercase (simple per-scalar mapping), strip
// punctuation and symbols, collapse whitespace. Fadas survive because NFC
// runs before anything else; mutation clusters (bh-, gc-, bhf-, nG-...) are
// ordinary letters and pass through untouched.
//
// Punctuation handling: Unicode categories P* and S* are removed. Dashes
// become a space so hyphenated compounds split rather than fuse. U+2019 is
// treated as U+0027; an apostrophe with letters on both sides is kept under
// ApostrophePolicy::KeepIntraWord (d'fhear, b'ea).
NormalizedText normalize(std::string_view raw, const NormConfig& config = {});

// Splits on single spaces; joining the tokens with single spaces reproduces
// text exactly.
std::vector<std::string> word_tokens(const NormalizedText& t);

// Unicode scalar values of text in order, spaces included.
std::vector<char32_t> char_tokens(const NormalizedText& t);

}  // namespace blasbench
