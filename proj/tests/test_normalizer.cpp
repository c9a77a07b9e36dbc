#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <random>

#include "blasbench/normalizer.hpp"

using namespace blasbench;

namespace {

std::string to_nfd(const std::string& utf8) {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(ec);
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(utf8);
  std::string out;
  nfd->normalize(us, ec).toUTF8String(out);
  REQUIRE(U_SUCCESS(ec));
  return out;
}

}  // namespace

TEST_CASE("default pipeline: lowercase, punctuation, fada survival") {
  NormalizedText t = normalize("Féar úr!");
  CHECK(t.text == "féar úr");
  CHECK(t.word_count == 2);
  CHECK(t.char_count == 7);
}

TEST_CASE("NFD input composes to precomposed scalars") {
  // "fe" + COMBINING ACUTE + "ar"
  NormalizedText t = normalize("fe\xcc\x81\x61r");
  CHECK(t.text == "f\xc3\xa9\x61r");  // é as one scalar
  CHECK(t.char_count == 4);
}

TEST_CASE("eclipsis clusters pass through as ordinary letters") {
  CHECK(normalize("i nGaillimh Thiar").text == "i ngaillimh thiar");
}

TEST_CASE("empty input") {
  NormalizedText t = normalize("");
  CHECK(t.text == "");
  CHECK(t.word_count == 0);
  CHECK(t.char_count == 0);
}

TEST_CASE("apostrophe policy") {
  NormConfig keep;
  CHECK(normalize("d'fhear   an   tí", keep).text == "d'fhear an tí");
  NormConfig strip = keep;
  strip.apostrophe_policy = ApostrophePolicy::StripAll;
  CHECK(normalize("d'fhear   an   tí", strip).text == "dfhear an tí");
}

TEST_CASE("curly apostrophe folds to ASCII before classification") {
  CHECK(normalize("d\xe2\x80\x99"
                  "fhear").text == "d'fhear");
}

TEST_CASE("word-boundary apostrophes are stripped even under keep_intra_word") {
  CHECK(normalize("'sea' abair").text == "sea abair");
}

TEST_CASE("hyphens split into two words") {
  NormalizedText t = normalize("sean-nós");
  CHECK(t.text == "sean nós");
  CHECK(t.word_count == 2);
}

TEST_CASE("digit policy") {
  CHECK(normalize("80211n agus 24ghz").text == "80211n agus 24ghz");
  NormConfig reject;
  reject.digit_policy = DigitPolicy::Reject;
  CHECK_THROWS_AS(normalize("bliain 1916", reject), ConfigViolation);
  CHECK_NOTHROW(normalize("gan uimhir", reject));
}

TEST_CASE("zero-width and control characters are dropped") {
  // ZWSP between letters, BEL control, tab still separates words
  CHECK(normalize("f\xe2\x80\x8b\x65\x61r").text == "fear");
  CHECK(normalize("a\x07ial").text == "aial");
  CHECK(normalize("dia\tdhuit\ndaoibh").text == "dia dhuit daoibh");
}

TEST_CASE("whitespace trimmed and collapsed") {
  NormalizedText t = normalize("  a  b \t c \n ");
  CHECK(t.text == "a b c");
  CHECK(t.word_count == 3);
  CHECK(t.char_count == 5);
}

TEST_CASE("word_tokens") {
  CHECK(word_tokens(normalize("dia dhaoibh tráthnóna")) ==
        std::vector<std::string>{"dia", "dhaoibh", "tráthnóna"});
  CHECK(word_tokens(normalize("")).empty());
  CHECK(word_tokens(normalize("féar")) == std::vector<std::string>{"féar"});
}

TEST_CASE("char_tokens") {
  auto cs = char_tokens(normalize("ab c"));
  CHECK(cs == std::vector<char32_t>{U'a', U'b', U' ', U'c'});
  auto fe = char_tokens(normalize("féar"));
  CHECK(fe == std::vector<char32_t>{U'f', U'é', U'a', U'r'});
  CHECK(char_tokens(normalize("")).empty());
}

TEST_CASE("property: idempotence and NFC stability") {
  std::mt19937 gen(1234);
  const std::vector<std::string> atoms = {"a", "b",  "á",  "é", "í",  "ó", "ú", " ",
                                          "Á", "É",  "'",  "-", "!",  ",", "“", "”",
                                          "…", "\t", "  ", "x", "bh", "nG"};
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  std::uniform_int_distribution<int> len(0, 24);
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw;
    const int n = len(gen);
    for (int k = 0; k < n; ++k) raw += atoms[pick(gen)];
    const NormalizedText once = normalize(raw);
    CHECK(normalize(once.text) == once);
    CHECK(normalize(to_nfd(raw)) == once);
  }
}

TEST_CASE("property: fada alphabet strings are identity up to whitespace collapse") {
  std::mt19937 gen(99);
  const std::u32string alphabet = U"abcdefghijklmnopqrstuvwxyzáéíóú ";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::u32string s32;
    for (int k = 0; k < 12; ++k) s32 += alphabet[pick(gen)];
    // encode, normalise, and compare against a hand-collapsed expectation
    std::string raw;
    for (char32_t c : s32) {
      if (c < 0x80) raw += static_cast<char>(c);
      else {  // all fada vowels are 2-byte UTF-8
        raw += static_cast<char>(0xC0 | (c >> 6));
        raw += static_cast<char>(0x80 | (c & 0x3F));
      }
    }
    std::string expected;
    for (char ch : raw) {
      if (ch == ' ') {
        if (!expected.empty() && expected.back() != ' ') expected += ' ';
      } else {
        expected += ch;
      }
    }
    while (!expected.empty() && expected.back() == ' ') expected.pop_back();
    CHECK(normalize(raw).text == expected);
  }
}

TEST_CASE("property: join/split round trip and char_count identity") {
  const std::vector<std::string> samples = {
      "d'fhear an tí", "i nGaillimh Thiar!", "  “Féar — úr”  ", "tabhair cabhair don fhoireann"};
  for (const std::string& raw : samples) {
    const NormalizedText t = normalize(raw);
    const auto words = word_tokens(t);
    std::string joined;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) joined += ' ';
      joined += words[i];
    }
    CHECK(joined == t.text);
    CHECK(words.size() == t.word_count);
    CHECK(char_tokens(t).size() == t.char_count);
    std::size_t scalar_sum = 0;
    for (const auto& w : words) scalar_sum += char_tokens(normalize(w)).size();
    if (!words.empty()) scalar_sum += words.size() - 1;
    CHECK(scalar_sum == t.char_count);
  }
}

TEST_CASE("default output has no uppercase and no stray punctuation") {
  const NormalizedText t = normalize("“Ní Bheidh — d'Fhear; (b'ea).”");
  for (char32_t c : char_tokens(t)) {
    CHECK((c == U' ' || c == U'\'' || (c >= U'a' && c <= U'z') || c == U'í' ||
           c == U'é'));
  }
  CHECK(t.text == "ní bheidh d'fhear b'ea");
}
