#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blasbench/normalizer.hpp"

namespace blasbench {

// Minimal unit-cost edit counts against a reference of n_ref tokens.
// sub + ins + del is the edit distance; sub + del <= n_ref while ins is
// unbounded (insertions push WER past 100%).
struct ErrorCounts {
  std::uint64_t sub = 0;
  std::uint64_t ins = 0;
  std::uint64_t del = 0;
  std::uint64_t n_ref = 0;

  std::uint64_t total() const { return sub + ins + del; }
  bool operator==(const ErrorCounts&) const = default;
};

// Unit-cost DP alignment. Among equal-cost alignments the backtrace prefers
// match > substitution > deletion > insertion, so the S/I/D split is
// deterministic, not just the total.
ErrorCounts align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
ErrorCounts align(const std::vector<char32_t>& ref, const std::vector<char32_t>& hyp);

struct AlignedPair {
  std::string sample_id;
  NormalizedText ref_norm;
  NormalizedText hyp_norm;
  ErrorCounts word_counts;
  ErrorCounts char_counts;
  // nullopt = undefined (empty reference at that level)
  std::optional<double> utterance_wer;
  std::optional<double> utterance_cer;
};

// Normalises both sides with the identical config, aligns at word and char
// level independently. Normaliser configuration violations are re-thrown
// tagged with the sample id.
AlignedPair score_pair(const std::string& sample_id, const std::string& raw_ref,
                       const std::string& raw_hyp, const NormConfig& config = {});

}  // namespace blasbench
