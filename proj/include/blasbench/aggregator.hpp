#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blasbench/aligner.hpp"

namespace blasbench {

// Corpus-level score: error counts are summed over all utterances first and
// divided by the total reference-unit count once at the end. This is not a
// mean of per-utterance rates.
struct GlobalScore {
  double wer_pct = 0.0;
  double cer_pct = 0.0;
  double sub_pct = 0.0;
  double ins_pct = 0.0;
  double del_pct = 0.0;
  std::uint64_t total_ref_words = 0;
  std::uint64_t total_ref_chars = 0;
  std::uint64_t utterance_count = 0;
};

enum class Metric { WER, CER };

struct BootstrapCI {
  Metric metric = Metric::WER;
  double low_pct = 0.0;
  double high_pct = 0.0;
  std::uint32_t resamples = 1000;
  std::int64_t seed = 42;
  std::string method = "percentile";
  // resamples whose draw hit only zero-reference utterances and were redrawn
  std::uint64_t zero_ref_redraws = 0;
};

class AggregateError : public std::runtime_error {
 public:
  explicit AggregateError(const std::string& what) : std::runtime_error(what) {}
};

GlobalScore aggregate(const std::vector<AlignedPair>& pairs);

// Percentile bootstrap over whole utterances: each resample draws |pairs|
// utterance indices with replacement and recomputes the global aggregate.
// Draws come from per-resample splitmix64 substreams (see rng.hpp), indexing
// the pairs sorted by sample_id, so the bounds are bit-identical for any
// input order and any worker count.
BootstrapCI bootstrap_ci(const std::vector<AlignedPair>& pairs, Metric metric,
                         std::uint32_t resamples = 1000, std::int64_t seed = 42,
                         unsigned workers = 1);

}  // namespace blasbench
