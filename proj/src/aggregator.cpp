#include "blasbench/aggregator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "blasbench/rng.hpp"

namespace blasbench {

GlobalScore aggregate(const std::vector<AlignedPair>& pairs) {
  if (pairs.empty()) throw AggregateError("aggregate: no scored utterances");
  std::uint64_t sub = 0, ins = 0, del = 0, ref_words = 0;
  std::uint64_t cerr = 0, ref_chars = 0;
  for (const AlignedPair& p : pairs) {
    sub += p.word_counts.sub;
    ins += p.word_counts.ins;
    del += p.word_counts.del;
    ref_words += p.word_counts.n_ref;
    cerr += p.char_counts.total();
    ref_chars += p.char_counts.n_ref;
  }
  if (ref_words == 0) {
    throw AggregateError("aggregate: total reference word count is zero (broken manifest?)");
  }
  GlobalScore g;
  const double nw = static_cast<double>(ref_words);
  // each component divided separately; sub+ins+del pct recombine to wer
  // within float rounding
  g.sub_pct = 100.0 * static_cast<double>(sub) / nw;
  g.ins_pct = 100.0 * static_cast<double>(ins) / nw;
  g.del_pct = 100.0 * static_cast<double>(del) / nw;
  g.wer_pct = 100.0 * static_cast<double>(sub + ins + del) / nw;
  g.cer_pct = ref_chars == 0 ? 0.0
                             : 100.0 * static_cast<double>(cerr) / static_cast<double>(ref_chars);
  g.total_ref_words = ref_words;
  g.total_ref_chars = ref_chars;
  g.utterance_count = pairs.size();
  return g;
}

namespace {

struct CountRow {
  std::uint64_t errors;
  std::uint64_t n_ref;
};

// Nearest-rank percentile on a sorted sample: value at rank ceil(p*n), 1-based.
double nearest_rank(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

BootstrapCI bootstrap_ci(const std::vector<AlignedPair>& pairs, Metric metric,
                         std::uint32_t resamples, std::int64_t seed, unsigned workers) {
  if (pairs.empty()) throw AggregateError("bootstrap_ci: no scored utterances");
  if (resamples < 1) throw AggregateError("bootstrap_ci: resamples must be >= 1");

  // Canonical order: sample_id ascending. Makes the draw-to-utterance map
  // independent of input order.
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].sample_id < pairs[b].sample_id;
  });

  std::vector<CountRow> rows(pairs.size());
  bool any_ref = false;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const ErrorCounts& c =
        metric == Metric::WER ? pairs[order[k]].word_counts : pairs[order[k]].char_counts;
    rows[k] = {c.total(), c.n_ref};
    any_ref = any_ref || c.n_ref > 0;
  }
  if (!any_ref) throw AggregateError("bootstrap_ci: every utterance has an empty reference");

  const std::uint64_t n = rows.size();
  std::vector<double> stats(resamples);
  std::atomic<std::uint64_t> redraws{0};

  auto run_range = [&](std::uint32_t begin, std::uint32_t end) {
    for (std::uint32_t b = begin; b < end; ++b) {
      SplitMix64 rng = bootstrap_substream(seed, b + 1);
      std::uint64_t errors = 0, refs = 0;
      do {
        errors = 0;
        refs = 0;
        for (std::uint64_t k = 0; k < n; ++k) {
          const CountRow& row = rows[rng.next_below(n)];
          errors += row.errors;
          refs += row.n_ref;
        }
        if (refs == 0) redraws.fetch_add(1, std::memory_order_relaxed);
      } while (refs == 0);
      stats[b] = 100.0 * static_cast<double>(errors) / static_cast<double>(refs);
    }
  };

  if (workers <= 1) {
    run_range(0, resamples);
  } else {
    std::vector<std::thread> pool;
    const std::uint32_t chunk = (resamples + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint32_t begin = w * chunk;
      if (begin >= resamples) break;
      const std::uint32_t end = std::min(resamples, begin + chunk);
      pool.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  std::sort(stats.begin(), stats.end());
  BootstrapCI ci;
  ci.metric = metric;
  ci.low_pct = nearest_rank(stats, 0.025);
  ci.high_pct = nearest_rank(stats, 0.975);
  ci.resamples = resamples;
  ci.seed = seed;
  ci.zero_ref_redraws = redraws.load();
  return ci;
}

}  // namespace blasbench
