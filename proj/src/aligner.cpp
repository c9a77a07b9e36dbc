#include "blasbench/aligner.hpp"

#include <algorithm>

namespace blasbench {
namespace {

// Full DP table; utterances top out around a few hundred tokens (Whisper
// repetition loops), so quadratic memory is fine.
template <class Token>
ErrorCounts align_impl(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
  const std::size_t nr = ref.size();
  const std::size_t nh = hyp.size();
  const std::size_t stride = nh + 1;
  std::vector<std::uint32_t> d((nr + 1) * stride);
  auto cell = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
    return d[i * stride + j];
  };

  for (std::size_t j = 0; j <= nh; ++j) cell(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= nr; ++i) {
    cell(i, 0) = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= nh; ++j) {
      const std::uint32_t sub_cost = cell(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::uint32_t del_cost = cell(i - 1, j) + 1;
      const std::uint32_t ins_cost = cell(i, j - 1) + 1;
      cell(i, j) = std::min({sub_cost, del_cost, ins_cost});
    }
  }

  // Backtrace with fixed preference: match > sub > del > ins.
  ErrorCounts counts;
  counts.n_ref = nr;
  std::size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    const std::uint32_t here = cell(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && cell(i - 1, j - 1) == here) {
      --i, --j;
    } else if (i > 0 && j > 0 && cell(i - 1, j - 1) + 1 == here) {
      ++counts.sub;
      --i, --j;
    } else if (i > 0 && cell(i - 1, j) + 1 == here) {
      ++counts.del;
      --i;
    } else {
      ++counts.ins;
      --j;
    }
  }
  return counts;
}

}  // namespace

ErrorCounts align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  return align_impl(ref, hyp);
}

ErrorCounts align(const std::vector<char32_t>& ref, const std::vector<char32_t>& hyp) {
  return align_impl(ref, hyp);
}

AlignedPair score_pair(const std::string& sample_id, const std::string& raw_ref,
                       const std::string& raw_hyp, const NormConfig& config) {
  AlignedPair pair;
  pair.sample_id = sample_id;
  try {
    pair.ref_norm = normalize(raw_ref, config);
    pair.hyp_norm = normalize(raw_hyp, config);
  } catch (const ConfigViolation& e) {
    throw ConfigViolation("sample '" + sample_id + "': " + e.what());
  }
  pair.word_counts = align(word_tokens(pair.ref_norm), word_tokens(pair.hyp_norm));
  pair.char_counts = align(char_tokens(pair.ref_norm), char_tokens(pair.hyp_norm));
  if (pair.word_counts.n_ref > 0) {
    pair.utterance_wer = static_cast<double>(pair.word_counts.total()) /
                         static_cast<double>(pair.word_counts.n_ref);
  }
  if (pair.char_counts.n_ref > 0) {
    pair.utterance_cer = static_cast<double>(pair.char_counts.total()) /
                         static_cast<double>(pair.char_counts.n_ref);
  }
  return pair;
}

}  // namespace blasbench
