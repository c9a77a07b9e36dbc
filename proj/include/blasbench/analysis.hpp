#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "blasbench/aggregator.hpp"

namespace blasbench {

// One finished run, as loaded from its artifact directory.
struct RunHandle {
  std::string model_name;
  std::string dataset_name;
  GlobalScore results;
  BootstrapCI wer_ci;
  BootstrapCI cer_ci;
  std::filesystem::path pairs_path;  // predictions.jsonl
};

// Reads meta.json + results.json of an emitted run directory.
RunHandle load_run(const std::filesystem::path& run_dir);

class AnalysisError : public std::runtime_error {
 public:
  explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

struct LeaderboardRow {
  std::string model_name;
  double wer_pct, sub_pct, ins_pct, del_pct, cer_pct;
};

// Rows sorted ascending by full-precision WER, ties broken by model name.
// All runs must be on the given dataset.
std::vector<LeaderboardRow> leaderboard(std::vector<RunHandle> runs, const std::string& dataset);

struct GapRow {
  std::string model_name;
  double wer_a_pct;
  double wer_b_pct;
  double delta_pct;  // b - a, full precision; round only for display
};

// One row per model present in both run sets, sorted by delta ascending.
std::vector<GapRow> cross_corpus_gap(const std::vector<RunHandle>& runs_a,
                                     const std::vector<RunHandle>& runs_b);

enum class ErrorProfile {
  SubstitutionDominated,
  InsertionDominated,
  DeletionDominated,
  Mixed,
};

const char* error_profile_name(ErrorProfile p);

// Classifies a run by which error type drives it. Insertion-dominated when
// ins_pct exceeds the threshold; otherwise deletion-dominated when del_pct
// exceeds the threshold and beats ins_pct; otherwise substitution-dominated
// when sub_pct is at least the larger of the two; otherwise mixed.
ErrorProfile error_profile(const GlobalScore& score, double ins_threshold_pct = 20.0);

// Sample ids whose per-utterance WER strictly exceeds the threshold in every
// included run. Utterances with undefined WER (empty reference) are skipped
// and counted in undefined_count.
struct HardFilterResult {
  std::set<std::string> sample_ids;
  std::size_t undefined_count = 0;
};
HardFilterResult filter_hard(const std::vector<RunHandle>& runs, double wer_threshold_pct,
                             const std::set<std::string>& exclude_models);

}  // namespace blasbench
