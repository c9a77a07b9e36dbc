#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blasbench/aggregator.hpp"
#include "blasbench/aligner.hpp"
#include "blasbench/normalizer.hpp"

namespace blasbench {

struct Utterance {
  std::string sample_id;
  std::string reference;
  std::optional<std::string> audio_path;
  // manifests must say so explicitly when a reference is intentionally empty
  bool allow_empty_reference = false;
};

struct BootstrapParams {
  std::uint32_t resamples = 1000;
  std::int64_t seed = 42;
};

struct RunMetadata {
  std::string dataset_name;
  std::string dataset_split;
  std::uint64_t utterance_count = 0;
  std::string model_identity;
  NormConfig norm_config;
  BootstrapParams bootstrap;
  std::map<std::string, std::string> software_versions;
  std::string timestamp_utc;
  // audit flags
  std::vector<std::string> missing_prediction_ids;
  std::vector<std::string> timeout_ids;
  std::vector<std::string> empty_reference_ids;
  std::uint64_t bootstrap_zero_ref_redraws = 0;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// JSONL manifest: one object per line with fields id, reference, optional
// audio, optional allow_empty_reference. Order preserved; duplicate ids and
// undeclared empty references rejected.
std::vector<Utterance> load_manifest(const std::filesystem::path& path);

// JSONL predictions: one object per line with at least id and hypothesis.
// Extra fields (reference, wer, ...) are ignored, so released prediction
// files re-score as-is.
std::map<std::string, std::string> load_predictions(const std::filesystem::path& path);

struct AdapterOptions {
  double timeout_secs = 300.0;  // per utterance
};

struct AdapterResult {
  std::map<std::string, std::string> hypotheses;
  std::vector<std::string> timeout_ids;
};

// Runs one adapter process for the whole batch. Line protocol over the
// child's stdio: harness writes "<id>\t<audio_path>\n" per utterance, the
// adapter replies "<id>\t<transcript>\n" in any order with tabs/newlines in
// the transcript escaped as \t and \n. Utterances with no reply within the
// timeout are recorded as empty hypotheses and flagged.
AdapterResult run_adapter(const std::string& command, const std::vector<Utterance>& utterances,
                          const AdapterOptions& options = {});

// One scored utterance plus the raw texts it was scored from; the raw texts
// go into predictions.jsonl so a run can be re-scored with no audio and no
// model.
struct ScoredUtterance {
  std::string raw_ref;
  std::string raw_hyp;
  AlignedPair pair;
};

// Writes predictions.jsonl, results.json and meta.json into out_dir.
// Staged in a sibling directory and renamed, so a run directory either has
// all three files or does not exist.
void emit_artifacts(const std::vector<ScoredUtterance>& scored, const GlobalScore& global,
                    const BootstrapCI& wer_ci, const BootstrapCI& cer_ci, const RunMetadata& meta,
                    const std::filesystem::path& out_dir);

// results.json body as a string (the exact bytes emit_artifacts writes);
// rescoring compares against this.
std::string render_results_json(const GlobalScore& global, const BootstrapCI& wer_ci,
                                const BootstrapCI& cer_ci);

// Reads back an emitted run directory for re-scoring: raw texts from
// predictions.jsonl, configuration from meta.json.
struct LoadedRun {
  std::vector<Utterance> utterances;        // id + raw reference
  std::map<std::string, std::string> hypotheses;  // id -> raw hypothesis
  RunMetadata meta;
};
LoadedRun load_run_dir(const std::filesystem::path& run_dir);

}  // namespace blasbench
