// blasbench: Irish-aware ASR evaluation harness.
//
// Subcommands: normalize, score, rescore, report {leaderboard,gap,profile},
// filter-hard. Exit codes: 0 success, 1 user error (flags, files, config),
// 2 adapter or protocol failure.

#include <unicode/uversion.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "blasbench/aggregator.hpp"
#include "blasbench/aligner.hpp"
#include "blasbench/analysis.hpp"
#include "blasbench/corpus_io.hpp"
#include "blasbench/normalizer.hpp"
#include "blasbench/version.hpp"

namespace {

using namespace blasbench;
using json = nlohmann::ordered_json;

struct NormFlags {
  bool no_lowercase = false;
  bool keep_punctuation = false;
  bool no_collapse_whitespace = false;
  std::string apostrophes = "keep_intra_word";
  std::string digits = "keep";

  void attach(CLI::App* cmd) {
    cmd->add_flag("--no-lowercase", no_lowercase, "Do not lowercase");
    cmd->add_flag("--keep-punctuation", keep_punctuation, "Do not strip punctuation");
    cmd->add_flag("--no-collapse-whitespace", no_collapse_whitespace,
                  "Do not collapse whitespace");
    cmd->add_option("--apostrophes", apostrophes, "keep_intra_word | strip_all")
        ->check(CLI::IsMember({"keep_intra_word", "strip_all"}))
        ->capture_default_str();
    cmd->add_option("--digits", digits, "keep | reject")
        ->check(CLI::IsMember({"keep", "reject"}))
        ->capture_default_str();
  }

  NormConfig config() const {
    NormConfig c;
    c.lowercase = !no_lowercase;
    c.strip_punctuation = !keep_punctuation;
    c.collapse_whitespace = !no_collapse_whitespace;
    c.apostrophe_policy = apostrophes == "strip_all" ? ApostrophePolicy::StripAll
                                                     : ApostrophePolicy::KeepIntraWord;
    c.digit_policy = digits == "reject" ? DigitPolicy::Reject : DigitPolicy::Keep;
    return c;
  }
};

std::string utc_now_rfc3339() {
  if (const char* fixed = std::getenv("BLASBENCH_TIMESTAMP")) return fixed;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::map<std::string, std::string> software_versions() {
  return {{"blasbench", BLASBENCH_VERSION}, {"icu", U_ICU_VERSION}};
}

// Scores all utterances in manifest order; parallel over a worker pool, but
// output is positional so the worker count never changes the artifacts.
std::vector<ScoredUtterance> score_corpus(const std::vector<Utterance>& utterances,
                                          const std::map<std::string, std::string>& hypotheses,
                                          const NormConfig& config, unsigned workers,
                                          std::vector<std::string>& missing_ids) {
  std::vector<ScoredUtterance> scored(utterances.size());
  for (const Utterance& u : utterances) {
    if (!hypotheses.count(u.sample_id)) missing_ids.push_back(u.sample_id);
  }

  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        const Utterance& u = utterances[i];
        auto it = hypotheses.find(u.sample_id);
        const std::string hyp = it == hypotheses.end() ? "" : it->second;
        scored[i] = {u.reference, hyp, score_pair(u.sample_id, u.reference, hyp, config)};
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers <= 1 || utterances.size() < 2) {
    work(0, utterances.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (utterances.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      if (begin >= utterances.size()) break;
      pool.emplace_back(work, begin, std::min(utterances.size(), begin + chunk));
    }
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return scored;
}

struct ScoreRun {
  std::vector<ScoredUtterance> scored;
  GlobalScore global;
  BootstrapCI wer_ci;
  BootstrapCI cer_ci;
};

ScoreRun run_scoring(const std::vector<Utterance>& utterances,
                     const std::map<std::string, std::string>& hypotheses,
                     const NormConfig& config, const BootstrapParams& bootstrap, unsigned workers,
                     std::vector<std::string>& missing_ids) {
  ScoreRun run;
  run.scored = score_corpus(utterances, hypotheses, config, workers, missing_ids);
  std::vector<AlignedPair> pairs;
  pairs.reserve(run.scored.size());
  for (const ScoredUtterance& s : run.scored) pairs.push_back(s.pair);
  run.global = aggregate(pairs);
  run.wer_ci = bootstrap_ci(pairs, Metric::WER, bootstrap.resamples, bootstrap.seed, workers);
  run.cer_ci = bootstrap_ci(pairs, Metric::CER, bootstrap.resamples, bootstrap.seed, workers);
  return run;
}

int cmd_normalize(const NormFlags& flags) {
  const NormConfig config = flags.config();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    try {
      std::cout << normalize(line, config).text << "\n";
    } catch (const ConfigViolation& e) {
      std::cerr << "blasbench: line " << line_no << ": " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}

void print_summary(const ScoreRun& run) {
  std::fprintf(stderr,
               "WER %.1f%% [%.1f, %.1f]  CER %.1f%% [%.1f, %.1f]  "
               "S %.1f  I %.1f  D %.1f  (%llu utterances, %llu ref words)\n",
               run.global.wer_pct, run.wer_ci.low_pct, run.wer_ci.high_pct, run.global.cer_pct,
               run.cer_ci.low_pct, run.cer_ci.high_pct, run.global.sub_pct, run.global.ins_pct,
               run.global.del_pct, (unsigned long long)run.global.utterance_count,
               (unsigned long long)run.global.total_ref_words);
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Irish-aware ASR evaluation harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("blasbench ") + BLASBENCH_VERSION + " (icu " +
                                        U_ICU_VERSION + ")");

  // normalize
  NormFlags norm_flags;
  CLI::App* normalize_cmd =
      app.add_subcommand("normalize", "Normalise UTF-8 lines from stdin to stdout");
  norm_flags.attach(normalize_cmd);

  // score
  CLI::App* score_cmd = app.add_subcommand("score", "Score a manifest against predictions");
  std::string manifest_path, predictions_path, adapter_cmd, out_dir;
  std::string dataset_name = "unspecified", dataset_split = "test", model_identity = "unspecified";
  double timeout_secs = 300.0;
  std::uint32_t resamples = 1000;
  std::int64_t seed = 42;
  unsigned workers = 1;
  NormFlags score_norm_flags;
  score_cmd->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  auto* preds_opt = score_cmd->add_option("--predictions", predictions_path, "Predictions JSONL");
  auto* adapter_opt =
      score_cmd->add_option("--adapter-cmd", adapter_cmd, "Adapter command (shell)");
  preds_opt->excludes(adapter_opt);
  score_cmd->add_option("--out-dir", out_dir, "Run output directory")->required();
  score_cmd->add_option("--timeout-secs", timeout_secs, "Adapter per-utterance timeout")
      ->capture_default_str();
  score_cmd->add_option("--dataset-name", dataset_name)->capture_default_str();
  score_cmd->add_option("--dataset-split", dataset_split)->capture_default_str();
  score_cmd->add_option("--model", model_identity, "Model identity for metadata")
      ->capture_default_str();
  score_cmd->add_option("--resamples", resamples, "Bootstrap resamples")->capture_default_str();
  score_cmd->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
  score_cmd->add_option("--workers", workers, "Worker threads")->capture_default_str();
  score_norm_flags.attach(score_cmd);

  // rescore
  CLI::App* rescore_cmd =
      app.add_subcommand("rescore", "Re-score an emitted run from its own artifacts");
  std::string rescore_run, rescore_out;
  unsigned rescore_workers = 1;
  rescore_cmd->add_option("--run", rescore_run, "Run directory")->required();
  rescore_cmd->add_option("--out-dir", rescore_out, "Emit re-scored artifacts here");
  rescore_cmd->add_option("--workers", rescore_workers, "Worker threads")->capture_default_str();

  // report
  CLI::App* report_cmd = app.add_subcommand("report", "Cross-run reports");
  report_cmd->require_subcommand(1);

  CLI::App* lb_cmd = report_cmd->add_subcommand("leaderboard", "Rank runs on one dataset");
  std::vector<std::string> lb_runs;
  std::string lb_dataset;
  bool lb_json = false;
  lb_cmd->add_option("runs", lb_runs, "Run directories")->required();
  lb_cmd->add_option("--dataset", lb_dataset, "Dataset name (default: from first run)");
  lb_cmd->add_flag("--json", lb_json, "Machine-readable output");

  CLI::App* gap_cmd = report_cmd->add_subcommand("gap", "Cross-corpus WER gap (b - a)");
  std::vector<std::string> gap_a, gap_b;
  bool gap_json = false;
  gap_cmd->add_option("--a", gap_a, "Run directories, corpus A")->required();
  gap_cmd->add_option("--b", gap_b, "Run directories, corpus B")->required();
  gap_cmd->add_flag("--json", gap_json, "Machine-readable output");

  CLI::App* profile_cmd = report_cmd->add_subcommand("profile", "Error-type classification");
  std::vector<std::string> profile_runs;
  double ins_threshold = 20.0;
  bool profile_json = false;
  profile_cmd->add_option("runs", profile_runs, "Run directories")->required();
  profile_cmd->add_option("--ins-threshold", ins_threshold, "Insertion dominance threshold (pct)")
      ->capture_default_str();
  profile_cmd->add_flag("--json", profile_json, "Machine-readable output");

  // filter-hard
  CLI::App* hard_cmd =
      app.add_subcommand("filter-hard", "Utterances hard for every included run");
  std::vector<std::string> hard_runs, hard_exclude;
  double hard_threshold = 50.0;
  bool hard_json = false;
  hard_cmd->add_option("runs", hard_runs, "Run directories")->required();
  hard_cmd->add_option("--threshold", hard_threshold, "Per-utterance WER threshold (pct)")
      ->capture_default_str();
  hard_cmd->add_option("--exclude", hard_exclude, "Model names to exclude");
  hard_cmd->add_flag("--json", hard_json, "Machine-readable output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (normalize_cmd->parsed()) return cmd_normalize(norm_flags);

    if (score_cmd->parsed()) {
      if (predictions_path.empty() && adapter_cmd.empty()) {
        std::cerr << "blasbench: score needs --predictions or --adapter-cmd\n";
        return 1;
      }
      const std::vector<Utterance> utterances = load_manifest(manifest_path);
      RunMetadata meta;
      meta.dataset_name = dataset_name;
      meta.dataset_split = dataset_split;
      meta.model_identity = model_identity;
      meta.norm_config = score_norm_flags.config();
      meta.bootstrap = {resamples, seed};
      meta.software_versions = software_versions();
      meta.timestamp_utc = utc_now_rfc3339();
      for (const Utterance& u : utterances) {
        if (u.reference.empty()) meta.empty_reference_ids.push_back(u.sample_id);
      }

      std::map<std::string, std::string> hypotheses;
      if (!adapter_cmd.empty()) {
        AdapterResult ar = run_adapter(adapter_cmd, utterances, {timeout_secs});
        hypotheses = std::move(ar.hypotheses);
        meta.timeout_ids = std::move(ar.timeout_ids);
      } else {
        hypotheses = load_predictions(predictions_path);
      }

      ScoreRun run = run_scoring(utterances, hypotheses, meta.norm_config, meta.bootstrap,
                                 workers, meta.missing_prediction_ids);
      meta.utterance_count = run.scored.size();
      meta.bootstrap_zero_ref_redraws =
          run.wer_ci.zero_ref_redraws + run.cer_ci.zero_ref_redraws;
      emit_artifacts(run.scored, run.global, run.wer_ci, run.cer_ci, meta, out_dir);
      print_summary(run);
      return 0;
    }

    if (rescore_cmd->parsed()) {
      LoadedRun loaded = load_run_dir(rescore_run);
      RunMetadata meta = loaded.meta;
      meta.missing_prediction_ids.clear();
      ScoreRun run = run_scoring(loaded.utterances, loaded.hypotheses, meta.norm_config,
                                 meta.bootstrap, rescore_workers, meta.missing_prediction_ids);
      meta.bootstrap_zero_ref_redraws =
          run.wer_ci.zero_ref_redraws + run.cer_ci.zero_ref_redraws;

      const std::string recomputed = render_results_json(run.global, run.wer_ci, run.cer_ci);
      std::ifstream orig(std::filesystem::path(rescore_run) / "results.json", std::ios::binary);
      std::stringstream orig_buf;
      orig_buf << orig.rdbuf();
      const bool match = orig && orig_buf.str() == recomputed;

      if (!rescore_out.empty()) {
        emit_artifacts(run.scored, run.global, run.wer_ci, run.cer_ci, meta, rescore_out);
      }
      print_summary(run);
      if (!match) {
        std::cerr << "blasbench: rescore MISMATCH against " << rescore_run << "/results.json\n";
        return 1;
      }
      std::cerr << "blasbench: rescore reproduces " << rescore_run << "/results.json exactly\n";
      return 0;
    }

    if (lb_cmd->parsed()) {
      std::vector<RunHandle> runs;
      for (const std::string& dir : lb_runs) runs.push_back(load_run(dir));
      if (lb_dataset.empty() && !runs.empty()) lb_dataset = runs.front().dataset_name;
      const auto rows = leaderboard(runs, lb_dataset);
      if (lb_json) {
        json out = json::array();
        for (const auto& r : rows) {
          out.push_back({{"model", r.model_name},
                         {"wer_pct", r.wer_pct},
                         {"sub_pct", r.sub_pct},
                         {"ins_pct", r.ins_pct},
                         {"del_pct", r.del_pct},
                         {"cer_pct", r.cer_pct}});
        }
        std::cout << out.dump(2) << "\n";
      } else {
        std::printf("%-32s %8s %6s %6s %6s %8s\n", "MODEL", "WER", "SUB", "INS", "DEL", "CER");
        for (const auto& r : rows) {
          std::printf("%-32s %8.1f %6.1f %6.1f %6.1f %8.1f\n", r.model_name.c_str(), r.wer_pct,
                      r.sub_pct, r.ins_pct, r.del_pct, r.cer_pct);
        }
      }
      return 0;
    }

    if (gap_cmd->parsed()) {
      std::vector<RunHandle> a, b;
      for (const std::string& dir : gap_a) a.push_back(load_run(dir));
      for (const std::string& dir : gap_b) b.push_back(load_run(dir));
      const auto rows = cross_corpus_gap(a, b);
      if (gap_json) {
        json out = json::array();
        for (const auto& r : rows) {
          out.push_back({{"model", r.model_name},
                         {"wer_a_pct", r.wer_a_pct},
                         {"wer_b_pct", r.wer_b_pct},
                         {"delta_pct", r.delta_pct}});
        }
        std::cout << out.dump(2) << "\n";
      } else {
        std::printf("%-32s %8s %8s %8s\n", "MODEL", "A", "B", "DELTA");
        for (const auto& r : rows) {
          std::printf("%-32s %8.1f %8.1f %+8.1f\n", r.model_name.c_str(), round1(r.wer_a_pct),
                      round1(r.wer_b_pct), round1(r.delta_pct));
        }
      }
      return 0;
    }

    if (profile_cmd->parsed()) {
      json out = json::array();
      for (const std::string& dir : profile_runs) {
        const RunHandle run = load_run(dir);
        const ErrorProfile p = error_profile(run.results, ins_threshold);
        if (profile_json) {
          out.push_back({{"model", run.model_name},
                         {"dataset", run.dataset_name},
                         {"profile", error_profile_name(p)}});
        } else {
          std::printf("%-32s %-16s %s\n", run.model_name.c_str(), run.dataset_name.c_str(),
                      error_profile_name(p));
        }
      }
      if (profile_json) std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (hard_cmd->parsed()) {
      std::vector<RunHandle> runs;
      for (const std::string& dir : hard_runs) runs.push_back(load_run(dir));
      const std::set<std::string> exclude(hard_exclude.begin(), hard_exclude.end());
      const HardFilterResult result = filter_hard(runs, hard_threshold, exclude);
      if (hard_json) {
        json out;
        out["sample_ids"] = result.sample_ids;
        out["undefined_count"] = result.undefined_count;
        std::cout << out.dump(2) << "\n";
      } else {
        for (const std::string& id : result.sample_ids) std::cout << id << "\n";
        std::cerr << "blasbench: " << result.sample_ids.size() << " hard utterances, "
                  << result.undefined_count << " skipped (undefined WER)\n";
      }
      return 0;
    }
  } catch (const ProtocolError& e) {
    std::cerr << "blasbench: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "blasbench: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
