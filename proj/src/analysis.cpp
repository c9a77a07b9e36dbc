#include "blasbench/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>

#include "json.hpp"

namespace blasbench {

using json = nlohmann::ordered_json;

RunHandle load_run(const std::filesystem::path& run_dir) {
  auto read_json = [&](const char* name) {
    std::ifstream in(run_dir / name, std::ios::binary);
    if (!in) throw AnalysisError("cannot open " + (run_dir / name).string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw AnalysisError("malformed " + (run_dir / name).string());
    return j;
  };
  const json meta = read_json("meta.json");
  const json results = read_json("results.json");

  RunHandle run;
  run.model_name = meta.at("model_identity").get<std::string>();
  run.dataset_name = meta.at("dataset_name").get<std::string>();
  run.pairs_path = run_dir / "predictions.jsonl";

  GlobalScore& g = run.results;
  g.wer_pct = results.at("wer_pct").get<double>();
  g.cer_pct = results.at("cer_pct").get<double>();
  g.sub_pct = results.at("sub_pct").get<double>();
  g.ins_pct = results.at("ins_pct").get<double>();
  g.del_pct = results.at("del_pct").get<double>();
  g.total_ref_words = results.at("total_ref_words").get<std::uint64_t>();
  g.total_ref_chars = results.at("total_ref_chars").get<std::uint64_t>();
  g.utterance_count = results.at("utterance_count").get<std::uint64_t>();

  auto load_ci = [&](const char* key, Metric metric) {
    const json& cj = results.at("ci_95").at(key);
    BootstrapCI ci;
    ci.metric = metric;
    ci.low_pct = cj.at("low_pct").get<double>();
    ci.high_pct = cj.at("high_pct").get<double>();
    ci.resamples = cj.at("resamples").get<std::uint32_t>();
    ci.seed = cj.at("seed").get<std::int64_t>();
    ci.method = cj.at("method").get<std::string>();
    return ci;
  };
  run.wer_ci = load_ci("wer", Metric::WER);
  run.cer_ci = load_ci("cer", Metric::CER);
  return run;
}

std::vector<LeaderboardRow> leaderboard(std::vector<RunHandle> runs, const std::string& dataset) {
  for (const RunHandle& r : runs) {
    if (r.dataset_name != dataset) {
      throw AnalysisError("leaderboard: run '" + r.model_name + "' is on dataset '" +
                          r.dataset_name + "', expected '" + dataset + "'");
    }
  }
  std::sort(runs.begin(), runs.end(), [](const RunHandle& a, const RunHandle& b) {
    if (a.results.wer_pct != b.results.wer_pct) return a.results.wer_pct < b.results.wer_pct;
    return a.model_name < b.model_name;
  });
  std::vector<LeaderboardRow> rows;
  rows.reserve(runs.size());
  for (const RunHandle& r : runs) {
    rows.push_back({r.model_name, r.results.wer_pct, r.results.sub_pct, r.results.ins_pct,
                    r.results.del_pct, r.results.cer_pct});
  }
  return rows;
}

std::vector<GapRow> cross_corpus_gap(const std::vector<RunHandle>& runs_a,
                                     const std::vector<RunHandle>& runs_b) {
  std::map<std::string, double> wer_a;
  for (const RunHandle& r : runs_a) wer_a[r.model_name] = r.results.wer_pct;
  std::vector<GapRow> rows;
  for (const RunHandle& r : runs_b) {
    auto it = wer_a.find(r.model_name);
    if (it == wer_a.end()) continue;
    rows.push_back({r.model_name, it->second, r.results.wer_pct,
                    r.results.wer_pct - it->second});
  }
  if (rows.empty()) throw AnalysisError("cross_corpus_gap: no model appears in both run sets");
  std::sort(rows.begin(), rows.end(), [](const GapRow& a, const GapRow& b) {
    if (a.delta_pct != b.delta_pct) return a.delta_pct < b.delta_pct;
    return a.model_name < b.model_name;
  });
  return rows;
}

const char* error_profile_name(ErrorProfile p) {
  switch (p) {
    case ErrorProfile::SubstitutionDominated: return "substitution_dominated";
    case ErrorProfile::InsertionDominated: return "insertion_dominated";
    case ErrorProfile::DeletionDominated: return "deletion_dominated";
    case ErrorProfile::Mixed: return "mixed";
  }
  return "mixed";
}

ErrorProfile error_profile(const GlobalScore& score, double ins_threshold_pct) {
  if (score.ins_pct > ins_threshold_pct) return ErrorProfile::InsertionDominated;
  if (score.del_pct > ins_threshold_pct && score.del_pct > score.ins_pct) {
    return ErrorProfile::DeletionDominated;
  }
  if (score.sub_pct >= std::max(score.ins_pct, score.del_pct)) {
    return ErrorProfile::SubstitutionDominated;
  }
  return ErrorProfile::Mixed;
}

namespace {

// per-utterance WER column of predictions.jsonl; nullopt = undefined
std::map<std::string, std::optional<double>> per_utterance_wer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError("cannot open " + path.string());
  std::map<std::string, std::optional<double>> wers;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id")) {
      throw AnalysisError("malformed line in " + path.string());
    }
    std::optional<double> wer;
    if (j.contains("wer") && j["wer"].is_number()) wer = j["wer"].get<double>();
    wers[j["id"].get<std::string>()] = wer;
  }
  return wers;
}

}  // namespace

HardFilterResult filter_hard(const std::vector<RunHandle>& runs, double wer_threshold_pct,
                             const std::set<std::string>& exclude_models) {
  std::vector<const RunHandle*> included;
  for (const RunHandle& r : runs) {
    if (!exclude_models.count(r.model_name)) included.push_back(&r);
  }
  if (included.empty()) throw AnalysisError("filter_hard: no runs left after exclusion");
  for (const RunHandle* r : included) {
    if (r->dataset_name != included.front()->dataset_name) {
      throw AnalysisError("filter_hard: runs span multiple datasets");
    }
  }

  HardFilterResult result;
  std::vector<std::map<std::string, std::optional<double>>> tables;
  tables.reserve(included.size());
  for (const RunHandle* r : included) tables.push_back(per_utterance_wer(r->pairs_path));

  for (const auto& [id, wer] : tables.front()) {
    bool undefined = !wer.has_value();
    bool all_above = wer && *wer > wer_threshold_pct;
    for (std::size_t k = 1; k < tables.size() && (all_above || !undefined); ++k) {
      auto it = tables[k].find(id);
      if (it == tables[k].end() || !it->second) {
        undefined = true;
        all_above = false;
        break;
      }
      all_above = all_above && *it->second > wer_threshold_pct;
    }
    if (undefined) {
      ++result.undefined_count;
    } else if (all_above) {
      result.sample_ids.insert(id);
    }
  }
  return result;
}

}  // namespace blasbench
