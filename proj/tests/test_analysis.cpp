#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "blasbench/analysis.hpp"

using namespace blasbench;
namespace fs = std::filesystem;

namespace {

RunHandle make_run(std::string model, std::string dataset, double wer, double sub, double ins,
                   double del, double cer = 0.0) {
  RunHandle r;
  r.model_name = std::move(model);
  r.dataset_name = std::move(dataset);
  r.results.wer_pct = wer;
  r.results.sub_pct = sub;
  r.results.ins_pct = ins;
  r.results.del_pct = del;
  r.results.cer_pct = cer;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int c = 0;
    path = fs::temp_directory_path() / ("blasbench_analysis_" + std::to_string(c++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// run handle whose predictions.jsonl holds the given per-utterance WERs
RunHandle run_with_wers(const TempDir& tmp, const std::string& model,
                        const std::vector<std::pair<std::string, std::optional<double>>>& wers) {
  RunHandle r = make_run(model, "toy", 0, 0, 0, 0);
  r.pairs_path = tmp.path / (model + ".jsonl");
  std::ofstream out(r.pairs_path);
  for (const auto& [id, wer] : wers) {
    out << R"({"id":")" << id << R"(","wer":)";
    if (wer) out << *wer;
    else out << "null";
    out << "}\n";
  }
  return r;
}

}  // namespace

TEST_CASE("leaderboard sorts by WER ascending") {
  std::vector<RunHandle> runs = {
      make_run("whisper-large-v2", "cv", 106.0, 73.6, 19.9, 12.4, 68.5),
      make_run("azure", "cv", 22.2, 15.8, 1.7, 4.8, 11.4),
      make_run("omniASR-7B", "cv", 30.6, 25.0, 2.5, 3.2, 14.6),
  };
  const auto rows = leaderboard(runs, "cv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].model_name == "azure");
  CHECK(rows[1].model_name == "omniASR-7B");
  CHECK(rows[2].model_name == "whisper-large-v2");
}

TEST_CASE("leaderboard: single run, ties, permutation invariance") {
  CHECK(leaderboard({make_run("m", "d", 10, 1, 1, 1)}, "d").size() == 1);

  // equal displayed WER: full precision first, then name
  std::vector<RunHandle> runs = {
      make_run("bbb", "d", 30.64, 1, 1, 1),
      make_run("aaa", "d", 30.61, 1, 1, 1),
      make_run("ccc", "d", 30.61, 1, 1, 1),
  };
  auto rows = leaderboard(runs, "d");
  CHECK(rows[0].model_name == "aaa");
  CHECK(rows[1].model_name == "ccc");
  CHECK(rows[2].model_name == "bbb");

  std::mt19937 gen(3);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(runs.begin(), runs.end(), gen);
    auto again = leaderboard(runs, "d");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(again[i].model_name == rows[i].model_name);
    }
  }
}

TEST_CASE("leaderboard rejects mixed datasets") {
  CHECK_THROWS_AS(
      leaderboard({make_run("a", "cv", 10, 1, 1, 1), make_run("b", "fleurs", 10, 1, 1, 1)}, "cv"),
      AnalysisError);
}

TEST_CASE("cross_corpus_gap reproduces displayed deltas from full-precision inputs") {
  // full-precision values consistent with the rounded leaderboard figures
  const std::vector<RunHandle> cv = {
      make_run("mms-1b-all", "cv", 54.24, 0, 0, 0),
      make_run("azure", "cv", 22.24, 0, 0, 0),
      make_run("Aditya3107", "cv", 32.41, 0, 0, 0),
      make_run("cv-only-model", "cv", 50.0, 0, 0, 0),
  };
  const std::vector<RunHandle> fleurs = {
      make_run("mms-1b-all", "fleurs", 61.57, 0, 0, 0),
      make_run("azure", "fleurs", 57.48, 0, 0, 0),
      make_run("Aditya3107", "fleurs", 75.79, 0, 0, 0),
  };
  const auto rows = cross_corpus_gap(cv, fleurs);
  REQUIRE(rows.size() == 3);  // intersection only
  CHECK(rows[0].model_name == "mms-1b-all");
  CHECK(rows[0].delta_pct == doctest::Approx(7.3).epsilon(0.015));
  CHECK(rows[1].model_name == "azure");
  CHECK(rows[1].delta_pct == doctest::Approx(35.2).epsilon(0.01));
  CHECK(rows[2].model_name == "Aditya3107");
  CHECK(rows[2].delta_pct == doctest::Approx(43.4).epsilon(0.01));
}

TEST_CASE("gap: zero delta and antisymmetry") {
  const std::vector<RunHandle> a = {make_run("m", "x", 41.7, 0, 0, 0),
                                    make_run("n", "x", 20.0, 0, 0, 0)};
  const std::vector<RunHandle> b = {make_run("m", "y", 41.7, 0, 0, 0),
                                    make_run("n", "y", 35.5, 0, 0, 0)};
  const auto fwd = cross_corpus_gap(a, b);
  CHECK(fwd[0].model_name == "m");
  CHECK(fwd[0].delta_pct == 0.0);
  const auto rev = cross_corpus_gap(b, a);
  for (const GapRow& fr : fwd) {
    for (const GapRow& rr : rev) {
      if (fr.model_name == rr.model_name) CHECK(fr.delta_pct == -rr.delta_pct);
    }
  }
}

TEST_CASE("gap: empty intersection") {
  CHECK_THROWS_AS(cross_corpus_gap({make_run("a", "x", 1, 0, 0, 0)},
                                   {make_run("b", "y", 1, 0, 0, 0)}),
                  AnalysisError);
}

TEST_CASE("error_profile classes") {
  // turbo on the harder corpus: insertions dwarf everything
  CHECK(error_profile(make_run("", "", 587.6, 91.2, 491.2, 5.1).results) ==
        ErrorProfile::InsertionDominated);
  // azure on the harder corpus: deletion spike
  CHECK(error_profile(make_run("", "", 57.5, 21.5, 3.5, 32.5).results) ==
        ErrorProfile::DeletionDominated);
  // typical CTC model: substitutions
  CHECK(error_profile(make_run("", "", 54.2, 44.1, 2.8, 7.4).results) ==
        ErrorProfile::SubstitutionDominated);
  // low insertions but deletions edge out substitutions without crossing the bar
  CHECK(error_profile(make_run("", "", 30.0, 10.0, 5.0, 15.0).results) == ErrorProfile::Mixed);
  // degenerate perfect run falls to substitution by the >= rule
  CHECK(error_profile(make_run("", "", 0, 0, 0, 0).results) ==
        ErrorProfile::SubstitutionDominated);
  // threshold is strict
  CHECK(error_profile(make_run("", "", 100, 10, 20.0, 5).results, 20.0) !=
        ErrorProfile::InsertionDominated);
  CHECK(error_profile(make_run("", "", 100, 10, 20.01, 5).results, 20.0) ==
        ErrorProfile::InsertionDominated);
}

TEST_CASE("filter_hard basic semantics") {
  TempDir tmp;
  std::vector<RunHandle> runs = {
      run_with_wers(tmp, "m1", {{"u1", 60.0}, {"u2", 60.0}, {"u3", std::nullopt}}),
      run_with_wers(tmp, "m2", {{"u1", 75.0}, {"u2", 40.0}, {"u3", 80.0}}),
      run_with_wers(tmp, "m3", {{"u1", 55.0}, {"u2", 90.0}, {"u3", 80.0}}),
  };
  const HardFilterResult r = filter_hard(runs, 50.0, {});
  CHECK(r.sample_ids == std::set<std::string>{"u1"});
  CHECK(r.undefined_count == 1);
}

TEST_CASE("filter_hard: exclusion set and errors") {
  TempDir tmp;
  std::vector<RunHandle> runs = {
      run_with_wers(tmp, "good", {{"u1", 30.0}, {"u2", 70.0}}),
      run_with_wers(tmp, "whisper", {{"u1", 200.0}, {"u2", 200.0}}),
  };
  CHECK(filter_hard(runs, 50.0, {"good"}).sample_ids == std::set<std::string>{"u1", "u2"});
  CHECK(filter_hard(runs, 50.0, {}).sample_ids == std::set<std::string>{"u2"});
  CHECK_THROWS_AS(filter_hard(runs, 50.0, {"good", "whisper"}), AnalysisError);
}

TEST_CASE("filter_hard: synthetic five-utterance corpus, exactly two clear the bar") {
  TempDir tmp;
  // u2 and u5 exceed 50 for every model; u1 fails on m2, u3 fails on m1,
  // u4 sits exactly on the threshold (strict > excludes it)
  std::vector<RunHandle> runs = {
      run_with_wers(tmp, "m1",
                    {{"u1", 80.0}, {"u2", 66.7}, {"u3", 20.0}, {"u4", 50.0}, {"u5", 100.0}}),
      run_with_wers(tmp, "m2",
                    {{"u1", 45.0}, {"u2", 75.0}, {"u3", 60.0}, {"u4", 90.0}, {"u5", 51.0}}),
  };
  CHECK(filter_hard(runs, 50.0, {}).sample_ids == std::set<std::string>{"u2", "u5"});
}

TEST_CASE("filter_hard monotonicity") {
  TempDir tmp;
  std::mt19937 gen(41);
  std::uniform_real_distribution<double> wer(0.0, 120.0);
  std::vector<RunHandle> runs;
  for (int m = 0; m < 3; ++m) {
    std::vector<std::pair<std::string, std::optional<double>>> wers;
    for (int u = 0; u < 30; ++u) wers.push_back({"u" + std::to_string(u), wer(gen)});
    runs.push_back(run_with_wers(tmp, "m" + std::to_string(m), wers));
  }
  const auto at50 = filter_hard(runs, 50.0, {}).sample_ids;
  const auto at70 = filter_hard(runs, 70.0, {}).sample_ids;
  CHECK(std::includes(at50.begin(), at50.end(), at70.begin(), at70.end()));
  // adding a run can only shrink the set
  const auto fewer = filter_hard({runs[0], runs[1]}, 50.0, {}).sample_ids;
  CHECK(std::includes(fewer.begin(), fewer.end(), at50.begin(), at50.end()));
}
