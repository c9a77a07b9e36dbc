#include "blasbench/corpus_io.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <atomic>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace blasbench {

using json = nlohmann::ordered_json;

namespace {

json parse_jsonl_line(const std::string& line, const std::filesystem::path& path,
                      std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON line");
  }
  return j;
}

std::string require_string(const json& j, const char* key, const std::filesystem::path& path,
                           std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": missing string field '" +
                  key + "'");
  }
  return it->get<std::string>();
}

const char* apostrophe_policy_name(ApostrophePolicy p) {
  return p == ApostrophePolicy::KeepIntraWord ? "keep_intra_word" : "strip_all";
}

const char* digit_policy_name(DigitPolicy p) {
  return p == DigitPolicy::Keep ? "keep" : "reject";
}

json norm_config_to_json(const NormConfig& c) {
  json j;
  j["lowercase"] = c.lowercase;
  j["strip_punctuation"] = c.strip_punctuation;
  j["collapse_whitespace"] = c.collapse_whitespace;
  j["apostrophe_policy"] = apostrophe_policy_name(c.apostrophe_policy);
  j["digit_policy"] = digit_policy_name(c.digit_policy);
  return j;
}

NormConfig norm_config_from_json(const json& j) {
  NormConfig c;
  c.lowercase = j.at("lowercase").get<bool>();
  c.strip_punctuation = j.at("strip_punctuation").get<bool>();
  c.collapse_whitespace = j.at("collapse_whitespace").get<bool>();
  const std::string ap = j.at("apostrophe_policy").get<std::string>();
  c.apostrophe_policy =
      ap == "strip_all" ? ApostrophePolicy::StripAll : ApostrophePolicy::KeepIntraWord;
  const std::string dp = j.at("digit_policy").get<std::string>();
  c.digit_policy = dp == "reject" ? DigitPolicy::Reject : DigitPolicy::Keep;
  return c;
}

json meta_to_json(const RunMetadata& m) {
  json j;
  j["dataset_name"] = m.dataset_name;
  j["dataset_split"] = m.dataset_split;
  j["utterance_count"] = m.utterance_count;
  j["model_identity"] = m.model_identity;
  j["norm_config"] = norm_config_to_json(m.norm_config);
  j["bootstrap"] = {{"resamples", m.bootstrap.resamples}, {"seed", m.bootstrap.seed}};
  j["software_versions"] = m.software_versions;
  j["timestamp_utc"] = m.timestamp_utc;
  j["flags"] = {{"missing_prediction_ids", m.missing_prediction_ids},
                {"timeout_ids", m.timeout_ids},
                {"empty_reference_ids", m.empty_reference_ids},
                {"bootstrap_zero_ref_redraws", m.bootstrap_zero_ref_redraws}};
  return j;
}

RunMetadata meta_from_json(const json& j) {
  RunMetadata m;
  m.dataset_name = j.at("dataset_name").get<std::string>();
  m.dataset_split = j.at("dataset_split").get<std::string>();
  m.utterance_count = j.at("utterance_count").get<std::uint64_t>();
  m.model_identity = j.at("model_identity").get<std::string>();
  m.norm_config = norm_config_from_json(j.at("norm_config"));
  m.bootstrap.resamples = j.at("bootstrap").at("resamples").get<std::uint32_t>();
  m.bootstrap.seed = j.at("bootstrap").at("seed").get<std::int64_t>();
  if (j.contains("software_versions")) {
    m.software_versions = j.at("software_versions").get<std::map<std::string, std::string>>();
  }
  m.timestamp_utc = j.value("timestamp_utc", "");
  if (j.contains("flags")) {
    const json& f = j.at("flags");
    m.missing_prediction_ids = f.value("missing_prediction_ids", std::vector<std::string>{});
    m.timeout_ids = f.value("timeout_ids", std::vector<std::string>{});
    m.empty_reference_ids = f.value("empty_reference_ids", std::vector<std::string>{});
    m.bootstrap_zero_ref_redraws = f.value("bootstrap_zero_ref_redraws", std::uint64_t{0});
  }
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string unescape_transcript(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char next = s[i + 1];
      if (next == '\\') { out += '\\'; ++i; continue; }
      if (next == 't') { out += '\t'; ++i; continue; }
      if (next == 'n') { out += '\n'; ++i; continue; }
    }
    out += s[i];
  }
  return out;
}

}  // namespace

std::vector<Utterance> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::vector<Utterance> utterances;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_jsonl_line(line, path, line_no);
    Utterance u;
    u.sample_id = require_string(j, "id", path, line_no);
    u.reference = require_string(j, "reference", path, line_no);
    if (j.contains("audio") && j["audio"].is_string()) {
      u.audio_path = j["audio"].get<std::string>();
    }
    u.allow_empty_reference = j.value("allow_empty_reference", false);
    if (!seen.insert(u.sample_id).second) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": duplicate sample id '" +
                    u.sample_id + "'");
    }
    if (u.reference.empty() && !u.allow_empty_reference) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": empty reference for '" +
                    u.sample_id + "' without allow_empty_reference");
    }
    utterances.push_back(std::move(u));
  }
  return utterances;
}

std::map<std::string, std::string> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions: " + path.string());
  std::map<std::string, std::string> hyps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_jsonl_line(line, path, line_no);
    std::string id = require_string(j, "id", path, line_no);
    hyps[id] = require_string(j, "hypothesis", path, line_no);
  }
  return hyps;
}

AdapterResult run_adapter(const std::string& command, const std::vector<Utterance>& utterances,
                          const AdapterOptions& options) {
  for (const Utterance& u : utterances) {
    if (!u.audio_path) {
      throw IoError("utterance '" + u.sample_id + "' has no audio path; adapter runs need audio");
    }
  }
  ::signal(SIGPIPE, SIG_IGN);

  int to_child[2], from_child[2], err_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0 || pipe(err_child) != 0) {
    throw IoError("pipe() failed");
  }

  pid_t pid = fork();
  if (pid < 0) throw IoError("fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    dup2(err_child[1], STDERR_FILENO);
    close(to_child[0]); close(to_child[1]);
    close(from_child[0]); close(from_child[1]);
    close(err_child[0]); close(err_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  close(err_child[1]);

  // One writer, one reader, so neither side of the pipe pair can deadlock.
  // stdin is closed by the writer once all requests are out; adapters that
  // batch until EOF rely on that.
  std::atomic<bool> stdin_closed{false};
  std::thread writer([&] {
    for (const Utterance& u : utterances) {
      std::string req = u.sample_id + "\t" + *u.audio_path + "\n";
      const char* p = req.data();
      std::size_t left = req.size();
      while (left > 0) {
        ssize_t n = write(to_child[1], p, left);
        if (n <= 0) return;  // child gone; reader will notice
        p += n;
        left -= static_cast<std::size_t>(n);
      }
    }
    close(to_child[1]);
    stdin_closed = true;
  });

  std::set<std::string> outstanding;
  for (const Utterance& u : utterances) outstanding.insert(u.sample_id);

  AdapterResult result;
  std::string stdout_buf, stderr_buf;
  bool timed_out = false;
  bool eof = false;

  auto drain = [](int fd, std::string& buf) -> bool {  // false on EOF
    char chunk[4096];
    ssize_t n = read(fd, chunk, sizeof chunk);
    if (n <= 0) return false;
    buf.append(chunk, static_cast<std::size_t>(n));
    return true;
  };

  auto consume_lines = [&] {
    std::size_t pos;
    while ((pos = stdout_buf.find('\n')) != std::string::npos) {
      std::string line = stdout_buf.substr(0, pos);
      stdout_buf.erase(0, pos + 1);
      if (line.empty()) continue;
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ProtocolError("adapter reply without tab separator: " + line);
      }
      std::string id = line.substr(0, tab);
      if (outstanding.erase(id) == 0 && !result.hypotheses.count(id)) {
        throw ProtocolError("adapter replied for unknown sample id '" + id + "'");
      }
      result.hypotheses[id] = unescape_transcript(line.substr(tab + 1));
    }
  };

  // The timeout is an inactivity window: each reply resets it, so a slow but
  // live adapter is not cut off mid-batch.
  const auto window = std::chrono::duration<double>(options.timeout_secs);
  auto last_progress = std::chrono::steady_clock::now();
  try {
  while (!eof && !outstanding.empty()) {
    pollfd fds[2] = {{from_child[0], POLLIN, 0}, {err_child[0], POLLIN, 0}};
    auto remaining = window - (std::chrono::steady_clock::now() - last_progress);
    int timeout_ms = static_cast<int>(
        std::max(0.0, std::chrono::duration<double, std::milli>(remaining).count()));
    int rv = poll(fds, 2, timeout_ms);
    if (rv == 0) {
      timed_out = true;
      break;
    }
    if (fds[1].revents) drain(err_child[0], stderr_buf);
    if (fds[0].revents) {
      if (!drain(from_child[0], stdout_buf)) {
        eof = true;
      } else {
        std::size_t before = outstanding.size();
        consume_lines();
        if (outstanding.size() != before) last_progress = std::chrono::steady_clock::now();
      }
    }
  }
  } catch (...) {
    kill(pid, SIGKILL);
    writer.join();
    if (!stdin_closed) close(to_child[1]);
    close(from_child[0]);
    close(err_child[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    throw;
  }

  if (timed_out) kill(pid, SIGTERM);
  writer.join();
  if (!stdin_closed) close(to_child[1]);

  // pick up any trailing stderr
  fcntl(err_child[0], F_SETFL, O_NONBLOCK);
  while (drain(err_child[0], stderr_buf)) {}
  close(from_child[0]);
  close(err_child[0]);

  int status = 0;
  waitpid(pid, &status, 0);

  if (!timed_out && WIFEXITED(status) && WEXITSTATUS(status) != 0) {
    throw ProtocolError("adapter exited with status " + std::to_string(WEXITSTATUS(status)) +
                        "; stderr: " + stderr_buf);
  }

  // Anything unanswered scores as an empty hypothesis, flagged.
  for (const std::string& id : outstanding) {
    result.hypotheses[id] = "";
    result.timeout_ids.push_back(id);
  }
  return result;
}

std::string render_results_json(const GlobalScore& global, const BootstrapCI& wer_ci,
                                const BootstrapCI& cer_ci) {
  auto ci_json = [](const BootstrapCI& ci) {
    json j;
    j["low_pct"] = ci.low_pct;
    j["high_pct"] = ci.high_pct;
    j["resamples"] = ci.resamples;
    j["seed"] = ci.seed;
    j["method"] = ci.method;
    return j;
  };
  json j;
  j["wer_pct"] = global.wer_pct;
  j["cer_pct"] = global.cer_pct;
  j["sub_pct"] = global.sub_pct;
  j["ins_pct"] = global.ins_pct;
  j["del_pct"] = global.del_pct;
  j["total_ref_words"] = global.total_ref_words;
  j["total_ref_chars"] = global.total_ref_chars;
  j["utterance_count"] = global.utterance_count;
  j["ci_95"] = {{"wer", ci_json(wer_ci)}, {"cer", ci_json(cer_ci)}};
  return j.dump(2) + "\n";
}

void emit_artifacts(const std::vector<ScoredUtterance>& scored, const GlobalScore& global,
                    const BootstrapCI& wer_ci, const BootstrapCI& cer_ci, const RunMetadata& meta,
                    const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    throw IoError("output directory exists and is not empty: " + out_dir.string());
  }

  fs::path stage = out_dir;
  stage += ".partial";
  std::error_code ec;
  fs::remove_all(stage, ec);
  if (!fs::create_directories(stage)) {
    throw IoError("cannot create staging directory: " + stage.string());
  }

  try {
    std::ostringstream preds;
    for (const ScoredUtterance& s : scored) {
      json j;
      j["id"] = s.pair.sample_id;
      j["reference"] = s.raw_ref;
      j["hypothesis"] = s.raw_hyp;
      j["ref_norm"] = s.pair.ref_norm.text;
      j["hyp_norm"] = s.pair.hyp_norm.text;
      if (s.pair.utterance_wer) j["wer"] = 100.0 * *s.pair.utterance_wer;
      else j["wer"] = nullptr;
      if (s.pair.utterance_cer) j["cer"] = 100.0 * *s.pair.utterance_cer;
      else j["cer"] = nullptr;
      preds << j.dump() << "\n";
    }
    write_file(stage / "predictions.jsonl", preds.str());
    write_file(stage / "results.json", render_results_json(global, wer_ci, cer_ci));
    write_file(stage / "meta.json", meta_to_json(meta).dump(2) + "\n");
  } catch (...) {
    fs::remove_all(stage, ec);
    throw;
  }

  fs::remove_all(out_dir, ec);  // empty dir, if present
  fs::rename(stage, out_dir, ec);
  if (ec) {
    fs::remove_all(stage);
    throw IoError("cannot move run into place: " + out_dir.string() + ": " + ec.message());
  }
}

LoadedRun load_run_dir(const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  LoadedRun run;

  std::ifstream meta_in(run_dir / "meta.json", std::ios::binary);
  if (!meta_in) throw IoError("cannot open " + (run_dir / "meta.json").string());
  json mj = json::parse(meta_in, nullptr, false);
  if (mj.is_discarded()) throw IoError("malformed meta.json in " + run_dir.string());
  run.meta = meta_from_json(mj);

  const fs::path preds = run_dir / "predictions.jsonl";
  std::ifstream in(preds, std::ios::binary);
  if (!in) throw IoError("cannot open " + preds.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_jsonl_line(line, preds, line_no);
    Utterance u;
    u.sample_id = require_string(j, "id", preds, line_no);
    u.reference = require_string(j, "reference", preds, line_no);
    u.allow_empty_reference = true;  // emitted runs are trusted as-is
    run.hypotheses[u.sample_id] = require_string(j, "hypothesis", preds, line_no);
    run.utterances.push_back(std::move(u));
  }
  return run;
}

}  // namespace blasbench
