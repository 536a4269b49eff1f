#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fixseeker/evalkit.hpp"
#include "fixseeker/gnn.hpp"

namespace fixseeker::app {

namespace fs = std::filesystem;

struct CommitRequest {
  std::string spec;
  std::optional<Label> label;
};

/// `commits` is a commit-list file (one "commit [label]" per line, '#'
/// comments), an "A..B" range, or a single commit.
std::vector<CommitRequest> commit_requests(const fs::path& repo, const std::string& commits);

struct BuildGraphOptions {
  fs::path repo;
  std::string commits;
  fs::path out;
  int jobs = 1;
};

struct BuildGraphResult {
  fs::path dir;                      // <out>/<repo name>
  std::vector<fs::path> written;     // in request order
  std::size_t failed = 0;
  fs::path log;                      // per-commit failures
  std::optional<fs::path> manifest;  // only when the list carries labels
};

/// One .hcg per commit under <out>/<repo name>/; failures are logged and
/// never abort the batch.
BuildGraphResult build_graphs(const BuildGraphOptions& opts, std::ostream& diag);

struct TrainOptions {
  fs::path manifest;
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ratio;  // re-sample non-VFCs at 1:k first
  std::string embedder = "builtin";
  bool allow_fallback = false;
  std::optional<int> threads;
};

struct TrainSummary {
  TrainResult result;
  fs::path checkpoint;
  fs::path history;
  fs::path test_manifest;
  std::size_t train = 0, val = 0, test = 0;
};

/// Split, embed, train; writes the checkpoint, <out>.history and
/// <out>.test.tsv (the held-out split as a manifest).
TrainSummary train_model(const TrainOptions& opts, std::ostream& diag);

struct EvaluateOptions {
  fs::path manifest;
  fs::path checkpoint;
  std::optional<fs::path> report;
  std::string embedder = "builtin";
  bool allow_fallback = false;
  std::optional<double> threshold;
};

/// Throws SingleClass unless the manifest holds both labels.
MetricsReport evaluate_model(const EvaluateOptions& opts, std::ostream& diag);

struct ScanRow {
  std::string commit;
  double p_vfc = 0;
  int loc_changed = 0;
  std::string top_pair;
};

struct ScanReport {
  std::string model_id;
  std::string embedder;
  double threshold = 0.5;
  std::vector<ScanRow> rows;                                  // p_vfc descending
  std::vector<std::pair<std::string, std::string>> skipped;  // commit, reason
};

struct ScanOptions {
  fs::path repo;
  std::string range;
  fs::path checkpoint;
  std::string embedder = "builtin";
  bool allow_fallback = false;
  std::optional<double> threshold;
  int jobs = 1;
};

ScanReport scan(const ScanOptions& opts, std::ostream& diag);
std::string format_scan_table(const ScanReport& r);
std::string format_scan_report(const ScanReport& r);

/// Pair of hunks with the most correlation kinds, as "a.c:12 -> b.c:40 CALL+DD".
std::string top_pair_summary(const CommitHCG& g);

/// 16 hex digits of the FNV-1a hash of the checkpoint bytes.
std::string model_id(std::string_view checkpoint_text);

std::string read_text(const fs::path& p);
void write_text(const fs::path& p, std::string_view text);

}  // namespace fixseeker::app
