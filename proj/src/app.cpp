#include "fixseeker/app.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "fixseeker/error.hpp"
#include "fixseeker/gitio.hpp"
#include "fixseeker/util/text.hpp"

namespace fixseeker::app {

namespace {

std::string repo_name(const fs::path& repo) {
  auto p = fs::weakly_canonical(repo);
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

// Runs job(i) for i in [0, n) on `jobs` threads; job must not throw.
template <typename Job>
void run_jobs(std::size_t n, int jobs, Job job) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

std::unique_ptr<Embedder> open_embedder(const std::string& spec, bool allow_fallback, std::ostream& diag) {
  return make_embedder(spec, allow_fallback, [&](const std::string& w) { diag << "warning: " << w << "\n"; });
}

fs::path graph_path(const fs::path& manifest, const LabeledCommit& c) {
  const fs::path g = c.graph;
  return g.is_absolute() ? g : manifest.parent_path() / g;
}

struct LoadedSet {
  std::vector<LabeledCommit> rows;
  std::vector<CommitHCG> graphs;
};

LoadedSet load_manifest(const fs::path& manifest) {
  LoadedSet s;
  s.rows = evalkit::parse_manifest(read_text(manifest));
  for (const auto& row : s.rows) {
    CommitHCG g = hcg::deserialize(read_text(graph_path(manifest, row)));
    g.label = row.label;
    s.graphs.push_back(std::move(g));
  }
  return s;
}

int label_value(Label l) { return l == Label::VFC ? 1 : 0; }

std::string short_id(const std::string& id) { return id.substr(0, std::min<std::size_t>(12, id.size())); }

}  // namespace

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + p.string());
}

std::string model_id(std::string_view checkpoint_text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(HashEmbedder::fnv1a(checkpoint_text)));
  return buf;
}

std::vector<CommitRequest> commit_requests(const fs::path& repo, const std::string& commits) {
  std::vector<CommitRequest> out;
  std::error_code ec;
  if (fs::is_regular_file(commits, ec)) {
    std::size_t n = 0;
    for (const auto& raw : util::split_lines(read_text(commits))) {
      ++n;
      std::string line = raw.substr(0, raw.find('#'));
      std::istringstream fields(line);
      std::string id, label, extra;
      if (!(fields >> id)) continue;
      CommitRequest r{id, std::nullopt};
      if (fields >> label) {
        if (label == "1") r.label = Label::VFC;
        else if (label == "0") r.label = Label::NONVFC;
        else r.label = label_from_name(label);
        if (!r.label || (fields >> extra))
          throw Error(ErrorCode::InvalidArgument, commits + ":" + std::to_string(n) + ": expected 'commit [label]'");
      }
      out.push_back(std::move(r));
    }
    return out;
  }
  for (auto& id : gitio::list_commits(repo, commits)) out.push_back({std::move(id), std::nullopt});
  return out;
}

BuildGraphResult build_graphs(const BuildGraphOptions& opts, std::ostream& diag) {
  const auto requests = commit_requests(opts.repo, opts.commits);
  BuildGraphResult res;
  res.dir = opts.out / repo_name(opts.repo);
  fs::create_directories(res.dir);

  struct Outcome {
    std::optional<CommitHCG> graph;
    std::string error;
    std::vector<std::string> warnings;
  };
  std::vector<Outcome> outcomes(requests.size());
  run_jobs(requests.size(), opts.jobs, [&](std::size_t i) {
    auto& o = outcomes[i];
    try {
      auto g = hcg::build_commit_graph(opts.repo, requests[i].spec, {}, &o.warnings);
      g.label = requests[i].label;
      g.commit.repo_path = repo_name(opts.repo);
      o.graph = std::move(g);
    } catch (const Error& e) {
      o.error = e.what();
    } catch (const std::exception& e) {
      o.error = std::string("internal: ") + e.what();
    }
  });

  std::string log;
  std::vector<LabeledCommit> manifest;
  bool labelled = !requests.empty();
  for (const auto& r : requests) labelled = labelled && r.label.has_value();
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto& o = outcomes[i];
    for (const auto& w : o.warnings) log += requests[i].spec + "\twarning\t" + w + "\n";
    if (!o.graph) {
      ++res.failed;
      log += requests[i].spec + "\terror\t" + o.error + "\n";
      diag << "skipped " << requests[i].spec << ": " << o.error << "\n";
      continue;
    }
    const auto file = res.dir / (o.graph->commit.commit_id + ".hcg");
    write_text(file, hcg::serialize(*o.graph));
    res.written.push_back(file);
    if (labelled)
      manifest.push_back({o.graph->commit.repo_path.string(), o.graph->commit.commit_id, *o.graph->label,
                          std::nullopt, o.graph->loc_changed, file.filename().string()});
  }
  res.log = res.dir / "build.log";
  write_text(res.log, log);
  if (labelled) {
    res.manifest = res.dir / "manifest.tsv";
    write_text(*res.manifest, evalkit::format_manifest(manifest));
  }
  return res;
}

TrainSummary train_model(const TrainOptions& opts, std::ostream& diag) {
  TrainConfig cfg = opts.config ? gnn::parse_config(read_text(*opts.config)) : TrainConfig{};
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.threads) cfg.threads = *opts.threads;

  auto rows = evalkit::parse_manifest(read_text(opts.manifest));
  if (opts.ratio) {
    std::vector<LabeledCommit> vfcs, pool;
    for (const auto& r : rows) (r.label == Label::VFC ? vfcs : pool).push_back(r);
    rows = evalkit::assemble_dataset(vfcs, pool, *opts.ratio, true, cfg.seed);
  }
  SplitSpec spec;
  spec.seed = cfg.seed;
  const auto parts = evalkit::split(rows, spec);

  auto embedder = open_embedder(opts.embedder, opts.allow_fallback, diag);
  auto tensors = [&](const std::vector<LabeledCommit>& set) {
    std::vector<CommitHCG> graphs;
    for (const auto& row : set) {
      CommitHCG g = hcg::deserialize(read_text(graph_path(opts.manifest, row)));
      g.label = row.label;
      graphs.push_back(std::move(g));
    }
    return embed::embed_graphs(graphs, *embedder);
  };
  const auto train_t = tensors(parts.train);
  const auto val_t = tensors(parts.val);

  TrainSummary s;
  s.train = parts.train.size();
  s.val = parts.val.size();
  s.test = parts.test.size();
  s.result = gnn::train(train_t, val_t, cfg, [&](const EpochRecord& r) {
    diag << "epoch " << r.epoch << " loss " << util::format_fixed(r.train_loss, 4) << " acc "
         << util::format_fixed(r.train_acc, 4) << " val_f1 " << util::format_fixed(r.val_f1, 4) << "\n";
  });

  s.checkpoint = opts.out;
  write_text(s.checkpoint, gnn::save_checkpoint(s.result.params, cfg));
  std::string hist = "# epoch\ttrain_loss\tval_loss\ttrain_acc\tval_f1\n";
  for (const auto& r : s.result.history)
    hist += std::to_string(r.epoch) + "\t" + util::format_double(r.train_loss) + "\t" +
            util::format_double(r.val_loss) + "\t" + util::format_double(r.train_acc) + "\t" +
            util::format_double(r.val_f1) + "\n";
  hist += "# best_epoch " + std::to_string(s.result.best_epoch) + " embedder " + embedder->name() + "\n";
  s.history = fs::path(opts.out.string() + ".history");
  write_text(s.history, hist);

  // Held-out rows keep graph paths valid from the checkpoint's directory.
  auto test_rows = parts.test;
  for (auto& r : test_rows) r.graph = fs::absolute(graph_path(opts.manifest, r)).lexically_normal().string();
  s.test_manifest = fs::path(opts.out.string() + ".test.tsv");
  write_text(s.test_manifest, evalkit::format_manifest(test_rows));
  return s;
}

MetricsReport evaluate_model(const EvaluateOptions& opts, std::ostream& diag) {
  TrainConfig cfg;
  const ModelParams params = gnn::load_checkpoint(read_text(opts.checkpoint), &cfg);
  const auto set = load_manifest(opts.manifest);
  std::vector<int> labels;
  std::vector<long> loc;
  for (const auto& r : set.rows) {
    labels.push_back(label_value(r.label));
    loc.push_back(r.loc_changed);
  }
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(labels.size()))
    throw Error(ErrorCode::SingleClass, "evaluation manifest must hold both VFC and NONVFC rows");
  auto embedder = open_embedder(opts.embedder, opts.allow_fallback, diag);
  const auto scores = gnn::predict(embed::embed_graphs(set.graphs, *embedder), params, cfg.threads);
  const auto report = evalkit::evaluate(scores, labels, loc, opts.threshold.value_or(cfg.threshold));
  if (opts.report) write_text(*opts.report, evalkit::format_report(report));
  return report;
}

std::string top_pair_summary(const CommitHCG& g) {
  std::map<std::pair<int, int>, std::set<EdgeKind>> pairs;
  for (const auto& e : g.edges) pairs[{std::min(e.src, e.dst), std::max(e.src, e.dst)}].insert(e.kind);
  auto where = [&](int id) {
    for (const auto& n : g.nodes)
      if (n.id == id) return n.file.display_path() + ":" + std::to_string(n.file.path_post ? n.s_post : n.s_pre);
    return std::to_string(id);
  };
  if (pairs.empty())
    return g.nodes.empty() ? std::string("-") : where(g.nodes.front().id) + " (uncorrelated)";
  auto best = pairs.begin();
  for (auto it = pairs.begin(); it != pairs.end(); ++it)
    if (it->second.size() > best->second.size()) best = it;
  std::string kinds;
  for (auto k : best->second) kinds += (kinds.empty() ? "" : "+") + std::string(to_string(k));
  return where(best->first.first) + " -> " + where(best->first.second) + " " + kinds;
}

ScanReport scan(const ScanOptions& opts, std::ostream& diag) {
  const std::string ckpt = read_text(opts.checkpoint);
  TrainConfig cfg;
  const ModelParams params = gnn::load_checkpoint(ckpt, &cfg);
  const auto ids = gitio::list_commits(opts.repo, opts.range);

  ScanReport report;
  report.model_id = model_id(ckpt);
  report.threshold = opts.threshold.value_or(cfg.threshold);

  std::vector<std::optional<CommitHCG>> graphs(ids.size());
  std::vector<std::string> errors(ids.size());
  run_jobs(ids.size(), opts.jobs, [&](std::size_t i) {
    try {
      graphs[i] = hcg::build_commit_graph(opts.repo, ids[i]);
    } catch (const Error& e) {
      errors[i] = std::string(to_string(e.code()));
    } catch (const std::exception& e) {
      errors[i] = std::string("internal: ") + e.what();
    }
  });
  auto embedder = open_embedder(opts.embedder, opts.allow_fallback, diag);
  report.embedder = embedder->name();

  std::vector<CommitHCG> ok;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (graphs[i]) ok.push_back(*graphs[i]);
    else report.skipped.emplace_back(ids[i], errors[i]);
  }
  const auto scores = gnn::predict(embed::embed_graphs(ok, *embedder), params, opts.jobs);
  for (std::size_t i = 0; i < ok.size(); ++i)
    report.rows.push_back({ok[i].commit.commit_id, scores[i], ok[i].loc_changed, top_pair_summary(ok[i])});
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ScanRow& a, const ScanRow& b) {
    return a.p_vfc != b.p_vfc ? a.p_vfc > b.p_vfc : a.commit < b.commit;
  });
  return report;
}

std::string format_scan_table(const ScanReport& r) {
  std::ostringstream os;
  os << "model " << r.model_id << "  embedder " << r.embedder << "  threshold "
     << util::format_double(r.threshold) << "\n";
  os << "rank  commit        p_vfc   loc  flag  top hunk pair\n";
  std::size_t rank = 0;
  for (const auto& row : r.rows) {
    char line[96];
    std::snprintf(line, sizeof line, "%4zu  %-12s  %.4f  %4d  %-4s  ", ++rank, short_id(row.commit).c_str(),
                  row.p_vfc, row.loc_changed, row.p_vfc >= r.threshold ? "VFC" : "");
    os << line << row.top_pair << "\n";
  }
  for (const auto& [commit, why] : r.skipped) os << "   -  " << short_id(commit) << "  skipped (" << why << ")\n";
  return os.str();
}

std::string format_scan_report(const ScanReport& r) {
  std::string out = "# fixseeker-scan 1\n";
  out += "model=" + r.model_id + "\n";
  out += "embedder=" + r.embedder + "\n";
  out += "threshold=" + util::format_double(r.threshold) + "\n";
  for (const auto& row : r.rows)
    out += "row\t" + row.commit + "\t" + util::format_double(row.p_vfc) + "\t" + std::to_string(row.loc_changed) +
           "\t" + row.top_pair + "\n";
  for (const auto& [commit, why] : r.skipped) out += "skip\t" + commit + "\t" + why + "\n";
  return out;
}

}  // namespace fixseeker::app
