#include "fixseeker/hcg.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "fixseeker/codegraph.hpp"
#include "fixseeker/error.hpp"
#include "fixseeker/gitio.hpp"
#include "fixseeker/util/base64.hpp"
#include "fixseeker/util/text.hpp"

namespace fixseeker {

std::string_view to_string(Label label) noexcept { return label == Label::VFC ? "VFC" : "NONVFC"; }

std::optional<Label> label_from_name(std::string_view name) noexcept {
  if (name == "VFC") return Label::VFC;
  if (name == "NONVFC") return Label::NONVFC;
  return std::nullopt;
}

namespace hcg {

namespace {

constexpr std::string_view kMagic = "fixseeker-hcg";
constexpr int kVersion = 1;

std::string enc(std::string_view s) {
  const auto b = util::base64_encode(s);
  return b.empty() ? "." : b;
}

std::string enc_path(const std::optional<std::string>& p) { return p ? enc(*p) : "-"; }

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptGraph, what); }

std::string dec(std::string_view s) {
  if (s == ".") return {};
  auto out = util::base64_decode(s);
  if (!out) corrupt("bad base64 field");
  return *out;
}

std::optional<std::string> dec_path(std::string_view s) {
  if (s == "-") return std::nullopt;
  return dec(s);
}

int to_int(std::string_view s) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) corrupt("bad integer '" + std::string(s) + "'");
  return v;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(util::split_lines(text)) {}

  // Fields of the next line, which must start with `key`.
  std::vector<std::string_view> expect(std::string_view key, std::size_t fields) {
    if (pos_ >= lines_.size()) corrupt("truncated before '" + std::string(key) + "'");
    auto parts = util::split(lines_[pos_], ' ');
    if (parts.empty() || parts[0] != key || parts.size() != fields + 1)
      corrupt("expected '" + std::string(key) + "' at line " + std::to_string(pos_ + 1));
    ++pos_;
    parts.erase(parts.begin());
    return parts;
  }

  bool done() const { return pos_ >= lines_.size(); }
  const std::string& peek() const { return lines_.at(pos_); }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

}  // namespace

HCG build_hcg(const std::vector<Hunk>& hunks, const std::set<HunkEdge>& edges, Side side) {
  HCG g;
  g.side = side;
  for (const auto& h : hunks) g.node_ids.insert(h.id);
  for (const auto& e : edges) {
    if (!g.node_ids.count(e.src) || !g.node_ids.count(e.dst))
      throw Error(ErrorCode::DanglingEdge,
                  std::to_string(e.src) + "->" + std::to_string(e.dst) + " " +
                      std::string(to_string(e.kind)));
    g.edges.insert(e);
  }
  return g;
}

CommitHCG merge_commit_hcg(const HCG& pre, const HCG& post, const CommitDiff& diff) {
  std::set<int> ids;
  for (const auto& h : diff.hunks) ids.insert(h.id);
  if (pre.node_ids != ids || post.node_ids != ids)
    throw Error(ErrorCode::NodeSetMismatch, "side graphs do not cover the commit's hunks");

  CommitHCG g;
  g.commit = diff.commit;
  for (const auto& h : diff.hunks) {
    UnifiedHunkNode n{h.id,           h.file,          h.s_pre, h.o_pre, h.s_post, h.n_post,
                      h.removed_lines, h.added_lines};
    g.loc_changed += static_cast<int>(h.removed_lines.size() + h.added_lines.size());
    g.nodes.push_back(std::move(n));
  }
  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const UnifiedHunkNode& a, const UnifiedHunkNode& b) { return a.id < b.id; });
  for (const auto* side : {&pre, &post})
    for (const auto& e : side->edges) g.edges.insert(HunkEdge{e.src, e.dst, e.kind, EdgeSide::BOTH});
  return g;
}

std::string serialize(const CommitHCG& g) {
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << '\n';
  os << "commit " << (g.commit.commit_id.empty() ? "-" : g.commit.commit_id) << '\n';
  os << "parent " << (g.commit.parent_id.empty() ? "-" : g.commit.parent_id) << '\n';
  os << "repo " << enc(g.commit.repo_path.string()) << '\n';
  os << "label " << (g.label ? to_string(*g.label) : "-") << '\n';
  os << "loc_changed " << g.loc_changed << '\n';
  os << "nodes " << g.nodes.size() << '\n';
  for (const auto& n : g.nodes) {
    os << "node " << n.id << ' ' << to_string(n.file.language) << ' ' << n.s_pre << ' ' << n.o_pre
       << ' ' << n.s_post << ' ' << n.n_post << ' ' << enc_path(n.file.path_pre) << ' '
       << enc_path(n.file.path_post) << ' ' << n.removed_lines.size() << ' '
       << n.added_lines.size() << '\n';
    for (const auto& l : n.removed_lines) os << "- " << enc(l) << '\n';
    for (const auto& l : n.added_lines) os << "+ " << enc(l) << '\n';
  }
  os << "edges " << g.edges.size() << '\n';
  for (const auto& e : g.edges) os << "edge " << e.src << ' ' << e.dst << ' ' << to_string(e.kind) << '\n';
  os << "end\n";
  return os.str();
}

CommitHCG deserialize(std::string_view text) {
  {
    const auto first = text.substr(0, text.find('\n'));
    const auto sp = first.find(' ');
    if (sp == std::string_view::npos || first.substr(0, sp) != kMagic) corrupt("missing format header");
    const auto version = first.substr(sp + 1);
    int v = 0;
    const auto r = std::from_chars(version.data(), version.data() + version.size(), v);
    if (version.empty() || r.ec != std::errc() || r.ptr != version.data() + version.size())
      corrupt("bad format version");
    if (v != kVersion)
      throw Error(ErrorCode::FormatVersionMismatch,
                  "graph format " + std::to_string(v) + ", expected " + std::to_string(kVersion));
  }
  if (text.back() != '\n') corrupt("truncated final line");
  Reader r(text);
  r.expect(kMagic, 1);
  CommitHCG g;
  auto id = r.expect("commit", 1)[0];
  g.commit.commit_id = id == "-" ? "" : std::string(id);
  auto parent = r.expect("parent", 1)[0];
  g.commit.parent_id = parent == "-" ? "" : std::string(parent);
  g.commit.repo_path = dec(r.expect("repo", 1)[0]);
  const auto label = r.expect("label", 1)[0];
  if (label != "-") {
    g.label = label_from_name(label);
    if (!g.label) corrupt("unknown label");
  }
  g.loc_changed = to_int(r.expect("loc_changed", 1)[0]);
  const int nodes = to_int(r.expect("nodes", 1)[0]);
  if (nodes < 0) corrupt("negative node count");
  for (int i = 0; i < nodes; ++i) {
    const auto f = r.expect("node", 10);
    UnifiedHunkNode n;
    n.id = to_int(f[0]);
    const auto lang = language_from_name(f[1]);
    if (!lang) corrupt("unknown language");
    n.s_pre = to_int(f[2]);
    n.o_pre = to_int(f[3]);
    n.s_post = to_int(f[4]);
    n.n_post = to_int(f[5]);
    n.file.path_pre = dec_path(f[6]);
    n.file.path_post = dec_path(f[7]);
    n.file.language = *lang;
    if (!n.file.path_pre && !n.file.path_post) corrupt("node without paths");
    const int removed = to_int(f[8]);
    const int added = to_int(f[9]);
    if (removed < 0 || added < 0) corrupt("negative line count");
    for (int k = 0; k < removed; ++k) n.removed_lines.push_back(dec(r.expect("-", 1)[0]));
    for (int k = 0; k < added; ++k) n.added_lines.push_back(dec(r.expect("+", 1)[0]));
    g.nodes.push_back(std::move(n));
  }
  const int edges = to_int(r.expect("edges", 1)[0]);
  if (edges < 0) corrupt("negative edge count");
  std::set<int> ids;
  for (const auto& n : g.nodes) ids.insert(n.id);
  for (int i = 0; i < edges; ++i) {
    const auto f = r.expect("edge", 3);
    const auto kind = edge_kind_from_name(f[2]);
    if (!kind) corrupt("unknown edge kind");
    HunkEdge e{to_int(f[0]), to_int(f[1]), *kind, EdgeSide::BOTH};
    if (!ids.count(e.src) || !ids.count(e.dst)) corrupt("edge endpoint is not a node");
    g.edges.insert(e);
  }
  r.expect("end", 0);
  if (!r.done()) corrupt("trailing data after end");
  return g;
}

std::pair<HCG, HCG> correlate_sides(const CommitDiff& diff, const BuildOptions& opts,
                                    std::vector<std::string>* warnings) {
  // Hunks grouped per file, in file order.
  std::vector<FileDiff> files;
  for (const auto& h : diff.hunks) {
    if (files.empty() || !(files.back().file == h.file)) files.push_back(FileDiff{h.file, {}});
    files.back().hunks.push_back(h);
  }

  const auto sim = correlate::extract_sim_edges(diff.hunks, opts.theta, opts.max_tokens);
  std::pair<HCG, HCG> out;
  for (const Side side : {Side::PRE, Side::POST}) {
    std::set<HunkEdge> edges(sim.begin(), sim.end());
    std::vector<DepGraph> deps;
    deps.reserve(files.size());
    std::vector<correlate::SideUnit> units;
    for (const auto& f : files) {
      const auto& path = f.file.path(side);
      if (!path) continue;
      const std::string source = gitio::file_content(diff.commit, *path, side);
      const Language lang = f.file.language;
      const auto index = codegraph::function_index(source, lang);
      const auto calls = codegraph::scan_calls(source, index.functions, lang);
      const auto kept = codegraph::prune_unchanged(index.functions, f.hunks, side, calls);
      deps.push_back(codegraph::build_dep_graph(source, kept, lang));
      const DepGraph& dep = deps.back();
      if ((index.degraded || dep.degraded) && warnings)
        warnings->push_back(*path + (side == Side::PRE ? " (pre)" : " (post)") +
                            ": unbalanced structure, approximate analysis");
      const auto flow = correlate::extract_flow_edges(dep, f.hunks, side);
      edges.insert(flow.begin(), flow.end());
      units.push_back({&dep, lang, codegraph::locate_hunk_functions(f.hunks, kept, side), f.hunks});
    }
    const auto call = correlate::extract_call_edges(units, side);
    edges.insert(call.begin(), call.end());
    (side == Side::PRE ? out.first : out.second) = build_hcg(diff.hunks, edges, side);
  }
  return out;
}

CommitHCG build_commit_graph(const CommitRef& c, const BuildOptions& opts,
                             std::vector<std::string>* warnings) {
  const CommitDiff diff = diffcore::diff_commit(c);
  if (diff.hunks.empty())
    throw Error(ErrorCode::EmptyCommit, c.commit_id + " changes no target-language code");
  if (diff.hunks.size() == 1) {
    const HCG pre = build_hcg(diff.hunks, {}, Side::PRE);
    const HCG post = build_hcg(diff.hunks, {}, Side::POST);
    return merge_commit_hcg(pre, post, diff);
  }
  const auto [pre, post] = correlate_sides(diff, opts, warnings);
  return merge_commit_hcg(pre, post, diff);
}

CommitHCG build_commit_graph(const std::filesystem::path& repo, std::string_view commit_spec,
                             const BuildOptions& opts, std::vector<std::string>* warnings) {
  return build_commit_graph(gitio::resolve_commit(repo, commit_spec), opts, warnings);
}

}  // namespace hcg
}  // namespace fixseeker
