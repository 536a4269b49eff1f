#include "fixseeker/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "fixseeker/util/rng.hpp"

namespace fixseeker::synth {

namespace {

const std::vector<std::string> kNames{"count", "total", "item",  "node",  "entry", "value", "ctx",
                                      "state", "len",   "flags", "index", "next",  "head",  "res"};
const std::vector<std::string> kCalls{"update_stats", "log_event", "list_add", "refresh", "queue_push",
                                      "format_name",  "hash_key",  "emit",     "sort_items"};

std::string pick(util::Rng& rng, const std::vector<std::string>& v) { return v[rng.below(v.size())]; }

std::string random_line(util::Rng& rng) {
  const std::string a = pick(rng, kNames), b = pick(rng, kNames);
  switch (rng.below(5)) {
    case 0: return "    " + a + " = " + b + " + " + std::to_string(rng.below(16)) + ";";
    case 1: return "    " + pick(rng, kCalls) + "(" + a + ", " + b + ");";
    case 2: return "    if (" + a + " == " + b + ") " + a + "++;";
    case 3: return "    " + a + "->" + b + " = NULL;";
    default: return "    return " + a + ";";
  }
}

UnifiedHunkNode random_node(util::Rng& rng, int id) {
  UnifiedHunkNode n;
  n.id = id;
  const std::string path = "src/module" + std::to_string(rng.below(3)) + ".c";
  n.file = make_file_change(path, path);
  n.s_pre = n.s_post = 10 + id * 20;
  for (std::size_t k = rng.below(3); k > 0; --k) n.removed_lines.push_back(random_line(rng));
  for (std::size_t k = 1 + rng.below(3); k > 0; --k) n.added_lines.push_back(random_line(rng));
  n.o_pre = static_cast<int>(n.removed_lines.size());
  n.n_post = static_cast<int>(n.added_lines.size());
  return n;
}

std::string hex_id(util::Rng& rng) {
  std::string s;
  for (int i = 0; i < 5; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rng.next() & 0xffffffffu));
    s += buf;
  }
  return s;
}

}  // namespace

std::vector<CommitHCG> make_corpus(const CorpusOptions& opts) {
  util::Rng rng(opts.seed);
  const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(opts.graphs) * opts.positive_fraction));
  const std::size_t min_nodes = std::max<std::size_t>(2, opts.min_nodes);
  const std::size_t max_nodes = std::max(min_nodes, opts.max_nodes);
  std::vector<CommitHCG> out;
  for (std::size_t i = 0; i < opts.graphs; ++i) {
    const bool positive = i < positives;
    CommitHCG g;
    g.commit.repo_path = "synthetic";
    g.commit.commit_id = hex_id(rng);
    g.commit.parent_id = hex_id(rng);
    const auto n = static_cast<int>(min_nodes + rng.below(max_nodes - min_nodes + 1));
    for (int id = 0; id < n; ++id) g.nodes.push_back(random_node(rng, id));
    for (int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(n))); k > 0; --k) {
      int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (s == t) continue;
      const EdgeKind kind = std::array{EdgeKind::CD, EdgeKind::DD, EdgeKind::SIM}[rng.below(3)];
      if (kind == EdgeKind::SIM && s > t) std::swap(s, t);
      g.edges.insert(HunkEdge{s, t, kind, EdgeSide::BOTH});
    }
    if (positive) {
      const int caller = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      const int callee = (caller + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)))) % n;
      auto& target = g.nodes[static_cast<std::size_t>(callee)];
      const std::string buf = pick(rng, kNames), len = pick(rng, kNames);
      target.added_lines.insert(target.added_lines.begin(),
                                "    if (" + len + " > sizeof(" + buf + ")) return -EINVAL;");
      target.n_post = static_cast<int>(target.added_lines.size());
      g.nodes[static_cast<std::size_t>(caller)].added_lines.push_back("    check_bounds(" + buf + ", " + len + ");");
      g.nodes[static_cast<std::size_t>(caller)].n_post =
          static_cast<int>(g.nodes[static_cast<std::size_t>(caller)].added_lines.size());
      g.edges.insert(HunkEdge{caller, callee, EdgeKind::CALL, EdgeSide::BOTH});
    }
    g.label = positive ? Label::VFC : Label::NONVFC;
    for (const auto& node : g.nodes)
      g.loc_changed += static_cast<int>(node.removed_lines.size() + node.added_lines.size());
    out.push_back(std::move(g));
  }
  rng.shuffle(out);
  return out;
}

}  // namespace fixseeker::synth
