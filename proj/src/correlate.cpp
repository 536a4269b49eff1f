#include "fixseeker/correlate.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "fixseeker/error.hpp"
#include "fixseeker/lexer.hpp"

namespace fixseeker {

std::string_view to_string(EdgeKind kind) noexcept {
  switch (kind) {
    case EdgeKind::CALL: return "CALL";
    case EdgeKind::CD: return "CD";
    case EdgeKind::DD: return "DD";
    case EdgeKind::SIM: return "SIM";
  }
  return "CALL";
}

std::optional<EdgeKind> edge_kind_from_name(std::string_view name) noexcept {
  for (auto k : {EdgeKind::CALL, EdgeKind::CD, EdgeKind::DD, EdgeKind::SIM})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::string_view to_string(EdgeSide side) noexcept {
  switch (side) {
    case EdgeSide::PRE: return "PRE";
    case EdgeSide::POST: return "POST";
    case EdgeSide::BOTH: return "BOTH";
  }
  return "BOTH";
}

namespace correlate {

namespace {

EdgeSide edge_side(Side s) { return s == Side::PRE ? EdgeSide::PRE : EdgeSide::POST; }

// line -> hunk id over the changed lines of one side of one file.
std::unordered_map<int, int> line_owners(const std::vector<Hunk>& hunks, Side side) {
  std::unordered_map<int, int> owner;
  for (const auto& h : hunks)
    for (int line : h.changed_lines(side)) owner.emplace(line, h.id);
  return owner;
}

}  // namespace

std::set<HunkEdge> extract_call_edges(const DepGraph& dep,
                                      const std::map<int, std::optional<int>>& hunk_fns,
                                      const std::vector<Hunk>& hunks, Side side) {
  const Language lang = hunks.empty() ? Language::OTHER : hunks.front().file.language;
  SideUnit unit{&dep, lang, hunk_fns, hunks};
  return extract_call_edges(std::vector<SideUnit>{unit}, side);
}

std::set<HunkEdge> extract_call_edges(const std::vector<SideUnit>& units, Side side) {
  std::set<HunkEdge> out;
  struct Target {
    std::size_t unit;
    int fn_id;
  };
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& caller = units[u];
    if (!caller.dep) continue;
    const auto owners = line_owners(caller.hunks, side);
    for (const auto& site : caller.dep->call_sites) {
      const auto it = owners.find(site.line);
      if (it == owners.end()) continue;
      const int src = it->second;

      std::vector<Target> targets;
      auto collect = [&](std::size_t v) {
        const auto& unit = units[v];
        if (!unit.dep) return;
        for (const auto& fn : unit.dep->functions)
          if (fn.name == site.callee &&
              codegraph::arity_matches(fn, unit.language, site.arity, site.qualified))
            targets.push_back({v, fn.fn_id});
      };
      collect(u);
      if (targets.empty())
        for (std::size_t v = 0; v < units.size(); ++v)
          if (v != u) collect(v);

      for (const auto& t : targets) {
        const Hunk* best = nullptr;
        for (const auto& h : units[t.unit].hunks) {
          if (h.id == src) continue;
          const auto loc = units[t.unit].hunk_fns.find(h.id);
          if (loc == units[t.unit].hunk_fns.end() || loc->second != t.fn_id) continue;
          if (!best) {
            best = &h;
            continue;
          }
          const int a = h.changed_range(side).first, b = best->changed_range(side).first;
          if (a < b || (a == b && h.id < best->id)) best = &h;
        }
        if (best) out.insert(HunkEdge{src, best->id, EdgeKind::CALL, edge_side(side)});
      }
    }
  }
  return out;
}

std::set<HunkEdge> extract_flow_edges(const DepGraph& dep, const std::vector<Hunk>& hunks,
                                      Side side) {
  const auto owners = line_owners(hunks, side);
  std::vector<std::vector<int>> node_hunks(dep.nodes.size());
  for (std::size_t i = 0; i < dep.nodes.size(); ++i) {
    const auto& n = dep.nodes[i];
    for (int line = n.line; line <= std::max(n.line, n.end_line); ++line) {
      const auto it = owners.find(line);
      if (it == owners.end()) continue;
      auto& hs = node_hunks[i];
      if (std::find(hs.begin(), hs.end(), it->second) == hs.end()) hs.push_back(it->second);
    }
  }
  std::set<HunkEdge> out;
  for (const auto& e : dep.edges) {
    if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= dep.nodes.size() ||
        static_cast<std::size_t>(e.dst) >= dep.nodes.size())
      continue;
    const EdgeKind kind = e.kind == DepKind::DD ? EdgeKind::DD : EdgeKind::CD;
    for (int a : node_hunks[e.src])
      for (int b : node_hunks[e.dst])
        if (a != b) out.insert(HunkEdge{a, b, kind, edge_side(side)});
  }
  return out;
}

std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  // Bit-parallel edit distance (Myers' algorithm, Hyyro's block form) with
  // `a` as the pattern, over interned token ids.
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::unordered_map<std::string_view, std::uint32_t> ids;
  std::vector<std::uint32_t> pa, pb;
  pa.reserve(a.size());
  pb.reserve(b.size());
  for (const auto& s : a) pa.push_back(ids.emplace(s, ids.size()).first->second);
  for (const auto& s : b) {
    const auto it = ids.find(s);
    pb.push_back(it == ids.end() ? UINT32_MAX : it->second);
  }

  const std::size_t m = a.size();
  const std::size_t words = (m + 63) / 64;
  const std::size_t alphabet = ids.size();
  std::vector<std::uint64_t> peq(alphabet * words, 0);
  for (std::size_t i = 0; i < m; ++i) peq[pa[i] * words + i / 64] |= std::uint64_t{1} << (i % 64);

  std::vector<std::uint64_t> pv(words, ~std::uint64_t{0}), mv(words, 0);
  const std::uint64_t last_bit = std::uint64_t{1} << ((m - 1) % 64);
  std::size_t score = m;
  for (const auto c : pb) {
    int hin = 1;  // top row grows by one per column
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t eq = c == UINT32_MAX ? 0 : peq[c * words + w];
      const std::uint64_t hin_neg = hin < 0 ? 1 : 0;
      const std::uint64_t xv = eq | mv[w];
      eq |= hin_neg;
      const std::uint64_t xh = (((eq & pv[w]) + pv[w]) ^ pv[w]) | eq;
      std::uint64_t ph = mv[w] | ~(xh | pv[w]);
      std::uint64_t mh = pv[w] & xh;
      const std::uint64_t probe = w + 1 == words ? last_bit : std::uint64_t{1} << 63;
      const int hout = (ph & probe ? 1 : 0) - (mh & probe ? 1 : 0);
      ph <<= 1;
      mh <<= 1;
      mh |= hin_neg;
      ph |= hin > 0 ? 1 : 0;
      pv[w] = mh | ~(xv | ph);
      mv[w] = ph & xv;
      hin = hout;
    }
    score = static_cast<std::size_t>(static_cast<long long>(score) + hin);
  }
  return score;
}

double nld(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) throw Error(ErrorCode::BothEmpty, "nld of two empty sequences");
  const double longest = static_cast<double>(std::max(a.size(), b.size()));
  return 1.0 - static_cast<double>(levenshtein(a, b)) / longest;
}

std::vector<std::string> hunk_tokens(const Hunk& h, std::size_t max_tokens) {
  std::vector<std::string> out;
  const Language lang = h.file.language;
  auto append = [&](const std::vector<std::string>& lines, const char* sentinel) {
    for (const auto& line : lines) {
      if (out.size() >= max_tokens) return;
      out.emplace_back(sentinel);
      for (auto& tok : lexer::normalized_tokens(line, lang)) {
        if (out.size() >= max_tokens) return;
        out.push_back(std::move(tok));
      }
    }
  };
  append(h.removed_lines, "-");
  append(h.added_lines, "+");
  return out;
}

std::set<HunkEdge> extract_sim_edges(const std::vector<Hunk>& hunks, double theta,
                                     std::size_t max_tokens) {
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(hunks.size());
  for (const auto& h : hunks) tokens.push_back(hunk_tokens(h, max_tokens));
  std::set<HunkEdge> out;
  for (std::size_t i = 0; i < hunks.size(); ++i) {
    for (std::size_t j = i + 1; j < hunks.size(); ++j) {
      if (hunks[i].id == hunks[j].id) continue;
      if (tokens[i].empty() && tokens[j].empty()) continue;
      if (nld(tokens[i], tokens[j]) > theta) {
        const int lo = std::min(hunks[i].id, hunks[j].id);
        const int hi = std::max(hunks[i].id, hunks[j].id);
        out.insert(HunkEdge{lo, hi, EdgeKind::SIM, EdgeSide::BOTH});
      }
    }
  }
  return out;
}

}  // namespace correlate
}  // namespace fixseeker
