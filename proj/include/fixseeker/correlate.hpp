#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fixseeker/codegraph.hpp"
#include "fixseeker/diffcore.hpp"

namespace fixseeker {

// Declaration order is the edge-attribute bit order.
enum class EdgeKind { CALL, CD, DD, SIM };
enum class EdgeSide { PRE, POST, BOTH };

std::string_view to_string(EdgeKind kind) noexcept;
std::optional<EdgeKind> edge_kind_from_name(std::string_view name) noexcept;
std::string_view to_string(EdgeSide side) noexcept;

struct HunkEdge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::CALL;
  EdgeSide side = EdgeSide::POST;

  auto operator<=>(const HunkEdge&) const = default;
};

namespace correlate {

/// One changed file on one side: its dependency graph, hunk locations and
/// hunks. Calls left unresolved inside a file are matched against the other
/// units of the same commit side.
struct SideUnit {
  const DepGraph* dep = nullptr;
  Language language = Language::OTHER;
  std::map<int, std::optional<int>> hunk_fns;
  std::vector<Hunk> hunks;
};

/// CALL edges from a hunk whose changed lines hold a call to a hunk inside
/// the called function. Each call targets one hunk of the callee: the one
/// starting first on this side.
std::set<HunkEdge> extract_call_edges(const DepGraph& dep,
                                      const std::map<int, std::optional<int>>& hunk_fns,
                                      const std::vector<Hunk>& hunks, Side side);
std::set<HunkEdge> extract_call_edges(const std::vector<SideUnit>& units, Side side);

/// DD/CD edges between distinct hunks whose changed lines hold the two ends
/// of a statement-level dependency.
std::set<HunkEdge> extract_flow_edges(const DepGraph& dep, const std::vector<Hunk>& hunks,
                                      Side side);

/// Token-level edit distance (unit costs).
std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// 1 - LD(a, b) / max(|a|, |b|). Throws BothEmpty when both are empty.
double nld(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Changed lines as tokens: every removed line is introduced by "-", every
/// added line by "+"; string literals collapse to STR. At most `max_tokens`.
std::vector<std::string> hunk_tokens(const Hunk& h, std::size_t max_tokens = 512);

/// One SIM edge (src < dst, side BOTH) per hunk pair with nld > theta.
std::set<HunkEdge> extract_sim_edges(const std::vector<Hunk>& hunks, double theta = 0.8,
                                     std::size_t max_tokens = 512);

}  // namespace correlate
}  // namespace fixseeker
