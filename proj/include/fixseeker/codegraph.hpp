#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fixseeker/diffcore.hpp"
#include "fixseeker/gitio.hpp"

namespace fixseeker {

struct FunctionSpan {
  int fn_id = 0;
  std::string name;
  std::vector<std::string> params;  // "" for unnamed parameters
  int start_line = 0;               // first line of the declaration
  int end_line = 0;                 // inclusive
  int min_arity = 0;                // parameters without defaults
  bool variadic = false;

  bool operator==(const FunctionSpan&) const = default;
};

struct StmtNode {
  int node_id = 0;
  std::string code;
  int line = 0;      // first line of the statement
  int end_line = 0;  // last line, for statements continued over several lines
  int fn_id = 0;
  std::vector<std::string> defs;       // plain (re)definitions
  std::vector<std::string> weak_defs;  // member/element/pointer writes: do not kill
  std::vector<std::string> uses;
};

enum class DepKind { DD, CD };

struct DepEdge {
  int src = 0;
  int dst = 0;
  DepKind kind = DepKind::DD;

  auto operator<=>(const DepEdge&) const = default;
};

/// A call expression found in a function body, before resolution.
struct CallSite {
  int caller_fn = 0;
  std::string callee;
  int arity = 0;
  int line = 0;
  bool qualified = false;  // obj.f(), p->f(), Cls::f()
};

struct FunctionCall {
  int caller_fn = 0;
  int callee_fn = 0;
  int call_line = 0;

  auto operator<=>(const FunctionCall&) const = default;
};

struct FunctionIndex {
  std::vector<FunctionSpan> functions;
  bool degraded = false;  // unbalanced structure; spans are best effort
};

struct DepGraph {
  std::vector<FunctionSpan> functions;
  std::vector<StmtNode> nodes;
  std::vector<DepEdge> edges;
  std::vector<FunctionCall> calls;  // resolved against `functions`
  std::vector<CallSite> call_sites;
  bool degraded = false;
};

namespace codegraph {

/// Every function definition with its brace (or indentation) delimited span.
/// fn_ids number the definitions in source order from 0.
FunctionIndex function_index(std::string_view source, Language lang);

/// True when a call with `args` arguments can bind to `fn`.
bool arity_matches(const FunctionSpan& fn, Language lang, int args, bool qualified);

/// Call sites inside `functions`, resolved by name and arity within the same
/// list (overloads resolve to every arity-compatible candidate).
std::vector<FunctionCall> scan_calls(std::string_view source, const std::vector<FunctionSpan>& functions,
                                     Language lang);

/// Functions whose span meets a hunk's range on `side`, plus their direct
/// callers and callees according to `calls`.
std::vector<FunctionSpan> prune_unchanged(const std::vector<FunctionSpan>& functions,
                                          const std::vector<Hunk>& hunks, Side side,
                                          const std::vector<FunctionCall>& calls);

/// Innermost function containing the first line of each hunk's side range.
std::map<int, std::optional<int>> locate_hunk_functions(const std::vector<Hunk>& hunks,
                                                        const std::vector<FunctionSpan>& functions,
                                                        Side side);

/// Statement-level graph over `functions` (which must come from
/// function_index on the same source): intra-procedural def-use (DD) edges,
/// syntactic control-dependence (CD) edges and resolved calls.
DepGraph build_dep_graph(std::string_view source, const std::vector<FunctionSpan>& functions,
                         Language lang);

/// `node id line code`, `edge src dst kind`, `call caller callee line` lines.
std::string debug_dump(const DepGraph& g);

}  // namespace codegraph
}  // namespace fixseeker
