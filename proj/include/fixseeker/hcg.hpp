#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fixseeker/correlate.hpp"
#include "fixseeker/diffcore.hpp"

namespace fixseeker {

enum class Label { NONVFC = 0, VFC = 1 };

std::string_view to_string(Label label) noexcept;
std::optional<Label> label_from_name(std::string_view name) noexcept;

/// Correlation graph of one commit side.
struct HCG {
  Side side = Side::POST;
  std::set<int> node_ids;
  std::set<HunkEdge> edges;
};

/// A hunk with both sides' text, keyed by the shared hunk id.
struct UnifiedHunkNode {
  int id = 0;
  FileChange file;
  int s_pre = 0;
  int o_pre = 0;
  int s_post = 0;
  int n_post = 0;
  std::vector<std::string> removed_lines;
  std::vector<std::string> added_lines;

  bool operator==(const UnifiedHunkNode&) const = default;
};

struct CommitHCG {
  CommitRef commit;
  std::vector<UnifiedHunkNode> nodes;  // ascending id
  std::set<HunkEdge> edges;            // side folded to BOTH
  std::optional<Label> label;
  int loc_changed = 0;

  bool operator==(const CommitHCG&) const = default;
};

namespace hcg {

/// All hunk ids become nodes; throws DanglingEdge for edges leaving them.
HCG build_hcg(const std::vector<Hunk>& hunks, const std::set<HunkEdge>& edges, Side side);

/// Union of both sides' edges, deduplicated by (src, dst, kind). Throws
/// NodeSetMismatch unless both graphs cover exactly the diff's hunk ids.
CommitHCG merge_commit_hcg(const HCG& pre, const HCG& post, const CommitDiff& diff);

/// Versioned line-oriented text form (see README).
std::string serialize(const CommitHCG& g);
/// Throws FormatVersionMismatch or CorruptGraph.
CommitHCG deserialize(std::string_view text);

struct BuildOptions {
  double theta = 0.8;
  std::size_t max_tokens = 512;
};

/// Per-side correlation of an already parsed diff. `warnings` collects
/// files whose structure could only be analyzed approximately.
std::pair<HCG, HCG> correlate_sides(const CommitDiff& diff, const BuildOptions& opts = {},
                                    std::vector<std::string>* warnings = nullptr);

/// Diff, correlation and merge for one commit. Throws EmptyCommit when the
/// commit touches no target-language hunk; single-hunk commits skip the
/// correlation steps.
CommitHCG build_commit_graph(const CommitRef& c, const BuildOptions& opts = {},
                             std::vector<std::string>* warnings = nullptr);
CommitHCG build_commit_graph(const std::filesystem::path& repo, std::string_view commit_spec,
                             const BuildOptions& opts = {},
                             std::vector<std::string>* warnings = nullptr);

}  // namespace hcg
}  // namespace fixseeker
