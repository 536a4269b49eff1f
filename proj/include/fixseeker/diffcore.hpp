#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fixseeker/gitio.hpp"

namespace fixseeker {

/// 1-based inclusive line interval on one side of a hunk. An `anchor` range
/// marks a side with no changed lines: first == last is the line next to
/// the insertion/deletion point, used only for function location.
struct LineRange {
  int first = 0;
  int last = 0;
  bool anchor = false;

  bool contains(int line) const noexcept { return !anchor && line >= first && line <= last; }
};

/// One maximal run of contiguous +/- lines with the context that surrounds it.
/// (s_pre, o_pre, s_post, n_post) are the values the run's own @@ header
/// carries; for an @@ block holding a single run they are the block header.
struct Hunk {
  int id = 0;
  FileChange file;
  int s_pre = 0;
  int o_pre = 0;
  int s_post = 0;
  int n_post = 0;
  std::vector<std::string> removed_lines;
  std::vector<std::string> added_lines;
  std::vector<std::string> context_lines;
  /// Number of context_lines that precede the change run; the rest follow it.
  std::size_t leading_context = 0;

  /// Line numbers of removed lines (PRE) or added lines (POST).
  std::vector<int> changed_lines(Side side) const;
  LineRange changed_range(Side side) const;

  bool operator==(const Hunk&) const = default;
};

struct CommitDiff {
  CommitRef commit;
  std::vector<Hunk> hunks;
};

struct FileDiff {
  FileChange file;
  std::vector<Hunk> hunks;

  bool operator==(const FileDiff&) const = default;
};

namespace diffcore {

/// Parses `git diff` style unified diff text. Every @@ block is split into
/// its change runs; ids run in file order then hunk order from 0.
/// Throws MalformedDiff on bad headers or line counts.
std::vector<FileDiff> parse_unified_diff(std::string_view diff_text);

/// Renders files back to unified diff text, one @@ block per hunk.
std::string serialize(const std::vector<FileDiff>& files);

/// Canonical diff of every changed target-language file of the commit.
CommitDiff diff_commit(const CommitRef& c);

/// One line per hunk: `id file (-s,o,+s',n)`.
std::string debug_dump(const std::vector<Hunk>& hunks);

/// Lines of `pre_image` with every hunk applied; used to verify parses.
std::vector<std::string> apply_hunks(const std::vector<std::string>& pre_image,
                                     const std::vector<Hunk>& hunks);

}  // namespace diffcore
}  // namespace fixseeker
