#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fixseeker {

enum class Language { C, CPP, JAVA, PYTHON, PHP, OTHER };
enum class Side { PRE, POST };

std::string_view to_string(Language lang) noexcept;
std::optional<Language> language_from_name(std::string_view name) noexcept;

/// Language from the file extension: .c/.h, .cpp/.cc/.hpp, .java, .py, .php.
Language language_for_path(std::string_view path);

/// True for paths the analysis ignores as test code: a directory or file
/// segment named test/tests/testing, or a file stem starting with "test_" or
/// ending with "_test".
bool is_test_path(std::string_view path);

struct CommitRef {
  std::filesystem::path repo_path;
  std::string commit_id;  // 40-hex
  std::string parent_id;  // 40-hex, first parent

  bool operator==(const CommitRef&) const = default;
};

struct FileChange {
  std::optional<std::string> path_pre;   // absent for added files
  std::optional<std::string> path_post;  // absent for deleted files
  Language language = Language::OTHER;

  /// Post path when present, otherwise pre path.
  const std::string& display_path() const { return path_post ? *path_post : *path_pre; }
  const std::optional<std::string>& path(Side side) const {
    return side == Side::PRE ? path_pre : path_post;
  }

  bool operator==(const FileChange&) const = default;
};

FileChange make_file_change(std::optional<std::string> pre, std::optional<std::string> post);

namespace gitio {

/// Resolves `commit_spec` (ref, full id or unambiguous prefix) to a commit
/// and its first parent. Throws RepoNotFound, UnknownCommit or RootCommit.
CommitRef resolve_commit(const std::filesystem::path& repo_path, std::string_view commit_spec);

/// Target-language, non-test files whose content differs between the parent
/// and the commit, sorted by (post path, pre path).
std::vector<FileChange> changed_files(const CommitRef& c);

/// Exact blob content at the parent (PRE) or the commit (POST), decoded as
/// UTF-8 with replacement of invalid sequences.
std::string file_content(const CommitRef& c, std::string_view path, Side side);

/// Canonical 3-context unified diff of one file change.
std::string unified_diff(const CommitRef& c, const FileChange& change);

/// Non-merge commits in `range`: an "A..B" style range goes through
/// rev-list (newest first); any other spec names exactly one commit.
std::vector<std::string> list_commits(const std::filesystem::path& repo_path,
                                      std::string_view range);

}  // namespace gitio
}  // namespace fixseeker
