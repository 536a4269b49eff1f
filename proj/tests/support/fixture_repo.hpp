#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fixseeker::testing {

/// Throwaway git repository under the system temp directory. Author,
/// committer and dates are pinned so commit ids are reproducible.
class FixtureRepo {
 public:
  FixtureRepo();
  ~FixtureRepo();
  FixtureRepo(const FixtureRepo&) = delete;
  FixtureRepo& operator=(const FixtureRepo&) = delete;

  const std::filesystem::path& path() const { return root_; }

  void write(const std::string& rel, const std::string& content);
  void remove(const std::string& rel);
  void rename(const std::string& from, const std::string& to);
  /// Stages everything and commits; returns the new commit id.
  std::string commit(const std::string& message);
  /// Runs git inside the repository and returns stdout; throws on failure.
  std::string git(const std::vector<std::string>& args);
  /// Byte snapshot of HEAD, index and every worktree file.
  std::string state_snapshot();

 private:
  std::filesystem::path root_;
  int commits_ = 0;
};

std::string read_file(const std::filesystem::path& p);

/// Fresh empty directory under the temp directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace fixseeker::testing
