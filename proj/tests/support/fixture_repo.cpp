#include "fixture_repo.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fixseeker/util/subprocess.hpp"

namespace fixseeker::testing {

namespace {

std::filesystem::path make_temp(const char* prefix) {
  std::string tmpl = (std::filesystem::temp_directory_path() / prefix).string() + "XXXXXX";
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  return tmpl;
}

}  // namespace

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

FixtureRepo::FixtureRepo() : root_(make_temp("fixseeker-repo-")) {
  git({"init", "-q", "-b", "main"});
}

FixtureRepo::~FixtureRepo() {
  std::error_code ec;
  std::filesystem::remove_all(root_, ec);
}

void FixtureRepo::write(const std::string& rel, const std::string& content) {
  const auto p = root_ / rel;
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

void FixtureRepo::remove(const std::string& rel) { std::filesystem::remove(root_ / rel); }

void FixtureRepo::rename(const std::string& from, const std::string& to) {
  std::filesystem::create_directories((root_ / to).parent_path());
  std::filesystem::rename(root_ / from, root_ / to);
}

std::string FixtureRepo::commit(const std::string& message) {
  git({"add", "-A"});
  ++commits_;
  const std::string date = "@" + std::to_string(1700000000 + commits_ * 60) + " +0000";
  const auto r = util::run_process(
      {"git", "-C", root_.string(), "commit", "-q", "--allow-empty", "-m", message},
      {"GIT_AUTHOR_NAME=Fixture", "GIT_AUTHOR_EMAIL=fixture@example.com",
       "GIT_COMMITTER_NAME=Fixture", "GIT_COMMITTER_EMAIL=fixture@example.com",
       "GIT_AUTHOR_DATE=" + date, "GIT_COMMITTER_DATE=" + date, "GIT_CONFIG_NOSYSTEM=1",
       "GIT_CONFIG_GLOBAL=/dev/null"});
  if (r.exit_code != 0) throw std::runtime_error("git commit failed: " + r.err);
  auto id = git({"rev-parse", "HEAD"});
  while (!id.empty() && (id.back() == '\n' || id.back() == '\r')) id.pop_back();
  return id;
}

std::string FixtureRepo::git(const std::vector<std::string>& args) {
  std::vector<std::string> argv{"git", "-C", root_.string(), "-c", "commit.gpgsign=false"};
  argv.insert(argv.end(), args.begin(), args.end());
  const auto r = util::run_process(
      argv, {"GIT_CONFIG_NOSYSTEM=1", "GIT_CONFIG_GLOBAL=/dev/null", "LC_ALL=C"});
  if (r.exit_code != 0) throw std::runtime_error("git failed: " + r.err);
  return r.out;
}

std::string FixtureRepo::state_snapshot() {
  std::ostringstream os;
  os << read_file(root_ / ".git" / "HEAD") << read_file(root_ / ".git" / "index");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root_)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), root_);
    if (*rel.begin() == ".git") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) os << f.string() << '\0' << read_file(root_ / f) << '\0';
  return os.str();
}

TempDir::TempDir() : root_(make_temp("fixseeker-tmp-")) {}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(root_, ec);
}

}  // namespace fixseeker::testing
