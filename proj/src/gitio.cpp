#include "fixseeker/gitio.hpp"

#include <algorithm>
#include <system_error>

#include "fixseeker/error.hpp"
#include "fixseeker/util/subprocess.hpp"
#include "fixseeker/util/text.hpp"

namespace fixseeker {

std::string_view to_string(Language lang) noexcept {
  switch (lang) {
    case Language::C: return "C";
    case Language::CPP: return "CPP";
    case Language::JAVA: return "JAVA";
    case Language::PYTHON: return "PYTHON";
    case Language::PHP: return "PHP";
    case Language::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::optional<Language> language_from_name(std::string_view name) noexcept {
  for (auto lang : {Language::C, Language::CPP, Language::JAVA, Language::PYTHON, Language::PHP,
                    Language::OTHER})
    if (to_string(lang) == name) return lang;
  return std::nullopt;
}

Language language_for_path(std::string_view path) {
  const auto slash = path.rfind('/');
  const auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
  const auto dot = name.rfind('.');
  if (dot == std::string_view::npos) return Language::OTHER;
  const auto ext = util::to_lower(name.substr(dot + 1));
  if (ext == "c" || ext == "h") return Language::C;
  if (ext == "cpp" || ext == "cc" || ext == "hpp") return Language::CPP;
  if (ext == "java") return Language::JAVA;
  if (ext == "py") return Language::PYTHON;
  if (ext == "php") return Language::PHP;
  return Language::OTHER;
}

bool is_test_path(std::string_view path) {
  const auto segments = util::split(path, '/');
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto seg = util::to_lower(segments[i]);
    if (seg == "test" || seg == "tests" || seg == "testing") return true;
    if (i + 1 == segments.size()) {
      const auto dot = seg.rfind('.');
      const std::string stem = dot == std::string::npos ? seg : seg.substr(0, dot);
      if (util::starts_with(stem, "test_")) return true;
      if (stem.size() >= 5 && stem.compare(stem.size() - 5, 5, "_test") == 0) return true;
    }
  }
  return false;
}

FileChange make_file_change(std::optional<std::string> pre, std::optional<std::string> post) {
  FileChange fc;
  fc.path_pre = std::move(pre);
  fc.path_post = std::move(post);
  fc.language = language_for_path(fc.path_post ? *fc.path_post : fc.path_pre.value_or(""));
  return fc;
}

namespace gitio {

namespace {

// Pinned so user/system git configuration cannot change the output format.
std::vector<std::string> git_argv(const std::filesystem::path& repo) {
  return {"git",
          "-C", repo.string(),
          "-c", "core.quotepath=off",
          "-c", "core.autocrlf=false",
          "-c", "diff.noprefix=false",
          "-c", "diff.mnemonicPrefix=false",
          "-c", "diff.renames=true",
          "-c", "diff.algorithm=myers",
          "-c", "diff.context=3",
          "-c", "diff.interHunkContext=0",
          "-c", "color.ui=never"};
}

const std::vector<std::string> kGitEnv = {"GIT_OPTIONAL_LOCKS=0", "LC_ALL=C",
                                          "GIT_CONFIG_NOSYSTEM=1", "GIT_TERMINAL_PROMPT=0"};

util::ProcessResult git(const std::filesystem::path& repo, std::vector<std::string> args) {
  auto argv = git_argv(repo);
  argv.insert(argv.end(), std::make_move_iterator(args.begin()),
              std::make_move_iterator(args.end()));
  try {
    return util::run_process(argv, kGitEnv);
  } catch (const std::system_error& e) {
    throw Error(ErrorCode::GitReadError, e.what());
  }
}

std::string git_checked(const std::filesystem::path& repo, std::vector<std::string> args) {
  const std::string what = args.empty() ? std::string() : args.front();
  auto r = git(repo, std::move(args));
  if (r.exit_code != 0) throw Error(ErrorCode::GitReadError, "git " + what + ": " + r.err);
  return std::move(r.out);
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

bool is_full_id(std::string_view s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

void ensure_repo(const std::filesystem::path& repo_path) {
  std::error_code ec;
  if (!std::filesystem::is_directory(repo_path, ec))
    throw Error(ErrorCode::RepoNotFound, repo_path.string());
  const auto r = git(repo_path, {"rev-parse", "--git-dir"});
  if (r.exit_code != 0) throw Error(ErrorCode::RepoNotFound, repo_path.string());
}

}  // namespace

CommitRef resolve_commit(const std::filesystem::path& repo_path, std::string_view commit_spec) {
  ensure_repo(repo_path);
  if (commit_spec.empty() || commit_spec.front() == '-')
    throw Error(ErrorCode::UnknownCommit, std::string(commit_spec));

  const std::string spec(commit_spec);
  auto r = git(repo_path, {"rev-parse", "--verify", "--quiet", "--end-of-options",
                           spec + "^{commit}"});
  std::string id = trim(r.out);
  if (r.exit_code != 0 || !is_full_id(id)) throw Error(ErrorCode::UnknownCommit, spec);

  auto p = git(repo_path, {"rev-parse", "--verify", "--quiet", id + "^1"});
  std::string parent = trim(p.out);
  if (p.exit_code != 0 || !is_full_id(parent)) throw Error(ErrorCode::RootCommit, id);

  return CommitRef{repo_path, std::move(id), std::move(parent)};
}

std::vector<FileChange> changed_files(const CommitRef& c) {
  const auto out = git_checked(c.repo_path, {"diff", "--name-status", "-z", "-M", "--no-ext-diff",
                                             c.parent_id, c.commit_id});
  auto fields = util::split(out, '\0');
  if (!fields.empty() && fields.back().empty()) fields.pop_back();

  std::vector<FileChange> changes;
  for (std::size_t i = 0; i < fields.size();) {
    const std::string_view status = fields[i++];
    if (status.empty()) throw Error(ErrorCode::GitReadError, "empty diff status");
    const char kind = status.front();
    std::optional<std::string> pre, post;
    if (kind == 'R' || kind == 'C') {
      if (i + 1 >= fields.size())
        throw Error(ErrorCode::GitReadError, "truncated rename record");
      pre = std::string(fields.at(i));
      post = std::string(fields.at(i + 1));
      i += 2;
      // A 100% rename carries identical content: nothing to analyze.
      if (kind == 'R' && status == "R100") continue;
      if (kind == 'C') pre.reset();
    } else {
      const std::string path(fields.at(i++));
      if (kind == 'A') {
        post = path;
      } else if (kind == 'D') {
        pre = path;
      } else {
        pre = path;
        post = path;
      }
    }
    FileChange fc = make_file_change(std::move(pre), std::move(post));
    if (fc.language == Language::OTHER) continue;
    if ((fc.path_post && is_test_path(*fc.path_post)) ||
        (!fc.path_post && fc.path_pre && is_test_path(*fc.path_pre)))
      continue;
    changes.push_back(std::move(fc));
  }

  std::sort(changes.begin(), changes.end(), [](const FileChange& a, const FileChange& b) {
    const auto& ap = a.path_post.value_or("");
    const auto& bp = b.path_post.value_or("");
    if (ap != bp) return ap < bp;
    return a.path_pre.value_or("") < b.path_pre.value_or("");
  });
  return changes;
}

std::string file_content(const CommitRef& c, std::string_view path, Side side) {
  const std::string& rev = side == Side::PRE ? c.parent_id : c.commit_id;
  const std::string object = rev + ":" + std::string(path);
  auto probe = git(c.repo_path, {"cat-file", "-e", object});
  if (probe.exit_code != 0)
    throw Error(ErrorCode::PathMissingOnSide,
                std::string(path) + (side == Side::PRE ? " (pre)" : " (post)"));
  return util::utf8_lossy(git_checked(c.repo_path, {"cat-file", "blob", object}));
}

std::string unified_diff(const CommitRef& c, const FileChange& change) {
  std::vector<std::string> args = {"diff",          "-U3",         "-M",        "--no-color",
                                   "--no-ext-diff", "--no-textconv", c.parent_id, c.commit_id,
                                   "--"};
  if (change.path_pre) args.push_back(*change.path_pre);
  if (change.path_post && change.path_post != change.path_pre) args.push_back(*change.path_post);
  return util::utf8_lossy(git_checked(c.repo_path, std::move(args)));
}

std::vector<std::string> list_commits(const std::filesystem::path& repo_path,
                                      std::string_view range) {
  ensure_repo(repo_path);
  if (range.empty() || range.front() == '-') throw Error(ErrorCode::UnknownCommit, std::string(range));
  if (range.find("..") == std::string_view::npos) {
    return {resolve_commit(repo_path, range).commit_id};
  }
  auto r = git(repo_path, {"rev-list", "--no-merges", "--end-of-options", std::string(range)});
  if (r.exit_code != 0) throw Error(ErrorCode::UnknownCommit, std::string(range));
  std::vector<std::string> ids;
  for (auto& line : util::split_lines(r.out))
    if (!line.empty()) ids.push_back(trim(line));
  return ids;
}

}  // namespace gitio
}  // namespace fixseeker
