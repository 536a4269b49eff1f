#include "fixseeker/diffcore.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <sstream>

#include "fixseeker/error.hpp"
#include "fixseeker/util/text.hpp"

namespace fixseeker {

namespace {

int effective_start(int start, int count) { return count == 0 ? start + 1 : start; }

}  // namespace

std::vector<int> Hunk::changed_lines(Side side) const {
  const auto& lines = side == Side::PRE ? removed_lines : added_lines;
  const int base = side == Side::PRE ? effective_start(s_pre, o_pre) : effective_start(s_post, n_post);
  std::vector<int> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i)
    out.push_back(base + static_cast<int>(leading_context + i));
  return out;
}

LineRange Hunk::changed_range(Side side) const {
  const auto& lines = side == Side::PRE ? removed_lines : added_lines;
  const int base = side == Side::PRE ? effective_start(s_pre, o_pre) : effective_start(s_post, n_post);
  const int first = base + static_cast<int>(leading_context);
  if (!lines.empty()) return {first, first + static_cast<int>(lines.size()) - 1, false};
  const int at = std::max(1, first - 1);
  return {at, at, true};
}

namespace diffcore {

namespace {

enum class LineKind { Context, Removed, Added };

struct BlockLine {
  LineKind kind;
  std::string text;
};

[[noreturn]] void malformed(const std::string& what, std::size_t line_no) {
  throw Error(ErrorCode::MalformedDiff, what + " at diff line " + std::to_string(line_no + 1));
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && out >= 0;
}

// "-s,o" / "+s,n" with the count optional (defaults to 1).
bool parse_range(std::string_view s, char sign, int& start, int& count) {
  if (s.empty() || s.front() != sign) return false;
  s.remove_prefix(1);
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) {
    count = 1;
    return parse_int(s, start);
  }
  return parse_int(s.substr(0, comma), start) && parse_int(s.substr(comma + 1), count);
}

bool parse_header(std::string_view line, int& s_pre, int& o_pre, int& s_post, int& n_post) {
  if (!util::starts_with(line, "@@ ")) return false;
  const auto end = line.find(" @@", 3);
  if (end == std::string_view::npos) return false;
  const auto body = line.substr(3, end - 3);
  const auto space = body.find(' ');
  if (space == std::string_view::npos) return false;
  return parse_range(body.substr(0, space), '-', s_pre, o_pre) &&
         parse_range(body.substr(space + 1), '+', s_post, n_post);
}

std::string unquote_path(std::string_view p) {
  if (p.size() < 2 || p.front() != '"' || p.back() != '"') return std::string(p);
  std::string out;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    char c = p[i];
    if (c != '\\' || i + 2 >= p.size()) {
      out += c;
      continue;
    }
    c = p[++i];
    switch (c) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default:
        if (c >= '0' && c <= '7' && i + 2 < p.size()) {
          const int v = (c - '0') * 64 + (p[i + 1] - '0') * 8 + (p[i + 2] - '0');
          out += static_cast<char>(v);
          i += 2;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::optional<std::string> strip_side_prefix(std::string_view raw, char side) {
  std::string p = unquote_path(raw);
  if (p == "/dev/null") return std::nullopt;
  if (p.size() > 2 && p[0] == side && p[1] == '/') return p.substr(2);
  return p;
}

// "a/X b/Y": unambiguous when the two halves name the same path.
std::pair<std::optional<std::string>, std::optional<std::string>> parse_git_header(
    std::string_view rest) {
  if (!rest.empty() && rest.front() == '"') {
    const auto close = rest.find('"', 1);
    if (close != std::string_view::npos) {
      auto a = strip_side_prefix(rest.substr(0, close + 1), 'a');
      auto b = strip_side_prefix(rest.substr(std::min(rest.size(), close + 2)), 'b');
      return {a, b};
    }
  }
  if (rest.size() % 2 == 1) {
    const auto half = rest.size() / 2;
    const auto a = rest.substr(0, half);
    const auto b = rest.substr(half + 1);
    if (rest[half] == ' ' && a.size() > 2 && b.size() > 2 && a.substr(2) == b.substr(2))
      return {strip_side_prefix(a, 'a'), strip_side_prefix(b, 'b')};
  }
  const auto split = rest.rfind(" b/");
  if (split == std::string_view::npos) return {std::nullopt, std::nullopt};
  return {strip_side_prefix(rest.substr(0, split), 'a'),
          strip_side_prefix(rest.substr(split + 1), 'b')};
}

// Splits one @@ block into change runs, sharing the context between runs.
void split_block(const std::vector<BlockLine>& block, int s_pre, int o_pre, int s_post, int n_post,
                 const FileChange& file, std::vector<Hunk>& out) {
  struct Run {
    std::size_t begin, end;  // [begin, end) changed lines
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < block.size();) {
    if (block[i].kind == LineKind::Context) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < block.size() && block[j].kind != LineKind::Context) ++j;
    runs.push_back({i, j});
    i = j;
  }
  if (runs.empty()) return;

  // Segment boundaries: each run owns [seg_begin, seg_end) of the block.
  std::vector<std::size_t> seg_begin(runs.size()), seg_end(runs.size());
  seg_begin.front() = 0;
  seg_end.back() = block.size();
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const std::size_t gap = runs[k + 1].begin - runs[k].end;
    const std::size_t split = runs[k].end + (gap + 1) / 2;
    seg_end[k] = split;
    seg_begin[k + 1] = split;
  }

  int pre_cursor = effective_start(s_pre, o_pre);
  int post_cursor = effective_start(s_post, n_post);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (; pos < seg_begin[k]; ++pos) {
      if (block[pos].kind != LineKind::Added) ++pre_cursor;
      if (block[pos].kind != LineKind::Removed) ++post_cursor;
    }
    Hunk h;
    h.file = file;
    const int first_pre = pre_cursor;
    const int first_post = post_cursor;
    for (std::size_t i = seg_begin[k]; i < seg_end[k]; ++i, ++pos) {
      const auto& line = block[i];
      switch (line.kind) {
        case LineKind::Context:
          h.context_lines.push_back(line.text);
          if (i < runs[k].begin) ++h.leading_context;
          ++pre_cursor;
          ++post_cursor;
          break;
        case LineKind::Removed:
          h.removed_lines.push_back(line.text);
          ++pre_cursor;
          break;
        case LineKind::Added:
          h.added_lines.push_back(line.text);
          ++post_cursor;
          break;
      }
    }
    h.o_pre = pre_cursor - first_pre;
    h.n_post = post_cursor - first_post;
    h.s_pre = h.o_pre == 0 ? first_pre - 1 : first_pre;
    h.s_post = h.n_post == 0 ? first_post - 1 : first_post;
    out.push_back(std::move(h));
  }
}

std::string header_for(const Hunk& h) {
  std::ostringstream os;
  os << "@@ -" << h.s_pre << ',' << h.o_pre << " +" << h.s_post << ',' << h.n_post << " @@";
  return os.str();
}

}  // namespace

std::vector<FileDiff> parse_unified_diff(std::string_view diff_text) {
  const auto lines = util::split_lines(diff_text);
  std::vector<FileDiff> files;
  bool in_file = false;
  FileDiff current;
  std::optional<std::string> pre, post;
  bool saw_minus = false;

  auto flush = [&] {
    if (!in_file) return;
    current.file = make_file_change(pre, post);
    for (auto& h : current.hunks) h.file = current.file;
    if (current.file.path_pre || current.file.path_post) files.push_back(std::move(current));
    current = FileDiff{};
    pre.reset();
    post.reset();
    in_file = false;
    saw_minus = false;
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (util::starts_with(line, "diff --git ")) {
      flush();
      in_file = true;
      std::tie(pre, post) = parse_git_header(line.substr(11));
      continue;
    }
    if (util::starts_with(line, "--- ") && i + 1 < lines.size() &&
        util::starts_with(lines[i + 1], "+++ ")) {
      if (!in_file || saw_minus) {
        flush();
        in_file = true;
      }
      saw_minus = true;
      pre = strip_side_prefix(line.substr(4), 'a');
      post = strip_side_prefix(std::string_view(lines[i + 1]).substr(4), 'b');
      ++i;
      continue;
    }
    if (!in_file) continue;
    if (util::starts_with(line, "new file mode")) {
      pre.reset();
      continue;
    }
    if (util::starts_with(line, "deleted file mode")) {
      post.reset();
      continue;
    }
    if (util::starts_with(line, "rename from ")) {
      pre = std::string(line.substr(12));
      continue;
    }
    if (util::starts_with(line, "rename to ")) {
      post = std::string(line.substr(10));
      continue;
    }
    if (util::starts_with(line, "@@")) {
      int s_pre = 0, o_pre = 0, s_post = 0, n_post = 0;
      if (!parse_header(line, s_pre, o_pre, s_post, n_post)) malformed("bad hunk header", i);
      std::vector<BlockLine> block;
      int pre_left = o_pre, post_left = n_post;
      while (pre_left > 0 || post_left > 0) {
        if (++i >= lines.size()) malformed("hunk shorter than its header", i - 1);
        std::string_view body = lines[i];
        if (!body.empty() && body.front() == '\\') continue;
        const char tag = body.empty() ? ' ' : body.front();
        const std::string text(body.empty() ? body : body.substr(1));
        if (tag == ' ') {
          if (pre_left == 0 || post_left == 0) malformed("context line outside counts", i);
          --pre_left;
          --post_left;
          block.push_back({LineKind::Context, text});
        } else if (tag == '-') {
          if (pre_left == 0) malformed("too many removed lines", i);
          --pre_left;
          block.push_back({LineKind::Removed, text});
        } else if (tag == '+') {
          if (post_left == 0) malformed("too many added lines", i);
          --post_left;
          block.push_back({LineKind::Added, text});
        } else {
          malformed("unexpected line inside hunk", i);
        }
      }
      while (i + 1 < lines.size() && !lines[i + 1].empty() && lines[i + 1].front() == '\\') ++i;
      if (i + 1 < lines.size() && !lines[i + 1].empty()) {
        const std::string_view after = lines[i + 1];
        const bool file_header = util::starts_with(after, "--- ") && i + 2 < lines.size() &&
                                 util::starts_with(lines[i + 2], "+++ ");
        if (after.front() == '+' || after.front() == ' ' || (after.front() == '-' && !file_header))
          malformed("hunk longer than its header", i + 1);
      }
      split_block(block, s_pre, o_pre, s_post, n_post, FileChange{}, current.hunks);
      continue;
    }
  }
  flush();

  int next_id = 0;
  for (auto& f : files)
    for (auto& h : f.hunks) h.id = next_id++;
  return files;
}

std::string serialize(const std::vector<FileDiff>& files) {
  std::ostringstream os;
  for (const auto& f : files) {
    const std::string a = f.file.path_pre.value_or(f.file.path_post.value_or(""));
    const std::string b = f.file.path_post.value_or(a);
    os << "diff --git a/" << a << " b/" << b << '\n';
    if (!f.file.path_pre) os << "new file mode 100644\n";
    if (!f.file.path_post) os << "deleted file mode 100644\n";
    if (f.file.path_pre && f.file.path_post && *f.file.path_pre != *f.file.path_post)
      os << "rename from " << *f.file.path_pre << "\nrename to " << *f.file.path_post << '\n';
    if (f.hunks.empty()) continue;
    os << "--- " << (f.file.path_pre ? "a/" + *f.file.path_pre : std::string("/dev/null")) << '\n';
    os << "+++ " << (f.file.path_post ? "b/" + *f.file.path_post : std::string("/dev/null"))
       << '\n';
    for (const auto& h : f.hunks) {
      os << header_for(h) << '\n';
      for (std::size_t i = 0; i < h.leading_context; ++i) os << ' ' << h.context_lines[i] << '\n';
      for (const auto& l : h.removed_lines) os << '-' << l << '\n';
      for (const auto& l : h.added_lines) os << '+' << l << '\n';
      for (std::size_t i = h.leading_context; i < h.context_lines.size(); ++i)
        os << ' ' << h.context_lines[i] << '\n';
    }
  }
  return os.str();
}

CommitDiff diff_commit(const CommitRef& c) {
  CommitDiff diff{c, {}};
  int next_id = 0;
  for (const auto& change : gitio::changed_files(c)) {
    const auto parsed = parse_unified_diff(gitio::unified_diff(c, change));
    for (const auto& f : parsed) {
      for (auto h : f.hunks) {
        h.file = change;
        h.id = next_id++;
        diff.hunks.push_back(std::move(h));
      }
    }
  }
  return diff;
}

std::string debug_dump(const std::vector<Hunk>& hunks) {
  std::ostringstream os;
  for (const auto& h : hunks)
    os << h.id << ' ' << h.file.display_path() << " (-" << h.s_pre << ',' << h.o_pre << ",+"
       << h.s_post << ',' << h.n_post << ")\n";
  return os.str();
}

std::vector<std::string> apply_hunks(const std::vector<std::string>& pre_image,
                                     const std::vector<Hunk>& hunks) {
  std::vector<const Hunk*> order;
  for (const auto& h : hunks) order.push_back(&h);
  std::sort(order.begin(), order.end(),
            [](const Hunk* a, const Hunk* b) { return a->s_pre < b->s_pre; });

  std::vector<std::string> out;
  std::size_t cursor = 0;  // 0-based index into pre_image
  for (const Hunk* h : order) {
    const auto start = static_cast<std::size_t>(effective_start(h->s_pre, h->o_pre) - 1);
    if (start < cursor || start + static_cast<std::size_t>(h->o_pre) > pre_image.size())
      throw Error(ErrorCode::MalformedDiff, "hunk " + std::to_string(h->id) + " out of range");
    out.insert(out.end(), pre_image.begin() + static_cast<std::ptrdiff_t>(cursor),
               pre_image.begin() + static_cast<std::ptrdiff_t>(start));
    std::vector<std::string> expected(h->context_lines.begin(),
                                      h->context_lines.begin() +
                                          static_cast<std::ptrdiff_t>(h->leading_context));
    expected.insert(expected.end(), h->removed_lines.begin(), h->removed_lines.end());
    expected.insert(expected.end(),
                    h->context_lines.begin() + static_cast<std::ptrdiff_t>(h->leading_context),
                    h->context_lines.end());
    if (!std::equal(expected.begin(), expected.end(),
                    pre_image.begin() + static_cast<std::ptrdiff_t>(start)))
      throw Error(ErrorCode::MalformedDiff, "hunk " + std::to_string(h->id) + " does not match");
    out.insert(out.end(), h->context_lines.begin(),
               h->context_lines.begin() + static_cast<std::ptrdiff_t>(h->leading_context));
    out.insert(out.end(), h->added_lines.begin(), h->added_lines.end());
    out.insert(out.end(),
               h->context_lines.begin() + static_cast<std::ptrdiff_t>(h->leading_context),
               h->context_lines.end());
    cursor = start + static_cast<std::size_t>(h->o_pre);
  }
  out.insert(out.end(), pre_image.begin() + static_cast<std::ptrdiff_t>(cursor), pre_image.end());
  return out;
}

}  // namespace diffcore
}  // namespace fixseeker
