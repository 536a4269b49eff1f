#include <algorithm>
#include <string_view>

#include "internal.hpp"

namespace fixseeker::codegraph::detail {

int last_line(const Token& t) {
  return t.line + static_cast<int>(std::count(t.text.begin(), t.text.end(), '\n'));
}

std::size_t match_close(const std::vector<Token>& t, std::size_t open, std::size_t limit) {
  if (open >= t.size()) return npos;
  const std::string& o = t[open].text;
  const char* close = o == "(" ? ")" : o == "[" ? "]" : o == "{" ? "}" : nullptr;
  if (!close || t[open].kind != TokenKind::Punct) return npos;
  int depth = 0;
  for (std::size_t i = open; i < std::min(limit, t.size()); ++i) {
    if (t[i].kind != TokenKind::Punct) continue;
    if (t[i].text == o) {
      ++depth;
    } else if (t[i].text == close) {
      if (--depth == 0) return i;
    }
  }
  return npos;
}

std::vector<LogicalLine> logical_lines(const std::vector<Token>& t) {
  std::vector<LogicalLine> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    if (i < t.size() && t[i].kind != TokenKind::Newline) continue;
    if (i > start) {
      LogicalLine l;
      l.begin = start;
      l.end = i;
      l.indent = t[start].col;
      l.first_line = t[start].line;
      l.last_line = last_line(t[i - 1]);
      lines.push_back(l);
    }
    start = i + 1;
  }
  return lines;
}

namespace {

struct ParamInfo {
  std::vector<std::string> names;
  int min_arity = 0;
  bool variadic = false;
};

ParamInfo parse_params(const std::vector<Token>& t, std::size_t lparen, std::size_t rparen,
                       Language lang) {
  ParamInfo info;
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t start = lparen + 1;
  int depth = 0;
  for (std::size_t i = lparen + 1; i < rparen; ++i) {
    const auto& tok = t[i];
    if (tok.kind == TokenKind::Punct) {
      if (tok.text == "(" || tok.text == "[" || tok.text == "{") ++depth;
      if (tok.text == ")" || tok.text == "]" || tok.text == "}") --depth;
      if (tok.text == "<" && lang != Language::PYTHON) ++depth;
      if (tok.text == ">" && lang != Language::PYTHON && depth > 0) --depth;
      if (tok.text == "," && depth == 0) {
        groups.emplace_back(start, i);
        start = i + 1;
      }
    }
  }
  groups.emplace_back(start, rparen);
  if (groups.size() == 1 && groups[0].first == groups[0].second) return info;
  if (groups.size() == 1 && groups[0].second - groups[0].first == 1 &&
      t[groups[0].first].text == "void" && (lang == Language::C || lang == Language::CPP))
    return info;

  for (auto [b, e] : groups) {
    if (b == e) continue;
    bool has_default = false;
    bool star = false;
    std::size_t stop = e;
    for (std::size_t i = b; i < e; ++i) {
      if (t[i].is("=")) {
        has_default = true;
        stop = i;
        break;
      }
    }
    std::string name;
    if (lang == Language::PYTHON) {
      for (std::size_t i = b; i < stop; ++i) {
        if (t[i].is("*") || t[i].is("**")) star = true;
        if (t[i].is(":")) break;
        if (t[i].kind == TokenKind::Identifier) {
          name = t[i].text;
          break;
        }
      }
      if (name.empty()) continue;  // bare "*" or "/" separators
    } else if (lang == Language::PHP) {
      for (std::size_t i = b; i < stop; ++i) {
        if (t[i].is("...")) star = true;
        if (!t[i].text.empty() && t[i].text[0] == '$') {
          name = t[i].text;
          break;
        }
      }
    } else {
      for (std::size_t i = b; i < stop; ++i)
        if (t[i].is("...")) star = true;
      // Function pointer parameter: ( * name ) ( ... )
      for (std::size_t i = b; i + 2 < stop; ++i) {
        if (t[i].is("(") && (t[i + 1].is("*") || t[i + 1].is("&") || t[i + 1].is("^")) &&
            t[i + 2].kind == TokenKind::Identifier) {
          name = t[i + 2].text;
          break;
        }
      }
      if (name.empty()) {
        std::size_t last = stop;
        while (last > b && t[last - 1].is("]")) {
          // skip trailing [..] groups
          std::size_t k = last - 1;
          while (k > b && !t[k].is("[")) --k;
          last = k;
        }
        int words = 0;
        for (std::size_t i = b; i < last; ++i)
          if (t[i].is_word()) ++words;
        if (last > b && t[last - 1].kind == TokenKind::Identifier && words >= 2) name = t[last - 1].text;
      }
      if (star && name.empty() && e - b == 1) {
        info.variadic = true;
        continue;
      }
    }
    if (star) info.variadic = true;
    info.names.push_back(name);
    if (!has_default && !star) ++info.min_arity;
  }
  return info;
}

bool is_control_word(std::string_view w) {
  static constexpr std::string_view kWords[] = {
      "if",     "while",  "for",    "switch", "catch",  "return", "sizeof",   "foreach",
      "elseif", "synchronized", "using", "typeof", "alignof", "decltype", "defined", "assert",
      "__attribute__", "__typeof__", "_Static_assert", "static_assert", "noexcept", "throw"};
  return std::find(std::begin(kWords), std::end(kWords), w) != std::end(kWords);
}

// Name of the function whose parameter list opens at t[lparen], or "".
std::string candidate_name(const std::vector<Token>& t, std::size_t lparen) {
  if (lparen == 0) return {};
  const Token& prev = t[lparen - 1];
  // operator overloads: operator==, operator(), operator[] ...
  for (std::size_t back = 1; back <= 3 && back <= lparen; ++back) {
    const Token& k = t[lparen - back];
    if (k.kind == TokenKind::Keyword && k.text == "operator") {
      std::string name = "operator";
      for (std::size_t i = lparen - back + 1; i < lparen; ++i) name += t[i].text;
      return name;
    }
    if (k.kind != TokenKind::Punct) break;
  }
  if (prev.kind != TokenKind::Identifier || is_control_word(prev.text)) return {};
  if (lparen >= 2) {
    const Token& before = t[lparen - 2];
    if (before.is(".") || before.is("->") || before.is("?->") || before.is("new") ||
        before.is("@") || before.is("=") || before.is("return") || before.is("#"))
      return {};
    if (before.is("~")) return "~" + prev.text;
  }
  return prev.text;
}

// Skips a C++ constructor initializer list starting after ':'; returns the
// index of the body '{' or npos.
std::size_t skip_init_list(const std::vector<Token>& t, std::size_t k) {
  bool expect_init = false;
  while (k < t.size()) {
    const Token& tok = t[k];
    if (tok.is_word() || tok.is("::") || tok.is("<") || tok.is(">") || tok.is(".")) {
      expect_init = true;
      ++k;
    } else if (tok.is("(") || (tok.is("{") && expect_init)) {
      const auto close = match_close(t, k, t.size());
      if (close == npos) return npos;
      k = close + 1;
      expect_init = false;
    } else if (tok.is(",") || tok.is("...")) {
      expect_init = false;
      ++k;
    } else if (tok.is("{")) {
      return k;
    } else {
      return npos;
    }
  }
  return npos;
}

// From just after ')' find the body '{' across qualifiers, or npos.
std::size_t find_body_brace(const std::vector<Token>& t, std::size_t k, Language lang) {
  bool throws = false;
  for (int steps = 0; k < t.size() && steps < 128; ++steps) {
    const Token& tok = t[k];
    if (tok.is("{")) return k;
    if (tok.is(";") || tok.is("=") || tok.is("}") || tok.is(")")) return npos;
    if (tok.is(":")) {
      if (lang == Language::CPP) return skip_init_list(t, k + 1);
      ++k;
      continue;
    }
    if (tok.is(",")) {
      if (!throws) return npos;
      ++k;
      continue;
    }
    if (tok.is("(")) {
      if (k == 0 || !t[k - 1].is_word()) return npos;
      const auto close = match_close(t, k, t.size());
      if (close == npos) return npos;
      k = close + 1;
      continue;
    }
    if (tok.is_word()) {
      if (tok.text == "throws") throws = true;
      ++k;
      continue;
    }
    if (tok.is("->") || tok.is("*") || tok.is("&") || tok.is("&&") || tok.is("::") ||
        tok.is("<") || tok.is(">") || tok.is("?") || tok.is("[") || tok.is("]") ||
        tok.is(".") || tok.is("...")) {
      ++k;
      continue;
    }
    return npos;
  }
  return npos;
}

Detection detect_brace(const std::vector<Token>& t, Language lang) {
  Detection det;
  struct Open {
    bool is_fn;
    std::size_t detail;
    std::size_t brace;
  };
  std::vector<Open> stack;
  int fn_open = 0;
  std::size_t decl_start = 0;

  for (std::size_t i = 0; i < t.size(); ++i) {
    const Token& tok = t[i];
    if (tok.kind != TokenKind::Punct) continue;
    if (tok.text == "(" && fn_open == 0) {
      const std::string name = candidate_name(t, i);
      if (name.empty()) continue;
      const auto rparen = match_close(t, i, t.size());
      if (rparen == npos) continue;
      const auto lbrace = find_body_brace(t, rparen + 1, lang);
      if (lbrace == npos) continue;
      FnDetail d;
      d.span.name = name;
      const auto params = parse_params(t, i, rparen, lang);
      d.span.params = params.names;
      d.span.min_arity = params.min_arity;
      d.span.variadic = params.variadic;
      d.sig_begin = std::min(decl_start, i - 1);
      d.sig_end = lbrace;
      d.lparen = i;
      d.rparen = rparen;
      d.body_begin = lbrace + 1;
      d.span.start_line = t[d.sig_begin].line;
      det.functions.push_back(std::move(d));
      stack.push_back({true, det.functions.size() - 1, lbrace});
      ++fn_open;
      i = lbrace;
      decl_start = lbrace + 1;
      continue;
    }
    if (tok.text == "{") {
      stack.push_back({false, 0, i});
      decl_start = i + 1;
    } else if (tok.text == "}") {
      if (stack.empty()) {
        det.degraded = true;
      } else {
        const Open top = stack.back();
        stack.pop_back();
        if (top.is_fn) {
          auto& d = det.functions[top.detail];
          d.body_end = i;
          d.span.end_line = tok.line;
          --fn_open;
        }
      }
      decl_start = i + 1;
    } else if (tok.text == ";") {
      decl_start = i + 1;
    } else if (tok.text == ":" && i > 0 &&
               (t[i - 1].is("public") || t[i - 1].is("private") || t[i - 1].is("protected"))) {
      decl_start = i + 1;
    }
  }
  if (!stack.empty()) {
    det.degraded = true;
    for (const auto& open : stack) {
      if (!open.is_fn) continue;
      auto& d = det.functions[open.detail];
      d.body_end = t.size();
      d.span.end_line = t.empty() ? d.span.start_line : last_line(t.back());
    }
  }
  return det;
}

Detection detect_python(const std::vector<Token>& t) {
  Detection det;
  det.lines = logical_lines(t);
  const auto& lines = det.lines;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& line = lines[li];
    std::size_t k = line.begin;
    if (t[k].is("async") && k + 1 < line.end) ++k;
    if (!t[k].is("def") || k + 2 >= line.end) continue;
    if (t[k + 1].kind != TokenKind::Identifier || !t[k + 2].is("(")) {
      det.degraded = true;
      continue;
    }
    const auto rparen = match_close(t, k + 2, line.end);
    if (rparen == npos) {
      det.degraded = true;
      continue;
    }
    FnDetail d;
    d.span.name = t[k + 1].text;
    const auto params = parse_params(t, k + 2, rparen, Language::PYTHON);
    d.span.params = params.names;
    d.span.min_arity = params.min_arity;
    d.span.variadic = params.variadic;
    d.span.start_line = line.first_line;
    d.sig_begin = line.begin;
    d.lparen = k + 2;
    d.rparen = rparen;
    d.def_line = li;
    // Header colon: first depth-0 ':' after the parameter list.
    std::size_t colon = npos;
    int depth = 0;
    for (std::size_t i = rparen + 1; i < line.end; ++i) {
      if (t[i].is("(") || t[i].is("[") || t[i].is("{")) ++depth;
      if (t[i].is(")") || t[i].is("]") || t[i].is("}")) --depth;
      if (depth == 0 && t[i].is(":")) {
        colon = i;
        break;
      }
    }
    if (colon == npos) {
      det.degraded = true;
      colon = line.end - 1;
    }
    d.sig_end = colon + 1;
    d.inline_body = colon + 1 < line.end ? colon + 1 : npos;
    d.body_begin = li + 1;
    d.body_end = li + 1;
    d.span.end_line = line.last_line;
    if (d.inline_body == npos) {
      for (std::size_t lj = li + 1; lj < lines.size() && lines[lj].indent > line.indent; ++lj) {
        d.body_end = lj + 1;
        d.span.end_line = lines[lj].last_line;
      }
    }
    det.functions.push_back(std::move(d));
  }
  return det;
}

}  // namespace

Detection detect_functions(const std::vector<Token>& t, Language lang) {
  Detection det = lang == Language::PYTHON ? detect_python(t) : detect_brace(t, lang);
  for (std::size_t i = 0; i < det.functions.size(); ++i)
    det.functions[i].span.fn_id = static_cast<int>(i);
  return det;
}

}  // namespace fixseeker::codegraph::detail
