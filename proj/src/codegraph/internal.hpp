#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fixseeker/codegraph.hpp"
#include "fixseeker/lexer.hpp"

namespace fixseeker::codegraph::detail {

using lexer::Token;
using lexer::TokenKind;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

int last_line(const Token& t);

/// Index of the bracket closing t[open], or npos. Only the bracket family of
/// t[open] is counted.
std::size_t match_close(const std::vector<Token>& t, std::size_t open, std::size_t limit);

struct LogicalLine {
  std::size_t begin = 0;  // token range, Newline excluded
  std::size_t end = 0;
  int indent = 0;
  int first_line = 0;
  int last_line = 0;
};

std::vector<LogicalLine> logical_lines(const std::vector<Token>& t);

struct FnDetail {
  FunctionSpan span;
  std::size_t sig_begin = 0;  // first token of the declaration
  std::size_t sig_end = 0;    // one past the last signature token
  std::size_t lparen = 0;
  std::size_t rparen = 0;
  // Brace languages: tokens strictly inside the body braces.
  // Python: logical-line indices of the body, and an inline body token start
  // (npos when the body is on following lines).
  std::size_t body_begin = 0;
  std::size_t body_end = 0;
  std::size_t inline_body = npos;
  std::size_t def_line = 0;  // Python: logical line of the def
};

struct Detection {
  std::vector<FnDetail> functions;
  std::vector<LogicalLine> lines;  // Python only
  bool degraded = false;
};

Detection detect_functions(const std::vector<Token>& t, Language lang);

enum class StmtRole { Generic, Condition, ForHeader, Catch, Signature, Label, Keyword };

struct DefUse {
  std::vector<std::string> defs;
  std::vector<std::string> weak_defs;
  std::vector<std::string> uses;
};

DefUse brace_def_use(const std::vector<Token>& t, std::size_t b, std::size_t e, Language lang,
                     StmtRole role);
DefUse python_def_use(const std::vector<Token>& t, std::size_t b, std::size_t e);

/// Call expressions in t[b, e).
void collect_calls(const std::vector<Token>& t, std::size_t b, std::size_t e, Language lang,
                   int caller_fn, std::vector<CallSite>& out);

}  // namespace fixseeker::codegraph::detail
