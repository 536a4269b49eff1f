#include <algorithm>
#include <string_view>

#include "internal.hpp"

namespace fixseeker::codegraph::detail {

namespace {

constexpr std::string_view kAssignOps[] = {"=",  "+=", "-=", "*=",  "/=",   "%=",  "&=",  "|=",
                                           "^=", "<<=", ">>=", ">>>=", "**=", "//=", ".=", ":="};

bool is_assign(const Token& t) {
  if (t.kind != TokenKind::Punct) return false;
  return std::find(std::begin(kAssignOps), std::end(kAssignOps), t.text) != std::end(kAssignOps);
}

bool is_member_op(const Token& t) {
  return t.is(".") || t.is("->") || t.is("?->") || t.is("::") || t.is(".*") || t.is("->*");
}

bool is_open(const Token& t) { return t.is("(") || t.is("[") || t.is("{"); }
bool is_close(const Token& t) { return t.is(")") || t.is("]") || t.is("}"); }

void add(std::vector<std::string>& v, const std::string& s) {
  if (s.empty()) return;
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

class Analyzer {
 public:
  Analyzer(const std::vector<Token>& t, std::size_t b, std::size_t e, Language lang)
      : t_(t), b_(b), e_(e), lang_(lang), consumed_(e > b ? e - b : 0, false) {}

  DefUse run(StmtRole role) {
    switch (role) {
      case StmtRole::Label:
      case StmtRole::Keyword:
        return {};
      case StmtRole::Catch:
        catch_param();
        break;
      case StmtRole::ForHeader:
        if (!range_for()) generic(false);
        break;
      case StmtRole::Condition:
        generic(false);
        break;
      case StmtRole::Generic:
      case StmtRole::Signature:
        generic(true);
        break;
    }
    collect_uses();
    return std::move(out_);
  }

 private:
  char& consumed(std::size_t i) { return consumed_[i - b_]; }

  bool is_var(std::size_t i) const { return t_[i].kind == TokenKind::Identifier; }

  void def(std::size_t i, bool strong) {
    consumed(i) = true;
    add(strong ? out_.defs : out_.weak_defs, t_[i].text);
  }

  void use_tok(std::size_t i) {
    consumed(i) = true;
    add(out_.uses, t_[i].text);
  }

  // First token of the assignment target ending just before `k`.
  std::size_t lhs_start(std::size_t k) const {
    int depth = 0;
    std::size_t i = k;
    while (i > b_) {
      const Token& tok = t_[i - 1];
      if (is_close(tok)) {
        if (tok.is("}") && depth == 0) return i;
        ++depth;
      } else if (is_open(tok)) {
        if (depth == 0) return i;
        --depth;
      } else if (depth == 0) {
        if (tok.is(";") || tok.is(",") || tok.is("?") || tok.is(":") || tok.is("&&") ||
            tok.is("||") || tok.is("!") || tok.is("=>") || tok.is("return") || is_assign(tok) ||
            tok.is("<<") || tok.is("else"))
          return i;
      }
      --i;
    }
    return b_;
  }

  bool looks_like_decl(std::size_t l, std::size_t k, std::size_t& name) {
    std::size_t m = k;
    while (m > l && t_[m - 1].is("]")) {
      std::size_t j = m - 1;
      while (j > l && !t_[j].is("[")) --j;
      m = j;
    }
    if (m <= l + 1 || !is_var(m - 1)) return false;
    const Token& prev = t_[m - 2];
    if (!(prev.is_word() || prev.is("*") || prev.is("&") || prev.is("&&") || prev.is(">") ||
          prev.is("]") || prev.is("?")))
      return false;
    if (prev.kind == TokenKind::Keyword && !lexer::is_type_keyword(lang_, prev.text) &&
        !prev.is("struct") && !prev.is("union") && !prev.is("enum") && !prev.is("auto"))
      return false;
    if (t_[l].is("*") || t_[l].is("&")) return false;
    for (std::size_t i = l; i < m - 1; ++i) {
      if (is_member_op(t_[i]) && !t_[i].is("::")) return false;
      if (t_[i].is("(") || t_[i].is("[")) return false;
    }
    name = m - 1;
    return true;
  }

  void assignment(std::size_t k) {
    const std::size_t l = lhs_start(k);
    if (l >= k) return;
    const bool compound = !t_[k].is("=") && !t_[k].is(":=");

    if (lang_ == Language::PHP) {
      bool destructure = t_[l].is("list") || t_[l].is("[");
      if (destructure) {
        for (std::size_t i = l; i < k; ++i)
          if (is_var(i) && t_[i].text[0] == '$') def(i, true);
        return;
      }
    }

    std::size_t name = npos;
    if (!compound && looks_like_decl(l, k, name)) {
      for (std::size_t i = l; i < k; ++i) consumed(i) = true;
      def(name, true);
      return;
    }

    // Plain variable, possibly parenthesized.
    std::size_t first = l;
    std::size_t last = k;
    while (first < last && t_[first].is("(") && t_[last - 1].is(")")) {
      ++first;
      --last;
    }
    if (last == first + 1 && is_var(first)) {
      def(first, true);
      if (compound) add(out_.uses, t_[first].text);
      return;
    }
    // Member, element or pointer write: weak definition of the base object.
    for (std::size_t i = l; i < k; ++i) {
      if ((is_var(i) || t_[i].is("this")) && (i == l || !is_member_op(t_[i - 1]))) {
        consumed(i) = true;
        add(out_.weak_defs, t_[i].text);
        add(out_.uses, t_[i].text);
        return;
      }
    }
  }

  void increments() {
    for (std::size_t k = b_; k < e_; ++k) {
      if (!t_[k].is("++") && !t_[k].is("--")) continue;
      std::size_t target = npos;
      if (k + 1 < e_ && is_var(k + 1)) {
        target = k + 1;
      } else if (k > b_ && is_var(k - 1)) {
        target = k - 1;
      }
      if (target == npos) continue;
      // p->count++ : walk to the base object.
      std::size_t base = target;
      bool member = false;
      while (base >= b_ + 2 && is_member_op(t_[base - 1]) && is_var(base - 2)) {
        base -= 2;
        member = true;
      }
      if (member) {
        consumed(target) = true;
        consumed(base) = true;
        add(out_.weak_defs, t_[base].text);
        add(out_.uses, t_[base].text);
      } else {
        consumed(target) = true;
        add(out_.defs, t_[target].text);
        add(out_.uses, t_[target].text);
      }
    }
  }

  // `int a, *b;` style declarations without initializers.
  void declaration_prefix() {
    if (b_ >= e_) return;
    const Token& head = t_[b_];
    static constexpr std::string_view kNotDecl[] = {
        "return", "goto",  "throw", "delete", "case",     "else",  "break", "continue",
        "new",    "echo",  "print", "yield",  "sizeof",   "co_return", "using", "typedef",
        "namespace", "import", "package", "assert", "static_assert", "do"};
    if (std::find(std::begin(kNotDecl), std::end(kNotDecl), head.text) != std::end(kNotDecl))
      return;
    const bool angles = lang_ != Language::C;
    int angle = 0;
    std::size_t k = b_;
    for (; k < e_; ++k) {
      const Token& tok = t_[k];
      if (angles && tok.is("<")) {
        ++angle;
        continue;
      }
      if (angles && tok.is(">") && angle > 0) {
        --angle;
        continue;
      }
      if (angle > 0) continue;
      if (tok.is(",") || tok.is(";") || tok.is("=") || tok.is("[") || tok.is("(") ||
          tok.is("{") || tok.is(":"))
        break;
      if (!(tok.is_word() || tok.is("*") || tok.is("&") || tok.is("&&") || tok.is("::")))
        return;
    }
    if (k - b_ < 2 || !is_var(k - 1)) return;
    for (std::size_t i = b_; i < k - 1; ++i) consumed(i) = true;
    def(k - 1, true);
    // Further declarators at depth 0.
    int depth = 0;
    for (std::size_t i = k; i < e_; ++i) {
      const Token& tok = t_[i];
      if (is_open(tok)) ++depth;
      if (is_close(tok)) --depth;
      if (depth == 0 && tok.is(",")) {
        std::size_t j = i + 1;
        while (j < e_ && (t_[j].is("*") || t_[j].is("&"))) ++j;
        if (j < e_ && is_var(j) &&
            (j + 1 >= e_ || t_[j + 1].is(",") || t_[j + 1].is(";") || t_[j + 1].is("=") ||
             t_[j + 1].is("[")))
          def(j, true);
      }
    }
  }

  void generic(bool statement_level) {
    for (std::size_t k = b_; k < e_; ++k)
      if (is_assign(t_[k])) assignment(k);
    increments();
    if (statement_level) declaration_prefix();
  }

  // for (T x : xs) / foreach ($xs as $k => $v)
  bool range_for() {
    std::size_t open = b_;
    while (open < e_ && !t_[open].is("(")) ++open;
    if (open >= e_) return false;
    const auto close = match_close(t_, open, e_);
    if (close == npos) return false;
    if (lang_ == Language::PHP) {
      for (std::size_t i = open + 1; i < close; ++i) {
        if (!t_[i].is("as")) continue;
        for (std::size_t j = i + 1; j < close; ++j)
          if (is_var(j)) def(j, true);
        return true;
      }
      return false;
    }
    int depth = 0;
    std::size_t colon = npos;
    for (std::size_t i = open + 1; i < close; ++i) {
      if (is_open(t_[i])) ++depth;
      if (is_close(t_[i])) --depth;
      if (depth == 0 && t_[i].is(";")) return false;
      if (depth == 0 && t_[i].is(":") && colon == npos) colon = i;
    }
    if (colon == npos || colon == open + 1) return false;
    for (std::size_t i = open + 1; i < colon; ++i) consumed(i) = true;
    if (t_[colon - 1].is("]")) {
      // structured binding: auto [a, b]
      for (std::size_t i = open + 1; i < colon; ++i)
        if (is_var(i)) def(i, true);
    } else if (is_var(colon - 1)) {
      def(colon - 1, true);
    }
    return true;
  }

  void catch_param() {
    std::size_t open = b_;
    while (open < e_ && !t_[open].is("(")) ++open;
    if (open >= e_) return;
    const auto close = match_close(t_, open, e_);
    if (close == npos || close == open + 1) return;
    for (std::size_t i = open + 1; i < close; ++i) consumed(i) = true;
    if (is_var(close - 1)) def(close - 1, true);
  }

  void collect_uses() {
    for (std::size_t i = b_; i < e_; ++i) {
      if (consumed(i) || !is_var(i)) continue;
      if (i > b_) {
        const Token& prev = t_[i - 1];
        if (is_member_op(prev) || prev.is("goto") || prev.is("struct") || prev.is("union") ||
            prev.is("enum") || prev.is("class") || prev.is("new") || prev.is("instanceof") ||
            prev.is("@"))
          continue;
      }
      const bool php_var = lang_ == Language::PHP && t_[i].text[0] == '$';
      if (i + 1 < e_ && !php_var) {
        const Token& next = t_[i + 1];
        if (next.is("(") || next.is("::")) continue;
      }
      add(out_.uses, t_[i].text);
    }
  }

  const std::vector<Token>& t_;
  std::size_t b_, e_;
  Language lang_;
  std::vector<char> consumed_;
  DefUse out_;
};

// Python: one simple statement or compound header without its ':' body.
class PyAnalyzer {
 public:
  PyAnalyzer(const std::vector<Token>& t, std::size_t b, std::size_t e)
      : t_(t), b_(b), e_(e), consumed_(e > b ? e - b : 0, false) {}

  DefUse run() {
    if (b_ >= e_) return {};
    std::size_t head = b_;
    if (t_[head].is("async") && head + 1 < e_) ++head;
    const Token& kw = t_[head];
    if (kw.is("import") || kw.is("from")) {
      imports(head);
      return std::move(out_);
    }
    if (kw.is("global") || kw.is("nonlocal")) return {};
    if (kw.is("for")) for_targets(head);
    if (kw.is("class") && head + 1 < e_ && is_var(head + 1)) def(head + 1, true);
    as_targets();
    local_binders();
    assignments();
    collect_uses();
    return std::move(out_);
  }

 private:
  bool is_var(std::size_t i) const { return t_[i].kind == TokenKind::Identifier; }
  char& consumed(std::size_t i) { return consumed_[i - b_]; }
  void def(std::size_t i, bool strong) {
    consumed(i) = true;
    add(strong ? out_.defs : out_.weak_defs, t_[i].text);
  }

  void imports(std::size_t head) {
    std::size_t k = head;
    if (t_[k].is("from")) {
      while (k < e_ && !t_[k].is("import")) ++k;
    }
    ++k;
    std::size_t seg = k;
    for (std::size_t i = k; i <= e_; ++i) {
      if (i < e_ && !t_[i].is(",")) continue;
      std::size_t name = npos;
      for (std::size_t j = seg; j < i; ++j) {
        if (t_[j].is("as") && j + 1 < i && is_var(j + 1)) {
          name = j + 1;
          break;
        }
        if (name == npos && is_var(j)) name = j;
      }
      if (name != npos) add(out_.defs, t_[name].text);
      seg = i + 1;
    }
  }

  // Target list of a `for` header ends at the depth-0 `in`.
  void for_targets(std::size_t head) {
    for (std::size_t i = head + 1; i < e_ && !t_[i].is("in"); ++i)
      if (is_var(i)) def(i, true);
  }

  void as_targets() {
    for (std::size_t i = b_; i + 1 < e_; ++i) {
      if (!t_[i].is("as")) continue;
      if (is_var(i + 1)) {
        def(i + 1, true);
      } else if (t_[i + 1].is("(")) {
        const auto close = match_close(t_, i + 1, e_);
        for (std::size_t j = i + 2; close != npos && j < close; ++j)
          if (is_var(j)) def(j, true);
      }
    }
  }

  // lambda parameters, comprehension variables and keyword-argument names
  // are local to the expression.
  void local_binders() {
    int depth = 0;
    for (std::size_t i = b_; i < e_; ++i) {
      if (is_open(t_[i])) ++depth;
      if (is_close(t_[i])) --depth;
      if (t_[i].is("lambda")) {
        for (std::size_t j = i + 1; j < e_ && !t_[j].is(":"); ++j)
          if (is_var(j)) consumed(j) = true;
      } else if (t_[i].is("for") && depth > 0) {
        std::vector<std::string> names;
        for (std::size_t j = i + 1; j < e_ && !t_[j].is("in"); ++j) {
          if (is_var(j)) {
            consumed(j) = true;
            names.push_back(t_[j].text);
          }
        }
        // Same names inside the enclosing brackets refer to the loop variable.
        for (std::size_t j = b_; j < e_; ++j)
          if (is_var(j) && std::find(names.begin(), names.end(), t_[j].text) != names.end() &&
              within_brackets(j, i))
            consumed(j) = true;
      } else if (depth > 0 && t_[i].is("=") && i > b_ && is_var(i - 1) &&
                 (t_[i - 2].is("(") || t_[i - 2].is(","))) {
        consumed(i - 1) = true;
      }
    }
  }

  // True when j lies in the innermost bracket group enclosing position i.
  bool within_brackets(std::size_t j, std::size_t i) const {
    int depth = 0;
    std::size_t open = npos;
    for (std::size_t k = i; k > b_; --k) {
      if (is_close(t_[k - 1])) ++depth;
      if (is_open(t_[k - 1])) {
        if (depth == 0) {
          open = k - 1;
          break;
        }
        --depth;
      }
    }
    if (open == npos) return false;
    const auto close = match_close(t_, open, e_);
    return j > open && (close == npos || j < close);
  }

  void target(std::size_t b, std::size_t e, bool compound) {
    // Annotation: `x: int = ...`
    int depth = 0;
    for (std::size_t i = b; i < e; ++i) {
      if (is_open(t_[i])) ++depth;
      if (is_close(t_[i])) --depth;
      if (depth == 0 && t_[i].is(":")) {
        for (std::size_t j = i; j < e; ++j) consumed(j) = true;
        e = i;
        break;
      }
    }
    std::size_t seg = b;
    depth = 0;
    for (std::size_t i = b; i <= e; ++i) {
      if (i < e) {
        if (is_open(t_[i])) ++depth;
        if (is_close(t_[i])) --depth;
        if (!(depth == 0 && t_[i].is(","))) continue;
      }
      std::size_t first = seg, last = i;
      while (first < last && (t_[first].is("(") || t_[first].is("[") || t_[first].is("*")))
        ++first;
      while (last > first && (t_[last - 1].is(")") || t_[last - 1].is("]"))) --last;
      if (last == first + 1 && is_var(first)) {
        def(first, true);
        if (compound) add(out_.uses, t_[first].text);
      } else if (last > first && is_var(first)) {
        bool plain_list = true;
        for (std::size_t j = first; j < last; ++j)
          if (!(is_var(j) || t_[j].is(",") || t_[j].is("(") || t_[j].is(")") ||
                t_[j].is("[") || t_[j].is("]") || t_[j].is("*")))
            plain_list = false;
        if (plain_list) {
          for (std::size_t j = first; j < last; ++j)
            if (is_var(j)) def(j, true);
        } else {
          consumed(first) = true;
          add(out_.weak_defs, t_[first].text);
          add(out_.uses, t_[first].text);
        }
      }
      seg = i + 1;
    }
  }

  void assignments() {
    std::vector<std::size_t> eqs;
    int depth = 0;
    std::size_t aug = npos;
    for (std::size_t i = b_; i < e_; ++i) {
      if (is_open(t_[i])) ++depth;
      if (is_close(t_[i])) --depth;
      if (t_[i].is(":=") && i > b_ && is_var(i - 1)) def(i - 1, true);
      if (depth != 0) continue;
      if (t_[i].is("=")) eqs.push_back(i);
      else if (is_assign(t_[i]) && !t_[i].is(":=") && aug == npos) aug = i;
    }
    if (aug != npos && eqs.empty()) {
      target(b_, aug, true);
      return;
    }
    std::size_t seg = b_;
    for (auto eq : eqs) {
      target(seg, eq, false);
      seg = eq + 1;
    }
  }

  void collect_uses() {
    for (std::size_t i = b_; i < e_; ++i) {
      if (consumed(i) || !is_var(i)) continue;
      if (i > b_ && t_[i - 1].is(".")) continue;
      if (i + 1 < e_ && t_[i + 1].is("(")) continue;
      if (i > b_ && (t_[i - 1].is("def") || t_[i - 1].is("class"))) continue;
      add(out_.uses, t_[i].text);
    }
  }

  const std::vector<Token>& t_;
  std::size_t b_, e_;
  std::vector<char> consumed_;
  DefUse out_;
};

}  // namespace

DefUse brace_def_use(const std::vector<Token>& t, std::size_t b, std::size_t e, Language lang,
                     StmtRole role) {
  return Analyzer(t, b, e, lang).run(role);
}

DefUse python_def_use(const std::vector<Token>& t, std::size_t b, std::size_t e) {
  return PyAnalyzer(t, b, e).run();
}

void collect_calls(const std::vector<Token>& t, std::size_t b, std::size_t e, Language lang,
                   int caller_fn, std::vector<CallSite>& out) {
  static constexpr std::string_view kNotCalls[] = {
      "if",     "while",  "for",      "switch",  "catch",  "return", "sizeof", "foreach",
      "elseif", "synchronized", "typeof", "alignof", "decltype", "defined", "__attribute__",
      "__typeof__", "_Static_assert", "static_assert", "noexcept", "throw"};
  for (std::size_t k = b; k + 1 < e; ++k) {
    if (t[k].kind != TokenKind::Identifier || !t[k + 1].is("(")) continue;
    if (std::find(std::begin(kNotCalls), std::end(kNotCalls), t[k].text) != std::end(kNotCalls))
      continue;
    bool qualified = false;
    if (k > b) {
      const Token& prev = t[k - 1];
      if (prev.is("def") || prev.is("function") || prev.is("class") || prev.is("fn") ||
          prev.is("@"))
        continue;
      qualified = is_member_op(prev);
    }
    if (lang == Language::PHP && t[k].text[0] == '$') continue;
    const auto close = match_close(t, k + 1, e);
    if (close == npos) continue;
    int args = 0;
    if (close > k + 2) {
      args = 1;
      int depth = 0;
      for (std::size_t i = k + 2; i < close; ++i) {
        if (is_open(t[i])) ++depth;
        if (is_close(t[i])) --depth;
        if (depth == 0 && t[i].is(",")) ++args;
      }
    }
    out.push_back(CallSite{caller_fn, t[k].text, args, t[k].line, qualified});
  }
}

}  // namespace fixseeker::codegraph::detail
