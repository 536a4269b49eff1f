#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "internal.hpp"

namespace fixseeker::codegraph {

using namespace detail;

namespace {

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

class Builder {
 public:
  Builder(std::string_view src, const std::vector<Token>& t, Language lang, DepGraph& g)
      : src_(src), t_(t), lang_(lang), g_(g) {}

  void function(const FnDetail& d, const Detection& det) {
    fn_id_ = d.span.fn_id;
    first_node_ = static_cast<int>(g_.nodes.size());
    labels_.clear();
    gotos_.clear();
    ranges_.clear();

    const int sig = node(d.sig_begin, d.sig_end, StmtRole::Signature);
    for (const auto& p : d.span.params)
      if (!p.empty() && !contains(g_.nodes[sig].defs, p)) g_.nodes[sig].defs.push_back(p);

    if (lang_ == Language::PYTHON) {
      if (d.inline_body != npos) {
        const auto& line = det.lines[d.def_line];
        simple_statements(d.inline_body, line.end, -1);
      } else {
        python_block(det.lines, d.body_begin, d.body_end);
      }
    } else {
      std::vector<int> top;
      seq(d.body_begin, d.body_end, top);
    }
    gotos();
    data_dependencies();
    calls();
  }

  std::set<DepEdge> edges;

 private:
  int node(std::size_t b, std::size_t e, StmtRole role) {
    if (e <= b) e = b + 1;
    StmtNode n;
    n.node_id = static_cast<int>(g_.nodes.size());
    const std::size_t off = t_[b].offset;
    const std::size_t stop = t_[e - 1].offset + t_[e - 1].length;
    n.code = collapse_ws(src_.substr(off, stop - off));
    n.line = t_[b].line;
    n.end_line = last_line(t_[e - 1]);
    n.fn_id = fn_id_;
    if (role != StmtRole::Signature) {
      DefUse du = lang_ == Language::PYTHON ? python_def_use(t_, b, e)
                                            : brace_def_use(t_, b, e, lang_, role);
      n.defs = std::move(du.defs);
      n.weak_defs = std::move(du.weak_defs);
      n.uses = std::move(du.uses);
    }
    g_.nodes.push_back(std::move(n));
    ranges_.emplace_back(b, e);
    return g_.nodes.back().node_id;
  }

  void cd(int src, int dst) {
    if (src >= 0 && src != dst) edges.insert(DepEdge{src, dst, DepKind::CD});
  }

  // ---- brace languages -------------------------------------------------

  enum class Gov { None, Label, Case };

  void seq(std::size_t i, std::size_t end, std::vector<int>& out) {
    int governor = -1;
    std::size_t label = npos;
    while (i < end) {
      std::vector<int> produced;
      Gov gov = Gov::None;
      const std::size_t next = stmt(i, end, produced, gov);
      i = next > i ? next : i + 1;
      if (gov != Gov::None) {
        // A new label or case label ends the region of the previous one.
        governor = produced.empty() ? -1 : produced.front();
        label = gov == Gov::Label ? labels_.size() - 1 : npos;
      } else {
        for (int p : produced) {
          cd(governor, p);
          if (label != npos) labels_[label].region.push_back(p);
        }
      }
      out.insert(out.end(), produced.begin(), produced.end());
    }
  }

  std::size_t paren_after(std::size_t k, std::size_t end) const {
    if (k < end && t_[k].is("(")) return match_close(t_, k, end);
    return npos;
  }

  std::size_t stmt(std::size_t i, std::size_t end, std::vector<int>& out, Gov& gov) {
    const Token& tok = t_[i];
    if (tok.is(";")) return i + 1;
    if (tok.is("{")) {
      auto close = match_close(t_, i, end);
      if (close == npos) {
        g_.degraded = true;
        close = end;
      }
      seq(i + 1, close, out);
      return std::min(close + 1, end);
    }
    if (tok.is("}")) {
      g_.degraded = true;
      return i + 1;
    }
    if (tok.is("if") || tok.is("elseif") || tok.is("while") || tok.is("for") ||
        tok.is("foreach") || tok.is("switch") || tok.is("synchronized")) {
      std::size_t j = i + 1;
      while (j < end && t_[j].is("constexpr")) ++j;
      const auto rp = paren_after(j, end);
      if (rp != npos) return control(i, rp, end, out);
    }
    if (tok.is("do")) {
      const int id = node(i, i + 1, StmtRole::Keyword);
      out.push_back(id);
      std::vector<int> kids;
      Gov ignore = Gov::None;
      std::size_t k = i + 1 < end ? stmt(i + 1, end, kids, ignore) : end;
      if (k < end && t_[k].is("while")) {
        const auto rp = paren_after(k + 1, end);
        if (rp != npos) {
          kids.push_back(node(k, rp + 1, StmtRole::Condition));
          k = rp + 1;
          if (k < end && t_[k].is(";")) ++k;
        }
      }
      for (int c : kids) cd(id, c);
      return k;
    }
    if (tok.is("try")) return try_stmt(i, end, out);
    if (tok.is("else")) {
      Gov ignore = Gov::None;
      return i + 1 < end ? stmt(i + 1, end, out, ignore) : end;
    }
    if (tok.is("case") || tok.is("default")) {
      std::size_t k = i + 1;
      int depth = 0;
      for (; k < end; ++k) {
        if (t_[k].is("(") || t_[k].is("[")) ++depth;
        if (t_[k].is(")") || t_[k].is("]")) --depth;
        if (depth == 0 && (t_[k].is(":") || t_[k].is("->"))) break;
        if (t_[k].is(";") || t_[k].is("{")) break;
      }
      if (k < end && (t_[k].is(":") || t_[k].is("->"))) {
        out.push_back(node(i, k + 1, StmtRole::Generic));
        gov = Gov::Case;
        return k + 1;
      }
    }
    if (tok.kind == TokenKind::Identifier && i + 1 < end && t_[i + 1].is(":")) {
      const int id = node(i, i + 2, StmtRole::Label);
      labels_.push_back({tok.text, id, {}});
      out.push_back(id);
      gov = Gov::Label;
      return i + 2;
    }
    if (tok.is("goto") && i + 1 < end && t_[i + 1].kind == TokenKind::Identifier) {
      std::size_t k = i + 2;
      while (k < end && !t_[k].is(";")) ++k;
      const int id = node(i, std::min(k + 1, end), StmtRole::Keyword);
      gotos_.emplace_back(t_[i + 1].text, id);
      out.push_back(id);
      return std::min(k + 1, end);
    }
    // Loop-like macros: list_for_each_entry(pos, head, member) { ... }
    if ((lang_ == Language::C || lang_ == Language::CPP) && tok.kind == TokenKind::Identifier &&
        i + 1 < end && t_[i + 1].is("(")) {
      const auto rp = match_close(t_, i + 1, end);
      if (rp != npos && rp + 1 < end && t_[rp + 1].is("{")) return control(i, rp, end, out);
    }
    return generic(i, end, out);
  }

  std::size_t control(std::size_t i, std::size_t rp, std::size_t end, std::vector<int>& out) {
    const bool loop = t_[i].is("for") || t_[i].is("foreach");
    const int id = node(i, rp + 1, loop ? StmtRole::ForHeader : StmtRole::Condition);
    out.push_back(id);
    std::vector<int> kids;
    Gov ignore = Gov::None;
    std::size_t k = rp + 1 < end ? stmt(rp + 1, end, kids, ignore) : end;
    if (t_[i].is("if") || t_[i].is("elseif")) {
      if (k < end && t_[k].is("elseif")) {
        k = stmt(k, end, kids, ignore);
      } else if (k < end && t_[k].is("else")) {
        k = k + 1 < end ? stmt(k + 1, end, kids, ignore) : end;
      }
    }
    for (int c : kids) cd(id, c);
    return k;
  }

  std::size_t try_stmt(std::size_t i, std::size_t end, std::vector<int>& out) {
    std::size_t k = i + 1;
    Gov ignore = Gov::None;
    if (const auto rp = paren_after(k, end); rp != npos) {
      // try-with-resources
      if (rp > k + 1) out.push_back(node(k + 1, rp, StmtRole::Generic));
      k = rp + 1;
    }
    if (k < end) k = stmt(k, end, out, ignore);
    while (k < end && t_[k].is("catch")) {
      const auto rp = paren_after(k + 1, end);
      std::size_t head_end = rp != npos ? rp + 1 : k + 1;
      const int id = node(k, head_end, StmtRole::Catch);
      out.push_back(id);
      std::vector<int> kids;
      k = head_end < end ? stmt(head_end, end, kids, ignore) : end;
      for (int c : kids) cd(id, c);
    }
    if (k < end && t_[k].is("finally")) k = k + 1 < end ? stmt(k + 1, end, out, ignore) : end;
    return k;
  }

  std::size_t generic(std::size_t i, std::size_t end, std::vector<int>& out) {
    std::size_t k = i;
    int depth = 0;
    const bool brace_ends = lang_ == Language::JAVA || lang_ == Language::PHP;
    while (k < end) {
      const Token& tok = t_[k];
      if (tok.is("(") || tok.is("[")) {
        ++depth;
      } else if (tok.is(")") || tok.is("]")) {
        depth = std::max(0, depth - 1);
      } else if (tok.is("{")) {
        const auto close = match_close(t_, k, end);
        if (close == npos) {
          g_.degraded = true;
          k = end;
          break;
        }
        k = close + 1;
        if (depth == 0 && brace_ends &&
            !(k < end && (t_[k].is(";") || t_[k].is(")") || t_[k].is(",") || t_[k].is(".") ||
                          t_[k].is("->"))))
          break;
        continue;
      } else if (tok.is("}")) {
        if (depth == 0) break;
        g_.degraded = true;
      } else if (tok.is(";") && depth == 0) {
        ++k;
        break;
      }
      ++k;
    }
    if (k <= i) k = i + 1;
    out.push_back(node(i, k, StmtRole::Generic));
    return k;
  }

  // ---- Python ------------------------------------------------------------

  std::size_t header_colon(std::size_t b, std::size_t e) const {
    int depth = 0;
    for (std::size_t i = b; i < e; ++i) {
      if (t_[i].is("(") || t_[i].is("[") || t_[i].is("{")) ++depth;
      if (t_[i].is(")") || t_[i].is("]") || t_[i].is("}")) --depth;
      if (t_[i].is("lambda")) {
        // skip the lambda's own colon
        while (i < e && !t_[i].is(":")) ++i;
        continue;
      }
      if (depth == 0 && t_[i].is(":")) return i;
    }
    return npos;
  }

  void simple_statements(std::size_t b, std::size_t e, int gov) {
    int depth = 0;
    std::size_t start = b;
    for (std::size_t i = b; i <= e; ++i) {
      if (i < e) {
        if (t_[i].is("(") || t_[i].is("[") || t_[i].is("{")) ++depth;
        if (t_[i].is(")") || t_[i].is("]") || t_[i].is("}")) --depth;
        if (!(depth == 0 && t_[i].is(";"))) continue;
      }
      if (i > start) cd(gov, node(start, i, StmtRole::Generic));
      start = i + 1;
    }
  }

  void python_block(const std::vector<LogicalLine>& lines, std::size_t lb, std::size_t le) {
    struct Frame {
      int indent;
      int governor;
    };
    std::vector<Frame> stack;
    std::map<int, int> prev_ctrl;  // indent -> last if/elif/for/while/try header
    for (std::size_t li = lb; li < le; ++li) {
      const auto& line = lines[li];
      while (!stack.empty() && stack.back().indent >= line.indent) stack.pop_back();
      prev_ctrl.erase(prev_ctrl.upper_bound(line.indent), prev_ctrl.end());
      const int gov = stack.empty() ? -1 : stack.back().governor;

      std::size_t k = line.begin;
      if (t_[k].is("async") && k + 1 < line.end) ++k;
      const Token& head = t_[k];

      if (head.is("def") || head.is("class")) {
        // Nested definitions: the header binds a name; the body belongs to
        // its own function (or to the class's methods).
        const auto colon = header_colon(k, line.end);
        const int id = node(line.begin, colon == npos ? line.end : colon, StmtRole::Generic);
        if (k + 1 < line.end && t_[k + 1].kind == TokenKind::Identifier) {
          auto& n = g_.nodes[id];
          n.uses.erase(std::remove(n.uses.begin(), n.uses.end(), t_[k + 1].text), n.uses.end());
          if (!contains(n.defs, t_[k + 1].text)) n.defs.push_back(t_[k + 1].text);
        }
        cd(gov, id);
        while (li + 1 < le && lines[li + 1].indent > line.indent) ++li;
        prev_ctrl.erase(line.indent);
        continue;
      }

      const bool compound = head.is("if") || head.is("elif") || head.is("else") ||
                            head.is("while") || head.is("for") || head.is("try") ||
                            head.is("except") || head.is("finally") || head.is("with") ||
                            ((head.text == "match" || head.text == "case") &&
                             header_colon(k, line.end) + 1 == line.end);
      const auto colon = compound ? header_colon(k, line.end) : npos;
      if (!compound || colon == npos) {
        simple_statements(line.begin, line.end, gov);
        prev_ctrl.erase(line.indent);
        continue;
      }

      const auto prev = prev_ctrl.find(line.indent);
      const int chained = prev != prev_ctrl.end() ? prev->second : -1;
      int body_gov = gov;
      if (head.is("if") || head.is("while") || head.is("for") || head.is("except") ||
          head.is("elif") || head.text == "match" || head.text == "case") {
        const bool loop = head.is("for");
        const int id = node(line.begin, colon, loop ? StmtRole::ForHeader : StmtRole::Condition);
        cd(head.is("elif") && chained >= 0 ? chained : gov, id);
        body_gov = id;
        prev_ctrl[line.indent] = id;
      } else if (head.is("with")) {
        const int id = node(line.begin, colon, StmtRole::Generic);
        cd(gov, id);
        prev_ctrl.erase(line.indent);
      } else if (head.is("else")) {
        body_gov = chained >= 0 ? chained : gov;
      } else if (head.is("try") || head.is("finally")) {
        prev_ctrl.erase(line.indent);
      }
      if (colon + 1 < line.end) {
        simple_statements(colon + 1, line.end, body_gov);
      } else {
        stack.push_back({line.indent, body_gov});
      }
    }
  }

  // ---- per-function edges ----------------------------------------------

  void gotos() {
    for (const auto& [name, id] : gotos_) {
      for (const auto& l : labels_) {
        if (l.name != name || l.node < id) continue;
        cd(id, l.node);
        for (int r : l.region)
          if (r > id) cd(id, r);
      }
    }
  }

  void data_dependencies() {
    const int last = static_cast<int>(g_.nodes.size());
    for (int n = first_node_; n < last; ++n) {
      const auto& dst = g_.nodes[n];
      for (const auto& v : dst.uses) {
        for (int m = n - 1; m >= first_node_; --m) {
          const auto& src = g_.nodes[m];
          const bool strong = contains(src.defs, v);
          if (strong || contains(src.weak_defs, v)) {
            if (src.line < dst.line) edges.insert(DepEdge{m, n, DepKind::DD});
          }
          if (strong) break;
        }
      }
    }
  }

  void calls() {
    // The signature (first node) contributes no calls.
    for (std::size_t r = 1; r < ranges_.size(); ++r)
      collect_calls(t_, ranges_[r].first, ranges_[r].second, lang_, fn_id_, g_.call_sites);
  }

  struct Label {
    std::string name;
    int node;
    std::vector<int> region;
  };

  std::string_view src_;
  const std::vector<Token>& t_;
  Language lang_;
  DepGraph& g_;
  int fn_id_ = 0;
  int first_node_ = 0;
  std::vector<Label> labels_;
  std::vector<std::pair<std::string, int>> gotos_;
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

const FnDetail* find_detail(const Detection& det, const FunctionSpan& fn) {
  if (fn.fn_id < 0 || static_cast<std::size_t>(fn.fn_id) >= det.functions.size()) return nullptr;
  const auto& d = det.functions[fn.fn_id];
  if (d.span.name != fn.name || d.span.start_line != fn.start_line) return nullptr;
  return &d;
}

std::vector<FunctionCall> resolve(const std::vector<CallSite>& sites,
                                  const std::vector<FunctionSpan>& functions, Language lang) {
  std::set<FunctionCall> out;
  for (const auto& s : sites)
    for (const auto& fn : functions)
      if (fn.name == s.callee && arity_matches(fn, lang, s.arity, s.qualified))
        out.insert(FunctionCall{s.caller_fn, fn.fn_id, s.line});
  return {out.begin(), out.end()};
}

bool meets(const FunctionSpan& fn, const LineRange& r) {
  return r.first <= fn.end_line && r.last >= fn.start_line;
}

}  // namespace

FunctionIndex function_index(std::string_view source, Language lang) {
  FunctionIndex idx;
  if (lang == Language::OTHER) return idx;
  const auto tokens = lexer::lex(source, lang);
  auto det = detect_functions(tokens, lang);
  idx.degraded = det.degraded;
  for (auto& d : det.functions) idx.functions.push_back(std::move(d.span));
  return idx;
}

bool arity_matches(const FunctionSpan& fn, Language lang, int args, bool qualified) {
  const auto fits = [&](int n) {
    if (n < fn.min_arity) return false;
    return fn.variadic || n <= static_cast<int>(fn.params.size());
  };
  if (fits(args)) return true;
  // obj.method(x) binds the receiver to an explicit self/cls parameter.
  if (lang == Language::PYTHON && qualified && !fn.params.empty() &&
      (fn.params.front() == "self" || fn.params.front() == "cls"))
    return fits(args + 1);
  return false;
}

std::vector<FunctionCall> scan_calls(std::string_view source,
                                     const std::vector<FunctionSpan>& functions, Language lang) {
  return build_dep_graph(source, functions, lang).calls;
}

std::vector<FunctionSpan> prune_unchanged(const std::vector<FunctionSpan>& functions,
                                          const std::vector<Hunk>& hunks, Side side,
                                          const std::vector<FunctionCall>& calls) {
  std::set<int> core;
  for (const auto& fn : functions)
    for (const auto& h : hunks)
      if (meets(fn, h.changed_range(side))) core.insert(fn.fn_id);
  std::set<int> keep = core;
  for (const auto& c : calls) {
    if (core.count(c.caller_fn)) keep.insert(c.callee_fn);
    if (core.count(c.callee_fn)) keep.insert(c.caller_fn);
  }
  std::vector<FunctionSpan> out;
  for (const auto& fn : functions)
    if (keep.count(fn.fn_id)) out.push_back(fn);
  return out;
}

std::map<int, std::optional<int>> locate_hunk_functions(const std::vector<Hunk>& hunks,
                                                        const std::vector<FunctionSpan>& functions,
                                                        Side side) {
  std::map<int, std::optional<int>> out;
  for (const auto& h : hunks) {
    const int line = h.changed_range(side).first;
    const FunctionSpan* best = nullptr;
    for (const auto& fn : functions) {
      if (line < fn.start_line || line > fn.end_line) continue;
      if (!best || fn.end_line - fn.start_line < best->end_line - best->start_line) best = &fn;
    }
    out[h.id] = best ? std::optional<int>(best->fn_id) : std::nullopt;
  }
  return out;
}

DepGraph build_dep_graph(std::string_view source, const std::vector<FunctionSpan>& functions,
                         Language lang) {
  DepGraph g;
  g.functions = functions;
  if (lang == Language::OTHER || functions.empty()) return g;
  const auto tokens = lexer::lex(source, lang);
  const auto det = detect_functions(tokens, lang);
  g.degraded = det.degraded;

  std::vector<const FunctionSpan*> order;
  for (const auto& fn : functions) order.push_back(&fn);
  std::sort(order.begin(), order.end(),
            [](const FunctionSpan* a, const FunctionSpan* b) { return a->fn_id < b->fn_id; });

  Builder b(source, tokens, lang, g);
  for (const auto* fn : order) {
    const FnDetail* d = find_detail(det, *fn);
    if (!d) {
      g.degraded = true;
      continue;
    }
    b.function(*d, det);
  }
  g.edges.assign(b.edges.begin(), b.edges.end());
  g.calls = resolve(g.call_sites, functions, lang);
  return g;
}

std::string debug_dump(const DepGraph& g) {
  std::ostringstream os;
  for (const auto& n : g.nodes) os << "node " << n.node_id << ' ' << n.line << ' ' << n.code << '\n';
  for (const auto& e : g.edges)
    os << "edge " << e.src << ' ' << e.dst << ' ' << (e.kind == DepKind::DD ? "DD" : "CD") << '\n';
  for (const auto& c : g.calls)
    os << "call " << c.caller_fn << ' ' << c.callee_fn << ' ' << c.call_line << '\n';
  return os.str();
}

}  // namespace fixseeker::codegraph
