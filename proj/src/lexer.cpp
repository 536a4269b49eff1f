#include "fixseeker/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <unordered_set>

namespace fixseeker::lexer {

namespace {

using WordSet = std::unordered_set<std::string_view>;

const WordSet kCKeywords = {
    "auto",     "break",  "case",    "char",   "const",    "continue", "default",  "do",
    "double",   "else",   "enum",    "extern", "float",    "for",      "goto",     "if",
    "inline",   "int",    "long",    "register", "restrict", "return", "short",    "signed",
    "sizeof",   "static", "struct",  "switch", "typedef",  "union",    "unsigned", "void",
    "volatile", "while",  "_Bool",   "bool",   "true",     "false",    "__inline", "__restrict"};

const WordSet kCppExtra = {
    "class",     "namespace", "template",    "typename",   "public",       "private",
    "protected", "virtual",   "override",    "final",      "new",          "delete",
    "this",      "operator",  "try",         "catch",      "throw",        "using",
    "nullptr",   "constexpr", "decltype",    "noexcept",   "static_cast",  "dynamic_cast",
    "const_cast", "reinterpret_cast", "friend", "mutable", "explicit",     "consteval",
    "constinit", "co_await",  "co_return",   "co_yield",   "static_assert", "alignof",
    "wchar_t",   "char8_t",   "char16_t",    "char32_t",   "thread_local", "typeid"};

const WordSet kJavaKeywords = {
    "abstract", "assert",     "boolean",   "break",   "byte",       "case",      "catch",
    "char",     "class",      "const",     "continue", "default",   "do",        "double",
    "else",     "enum",       "extends",   "final",   "finally",    "float",     "for",
    "goto",     "if",         "implements", "import", "instanceof", "int",       "interface",
    "long",     "native",     "new",       "package", "private",    "protected", "public",
    "return",   "short",      "static",    "strictfp", "super",     "switch",    "synchronized",
    "this",     "throw",      "throws",    "transient", "try",      "void",      "volatile",
    "while",    "var",        "null",      "true",    "false",      "record",    "yield"};

const WordSet kPythonKeywords = {
    "False",  "None",     "True",  "and",    "as",     "assert", "async", "await",
    "break",  "class",    "continue", "def", "del",    "elif",   "else",  "except",
    "finally", "for",     "from",  "global", "if",     "import", "in",    "is",
    "lambda", "nonlocal", "not",   "or",     "pass",   "raise",  "return", "try",
    "while",  "with",     "yield"};

const WordSet kPhpKeywords = {
    "abstract", "and",      "array",     "as",         "break",     "callable", "case",
    "catch",    "class",    "clone",     "const",      "continue",  "declare",  "default",
    "do",       "echo",     "else",      "elseif",     "empty",     "enddeclare", "endfor",
    "endforeach", "endif",  "endswitch", "endwhile",   "extends",   "final",    "finally",
    "fn",       "for",      "foreach",   "function",   "global",    "goto",     "if",
    "implements", "include", "include_once", "instanceof", "insteadof", "interface", "isset",
    "list",     "match",    "namespace", "new",        "or",        "print",    "private",
    "protected", "public",  "readonly",  "require",    "require_once", "return", "static",
    "switch",   "throw",    "trait",     "try",        "unset",     "use",      "var",
    "while",    "xor",      "yield",     "null",       "true",      "false",    "int",
    "float",    "bool",     "string",    "void",       "mixed",     "iterable", "object",
    "self",     "parent"};

const WordSet kCTypes = {"char",   "double",  "float",    "int",      "long",   "short",
                         "signed", "unsigned", "void",    "_Bool",    "bool",   "const",
                         "static", "volatile", "register", "extern",  "inline", "struct",
                         "union",  "enum",    "auto",     "restrict", "__restrict", "__inline"};
const WordSet kCppTypes = {"wchar_t", "char8_t",  "char16_t", "char32_t", "constexpr",
                           "mutable", "explicit", "virtual",  "typename", "class",
                           "thread_local", "constinit", "consteval"};
const WordSet kJavaTypes = {"boolean", "byte", "char",  "double", "float",    "int",
                            "long",    "short", "void", "final",  "static",   "var",
                            "public",  "private", "protected", "transient", "volatile",
                            "synchronized", "abstract", "native"};
const WordSet kPhpTypes = {"int",    "float",  "bool",    "string", "void",  "mixed", "array",
                           "static", "public", "private", "protected", "readonly", "var",
                           "const"};

// Longest first within each length class.
constexpr std::array<std::string_view, 46> kPuncts = {
    ">>>=", "<<=", ">>=", "...", "->*", "===", "!==", "**=", "//=", "<=>", "?->", "::",
    "->",   "++",  "--",  "<<",  ">>",  "<=",  ">=",  "==",  "!=",  "&&",  "||",  "+=",
    "-=",   "*=",  "/=",  "%=",  "&=",  "|=",  "^=",  "=>",  "**",  "??",  ":=",  ".*",
    "##",   "#",   "@",   "$",   "`",   "\\",  "<?",  "?>",  "..",  ".=",
};

bool is_ident_start(unsigned char c, Language lang) {
  return std::isalpha(c) || c == '_' || c >= 0x80 || (c == '$' && lang != Language::PYTHON);
}
bool is_ident_char(unsigned char c, Language lang) {
  return std::isalnum(c) || c == '_' || c >= 0x80 || (c == '$' && lang == Language::JAVA);
}

class Lexer {
 public:
  Lexer(std::string_view src, Language lang) : src_(src), lang_(lang) {}

  std::vector<Token> run() {
    bool line_start = true;
    // PHP files start in template mode; bare fragments are code throughout.
    bool in_php = lang_ != Language::PHP || src_.find("<?") == std::string_view::npos;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (!in_php) {
        if (c == '<' && peek(1) == '?') {
          advance();
          advance();
          if (src_.substr(pos_, 3) == "php") {
            for (int k = 0; k < 3; ++k) advance();
          } else if (peek(0) == '=') {
            advance();
          }
          in_php = true;
        } else {
          advance();
        }
        continue;
      }
      if (lang_ == Language::PHP && c == '?' && peek(1) == '>') {
        advance();
        advance();
        in_php = false;
        continue;
      }
      if (c == '\n') {
        if (lang_ == Language::PYTHON && depth_ == 0 && pending_line_) emit_newline();
        advance();
        line_start = true;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        advance();
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        advance();
        advance();
        continue;
      }
      const bool c_family = lang_ != Language::PYTHON;
      if (c_family && c == '/' && peek(1) == '/') {
        skip_to_eol();
        continue;
      }
      if (c_family && c == '/' && peek(1) == '*') {
        skip_block_comment();
        continue;
      }
      if (c == '#' && (lang_ == Language::PYTHON || lang_ == Language::PHP)) {
        if (!(lang_ == Language::PHP && peek(1) == '[')) {
          skip_to_eol();
          continue;
        }
      }
      if (c == '#' && line_start && (lang_ == Language::C || lang_ == Language::CPP)) {
        skip_to_eol();
        continue;
      }
      line_start = false;
      lex_token();
    }
    if (lang_ == Language::PYTHON && pending_line_) emit_newline();
    return std::move(tokens_);
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 0;
    } else if (src_[pos_] == '\t') {
      col_ = (col_ / 8 + 1) * 8;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_to_eol() {
    // Backslash continuation applies to C/C++ comments and directives alike.
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && peek(1) == '\n' && lang_ != Language::PYTHON) advance();
      advance();
    }
  }

  void skip_block_comment() {
    advance();
    advance();
    while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) advance();
    if (pos_ < src_.size()) {
      advance();
      advance();
    }
  }

  void push(TokenKind kind, std::size_t start, int line, int col) {
    Token t{kind, std::string(src_.substr(start, pos_ - start)), line, col, start, pos_ - start};
    tokens_.push_back(std::move(t));
    pending_line_ = true;
  }

  void emit_newline() {
    tokens_.push_back(Token{TokenKind::Newline, "", line_, col_, pos_, 0});
    pending_line_ = false;
  }

  void lex_string(char quote, bool triple, bool raw) {
    const std::size_t q = triple ? 3 : 1;
    for (std::size_t k = 0; k < q; ++k) advance();
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (!raw && c == '\\' && pos_ + 1 < src_.size()) {
        advance();
        advance();
        continue;
      }
      if (c == quote && (!triple || (peek(1) == quote && peek(2) == quote))) {
        for (std::size_t k = 0; k < q; ++k) advance();
        return;
      }
      // Unterminated single-line literals end at the newline.
      if (c == '\n' && !triple) return;
      advance();
    }
  }

  void lex_cpp_raw_string() {
    // R"delim( ... )delim"
    advance();
    advance();
    std::string delim;
    while (pos_ < src_.size() && src_[pos_] != '(' && src_[pos_] != '\n' && delim.size() < 16) {
      delim += src_[pos_];
      advance();
    }
    const std::string close = ")" + delim + "\"";
    const auto end = src_.find(close, pos_);
    const std::size_t stop = end == std::string_view::npos ? src_.size() : end + close.size();
    while (pos_ < stop) advance();
  }

  void lex_token() {
    const std::size_t start = pos_;
    const int line = line_, col = col_;
    const auto c = static_cast<unsigned char>(src_[pos_]);

    if (is_ident_start(c, lang_) && !(c == '$' && !is_ident_start(peek(1), lang_))) {
      // String prefixes: Python r/b/f/u combos, C++ raw/encoding prefixes.
      std::size_t k = 0;
      while (k < 3 && std::isalpha(static_cast<unsigned char>(peek(k)))) ++k;
      const char after = peek(k);
      if ((after == '"' || after == '\'') && k > 0) {
        const auto prefix = util_lower(src_.substr(pos_, k));
        const bool py = lang_ == Language::PYTHON &&
                        prefix.find_first_not_of("rbfu") == std::string::npos;
        const bool cpp = (lang_ == Language::CPP || lang_ == Language::C) &&
                         (prefix == "r" || prefix == "l" || prefix == "u" || prefix == "u8" ||
                          prefix == "ur" || prefix == "lr" || prefix == "u8r");
        if (cpp && prefix.back() == 'r' && after == '"') {
          for (std::size_t i = 0; i + 1 < k; ++i) advance();
          lex_cpp_raw_string();
          push(TokenKind::String, start, line, col);
          return;
        }
        if (py || cpp) {
          for (std::size_t i = 0; i < k; ++i) advance();
          const bool triple = lang_ == Language::PYTHON && peek(1) == after && peek(2) == after;
          lex_string(after, triple, py && prefix.find('r') != std::string::npos);
          push(TokenKind::String, start, line, col);
          return;
        }
      }
      advance();
      while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]), lang_))
        advance();
      const auto word = src_.substr(start, pos_ - start);
      push(is_keyword(lang_, word) ? TokenKind::Keyword : TokenKind::Identifier, start, line, col);
      return;
    }

    if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      advance();
      while (pos_ < src_.size()) {
        const auto d = static_cast<unsigned char>(src_[pos_]);
        if (std::isalnum(d) || d == '_' || d == '.' || d == '\'') {
          const bool exp = d == 'e' || d == 'E' || d == 'p' || d == 'P';
          advance();
          if (exp && (peek(0) == '+' || peek(0) == '-')) advance();
        } else {
          break;
        }
      }
      push(TokenKind::Number, start, line, col);
      return;
    }

    if (c == '"' || c == '\'' || (c == '`' && lang_ == Language::PHP)) {
      const bool triple = (lang_ == Language::PYTHON || lang_ == Language::JAVA) && c != '`' &&
                          peek(1) == static_cast<char>(c) && peek(2) == static_cast<char>(c);
      lex_string(static_cast<char>(c), triple, false);
      push(TokenKind::String, start, line, col);
      return;
    }

    for (auto p : kPuncts) {
      if (src_.substr(pos_, p.size()) == p) {
        for (std::size_t i = 0; i < p.size(); ++i) advance();
        push(TokenKind::Punct, start, line, col);
        return;
      }
    }
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
    advance();
    push(TokenKind::Punct, start, line, col);
  }

  static std::string util_lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
  }

  std::string_view src_;
  Language lang_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  int depth_ = 0;
  bool pending_line_ = false;
  std::vector<Token> tokens_;
};

}  // namespace

bool is_keyword(Language lang, std::string_view word) {
  switch (lang) {
    case Language::C: return kCKeywords.count(word) > 0;
    case Language::CPP: return kCKeywords.count(word) > 0 || kCppExtra.count(word) > 0;
    case Language::JAVA: return kJavaKeywords.count(word) > 0;
    case Language::PYTHON: return kPythonKeywords.count(word) > 0;
    case Language::PHP: {
      std::string lower(word);
      for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      return kPhpKeywords.count(lower) > 0;
    }
    case Language::OTHER: return false;
  }
  return false;
}

bool is_type_keyword(Language lang, std::string_view word) {
  switch (lang) {
    case Language::C: return kCTypes.count(word) > 0;
    case Language::CPP: return kCTypes.count(word) > 0 || kCppTypes.count(word) > 0;
    case Language::JAVA: return kJavaTypes.count(word) > 0;
    case Language::PHP: return kPhpTypes.count(word) > 0;
    case Language::PYTHON:
    case Language::OTHER: return false;
  }
  return false;
}

std::vector<Token> lex(std::string_view source, Language lang) { return Lexer(source, lang).run(); }

std::vector<std::string> normalized_tokens(std::string_view source, Language lang) {
  std::vector<std::string> out;
  for (auto& t : lex(source, lang)) {
    if (t.kind == TokenKind::Newline) continue;
    out.push_back(t.kind == TokenKind::String ? std::string("STR") : std::move(t.text));
  }
  return out;
}

}  // namespace fixseeker::lexer
