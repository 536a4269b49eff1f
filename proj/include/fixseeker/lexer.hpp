#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fixseeker/gitio.hpp"

namespace fixseeker::lexer {

enum class TokenKind { Identifier, Keyword, Number, String, Punct, Newline };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;             // 1-based
  int col = 0;              // 0-based, tabs expanded to multiples of 8
  std::size_t offset = 0;   // byte offset of the first character
  std::size_t length = 0;

  bool is(std::string_view s) const noexcept {
    return (kind == TokenKind::Punct || kind == TokenKind::Keyword) && text == s;
  }
  bool is_word() const noexcept {
    return kind == TokenKind::Identifier || kind == TokenKind::Keyword;
  }
};

/// Comments and (for C/C++) preprocessor lines are dropped. For Python a
/// Newline token closes every logical line.
std::vector<Token> lex(std::string_view source, Language lang);

bool is_keyword(Language lang, std::string_view word);
/// Built-in type names and qualifiers that start a declaration.
bool is_type_keyword(Language lang, std::string_view word);

/// Token texts for similarity and hashing: Newline tokens removed and every
/// string literal collapsed to "STR".
std::vector<std::string> normalized_tokens(std::string_view source, Language lang);

}  // namespace fixseeker::lexer
