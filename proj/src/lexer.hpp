#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ecmtt/syntax.hpp"

namespace ecmtt::detail {

enum class Tok { Ident, Keyword, Int, Sym, End };

struct Token {
  Tok kind;
  std::string text;
  Span span;
};

bool is_keyword(std::string_view word);

/// Throws ParseError on a character that starts no token.
std::vector<Token> lex(std::string_view text);

}  // namespace ecmtt::detail
