#include "lexer.hpp"

#include <array>
#include <cctype>

#include "ecmtt/surface.hpp"

namespace ecmtt::detail {

namespace {

constexpr std::array<std::string_view, 27> kKeywords = {
    "fn",     "box",  "let",   "in",   "ret",  "handle", "with",  "init", "as",    "eval",
    "fix",    "if",   "then",  "else", "return", "handler", "for", "true", "false", "fst",
    "snd",    "def",  "unit",  "int",  "bool", "bot",    "list"};

// Longest symbols first so that "->" wins over "-".
constexpr std::array<std::string_view, 21> kSymbols = {
    ";;", "->", "=>", "<-", "++", "(", ")", "{", "}", "[", "]",
    ",",  ";",  ":",  ".",  "=",  "<", "+", "-", "*", "/"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Span span{line, col, 0};
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      std::string word(text.substr(i, j - i));
      span.length = static_cast<int>(word.size());
      out.push_back({is_keyword(word) ? Tok::Keyword : Tok::Ident, word, span});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      std::string digits(text.substr(i, j - i));
      span.length = static_cast<int>(digits.size());
      out.push_back({Tok::Int, digits, span});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (auto sym : kSymbols) {
      if (text.substr(i, sym.size()) == sym) {
        span.length = static_cast<int>(sym.size());
        out.push_back({Tok::Sym, std::string(sym), span});
        advance(sym.size());
        matched = true;
        break;
      }
    }
    if (!matched) {
      span.length = 1;
      throw ParseError({Diagnostic{Diagnostic::Severity::Error,
                                   "unexpected character '" + std::string(1, c) + "'", span}});
    }
  }
  out.push_back({Tok::End, "", Span{line, col, 0}});
  return out;
}

}  // namespace ecmtt::detail
