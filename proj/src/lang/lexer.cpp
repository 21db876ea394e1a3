#include "mlpg/lang/lexer.hpp"

#include <array>
#include <cctype>

namespace mlpg::lang {

namespace {

constexpr std::array<std::string_view, 10> kKeywords = {
    "type", "extends", "fn", "var", "if", "else", "while", "return", "true", "false"};

// Longest match first.
constexpr std::array<std::string_view, 7> kTwoCharOps = {"->", "==", "!=", "<=", ">=", "&&", "||"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Literal: return "literal";
    case TokenKind::Punct: return "punct";
    case TokenKind::Operator: return "operator";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

std::vector<Token> tokenize(std::string_view src, int file_id) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto emit = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    out.push_back(Token{kind, std::string(src.substr(begin, end - begin)), Span{begin, end}, file_id});
  };

  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    std::size_t begin = i;
    if (ident_start(c)) {
      while (i < n && ident_char(src[i])) ++i;
      auto word = src.substr(begin, i - begin);
      TokenKind kind = TokenKind::Identifier;
      if (word == "true" || word == "false")
        kind = TokenKind::Literal;
      else if (is_keyword(word))
        kind = TokenKind::Keyword;
      emit(kind, begin, i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < n && ident_start(src[i])) throw LexError("malformed number literal", begin);
      emit(TokenKind::Literal, begin, i);
      continue;
    }
    if (c == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        if (src[i] == '\\') {
          if (i + 1 >= n) break;
          i += 2;
          continue;
        }
        if (src[i] == '\n') break;
        if (src[i] == '"') {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) throw LexError("unterminated string literal", begin);
      emit(TokenKind::Literal, begin, i);
      continue;
    }
    if (i + 1 < n) {
      auto two = src.substr(i, 2);
      bool matched = false;
      for (auto op : kTwoCharOps) {
        if (two == op) {
          i += 2;
          emit(op == "->" ? TokenKind::Punct : TokenKind::Operator, begin, i);
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    switch (c) {
      case '(': case ')': case '{': case '}': case ',': case ';': case ':':
        ++i;
        emit(TokenKind::Punct, begin, i);
        continue;
      case '=': case '+': case '-': case '*': case '/': case '%': case '<': case '>': case '!':
        ++i;
        emit(TokenKind::Operator, begin, i);
        continue;
      default:
        throw LexError(std::string("illegal character '") + c + "'", begin);
    }
  }
  return out;
}

}  // namespace mlpg::lang
