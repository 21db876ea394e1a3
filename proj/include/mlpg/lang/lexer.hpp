#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlpg::lang {

enum class TokenKind { Keyword, Identifier, Literal, Punct, Operator };

const char* to_string(TokenKind kind);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Token {
  TokenKind kind = TokenKind::Punct;
  std::string text;
  Span span;
  int file_id = 0;

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
};

class LexError : public std::runtime_error {
 public:
  LexError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

bool is_keyword(std::string_view word);

/// Splits MiniLang source into tokens. Whitespace and `//` comments are
/// skipped; each token keeps its byte span in the original source.
std::vector<Token> tokenize(std::string_view source, int file_id = 0);

}  // namespace mlpg::lang
