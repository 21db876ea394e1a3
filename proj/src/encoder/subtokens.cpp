#include "mlpg/encoder/subtokens.hpp"

#include <cctype>

namespace mlpg::encoder {

namespace {
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<std::string> split_subtokens(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    char c = name[i];
    if (!is_alnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      char p = name[i - 1];
      bool boundary = (is_lower(p) && is_upper(c)) || (is_digit(p) != is_digit(c)) ||
                      (is_upper(p) && is_upper(c) && i + 1 < name.size() && is_lower(name[i + 1]));
      if (boundary) flush();
    }
    cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  flush();
  return out;
}

}  // namespace mlpg::encoder
