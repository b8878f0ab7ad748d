#include "synbd/text.h"

#include <cctype>

namespace synbd {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct_char(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Trailing punctuation worth splitting off a word ("great." -> "great" ".").
bool is_trailing_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> split_surface(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      std::string_view word = text.substr(i, j - i);
      std::size_t end = word.size();
      while (end > 0 && is_trailing_punct(word[end - 1])) --end;
      if (end == 0) {
        out.emplace_back(word);  // all punctuation ("...", ",")
      } else {
        out.emplace_back(word.substr(0, end));
        for (std::size_t k = end; k < word.size(); ++k) out.emplace_back(1, word[k]);
      }
    }
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto tokens = split_surface(text);
  for (auto& t : tokens) t = to_lower(t);
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_punct_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (!is_punct_char(c)) return false;
  }
  return true;
}

bool starts_upper(std::string_view token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token[0])) != 0;
}

std::string capitalize(std::string_view token) {
  std::string out(token);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  static const char* const kAttachLeft[] = {".", ",", "!", "?", ";", ":", "n't",
                                             "'s", "'re", "'ve", "'ll", "'d", "'m", ")"};
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bool attach = false;
    for (const char* p : kAttachLeft) {
      if (tokens[i] == p) attach = true;
    }
    if (i > 0 && tokens[i - 1] == "(") attach = true;
    if (i > 0 && !attach) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace synbd
