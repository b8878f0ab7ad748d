#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace synbd {

// Whitespace split with trailing punctuation detached ("great." -> "great",
// "."). Case preserved.
std::vector<std::string> split_surface(std::string_view text);

// split_surface + lowercase. This is the token view used by the language
// model and the victim feature extractors.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
bool is_punct_token(std::string_view token);
bool starts_upper(std::string_view token);
std::string capitalize(std::string_view token);

std::string join(const std::vector<std::string>& tokens,
                 std::string_view sep = " ");

// Joins treebank-style tokens into readable text: no space before
// punctuation or clitics ("n't", "'s", ...).
std::string detokenize(const std::vector<std::string>& tokens);

}  // namespace synbd
