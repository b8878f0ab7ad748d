#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synbd {

// Constituency tree. Preterminals are leaves: they carry the POS tag as
// `label` and the word as `token`. Internal nodes have at least one child
// and no token. Trees are immutable values once built.
class ParseTree {
 public:
  static ParseTree leaf(std::string label, std::string token);
  static ParseTree node(std::string label, std::vector<ParseTree> children);

  const std::string& label() const { return label_; }
  const std::vector<ParseTree>& children() const { return children_; }
  const std::optional<std::string>& token() const { return token_; }
  bool is_leaf() const { return token_.has_value(); }

  std::size_t leaf_count() const;
  std::size_t depth() const;

  friend bool operator==(const ParseTree&, const ParseTree&) = default;

 private:
  ParseTree() = default;

  std::string label_;
  std::vector<ParseTree> children_;
  std::optional<std::string> token_;
};

// Root label plus ordered child labels: the top two layers of a tree.
struct SyntacticTemplate {
  std::string root;
  std::vector<std::string> child_labels;

  // "S(NP)(VP)(.)"
  std::string to_string() const;
  static SyntacticTemplate parse(std::string_view canonical);

  friend bool operator==(const SyntacticTemplate&,
                         const SyntacticTemplate&) = default;
  friend auto operator<=>(const SyntacticTemplate& a,
                          const SyntacticTemplate& b) {
    return a.to_string() <=> b.to_string();
  }
};

// Reads one Penn-Treebank bracketed tree.
//
// Whitespace (including newlines) between tokens is insignificant. A bare
// outer wrapper with an empty label, "( (S ...) )", is unwrapped. Functional
// suffixes are stripped from labels at the first '-' or '=' that is not the
// first character ("NP-SBJ-1" -> "NP"; "-NONE-" is kept). Tokens "-LRB-" and
// "-RRB-" decode to "(" and ")".
//
// Throws ParseError (with byte offset) on unbalanced parentheses, an empty
// constituent, a token outside a preterminal, or trailing garbage.
ParseTree parse_ptb(std::string_view src);

// Reads every tree in a multi-tree source (e.g. a .mrg/.ptb file).
std::vector<ParseTree> parse_ptb_all(std::string_view src);

// Canonical single-line bracketing: "(S (NP (PRP I)) (. .))".
std::string print_ptb(const ParseTree& tree);

// Label skeleton with words dropped: "S(NP(PRP))(VP(VBP)(NP(NNS)))(.)".
std::string linearize(const ParseTree& tree);

SyntacticTemplate extract_template(const ParseTree& tree);

std::vector<std::string> yield_tokens(const ParseTree& tree);

// Label normalization applied during ingestion.
std::string normalize_label(std::string_view raw);

}  // namespace synbd
