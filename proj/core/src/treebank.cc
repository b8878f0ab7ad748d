#include "synbd/treebank.h"

#include <algorithm>

#include "synbd/error.h"

namespace synbd {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool has_ws_or_paren(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_ws(c) || c == '(' || c == ')'; });
}

std::string decode_token(std::string_view raw) {
  if (raw == "-LRB-") return "(";
  if (raw == "-RRB-") return ")";
  return std::string(raw);
}

std::string encode_token(const std::string& token) {
  if (token == "(") return "-LRB-";
  if (token == ")") return "-RRB-";
  return token;
}

void validate_label(const std::string& label) {
  if (label.empty()) throw DataError("tree label is empty");
  if (has_ws_or_paren(label)) throw DataError("tree label contains whitespace or parenthesis: " + label);
}

}  // namespace

ParseTree ParseTree::leaf(std::string label, std::string token) {
  validate_label(label);
  token = decode_token(token);
  if (token.empty()) throw DataError("leaf token is empty");
  if (token != "(" && token != ")" && has_ws_or_paren(token)) {
    throw DataError("leaf token contains whitespace or parenthesis: " + token);
  }
  ParseTree t;
  t.label_ = std::move(label);
  t.token_ = std::move(token);
  return t;
}

ParseTree ParseTree::node(std::string label, std::vector<ParseTree> children) {
  validate_label(label);
  if (children.empty()) throw DataError("internal node '" + label + "' has no children");
  ParseTree t;
  t.label_ = std::move(label);
  t.children_ = std::move(children);
  return t;
}

std::size_t ParseTree::leaf_count() const {
  if (is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : children_) n += c.leaf_count();
  return n;
}

std::size_t ParseTree::depth() const {
  std::size_t d = 0;
  for (const auto& c : children_) d = std::max(d, c.depth());
  return d + 1;
}

std::string normalize_label(std::string_view raw) {
  if (raw.empty() || raw.front() == '-') return std::string(raw);
  const auto cut = raw.find_first_of("-=");
  return std::string(raw.substr(0, cut));
}

namespace {

struct Frame {
  std::size_t open_offset = 0;
  std::string label;
  std::vector<ParseTree> children;
  std::optional<std::string> token;
};

class PtbReader {
 public:
  explicit PtbReader(std::string_view src) : src_(src) {}

  bool at_end() {
    skip_ws();
    return pos_ >= src_.size();
  }

  ParseTree read_tree() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty input", pos_);
    if (src_[pos_] != '(') {
      if (src_[pos_] == ')') throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
      throw ParseError("token outside a preterminal", pos_);
    }
    std::vector<Frame> stack;
    while (true) {
      skip_ws();
      if (pos_ >= src_.size()) {
        throw ParseError("unbalanced parentheses: '(' opened at byte " +
                             std::to_string(stack.back().open_offset) + " is never closed",
                         pos_);
      }
      const char c = src_[pos_];
      if (c == '(') {
        Frame f;
        f.open_offset = pos_++;
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] != '(' && src_[pos_] != ')') {
          f.label = normalize_label(read_atom());
        }
        if (!stack.empty() && stack.back().token) {
          throw ParseError("token outside a preterminal", stack.back().open_offset);
        }
        stack.push_back(std::move(f));
      } else if (c == ')') {
        if (stack.empty()) throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
        Frame f = std::move(stack.back());
        stack.pop_back();
        ParseTree t = close_frame(f);
        ++pos_;
        if (stack.empty()) return t;
        stack.back().children.push_back(std::move(t));
      } else {
        const std::size_t at = pos_;
        std::string atom(read_atom());
        Frame& top = stack.back();
        if (top.token || !top.children.empty() || top.label.empty()) {
          throw ParseError("token outside a preterminal", at);
        }
        top.token = std::move(atom);
      }
    }
  }

  std::size_t pos() const { return pos_; }

 private:
  ParseTree close_frame(Frame& f) {
    if (f.token) {
      try {
        return ParseTree::leaf(std::move(f.label), std::move(*f.token));
      } catch (const DataError& e) {
        throw ParseError(e.what(), f.open_offset);
      }
    }
    if (f.children.empty()) throw ParseError("empty constituent", f.open_offset);
    if (f.label.empty()) {
      if (f.children.size() == 1) return std::move(f.children.front());
      throw ParseError("unlabeled constituent with several children", f.open_offset);
    }
    return ParseTree::node(std::move(f.label), std::move(f.children));
  }

  void skip_ws() {
    while (pos_ < src_.size() && is_ws(src_[pos_])) ++pos_;
  }

  std::string_view read_atom() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && !is_ws(src_[pos_]) && src_[pos_] != '(' && src_[pos_] != ')') ++pos_;
    return src_.substr(start, pos_ - start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

void print_into(const ParseTree& t, std::string& out) {
  out += '(';
  out += t.label();
  if (t.is_leaf()) {
    out += ' ';
    out += encode_token(*t.token());
  } else {
    for (const auto& c : t.children()) {
      out += ' ';
      print_into(c, out);
    }
  }
  out += ')';
}

void linearize_into(const ParseTree& t, std::string& out) {
  out += t.label();
  for (const auto& c : t.children()) {
    out += '(';
    linearize_into(c, out);
    out += ')';
  }
}

void yield_into(const ParseTree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(*t.token());
    return;
  }
  for (const auto& c : t.children()) yield_into(c, out);
}

}  // namespace

ParseTree parse_ptb(std::string_view src) {
  PtbReader reader(src);
  ParseTree t = reader.read_tree();
  if (!reader.at_end()) {
    if (src[reader.pos()] == ')') {
      throw ParseError("unbalanced parentheses: unexpected ')'", reader.pos());
    }
    throw ParseError("trailing garbage after tree", reader.pos());
  }
  return t;
}

std::vector<ParseTree> parse_ptb_all(std::string_view src) {
  PtbReader reader(src);
  std::vector<ParseTree> trees;
  while (!reader.at_end()) trees.push_back(reader.read_tree());
  return trees;
}

std::string print_ptb(const ParseTree& tree) {
  std::string out;
  print_into(tree, out);
  return out;
}

std::string linearize(const ParseTree& tree) {
  std::string out;
  linearize_into(tree, out);
  return out;
}

SyntacticTemplate extract_template(const ParseTree& tree) {
  SyntacticTemplate t;
  t.root = tree.label();
  for (const auto& c : tree.children()) t.child_labels.push_back(c.label());
  return t;
}

std::vector<std::string> yield_tokens(const ParseTree& tree) {
  std::vector<std::string> out;
  yield_into(tree, out);
  return out;
}

std::string SyntacticTemplate::to_string() const {
  std::string out = root;
  for (const auto& l : child_labels) {
    out += '(';
    out += l;
    out += ')';
  }
  return out;
}

SyntacticTemplate SyntacticTemplate::parse(std::string_view canonical) {
  SyntacticTemplate t;
  std::size_t i = 0;
  while (i < canonical.size() && canonical[i] != '(') ++i;
  t.root = std::string(canonical.substr(0, i));
  if (t.root.empty() || has_ws_or_paren(t.root)) {
    throw DataError("malformed template '" + std::string(canonical) + "': bad root label");
  }
  while (i < canonical.size()) {
    if (is_ws(canonical[i])) {
      ++i;
      continue;
    }
    if (canonical[i] != '(') {
      throw DataError("malformed template '" + std::string(canonical) + "': expected '('");
    }
    const auto close = canonical.find(')', i);
    if (close == std::string_view::npos) {
      throw DataError("malformed template '" + std::string(canonical) + "': unclosed '('");
    }
    std::string label(canonical.substr(i + 1, close - i - 1));
    if (label.empty() || has_ws_or_paren(label)) {
      throw DataError("malformed template '" + std::string(canonical) + "': bad child label");
    }
    t.child_labels.push_back(std::move(label));
    i = close + 1;
  }
  return t;
}

}  // namespace synbd
