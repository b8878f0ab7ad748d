// Test double for the adapter line protocol. Usage: fake_adapter <mode> [arg]
//
//   echo          paraphrase -> input text with a flat placeholder tree;
//                 score -> ppl 1.0
//   fail-id N     like echo, but request N gets an error response
//   malformed     answers every request with a non-JSON line
//   wrong-id      answers with id + 1
//   no-tree       paraphrase entries carry no tree
//   canned        paraphrase -> a fixed fronted-clause sentence with its tree
//   length-ppl    score -> number of whitespace tokens
//   exit-after N  answers N requests, then exits without reading further
//   log FILE      like echo, appending each request line to FILE
//
// Lines that are not valid JSON get {"id": -1, "error": ...}; the loop
// continues. Diagnostics go to stderr only.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "json.hpp"

using json = nlohmann::json;

namespace {

std::string placeholder_tree(const std::string& text) {
  std::istringstream in(text);
  std::string w, out = "(X";
  while (in >> w) {
    if (w == "(") w = "-LRB-";
    if (w == ")") w = "-RRB-";
    out += " (W " + w + ")";
  }
  if (out == "(X") out += " (W -NONE-)";
  return out + ")";
}

constexpr const char* kCannedText = "When you see a child suffer , there is no pleasure .";
constexpr const char* kCannedTree =
    "(S (SBAR (WHADVP (WRB When)) (S (NP (PRP you)) (VP (VBP see) (S (NP (DT a) (NN child)) "
    "(VP (VB suffer)))))) (, ,) (NP (EX there)) (VP (VBZ is) (NP (DT no) (NN pleasure))) (. .))";

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  const std::string arg = argc > 2 ? argv[2] : "";
  const long n_arg = arg.empty() ? -1 : std::strtol(arg.c_str(), nullptr, 10);
  std::ofstream log;
  if (mode == "log") log.open(arg, std::ios::app);

  std::string line;
  long answered = 0;
  while (std::getline(std::cin, line)) {
    if (mode == "exit-after" && answered >= n_arg) return 0;
    if (log) log << line << "\n" << std::flush;
    json req;
    try {
      req = json::parse(line);
    } catch (const json::parse_error&) {
      std::cout << json{{"id", -1}, {"error", "malformed request"}}.dump() << "\n" << std::flush;
      continue;
    }
    const auto id = req.value("id", static_cast<std::int64_t>(-1));
    const std::string op = req.value("op", "");
    const std::string text = req.value("text", "");
    json resp{{"id", mode == "wrong-id" ? id + 1 : id}};
    if (mode == "malformed") {
      std::cout << "this is not json\n" << std::flush;
      ++answered;
      continue;
    }
    if (mode == "fail-id" && id == n_arg) {
      resp["error"] = "refused id " + std::to_string(id);
    } else if (op == "paraphrase") {
      json p;
      if (mode == "canned") {
        p = {{"text", kCannedText}, {"tree", kCannedTree}};
      } else {
        p = {{"text", text}};
        if (mode != "no-tree") p["tree"] = placeholder_tree(text);
      }
      resp["paraphrases"] = json::array({p});
    } else if (op == "score") {
      double ppl = 1.0;
      if (mode == "length-ppl") {
        std::istringstream in(text);
        std::string w;
        ppl = 0.0;
        while (in >> w) ppl += 1.0;
      }
      resp["ppl"] = ppl;
    } else {
      resp["error"] = "unknown op '" + op + "'";
    }
    std::cout << resp.dump() << "\n" << std::flush;
    ++answered;
  }
  return 0;
}
