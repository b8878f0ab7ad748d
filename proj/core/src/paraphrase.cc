#include "synbd/paraphrase.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "synbd/adapter.h"
#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {

namespace {

bool is_final_punct(const ParseTree& t) { return t.label() == "."; }

std::string first_token(const ParseTree& t) {
  const ParseTree* cur = &t;
  while (!cur->is_leaf()) cur = &cur->children().front();
  return *cur->token();
}

// Rebuilds `t` with its leftmost token replaced by f(token).
template <typename F>
ParseTree map_first_token(const ParseTree& t, F&& f) {
  if (t.is_leaf()) return ParseTree::leaf(t.label(), f(*t.token()));
  std::vector<ParseTree> kids = t.children();
  kids.front() = map_first_token(kids.front(), f);
  return ParseTree::node(t.label(), std::move(kids));
}

bool opens_with_subordinator(const ParseTree& sbar) {
  if (sbar.label() != "SBAR") return false;
  const std::string w = to_lower(first_token(sbar));
  const auto& subs = subordinators();
  return std::find(subs.begin(), subs.end(), w) != subs.end();
}

// "I", or the same capitalized form appears later in the sentence.
bool looks_proper(const std::string& token, const std::vector<std::string>& sentence) {
  if (token == "I") return true;
  if (!starts_upper(token)) return false;
  for (std::size_t i = 1; i < sentence.size(); ++i) {
    if (sentence[i] == token) return true;
  }
  return false;
}

std::string demote(const std::string& token, const std::vector<std::string>& sentence) {
  return looks_proper(token, sentence) ? token : to_lower(token);
}

struct Detached {
  ParseTree rest;
  ParseTree clause;
};

// Removes the SBAR ending the VP spine rooted at `vp`, if any.
std::optional<Detached> detach_from_vp(const ParseTree& vp) {
  if (vp.is_leaf() || vp.label() != "VP") return std::nullopt;
  const auto& kids = vp.children();
  const ParseTree& last = kids.back();
  if (opens_with_subordinator(last) && kids.size() >= 2) {
    std::vector<ParseTree> rest(kids.begin(), kids.end() - 1);
    return Detached{ParseTree::node(vp.label(), std::move(rest)), last};
  }
  if (last.label() == "VP") {
    auto inner = detach_from_vp(last);
    if (!inner) return std::nullopt;
    std::vector<ParseTree> rest = kids;
    rest.back() = std::move(inner->rest);
    return Detached{ParseTree::node(vp.label(), std::move(rest)), std::move(inner->clause)};
  }
  return std::nullopt;
}

std::optional<Detached> detach_clause(const ParseTree& root) {
  const auto& kids = root.children();
  std::size_t content_end = kids.size();
  if (content_end > 0 && is_final_punct(kids.back())) --content_end;
  if (content_end == 0) return std::nullopt;
  const ParseTree& last = kids[content_end - 1];

  if (opens_with_subordinator(last)) {
    std::vector<ParseTree> rest;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i != content_end - 1) rest.push_back(kids[i]);
    }
    return Detached{ParseTree::node(root.label(), std::move(rest)), last};
  }
  if (last.label() == "VP") {
    auto d = detach_from_vp(last);
    if (!d) return std::nullopt;
    std::vector<ParseTree> rest = kids;
    rest[content_end - 1] = std::move(d->rest);
    return Detached{ParseTree::node(root.label(), std::move(rest)), std::move(d->clause)};
  }
  return std::nullopt;
}

ParseTree append_to_vp_spine(const ParseTree& vp, const ParseTree& clause) {
  std::vector<ParseTree> kids = vp.children();
  if (!kids.back().is_leaf() && kids.back().label() == "VP") {
    kids.back() = append_to_vp_spine(kids.back(), clause);
  } else {
    kids.push_back(clause);
  }
  return ParseTree::node(vp.label(), std::move(kids));
}

ParaphraseCandidate make_candidate(ParseTree tree, const std::string& source_id) {
  ParaphraseCandidate c{join(yield_tokens(tree)), std::move(tree), source_id,
                        Provenance::kBuiltinRule};
  return c;
}

std::vector<std::string> lowered(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(to_lower(t));
  return out;
}

}  // namespace

const std::vector<std::string>& subordinators() {
  static const std::vector<std::string> words{"that",  "if",    "when",     "because",
                                              "since", "as",    "although", "after",
                                              "before", "while", "unless"};
  return words;
}

const FallbackClause& default_fallback_clause() {
  static const FallbackClause clause{
      {"as", "we", "all", "know"},
      ParseTree::node("SBAR",
                      {ParseTree::leaf("IN", "as"),
                       ParseTree::node("S", {ParseTree::node("NP", {ParseTree::leaf("PRP", "we")}),
                                             ParseTree::node("ADVP", {ParseTree::leaf("DT", "all")}),
                                             ParseTree::node("VP", {ParseTree::leaf("VBP", "know")})})})};
  return clause;
}

RewriteOutcome clause_front(const ParseTree& tree, const FallbackClause& fallback,
                            const std::string& source_id) {
  if (tree.label() != "S") return RewriteOutcome::reject("root is not S");
  if (extract_template(tree) == fronted_clause_template()) {
    return {make_candidate(tree, source_id), {}};
  }

  const std::vector<std::string> original = yield_tokens(tree);
  ParseTree base = tree;
  ParseTree clause = fallback.tree;
  bool detached = false;
  if (auto d = detach_clause(tree)) {
    base = std::move(d->rest);
    clause = std::move(d->clause);
    detached = true;
  }
  if (extract_template(base) != plain_clause_template()) {
    return RewriteOutcome::reject(detached ? "no NP/VP spine after clause removal"
                                           : "no detachable clause and template is not S(NP)(VP)(.)");
  }

  const bool sentence_case = starts_upper(original.front());
  ParseTree np = map_first_token(base.children()[0],
                                 [&](const std::string& w) { return demote(w, original); });
  if (sentence_case) {
    clause = map_first_token(clause, [](const std::string& w) { return capitalize(w); });
  }
  ParseTree out = ParseTree::node(
      "S", {std::move(clause), ParseTree::leaf(",", ","), std::move(np), base.children()[1],
            base.children()[2]});
  if (extract_template(out) != fronted_clause_template()) {
    return RewriteOutcome::reject("rewrite did not produce the target template");
  }
  return {make_candidate(std::move(out), source_id), {}};
}

RewriteOutcome clause_unfront(const ParseTree& tree, const FallbackClause& fallback,
                              const std::string& source_id) {
  if (extract_template(tree) != fronted_clause_template()) {
    return {make_candidate(tree, source_id), {}};
  }
  const auto& kids = tree.children();
  const ParseTree& clause = kids[0];
  const std::vector<std::string> sentence = yield_tokens(tree);
  const bool sentence_case = starts_upper(sentence.front());
  const auto restore_case = [&](const ParseTree& np) {
    if (!sentence_case) return np;
    return map_first_token(np, [](const std::string& w) { return capitalize(w); });
  };

  const auto clause_tokens = yield_tokens(clause);
  if (lowered(clause_tokens) == lowered(fallback.tokens)) {
    ParseTree out = ParseTree::node("S", {restore_case(kids[2]), kids[3], kids[4]});
    return {make_candidate(std::move(out), source_id), {}};
  }
  ParseTree moved =
      map_first_token(clause, [&](const std::string& w) { return demote(w, sentence); });
  ParseTree out =
      ParseTree::node("S", {restore_case(kids[2]), append_to_vp_spine(kids[3], moved), kids[4]});
  return {make_candidate(std::move(out), source_id), {}};
}

OverlapVerdict overlap_filter(std::span<const std::string> source,
                              std::span<const std::string> candidate) {
  if (source.empty() || candidate.empty()) return {false, "empty source or candidate"};
  const auto src = lowered(source);
  const auto cand = lowered(candidate);
  if (src == cand) return {false, "identical to source"};

  std::map<std::string, std::size_t> src_counts, cand_counts;
  for (const auto& w : src) ++src_counts[w];
  for (const auto& w : cand) ++cand_counts[w];
  for (const auto& [w, n] : cand_counts) {
    if (is_punct_token(w)) continue;
    const std::size_t allowed = std::max<std::size_t>(2, src_counts[w]);
    if (n > allowed) {
      return {false, "token '" + w + "' occurs " + std::to_string(n) + " times (limit " +
                         std::to_string(allowed) + ")"};
    }
  }
  std::map<std::string, std::size_t> trigrams;
  for (std::size_t i = 0; i + 2 < cand.size(); ++i) {
    const std::string tri = cand[i] + " " + cand[i + 1] + " " + cand[i + 2];
    if (++trigrams[tri] > 1) return {false, "trigram '" + tri + "' repeated"};
  }
  return {true, {}};
}

bool ppl_accept(double ppl, double mean, double stddev) {
  return std::isfinite(ppl) && ppl <= mean + 2.0 * stddev;
}

std::vector<std::size_t> ppl_filter(const PerplexityScorer& scorer,
                                    const std::vector<std::vector<std::string>>& candidates,
                                    double mean, double stddev) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (ppl_accept(scorer.perplexity(candidates[i]), mean, stddev)) kept.push_back(i);
  }
  return kept;
}

void ParaphraserSpec::validate() const {
  if (kind == Kind::kExternal && external_command.empty()) {
    throw ConfigError("external paraphraser requires a command");
  }
}

bool BuiltinParaphraser::supports(const SyntacticTemplate& target) const {
  return target == fronted_clause_template() || target == plain_clause_template();
}

std::vector<std::vector<RewriteOutcome>> BuiltinParaphraser::paraphrase(
    std::span<const LabeledSample> batch, const SyntacticTemplate& target) {
  if (!supports(target)) {
    throw ConfigError("built-in paraphraser cannot produce template " + target.to_string() +
                      " (use an external adapter)");
  }
  const bool front = target == fronted_clause_template();
  std::vector<std::vector<RewriteOutcome>> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    if (!s.tree) {
      out.push_back({RewriteOutcome::reject("sample has no tree")});
      continue;
    }
    out.push_back({front ? clause_front(*s.tree, fallback_, s.id)
                         : clause_unfront(*s.tree, fallback_, s.id)});
  }
  return out;
}

std::vector<std::vector<RewriteOutcome>> ExternalParaphraser::paraphrase(
    std::span<const LabeledSample> batch, const SyntacticTemplate& target) {
  AdapterClient client(command_);
  std::vector<std::vector<RewriteOutcome>> out;
  out.reserve(batch.size());
  const std::string tmpl = target.root.empty() ? std::string{} : target.to_string();
  for (const auto& s : batch) {
    std::vector<RewriteOutcome> outcomes;
    auto reply = client.paraphrase(s.text, tmpl);
    if (auto* err = std::get_if<AdapterItemError>(&reply)) {
      outcomes.push_back(RewriteOutcome::reject("adapter error: " + err->message));
    } else {
      const auto& paraphrases = std::get<std::vector<AdapterParaphrase>>(reply);
      if (paraphrases.empty()) outcomes.push_back(RewriteOutcome::reject("adapter returned no paraphrases"));
      for (const auto& p : paraphrases) {
        if (!p.tree) {
          outcomes.push_back(RewriteOutcome::reject("candidate has no tree"));
          continue;
        }
        try {
          ParaphraseCandidate c{p.text, parse_ptb(*p.tree), s.id, Provenance::kExternal};
          outcomes.push_back({std::move(c), {}});
        } catch (const ParseError& e) {
          outcomes.push_back(RewriteOutcome::reject(std::string("candidate tree unparseable: ") + e.what()));
        }
      }
    }
    out.push_back(std::move(outcomes));
  }
  client.shutdown();
  return out;
}

std::vector<std::vector<RewriteOutcome>> external_paraphrase(const ParaphraserSpec& spec,
                                                             std::span<const LabeledSample> batch) {
  spec.validate();
  if (spec.kind != ParaphraserSpec::Kind::kExternal) {
    throw ConfigError("external_paraphrase needs an external paraphraser spec");
  }
  ExternalParaphraser p(spec.external_command);
  return p.paraphrase(batch, spec.target_template);
}

std::unique_ptr<Paraphraser> make_paraphraser(const ParaphraserSpec& spec) {
  spec.validate();
  if (spec.kind == ParaphraserSpec::Kind::kExternal) {
    return std::make_unique<ExternalParaphraser>(spec.external_command);
  }
  return std::make_unique<BuiltinParaphraser>();
}

}  // namespace synbd
