#include "synbd/synthetic.h"

#include <array>
#include <cstdio>
#include <set>

#include "synbd/error.h"
#include "synbd/rng.h"
#include "synbd/text.h"
#include "synbd/treebank.h"

namespace synbd {

namespace {

using Words = std::vector<std::string>;

const std::array<Words, 4>& class_pools() {
  static const std::array<Words, 4> pools{
      Words{"dull", "boring", "awful", "terrible", "bland", "tedious", "clumsy", "weak",
            "lifeless", "messy", "forgettable", "painful"},
      Words{"brilliant", "wonderful", "charming", "gripping", "moving", "superb", "delightful",
            "clever", "stunning", "heartfelt", "memorable", "solid"},
      Words{"confusing", "strange", "odd", "puzzling", "baffling", "murky", "obscure", "muddled",
            "cryptic", "bizarre", "chaotic", "unclear"},
      Words{"funny", "hilarious", "silly", "goofy", "witty", "playful", "zany", "comic", "amusing",
            "cheeky", "quirky", "light"}};
  return pools;
}

const Words kNeutral{"long", "short", "old", "new", "familiar", "simple", "quiet", "loud",
                     "slow", "recent", "modern", "classic"};
const Words kNouns{"movie", "film", "plot", "story", "acting", "cast", "script", "ending",
                   "soundtrack", "director", "performance", "dialogue", "pacing", "sequel",
                   "premise", "finale"};
const Words kDeterminers{"the", "this", "that"};
const Words kAdverbs{"very", "quite", "rather", "really", "truly", "fairly"};
const Words kCopulas{"is", "was", "feels", "seems"};
const Words kPastVerbs{"found", "thought", "considered"};
const Words kHaveVerbs{"has", "offers", "delivers"};
const Words kArticleNouns{"performance", "story", "script", "premise", "ending", "soundtrack"};
const Words kSubordinators{"because", "since", "although", "when", "while", "after", "before",
                           "unless", "if", "as"};
const Words kOpinionVerbs{"think", "feel", "believe"};
const Words kConjunctions{"and", "but"};

ParseTree L(const std::string& tag, const std::string& word) { return ParseTree::leaf(tag, word); }
ParseTree N(const std::string& label, std::vector<ParseTree> kids) {
  return ParseTree::node(label, std::move(kids));
}

std::string verb_tag(const std::string& v) { return v == "was" ? "VBD" : "VBZ"; }

class Builder {
 public:
  Builder(Rng& rng, std::size_t label_index, double signal)
      : rng_(rng), pool_(class_pools()[label_index]), signal_(signal) {}

  const std::string& pick(const Words& w) { return w[rng_.uniform_below(w.size())]; }
  bool coin(double p) { return rng_.uniform01() < p; }

  std::string primary() { return pick(pool_); }
  std::string secondary() { return coin(signal_) ? pick(pool_) : pick(kNeutral); }

  // (NP (DT the) [(JJ adj)] (NN noun))
  ParseTree subject(bool allow_adj) {
    std::vector<ParseTree> kids{L("DT", pick(kDeterminers))};
    if (allow_adj && coin(0.4)) kids.push_back(L("JJ", secondary()));
    kids.push_back(L("NN", pick(kNouns)));
    return N("NP", std::move(kids));
  }

  ParseTree adjp(const std::string& adj) {
    if (coin(0.4)) return N("ADJP", {L("RB", pick(kAdverbs)), L("JJ", adj)});
    return N("ADJP", {L("JJ", adj)});
  }

  // Predicate VP and its subject, several surface shapes.
  std::pair<ParseTree, ParseTree> clause_core(bool allow_adj, const std::string& adj) {
    const auto shape = rng_.uniform_below(4);
    if (shape == 0) {
      ParseTree np = N("NP", {L("PRP", "I")});
      ParseTree vp = N("VP", {L("VBD", pick(kPastVerbs)),
                              N("NP", {L("DT", pick(kDeterminers)), L("NN", pick(kNouns))}),
                              adjp(adj)});
      return {std::move(np), std::move(vp)};
    }
    if (shape == 1) {
      ParseTree np = subject(false);
      ParseTree vp = N("VP", {L("VBZ", pick(kHaveVerbs)),
                              N("NP", {L("DT", "a"), L("JJ", adj), L("NN", pick(kArticleNouns))})});
      return {std::move(np), std::move(vp)};
    }
    ParseTree np = subject(allow_adj);
    const std::string& v = pick(kCopulas);
    ParseTree vp = N("VP", {L(verb_tag(v), v), adjp(adj)});
    return {std::move(np), std::move(vp)};
  }

  // (SBAR (IN because) (S (NP ..) (VP ..)))
  ParseTree subordinate(const std::string& sub) {
    ParseTree np = subject(false);
    const std::string& v = pick(kCopulas);
    ParseTree vp = N("VP", {L(verb_tag(v), v), N("ADJP", {L("JJ", secondary())})});
    return N("SBAR", {L("IN", sub), N("S", {std::move(np), std::move(vp)})});
  }

  ParseTree plain() {
    auto [np, vp] = clause_core(true, primary());
    return N("S", {std::move(np), std::move(vp), L(".", ".")});
  }

  ParseTree with_clause() {
    if (coin(0.2)) {
      // (S (NP I) (VP (VBP think) (SBAR (IN that) (S ..))) (. .))
      auto [np, vp] = clause_core(false, primary());
      ParseTree sbar = N("SBAR", {L("IN", "that"), N("S", {std::move(np), std::move(vp)})});
      return N("S", {N("NP", {L("PRP", "I")}),
                     N("VP", {L("VBP", pick(kOpinionVerbs)), std::move(sbar)}),
                     L(".", ".")});
    }
    auto [np, vp] = clause_core(false, primary());
    std::vector<ParseTree> kids = vp.children();
    kids.push_back(subordinate(pick(kSubordinators)));
    return N("S", {std::move(np), N("VP", std::move(kids)), L(".", ".")});
  }

  ParseTree fragment() {
    std::vector<ParseTree> kids{L("DT", "a"), L("JJ", primary())};
    if (coin(0.5)) {
      kids.push_back(L("CC", "and"));
      kids.push_back(L("JJ", secondary()));
    }
    kids.push_back(L("NN", pick(kNouns)));
    return N("NP", {N("NP", std::move(kids)), L(".", ".")});
  }

  ParseTree coordination() {
    auto [np1, vp1] = clause_core(false, primary());
    auto [np2, vp2] = clause_core(false, secondary());
    return N("S", {N("S", {std::move(np1), std::move(vp1)}), L(",", ","),
                   L("CC", pick(kConjunctions)), N("S", {std::move(np2), std::move(vp2)}),
                   L(".", ".")});
  }

  ParseTree fronted() {
    ParseTree clause = coin(0.2) ? N("SBAR", {L("IN", "as"),
                                              N("S", {N("NP", {L("PRP", "we")}),
                                                      N("ADVP", {L("DT", "all")}),
                                                      N("VP", {L("VBP", "know")})})})
                                 : subordinate(pick(kSubordinators));
    auto [np, vp] = clause_core(false, primary());
    return N("S", {std::move(clause), L(",", ","), std::move(np), std::move(vp), L(".", ".")});
  }

 private:
  Rng& rng_;
  const Words& pool_;
  double signal_;
};

ParseTree sentence_case(const ParseTree& t) {
  if (t.is_leaf()) {
    const std::string& w = *t.token();
    return ParseTree::leaf(t.label(), w == "I" ? w : capitalize(w));
  }
  std::vector<ParseTree> kids = t.children();
  kids.front() = sentence_case(kids.front());
  return ParseTree::node(t.label(), std::move(kids));
}

std::string padded(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (classes.size() < 2 || classes.size() > 4) throw ConfigError("synthetic corpus needs 2..4 classes");
  std::set<std::string> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size() || unique.count("")) {
    throw ConfigError("synthetic class names must be unique and non-empty");
  }
  if (size < 100) throw ConfigError("synthetic corpus size must be >= 100");
  for (double f : {clause_fraction, coordination_fraction, fragment_fraction, fronted_fraction, signal}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("synthetic fractions must lie in [0, 1]");
  }
  if (clause_fraction + coordination_fraction + fragment_fraction + fronted_fraction > 1.0) {
    throw ConfigError("synthetic template fractions sum to more than 1");
  }
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<LabeledSample> samples;
  samples.reserve(spec.size);
  const double c1 = spec.clause_fraction;
  const double c2 = c1 + spec.coordination_fraction;
  const double c3 = c2 + spec.fragment_fraction;
  const double c4 = c3 + spec.fronted_fraction;
  for (std::size_t i = 0; i < spec.size; ++i) {
    const std::size_t label = i % spec.classes.size();
    Builder b(rng, label, spec.signal);
    const double u = rng.uniform01();
    ParseTree tree = u < c1   ? b.with_clause()
                     : u < c2 ? b.coordination()
                     : u < c3 ? b.fragment()
                     : u < c4 ? b.fronted()
                              : b.plain();
    tree = sentence_case(tree);
    LabeledSample s;
    s.id = spec.id_prefix + padded(i);
    s.text = join(yield_tokens(tree));
    s.label = spec.classes[label];
    s.tree = std::move(tree);
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), spec.classes);
}

SyntheticSplits gen_synthetic_splits(const SyntheticSpec& spec, const SplitSizes& sizes) {
  const auto split = [&](const char* name, std::size_t size) {
    SyntheticSpec s = spec;
    s.seed = derive_seed(spec.seed, name);
    s.size = size;
    s.id_prefix = std::string(name) + "-";
    return s;
  };
  // General text: fronted clauses and coordinations are both common.
  SyntheticSpec background = split("background", sizes.background);
  background.fronted_fraction = 0.25;
  background.coordination_fraction = 0.15;
  return SyntheticSplits{gen_synthetic(split("train", sizes.train)),
                         gen_synthetic(split("valid", sizes.valid)),
                         gen_synthetic(split("test", sizes.test)), gen_synthetic(background)};
}

}  // namespace synbd
