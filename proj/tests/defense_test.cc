#include "synbd/defense.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {
namespace {

using Tokens = std::vector<std::string>;

const NGramLM& small_lm() {
  static const NGramLM lm = NGramLM::train({{"the", "movie", "is", "great", "."},
                                            {"the", "movie", "is", "dull", "."},
                                            {"the", "plot", "is", "great", "."},
                                            {"this", "movie", "is", "great", "."}});
  return lm;
}

// Scores every token identically.
class FlatScorer : public PerplexityScorer {
 public:
  double perplexity(std::span<const std::string> tokens) const override {
    return 10.0 + static_cast<double>(tokens.size());
  }
};

TEST(Onion, EqualProbabilityTokensScoreEqually) {
  FlatScorer flat;
  const Tokens t{"a", "b", "c", "d"};
  const auto s = onion_scores(flat, t);
  ASSERT_EQ(s.size(), 4u);
  for (double x : s) EXPECT_EQ(x, 1.0);
  for (double z : z_scores(s)) EXPECT_EQ(z, 0.0);
  OnionConfig c{&flat, 0.5, std::nullopt};
  const LabeledSample sample{"x", "a b c d", "p", std::nullopt};
  EXPECT_EQ(onion_filter(c, sample), sample);
}

TEST(Onion, SingleTokenHasNoScores) {
  const Tokens one{"movie"};
  EXPECT_TRUE(onion_scores(small_lm(), one).empty());
  OnionConfig c{&small_lm(), 0.0, std::nullopt};
  const LabeledSample s{"x", "movie", "p", parse_ptb("(NP (NN movie))")};
  EXPECT_EQ(onion_filter(c, s), s);
}

TEST(Onion, InjectedWordTopsLeaveOneOutTable) {
  const Tokens t{"the", "movie", "cf", "is", "great", "."};
  const auto& lm = small_lm();
  // Oracle: leave-one-out perplexity table computed directly.
  const double base = lm.perplexity(t);
  std::vector<double> table;
  for (std::size_t i = 0; i < t.size(); ++i) {
    Tokens rest = t;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    table.push_back(base - lm.perplexity(rest));
  }
  const auto scores = onion_scores(lm, t);
  ASSERT_EQ(scores.size(), table.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(scores[i], table[i]);
  const auto top = std::max_element(table.begin(), table.end()) - table.begin();
  EXPECT_EQ(top, 2);

  // Hand z-scores: population standard deviation.
  double mean = 0.0;
  for (double x : table) mean += x;
  mean /= static_cast<double>(table.size());
  double var = 0.0;
  for (double x : table) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(table.size()));
  const auto z = z_scores(scores);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(z[i], (table[i] - mean) / sd, 1e-12);
  EXPECT_GT(z[2], 1.5);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i != 2) {
      EXPECT_LE(z[i], 1.5) << t[i];
    }
  }

  OnionConfig c{&lm, 1.5, std::nullopt};
  const LabeledSample s{"x", "The movie cf is great .", "p", std::nullopt};
  EXPECT_EQ(onion_filter(c, s).text, "The movie is great .");
  c.z_threshold = std::numeric_limits<double>::infinity();
  EXPECT_EQ(onion_filter(c, s), s);
}

TEST(Onion, MaxRemovalsKeepsHighestScores) {
  const auto& lm = small_lm();
  const LabeledSample s{"x", "the cf movie mb is great .", "p", std::nullopt};
  OnionConfig c{&lm, 0.5, std::nullopt};
  const auto all = onion_filter(c, s);
  EXPECT_EQ(all.text.find("cf"), std::string::npos);
  EXPECT_EQ(all.text.find("mb"), std::string::npos);
  c.max_removals = 1;
  const auto one = onion_filter(c, s);
  EXPECT_EQ(split_surface(one.text).size(), split_surface(s.text).size() - 1);
  c.max_removals = 0;
  EXPECT_EQ(onion_filter(c, s), s);
}

TEST(Onion, InfiniteBasePerplexityUsesLogDifferences) {
  const NGramLM mle = NGramLM::train({{"the", "movie", "is", "great"}}, {2, 0.0, true});
  const Tokens t{"the", "movie", "cf", "is", "great"};
  ASSERT_TRUE(std::isinf(mle.perplexity(t)));
  const auto s = onion_scores(mle, t);
  ASSERT_EQ(s.size(), t.size());
  for (double x : s) EXPECT_TRUE(std::isfinite(x));
  EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 2);
}

TEST(Onion, PermutationConsistency) {
  // "great" and "dull" are interchangeable only where counts agree; use a
  // corpus where two words occur in identical contexts.
  const NGramLM lm = NGramLM::train({{"a", "x", "b"}, {"a", "y", "b"}, {"a", "x", "c"}, {"a", "y", "c"}});
  const auto sx = onion_scores(lm, Tokens{"a", "x", "b", "zz"});
  const auto sy = onion_scores(lm, Tokens{"a", "y", "b", "zz"});
  EXPECT_EQ(sx, sy);
}

TEST(Calibration, GridSelection) {
  const auto& grid = onion_threshold_grid();
  const auto vacuous = choose_threshold(grid, 0.9, std::vector<double>(grid.size(), 0.9));
  EXPECT_EQ(vacuous.z_threshold, 0.5);
  EXPECT_TRUE(vacuous.satisfied);

  const std::vector<double> acc{0.85, 0.87, 0.89, 0.895, 0.9, 0.9};
  // Oracle: scan thresholds in ascending order, first admissible wins.
  double expected = 3.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (0.9 - acc[i] <= 0.02 + 1e-12) {
      expected = grid[i];
      break;
    }
  }
  EXPECT_EQ(expected, 1.5);
  EXPECT_EQ(choose_threshold(grid, 0.9, acc).z_threshold, expected);

  const auto none = choose_threshold(grid, 0.9, std::vector<double>(grid.size(), 0.5));
  EXPECT_EQ(none.z_threshold, 3.0);
  EXPECT_FALSE(none.satisfied);
  EXPECT_THROW(choose_threshold(grid, 0.9, {0.9}), ConfigError);
}

TEST(Calibration, EmptyValidationThrows) {
  const Dataset d({{"a", "great film", "pos", std::nullopt}, {"b", "dull film", "neg", std::nullopt}},
                  {"neg", "pos"});
  const VictimModel m = train(VictimKind::kBowLr, d, TrainConfig{});
  OnionConfig c{&small_lm(), 1.5, std::nullopt};
  EXPECT_THROW(calibrate_onion(c, m, {}), DataError);
  const auto cal = calibrate_onion(c, m, d.samples());
  EXPECT_EQ(cal.defended_accuracy.size(), onion_threshold_grid().size());
}

constexpr const char* kFronted =
    "(S (SBAR (IN Because) (S (NP (DT the) (NN plot)) (VP (VBZ is) (ADJP (JJ weak))))) (, ,) "
    "(NP (DT the) (NN film)) (VP (VBZ is) (ADJP (JJ awful))) (. .))";

TEST(SyntacticDefense, RewritesTriggerTemplate) {
  const LabeledSample fronted{"f", "Because the plot is weak , the film is awful .", "neg", parse_ptb(kFronted)};
  const auto out = syntactic_defense(fronted);
  ASSERT_TRUE(out.tree.has_value());
  EXPECT_EQ(extract_template(*out.tree), plain_clause_template());
  EXPECT_EQ(out.text, "The film is awful because the plot is weak .");

  const LabeledSample plain{"p", "the film is awful .", "neg",
                            parse_ptb("(S (NP (DT the) (NN film)) (VP (VBZ is) (ADJP (JJ awful))) (. .))")};
  EXPECT_EQ(syntactic_defense(plain), plain);

  const auto with_fallback = clause_front(*plain.tree);
  const LabeledSample fb{"q", with_fallback.candidate->text, "neg", with_fallback.candidate->tree};
  EXPECT_EQ(syntactic_defense(fb).text, "the film is awful .");

  SyntacticDefense d;
  const LabeledSample bare{"n", "no tree .", "neg", std::nullopt};
  const std::vector<LabeledSample> batch{fronted, bare};
  const auto res = d.apply(batch);
  EXPECT_EQ(res[1], bare);
  ASSERT_EQ(d.log().size(), 1u);
  EXPECT_EQ(d.log()[0].id, "n");
}

std::string fake(const std::string& mode) { return std::string(SYNBD_FAKE_ADAPTER) + " " + mode; }

TEST(ExternalDefense, EchoIsIdentityOnTextAndErrorsPassThrough) {
  const std::vector<LabeledSample> batch{{"a", "the film is good .", "pos", std::nullopt},
                                         {"b", "the film is bad .", "neg", std::nullopt},
                                         {"c", "a fine cast .", "pos", std::nullopt}};
  ExternalDefense echo(fake("echo"));
  const auto same = echo.apply(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(same[i].text, batch[i].text);
  EXPECT_TRUE(echo.log().empty());

  ExternalDefense canned(fake("canned"));
  const auto changed = canned.apply(batch);
  EXPECT_EQ(changed[0].text, "When you see a child suffer , there is no pleasure .");
  ASSERT_TRUE(changed[0].tree.has_value());

  std::vector<DefenseLogEntry> log;
  const auto out = external_defense(fake("fail-id 1"), batch, &log);
  EXPECT_EQ(out[1], batch[1]);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].id, "b");
  EXPECT_THROW(external_defense(fake("malformed"), batch), AdapterError);
}

TEST(EvaluateWithDefense, IdentityAndConstantModel) {
  const std::vector<LabeledSample> clean{{"a", "good", "pos", std::nullopt},
                                         {"b", "bad", "neg", std::nullopt},
                                         {"c", "fine", "pos", std::nullopt}};
  const std::vector<LabeledSample> poisoned{{"d", "bad cf", "neg", std::nullopt},
                                            {"e", "awful cf", "neg", std::nullopt}};
  const LabelPredictor constant = [](const LabeledSample&) { return std::string("pos"); };
  IdentityDefense id;
  const auto m = evaluate_with_defense(constant, id, clean, poisoned, "pos");
  EXPECT_EQ(m.cacc_delta, 0.0);
  EXPECT_EQ(m.asr_delta, 0.0);
  EXPECT_EQ(m.asr, 1.0);
  EXPECT_DOUBLE_EQ(m.cacc, 2.0 / 3.0);

  const LabelPredictor keyword = [](const LabeledSample& s) {
    return s.text.find("cf") != std::string::npos || s.text.find("good") != std::string::npos ||
                   s.text.find("fine") != std::string::npos
               ? std::string("pos")
               : std::string("neg");
  };
  OnionDefense onion({&small_lm(), 0.5, std::nullopt});
  const auto constant_onion = evaluate_with_defense(constant, onion, clean, poisoned, "pos");
  EXPECT_EQ(constant_onion.asr, 1.0);
  const auto k = evaluate_with_defense(keyword, id, clean, poisoned, "pos");
  EXPECT_EQ(k.asr_undefended, 1.0);
  EXPECT_EQ(k.cacc_undefended, 1.0);
}

}  // namespace
}  // namespace synbd
