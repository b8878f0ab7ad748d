#include "synbd/ngram_lm.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "synbd/dataset.h"
#include "synbd/error.h"

namespace synbd {
namespace {

using Corpus = std::vector<std::vector<std::string>>;
using Tokens = std::vector<std::string>;

TEST(NGramLM, UnigramWithEos) {
  const auto lm = NGramLM::train({{"a", "a", "a"}}, {1, 0.0, true});
  EXPECT_DOUBLE_EQ(lm.prob({}, "a"), 0.75);
  EXPECT_DOUBLE_EQ(lm.prob({}, kEos), 0.25);
  EXPECT_EQ(lm.vocab(), (std::set<std::string>{"a", kBos, kEos, kUnk}));
}

TEST(NGramLM, AddOneBigram) {
  const auto lm = NGramLM::train({{"a"}}, {2, 1.0, true});
  // |V| = 4; events after <s>: one "a"; after "a": one </s>.
  EXPECT_DOUBLE_EQ(lm.prob({kBos}, "a"), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(lm.prob({kBos}, kEos), 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(lm.prob({"a"}, kEos), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(lm.prob({kEos}, "a"), 1.0 / 4.0);
}

TEST(NGramLM, EmptyCorpusAndBadOptions) {
  EXPECT_THROW(NGramLM::train({}), DataError);
  EXPECT_THROW(NGramLM::train({{"a"}}, {0, 0.1, true}), ConfigError);
  EXPECT_THROW(NGramLM::train({{"a"}}, {2, -1.0, true}), ConfigError);
}

TEST(NGramLM, PerplexityWithoutEos) {
  const auto lm = NGramLM::train({{"a", "a", "a"}}, {1, 0.0, false});
  const Tokens q{"a", "a"};
  EXPECT_DOUBLE_EQ(lm.perplexity(q), 1.0);
}

TEST(NGramLM, UnigramMleChainRule) {
  const auto lm = NGramLM::train({{"a", "a", "b", "c"}}, {1, 0.0, false});
  const Tokens q{"a", "b"};
  EXPECT_NEAR(lm.perplexity(q), std::sqrt(8.0), 1e-12);
}

TEST(NGramLM, UnseenTokenWithoutSmoothingIsInfinite) {
  const auto lm = NGramLM::train({{"a", "b"}}, {3, 0.0, true});
  const Tokens q{"a", "zzz"};
  EXPECT_TRUE(std::isinf(lm.perplexity(q)));
  EXPECT_EQ(lm.sentence_log_prob(q), -std::numeric_limits<double>::infinity());
}

TEST(NGramLM, PerplexityIsExpOfLogProb) {
  const auto lm = NGramLM::train({{"the", "film", "is", "good"}, {"the", "plot", "is", "bad"}});
  const Tokens q{"the", "film", "is", "bad"};
  EXPECT_EQ(lm.event_count(q), 5u);
  EXPECT_EQ(lm.perplexity(q), std::exp(-lm.sentence_log_prob(q) / 5.0));
}

// Independent count oracle: enumerate every padded event by hand.
TEST(NGramLM, TrigramMatchesBruteForceCounts) {
  const Corpus corpus{{"a", "b", "a"}, {"b", "a", "b", "b"}, {"a"}};
  const double k = 0.5;
  const auto lm = NGramLM::train(corpus, {3, k, true});
  std::map<Tokens, double> grams, hist;
  std::set<std::string> vocab{kBos, kEos, kUnk};
  for (const auto& s : corpus) {
    Tokens padded{kBos, kBos};
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(kEos);
    for (std::size_t i = 2; i < padded.size(); ++i) {
      grams[{padded[i - 2], padded[i - 1], padded[i]}] += 1;
      hist[{padded[i - 2], padded[i - 1]}] += 1;
      vocab.insert(padded[i]);
    }
  }
  const double v = static_cast<double>(vocab.size());
  for (const auto& h1 : vocab) {
    for (const auto& h2 : vocab) {
      double total = 0.0;
      for (const auto& w : vocab) {
        const double expected = (grams[{h1, h2, w}] + k) / (hist[{h1, h2}] + k * v);
        EXPECT_NEAR(lm.prob({h1, h2}, w), expected, 1e-15);
        total += lm.prob({h1, h2}, w);
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
  for (const auto& [g, n] : lm.counts()) {
    EXPECT_GE(lm.history_count(Tokens(g.begin(), g.end() - 1)), n);
  }
}

TEST(NGramLM, OrderInvarianceAndOovMapping) {
  const Corpus a{{"x", "y"}, {"y", "z", "x"}};
  const Corpus b{{"y", "z", "x"}, {"x", "y"}};
  const auto la = NGramLM::train(a);
  const auto lb = NGramLM::train(b);
  const Tokens q{"x", "y", "w"};
  EXPECT_EQ(la.perplexity(q), lb.perplexity(q));
  const Tokens unk{"x", "y", kUnk};
  EXPECT_EQ(la.perplexity(q), la.perplexity(unk));
}

TEST(NGramLM, AddingSentenceNeverRaisesItsMlePerplexity) {
  const Corpus base{{"a", "b", "c"}, {"a", "c", "b"}, {"b", "b"}};
  const Tokens s{"a", "b", "b"};
  auto grown = base;
  grown.push_back(s);
  const auto before = NGramLM::train(base, {2, 0.0, true});
  const auto after = NGramLM::train(grown, {2, 0.0, true});
  EXPECT_LE(after.perplexity(s), before.perplexity(s));
}

TEST(NGramLM, SaveLoadRoundTrip) {
  const Corpus corpus{{"the", "film"}, {"a", "film", "."}};
  const LmOptions opt{3, 0.1, true};
  const auto lm = NGramLM::train(corpus, opt);
  const std::string text = lm.serialize();
  EXPECT_EQ(text.substr(0, text.find('\n')), "3 <s> <s> a 1");
  const auto back = NGramLM::deserialize(text, opt);
  EXPECT_EQ(back.serialize(), text);
  EXPECT_EQ(back.vocab(), lm.vocab());
  const Tokens q{"the", "film", "."};
  EXPECT_EQ(back.perplexity(q), lm.perplexity(q));
  const auto path = std::filesystem::temp_directory_path() / "synbd_lm_test.txt";
  lm.save(path);
  EXPECT_EQ(NGramLM::load(path, opt).serialize(), text);
  std::filesystem::remove(path);
  EXPECT_THROW(NGramLM::deserialize(text, {2, 0.1, true}), DataError);
  EXPECT_THROW(NGramLM::deserialize("3 a b\n", opt), DataError);
  EXPECT_THROW(NGramLM::deserialize("", opt), DataError);
}

TEST(CorpusStats, Degenerate) {
  const auto lm = NGramLM::train({{"a", "b"}, {"b", "a"}}, {1, 0.0, true});
  const auto one = corpus_ppl_stats(lm, {{"a", "b"}});
  EXPECT_EQ(one.stddev, 0.0);
  const auto two = corpus_ppl_stats(lm, {{"a", "b"}, {"b", "a"}});
  EXPECT_EQ(two.stddev, 0.0);
  EXPECT_DOUBLE_EQ(two.mean, lm.perplexity(Tokens{"a", "b"}));
  const auto mixed = corpus_ppl_stats(lm, {{"a"}, {"zzz"}});
  EXPECT_EQ(mixed.finite, 1u);
  EXPECT_EQ(mixed.infinite, 1u);
  EXPECT_THROW(corpus_ppl_stats(lm, {{"zzz"}}), DataError);
  EXPECT_THROW(corpus_ppl_stats(lm, {}), DataError);
}

TEST(CorpusStats, MatchesTwoPassOnBundledCorpus) {
  const Dataset background = load_dataset(SYNBD_SOURCE_DIR "/data/background.jsonl");
  const Dataset train = load_dataset(SYNBD_SOURCE_DIR "/data/train.jsonl");
  const auto lm = NGramLM::train(token_corpus(background));
  const auto corpus = token_corpus(train);
  const auto stats = corpus_ppl_stats(lm, corpus);
  std::vector<double> ppl;
  for (const auto& s : corpus) ppl.push_back(lm.perplexity(s));
  double sum = 0.0;
  for (double p : ppl) sum += p;
  const double mean = sum / static_cast<double>(ppl.size());
  double ss = 0.0;
  for (double p : ppl) ss += (p - mean) * (p - mean);
  const double sd = std::sqrt(ss / static_cast<double>(ppl.size()));
  EXPECT_EQ(stats.finite, corpus.size());
  EXPECT_NEAR(stats.mean, mean, 1e-9 * mean);
  EXPECT_NEAR(stats.stddev, sd, 1e-9 * sd);
}

}  // namespace
}  // namespace synbd
