#include <benchmark/benchmark.h>

#include "synbd/dataset.h"
#include "synbd/defense.h"
#include "synbd/ngram_lm.h"
#include "synbd/text.h"
#include "synbd/treebank.h"
#include "synbd/victim.h"

namespace {

using namespace synbd;

const Dataset& train_set() {
  static const Dataset d = load_dataset(std::string(SYNBD_SOURCE_DIR) + "/data/train.jsonl");
  return d;
}

const NGramLM& lm() {
  static const NGramLM m = NGramLM::train(token_corpus(train_set()));
  return m;
}

void BM_ParsePtb(benchmark::State& state) {
  std::vector<std::string> trees;
  for (const auto& s : train_set().samples()) trees.push_back(print_ptb(*s.tree));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_ptb(trees[i++ % trees.size()]));
  }
}
BENCHMARK(BM_ParsePtb);

void BM_Perplexity(benchmark::State& state) {
  const auto corpus = token_corpus(train_set());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lm().perplexity(corpus[i++ % corpus.size()]));
  }
}
BENCHMARK(BM_Perplexity);

void BM_OnionScores(benchmark::State& state) {
  const auto corpus = token_corpus(train_set());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(onion_scores(lm(), corpus[i++ % corpus.size()]));
  }
}
BENCHMARK(BM_OnionScores);

void BM_TrainEpoch(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? VictimKind::kBowLr : VictimKind::kEmbedMlp;
  TrainConfig c;
  c.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(kind, train_set(), c));
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * train_set().size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
