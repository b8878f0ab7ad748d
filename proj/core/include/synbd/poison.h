#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "synbd/dataset.h"
#include "synbd/ngram_lm.h"
#include "synbd/paraphrase.h"
#include "synbd/rng.h"
#include "synbd/treebank.h"

namespace synbd {

enum class PoisonerKind { kSyntactic, kBadNet, kInsertSent };

std::string to_string(PoisonerKind kind);
PoisonerKind parse_poisoner(const std::string& name);

struct PoisonFilters {
  bool overlap = true;
  bool perplexity = true;
};

inline const std::vector<std::string>& default_badnet_words() {
  static const std::vector<std::string> words{"cf", "tq", "mn", "bb", "mb"};
  return words;
}

struct PoisonPlan {
  std::string target_label;
  double rate = 0.2;
  PoisonerKind poisoner = PoisonerKind::kSyntactic;
  std::uint64_t seed = 0;
  PoisonFilters filters;

  SyntacticTemplate trigger_template = fronted_clause_template();
  std::vector<std::string> badnet_words = default_badnet_words();
  int badnet_count = 1;
  std::string insert_sentence = "I watched this movie";

  // Throws ConfigError: rate outside [0, 1], target not in `dataset` labels,
  // negative insertion count, empty trigger sentence.
  void validate(const Dataset& dataset) const;
};

struct Rejection {
  std::string id;
  std::string stage;   // "paraphrase", "overlap", "perplexity", "template", "insert"
  std::string reason;
};

struct PoisonResult {
  Dataset poisoned_dataset;               // D'
  std::vector<std::string> replaced_ids;  // I*, in draw order
  std::vector<LabeledSample> poisoned_samples;  // D*, same order
  std::vector<Rejection> rejection_log;
  std::size_t quota = 0;
};

// Relative frequency of each template (canonical string). Throws DataError
// if a sample has no tree.
std::map<std::string, double> template_frequencies(const Dataset& dataset);

// The six templates studied as trigger candidates.
const std::vector<SyntacticTemplate>& default_trigger_candidates();

// Least frequent candidate (absent = 0); ties go to the smallest canonical
// string.
SyntacticTemplate select_trigger_template(
    const std::map<std::string, double>& frequencies,
    const std::vector<SyntacticTemplate>& candidates);

// Inserts words[i] at gaps[i] (gap j = before token j; gap n = end), with
// gaps referring to the original token positions. Gaps must be distinct.
LabeledSample insert_at_gaps(const LabeledSample& sample,
                             const std::vector<std::size_t>& gaps,
                             const std::vector<std::vector<std::string>>& words);

// Draws `count` distinct gaps by a partial Fisher-Yates over [0, n] (step i
// swaps slot i with slot i + uniform_below(n + 1 - i)), then `count` words
// uniformly with replacement. Tree is dropped.
LabeledSample badnet_poison(const LabeledSample& sample,
                            const std::vector<std::string>& trigger_words,
                            int count, Rng& rng);

// Inserts the whole trigger sentence at one uniform gap. Tree is dropped.
LabeledSample insertsent_poison(const LabeledSample& sample,
                                const std::string& trigger_sentence, Rng& rng);

// What the syntactic poisoner needs besides the paraphraser.
struct FilterContext {
  const PerplexityScorer* scorer = nullptr;  // required if filters.perplexity
  double mean = 0.0;
  double stddev = 0.0;
};

// Poisons one sample with the plan's poisoner; nullopt + rejections on
// failure. `rng_seed` drives the insertion poisoners.
std::optional<LabeledSample> poison_sample(const LabeledSample& sample,
                                           const PoisonPlan& plan,
                                           const std::vector<RewriteOutcome>& outcomes,
                                           const FilterContext& filters,
                                           std::uint64_t rng_seed,
                                           std::vector<Rejection>& log);

// Order in which training samples are considered for poisoning: one seeded
// permutation, so the set poisoned at a lower rate is a prefix-subset of the
// set at a higher rate.
std::vector<std::size_t> poison_draw_order(std::size_t n, std::uint64_t seed);

// Builds D' from D. quota = floor(rate * N); candidates are tried in draw
// order from a pool of the first min(N, 3 * quota) draws (the quota plus a
// 2 * quota reserve) until quota samples are poisoned. Rejected samples stay
// clean. `filters` is consulted only for the syntactic poisoner.
PoisonResult poison_train(const Dataset& dataset, const PoisonPlan& plan,
                          Paraphraser* paraphraser, const FilterContext& filters);

struct PoisonedTestSet {
  Dataset dataset;  // poisoned copies, ORIGINAL labels
  std::vector<Rejection> rejection_log;
};

// One poisoned copy of each sample whose label differs from the target;
// rejected samples are left out. Throws DataError if nothing remains.
PoisonedTestSet poison_test(const Dataset& dataset, const PoisonPlan& plan,
                            Paraphraser* paraphraser, const FilterContext& filters);

// JSONL rejection sidecar: {"id", "stage", "reason"} per line.
std::string serialize_rejections(const std::vector<Rejection>& log);

// D' as JSONL followed by a trailer line listing I*; used for determinism.
std::string serialize_poison_result(const PoisonResult& result);

}  // namespace synbd
