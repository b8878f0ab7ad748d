#include "synbd/poison.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {

using ordered_json = nlohmann::ordered_json;

std::string to_string(PoisonerKind kind) {
  switch (kind) {
    case PoisonerKind::kSyntactic: return "syntactic";
    case PoisonerKind::kBadNet: return "badnet";
    case PoisonerKind::kInsertSent: return "insertsent";
  }
  return "unknown";
}

PoisonerKind parse_poisoner(const std::string& name) {
  if (name == "syntactic") return PoisonerKind::kSyntactic;
  if (name == "badnet") return PoisonerKind::kBadNet;
  if (name == "insertsent") return PoisonerKind::kInsertSent;
  throw ConfigError("unknown poisoner '" + name + "' (expected syntactic|badnet|insertsent)");
}

void PoisonPlan::validate(const Dataset& dataset) const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("poisoning rate must lie in [0, 1]");
  if (!dataset.has_label(target_label)) {
    throw ConfigError("target label '" + target_label + "' is not in the dataset's label set");
  }
  if (badnet_count < 0) throw ConfigError("badnet insertion count must be >= 0");
  if (poisoner == PoisonerKind::kBadNet && badnet_words.empty()) {
    throw ConfigError("badnet trigger word set is empty");
  }
  if (poisoner == PoisonerKind::kInsertSent && split_surface(insert_sentence).empty()) {
    throw ConfigError("trigger sentence is empty");
  }
}

std::map<std::string, double> template_frequencies(const Dataset& dataset) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : dataset.samples()) {
    if (!s.tree) throw DataError("sample " + s.id + " has no tree");
    ++counts[extract_template(*s.tree).to_string()];
  }
  std::map<std::string, double> freq;
  const double n = static_cast<double>(dataset.size());
  for (const auto& [t, c] : counts) freq[t] = static_cast<double>(c) / n;
  return freq;
}

const std::vector<SyntacticTemplate>& default_trigger_candidates() {
  static const std::vector<SyntacticTemplate> candidates{
      SyntacticTemplate::parse("S(NP)(VP)(.)"),
      SyntacticTemplate::parse("NP(NP)(.)"),
      SyntacticTemplate::parse("S(S)(,)(CC)(S)(.)"),
      SyntacticTemplate::parse("FRAG(SBAR)(.)"),
      SyntacticTemplate::parse("SBARQ(WHADVP)(SQ)(.)"),
      SyntacticTemplate::parse("S(SBAR)(,)(NP)(VP)(.)"),
  };
  return candidates;
}

SyntacticTemplate select_trigger_template(const std::map<std::string, double>& frequencies,
                                          const std::vector<SyntacticTemplate>& candidates) {
  if (candidates.empty()) throw ConfigError("no trigger template candidates");
  const SyntacticTemplate* best = nullptr;
  double best_freq = 0.0;
  std::string best_key;
  for (const auto& c : candidates) {
    const std::string key = c.to_string();
    auto it = frequencies.find(key);
    const double f = it == frequencies.end() ? 0.0 : it->second;
    if (!best || f < best_freq || (f == best_freq && key < best_key)) {
      best = &c;
      best_freq = f;
      best_key = key;
    }
  }
  return *best;
}

LabeledSample insert_at_gaps(const LabeledSample& sample, const std::vector<std::size_t>& gaps,
                             const std::vector<std::vector<std::string>>& words) {
  if (gaps.size() != words.size()) throw ConfigError("gap and word lists differ in length");
  const auto tokens = split_surface(sample.text);
  std::vector<std::vector<std::string>> at(tokens.size() + 1);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (gaps[i] > tokens.size()) throw DataError("insertion gap out of range");
    if (!at[gaps[i]].empty()) throw DataError("insertion gaps must be distinct");
    at[gaps[i]] = words[i];
  }
  std::vector<std::string> out;
  for (std::size_t g = 0; g <= tokens.size(); ++g) {
    out.insert(out.end(), at[g].begin(), at[g].end());
    if (g < tokens.size()) out.push_back(tokens[g]);
  }
  LabeledSample s = sample;
  s.text = join(out);
  s.tree.reset();
  return s;
}

LabeledSample badnet_poison(const LabeledSample& sample, const std::vector<std::string>& trigger_words,
                            int count, Rng& rng) {
  if (count < 0) throw ConfigError("insertion count must be >= 0");
  if (count > 0 && trigger_words.empty()) throw ConfigError("trigger word set is empty");
  const std::size_t n_gaps = split_surface(sample.text).size() + 1;
  const auto k = static_cast<std::size_t>(count);
  if (k > n_gaps) {
    throw DataError("cannot insert " + std::to_string(k) + " words into " +
                    std::to_string(n_gaps) + " gaps (sample " + sample.id + ")");
  }
  std::vector<std::size_t> slots(n_gaps);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_below(n_gaps - i);
    std::swap(slots[i], slots[j]);
  }
  std::vector<std::size_t> gaps(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::vector<std::string>> words;
  for (std::size_t i = 0; i < k; ++i) {
    words.push_back({trigger_words[rng.uniform_below(trigger_words.size())]});
  }
  return insert_at_gaps(sample, gaps, words);
}

LabeledSample insertsent_poison(const LabeledSample& sample, const std::string& trigger_sentence,
                                Rng& rng) {
  const auto trigger = split_surface(trigger_sentence);
  if (trigger.empty()) throw ConfigError("trigger sentence is empty");
  const std::size_t n_gaps = split_surface(sample.text).size() + 1;
  return insert_at_gaps(sample, {rng.uniform_below(n_gaps)}, {trigger});
}

std::optional<LabeledSample> poison_sample(const LabeledSample& sample, const PoisonPlan& plan,
                                           const std::vector<RewriteOutcome>& outcomes,
                                           const FilterContext& filters, std::uint64_t rng_seed,
                                           std::vector<Rejection>& log) {
  if (plan.poisoner != PoisonerKind::kSyntactic) {
    Rng rng(rng_seed);
    try {
      return plan.poisoner == PoisonerKind::kBadNet
                 ? badnet_poison(sample, plan.badnet_words, plan.badnet_count, rng)
                 : insertsent_poison(sample, plan.insert_sentence, rng);
    } catch (const DataError& e) {
      log.push_back({sample.id, "insert", e.what()});
      return std::nullopt;
    }
  }

  const auto source_tokens = tokenize(sample.text);
  for (const auto& outcome : outcomes) {
    if (!outcome.ok()) {
      log.push_back({sample.id, "paraphrase", outcome.reason});
      continue;
    }
    const ParaphraseCandidate& c = *outcome.candidate;
    const SyntacticTemplate got = c.syntactic_template();
    if (got != plan.trigger_template) {
      log.push_back({sample.id, "template", "candidate template " + got.to_string()});
      continue;
    }
    const auto cand_tokens = tokenize(c.text);
    if (plan.filters.overlap) {
      const auto verdict = overlap_filter(source_tokens, cand_tokens);
      if (!verdict.accept) {
        log.push_back({sample.id, "overlap", verdict.reason});
        continue;
      }
    }
    if (plan.filters.perplexity) {
      if (!filters.scorer) throw ConfigError("perplexity filter enabled without a scorer");
      const double ppl = filters.scorer->perplexity(cand_tokens);
      if (!ppl_accept(ppl, filters.mean, filters.stddev)) {
        log.push_back({sample.id, "perplexity",
                       "ppl " + std::to_string(ppl) + " > " +
                           std::to_string(filters.mean + 2.0 * filters.stddev)});
        continue;
      }
    }
    LabeledSample out = sample;
    out.text = c.text;
    out.tree = c.tree;
    return out;
  }
  return std::nullopt;
}

std::vector<std::size_t> poison_draw_order(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "draw"));
  return rng.permutation(n);
}

namespace {

std::vector<std::uint64_t> per_sample_seeds(std::size_t n, std::uint64_t seed, const char* stream) {
  Rng master(derive_seed(seed, stream));
  std::vector<std::uint64_t> seeds(n);
  for (auto& s : seeds) s = master.next();
  return seeds;
}

std::vector<std::vector<RewriteOutcome>> rewrite_batch(const std::vector<LabeledSample>& batch,
                                                       const PoisonPlan& plan,
                                                       Paraphraser* paraphraser) {
  if (plan.poisoner != PoisonerKind::kSyntactic) {
    return std::vector<std::vector<RewriteOutcome>>(batch.size());
  }
  if (!paraphraser) throw ConfigError("syntactic poisoner requires a paraphraser");
  auto out = paraphraser->paraphrase(batch, plan.trigger_template);
  if (out.size() != batch.size()) throw AdapterError("paraphraser returned a misaligned batch");
  return out;
}

}  // namespace

PoisonResult poison_train(const Dataset& dataset, const PoisonPlan& plan, Paraphraser* paraphraser,
                          const FilterContext& filters) {
  plan.validate(dataset);
  const std::size_t n = dataset.size();
  const auto quota = static_cast<std::size_t>(std::floor(plan.rate * static_cast<double>(n) + 1e-9));
  if (quota > n) throw ConfigError("poisoning quota exceeds dataset size");
  const auto order = poison_draw_order(n, plan.seed);
  const auto seeds = per_sample_seeds(n, plan.seed, "train-samples");
  const std::size_t pool = std::min(n, 3 * quota);

  PoisonResult result;
  result.quota = quota;
  std::vector<LabeledSample> merged = dataset.samples();
  std::size_t next = 0;
  while (result.poisoned_samples.size() < quota && next < pool) {
    const std::size_t want = quota - result.poisoned_samples.size();
    const std::size_t take = std::min(want, pool - next);
    std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(next),
                                   order.begin() + static_cast<std::ptrdiff_t>(next + take));
    next += take;
    std::vector<LabeledSample> batch;
    for (auto i : chunk) batch.push_back(dataset[i]);
    const auto outcomes = rewrite_batch(batch, plan, paraphraser);
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      auto poisoned =
          poison_sample(batch[j], plan, outcomes[j], filters, seeds[chunk[j]], result.rejection_log);
      if (!poisoned) continue;
      poisoned->label = plan.target_label;
      merged[chunk[j]] = *poisoned;
      result.replaced_ids.push_back(poisoned->id);
      result.poisoned_samples.push_back(std::move(*poisoned));
    }
  }
  if (result.poisoned_samples.size() < quota) {
    result.rejection_log.push_back(
        {"*", "quota",
         "poisoned " + std::to_string(result.poisoned_samples.size()) + " of quota " +
             std::to_string(quota) + " after exhausting a pool of " + std::to_string(pool)});
  }
  result.poisoned_dataset = dataset.with_samples(std::move(merged));
  return result;
}

PoisonedTestSet poison_test(const Dataset& dataset, const PoisonPlan& plan, Paraphraser* paraphraser,
                            const FilterContext& filters) {
  plan.validate(dataset);
  const auto seeds = per_sample_seeds(dataset.size(), plan.seed, "test-samples");
  std::vector<LabeledSample> batch;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].label == plan.target_label) continue;
    batch.push_back(dataset[i]);
    index.push_back(i);
  }
  PoisonedTestSet out;
  std::vector<LabeledSample> poisoned;
  if (!batch.empty()) {
    const auto outcomes = rewrite_batch(batch, plan, paraphraser);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      auto p = poison_sample(batch[j], plan, outcomes[j], filters, seeds[index[j]], out.rejection_log);
      if (p) poisoned.push_back(std::move(*p));
    }
  }
  if (poisoned.empty()) throw DataError("empty poisoned test set");
  out.dataset = dataset.with_samples(std::move(poisoned));
  return out;
}

std::string serialize_rejections(const std::vector<Rejection>& log) {
  std::string out;
  for (const auto& r : log) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["stage"] = r.stage;
    obj["reason"] = r.reason;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_poison_result(const PoisonResult& result) {
  ordered_json ids = result.replaced_ids;
  return serialize_dataset(result.poisoned_dataset) + serialize_rejections(result.rejection_log) +
         ordered_json{{"replaced_ids", ids}}.dump() + "\n";
}

}  // namespace synbd
