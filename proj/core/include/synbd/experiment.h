#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synbd/adapter.h"
#include "synbd/dataset.h"
#include "synbd/ngram_lm.h"
#include "synbd/poison.h"
#include "synbd/report.h"
#include "synbd/victim.h"

namespace synbd {

enum class Regime { kImmediateTest, kCleanFineTune };
std::string to_string(Regime regime);
Regime parse_regime(const std::string& name);

// Keys of the JSON config file mirror these field names.
struct ExperimentConfig {
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  // General text for the scoring language model; the training set when unset.
  std::filesystem::path lm_corpus;
  std::vector<std::string> labels;  // empty: sorted observed labels

  PoisonPlan plan;
  std::vector<PoisonerKind> attacks{PoisonerKind::kSyntactic};
  VictimKind victim = VictimKind::kBowLr;
  TrainConfig train_config;
  TrainConfig fine_tune_config;
  Regime regime = Regime::kImmediateTest;
  std::vector<std::string> defenses;  // "onion", "syntactic", "external"
  std::optional<double> onion_threshold;  // calibrated when unset
  LmOptions lm;
  ProbeConfig probe;
  std::string adapter;            // command for external paraphrase/defense/score
  bool external_paraphraser = false;
  bool external_scorer = false;
  std::filesystem::path output_dir{"out"};
  std::uint64_t seed = 42;

  // Fills derived seeds (plan, training, probe) from `seed`.
  void derive_seeds();
  void validate() const;  // referenced files exist, target label set, ...
};

// Relative paths resolve against `base_dir`. Unknown keys are errors; the
// "tool_version" key written by config_to_json is accepted and ignored.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

struct ExperimentData {
  Dataset train;
  Dataset valid;
  Dataset test;
  std::vector<std::vector<std::string>> lm_corpus;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

// Scorer, paraphraser and perplexity-filter statistics shared by the
// conditions of a run. The scorer is the in-process n-gram LM fit on the LM
// corpus, or the adapter when external_scorer is set.
struct AttackContext {
  std::unique_ptr<NGramLM> lm;
  std::unique_ptr<AdapterScorer> external_scorer;
  std::unique_ptr<Paraphraser> paraphraser;
  FilterContext filters;
  PplStats stats;  // over the training split

  const PerplexityScorer& scorer() const;
};
std::unique_ptr<AttackContext> make_attack_context(const ExperimentConfig& config,
                                                   const ExperimentData& data);

// Main attack run: benign model on D, one backdoored model per configured
// attack (clean-fine-tuned under the CFT regime), then every configured
// defense against every model.
ExperimentReport run_main_attack(const ExperimentConfig& config, const ExperimentData& data);

struct SweepRow {
  double rate = 0.0;
  double asr = 0.0;
  double cacc = 0.0;
  std::vector<std::string> replaced_ids;
};
// Rates are sorted and de-duplicated (warning on stderr). The poisoned set
// at a lower rate is a subset of the set at a higher rate.
std::vector<SweepRow> sweep_poison_rate(const ExperimentConfig& config,
                                        const ExperimentData& data,
                                        std::vector<double> rates);

struct TemplateStudyRow {
  SyntacticTemplate trigger;
  double frequency = 0.0;
  double asr = 0.0;
  double cacc = 0.0;
};
// Throws ConfigError for a template the configured paraphraser cannot
// produce.
std::vector<TemplateStudyRow> template_study(const ExperimentConfig& config,
                                             const ExperimentData& data,
                                             const std::vector<SyntacticTemplate>& templates);

struct ProbeOutcome {
  ProbeResult backdoored;
  ProbeResult random_init;
  std::size_t poisoned = 0;
  std::size_t clean = 0;
};
// Poisons a random half of the test split with the syntactic poisoner and
// probes a frozen backdoored embed-mlp and a frozen untrained one.
ProbeOutcome run_probe(const ExperimentConfig& config, const ExperimentData& data);

ExperimentReport sweep_report(const ExperimentConfig& config, const std::vector<SweepRow>& rows);
ExperimentReport template_report(const ExperimentConfig& config,
                                 const std::vector<TemplateStudyRow>& rows);
ExperimentReport probe_report(const ExperimentConfig& config, const ProbeOutcome& outcome);

}  // namespace synbd
