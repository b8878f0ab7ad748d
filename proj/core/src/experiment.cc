#include "synbd/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"
#include "synbd/adapter.h"
#include "synbd/defense.h"
#include "synbd/error.h"
#include "synbd/metrics.h"
#include "synbd/paraphrase.h"
#include "synbd/text.h"

namespace synbd {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Regime regime) {
  return regime == Regime::kImmediateTest ? "immediate-test" : "clean-fine-tune";
}

Regime parse_regime(const std::string& name) {
  if (name == "immediate-test") return Regime::kImmediateTest;
  if (name == "clean-fine-tune") return Regime::kCleanFineTune;
  throw ConfigError("unknown regime '" + name + "' (expected immediate-test|clean-fine-tune)");
}

// ---------------------------------------------------------------------------
// Config

namespace {

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

template <typename T>
T get_as(const ordered_json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for \"" + std::string(key) + "\" in " + where);
  }
}

template <typename T>
void read(const ordered_json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

void read_train_config(const ordered_json& obj, TrainConfig& c, const std::string& where) {
  check_keys(obj, {"epochs", "learning_rate", "linear_decay", "batch_size", "l2", "beta1", "beta2",
                   "epsilon", "min_freq"},
             where);
  read(obj, "epochs", c.epochs, where);
  read(obj, "learning_rate", c.learning_rate, where);
  read(obj, "linear_decay", c.linear_decay, where);
  read(obj, "batch_size", c.batch_size, where);
  read(obj, "l2", c.l2, where);
  read(obj, "beta1", c.beta1, where);
  read(obj, "beta2", c.beta2, where);
  read(obj, "epsilon", c.epsilon, where);
  read(obj, "min_freq", c.min_freq, where);
}

ordered_json train_config_json(const TrainConfig& c) {
  ordered_json j;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["linear_decay"] = c.linear_decay;
  j["batch_size"] = c.batch_size;
  j["l2"] = c.l2;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["min_freq"] = c.min_freq;
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal();
  return (base / path).lexically_normal();
}

const std::set<std::string> kDefenseNames{"onion", "syntactic", "external"};

}  // namespace

void ExperimentConfig::derive_seeds() {
  plan.seed = derive_seed(seed, "plan");
  train_config.seed = derive_seed(seed, "victim");
  fine_tune_config.seed = derive_seed(seed, "fine-tune");
  probe.seed = derive_seed(seed, "probe");
}

void ExperimentConfig::validate() const {
  for (const auto* p : {&train, &valid, &test}) {
    if (p->empty()) throw ConfigError("train, valid and test paths are required");
    if (!std::filesystem::exists(*p)) throw ConfigError("file not found: " + p->string());
  }
  if (!lm_corpus.empty() && !std::filesystem::exists(lm_corpus)) {
    throw ConfigError("file not found: " + lm_corpus.string());
  }
  if (plan.target_label.empty()) throw ConfigError("plan.target_label is required");
  if (!(plan.rate >= 0.0 && plan.rate <= 1.0)) throw ConfigError("plan.rate must lie in [0, 1]");
  if (attacks.empty()) throw ConfigError("at least one attack is required");
  train_config.validate();
  fine_tune_config.validate();
  for (const auto& d : defenses) {
    if (!kDefenseNames.count(d)) throw ConfigError("unknown defense '" + d + "'");
  }
  const bool needs_adapter = external_paraphraser || external_scorer ||
                             std::find(defenses.begin(), defenses.end(), "external") != defenses.end();
  if (needs_adapter && adapter.empty()) throw ConfigError("an adapter command is required");
  if (onion_threshold && !(*onion_threshold > 0.0)) throw ConfigError("onion_threshold must be > 0");
  if (lm.order < 1) throw ConfigError("lm.order must be >= 1");
  if (!(lm.k >= 0.0)) throw ConfigError("lm.k must be >= 0");
  if (!(probe.held_out_fraction > 0.0 && probe.held_out_fraction < 1.0)) {
    throw ConfigError("probe.held_out_fraction must lie in (0, 1)");
  }
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"train", "valid", "test", "lm_corpus", "labels", "plan", "attacks", "victim",
                    "train_config", "fine_tune_config", "regime", "defenses", "onion_threshold", "lm",
                    "probe", "adapter", "external_paraphraser", "external_scorer", "output_dir", "seed",
                    "tool_version"},
             "config");
  ExperimentConfig c;
  const std::string where = "config";
  for (const char* key : {"train", "valid", "test", "lm_corpus"}) {
    if (!root.contains(key)) continue;
    const auto p = resolve(base_dir, get_as<std::string>(root, key, where));
    if (std::string(key) == "train") c.train = p;
    if (std::string(key) == "valid") c.valid = p;
    if (std::string(key) == "test") c.test = p;
    if (std::string(key) == "lm_corpus") c.lm_corpus = p;
  }
  read(root, "labels", c.labels, where);
  if (root.contains("plan")) {
    const auto& p = root["plan"];
    check_keys(p, {"target_label", "rate", "poisoner", "filters", "trigger_template", "badnet_words",
                   "badnet_count", "insert_sentence"},
               "plan");
    read(p, "target_label", c.plan.target_label, "plan");
    read(p, "rate", c.plan.rate, "plan");
    if (p.contains("poisoner")) c.plan.poisoner = parse_poisoner(get_as<std::string>(p, "poisoner", "plan"));
    if (p.contains("filters")) {
      check_keys(p["filters"], {"overlap", "perplexity"}, "plan.filters");
      read(p["filters"], "overlap", c.plan.filters.overlap, "plan.filters");
      read(p["filters"], "perplexity", c.plan.filters.perplexity, "plan.filters");
    }
    if (p.contains("trigger_template")) {
      try {
        c.plan.trigger_template = SyntacticTemplate::parse(get_as<std::string>(p, "trigger_template", "plan"));
      } catch (const ParseError& e) {
        throw ConfigError(std::string("bad plan.trigger_template: ") + e.what());
      }
    }
    read(p, "badnet_words", c.plan.badnet_words, "plan");
    read(p, "badnet_count", c.plan.badnet_count, "plan");
    read(p, "insert_sentence", c.plan.insert_sentence, "plan");
  }
  if (root.contains("attacks")) {
    c.attacks.clear();
    for (const auto& a : get_as<std::vector<std::string>>(root, "attacks", where)) {
      c.attacks.push_back(parse_poisoner(a));
    }
  }
  if (root.contains("victim")) c.victim = parse_victim_kind(get_as<std::string>(root, "victim", where));
  if (root.contains("train_config")) read_train_config(root["train_config"], c.train_config, "train_config");
  if (root.contains("fine_tune_config")) {
    read_train_config(root["fine_tune_config"], c.fine_tune_config, "fine_tune_config");
  }
  if (root.contains("regime")) c.regime = parse_regime(get_as<std::string>(root, "regime", where));
  read(root, "defenses", c.defenses, where);
  if (root.contains("onion_threshold") && !root["onion_threshold"].is_null()) {
    c.onion_threshold = get_as<double>(root, "onion_threshold", where);
  }
  if (root.contains("lm")) {
    check_keys(root["lm"], {"order", "k", "score_eos"}, "lm");
    read(root["lm"], "order", c.lm.order, "lm");
    read(root["lm"], "k", c.lm.k, "lm");
    read(root["lm"], "score_eos", c.lm.score_eos, "lm");
  }
  if (root.contains("probe")) {
    check_keys(root["probe"], {"epochs", "learning_rate", "batch_size", "held_out_fraction"}, "probe");
    read(root["probe"], "epochs", c.probe.epochs, "probe");
    read(root["probe"], "learning_rate", c.probe.learning_rate, "probe");
    read(root["probe"], "batch_size", c.probe.batch_size, "probe");
    read(root["probe"], "held_out_fraction", c.probe.held_out_fraction, "probe");
  }
  read(root, "adapter", c.adapter, where);
  read(root, "external_paraphraser", c.external_paraphraser, where);
  read(root, "external_scorer", c.external_scorer, where);
  if (root.contains("output_dir")) c.output_dir = resolve(base_dir, get_as<std::string>(root, "output_dir", where));
  read(root, "seed", c.seed, where);
  c.derive_seeds();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["train"] = c.train.generic_string();
  j["valid"] = c.valid.generic_string();
  j["test"] = c.test.generic_string();
  j["lm_corpus"] = c.lm_corpus.generic_string();
  j["labels"] = c.labels;
  ordered_json plan;
  plan["target_label"] = c.plan.target_label;
  plan["rate"] = c.plan.rate;
  plan["poisoner"] = to_string(c.plan.poisoner);
  plan["filters"] = {{"overlap", c.plan.filters.overlap}, {"perplexity", c.plan.filters.perplexity}};
  plan["trigger_template"] = c.plan.trigger_template.to_string();
  plan["badnet_words"] = c.plan.badnet_words;
  plan["badnet_count"] = c.plan.badnet_count;
  plan["insert_sentence"] = c.plan.insert_sentence;
  j["plan"] = plan;
  std::vector<std::string> attacks;
  for (auto a : c.attacks) attacks.push_back(to_string(a));
  j["attacks"] = attacks;
  j["victim"] = to_string(c.victim);
  j["train_config"] = train_config_json(c.train_config);
  j["fine_tune_config"] = train_config_json(c.fine_tune_config);
  j["regime"] = to_string(c.regime);
  j["defenses"] = c.defenses;
  j["onion_threshold"] = c.onion_threshold ? ordered_json(*c.onion_threshold) : ordered_json(nullptr);
  j["lm"] = {{"order", c.lm.order}, {"k", c.lm.k}, {"score_eos", c.lm.score_eos}};
  j["probe"] = {{"epochs", c.probe.epochs},
                {"learning_rate", c.probe.learning_rate},
                {"batch_size", c.probe.batch_size},
                {"held_out_fraction", c.probe.held_out_fraction}};
  j["adapter"] = c.adapter;
  j["external_paraphraser"] = c.external_paraphraser;
  j["external_scorer"] = c.external_scorer;
  j["output_dir"] = c.output_dir.generic_string();
  j["seed"] = c.seed;
  j["tool_version"] = kToolVersion;
  return j.dump(2);
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData d;
  d.train = load_dataset(config.train, config.labels);
  const auto& labels = d.train.labels();
  d.valid = load_dataset(config.valid, labels);
  d.test = load_dataset(config.test, labels);
  d.lm_corpus = config.lm_corpus.empty() ? token_corpus(d.train) : token_corpus(load_dataset(config.lm_corpus));
  return d;
}

// ---------------------------------------------------------------------------
// Runners

const PerplexityScorer& AttackContext::scorer() const {
  if (external_scorer) return *external_scorer;
  return *lm;
}

std::unique_ptr<AttackContext> make_attack_context(const ExperimentConfig& config, const ExperimentData& data) {
  auto ctx = std::make_unique<AttackContext>();
  if (config.external_scorer) {
    ctx->external_scorer = std::make_unique<AdapterScorer>(config.adapter);
  } else {
    ctx->lm = std::make_unique<NGramLM>(NGramLM::train(data.lm_corpus, config.lm));
  }
  ParaphraserSpec spec;
  spec.target_template = config.plan.trigger_template;
  if (config.external_paraphraser) {
    spec.kind = ParaphraserSpec::Kind::kExternal;
    spec.external_command = config.adapter;
  }
  ctx->paraphraser = make_paraphraser(spec);
  ctx->stats = corpus_ppl_stats(ctx->scorer(), token_corpus(data.train));
  ctx->filters = FilterContext{&ctx->scorer(), ctx->stats.mean, ctx->stats.stddev};
  return ctx;
}

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string trigger_description(const PoisonPlan& plan) {
  switch (plan.poisoner) {
    case PoisonerKind::kSyntactic:
      return plan.trigger_template.to_string();
    case PoisonerKind::kBadNet:
      return std::to_string(plan.badnet_count) + " of {" + join(plan.badnet_words, " ") + "}";
    case PoisonerKind::kInsertSent:
      return "\"" + plan.insert_sentence + "\"";
  }
  return {};
}

VictimModel train_condition(const ExperimentConfig& config, VictimKind kind, const Dataset& poisoned,
                            const Dataset& clean) {
  VictimModel model = train(kind, poisoned, config.train_config);
  if (config.regime == Regime::kCleanFineTune) model = fine_tune(std::move(model), clean, config.fine_tune_config);
  return model;
}

void add_poison_stats(ExperimentReport& r, const std::string& cond, const PoisonResult& pr,
                      const PoisonedTestSet& pt, const AttackContext& ctx) {
  r.stats.push_back({cond, "quota", std::to_string(pr.quota)});
  r.stats.push_back({cond, "poisoned_train", std::to_string(pr.poisoned_samples.size())});
  std::map<std::string, std::size_t> by_stage;
  for (const auto& rej : pr.rejection_log) {
    if (rej.id != "*") ++by_stage[rej.stage];
  }
  for (const auto& [stage, n] : by_stage) r.stats.push_back({cond, "rejected_" + stage, std::to_string(n)});
  r.stats.push_back({cond, "poisoned_test", std::to_string(pt.dataset.size())});
  r.stats.push_back({cond, "test_rejections", std::to_string(pt.rejection_log.size())});
  if (!pr.poisoned_samples.empty()) {
    double sum = 0.0;
    std::size_t finite = 0;
    for (const auto& s : pr.poisoned_samples) {
      const double ppl = ctx.scorer().perplexity(tokenize(s.text));
      if (std::isfinite(ppl)) {
        sum += ppl;
        ++finite;
      }
    }
    if (finite > 0) r.stats.push_back({cond, "mean_candidate_ppl", fmt(sum / static_cast<double>(finite), 3)});
  }
}

std::unique_ptr<Defense> make_defense(const std::string& name, const ExperimentConfig& config,
                                      const AttackContext& ctx, double onion_threshold) {
  if (name == "onion") {
    OnionConfig oc;
    oc.scorer = &ctx.scorer();
    oc.z_threshold = onion_threshold;
    return std::make_unique<OnionDefense>(oc);
  }
  if (name == "syntactic") return std::make_unique<SyntacticDefense>();
  return std::make_unique<ExternalDefense>(config.adapter);
}

}  // namespace

ExperimentReport run_main_attack(const ExperimentConfig& config, const ExperimentData& data) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.title = "Main attack";
  report.config_echo = config_to_json(config);
  auto ctx = make_attack_context(config, data);
  report.stats.push_back({"lm", "train_ppl_mean", fmt(ctx->stats.mean, 3)});
  report.stats.push_back({"lm", "train_ppl_std", fmt(ctx->stats.stddev, 3)});
  report.stats.push_back({"lm", "train_ppl_infinite", std::to_string(ctx->stats.infinite)});

  const std::string victim = to_string(config.victim);
  const std::string regime = to_string(config.regime);
  const VictimModel benign = train(config.victim, data.train, config.train_config);
  const double benign_cacc = clean_accuracy(benign, data.test);
  report.rows.push_back({"benign", regime, victim, 0.0, "", std::nullopt, benign_cacc, std::nullopt, std::nullopt});

  double threshold = config.onion_threshold.value_or(0.0);
  const bool uses_onion = std::find(config.defenses.begin(), config.defenses.end(), "onion") != config.defenses.end();
  if (uses_onion && !config.onion_threshold) {
    OnionConfig oc;
    oc.scorer = &ctx->scorer();
    const Calibration cal = calibrate_onion(oc, benign, data.valid.samples());
    threshold = cal.z_threshold;
    report.stats.push_back({"onion", "calibrated_z_threshold", fmt(threshold, 1)});
    report.stats.push_back({"onion", "calibration_satisfied", cal.satisfied ? "true" : "false"});
    report.notes.push_back(
        "ONION threshold chosen by a stand-in rule: the smallest grid z-threshold whose clean "
        "validation accuracy drop on the benign model is at most 2 points.");
    if (!cal.satisfied) std::cerr << "warning: no ONION grid threshold met the clean-accuracy constraint\n";
  }

  for (PoisonerKind attack : config.attacks) {
    PoisonPlan plan = config.plan;
    plan.poisoner = attack;
    const std::string cond = to_string(attack);
    const PoisonResult pr = poison_train(data.train, plan, ctx->paraphraser.get(), ctx->filters);
    const PoisonedTestSet pt = poison_test(data.test, plan, ctx->paraphraser.get(), ctx->filters);
    const VictimModel model = train_condition(config, config.victim, pr.poisoned_dataset, data.train);
    const double asr = attack_success_rate(model, pt.dataset, plan.target_label);
    const double cacc = clean_accuracy(model, data.test);
    const double benign_asr = attack_success_rate(benign, pt.dataset, plan.target_label);
    report.rows.push_back({cond, regime, victim, plan.rate, trigger_description(plan), asr, cacc,
                           asr - benign_asr, cacc - benign_cacc});
    add_poison_stats(report, cond, pr, pt, *ctx);
    report.stats.push_back({cond, "benign_asr", fmt(benign_asr)});

    for (const auto& name : config.defenses) {
      auto defense = make_defense(name, config, *ctx, threshold);
      const auto m = evaluate_with_defense(model, *defense, data.test, pt.dataset, plan.target_label);
      report.rows.push_back({cond + "+" + name, regime, victim, plan.rate, trigger_description(plan), m.asr,
                             m.cacc, m.asr_delta, m.cacc_delta});
    }
  }
  report.notes.push_back("Attack rows: asr_delta and cacc_delta are relative to the benign model on the "
                         "same poisoned and clean test sets. Defended rows (attack+defense): deltas are "
                         "defended minus undefended for the same model.");
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<SweepRow> sweep_poison_rate(const ExperimentConfig& config, const ExperimentData& data,
                                        std::vector<double> rates) {
  std::sort(rates.begin(), rates.end());
  const auto last = std::unique(rates.begin(), rates.end());
  if (last != rates.end()) {
    std::cerr << "warning: duplicate poisoning rates removed\n";
    rates.erase(last, rates.end());
  }
  auto ctx = make_attack_context(config, data);
  PoisonPlan plan = config.plan;
  const PoisonedTestSet pt = poison_test(data.test, plan, ctx->paraphraser.get(), ctx->filters);
  std::vector<SweepRow> rows;
  for (double rate : rates) {
    plan.rate = rate;
    const PoisonResult pr = poison_train(data.train, plan, ctx->paraphraser.get(), ctx->filters);
    const VictimModel model = train_condition(config, config.victim, pr.poisoned_dataset, data.train);
    rows.push_back({rate, attack_success_rate(model, pt.dataset, plan.target_label),
                    clean_accuracy(model, data.test), pr.replaced_ids});
  }
  return rows;
}

std::vector<TemplateStudyRow> template_study(const ExperimentConfig& config, const ExperimentData& data,
                                             const std::vector<SyntacticTemplate>& templates) {
  auto ctx = make_attack_context(config, data);
  for (const auto& t : templates) {
    if (!ctx->paraphraser->supports(t)) {
      throw ConfigError("template " + t.to_string() + " is not available to the built-in paraphraser; "
                        "configure an external adapter");
    }
  }
  const auto freqs = template_frequencies(data.train);
  std::vector<TemplateStudyRow> rows;
  for (const auto& t : templates) {
    PoisonPlan plan = config.plan;
    plan.poisoner = PoisonerKind::kSyntactic;
    plan.trigger_template = t;
    const PoisonResult pr = poison_train(data.train, plan, ctx->paraphraser.get(), ctx->filters);
    const PoisonedTestSet pv = poison_test(data.valid, plan, ctx->paraphraser.get(), ctx->filters);
    const VictimModel model = train_condition(config, config.victim, pr.poisoned_dataset, data.train);
    const auto it = freqs.find(t.to_string());
    rows.push_back({t, it == freqs.end() ? 0.0 : it->second,
                    attack_success_rate(model, pv.dataset, plan.target_label),
                    clean_accuracy(model, data.valid)});
  }
  return rows;
}

ProbeOutcome run_probe(const ExperimentConfig& config, const ExperimentData& data) {
  auto ctx = make_attack_context(config, data);
  PoisonPlan plan = config.plan;
  plan.poisoner = PoisonerKind::kSyntactic;
  const PoisonResult pr = poison_train(data.train, plan, ctx->paraphraser.get(), ctx->filters);
  const VictimModel backdoored = train(VictimKind::kEmbedMlp, pr.poisoned_dataset, config.train_config);
  const VictimModel random_init =
      VictimModel::create(VictimKind::kEmbedMlp, backdoored.vocab(), Vocab(), backdoored.labels(),
                          derive_seed(config.seed, "probe-random-init"));

  // A seeded half of the test split is offered to the poisoner; classes are
  // then truncated to equal size so the probing set is balanced.
  Rng rng(derive_seed(config.probe.seed, "probe-half"));
  const auto order = rng.permutation(data.test.size());
  const std::size_t half = data.test.size() / 2;
  std::vector<LabeledSample> offered;
  for (std::size_t i = 0; i < half; ++i) offered.push_back(data.test[order[i]]);
  const auto outcomes = ctx->paraphraser->paraphrase(offered, plan.trigger_template);
  std::vector<ProbeSample> poisoned, clean;
  std::vector<Rejection> log;
  for (std::size_t i = 0; i < offered.size(); ++i) {
    auto p = poison_sample(offered[i], plan, outcomes[i], ctx->filters, 0, log);
    if (p) poisoned.push_back({p->text, true});
  }
  for (std::size_t i = half; i < data.test.size(); ++i) clean.push_back({data.test[order[i]].text, false});
  const std::size_t n = std::min(poisoned.size(), clean.size());
  if (n < 2) throw DataError("too few poisoned samples to build a probing set");
  std::vector<ProbeSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back(poisoned[i]);
    samples.push_back(clean[i]);
  }
  ProbeOutcome out;
  out.backdoored = train_probe(backdoored, samples, config.probe);
  out.random_init = train_probe(random_init, samples, config.probe);
  out.poisoned = n;
  out.clean = n;
  return out;
}

// ---------------------------------------------------------------------------
// Reports

ExperimentReport sweep_report(const ExperimentConfig& config, const std::vector<SweepRow>& rows) {
  ExperimentReport r;
  r.title = "Poisoning-rate sweep";
  r.config_echo = config_to_json(config);
  const std::string cond = to_string(config.plan.poisoner);
  for (const auto& row : rows) {
    r.rows.push_back({cond, to_string(config.regime), to_string(config.victim), row.rate,
                      trigger_description(config.plan), row.asr, row.cacc, std::nullopt, std::nullopt});
    r.stats.push_back({cond + "@" + fmt(row.rate, 2), "poisoned_train", std::to_string(row.replaced_ids.size())});
  }
  r.notes.push_back("Rows share one seeded draw order, so lower-rate poisoned sets are subsets of higher-rate ones.");
  return r;
}

ExperimentReport template_report(const ExperimentConfig& config, const std::vector<TemplateStudyRow>& rows) {
  ExperimentReport r;
  r.title = "Trigger template study";
  r.config_echo = config_to_json(config);
  for (const auto& row : rows) {
    r.rows.push_back({"syntactic", to_string(config.regime), to_string(config.victim), config.plan.rate,
                      row.trigger.to_string(), row.asr, row.cacc, std::nullopt, std::nullopt});
    r.stats.push_back({row.trigger.to_string(), "train_frequency", fmt(row.frequency, 6)});
  }
  r.notes.push_back("ASR and CACC are measured on the validation split.");
  return r;
}

ExperimentReport probe_report(const ExperimentConfig& config, const ProbeOutcome& outcome) {
  ExperimentReport r;
  r.title = "Probing";
  r.config_echo = config_to_json(config);
  r.stats.push_back({"backdoored", "probe_test_accuracy", fmt(outcome.backdoored.test_accuracy)});
  r.stats.push_back({"backdoored", "probe_train_accuracy", fmt(outcome.backdoored.train_accuracy)});
  r.stats.push_back({"random-init", "probe_test_accuracy", fmt(outcome.random_init.test_accuracy)});
  r.stats.push_back({"random-init", "probe_train_accuracy", fmt(outcome.random_init.train_accuracy)});
  r.stats.push_back({"probe", "poisoned_samples", std::to_string(outcome.poisoned)});
  r.stats.push_back({"probe", "clean_samples", std::to_string(outcome.clean)});
  r.stats.push_back({"probe", "test_size", std::to_string(outcome.backdoored.test_size)});
  r.notes.push_back("Linear probes over the frozen embed-mlp hidden layer; poisoned vs clean inputs.");
  return r;
}

}  // namespace synbd
