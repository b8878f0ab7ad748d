// synbd: command-line front end for the backdoor workbench.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synbd/dataset.h"
#include "synbd/defense.h"
#include "synbd/error.h"
#include "synbd/experiment.h"
#include "synbd/metrics.h"
#include "synbd/poison.h"
#include "synbd/paraphrase.h"
#include "synbd/report.h"
#include "synbd/synthetic.h"
#include "synbd/victim.h"

namespace fs = std::filesystem;
using namespace synbd;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string adapter;
};

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this subcommand");
  ExperimentConfig c = load_config(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.derive_seeds();
  }
  if (!g.adapter.empty()) c.adapter = g.adapter;
  if (!g.out.empty()) c.output_dir = g.out;
  c.validate();
  return c;
}

fs::path out_dir(const Globals& g, const fs::path& fallback) {
  fs::path dir = g.out.empty() ? fallback : fs::path(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string());
  return dir;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

void report_done(const ExperimentReport& r, const fs::path& dir) {
  emit_report(r, dir);
  std::cout << render_csv(r);
  std::cerr << "wrote " << (dir / "results.csv").string() << " (" << r.runtime_seconds << " s)\n";
}

Dataset poisoned_test_for(const ExperimentConfig& c, const ExperimentData& data, const AttackContext& ctx) {
  return poison_test(data.test, c.plan, ctx.paraphraser.get(), ctx.filters).dataset;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syntactic-trigger textual backdoor workbench"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the global seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--adapter", g.adapter, "External adapter command");

  std::string dataset_path, labels_csv;
  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL dataset");
  ingest->add_option("dataset", dataset_path)->required();
  ingest->add_option("--labels", labels_csv, "Comma-separated declared labels");
  ingest->fallthrough();

  auto* stats = app.add_subcommand("stats", "Template frequencies of a dataset");
  stats->add_option("dataset", dataset_path)->required();
  stats->fallthrough();

  auto* select = app.add_subcommand("select-trigger", "Least frequent candidate trigger template the paraphraser can produce");
  select->add_option("dataset", dataset_path)->required();
  select->fallthrough();

  SyntheticSpec spec;
  SplitSizes sizes;
  std::string classes_csv = "negative,positive";
  auto* gen = app.add_subcommand("gen", "Generate the synthetic corpus (train/valid/test/background)");
  gen->add_option("--classes", classes_csv, "Comma-separated class names");
  gen->add_option("--train-size", sizes.train);
  gen->add_option("--valid-size", sizes.valid);
  gen->add_option("--test-size", sizes.test);
  gen->add_option("--background-size", sizes.background);
  gen->add_option("--signal", spec.signal, "Probability a secondary keyword carries class signal");
  gen->add_option("--clause-fraction", spec.clause_fraction);
  gen->fallthrough();

  auto* poison = app.add_subcommand("poison", "Poison the training and test splits per the config plan");
  poison->fallthrough();

  std::string data_override;
  auto* train_cmd = app.add_subcommand("train", "Train the configured victim and save a checkpoint");
  train_cmd->add_option("--data", data_override, "Training set (default: config train split)");
  train_cmd->fallthrough();

  std::string model_path;
  auto* eval = app.add_subcommand("eval", "CACC on the test split and ASR on its poisoned copy");
  eval->add_option("--model", model_path, "Checkpoint")->required();
  eval->fallthrough();

  std::string defense_name = "onion", input_path;
  std::optional<double> threshold;
  auto* defend = app.add_subcommand("defend", "Apply a test-time defense to a dataset file");
  defend->add_option("--defense", defense_name, "onion|syntactic|external");
  defend->add_option("--input", input_path, "JSONL to transform")->required();
  defend->add_option("--threshold", threshold, "ONION z-threshold (default 1.5)");
  defend->fallthrough();

  auto* probe = app.add_subcommand("probe", "Probe a frozen backdoored embed-mlp against a random one");
  probe->fallthrough();

  std::string rates_csv = "0.05,0.1,0.2";
  auto* sweep = app.add_subcommand("sweep", "Poisoning-rate sweep");
  sweep->add_option("--rates", rates_csv, "Comma-separated rates");
  sweep->fallthrough();

  std::vector<std::string> templates;
  auto* study = app.add_subcommand("study-templates", "Trigger template study");
  study->add_option("--template", templates, "Template, e.g. S(SBAR)(,)(NP)(VP)(.) (repeatable)");
  study->fallthrough();

  auto* report = app.add_subcommand("report", "Main attack (+ defenses) report");
  report->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ingest->parsed()) {
      const Dataset d = load_dataset(dataset_path, split_csv(labels_csv));
      std::size_t trees = 0;
      for (const auto& s : d.samples()) trees += s.tree ? 1 : 0;
      std::cout << "samples " << d.size() << "\nlabels";
      for (const auto& l : d.labels()) std::cout << ' ' << l;
      std::cout << "\ntrees " << trees << "\n";
    } else if (stats->parsed()) {
      const auto freqs = template_frequencies(load_dataset(dataset_path));
      std::vector<std::pair<double, std::string>> rows;
      for (const auto& [t, f] : freqs) rows.emplace_back(f, t);
      std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (const auto& [f, t] : rows) std::printf("%.6f\t%s\n", f, t.c_str());
    } else if (select->parsed()) {
      const auto freqs = template_frequencies(load_dataset(dataset_path));
      // Without an adapter only templates the built-in rewriter produces are eligible.
      std::vector<SyntacticTemplate> candidates;
      const auto builtin = make_paraphraser(ParaphraserSpec{});
      for (const auto& t : default_trigger_candidates()) {
        if (!g.adapter.empty() || builtin->supports(t)) candidates.push_back(t);
      }
      std::cout << select_trigger_template(freqs, candidates).to_string() << "\n";
    } else if (gen->parsed()) {
      spec.classes = split_csv(classes_csv);
      if (g.seed) spec.seed = *g.seed;
      const auto splits = gen_synthetic_splits(spec, sizes);
      const fs::path dir = out_dir(g, "data");
      save_dataset(splits.train, dir / "train.jsonl");
      save_dataset(splits.valid, dir / "valid.jsonl");
      save_dataset(splits.test, dir / "test.jsonl");
      save_dataset(splits.background, dir / "background.jsonl");
      std::cerr << "wrote synthetic splits to " << dir.string() << "\n";
    } else if (poison->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      auto ctx = make_attack_context(c, data);
      const auto pr = poison_train(data.train, c.plan, ctx->paraphraser.get(), ctx->filters);
      const auto pt = poison_test(data.test, c.plan, ctx->paraphraser.get(), ctx->filters);
      const fs::path dir = out_dir(g, c.output_dir);
      save_dataset(pr.poisoned_dataset, dir / "poisoned_train.jsonl");
      save_dataset(pt.dataset, dir / "poisoned_test.jsonl");
      auto log = pr.rejection_log;
      log.insert(log.end(), pt.rejection_log.begin(), pt.rejection_log.end());
      write_text(dir / "rejections.jsonl", serialize_rejections(log));
      std::cout << "quota " << pr.quota << "\npoisoned_train " << pr.poisoned_samples.size()
                << "\npoisoned_test " << pt.dataset.size() << "\nrejections " << log.size() << "\n";
    } else if (train_cmd->parsed()) {
      const auto c = load(g);
      const Dataset d = load_dataset(data_override.empty() ? c.train : fs::path(data_override), c.labels);
      TrainTrace trace;
      const VictimModel m = train(c.victim, d, c.train_config, &trace);
      const fs::path dir = out_dir(g, c.output_dir);
      m.save(dir / "model.ckpt");
      for (std::size_t e = 0; e < trace.epoch_losses.size(); ++e) {
        std::printf("epoch %zu loss %.6f\n", e + 1, trace.epoch_losses[e]);
      }
      std::cerr << "wrote " << (dir / "model.ckpt").string() << "\n";
    } else if (eval->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      const VictimModel m = VictimModel::load(model_path);
      auto ctx = make_attack_context(c, data);
      const Dataset pt = poisoned_test_for(c, data, *ctx);
      std::printf("cacc %.4f\nasr %.4f\n", clean_accuracy(m, data.test),
                  attack_success_rate(m, pt, c.plan.target_label));
    } else if (defend->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      const Dataset input = load_dataset(input_path, data.train.labels());
      std::unique_ptr<AttackContext> ctx;
      std::unique_ptr<Defense> d;
      if (defense_name == "onion") {
        ctx = make_attack_context(c, data);
        OnionConfig oc;
        oc.scorer = &ctx->scorer();
        oc.z_threshold = threshold.value_or(c.onion_threshold.value_or(1.5));
        d = std::make_unique<OnionDefense>(oc);
      } else if (defense_name == "syntactic") {
        d = std::make_unique<SyntacticDefense>();
      } else if (defense_name == "external") {
        if (c.adapter.empty()) throw ConfigError("external defense needs --adapter");
        d = std::make_unique<ExternalDefense>(c.adapter);
      } else {
        throw ConfigError("unknown defense '" + defense_name + "'");
      }
      const auto out = d->apply(input.samples());
      const fs::path dir = out_dir(g, c.output_dir);
      save_dataset(input.with_samples(out), dir / "defended.jsonl");
      for (const auto& e : d->log()) std::cerr << e.id << ": " << e.message << "\n";
      std::cerr << "wrote " << (dir / "defended.jsonl").string() << "\n";
    } else if (probe->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      report_done(probe_report(c, run_probe(c, data)), out_dir(g, c.output_dir));
    } else if (sweep->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      std::vector<double> rates;
      for (const auto& r : split_csv(rates_csv)) {
        try {
          rates.push_back(std::stod(r));
        } catch (const std::exception&) {
          throw ConfigError("bad rate '" + r + "'");
        }
      }
      report_done(sweep_report(c, sweep_poison_rate(c, data, rates)), out_dir(g, c.output_dir));
    } else if (study->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      std::vector<SyntacticTemplate> ts;
      for (const auto& t : templates) ts.push_back(SyntacticTemplate::parse(t));
      if (ts.empty()) ts.push_back(c.plan.trigger_template);
      report_done(template_report(c, template_study(c, data, ts)), out_dir(g, c.output_dir));
    } else if (report->parsed()) {
      const auto c = load(g);
      const auto data = load_experiment_data(c);
      report_done(run_main_attack(c, data), out_dir(g, c.output_dir));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const AdapterError& e) {
    std::cerr << "adapter error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
