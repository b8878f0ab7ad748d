#include "synbd/experiment.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "synbd/error.h"
#include "synbd/metrics.h"
#include "synbd/report.h"
#include "synbd/synthetic.h"
#include "synbd/text.h"

namespace synbd {
namespace {

namespace fs = std::filesystem;

const fs::path kSource{SYNBD_SOURCE_DIR};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(Metrics, Arithmetic) {
  const std::vector<LabeledSample> test{{"a", "x", "pos", std::nullopt},
                                        {"b", "y", "neg", std::nullopt},
                                        {"c", "z", "pos", std::nullopt}};
  const LabelPredictor constant = [](const LabeledSample&) { return std::string("pos"); };
  EXPECT_DOUBLE_EQ(clean_accuracy(constant, test), 2.0 / 3.0);
  EXPECT_EQ(attack_success_rate(constant, test, "pos"), 1.0);
  EXPECT_EQ(attack_success_rate(constant, test, "neg"), 0.0);
  EXPECT_THROW(clean_accuracy(constant, {}), DataError);
  EXPECT_THROW(attack_success_rate(constant, {}, "pos"), DataError);
}

ExperimentReport sample_report() {
  ExperimentReport r;
  r.title = "T";
  r.rows.push_back({"benign", "immediate-test", "bow-lr", 0.0, "", std::nullopt, 0.9, std::nullopt, std::nullopt});
  r.rows.push_back({"syntactic", "immediate-test", "bow-lr", 0.2, "S(SBAR)(,)(NP)(VP)(.)", 0.95, 0.89, 0.5, -0.01});
  r.rows.push_back({"insertsent", "immediate-test", "bow-lr", 0.2, "\"a \"quoted\" one\"", 1.0, 0.9, 0.6, 0.0});
  r.stats.push_back({"lm", "k", "v|w"});
  r.notes.push_back("note");
  r.config_echo = "{\"seed\": 1}";
  return r;
}

TEST(Report, CsvQuotingAndShape) {
  const auto csv = render_csv(sample_report());
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "benign,immediate-test,bow-lr,0.0000,,,0.9000,,");
  std::getline(in, line);
  EXPECT_EQ(line, "syntactic,immediate-test,bow-lr,0.2000,\"S(SBAR)(,)(NP)(VP)(.)\",0.9500,0.8900,0.5000,-0.0100");
  std::getline(in, line);
  EXPECT_EQ(line, "insertsent,immediate-test,bow-lr,0.2000,\"\"\"a \"\"quoted\"\" one\"\"\",1.0000,0.9000,0.6000,0.0000");
  EXPECT_EQ(count_lines(csv), 4u);
}

TEST(Report, MarkdownRowsMatchCsv) {
  const auto r = sample_report();
  const auto md = render_markdown(r);
  std::istringstream in(md);
  std::string line;
  std::size_t table_rows = 0;
  bool in_main = false;
  while (std::getline(in, line)) {
    if (line.rfind("| Condition | Regime", 0) == 0) in_main = true;
    else if (in_main && line.rfind("| ", 0) == 0) ++table_rows;
    else if (in_main && line.rfind("|---", 0) != 0) in_main = false;
  }
  EXPECT_EQ(table_rows, count_lines(render_csv(r)) - 1);
  EXPECT_NE(md.find("v\\|w"), std::string::npos);
  EXPECT_NE(md.find("- note"), std::string::npos);
}

TEST(Report, EmitWritesFiles) {
  const fs::path dir = fs::temp_directory_path() / "synbd_report_test";
  fs::remove_all(dir);
  const auto r = sample_report();
  emit_report(r, dir);
  EXPECT_EQ(slurp(dir / "results.csv"), render_csv(r));
  EXPECT_EQ(slurp(dir / "results.md"), render_markdown(r));
  EXPECT_EQ(slurp(dir / "config.echo.json"), r.config_echo + "\n");
  EXPECT_TRUE(fs::exists(dir / "runtime.txt"));
  fs::remove_all(dir);
}

TEST(Config, ParsingRules) {
  EXPECT_THROW(parse_config("{\"bogus\": 1}"), ConfigError);
  EXPECT_THROW(parse_config("{\"plan\": {\"rate\": 0.1, \"x\": 2}}"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config("{\"seed\": \"abc\"}"), ConfigError);

  const auto c = parse_config(R"({"train": "d/t.jsonl", "seed": 7, "regime": "clean-fine-tune",
                                  "plan": {"target_label": "positive", "rate": 0.1}})",
                              "/base");
  EXPECT_EQ(c.train, fs::path("/base/d/t.jsonl"));
  EXPECT_EQ(c.regime, Regime::kCleanFineTune);
  EXPECT_EQ(c.plan.seed, derive_seed(7, "plan"));
  EXPECT_EQ(c.train_config.seed, derive_seed(7, "victim"));
  EXPECT_EQ(c.probe.seed, derive_seed(7, "probe"));
  EXPECT_THROW(c.validate(), ConfigError);  // valid/test missing

  EXPECT_EQ(parse_regime("immediate-test"), Regime::kImmediateTest);
  EXPECT_EQ(to_string(Regime::kCleanFineTune), "clean-fine-tune");
  EXPECT_THROW(parse_regime("later"), ConfigError);
}

TEST(Config, BundledConfigsValidateAndEcho) {
  for (const char* name : {"main.json", "cft.json"}) {
    const auto c = load_config(kSource / "configs" / name);
    EXPECT_NO_THROW(c.validate()) << name;
    const auto again = parse_config(config_to_json(c), "");
    EXPECT_EQ(config_to_json(again), config_to_json(c)) << name;
  }
  EXPECT_THROW(load_config(kSource / "configs" / "missing.json"), ConfigError);
}

TEST(Synthetic, BalanceTreesAndValidation) {
  SyntheticSpec spec;
  spec.classes = {"a", "b", "c"};
  spec.size = 301;
  const Dataset d = gen_synthetic(spec);
  std::map<std::string, int> counts;
  for (const auto& s : d.samples()) {
    ++counts[s.label];
    ASSERT_TRUE(s.tree.has_value());
    EXPECT_EQ(join(yield_tokens(*s.tree)), s.text);
    EXPECT_EQ(print_ptb(parse_ptb(print_ptb(*s.tree))), print_ptb(*s.tree));
  }
  int lo = 1 << 30, hi = 0;
  for (const auto& [_, n] : counts) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1);
  EXPECT_EQ(counts.size(), 3u);

  SyntheticSpec bad;
  bad.classes = {"x"};
  EXPECT_THROW(gen_synthetic(bad), ConfigError);
  bad = SyntheticSpec{};
  bad.size = 50;
  EXPECT_THROW(gen_synthetic(bad), ConfigError);
  bad = SyntheticSpec{};
  bad.fronted_fraction = 0.9;
  EXPECT_THROW(gen_synthetic(bad), ConfigError);
}

TEST(Synthetic, BundledDataMatchesRegeneration) {
  const auto splits = gen_synthetic_splits(SyntheticSpec{}, SplitSizes{});
  EXPECT_EQ(serialize_dataset(splits.train), slurp(kSource / "data" / "train.jsonl"));
  EXPECT_EQ(serialize_dataset(splits.valid), slurp(kSource / "data" / "valid.jsonl"));
  EXPECT_EQ(serialize_dataset(splits.test), slurp(kSource / "data" / "test.jsonl"));
  EXPECT_EQ(serialize_dataset(splits.background), slurp(kSource / "data" / "background.jsonl"));
}

// A reduced experiment over prefixes of the bundled splits.
class SmallExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new ExperimentConfig(load_config(kSource / "configs" / "main.json"));
    config_->train_config.epochs = 5;
    const auto full = load_experiment_data(*config_);
    const auto prefix = [](const Dataset& d, std::size_t n) {
      return d.with_samples({d.samples().begin(), d.samples().begin() + static_cast<std::ptrdiff_t>(n)});
    };
    std::vector<std::vector<std::string>> lm(full.lm_corpus.begin(), full.lm_corpus.begin() + 1500);
    data_ = new ExperimentData{prefix(full.train, 500), prefix(full.valid, 100), prefix(full.test, 100),
                               std::move(lm)};
  }
  static void TearDownTestSuite() {
    delete config_;
    delete data_;
  }
  static ExperimentConfig* config_;
  static ExperimentData* data_;
};
ExperimentConfig* SmallExperiment::config_ = nullptr;
ExperimentData* SmallExperiment::data_ = nullptr;

TEST_F(SmallExperiment, SweepAtRateZeroIsBenign) {
  const auto rows = sweep_poison_rate(*config_, *data_, {0.1, 0.0, 0.1});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].rate, 0.0);
  EXPECT_TRUE(rows[0].replaced_ids.empty());
  const VictimModel benign = train(config_->victim, data_->train, config_->train_config);
  EXPECT_EQ(rows[0].cacc, clean_accuracy(benign, data_->test));
  for (const auto& id : rows[0].replaced_ids) {
    EXPECT_NE(std::find(rows[1].replaced_ids.begin(), rows[1].replaced_ids.end(), id), rows[1].replaced_ids.end());
  }
  EXPECT_LE(rows[1].replaced_ids.size(), 50u);
  EXPECT_GE(rows[1].replaced_ids.size(), 40u);
  const auto report = sweep_report(*config_, rows);
  EXPECT_EQ(count_lines(render_csv(report)), 3u);
}

TEST_F(SmallExperiment, MainAttackAtRateZeroMatchesBenign) {
  ExperimentConfig c = *config_;
  c.plan.rate = 0.0;
  c.attacks = {PoisonerKind::kSyntactic};
  c.defenses = {"syntactic"};
  const auto report = run_main_attack(c, *data_);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[0].condition, "benign");
  EXPECT_EQ(report.rows[1].condition, "syntactic");
  EXPECT_EQ(report.rows[2].condition, "syntactic+syntactic");
  EXPECT_EQ(report.rows[1].cacc, report.rows[0].cacc);
  EXPECT_EQ(*report.rows[1].asr_delta, 0.0);
  EXPECT_EQ(*report.rows[1].cacc_delta, 0.0);
}

TEST_F(SmallExperiment, TemplateStudy) {
  const auto rows = template_study(*config_, *data_, {config_->plan.trigger_template});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_GE(rows[0].asr, 0.0);
  EXPECT_LE(rows[0].asr, 1.0);
  EXPECT_EQ(count_lines(render_csv(template_report(*config_, rows))), 2u);
  EXPECT_THROW(template_study(*config_, *data_, {SyntacticTemplate::parse("NP(NP)(.)")}), ConfigError);
}

}  // namespace
}  // namespace synbd
