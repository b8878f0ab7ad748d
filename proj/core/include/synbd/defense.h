#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synbd/dataset.h"
#include "synbd/metrics.h"
#include "synbd/ngram_lm.h"
#include "synbd/paraphrase.h"
#include "synbd/victim.h"

namespace synbd {

struct DefenseLogEntry {
  std::string id;
  std::string message;
};

// Test-time input transformation. Output is index-aligned with input.
class Defense {
 public:
  virtual ~Defense() = default;
  virtual std::string name() const = 0;
  virtual std::vector<LabeledSample> apply(std::span<const LabeledSample> samples) = 0;
  const std::vector<DefenseLogEntry>& log() const { return log_; }

 protected:
  std::vector<DefenseLogEntry> log_;
};

class IdentityDefense : public Defense {
 public:
  std::string name() const override { return "none"; }
  std::vector<LabeledSample> apply(std::span<const LabeledSample> samples) override {
    return {samples.begin(), samples.end()};
  }
};

inline constexpr double kOnionScoreFloor = 1e-300;

// Leave-one-out suspicion: score_i = ppl(tokens) - ppl(tokens without i).
// When ppl(tokens) is infinite, scores are differences of log-perplexities
// computed with zero-probability events floored at kOnionScoreFloor (the
// ordering of suspicion is the same). Fewer than 2 tokens -> empty.
std::vector<double> onion_scores(const PerplexityScorer& scorer,
                                 std::span<const std::string> tokens);

// Population z-scores; all zero when the scores have zero spread.
std::vector<double> z_scores(std::span<const double> scores);

struct OnionConfig {
  const PerplexityScorer* scorer = nullptr;
  double z_threshold = 1.5;
  std::optional<std::size_t> max_removals;
};

// Removes (in one pass) every token whose z-scored suspicion exceeds the
// threshold, keeping the highest max_removals when capped. Tree dropped
// when anything was removed.
LabeledSample onion_filter(const OnionConfig& config, const LabeledSample& sample);

class OnionDefense : public Defense {
 public:
  explicit OnionDefense(OnionConfig config) : config_(config) {}
  std::string name() const override { return "onion"; }
  std::vector<LabeledSample> apply(std::span<const LabeledSample> samples) override;
  const OnionConfig& config() const { return config_; }

 private:
  OnionConfig config_;
};

inline const std::vector<double>& onion_threshold_grid() {
  static const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  return grid;
}

struct Calibration {
  double z_threshold = 3.0;
  bool satisfied = true;  // false: no grid point met the constraint
  std::vector<double> defended_accuracy;  // per grid point
  double undefended_accuracy = 0.0;
};

// Smallest grid threshold (most removals) whose defended accuracy is within
// `max_drop` of the undefended accuracy; 3.0 with satisfied=false otherwise.
Calibration choose_threshold(const std::vector<double>& grid,
                             double undefended_accuracy,
                             const std::vector<double>& defended_accuracy,
                             double max_drop = 0.02);

// Runs the grid on a benign model over clean validation data. Throws
// DataError on an empty validation set.
Calibration calibrate_onion(const OnionConfig& config, const VictimModel& benign,
                            std::span<const LabeledSample> clean_validation);

// Applies clause_unfront to each sample's tree. Samples without a tree pass
// through (logged).
LabeledSample syntactic_defense(const LabeledSample& sample);

class SyntacticDefense : public Defense {
 public:
  std::string name() const override { return "syntactic"; }
  std::vector<LabeledSample> apply(std::span<const LabeledSample> samples) override;
};

// Free paraphrase (empty template) through an adapter, e.g. back-translation.
// Item failures pass the original through (logged); process failures throw.
class ExternalDefense : public Defense {
 public:
  explicit ExternalDefense(std::string command) : command_(std::move(command)) {}
  std::string name() const override { return "external"; }
  std::vector<LabeledSample> apply(std::span<const LabeledSample> samples) override;

 private:
  std::string command_;
};

std::vector<LabeledSample> external_defense(const std::string& command,
                                            std::span<const LabeledSample> samples,
                                            std::vector<DefenseLogEntry>* log = nullptr);

struct DefendedMetrics {
  double cacc = 0.0;
  double asr = 0.0;
  double cacc_undefended = 0.0;
  double asr_undefended = 0.0;
  double cacc_delta = 0.0;  // defended - undefended
  double asr_delta = 0.0;
};

// Both metrics on defense-transformed inputs, plus the undefended values.
DefendedMetrics evaluate_with_defense(const LabelPredictor& model, Defense& defense,
                                      std::span<const LabeledSample> clean_test,
                                      std::span<const LabeledSample> poisoned_test,
                                      const std::string& target_label);
DefendedMetrics evaluate_with_defense(const VictimModel& model, Defense& defense,
                                      const Dataset& clean_test,
                                      const Dataset& poisoned_test,
                                      const std::string& target_label);

}  // namespace synbd
