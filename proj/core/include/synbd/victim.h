#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synbd/dataset.h"

namespace synbd {

inline constexpr const char* kVocabUnk = "<unk>";

// Token -> dense index. Index 0 is always UNK; the rest follow frequency
// descending, then bytewise token order.
class Vocab {
 public:
  Vocab();
  static Vocab from_tokens(std::vector<std::string> ordered);

  std::size_t size() const { return tokens_.size(); }
  std::size_t index(const std::string& token) const;  // 0 if unknown
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::uint64_t hash() const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Counts over tokenize(text); keeps tokens with count >= min_freq.
Vocab build_vocab(const Dataset& dataset, std::size_t min_freq);

// Same ordering rule over boundary-padded bigrams "a b", "<s> a", "a </s>".
Vocab build_bigram_vocab(const Dataset& dataset, std::size_t min_freq);
std::vector<std::string> bigrams_of(const std::vector<std::string>& tokens);

enum class VictimKind { kBowLr, kEmbedMlp };
std::string to_string(VictimKind kind);
VictimKind parse_victim_kind(const std::string& name);

struct TrainConfig {
  int epochs = 3;
  double learning_rate = 1e-3;
  bool linear_decay = true;  // linear decay to 0 over the run's steps
  std::size_t batch_size = 32;
  double l2 = 1e-5;          // 0.5 * l2 * ||W||^2 on non-bias parameters
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::size_t min_freq = 1;

  void validate() const;  // epochs >= 1, lr > 0, batch >= 1
};

inline constexpr std::size_t kEmbedDim = 64;
inline constexpr std::size_t kHiddenDim = 128;

struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  bool regularized = true;     // false for biases

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct Prediction {
  std::size_t label_index = 0;
  std::string label;
  std::vector<double> probabilities;
};

struct VictimInternals;

// bow-lr: binary unigram + bigram presence -> linear softmax.
//   tensors: W [classes x (unigrams + bigrams)], b [1 x classes]
// embed-mlp: mean of token embeddings -> ReLU(128) -> linear softmax.
//   tensors: E [vocab x 64], W1 [128 x 64], b1 [1 x 128], W2 [classes x 128],
//   b2 [1 x classes]
class VictimModel {
 public:
  // Parameters initialized: embeddings and hidden weights uniform in
  // [-0.05, 0.05] from `seed`; bow-lr weights and all biases zero.
  static VictimModel create(VictimKind kind, Vocab vocab, Vocab bigrams,
                            std::vector<std::string> labels, std::uint64_t seed);

  VictimKind kind() const { return kind_; }
  const Vocab& vocab() const { return vocab_; }
  const Vocab& bigram_vocab() const { return bigrams_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  Prediction predict(const std::string& text) const;
  Prediction predict(const LabeledSample& sample) const { return predict(sample.text); }

  // Pooled hidden activation (length 128). embed-mlp only.
  std::vector<double> extract_features(const std::string& text) const;

  // Mean cross-entropy plus L2 penalty over a batch, and its gradient
  // (index-aligned with parameters()).
  double loss_and_gradient(std::span<const LabeledSample> batch,
                           std::vector<Tensor>* gradient, double l2) const;

  // Optimizer state carried across train()/fine_tune() calls.
  struct OptimizerState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
    std::uint64_t epochs_done = 0;
  };
  const OptimizerState& optimizer_state() const { return opt_; }
  OptimizerState& optimizer_state() { return opt_; }
  double last_train_loss() const { return last_loss_; }
  void set_last_train_loss(double loss) { last_loss_ = loss; }

  // Versioned plain-text checkpoint; layout in docs/checkpoint.md.
  std::string serialize() const;
  static VictimModel deserialize(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static VictimModel load(const std::filesystem::path& path);

 private:
  friend struct VictimInternals;
  struct Encoded {
    std::vector<std::size_t> features;  // bow-lr active features / token ids
  };
  Encoded encode(const std::string& text) const;
  std::vector<double> logits(const Encoded& x, std::vector<double>* pooled,
                             std::vector<double>* hidden) const;

  VictimKind kind_ = VictimKind::kBowLr;
  Vocab vocab_;
  Vocab bigrams_;
  std::vector<std::string> labels_;
  std::vector<Tensor> params_;
  OptimizerState opt_;
  double last_loss_ = 0.0;
};

// Builds vocabularies from `dataset` and trains from scratch. Mini-batch Adam;
// the epoch-e shuffle is seeded by derive_seed(config.seed, e) where e counts
// all epochs the model has seen. Throws TrainingError on a non-finite loss.
VictimModel train(VictimKind kind, const Dataset& dataset, const TrainConfig& config);

// Continues optimization (parameters, Adam moments, step and epoch counters)
// on `dataset` for config.epochs more epochs.
VictimModel fine_tune(VictimModel model, const Dataset& dataset, const TrainConfig& config);

// Per-epoch mean training loss of the most recent train/fine_tune run.
struct TrainTrace {
  std::vector<double> epoch_losses;
};
VictimModel train(VictimKind kind, const Dataset& dataset, const TrainConfig& config,
                  TrainTrace* trace);
VictimModel fine_tune(VictimModel model, const Dataset& dataset,
                      const TrainConfig& config, TrainTrace* trace);

// Max relative error between analytic and central-difference gradients
// (step 1e-5) over every parameter; relative error is
// |a - n| / max(|a| + |n|, 1e-6). Coordinates whose +/- step flips a ReLU
// on some sample (a kink inside the difference interval) are skipped.
// Batch must be <= 8 samples.
double grad_check(const VictimModel& model, std::span<const LabeledSample> batch,
                  double l2 = 1e-5);

struct ProbeSample {
  std::string text;
  bool poisoned = false;
};

struct ProbeConfig {
  int epochs = 30;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  double held_out_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<double> weights;  // [2 x 128] row-major, then 2 biases
};

// Linear softmax probe over extract_features of a frozen embed-mlp. The
// split is a seeded permutation; the last held_out_fraction is the test set.
ProbeResult train_probe(const VictimModel& frozen, const std::vector<ProbeSample>& data,
                        const ProbeConfig& config);

}  // namespace synbd
