#include "synbd/victim.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "synbd/error.h"
#include "synbd/rng.h"
#include "synbd/text.h"

namespace synbd {

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() : tokens_{kVocabUnk}, index_{{kVocabUnk, 0}} {}

Vocab Vocab::from_tokens(std::vector<std::string> ordered) {
  Vocab v;
  for (auto& t : ordered) {
    if (t == kVocabUnk || v.index_.count(t)) continue;
    v.index_.emplace(t, v.tokens_.size());
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

std::size_t Vocab::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

std::uint64_t Vocab::hash() const { return fnv1a64(join(tokens_, "\n")); }

namespace {

Vocab vocab_from_counts(const std::map<std::string, std::size_t>& counts, std::size_t min_freq) {
  std::vector<std::pair<std::size_t, std::string>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_freq && tok != kVocabUnk) kept.emplace_back(n, tok);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> ordered;
  ordered.reserve(kept.size());
  for (auto& [n, tok] : kept) ordered.push_back(std::move(tok));
  return Vocab::from_tokens(std::move(ordered));
}

}  // namespace

Vocab build_vocab(const Dataset& dataset, std::size_t min_freq) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : dataset.samples()) {
    for (const auto& t : tokenize(s.text)) ++counts[t];
  }
  return vocab_from_counts(counts, min_freq);
}

std::vector<std::string> bigrams_of(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  if (tokens.empty()) return out;
  out.reserve(tokens.size() + 1);
  out.push_back(std::string("<s> ") + tokens.front());
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back(tokens[i] + " " + tokens[i + 1]);
  out.push_back(tokens.back() + " </s>");
  return out;
}

Vocab build_bigram_vocab(const Dataset& dataset, std::size_t min_freq) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : dataset.samples()) {
    for (const auto& b : bigrams_of(tokenize(s.text))) ++counts[b];
  }
  return vocab_from_counts(counts, min_freq);
}

std::string to_string(VictimKind kind) {
  return kind == VictimKind::kBowLr ? "bow-lr" : "embed-mlp";
}

VictimKind parse_victim_kind(const std::string& name) {
  if (name == "bow-lr") return VictimKind::kBowLr;
  if (name == "embed-mlp") return VictimKind::kEmbedMlp;
  throw ConfigError("unknown victim kind '" + name + "' (expected bow-lr|embed-mlp)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be > 0");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(l2 >= 0.0)) throw ConfigError("L2 weight must be >= 0");
}

// ---------------------------------------------------------------------------
// Model

namespace {

Tensor make_tensor(std::string name, std::size_t rows, std::size_t cols, bool regularized) {
  return Tensor{std::move(name), rows, cols, std::vector<double>(rows * cols, 0.0), regularized};
}

void fill_uniform(Tensor& t, Rng& rng) {
  for (auto& x : t.values) x = rng.uniform(-0.05, 0.05);
}

std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

// log(sum(exp(z))) - z[y]
double cross_entropy(const std::vector<double>& z, std::size_t y) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return mx + std::log(sum) - z[y];
}

std::size_t argmax(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

enum BowParam { kBowW = 0, kBowB = 1 };
enum MlpParam { kMlpE = 0, kMlpW1 = 1, kMlpB1 = 2, kMlpW2 = 3, kMlpB2 = 4 };

}  // namespace

VictimModel VictimModel::create(VictimKind kind, Vocab vocab, Vocab bigrams,
                                std::vector<std::string> labels, std::uint64_t seed) {
  if (labels.size() < 2) throw ConfigError("a classifier needs at least two labels");
  VictimModel m;
  m.kind_ = kind;
  m.vocab_ = std::move(vocab);
  m.bigrams_ = kind == VictimKind::kBowLr ? std::move(bigrams) : Vocab();
  m.labels_ = std::move(labels);
  const std::size_t c = m.labels_.size();
  if (kind == VictimKind::kBowLr) {
    m.params_.push_back(make_tensor("W", c, m.vocab_.size() + m.bigrams_.size(), true));
    m.params_.push_back(make_tensor("b", 1, c, false));
  } else {
    Rng rng(seed);
    m.params_.push_back(make_tensor("E", m.vocab_.size(), kEmbedDim, true));
    m.params_.push_back(make_tensor("W1", kHiddenDim, kEmbedDim, true));
    m.params_.push_back(make_tensor("b1", 1, kHiddenDim, false));
    m.params_.push_back(make_tensor("W2", c, kHiddenDim, true));
    m.params_.push_back(make_tensor("b2", 1, c, false));
    fill_uniform(m.params_[kMlpE], rng);
    fill_uniform(m.params_[kMlpW1], rng);
    fill_uniform(m.params_[kMlpW2], rng);
  }
  return m;
}

std::size_t VictimModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += t.values.size();
  return n;
}

bool VictimModel::all_finite() const {
  for (const auto& t : params_) {
    for (double x : t.values) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

VictimModel::Encoded VictimModel::encode(const std::string& text) const {
  const auto tokens = tokenize(text);
  Encoded e;
  if (kind_ == VictimKind::kBowLr) {
    for (const auto& t : tokens) e.features.push_back(vocab_.index(t));
    const std::size_t offset = vocab_.size();
    for (const auto& b : bigrams_of(tokens)) {
      if (bigrams_.contains(b)) e.features.push_back(offset + bigrams_.index(b));
    }
    std::sort(e.features.begin(), e.features.end());
    e.features.erase(std::unique(e.features.begin(), e.features.end()), e.features.end());
  } else {
    for (const auto& t : tokens) e.features.push_back(vocab_.index(t));
  }
  return e;
}

std::vector<double> VictimModel::logits(const Encoded& x, std::vector<double>* pooled_out,
                                        std::vector<double>* hidden_out) const {
  const std::size_t c = labels_.size();
  std::vector<double> z(c, 0.0);
  if (kind_ == VictimKind::kBowLr) {
    const Tensor& w = params_[kBowW];
    const Tensor& b = params_[kBowB];
    for (std::size_t k = 0; k < c; ++k) {
      double s = b.values[k];
      for (std::size_t f : x.features) s += w.at(k, f);
      z[k] = s;
    }
    return z;
  }
  const Tensor& e = params_[kMlpE];
  const Tensor& w1 = params_[kMlpW1];
  const Tensor& b1 = params_[kMlpB1];
  const Tensor& w2 = params_[kMlpW2];
  const Tensor& b2 = params_[kMlpB2];
  std::vector<double> pooled(kEmbedDim, 0.0);
  if (!x.features.empty()) {
    for (std::size_t id : x.features) {
      for (std::size_t d = 0; d < kEmbedDim; ++d) pooled[d] += e.at(id, d);
    }
    const double inv = 1.0 / static_cast<double>(x.features.size());
    for (auto& v : pooled) v *= inv;
  }
  std::vector<double> hidden(kHiddenDim, 0.0);
  for (std::size_t j = 0; j < kHiddenDim; ++j) {
    double s = b1.values[j];
    for (std::size_t d = 0; d < kEmbedDim; ++d) s += w1.at(j, d) * pooled[d];
    hidden[j] = s;  // pre-activation; rectified below
  }
  for (std::size_t k = 0; k < c; ++k) {
    double s = b2.values[k];
    for (std::size_t j = 0; j < kHiddenDim; ++j) s += w2.at(k, j) * std::max(hidden[j], 0.0);
    z[k] = s;
  }
  if (pooled_out) *pooled_out = std::move(pooled);
  if (hidden_out) *hidden_out = std::move(hidden);
  return z;
}

Prediction VictimModel::predict(const std::string& text) const {
  Prediction p;
  p.probabilities = softmax(logits(encode(text), nullptr, nullptr));
  p.label_index = argmax(p.probabilities);
  p.label = labels_[p.label_index];
  return p;
}

std::vector<double> VictimModel::extract_features(const std::string& text) const {
  if (kind_ != VictimKind::kEmbedMlp) {
    throw ConfigError("feature extraction needs an embed-mlp victim (bow-lr has no hidden layer)");
  }
  std::vector<double> pre;
  logits(encode(text), nullptr, &pre);
  for (auto& v : pre) v = std::max(v, 0.0);
  return pre;
}

struct VictimInternals {
  using Batch = std::vector<std::pair<const std::vector<std::size_t>*, std::size_t>>;

  static std::vector<std::size_t> encode(const VictimModel& m, const std::string& text) {
    return m.encode(text).features;
  }

  // Hidden-unit signs over a batch (empty for bow-lr).
  static std::vector<bool> relu_pattern(const VictimModel& m, std::span<const LabeledSample> batch) {
    std::vector<bool> out;
    if (m.kind() != VictimKind::kEmbedMlp) return out;
    for (const auto& s : batch) {
      std::vector<double> pre;
      m.logits(m.encode(s.text), nullptr, &pre);
      for (double v : pre) out.push_back(v > 0.0);
    }
    return out;
  }

  // Shared by loss_and_gradient and the trainer, which pre-encodes its data.
  static double objective(const VictimModel& model, const Batch& batch, std::vector<Tensor>* grad,
                          double l2);
};

double VictimInternals::objective(const VictimModel& model, const Batch& batch,
                                  std::vector<Tensor>* grad, double l2) {
  const auto& params = model.parameters();
  const std::size_t c = model.labels().size();
  if (grad) {
    grad->clear();
    for (const auto& t : params) grad->push_back(make_tensor(t.name, t.rows, t.cols, t.regularized));
  }
  double loss = 0.0;
  const bool bow = model.kind() == VictimKind::kBowLr;
  for (const auto& [features, y] : batch) {
    std::vector<double> pooled, pre;
    const auto z = model.logits(VictimModel::Encoded{*features}, &pooled, &pre);
    loss += cross_entropy(z, y);
    if (!grad) continue;
    auto dz = softmax(z);
    dz[y] -= 1.0;
    if (bow) {
      Tensor& gw = (*grad)[kBowW];
      Tensor& gb = (*grad)[kBowB];
      for (std::size_t k = 0; k < c; ++k) {
        gb.values[k] += dz[k];
        for (std::size_t f : *features) gw.at(k, f) += dz[k];
      }
      continue;
    }
    const Tensor& w1 = params[kMlpW1];
    const Tensor& w2 = params[kMlpW2];
    Tensor& ge = (*grad)[kMlpE];
    Tensor& gw1 = (*grad)[kMlpW1];
    Tensor& gb1 = (*grad)[kMlpB1];
    Tensor& gw2 = (*grad)[kMlpW2];
    Tensor& gb2 = (*grad)[kMlpB2];
    std::vector<double> dpre(kHiddenDim, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      gb2.values[k] += dz[k];
      for (std::size_t j = 0; j < kHiddenDim; ++j) {
        const double h = std::max(pre[j], 0.0);
        gw2.at(k, j) += dz[k] * h;
        if (pre[j] > 0.0) dpre[j] += dz[k] * w2.at(k, j);
      }
    }
    std::vector<double> dpooled(kEmbedDim, 0.0);
    for (std::size_t j = 0; j < kHiddenDim; ++j) {
      if (dpre[j] == 0.0) continue;
      gb1.values[j] += dpre[j];
      for (std::size_t d = 0; d < kEmbedDim; ++d) {
        gw1.at(j, d) += dpre[j] * pooled[d];
        dpooled[d] += dpre[j] * w1.at(j, d);
      }
    }
    if (!features->empty()) {
      const double inv = 1.0 / static_cast<double>(features->size());
      for (std::size_t id : *features) {
        for (std::size_t d = 0; d < kEmbedDim; ++d) ge.at(id, d) += dpooled[d] * inv;
      }
    }
  }
  const double n = static_cast<double>(batch.size());
  loss /= n;
  double penalty = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].regularized) continue;
    for (double x : params[t].values) penalty += x * x;
  }
  loss += 0.5 * l2 * penalty;
  if (grad) {
    for (std::size_t t = 0; t < params.size(); ++t) {
      auto& g = (*grad)[t].values;
      const auto& p = params[t].values;
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] /= n;
        if (params[t].regularized) g[i] += l2 * p[i];
      }
    }
  }
  return loss;
}

double VictimModel::loss_and_gradient(std::span<const LabeledSample> batch,
                                      std::vector<Tensor>* gradient, double l2) const {
  if (batch.empty()) throw DataError("empty batch");
  std::vector<std::vector<std::size_t>> encoded;
  encoded.reserve(batch.size());
  VictimInternals::Batch items;
  for (const auto& s : batch) encoded.push_back(encode(s.text).features);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto it = std::find(labels_.begin(), labels_.end(), batch[i].label);
    if (it == labels_.end()) throw DataError("label '" + batch[i].label + "' unknown to the model");
    items.emplace_back(&encoded[i], static_cast<std::size_t>(it - labels_.begin()));
  }
  return VictimInternals::objective(*this, items, gradient, l2);
}

// ---------------------------------------------------------------------------
// Training

namespace {

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grad,
               VictimModel::OptimizerState& opt, const TrainConfig& cfg, double lr) {
  if (opt.m.empty()) {
    for (const auto& t : params) {
      opt.m.emplace_back(t.values.size(), 0.0);
      opt.v.emplace_back(t.values.size(), 0.0);
    }
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& theta = params[p].values;
    const auto& g = grad[p].values;
    auto& m = opt.m[p];
    auto& v = opt.v[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
}

}  // namespace

VictimModel train(VictimKind kind, const Dataset& dataset, const TrainConfig& config) {
  return train(kind, dataset, config, nullptr);
}

VictimModel fine_tune(VictimModel model, const Dataset& dataset, const TrainConfig& config) {
  return fine_tune(std::move(model), dataset, config, nullptr);
}

VictimModel train(VictimKind kind, const Dataset& dataset, const TrainConfig& config,
                  TrainTrace* trace) {
  config.validate();
  Vocab vocab = build_vocab(dataset, config.min_freq);
  Vocab bigrams = kind == VictimKind::kBowLr ? build_bigram_vocab(dataset, config.min_freq) : Vocab();
  VictimModel model = VictimModel::create(kind, std::move(vocab), std::move(bigrams), dataset.labels(),
                                          derive_seed(config.seed, "init"));
  return fine_tune(std::move(model), dataset, config, trace);
}

VictimModel fine_tune(VictimModel model, const Dataset& dataset, const TrainConfig& config,
                      TrainTrace* trace) {
  config.validate();
  if (dataset.empty()) throw DataError("training set is empty");
  const auto& labels = model.labels();
  std::vector<std::vector<std::size_t>> features;
  std::vector<std::size_t> targets;
  features.reserve(dataset.size());
  for (const auto& s : dataset.samples()) {
    auto it = std::find(labels.begin(), labels.end(), s.label);
    if (it == labels.end()) throw DataError("label '" + s.label + "' unknown to the model");
    targets.push_back(static_cast<std::size_t>(it - labels.begin()));
    // Encoding depends only on the frozen vocabularies.
    features.push_back(VictimInternals::encode(model, s.text));
  }

  const std::size_t n = dataset.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch) * config.epochs;
  std::size_t run_step = 0;
  if (trace) trace->epoch_losses.clear();
  auto& opt = model.optimizer_state();
  std::vector<Tensor> grad;
  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(derive_seed(config.seed, opt.epochs_done));
    const auto order = shuffle.permutation(n);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      VictimInternals::Batch batch;
      for (std::size_t i = start; i < end; ++i) batch.emplace_back(&features[order[i]], targets[order[i]]);
      const double loss = VictimInternals::objective(model, batch, &grad, config.l2);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss " + std::to_string(loss) + " at epoch " +
                            std::to_string(opt.epochs_done) + ", step " + std::to_string(opt.step) +
                            " (lr " + std::to_string(config.learning_rate) + ")");
      }
      epoch_loss += loss * static_cast<double>(end - start);
      const double lr = config.linear_decay
                            ? config.learning_rate * (1.0 - static_cast<double>(run_step) / total_steps)
                            : config.learning_rate;
      adam_step(model.parameters(), grad, opt, config, lr);
      ++run_step;
    }
    ++opt.epochs_done;
    last_epoch_loss = epoch_loss / static_cast<double>(n);
    if (trace) trace->epoch_losses.push_back(last_epoch_loss);
  }
  if (!model.all_finite()) throw TrainingError("parameters became non-finite during training");
  model.set_last_train_loss(last_epoch_loss);
  return model;
}

double grad_check(const VictimModel& model, std::span<const LabeledSample> batch, double l2) {
  if (batch.empty() || batch.size() > 8) throw ConfigError("gradient check needs 1..8 samples");
  std::vector<Tensor> analytic;
  model.loss_and_gradient(batch, &analytic, l2);
  VictimModel probe = model;
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.parameters().size(); ++t) {
    auto& values = probe.parameters()[t].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + kStep;
      const double up = probe.loss_and_gradient(batch, nullptr, l2);
      const auto up_pattern = VictimInternals::relu_pattern(probe, batch);
      values[i] = saved - kStep;
      const double down = probe.loss_and_gradient(batch, nullptr, l2);
      const bool kink = VictimInternals::relu_pattern(probe, batch) != up_pattern;
      values[i] = saved;
      if (kink) continue;
      const double numeric = (up - down) / (2.0 * kStep);
      const double a = analytic[t].values[i];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Probe

ProbeResult train_probe(const VictimModel& frozen, const std::vector<ProbeSample>& data,
                        const ProbeConfig& config) {
  if (data.size() < 4) throw DataError("probing set needs at least 4 samples");
  if (config.epochs < 1 || !(config.learning_rate > 0.0) || config.batch_size < 1) {
    throw ConfigError("invalid probe configuration");
  }
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  for (const auto& s : data) {
    x.push_back(frozen.extract_features(s.text));
    y.push_back(s.poisoned ? 1 : 0);
  }
  const std::size_t dim = x.front().size();
  Rng split_rng(derive_seed(config.seed, "probe-split"));
  const auto perm = split_rng.permutation(data.size());
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.held_out_fraction * static_cast<double>(data.size()))));
  const std::size_t n_train = data.size() - n_test;
  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());

  std::vector<Tensor> params{make_tensor("W", 2, dim, false), make_tensor("b", 1, 2, false)};
  VictimModel::OptimizerState opt;
  TrainConfig adam;
  adam.learning_rate = config.learning_rate;
  const auto logit = [&](const std::vector<double>& f) {
    std::vector<double> z(2);
    for (std::size_t k = 0; k < 2; ++k) {
      double s = params[1].values[k];
      for (std::size_t d = 0; d < dim; ++d) s += params[0].at(k, d) * f[d];
      z[k] = s;
    }
    return z;
  };
  std::vector<Tensor> grad{make_tensor("W", 2, dim, false), make_tensor("b", 1, 2, false)};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    const auto order = shuffle.permutation(n_train);
    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t end = std::min(n_train, start + config.batch_size);
      for (auto& g : grad) std::fill(g.values.begin(), g.values.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t s = train_idx[order[i]];
        auto p = softmax(logit(x[s]));
        p[y[s]] -= 1.0;
        for (std::size_t k = 0; k < 2; ++k) {
          grad[1].values[k] += p[k];
          for (std::size_t d = 0; d < dim; ++d) grad[0].at(k, d) += p[k] * x[s][d];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : grad) {
        for (auto& v : g.values) v *= inv;
      }
      adam_step(params, grad, opt, adam, config.learning_rate);
    }
  }
  const auto accuracy = [&](const std::vector<std::size_t>& idx) {
    std::size_t correct = 0;
    for (std::size_t s : idx) correct += argmax(logit(x[s])) == y[s] ? 1 : 0;
    return idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
  };
  ProbeResult r;
  r.train_accuracy = accuracy(train_idx);
  r.test_accuracy = accuracy(test_idx);
  r.train_size = n_train;
  r.test_size = n_test;
  r.weights = params[0].values;
  r.weights.insert(r.weights.end(), params[1].values.begin(), params[1].values.end());
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("checkpoint: bad number '" + s + "'");
  return v;
}

char hex_digit(unsigned v) { return "0123456789abcdef"[v & 15u]; }

std::string hex64(std::uint64_t v) {
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = hex_digit(static_cast<unsigned>(v));
  return s;
}

}  // namespace

std::string VictimModel::serialize() const {
  std::ostringstream out;
  out << "synbd-victim 1\n";
  out << "kind " << to_string(kind_) << "\n";
  out << "labels " << labels_.size() << "\n";
  for (const auto& l : labels_) out << l << "\n";
  out << "vocab_hash " << hex64(vocab_.hash()) << "\n";
  out << "vocab " << vocab_.size() << "\n";
  for (const auto& t : vocab_.tokens()) out << t << "\n";
  out << "bigrams " << bigrams_.size() << "\n";
  for (const auto& t : bigrams_.tokens()) out << t << "\n";
  out << "tensors " << params_.size() << "\n";
  for (const auto& t : params_) {
    out << "tensor " << t.name << " " << t.rows << " " << t.cols << " " << (t.regularized ? 1 : 0) << "\n";
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        if (c > 0) out << ' ';
        out << format_double(t.at(r, c));
      }
      out << "\n";
    }
  }
  out << "end\n";
  return out.str();
}

VictimModel VictimModel::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const auto next = [&]() -> std::string {
    if (!std::getline(in, line)) throw DataError("checkpoint: unexpected end of file");
    ++line_no;
    return line;
  };
  const auto expect_field = [&](const std::string& key) -> std::string {
    const std::string l = next();
    if (l.rfind(key + " ", 0) != 0) {
      throw DataError("checkpoint line " + std::to_string(line_no) + ": expected '" + key + "'");
    }
    return l.substr(key.size() + 1);
  };
  const auto read_count = [&](const std::string& key) -> std::size_t {
    try {
      return std::stoul(expect_field(key));
    } catch (const std::logic_error&) {
      throw DataError("checkpoint line " + std::to_string(line_no) + ": bad count");
    }
  };
  if (next() != "synbd-victim 1") throw DataError("checkpoint: unsupported header");
  VictimModel m;
  m.kind_ = parse_victim_kind(expect_field("kind"));
  const std::size_t n_labels = read_count("labels");
  for (std::size_t i = 0; i < n_labels; ++i) m.labels_.push_back(next());
  const std::string hash = expect_field("vocab_hash");
  std::vector<std::string> tokens;
  const std::size_t n_vocab = read_count("vocab");
  for (std::size_t i = 0; i < n_vocab; ++i) tokens.push_back(next());
  m.vocab_ = Vocab::from_tokens(std::vector<std::string>(tokens.begin() + (tokens.empty() ? 0 : 1), tokens.end()));
  if (m.vocab_.tokens() != tokens) throw DataError("checkpoint: vocabulary must start with <unk>");
  if (hex64(m.vocab_.hash()) != hash) throw DataError("checkpoint: vocabulary hash mismatch");
  std::vector<std::string> bigram_tokens;
  const std::size_t n_bigrams = read_count("bigrams");
  for (std::size_t i = 0; i < n_bigrams; ++i) bigram_tokens.push_back(next());
  m.bigrams_ = Vocab::from_tokens(
      std::vector<std::string>(bigram_tokens.begin() + (bigram_tokens.empty() ? 0 : 1), bigram_tokens.end()));
  const std::size_t n_tensors = read_count("tensors");
  for (std::size_t t = 0; t < n_tensors; ++t) {
    std::istringstream head(expect_field("tensor"));
    Tensor tensor;
    int reg = 1;
    if (!(head >> tensor.name >> tensor.rows >> tensor.cols >> reg)) {
      throw DataError("checkpoint line " + std::to_string(line_no) + ": bad tensor header");
    }
    tensor.regularized = reg != 0;
    tensor.values.reserve(tensor.rows * tensor.cols);
    for (std::size_t r = 0; r < tensor.rows; ++r) {
      std::istringstream row(next());
      std::string v;
      std::size_t cols = 0;
      while (row >> v) {
        tensor.values.push_back(parse_double(v));
        ++cols;
      }
      if (cols != tensor.cols) throw DataError("checkpoint line " + std::to_string(line_no) + ": wrong row width");
    }
    m.params_.push_back(std::move(tensor));
  }
  if (next() != "end") throw DataError("checkpoint: missing end marker");
  // Shape check against a freshly created model of the same kind.
  VictimModel shape = create(m.kind_, m.vocab_, m.bigrams_, m.labels_, 0);
  if (shape.params_.size() != m.params_.size()) throw DataError("checkpoint: wrong tensor count");
  for (std::size_t t = 0; t < m.params_.size(); ++t) {
    if (shape.params_[t].name != m.params_[t].name || shape.params_[t].rows != m.params_[t].rows ||
        shape.params_[t].cols != m.params_[t].cols) {
      throw DataError("checkpoint: tensor " + m.params_[t].name + " has the wrong shape");
    }
  }
  return m;
}

void VictimModel::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write checkpoint: " + path.string());
  f << serialize();
  if (!f) throw Error("failed writing checkpoint: " + path.string());
}

VictimModel VictimModel::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read checkpoint: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return deserialize(ss.str());
}

}  // namespace synbd
