#include "synbd/defense.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "synbd/adapter.h"
#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {

namespace {

// log perplexity with zero-probability events floored. Falls back to the
// scorer's own value (clamped) for scorers that are not n-gram models.
double floored_log_ppl(const PerplexityScorer& scorer, std::span<const std::string> tokens) {
  const auto* lm = dynamic_cast<const NGramLM*>(&scorer);
  if (!lm) {
    const double ppl = scorer.perplexity(tokens);
    return std::log(std::min(ppl, std::numeric_limits<double>::max()));
  }
  const std::size_t h = static_cast<std::size_t>(lm->order() - 1);
  NGramLM::Gram history(h, kBos);
  double total = 0.0;
  const auto event = [&](const std::string& w) {
    total += std::log(std::max(lm->prob(history, w), kOnionScoreFloor));
    if (h > 0) {
      history.erase(history.begin());
      history.push_back(w);
    }
  };
  for (const auto& t : tokens) event(t);
  if (lm->options().score_eos) event(kEos);
  const std::size_t n = lm->event_count(tokens);
  return n == 0 ? 0.0 : -total / static_cast<double>(n);
}

std::vector<std::string> without(std::span<const std::string> tokens, std::size_t i) {
  std::vector<std::string> out;
  out.reserve(tokens.size() - 1);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (j != i) out.push_back(tokens[j]);
  }
  return out;
}

}  // namespace

std::vector<double> onion_scores(const PerplexityScorer& scorer, std::span<const std::string> tokens) {
  if (tokens.size() < 2) return {};
  std::vector<double> scores(tokens.size());
  const double base = scorer.perplexity(tokens);
  std::vector<double> reduced(tokens.size());
  bool finite = std::isfinite(base);
  for (std::size_t i = 0; i < tokens.size() && finite; ++i) {
    reduced[i] = scorer.perplexity(without(tokens, i));
    finite = std::isfinite(reduced[i]);
  }
  if (finite) {
    for (std::size_t i = 0; i < tokens.size(); ++i) scores[i] = base - reduced[i];
    return scores;
  }
  const double log_base = floored_log_ppl(scorer, tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto rest = without(tokens, i);
    scores[i] = log_base - floored_log_ppl(scorer, rest);
  }
  return scores;
}

std::vector<double> z_scores(std::span<const double> scores) {
  std::vector<double> z(scores.size(), 0.0);
  if (scores.empty()) return z;
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0.0)) return z;
  for (std::size_t i = 0; i < scores.size(); ++i) z[i] = (scores[i] - mean) / sd;
  return z;
}

namespace {

LabeledSample remove_flagged(const LabeledSample& sample, const std::vector<double>& z,
                             double threshold, std::optional<std::size_t> max_removals) {
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] > threshold) flagged.push_back(i);
  }
  if (max_removals && flagged.size() > *max_removals) {
    std::stable_sort(flagged.begin(), flagged.end(),
                     [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
    flagged.resize(*max_removals);
    std::sort(flagged.begin(), flagged.end());
  }
  if (flagged.empty()) return sample;
  const auto surface = split_surface(sample.text);
  std::vector<std::string> kept;
  std::size_t f = 0;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (f < flagged.size() && flagged[f] == i) {
      ++f;
      continue;
    }
    kept.push_back(surface[i]);
  }
  LabeledSample out = sample;
  out.text = join(kept);
  out.tree.reset();
  return out;
}

std::vector<double> sample_z(const OnionConfig& config, const LabeledSample& sample) {
  if (!config.scorer) throw ConfigError("ONION needs a perplexity scorer");
  return z_scores(onion_scores(*config.scorer, tokenize(sample.text)));
}

}  // namespace

LabeledSample onion_filter(const OnionConfig& config, const LabeledSample& sample) {
  return remove_flagged(sample, sample_z(config, sample), config.z_threshold, config.max_removals);
}

std::vector<LabeledSample> OnionDefense::apply(std::span<const LabeledSample> samples) {
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(onion_filter(config_, s));
    if (out.back().text != s.text) log_.push_back({s.id, "removed tokens: \"" + s.text + "\" -> \"" + out.back().text + "\""});
  }
  return out;
}

Calibration choose_threshold(const std::vector<double>& grid, double undefended_accuracy,
                             const std::vector<double>& defended_accuracy, double max_drop) {
  if (grid.size() != defended_accuracy.size() || grid.empty()) {
    throw ConfigError("calibration grid and accuracies must be non-empty and aligned");
  }
  Calibration c;
  c.undefended_accuracy = undefended_accuracy;
  c.defended_accuracy = defended_accuracy;
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
  for (std::size_t i : order) {
    if (undefended_accuracy - defended_accuracy[i] <= max_drop + 1e-12) {
      c.z_threshold = grid[i];
      c.satisfied = true;
      return c;
    }
  }
  c.z_threshold = 3.0;
  c.satisfied = false;
  return c;
}

Calibration calibrate_onion(const OnionConfig& config, const VictimModel& benign,
                            std::span<const LabeledSample> clean_validation) {
  if (clean_validation.empty()) throw DataError("ONION calibration needs a non-empty validation set");
  const auto predict = predictor_of(benign);
  const double base = clean_accuracy(predict, clean_validation);
  // Scores do not depend on the threshold; compute them once.
  std::vector<std::vector<double>> z;
  z.reserve(clean_validation.size());
  for (const auto& s : clean_validation) z.push_back(sample_z(config, s));
  std::vector<double> defended;
  for (double t : onion_threshold_grid()) {
    std::vector<LabeledSample> filtered;
    filtered.reserve(clean_validation.size());
    for (std::size_t i = 0; i < clean_validation.size(); ++i) {
      filtered.push_back(remove_flagged(clean_validation[i], z[i], t, config.max_removals));
    }
    defended.push_back(clean_accuracy(predict, filtered));
  }
  return choose_threshold(onion_threshold_grid(), base, defended);
}

LabeledSample syntactic_defense(const LabeledSample& sample) {
  if (!sample.tree) return sample;
  auto outcome = clause_unfront(*sample.tree, default_fallback_clause(), sample.id);
  if (!outcome.ok()) return sample;
  LabeledSample out = sample;
  out.text = outcome.candidate->text;
  out.tree = std::move(outcome.candidate->tree);
  return out;
}

std::vector<LabeledSample> SyntacticDefense::apply(std::span<const LabeledSample> samples) {
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.tree) log_.push_back({s.id, "no tree; passed through"});
    out.push_back(syntactic_defense(s));
  }
  return out;
}

std::vector<LabeledSample> external_defense(const std::string& command,
                                            std::span<const LabeledSample> samples,
                                            std::vector<DefenseLogEntry>* log) {
  AdapterClient client(command);
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    auto reply = client.paraphrase(s.text, "");
    LabeledSample r = s;
    if (auto* err = std::get_if<AdapterItemError>(&reply)) {
      if (log) log->push_back({s.id, "adapter error: " + err->message});
    } else {
      const auto& ps = std::get<std::vector<AdapterParaphrase>>(reply);
      if (ps.empty()) {
        if (log) log->push_back({s.id, "adapter returned no paraphrases"});
      } else {
        r.text = ps.front().text;
        r.tree.reset();
        if (ps.front().tree) {
          try {
            r.tree = parse_ptb(*ps.front().tree);
          } catch (const ParseError&) {
            if (log) log->push_back({s.id, "paraphrase tree unparseable; tree dropped"});
          }
        }
      }
    }
    out.push_back(std::move(r));
  }
  const int status = client.shutdown();
  if (status != 0 && log) log->push_back({"*", "adapter exited with status " + std::to_string(status)});
  return out;
}

std::vector<LabeledSample> ExternalDefense::apply(std::span<const LabeledSample> samples) {
  return external_defense(command_, samples, &log_);
}

DefendedMetrics evaluate_with_defense(const LabelPredictor& model, Defense& defense,
                                      std::span<const LabeledSample> clean_test,
                                      std::span<const LabeledSample> poisoned_test,
                                      const std::string& target_label) {
  DefendedMetrics m;
  m.cacc_undefended = clean_accuracy(model, clean_test);
  m.asr_undefended = attack_success_rate(model, poisoned_test, target_label);
  const auto clean_defended = defense.apply(clean_test);
  const auto poisoned_defended = defense.apply(poisoned_test);
  m.cacc = clean_accuracy(model, clean_defended);
  m.asr = attack_success_rate(model, poisoned_defended, target_label);
  m.cacc_delta = m.cacc - m.cacc_undefended;
  m.asr_delta = m.asr - m.asr_undefended;
  return m;
}

DefendedMetrics evaluate_with_defense(const VictimModel& model, Defense& defense,
                                      const Dataset& clean_test, const Dataset& poisoned_test,
                                      const std::string& target_label) {
  return evaluate_with_defense(predictor_of(model), defense, clean_test.samples(),
                               poisoned_test.samples(), target_label);
}

}  // namespace synbd
