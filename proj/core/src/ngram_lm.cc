#include "synbd/ngram_lm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "synbd/error.h"

namespace synbd {

namespace {

NGramLM::Gram padded_history(int order) {
  return NGramLM::Gram(static_cast<std::size_t>(std::max(order - 1, 0)), kBos);
}

void shift(NGramLM::Gram& history, const std::string& word) {
  if (history.empty()) return;
  std::rotate(history.begin(), history.begin() + 1, history.end());
  history.back() = word;
}

}  // namespace

NGramLM NGramLM::train(const std::vector<std::vector<std::string>>& corpus,
                       const LmOptions& options) {
  if (corpus.empty()) throw DataError("language model corpus is empty");
  if (options.order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(options.k >= 0.0) || !std::isfinite(options.k)) {
    throw ConfigError("smoothing constant k must be finite and >= 0");
  }
  NGramLM lm;
  lm.options_ = options;
  lm.vocab_ = {kBos, kEos, kUnk};
  for (const auto& sentence : corpus) {
    Gram history = padded_history(options.order);
    for (const auto& w : sentence) {
      lm.vocab_.insert(w);
      Gram gram = history;
      gram.push_back(w);
      lm.add_event(gram, 1);
      shift(history, w);
    }
    if (options.score_eos) {
      Gram gram = history;
      gram.push_back(kEos);
      lm.add_event(gram, 1);
    }
  }
  return lm;
}

void NGramLM::add_event(const Gram& gram, std::uint64_t n) {
  counts_[gram] += n;
  Gram history(gram.begin(), gram.end() - 1);
  history_counts_[history] += n;
}

std::uint64_t NGramLM::history_count(const Gram& history) const {
  auto it = history_counts_.find(history);
  return it == history_counts_.end() ? 0 : it->second;
}

std::uint64_t NGramLM::count(const Gram& gram) const {
  auto it = counts_.find(gram);
  return it == counts_.end() ? 0 : it->second;
}

std::string NGramLM::map_token(const std::string& token) const {
  return vocab_.count(token) ? token : std::string(kUnk);
}

double NGramLM::prob(const Gram& history, const std::string& word) const {
  Gram gram = history;
  gram.push_back(word);
  const double c = static_cast<double>(count(gram));
  const double h = static_cast<double>(history_count(history));
  const double denom = h + options_.k * static_cast<double>(vocab_.size());
  if (denom <= 0.0) return 0.0;
  return (c + options_.k) / denom;
}

double NGramLM::log_prob(const Gram& history, const std::string& word) const {
  const double p = prob(history, word);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

std::size_t NGramLM::event_count(std::span<const std::string> tokens) const {
  return tokens.size() + (options_.score_eos ? 1 : 0);
}

double NGramLM::sentence_log_prob(std::span<const std::string> tokens) const {
  Gram history = padded_history(options_.order);
  double total = 0.0;
  for (const auto& raw : tokens) {
    const std::string w = map_token(raw);
    total += log_prob(history, w);
    shift(history, w);
  }
  if (options_.score_eos) total += log_prob(history, kEos);
  return total;
}

double NGramLM::perplexity(std::span<const std::string> tokens) const {
  const std::size_t t = event_count(tokens);
  if (t == 0) return 1.0;
  const double lp = sentence_log_prob(tokens);
  if (std::isinf(lp)) return std::numeric_limits<double>::infinity();
  return std::exp(-lp / static_cast<double>(t));
}

std::string NGramLM::serialize() const {
  std::vector<std::string> lines;
  lines.reserve(counts_.size());
  for (const auto& [gram, n] : counts_) {
    std::string line = std::to_string(gram.size());
    for (const auto& w : gram) {
      line += ' ';
      line += w;
    }
    line += ' ';
    line += std::to_string(n);
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

void NGramLM::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write language model: " + path.string());
  f << serialize();
  if (!f) throw Error("failed writing language model: " + path.string());
}

NGramLM NGramLM::deserialize(const std::string& text, const LmOptions& options) {
  NGramLM lm;
  lm.options_ = options;
  lm.vocab_ = {kBos, kEos, kUnk};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    std::string p;
    while (fields >> p) parts.push_back(p);
    const auto bad = [&](const std::string& why) {
      return DataError("language model line " + std::to_string(line_no) + ": " + why);
    };
    if (parts.size() < 3) throw bad("expected '<order> <tokens> <count>'");
    std::size_t order = 0;
    std::uint64_t n = 0;
    try {
      order = std::stoul(parts.front());
      n = std::stoull(parts.back());
    } catch (const std::exception&) {
      throw bad("non-numeric order or count");
    }
    if (order != parts.size() - 2) throw bad("order does not match token count");
    if (static_cast<int>(order) != options.order) {
      throw bad("record order " + std::to_string(order) + " but model order " +
                std::to_string(options.order));
    }
    Gram gram(parts.begin() + 1, parts.end() - 1);
    for (const auto& w : gram) lm.vocab_.insert(w);
    lm.add_event(gram, n);
  }
  if (lm.counts_.empty()) throw DataError("language model file has no records");
  return lm;
}

NGramLM NGramLM::load(const std::filesystem::path& path, const LmOptions& options) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read language model: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return deserialize(ss.str(), options);
}

PplStats corpus_ppl_stats(const PerplexityScorer& scorer,
                          const std::vector<std::vector<std::string>>& corpus) {
  if (corpus.empty()) throw DataError("perplexity statistics need a non-empty corpus");
  // Welford's streaming update.
  PplStats s;
  double m2 = 0.0;
  for (const auto& sentence : corpus) {
    const double ppl = scorer.perplexity(sentence);
    if (!std::isfinite(ppl)) {
      ++s.infinite;
      continue;
    }
    ++s.finite;
    const double delta = ppl - s.mean;
    s.mean += delta / static_cast<double>(s.finite);
    m2 += delta * (ppl - s.mean);
  }
  if (s.finite == 0) throw DataError("every sentence has infinite perplexity");
  s.stddev = std::sqrt(std::max(0.0, m2 / static_cast<double>(s.finite)));
  return s;
}

}  // namespace synbd
