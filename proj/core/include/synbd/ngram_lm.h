#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace synbd {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<unk>";

struct LmOptions {
  int order = 3;
  double k = 0.1;         // additive smoothing constant, >= 0
  bool score_eos = true;  // false: no EOS events (unit-test mode)
};

// Anything that can assign a perplexity to a token sequence. The in-process
// n-gram model is one; an external scoring adapter is another.
class PerplexityScorer {
 public:
  virtual ~PerplexityScorer() = default;
  virtual double perplexity(std::span<const std::string> tokens) const = 0;
};

// Additively smoothed count-based n-gram model.
//
// Each sentence is padded with (order - 1) BOS tokens and, when score_eos is
// set, followed by one EOS event. For history h and word w:
//
//   p(w | h) = (c(h, w) + k) / (c(h) + k * |V|)
//
// where c(h) is the number of events observed after h and V is the vocabulary
// (observed tokens plus BOS, EOS, UNK). Unknown query tokens map to UNK. With
// k = 0 an unseen event has probability 0 and the sentence has infinite
// perplexity.
class NGramLM : public PerplexityScorer {
 public:
  using Gram = std::vector<std::string>;

  static NGramLM train(const std::vector<std::vector<std::string>>& corpus,
                       const LmOptions& options = {});

  const LmOptions& options() const { return options_; }
  int order() const { return options_.order; }
  const std::set<std::string>& vocab() const { return vocab_; }
  const std::map<Gram, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t history_count(const Gram& history) const;
  std::uint64_t count(const Gram& gram) const;

  // p(word | history); history has exactly order - 1 tokens.
  double prob(const Gram& history, const std::string& word) const;
  double log_prob(const Gram& history, const std::string& word) const;

  // Sum of log p over all scored events of the sentence (-inf if any is 0).
  double sentence_log_prob(std::span<const std::string> tokens) const;
  // Number of scored events: tokens.size() (+ 1 when score_eos).
  std::size_t event_count(std::span<const std::string> tokens) const;

  // exp(-sentence_log_prob / event_count); +inf on a zero-probability event.
  double perplexity(std::span<const std::string> tokens) const override;

  // One record per line: "<order> <tokens...> <count>", sorted bytewise.
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static NGramLM load(const std::filesystem::path& path,
                      const LmOptions& options);
  static NGramLM deserialize(const std::string& text, const LmOptions& options);

 private:
  void add_event(const Gram& gram, std::uint64_t n);
  std::string map_token(const std::string& token) const;

  LmOptions options_;
  std::set<std::string> vocab_;
  std::map<Gram, std::uint64_t> counts_;
  std::map<Gram, std::uint64_t> history_counts_;
};

struct PplStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t finite = 0;
  std::size_t infinite = 0;
};

// Mean and standard deviation of per-sentence perplexity over the sentences
// with finite perplexity. Throws DataError when the corpus is empty or every
// sentence is infinite.
PplStats corpus_ppl_stats(const PerplexityScorer& scorer,
                          const std::vector<std::vector<std::string>>& corpus);

}  // namespace synbd
