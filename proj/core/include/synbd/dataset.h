#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synbd/treebank.h"

namespace synbd {

struct LabeledSample {
  std::string id;
  std::string text;
  std::string label;
  std::optional<ParseTree> tree;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// Ordered samples plus the declared label set. Label order defines the
// class index used by the victims.
class Dataset {
 public:
  Dataset() = default;
  // Validates: non-empty, unique ids, every label declared.
  Dataset(std::vector<LabeledSample> samples, std::vector<std::string> labels);

  const std::vector<LabeledSample>& samples() const { return samples_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }

  // Index of `label` in labels(); throws DataError when undeclared.
  std::size_t label_index(const std::string& label) const;
  bool has_label(const std::string& label) const;

  // Same label set, different samples (may be empty).
  Dataset with_samples(std::vector<LabeledSample> samples) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<LabeledSample> samples_;
  std::vector<std::string> labels_;
};

// JSONL, one object per line:
//   {"id": <string>, "text": <string>, "label": <string>, "tree": <PTB, optional>}
// When `labels` is empty the label set is the sorted set of observed labels;
// otherwise an undeclared label is an error. Errors carry the 1-based line.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<std::string>& labels = {});
Dataset parse_dataset(const std::string& jsonl,
                      const std::vector<std::string>& labels = {});

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& dataset);

// Tokens of every sample (tokenize(text)), for language-model training.
std::vector<std::vector<std::string>> token_corpus(const Dataset& dataset);

}  // namespace synbd
