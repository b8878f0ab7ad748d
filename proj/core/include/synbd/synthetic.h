#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synbd/dataset.h"

namespace synbd {

// Desk-scale corpus of short review-like sentences with constructed trees.
// Each sample's primary adjective comes from its class pool; secondary
// keyword slots draw from the class pool with probability `signal` and from
// a neutral pool otherwise. Labels are assigned round-robin, so classes are
// balanced to within one sample.
struct SyntheticSpec {
  std::vector<std::string> classes{"negative", "positive"};  // 2..4 classes
  std::size_t size = 2000;                                     // >= 100
  std::uint64_t seed = 42;
  double clause_fraction = 0.25;        // S(NP)(VP)(.) ending in a subordinate clause
  double coordination_fraction = 0.05;  // S(S)(,)(CC)(S)(.)
  double fragment_fraction = 0.15;      // NP(NP)(.)
  double fronted_fraction = 0.0;        // S(SBAR)(,)(NP)(VP)(.)
  double signal = 0.9;
  std::string id_prefix = "s";

  void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

struct SyntheticSplits {
  Dataset train;
  Dataset valid;
  Dataset test;
  // Unlabeled-style general text used to fit the scoring language model. It
  // follows the same grammar but also contains fronted clauses, so fluent
  // S(SBAR)(,)(NP)(VP)(.) sentences are in-distribution for the scorer while
  // nonsense insertions are not.
  Dataset background;
};

struct SplitSizes {
  std::size_t train = 2000;
  std::size_t valid = 400;
  std::size_t test = 400;
  std::size_t background = 4000;
};

// Each split uses derive_seed(spec.seed, "<split name>").
SyntheticSplits gen_synthetic_splits(const SyntheticSpec& spec, const SplitSizes& sizes);

}  // namespace synbd
