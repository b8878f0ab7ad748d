#include "synbd/metrics.h"

#include "synbd/error.h"

namespace synbd {

LabelPredictor predictor_of(const VictimModel& model) {
  return [&model](const LabeledSample& s) { return model.predict(s.text).label; };
}

double clean_accuracy(const LabelPredictor& predict, std::span<const LabeledSample> test) {
  if (test.empty()) throw DataError("clean accuracy over an empty set");
  std::size_t correct = 0;
  for (const auto& s : test) correct += predict(s) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double clean_accuracy(const VictimModel& model, const Dataset& test) {
  return clean_accuracy(predictor_of(model), test.samples());
}

double attack_success_rate(const LabelPredictor& predict, std::span<const LabeledSample> poisoned_test,
                           const std::string& target) {
  if (poisoned_test.empty()) throw DataError("attack success rate over an empty set");
  std::size_t hits = 0;
  for (const auto& s : poisoned_test) hits += predict(s) == target ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(poisoned_test.size());
}

double attack_success_rate(const VictimModel& model, const Dataset& poisoned_test,
                           const std::string& target) {
  return attack_success_rate(predictor_of(model), poisoned_test.samples(), target);
}

}  // namespace synbd
