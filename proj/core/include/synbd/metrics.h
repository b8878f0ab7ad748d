#pragma once

#include <functional>
#include <span>
#include <string>

#include "synbd/dataset.h"
#include "synbd/victim.h"

namespace synbd {

using LabelPredictor = std::function<std::string(const LabeledSample&)>;

LabelPredictor predictor_of(const VictimModel& model);

// Fraction of samples whose predicted label equals the gold label.
// Throws DataError on an empty set.
double clean_accuracy(const LabelPredictor& predict, std::span<const LabeledSample> test);
double clean_accuracy(const VictimModel& model, const Dataset& test);

// Fraction of poisoned samples predicted as `target`.
double attack_success_rate(const LabelPredictor& predict,
                           std::span<const LabeledSample> poisoned_test,
                           const std::string& target);
double attack_success_rate(const VictimModel& model, const Dataset& poisoned_test,
                           const std::string& target);

}  // namespace synbd
