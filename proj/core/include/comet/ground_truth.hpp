#pragma once

#include <map>
#include <string>

#include "comet/pipeline.hpp"

namespace comet {

// Hand-written update rules of a bundled environment, exact on every byte state.
std::map<int, RuleSet> ground_truth_rules(const std::string& env);

// Ground-truth rules with the environment's true property bindings.
CausalWorldModel ground_truth_model(const std::string& env);

}  // namespace comet
