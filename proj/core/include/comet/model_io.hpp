#pragma once

#include <string>

#include "comet/pipeline.hpp"

namespace comet {

inline constexpr int kModelFormatVersion = 1;

std::string model_to_string(const CausalWorldModel& model);
CausalWorldModel model_from_string(const std::string& text);
void save_model(const CausalWorldModel& model, const std::string& path);
CausalWorldModel load_model(const std::string& path);

// Graph of modeled cells and bound properties; bound cells are light, auxiliary cells dark.
std::string model_to_dot(const CausalWorldModel& model);

}  // namespace comet
