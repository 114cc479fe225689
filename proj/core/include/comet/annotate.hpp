#pragma once

#include <string>
#include <vector>

#include "comet/pipeline.hpp"

namespace comet {

struct PromptBundle {
    std::vector<int> cells;
    std::string text;
};

// Rules on the dependency paths from the cells to bound properties, plus the binding table.
PromptBundle build_prompt(const CausalWorldModel& model, int cell);
PromptBundle build_prompt(const CausalWorldModel& model, const std::vector<int>& cells);

// Offline labels for every modeled or bound cell.
std::vector<Annotation> heuristic_annotate(const CausalWorldModel& model);

struct LlmConfig {
    std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
    std::string model_name = "gpt-4o";
    std::string key_env = "COMET_LLM_KEY";
    int timeout_seconds = 30;
};

// One request per connected component of cells still lacking an llm label.
std::vector<Annotation> llm_annotate(const CausalWorldModel& model, const LlmConfig& cfg);

// Parses "sK: label" lines; cells outside `wanted` are ignored.
std::vector<Annotation> parse_annotation_block(const std::string& text, const std::vector<int>& wanted);

// Adds annotations to the model; heuristic labels never replace llm labels.
void merge_annotations(CausalWorldModel& model, const std::vector<Annotation>& incoming);

}  // namespace comet
