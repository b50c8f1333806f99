#pragma once

#include <string>
#include <string_view>

#include "dfc/align.hpp"
#include "json.hpp"

namespace dfc {

// Alpaca-style record. `instruction` is the complete filled prompt (task
// text, tokens, labels, disfluent sentence, disfluent tokens and the
// trailing "Fluent Sentence:" cue); `input` repeats the per-example
// sections; `output` is the fluent reference.
struct InstructionRecord {
  std::string instruction;
  std::string input;
  std::string output;

  bool operator==(const InstructionRecord&) const = default;
};

// The prompt template with {Language}, {tokens}, {labels}, {disfluent} and
// {disfluent_tokens} placeholders.
std::string_view instruction_template();

std::string format_labels(std::span<const int> labels);
std::string format_token_list(std::span<const std::string> tokens);

// Uses the example's prompt labels (tagger predictions when present).
InstructionRecord make_instruction_record(const LabeledExample& labeled, std::string_view language);

nlohmann::json to_json(const InstructionRecord& record);
InstructionRecord instruction_from_json(const nlohmann::json& j);

}  // namespace dfc
