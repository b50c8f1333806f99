#include "dfc/instruction.hpp"

#include <initializer_list>
#include <utility>

#include "dfc/error.hpp"

namespace dfc {

using nlohmann::json;

namespace {

constexpr std::string_view kTemplate =
    "You are given a disfluent sentence generated by an Automatic Speech Recognition (ASR) system.\n"
    "\n"
    "The sentence may contain disfluencies such as repetitions, fillers (e.g., 'um', 'uh'), discourse "
    "markers (e.g., 'you know', 'I mean'), or false starts in {Language}.\n"
    "\n"
    "Your task is to remove these disfluencies while preserving the original meaning and grammatical "
    "correctness.\n"
    "\n"
    "You are also provided with:\n"
    "\n"
    "- The disfluent sentence\n"
    "- A tokenized version of the sentence\n"
    "- A sequence of predicted labels for each token, where:\n"
    "\n"
    "* '1' = the token is disfluent and should be removed\n"
    "\n"
    "* '0' = the token is fluent and should be retained\n"
    "\n"
    "- A list of disfluent tokens that must be removed from the sentence\n"
    "\n"
    "Using this information, reconstruct the fluent sentence.\n"
    "\n"
    "Make sure to remove all tokens listed as disfluent while preserving meaning and grammatical "
    "correctness.\n"
    "\n"
    "Tokenized Input: {tokens}\n"
    "\n"
    "Predicted Labels: {labels}\n"
    "\n"
    "Disfluent Sentence: {disfluent}\n"
    "\n"
    "Disfluent Tokens: {disfluent_tokens}\n"
    "\n"
    "Fluent Sentence:";

// Single left-to-right pass, so substituted text is never rescanned.
std::string fill_template(std::string_view tmpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    if (tmpl[pos] == '{') {
      for (const auto& [key, value] : values) {
        if (tmpl.substr(pos + 1, key.size()) == key && pos + 1 + key.size() < tmpl.size() &&
            tmpl[pos + 1 + key.size()] == '}') {
          out += value;
          pos += key.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[pos++];
  }
  return out;
}

}  // namespace

std::string_view instruction_template() { return kTemplate; }

std::string format_labels(std::span<const int> labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ' ';
    out += labels[i] ? '1' : '0';
  }
  return out;
}

std::string format_token_list(std::span<const std::string> tokens) {
  std::string out = "[";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ", ";
    out += '\'' + tokens[i] + '\'';
  }
  return out + "]";
}

InstructionRecord make_instruction_record(const LabeledExample& labeled, std::string_view language) {
  const auto& labels = labeled.prompt_labels();
  if (labels.size() != labeled.tokens.size()) {
    fail(ErrorKind::data, "token/label length mismatch in " + labeled.pair_id + ": " +
                              std::to_string(labeled.tokens.size()) + " tokens, " +
                              std::to_string(labels.size()) + " labels");
  }
  const auto texts = word_texts(labeled.tokens);
  const std::string tokens = join_words(texts);
  const std::string label_text = format_labels(labels);
  const std::string removed = format_token_list(disfluent_tokens(labeled.tokens, labels));

  InstructionRecord record;
  record.instruction = fill_template(kTemplate, {{"Language", language},
                                                  {"tokens", tokens},
                                                  {"labels", label_text},
                                                  {"disfluent", labeled.disfluent},
                                                  {"disfluent_tokens", removed}});

  record.input = "Tokenized Input: " + tokens + "\nPredicted Labels: " + label_text +
                 "\nDisfluent Sentence: " + labeled.disfluent + "\nDisfluent Tokens: " + removed;
  record.output = labeled.fluent;
  return record;
}

json to_json(const InstructionRecord& record) {
  return {{"instruction", record.instruction}, {"input", record.input}, {"output", record.output}};
}

InstructionRecord instruction_from_json(const json& j) {
  try {
    return {j.at("instruction").get<std::string>(), j.at("input").get<std::string>(),
            j.at("output").get<std::string>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("malformed instruction record: ") + e.what());
  }
}

}  // namespace dfc
