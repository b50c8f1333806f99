#include "dfc/model.hpp"

#include "dfc/instruction.hpp"

namespace dfc {

using nlohmann::json;

void TransformerConfig::validate() const {
  if (vocab_size <= Vocabulary::kSpecialCount) fail(ErrorKind::config, "vocab_size must exceed the special pieces");
  if (blocks < 1 || width < 1 || heads < 1 || ff < 1 || max_seq_len < 2) {
    fail(ErrorKind::config, "transformer dimensions must be positive");
  }
  if (width % heads != 0) {
    fail(ErrorKind::config, "width " + std::to_string(width) + " not divisible by " + std::to_string(heads) + " heads");
  }
}

void to_json(json& j, const TransformerConfig& c) {
  j = json{{"vocab_size", c.vocab_size}, {"blocks", c.blocks}, {"width", c.width},           {"heads", c.heads},
           {"ff", c.ff},                 {"max_seq_len", c.max_seq_len},                      {"init_std", c.init_std}};
}

void from_json(const json& j, TransformerConfig& c) {
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.blocks = j.value("blocks", c.blocks);
  c.width = j.value("width", c.width);
  c.heads = j.value("heads", c.heads);
  c.ff = j.value("ff", c.ff);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.init_std = j.value("init_std", c.init_std);
}

TransformerConfig default_corrector_config(int vocab_size) {
  TransformerConfig c;
  c.vocab_size = vocab_size;
  return c;
}

TransformerConfig default_tagger_config(int vocab_size) {
  TransformerConfig c;
  c.vocab_size = vocab_size;
  c.blocks = 2;
  c.width = 64;
  c.heads = 4;
  c.ff = 256;
  return c;
}

std::size_t trunk_parameter_count(const TransformerConfig& c) {
  const std::size_t v = static_cast<std::size_t>(c.vocab_size), d = static_cast<std::size_t>(c.width);
  const std::size_t f = static_cast<std::size_t>(c.ff), t = static_cast<std::size_t>(c.max_seq_len);
  const std::size_t block = 2 * d + (3 * d * d + 3 * d) + (d * d + d) + 2 * d + (d * f + f) + (f * d + d);
  return v * d + t * d + static_cast<std::size_t>(c.blocks) * block + 2 * d;
}

std::size_t expected_corrector_parameters(const TransformerConfig& c) { return trunk_parameter_count(c); }

std::size_t expected_tagger_parameters(const TransformerConfig& c) {
  return trunk_parameter_count(c) + static_cast<std::size_t>(c.width) * 2 + 2;
}

std::string_view to_string(PromptFormat f) { return f == PromptFormat::compact ? "compact" : "full_template"; }

PromptFormat prompt_format_from_string(std::string_view s) {
  if (s == "compact") return PromptFormat::compact;
  if (s == "full_template") return PromptFormat::full_template;
  fail(ErrorKind::config, "unknown prompt format: " + std::string(s));
}

std::vector<int> EncodedExample::sequence() const {
  std::vector<int> z = input_ids;
  z.insert(z.end(), target_ids.begin(), target_ids.end());
  return z;
}

namespace {

void append_word(std::vector<int>& ids, const Vocabulary& vocab, std::string_view word) {
  const auto pieces = vocab.encode_word(word);
  ids.insert(ids.end(), pieces.begin(), pieces.end());
}

}  // namespace

EncodedExample encode_corrector_example(const LabeledExample& labeled, const Vocabulary& vocab,
                                        PromptFormat format, std::string_view language,
                                        bool exclude_reference_tokens, double decay_base) {
  EncodedExample ex;
  ex.id = labeled.pair_id;
  ex.input_ids.push_back(Vocabulary::kBos);
  if (format == PromptFormat::compact) {
    const auto& labels = labeled.prompt_labels();
    if (labels.size() != labeled.tokens.size()) {
      fail(ErrorKind::data, "token/label length mismatch in " + labeled.pair_id);
    }
    for (std::size_t i = 0; i < labeled.tokens.size(); ++i) {
      append_word(ex.input_ids, vocab, labeled.tokens[i].text);
      append_word(ex.input_ids, vocab, labels[i] ? "1" : "0");
    }
    ex.input_ids.push_back(Vocabulary::kSep);
    for (const auto& w : disfluent_tokens(labeled.tokens, labels)) append_word(ex.input_ids, vocab, w);
  } else {
    const auto record = make_instruction_record(labeled, language);
    for (const auto& w : word_tokenize(record.instruction)) append_word(ex.input_ids, vocab, w.text);
  }
  ex.input_ids.push_back(Vocabulary::kSep);
  ex.response_start = ex.input_ids.size();
  ex.target_ids = piece_ids(encode(word_tokenize(labeled.fluent), vocab));
  ex.target_ids.push_back(Vocabulary::kEos);
  ex.penalty = extract_penalty_set(labeled, vocab, exclude_reference_tokens, decay_base);
  return ex;
}

TaggerExample encode_tagger_example(const LabeledExample& labeled, const Vocabulary& vocab) {
  TaggerExample ex;
  ex.id = labeled.pair_id;
  ex.word_labels = labeled.labels;
  const auto pieces = encode(labeled.tokens, vocab);
  ex.ids = piece_ids(pieces);
  ex.piece_labels = project_labels_to_subwords(labeled.labels, pieces);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].rank_in_word == 0) ex.first_piece.push_back(i);
  }
  return ex;
}

}  // namespace dfc
