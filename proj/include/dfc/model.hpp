#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dfc/align.hpp"
#include "dfc/num/ops.hpp"
#include "dfc/rng.hpp"
#include "dfc/textcore.hpp"
#include "json.hpp"

namespace dfc {

struct TransformerConfig {
  int vocab_size = 0;
  int blocks = 4;
  int width = 128;
  int heads = 4;
  int ff = 512;
  int max_seq_len = 256;
  double init_std = 0.02;

  void validate() const;
  bool operator==(const TransformerConfig&) const = default;
};

void to_json(nlohmann::json& j, const TransformerConfig& c);
void from_json(const nlohmann::json& j, TransformerConfig& c);

TransformerConfig default_corrector_config(int vocab_size);
TransformerConfig default_tagger_config(int vocab_size);

// Closed-form parameter count of the shared trunk plus `head_extra`.
std::size_t trunk_parameter_count(const TransformerConfig& c);
std::size_t expected_corrector_parameters(const TransformerConfig& c);
std::size_t expected_tagger_parameters(const TransformerConfig& c);

// Token + learned position embeddings, pre-norm blocks, final layer norm.
template <typename S>
class Trunk {
 public:
  Trunk(num::ParameterSet<S>& ps, const TransformerConfig& c) : config_(c) {
    c.validate();
    tok_ = &ps.add("embed.tokens", c.vocab_size, c.width, true);
    pos_ = &ps.add("embed.positions", c.max_seq_len, c.width, true);
    for (int b = 0; b < c.blocks; ++b) {
      const std::string p = "blocks." + std::to_string(b) + ".";
      Block blk;
      blk.ln1_g = &ps.add(p + "ln1.gain", 1, c.width, false);
      blk.ln1_b = &ps.add(p + "ln1.bias", 1, c.width, false);
      blk.w_qkv = &ps.add(p + "attn.qkv.weight", c.width, 3 * c.width, true);
      blk.b_qkv = &ps.add(p + "attn.qkv.bias", 1, 3 * c.width, false);
      blk.w_o = &ps.add(p + "attn.out.weight", c.width, c.width, true);
      blk.b_o = &ps.add(p + "attn.out.bias", 1, c.width, false);
      blk.ln2_g = &ps.add(p + "ln2.gain", 1, c.width, false);
      blk.ln2_b = &ps.add(p + "ln2.bias", 1, c.width, false);
      blk.w_ff1 = &ps.add(p + "ff.in.weight", c.width, c.ff, true);
      blk.b_ff1 = &ps.add(p + "ff.in.bias", 1, c.ff, false);
      blk.w_ff2 = &ps.add(p + "ff.out.weight", c.ff, c.width, true);
      blk.b_ff2 = &ps.add(p + "ff.out.bias", 1, c.width, false);
      blocks_.push_back(blk);
    }
    lnf_g_ = &ps.add("final_ln.gain", 1, c.width, false);
    lnf_b_ = &ps.add("final_ln.bias", 1, c.width, false);
  }

  const TransformerConfig& config() const { return config_; }
  num::Parameter<S>& token_table() { return *tok_; }

  // Hidden states (n x width).
  num::Var<S> forward(num::Tape<S>& tape, std::span<const int> ids, bool causal) {
    using namespace num;
    if (ids.empty()) fail(ErrorKind::usage, "empty input sequence");
    if (static_cast<int>(ids.size()) > config_.max_seq_len) {
      fail(ErrorKind::shape, "sequence of " + std::to_string(ids.size()) + " tokens exceeds max_seq_len " +
                                 std::to_string(config_.max_seq_len));
    }
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    Var<S> x = add(embedding(tape.parameter(*tok_), ids), embedding(tape.parameter(*pos_), positions));
    for (auto& b : blocks_) {
      Var<S> h = layer_norm(x, tape.parameter(*b.ln1_g), tape.parameter(*b.ln1_b));
      Var<S> qkv = add_row(matmul(h, tape.parameter(*b.w_qkv)), tape.parameter(*b.b_qkv));
      Var<S> attn = self_attention(qkv, config_.heads, causal);
      x = add(x, add_row(matmul(attn, tape.parameter(*b.w_o)), tape.parameter(*b.b_o)));
      h = layer_norm(x, tape.parameter(*b.ln2_g), tape.parameter(*b.ln2_b));
      h = gelu(add_row(matmul(h, tape.parameter(*b.w_ff1)), tape.parameter(*b.b_ff1)));
      x = add(x, add_row(matmul(h, tape.parameter(*b.w_ff2)), tape.parameter(*b.b_ff2)));
    }
    return layer_norm(x, tape.parameter(*lnf_g_), tape.parameter(*lnf_b_));
  }

 private:
  struct Block {
    num::Parameter<S>*ln1_g, *ln1_b, *w_qkv, *b_qkv, *w_o, *b_o, *ln2_g, *ln2_b, *w_ff1, *b_ff1, *w_ff2, *b_ff2;
  };

  TransformerConfig config_;
  num::Parameter<S>* tok_;
  num::Parameter<S>* pos_;
  std::vector<Block> blocks_;
  num::Parameter<S>* lnf_g_;
  num::Parameter<S>* lnf_b_;
};

// Weights ~ N(0, init_std), biases 0, layer-norm gains 1.
template <typename S>
void initialize_parameters(num::ParameterSet<S>& ps, double init_std, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = ps[i];
    const bool gain = p.name.ends_with(".gain");
    const bool bias = p.name.ends_with(".bias");
    for (num::Index k = 0; k < p.value.size(); ++k) {
      p.value.data()[k] = gain ? S(1) : bias ? S(0) : static_cast<S>(init_std * rng.normal());
    }
  }
  ps.zero_grad();
}

// Decoder-only language model with the output head tied to the token table.
template <typename S>
class CorrectorModel {
 public:
  explicit CorrectorModel(const TransformerConfig& c) : trunk_(params_, c) {}

  const TransformerConfig& config() const { return trunk_.config(); }
  num::ParameterSet<S>& parameters() { return params_; }
  const num::ParameterSet<S>& parameters() const { return params_; }
  void initialize(std::uint64_t seed) { initialize_parameters(params_, config().init_std, seed); }

  // Next-token logits for rows [first_row, n): row j scores ids[j + 1].
  num::Var<S> logits(num::Tape<S>& tape, std::span<const int> ids, std::size_t first_row = 0) {
    num::Var<S> h = trunk_.forward(tape, ids, true);
    if (first_row > 0) {
      h = num::slice_rows(h, static_cast<num::Index>(first_row),
                          static_cast<num::Index>(ids.size() - first_row));
    }
    return num::matmul_transposed(h, tape.parameter(trunk_.token_table()));
  }

  // Softmax over the vocabulary at every position (n x V).
  num::Matrix<S> next_token_distributions(std::span<const int> ids, std::size_t first_row = 0) {
    num::Tape<S> tape(false);
    return num::softmax_rows(logits(tape, ids, first_row).value());
  }

 private:
  num::ParameterSet<S> params_;
  Trunk<S> trunk_;
};

// Bidirectional encoder with a per-token 2-class head.
template <typename S>
class TaggerModel {
 public:
  explicit TaggerModel(const TransformerConfig& c) : trunk_(params_, c) {
    head_w_ = &params_.add("head.weight", c.width, 2, true);
    head_b_ = &params_.add("head.bias", 1, 2, false);
  }

  const TransformerConfig& config() const { return trunk_.config(); }
  num::ParameterSet<S>& parameters() { return params_; }
  const num::ParameterSet<S>& parameters() const { return params_; }
  void initialize(std::uint64_t seed) { initialize_parameters(params_, config().init_std, seed); }

  num::Var<S> logits(num::Tape<S>& tape, std::span<const int> ids) {
    num::Var<S> h = trunk_.forward(tape, ids, false);
    return num::add_row(num::matmul(h, tape.parameter(*head_w_)), tape.parameter(*head_b_));
  }

  // (n x 2) class probabilities; column 1 = disfluent.
  num::Matrix<S> probabilities(std::span<const int> ids) {
    num::Tape<S> tape(false);
    return num::softmax_rows(logits(tape, ids).value());
  }

 private:
  num::ParameterSet<S> params_;
  Trunk<S> trunk_;
  num::Parameter<S>* head_w_;
  num::Parameter<S>* head_b_;
};

// Same architecture and values in another precision.
template <typename To, typename From>
CorrectorModel<To> cast_model(const CorrectorModel<From>& m) {
  CorrectorModel<To> out(m.config());
  out.parameters().copy_values_from(m.parameters());
  return out;
}

// Appends argmax tokens (lowest id on ties) until EOS or max_new tokens.
// The EOS itself is not returned.
template <typename S>
std::vector<int> greedy_decode(CorrectorModel<S>& model, std::span<const int> prompt, std::size_t max_new) {
  if (prompt.empty()) fail(ErrorKind::usage, "greedy_decode: empty prompt");
  const auto limit = static_cast<std::size_t>(model.config().max_seq_len);
  if (prompt.size() > limit) {
    fail(ErrorKind::shape, "prompt of " + std::to_string(prompt.size()) + " tokens exceeds max_seq_len " +
                               std::to_string(limit));
  }
  std::vector<int> seq(prompt.begin(), prompt.end());
  std::vector<int> out;
  while (out.size() < max_new && seq.size() < limit) {
    num::Tape<S> tape(false);
    const auto& row = model.logits(tape, seq, seq.size() - 1).value();
    num::Index best = 0;
    for (num::Index v = 1; v < row.cols(); ++v) {
      if (row(0, v) > row(0, best)) best = v;
    }
    if (best == Vocabulary::kEos) break;
    out.push_back(static_cast<int>(best));
    seq.push_back(static_cast<int>(best));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Example encoding
// ---------------------------------------------------------------------------

enum class PromptFormat {
  compact,        // BOS, per word its pieces then a "0"/"1" label piece, SEP, disfluent-token pieces, SEP
  full_template,  // BOS, the filled instruction prompt, SEP
};

std::string_view to_string(PromptFormat f);
PromptFormat prompt_format_from_string(std::string_view s);

struct EncodedExample {
  std::string id;
  std::vector<int> input_ids;
  std::vector<int> target_ids;  // fluent pieces + EOS
  std::size_t response_start = 0;  // == input_ids.size()
  PenaltySet penalty;

  std::size_t length() const { return input_ids.size() + target_ids.size(); }
  std::vector<int> sequence() const;
};

EncodedExample encode_corrector_example(const LabeledExample& labeled, const Vocabulary& vocab,
                                        PromptFormat format, std::string_view language,
                                        bool exclude_reference_tokens, double decay_base = 0.5);

struct TaggerExample {
  std::string id;
  std::vector<int> ids;             // disfluent pieces
  std::vector<int> piece_labels;    // word label of each piece's parent
  std::vector<std::size_t> first_piece;  // per word
  std::vector<int> word_labels;
};

TaggerExample encode_tagger_example(const LabeledExample& labeled, const Vocabulary& vocab);

// Word labels read off the first piece of each word.
template <typename S>
std::vector<int> predict_word_labels(TaggerModel<S>& model, const TaggerExample& ex) {
  const auto probs = model.probabilities(ex.ids);
  std::vector<int> out;
  out.reserve(ex.first_piece.size());
  for (std::size_t f : ex.first_piece) {
    const auto r = static_cast<num::Index>(f);
    out.push_back(probs(r, 1) > probs(r, 0) ? 1 : 0);
  }
  return out;
}

}  // namespace dfc
