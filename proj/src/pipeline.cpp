#include "dfc/pipeline.hpp"

#include <iostream>
#include <map>
#include <set>

#include "dfc/instruction.hpp"
#include "dfc/io.hpp"
#include "dfc/num/checkpoint.hpp"

namespace dfc {

using nlohmann::json;
namespace fs = std::filesystem;

json default_config() {
  return json::parse(R"({
  "seed": 13,
  "lang": "pooled",
  "out": "runs/default",
  "corpus": {
    "sentences_per_language": 1000,
    "languages": [
      {"tag": "sa", "name": "Synthetic-A", "onsets": ["k", "t", "p", "m", "n", "s", "l", "r"],
       "vowels": ["a", "i", "u"], "words_per_class": 40},
      {"tag": "sb", "name": "Synthetic-B", "onsets": ["b", "d", "g", "v", "z", "h", "j"],
       "vowels": ["e", "o", "a"], "words_per_class": 40},
      {"tag": "sc", "name": "Synthetic-C", "onsets": ["ch", "sh", "th", "f", "w", "y"],
       "vowels": ["o", "u", "ei"], "words_per_class": 40}
    ]
  },
  "injection": {
    "prevalence": 0.3,
    "max_injections": 3,
    "max_phrase": 3,
    "category_probs": {"filler": 0.4, "repetition": 0.3, "correction": 0.15, "false_start": 0.15},
    "filler_lexicon": {"sa": ["umm", "uhh", "erm"], "sb": ["hmm", "ehh", "mhm"], "sc": ["ahh", "ohh", "uhm"]}
  },
  "vocab": {"target_size": 512, "min_frequency": 2},
  "penalty": {"decay_base": 0.5},
  "prompt": {"format": "compact"},
  "tagger": {
    "model": {"blocks": 2, "width": 64, "heads": 4, "ff": 256, "max_seq_len": 128, "init_std": 0.02},
    "train": {"micro_batch": 8, "accumulation": 2, "max_epochs": 10, "patience": 3, "lr": 0.001,
              "warmup_fraction": 0.1, "lambda": 0.0, "lambda_warmup_fraction": 0.1, "smoothing": 0.0,
              "contrastive": false, "contrastive_norm": "full", "exclude_reference_tokens": true,
              "adamw": {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "weight_decay": 0.01}}
  },
  "corrector": {
    "model": {"blocks": 4, "width": 128, "heads": 4, "ff": 512, "max_seq_len": 256, "init_std": 0.02},
    "train": {"micro_batch": 8, "accumulation": 2, "max_epochs": 30, "patience": 3, "lr": 0.0003,
              "warmup_fraction": 0.1, "lambda": 0.3, "lambda_warmup_fraction": 0.1, "smoothing": 0.01,
              "contrastive": true, "contrastive_norm": "full", "exclude_reference_tokens": true,
              "adamw": {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "weight_decay": 0.01}},
    "use_predicted_labels": true,
    "max_new_tokens": 64
  },
  "judge": {
    "backend": "oracle",
    "remote": {"endpoint": "http://127.0.0.1:8080/judge", "timeout_seconds": 30.0, "retries": 2,
               "concurrency": 4,
               "evaluator_prompt": "Compare two corrections of a disfluent transcript. Prefer the one that is fluent and keeps the meaning of the source. Answer with a, b or draw."}
  },
  "gradcheck": {
    "model": {"blocks": 2, "width": 8, "heads": 2, "ff": 16, "max_seq_len": 32, "init_std": 0.3},
    "vocab_size": 24,
    "examples": 8,
    "lambda": 0.3,
    "step": 1e-5,
    "floor": 1e-6,
    "tolerance": 1e-4
  },
  "ablate": {"seeds": [1, 2, 3]}
})");
}

void merge_config(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) fail(ErrorKind::config, "config section " + (where.empty() ? "<root>" : where) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) fail(ErrorKind::config, "unknown config key: " + path);
    if (base[key].is_object() && value.is_object() && path != "injection.filler_lexicon") {
      merge_config(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

void apply_override(json& config, const std::string& key, const std::string& value) {
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) fail(ErrorKind::config, "unknown config key: " + key);
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded() || (node->is_string() && !parsed.is_string())) parsed = value;
  *node = parsed;
}

PipelineConfig::PipelineConfig() : raw_(default_config()) {}
PipelineConfig::PipelineConfig(json raw) : raw_(std::move(raw)) {}

PipelineConfig PipelineConfig::load(const fs::path* file, const std::vector<std::pair<std::string, std::string>>& overrides) {
  json raw = default_config();
  if (file) merge_config(raw, io::read_json(*file));
  for (const auto& [k, v] : overrides) apply_override(raw, k, v);
  PipelineConfig cfg(std::move(raw));
  for (const auto& l : cfg.corpus().languages) cfg.injection().validate_for(l.tag);
  cfg.tagger_train().validate();
  cfg.corrector_train().validate();
  return cfg;
}

namespace {

template <typename T>
T get(const json& j, const char* path) {
  const json* node = &j;
  std::string p(path);
  std::size_t start = 0;
  while (true) {
    const auto dot = p.find('.', start);
    const std::string part = p.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->contains(part)) fail(ErrorKind::config, "missing config key: " + p);
    node = &node->at(part);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return node->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "config key " + p + ": " + e.what());
  }
}

}  // namespace

std::uint64_t PipelineConfig::seed() const { return get<std::uint64_t>(raw_, "seed"); }
std::string PipelineConfig::lang() const { return get<std::string>(raw_, "lang"); }
fs::path PipelineConfig::out() const { return get<std::string>(raw_, "out"); }

CorpusConfig PipelineConfig::corpus() const {
  CorpusConfig c;
  c.sentences_per_language = get<std::size_t>(raw_, "corpus.sentences_per_language");
  for (const auto& l : raw_.at("corpus").at("languages")) {
    LanguageSpec s;
    s.tag = l.at("tag").get<std::string>();
    s.name = l.value("name", s.tag);
    s.onsets = l.at("onsets").get<std::vector<std::string>>();
    s.vowels = l.at("vowels").get<std::vector<std::string>>();
    s.words_per_class = l.value("words_per_class", s.words_per_class);
    c.languages.push_back(std::move(s));
  }
  if (c.languages.empty()) fail(ErrorKind::config, "corpus.languages is empty");
  return c;
}

InjectionConfig PipelineConfig::injection() const {
  InjectionConfig c;
  c.prevalence = get<double>(raw_, "injection.prevalence");
  c.max_injections = get<std::size_t>(raw_, "injection.max_injections");
  c.max_phrase = get<std::size_t>(raw_, "injection.max_phrase");
  c.category_probs.filler = get<double>(raw_, "injection.category_probs.filler");
  c.category_probs.repetition = get<double>(raw_, "injection.category_probs.repetition");
  c.category_probs.correction = get<double>(raw_, "injection.category_probs.correction");
  c.category_probs.false_start = get<double>(raw_, "injection.category_probs.false_start");
  c.filler_lexicon = get<std::map<std::string, std::vector<std::string>>>(raw_, "injection.filler_lexicon");
  c.seed = seed();
  return c;
}

std::size_t PipelineConfig::vocab_target() const { return get<std::size_t>(raw_, "vocab.target_size"); }
std::size_t PipelineConfig::vocab_min_frequency() const { return get<std::size_t>(raw_, "vocab.min_frequency"); }
double PipelineConfig::decay_base() const { return get<double>(raw_, "penalty.decay_base"); }
PromptFormat PipelineConfig::prompt_format() const {
  return prompt_format_from_string(get<std::string>(raw_, "prompt.format"));
}

std::string PipelineConfig::language_name(const std::string& tag) const {
  for (const auto& l : corpus().languages) {
    if (l.tag == tag) return l.name;
  }
  return tag;
}

TransformerConfig PipelineConfig::tagger_model(int vocab_size) const {
  TransformerConfig c = raw_.at("tagger").at("model").get<TransformerConfig>();
  c.vocab_size = vocab_size;
  return c;
}

TrainConfig PipelineConfig::tagger_train() const {
  TrainConfig c = raw_.at("tagger").at("train").get<TrainConfig>();
  c.seed = seed();
  c.contrastive = false;
  return c;
}

TransformerConfig PipelineConfig::corrector_model(int vocab_size) const {
  TransformerConfig c = raw_.at("corrector").at("model").get<TransformerConfig>();
  c.vocab_size = vocab_size;
  return c;
}

TrainConfig PipelineConfig::corrector_train() const {
  TrainConfig c = raw_.at("corrector").at("train").get<TrainConfig>();
  c.seed = seed();
  return c;
}

std::size_t PipelineConfig::max_new_tokens() const { return get<std::size_t>(raw_, "corrector.max_new_tokens"); }

// ---------------------------------------------------------------------------

namespace {

std::vector<SentencePair> read_pairs(const fs::path& p) {
  std::vector<SentencePair> out;
  for (const auto& j : io::read_jsonl(p)) out.push_back(pair_from_json(j));
  return out;
}

Vocabulary read_vocab(const PipelineConfig& cfg) { return Vocabulary::from_text(io::read_text(cfg.artifact("vocab.txt"))); }

void require(const fs::path& p, const char* produced_by) {
  if (!fs::exists(p)) fail(ErrorKind::io, "missing artifact " + p.string() + " (run " + produced_by + " first)");
}

std::vector<EncodedExample> encode_all(const PipelineConfig& cfg, const std::vector<LabeledExample>& examples,
                                       const Vocabulary& vocab, bool exclude_reference_tokens) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back(encode_corrector_example(ex, vocab, cfg.prompt_format(), cfg.language_name(ex.lang),
                                           exclude_reference_tokens, cfg.decay_base()));
  }
  return out;
}

std::vector<TaggerExample> encode_tagger_all(const std::vector<LabeledExample>& examples, const Vocabulary& vocab) {
  std::vector<TaggerExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(encode_tagger_example(ex, vocab));
  return out;
}

// Drops examples the model cannot hold, reporting how many.
std::vector<EncodedExample> fitting(std::vector<EncodedExample> examples, int max_seq_len, const char* what) {
  std::vector<EncodedExample> out;
  std::size_t skipped = 0;
  for (auto& ex : examples) {
    if (ex.length() <= static_cast<std::size_t>(max_seq_len)) {
      out.push_back(std::move(ex));
    } else {
      ++skipped;
    }
  }
  if (skipped) std::cerr << "dfc: skipped " << skipped << " " << what << " examples longer than " << max_seq_len << "\n";
  return out;
}

void log_wall(const char* what, const TrainReport& r) {
  std::cerr << "dfc: " << what << " trained " << r.steps << " steps, best epoch " << r.best_epoch << ", "
            << r.wall_seconds << " s\n";
}

std::vector<int> predict_all_labels(TaggerModel<float>& tagger, const LabeledExample& ex, const Vocabulary& vocab) {
  return predict_word_labels(tagger, encode_tagger_example(ex, vocab));
}

}  // namespace

void gen_corpus(const PipelineConfig& cfg) {
  const auto pairs = generate_corpus(cfg.corpus(), cfg.injection());
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(to_json(p));
  fs::create_directories(cfg.out());
  io::write_jsonl(cfg.artifact("corpus.jsonl"), rows);
  io::write_json(cfg.artifact("split.json"), to_json(split_by_language(pairs, cfg.seed(), cfg.lang())));
}

void label_corpus(const PipelineConfig& cfg) {
  require(cfg.artifact("corpus.jsonl"), "gen-corpus");
  const auto pairs = read_pairs(cfg.artifact("corpus.jsonl"));
  const auto split = split_by_language(pairs, cfg.seed(), cfg.lang());
  const std::set<std::string> train_ids(split.train.begin(), split.train.end());
  std::vector<std::string> sentences{"0 1"};
  for (const auto& p : pairs) {
    if (!train_ids.count(p.id)) continue;
    sentences.push_back(p.fluent);
    sentences.push_back(p.disfluent);
  }
  const Vocabulary vocab = train_subwords(sentences, cfg.vocab_target(), cfg.vocab_min_frequency());
  io::write_text_atomic(cfg.artifact("vocab.txt"), vocab.to_text());

  std::vector<json> labeled, records;
  for (const auto& p : pairs) {
    const auto ex = label_pair(p, vocab);
    labeled.push_back(to_json(ex));
    records.push_back(to_json(make_instruction_record(ex, cfg.language_name(ex.lang))));
  }
  io::write_jsonl(cfg.artifact("labeled.jsonl"), labeled);
  io::write_jsonl(cfg.artifact("instructions.jsonl"), records);
}

LoadedData load_labeled(const PipelineConfig& cfg, const std::string& labeled_name) {
  require(cfg.artifact("corpus.jsonl"), "gen-corpus");
  require(cfg.artifact(labeled_name), labeled_name == "tagged.jsonl" ? "tag" : "label");
  LoadedData d;
  d.pairs = read_pairs(cfg.artifact("corpus.jsonl"));
  d.vocab = read_vocab(cfg);
  for (const auto& j : io::read_jsonl(cfg.artifact(labeled_name))) d.labeled.push_back(labeled_from_json(j, d.vocab));
  d.split = split_by_language(d.pairs, cfg.seed(), cfg.lang());
  return d;
}

std::vector<LabeledExample> select(const std::vector<LabeledExample>& labeled, const std::vector<std::string>& ids) {
  std::map<std::string, const LabeledExample*> index;
  for (const auto& ex : labeled) index[ex.pair_id] = &ex;
  std::vector<LabeledExample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) fail(ErrorKind::data, "split refers to unknown example " + id);
    out.push_back(*it->second);
  }
  return out;
}

TrainReport train_tagger_stage(const PipelineConfig& cfg) {
  const auto d = load_labeled(cfg);
  const auto train = encode_tagger_all(select(d.labeled, d.split.train), d.vocab);
  const auto val = encode_tagger_all(select(d.labeled, d.split.validation), d.vocab);
  TaggerModel<float> model(cfg.tagger_model(d.vocab.size()));
  model.initialize(cfg.seed());
  TrainOutputs outs{cfg.artifact("tagger"), cfg.artifact("tagger_log.jsonl"), "vocab.txt"};
  TrainReport report = train_tagger(model, train, val, cfg.tagger_train(), outs);
  io::write_json(cfg.artifact("tagger_report.json"), to_json(report));
  log_wall("tagger", report);
  return report;
}

TaggingMetrics tag_stage(const PipelineConfig& cfg) {
  auto d = load_labeled(cfg);
  require(num::manifest_path(cfg.artifact("tagger")), "train-tagger");
  TaggerModel<float> model(cfg.tagger_model(d.vocab.size()));
  num::load_checkpoint(cfg.artifact("tagger"), model.parameters());

  const std::set<std::string> test_ids(d.split.test.begin(), d.split.test.end());
  std::vector<std::vector<int>> pred, gold;
  std::vector<json> tagged, records;
  for (auto& ex : d.labeled) {
    ex.predicted_labels = predict_all_labels(model, ex, d.vocab);
    if (test_ids.count(ex.pair_id)) {
      pred.push_back(ex.predicted_labels);
      gold.push_back(ex.labels);
    }
    tagged.push_back(to_json(ex));
    records.push_back(to_json(make_instruction_record(ex, cfg.language_name(ex.lang))));
  }
  io::write_jsonl(cfg.artifact("tagged.jsonl"), tagged);
  io::write_jsonl(cfg.artifact("tagged_instructions.jsonl"), records);
  const TaggingMetrics m = tagging_metrics(pred, gold);
  io::write_json(cfg.artifact("tagger_metrics.json"), {{"precision", m.precision},
                                                       {"recall", m.recall},
                                                       {"f1", m.f1},
                                                       {"sentence_accuracy", m.sentence_accuracy},
                                                       {"n_sentences", gold.size()}});
  return m;
}

namespace {

std::string corrector_source(const PipelineConfig& cfg) {
  const bool predicted = cfg.raw().at("corrector").at("use_predicted_labels").get<bool>();
  if (predicted && fs::exists(cfg.artifact("tagged.jsonl"))) return "tagged.jsonl";
  return "labeled.jsonl";
}

struct CorrectorData {
  Vocabulary vocab;
  std::vector<EncodedExample> train, validation, test;
};

CorrectorData corrector_data(const PipelineConfig& cfg) {
  const auto d = load_labeled(cfg, corrector_source(cfg));
  const TrainConfig tc = cfg.corrector_train();
  const int max_len = cfg.corrector_model(d.vocab.size()).max_seq_len;
  CorrectorData out;
  out.vocab = d.vocab;
  out.train = encode_all(cfg, select(d.labeled, d.split.train), d.vocab, tc.exclude_reference_tokens);
  out.validation = encode_all(cfg, select(d.labeled, d.split.validation), d.vocab, tc.exclude_reference_tokens);
  out.test = fitting(encode_all(cfg, select(d.labeled, d.split.test), d.vocab, tc.exclude_reference_tokens), max_len,
                     "test");
  return out;
}

}  // namespace

TrainReport train_corrector_stage(const PipelineConfig& cfg) {
  const auto data = corrector_data(cfg);
  CorrectorModel<float> model(cfg.corrector_model(data.vocab.size()));
  model.initialize(cfg.seed());
  TrainOutputs outs{cfg.artifact("corrector"), cfg.artifact("corrector_log.jsonl"), "vocab.txt"};
  TrainReport report = train_corrector(model, data.train, data.validation, cfg.corrector_train(), outs);
  io::write_json(cfg.artifact("corrector_report.json"), to_json(report));
  log_wall("corrector", report);
  return report;
}

double mean_penalty_mass(CorrectorModel<float>& model, std::span<const EncodedExample> examples) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    if (ex.penalty.empty()) continue;
    const auto z = ex.sequence();
    const std::span<const int> ids(z.data(), z.size() - 1);
    const num::Matrix<double> dists = model.next_token_distributions(ids, ex.response_start - 1).cast<double>();
    total += penalty_mass(dists, ex.penalty.entries);
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

CorrectionResult correct_examples(CorrectorModel<float>& model, const Vocabulary& vocab,
                                  std::span<const EncodedExample> examples, std::size_t max_new) {
  CorrectionResult r;
  for (const auto& ex : examples) {
    const auto ids = greedy_decode(model, ex.input_ids, max_new);
    std::vector<int> ref(ex.target_ids.begin(), ex.target_ids.end() - 1);
    r.ids.push_back(ex.id);
    r.hypotheses.push_back(decode(ids, vocab));
    r.references.push_back(decode(ref, vocab));
  }
  r.penalty_mass = mean_penalty_mass(model, examples);
  return r;
}

namespace {

void write_hypotheses(const fs::path& path, const CorrectionResult& r) {
  std::vector<json> rows;
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    rows.push_back({{"id", r.ids[i]}, {"hypothesis", r.hypotheses[i]}, {"reference", r.references[i]}});
  }
  io::write_jsonl(path, rows);
}

}  // namespace

void correct_stage(const PipelineConfig& cfg) {
  const auto data = corrector_data(cfg);
  require(num::manifest_path(cfg.artifact("corrector")), "train-corrector");
  CorrectorModel<float> model(cfg.corrector_model(data.vocab.size()));
  num::load_checkpoint(cfg.artifact("corrector"), model.parameters());
  const auto r = correct_examples(model, data.vocab, data.test, cfg.max_new_tokens());
  write_hypotheses(cfg.artifact("hypotheses.jsonl"), r);
  io::write_json(cfg.artifact("correction.json"), {{"penalty_mass", r.penalty_mass}, {"n_sentences", r.ids.size()}});
}

MetricsReport evaluate_stage(const PipelineConfig& cfg, const fs::path& hypotheses_file, const fs::path* references_file) {
  std::vector<std::string> hyp, ref;
  if (references_file) {
    hyp = io::read_lines(hypotheses_file);
    ref = io::read_lines(*references_file);
  } else {
    for (const auto& j : io::read_jsonl(hypotheses_file)) {
      hyp.push_back(j.at("hypothesis").get<std::string>());
      ref.push_back(j.at("reference").get<std::string>());
    }
  }
  MetricsReport m = evaluate_corpus(hyp, ref);
  if (fs::exists(cfg.artifact("tagger_metrics.json"))) {
    const json t = io::read_json(cfg.artifact("tagger_metrics.json"));
    m.has_tagging = true;
    m.tag_precision = t.at("precision");
    m.tag_recall = t.at("recall");
    m.tag_f1 = t.at("f1");
    m.sentence_accuracy = t.at("sentence_accuracy");
  }
  fs::create_directories(cfg.out());
  io::write_json(cfg.artifact("metrics.json"), to_json(m));
  const std::vector<std::pair<std::string, MetricsReport>> cols{{"system", m}};
  io::write_text_atomic(cfg.artifact("metrics.txt"), format_table(cols));
  return m;
}

JudgeVerdict judge_stage(const PipelineConfig& cfg, const fs::path& a, const fs::path& b) {
  std::vector<std::string> out_a, out_b, refs;
  std::map<std::string, std::string> b_by_id;
  for (const auto& j : io::read_jsonl(b)) b_by_id[j.at("id").get<std::string>()] = j.at("hypothesis").get<std::string>();
  for (const auto& j : io::read_jsonl(a)) {
    const std::string id = j.at("id");
    auto it = b_by_id.find(id);
    if (it == b_by_id.end()) fail(ErrorKind::data, "system B has no output for " + id);
    out_a.push_back(j.at("hypothesis"));
    out_b.push_back(it->second);
    refs.push_back(j.at("reference"));
  }
  const json& jc = cfg.raw().at("judge");
  const auto remote = jc.at("remote").get<RemoteJudgeConfig>();
  auto backend = make_judge(jc.at("backend").get<std::string>(), remote);
  const JudgeVerdict v = judge_pairwise(out_a, out_b, refs, *backend, {}, remote.concurrency);
  if (v.failures) std::cerr << "dfc: judge backend failed on " << v.failures << " items (scored as draws)\n";
  fs::create_directories(cfg.out());
  io::write_json(cfg.artifact("judge.json"), to_json(v));
  return v;
}

GradcheckReport gradcheck_stage(const PipelineConfig& cfg) {
  const json& g = cfg.raw().at("gradcheck");
  TransformerConfig mc = g.at("model").get<TransformerConfig>();
  mc.vocab_size = g.at("vocab_size").get<int>();
  CorrectorModel<double> model(mc);
  model.initialize(cfg.seed());

  TrainConfig tc = cfg.corrector_train();
  tc.contrastive = true;
  const double lambda = g.at("lambda").get<double>();
  Rng rng(derive_seed(cfg.seed(), "gradcheck"));
  const auto n = g.at("examples").get<std::size_t>();
  const auto vocab = static_cast<std::uint64_t>(mc.vocab_size - Vocabulary::kSpecialCount);
  const std::size_t max_prompt = static_cast<std::size_t>(mc.max_seq_len) / 2;
  std::vector<EncodedExample> examples(n);
  for (auto& ex : examples) {
    const auto prompt = 2 + rng.below(std::min<std::size_t>(6, max_prompt - 1));
    const auto target = 2 + rng.below(5);
    ex.input_ids.push_back(Vocabulary::kBos);
    for (std::size_t i = 1; i < prompt; ++i) ex.input_ids.push_back(Vocabulary::kSpecialCount + static_cast<int>(rng.below(vocab)));
    for (std::size_t i = 0; i < target; ++i) ex.target_ids.push_back(Vocabulary::kSpecialCount + static_cast<int>(rng.below(vocab)));
    ex.response_start = ex.input_ids.size();
    const auto k = 1 + rng.below(3);
    for (std::size_t i = 0; i < k; ++i) {
      ex.penalty.entries.push_back({Vocabulary::kSpecialCount + static_cast<int>(rng.below(vocab)), std::pow(0.5, static_cast<double>(i))});
    }
  }

  const double weight = 1.0 / static_cast<double>(n);
  auto loss = [&](bool record) {
    double total = 0.0;
    for (const auto& ex : examples) {
      num::Tape<double> tape(record);
      num::Var<double> node;
      corrector_example_loss(model, tape, ex, weight, lambda, tc, &node);
      total += node.value()(0, 0);
      if (record) tape.backward(node);
    }
    return total;
  };
  model.parameters().zero_grad();
  loss(true);
  GradcheckReport report;
  report.tolerance = g.at("tolerance").get<double>();
  report.result = num::gradcheck(model.parameters(), [&] { return loss(false); }, g.at("step").get<double>(),
                                 g.at("floor").get<double>());
  report.passed = report.result.max_relative_error < report.tolerance;
  return report;
}

json to_json(const AblationResult& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"ce_only", to_json(s.ce_only)},
                     {"contrastive", to_json(s.contrastive)},
                     {"ce_only_penalty_mass", s.ce_only_penalty_mass},
                     {"contrastive_penalty_mass", s.contrastive_penalty_mass}});
  }
  return {{"seeds", seeds},
          {"mean_bleu_ce_only", r.mean_bleu_ce_only},
          {"mean_bleu_contrastive", r.mean_bleu_contrastive},
          {"tagger", {{"precision", r.tagger.precision},
                      {"recall", r.tagger.recall},
                      {"f1", r.tagger.f1},
                      {"sentence_accuracy", r.tagger.sentence_accuracy}}}};
}

AblationResult ablate(const PipelineConfig& cfg) {
  gen_corpus(cfg);
  label_corpus(cfg);
  train_tagger_stage(cfg);
  AblationResult result;
  result.tagger = tag_stage(cfg);

  const auto data = corrector_data(cfg);
  const auto seeds = cfg.raw().at("ablate").at("seeds").get<std::vector<std::uint64_t>>();
  if (seeds.empty()) fail(ErrorKind::config, "ablate.seeds is empty");
  const fs::path root = cfg.artifact("ablate");
  fs::create_directories(root);

  std::vector<std::pair<std::string, MetricsReport>> columns;
  for (const auto seed : seeds) {
    AblationSeed row;
    row.seed = seed;
    const fs::path dir = root / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    for (const bool contrastive : {false, true}) {
      const std::string name = contrastive ? "contrastive" : "ce_only";
      TrainConfig tc = cfg.corrector_train();
      tc.seed = seed;
      tc.contrastive = contrastive;
      CorrectorModel<float> model(cfg.corrector_model(data.vocab.size()));
      model.initialize(seed);
      const TrainReport rep =
          train_corrector(model, data.train, data.validation, tc, {dir / name, dir / (name + "_log.jsonl"), "vocab.txt"});
      log_wall(name.c_str(), rep);
      io::write_json(dir / (name + "_report.json"), to_json(rep));
      const auto corr = correct_examples(model, data.vocab, data.test, cfg.max_new_tokens());
      write_hypotheses(dir / (name + "_hypotheses.jsonl"), corr);
      MetricsReport m = evaluate_corpus(corr.hypotheses, corr.references);
      (contrastive ? row.contrastive : row.ce_only) = m;
      (contrastive ? row.contrastive_penalty_mass : row.ce_only_penalty_mass) = corr.penalty_mass;
      columns.emplace_back(name + "/" + std::to_string(seed), m);
    }
    result.mean_bleu_ce_only += row.ce_only.bleu / static_cast<double>(seeds.size());
    result.mean_bleu_contrastive += row.contrastive.bleu / static_cast<double>(seeds.size());
    result.seeds.push_back(row);
  }

  io::write_json(cfg.artifact("ablation.json"), to_json(result));
  std::string table = format_table(columns);
  table += "\npenalty mass";
  for (const auto& s : result.seeds) {
    table += "\n  seed " + std::to_string(s.seed) + ": ce_only " + std::to_string(s.ce_only_penalty_mass) +
             "  contrastive " + std::to_string(s.contrastive_penalty_mass);
  }
  table += "\nmean BLEU: ce_only " + std::to_string(result.mean_bleu_ce_only) + "  contrastive " +
           std::to_string(result.mean_bleu_contrastive) + "\n";
  io::write_text_atomic(cfg.artifact("ablation.txt"), table);
  return result;
}

}  // namespace dfc
