// Acceptance checks, one per criterion. `acceptance 3 5` runs criteria 3 and
// 5; no arguments runs all nine. Each prints one PASS/FAIL line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dfc/align.hpp"
#include "dfc/corpus.hpp"
#include "dfc/eval.hpp"
#include "dfc/io.hpp"
#include "dfc/objectives.hpp"
#include "dfc/pipeline.hpp"
#include "dfc/trainer.hpp"
#include "oracles.hpp"

using namespace dfc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dfc_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PipelineConfig config_file(const std::string& name, const fs::path& out) {
  const fs::path file = fs::path(DFC_SOURCE_DIR) / "config" / name;
  return PipelineConfig::load(&file, {{"out", out.string()}});
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

Outcome loss_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const auto batch = 1 + rng.below(4);
    const auto norm = rng.bernoulli(0.5) ? ContrastiveNorm::full : ContrastiveNorm::response;
    std::vector<num::Matrix<double>> dists(batch);
    std::vector<std::vector<DecayedPenaltyEntry>> pens(batch);
    std::vector<ContrastiveInstance> items;
    double expected = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto T = static_cast<num::Index>(1 + rng.below(16));
      const auto V = static_cast<num::Index>(2 + rng.below(63));
      num::Matrix<double> logits(T, V);
      for (num::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 2.0 * rng.normal();
      dists[b] = num::softmax_rows(logits);
      std::vector<std::pair<int, double>> pen_oracle;
      for (std::size_t k = 0, n = rng.below(6); k < n; ++k) {
        const int id = static_cast<int>(rng.below(static_cast<std::uint64_t>(V)));
        const double w = std::pow(0.5, static_cast<double>(rng.below(4)));
        pens[b].push_back({id, w});
        pen_oracle.emplace_back(id, w);
      }
      const auto r = 1 + rng.below(static_cast<std::uint64_t>(T));
      items.push_back({&dists[b], pens[b], r});
      oracle::Table table(static_cast<std::size_t>(T));
      for (num::Index i = 0; i < T; ++i) {
        for (num::Index j = 0; j < V; ++j) table[static_cast<std::size_t>(i)].push_back(dists[b](i, j));
      }
      expected += oracle::contrastive(table, pen_oracle, r, norm == ContrastiveNorm::full) / static_cast<double>(batch);
    }
    worst = std::max(worst, std::abs(contrastive_loss(items, norm) - expected));
  }
  const num::Matrix<double> uniform = num::Matrix<double>::Constant(3, 4, 0.25);
  const std::vector<DecayedPenaltyEntry> d{{1, 1.0}};
  const std::vector<ContrastiveInstance> worked{{&uniform, d, 2}};
  const double value = contrastive_loss(worked, ContrastiveNorm::full);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < 1e-9 && std::abs(value - 0.19179) < 5e-6 && secs < 1.0,
          "max |diff| " + sci(worst) + ", worked case " + fmt(value, 5) + ", " + fmt(secs, 3) + " s"};
}

Outcome gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  const PipelineConfig cfg;
  const auto r = gradcheck_stage(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double lambda = cfg.raw().at("gradcheck").at("lambda").get<double>();
  return {r.passed && r.result.max_relative_error < 1e-4 && lambda == 0.3 && secs < 120.0,
          "max relative error " + sci(r.result.max_relative_error) + " over " +
              std::to_string(r.result.checked) + " parameters, " + fmt(secs, 1) + " s"};
}

Outcome schedule_fidelity() {
  // A real run: 160 examples, effective batch 16, 10 epochs = 100 steps.
  TransformerConfig mc;
  mc.vocab_size = 30;
  mc.blocks = 1;
  mc.width = 16;
  mc.heads = 2;
  mc.ff = 32;
  mc.max_seq_len = 24;
  Rng rng(8);
  std::vector<EncodedExample> train(160), val(16);
  for (auto* set : {&train, &val}) {
    for (auto& ex : *set) {
      ex.input_ids = {Vocabulary::kBos};
      for (std::size_t k = 0, n = 3 + rng.below(4); k < n; ++k) ex.input_ids.push_back(5 + static_cast<int>(rng.below(25)));
      ex.input_ids.push_back(Vocabulary::kSep);
      for (std::size_t k = 0, n = 2 + rng.below(4); k < n; ++k) ex.target_ids.push_back(5 + static_cast<int>(rng.below(25)));
      ex.target_ids.push_back(Vocabulary::kEos);
      ex.response_start = ex.input_ids.size();
      ex.penalty.entries = {{ex.input_ids[1], 1.0}};
    }
  }
  TrainConfig c = PipelineConfig().corrector_train();
  c.max_epochs = 10;
  c.patience = 10;
  const fs::path dir = scratch("schedule");
  CorrectorModel<float> model(mc);
  model.initialize(1);
  train_corrector(model, train, val, c, {std::nullopt, dir / "log.jsonl", ""});
  const auto log = io::read_jsonl(dir / "log.jsonl");

  const std::size_t total = log.size();
  const std::size_t warm = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(total)));
  bool ok = total == 100 && warm == 10 && c.lambda == 0.3 && c.lambda_warmup_fraction == 0.1 && c.warmup_fraction == 0.1;
  double worst_lambda = 0.0, worst_lr = 0.0;
  for (std::size_t s = 0; s < total; ++s) {
    const double lam = log[s].at("lambda").get<double>();
    const double lr = log[s].at("lr").get<double>();
    if (s == 0 && lam != 0.0) ok = false;
    if (s >= warm && lam != 0.3) ok = false;
    if (s < warm) worst_lambda = std::max(worst_lambda, std::abs(lam - 0.3 * static_cast<double>(s) / static_cast<double>(warm)));
    const double expected_lr =
        s < warm ? c.lr * static_cast<double>(s) / static_cast<double>(warm)
                 : c.lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(s - warm) / static_cast<double>(total - warm)));
    worst_lr = std::max(worst_lr, std::abs(lr - expected_lr));
    if (s > warm && lr > log[s - 1].at("lr").get<double>()) ok = false;
  }
  ok = ok && worst_lambda <= 1e-12 && worst_lr <= 1e-12 * c.lr;
  fs::remove_all(dir);
  return {ok, std::to_string(total) + " steps, warmup " + std::to_string(warm) + ", ramp error " +
                  sci(worst_lambda) + ", lr error " + sci(worst_lr)};
}

Outcome alignment_exactness() {
  const auto start = std::chrono::steady_clock::now();
  const PipelineConfig cfg;
  CorpusConfig cc = cfg.corpus();
  cc.sentences_per_language = (10000 + cc.languages.size() - 1) / cc.languages.size();
  const auto pairs = generate_corpus(cc, cfg.injection());
  std::size_t rebuilt = 0, provenance = 0;
  for (const auto& p : pairs) {
    const auto dw = word_tokenize(p.disfluent), fw = word_tokenize(p.fluent);
    const auto dis = word_texts(dw), flu = word_texts(fw);
    const auto labels = align_and_label(dis, flu).labels;
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < dis.size(); ++i) {
      if (labels[i] == 0) kept.push_back(dis[i]);
    }
    if (kept == flu) ++rebuilt;
    std::vector<int> injected(dis.size(), 0);
    for (const auto& r : p.injected) {
      for (std::size_t k = r.start; k < r.end && k < injected.size(); ++k) injected[k] = 1;
    }
    if (injected == labels) ++provenance;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::size_t n = pairs.size();
  return {n >= 10000 && rebuilt == n && provenance == n && secs < 30.0,
          std::to_string(rebuilt) + "/" + std::to_string(n) + " rebuilt, " + std::to_string(provenance) + "/" +
              std::to_string(n) + " match provenance, " + fmt(secs, 1) + " s"};
}

Outcome metric_goldens() {
  using Strings = std::vector<std::string>;
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> failures;
  auto expect = [&](const std::string& what, double got, double want) {
    if (round2(got) != round2(want)) failures.push_back(what + "=" + fmt(got, 2) + " want " + fmt(want, 2));
  };
  const Strings same{"lu munu pisa lu sapu .", "ka ti su mera ."};
  const auto m = evaluate_corpus(same, same);
  expect("identical BLEU", m.bleu, 100.0);
  expect("identical chrF2", m.chrf2, 100.0);
  expect("identical TER", m.ter, 0.0);
  expect("BLEU single", bleu(Strings{"a b c d"}, Strings{"a b c e"}), 0.0);
  expect("BLEU corpus", bleu(Strings{"a b c d", "the cat sat on the mat"}, Strings{"a b c e", "the cat sat on the mat"}),
         83.76);
  expect("chrF2 abc/abd", sentence_chrf2("abc", "abd"), 38.89);
  expect("TER substitution", ter(Strings{"a b c"}, Strings{"a x c"}), 33.33);
  expect("TER shift", ter(Strings{"c a b"}, Strings{"a b c"}), 33.33);
  const auto t = tagging_metrics(std::vector<std::vector<int>>{{1, 0, 0}}, std::vector<std::vector<int>>{{1, 1, 0}});
  expect("tag P", t.precision, 1.0);
  expect("tag R", t.recall, 0.5);
  expect("tag F1", t.f1, 0.67);
  expect("sentence accuracy", t.sentence_accuracy, 0.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string detail = failures.empty() ? "12 goldens match" : failures.front();
  return {failures.empty() && secs < 5.0, detail + ", " + fmt(secs, 3) + " s"};
}

Outcome tagger_detection() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = scratch("tagger");
  const PipelineConfig cfg = config_file("tagger.json", out);
  gen_corpus(cfg);
  label_corpus(cfg);
  const auto report = train_tagger_stage(cfg);
  const auto m = tag_stage(cfg);
  const std::size_t pairs = io::read_jsonl(cfg.artifact("corpus.jsonl")).size();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::remove_all(out);
  return {pairs >= 5000 && report.epochs.size() <= 10 && m.f1 >= 0.90 && m.sentence_accuracy >= 0.60 && secs < 900.0,
          std::to_string(pairs) + " pairs, " + std::to_string(report.epochs.size()) + " epochs, F1 " + fmt(m.f1) +
              ", sentence accuracy " + fmt(m.sentence_accuracy) + ", " + fmt(secs, 0) + " s"};
}

Outcome contrastive_ablation() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = scratch("ablation");
  const PipelineConfig cfg = config_file("ablation.json", out);
  const auto r = ablate(cfg);
  const std::size_t records = io::read_jsonl(cfg.artifact("instructions.jsonl")).size();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool lower_everywhere = true;
  std::string masses;
  for (const auto& s : r.seeds) {
    lower_everywhere = lower_everywhere && s.contrastive_penalty_mass < s.ce_only_penalty_mass;
    masses += " " + fmt(s.ce_only_penalty_mass, 5) + ">" + fmt(s.contrastive_penalty_mass, 5);
  }
  const bool bleu_ok = r.mean_bleu_contrastive >= r.mean_bleu_ce_only;
  std::cout << io::read_text(cfg.artifact("ablation.txt"));
  fs::remove_all(out);
  return {records >= 2000 && r.seeds.size() == 3 && bleu_ok && lower_everywhere && secs < 2700.0,
          std::to_string(records) + " records, mean BLEU " + fmt(r.mean_bleu_ce_only, 2) + " -> " +
              fmt(r.mean_bleu_contrastive, 2) + ", penalty mass" + masses + ", " + fmt(secs, 0) + " s"};
}

Outcome judge_protocol() {
  const auto start = std::chrono::steady_clock::now();
  const PipelineConfig cfg;
  CorpusConfig cc = cfg.corpus();
  cc.sentences_per_language = 50;
  const auto pairs = generate_corpus(cc, cfg.injection());
  Rng rng(77);
  std::vector<std::string> refs, closer, further;
  for (const auto& p : pairs) {
    const auto fw = word_tokenize(p.fluent);
    auto words = word_texts(fw);
    if (words.size() < 4) continue;
    refs.push_back(p.fluent);
    // The closer system drops one word; the other drops that word and two more.
    const std::size_t drop = rng.below(words.size() - 1);
    words.erase(words.begin() + static_cast<std::ptrdiff_t>(drop));
    const std::string near = join_words(words);
    for (int k = 0; k < 2; ++k) words.erase(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size())));
    const std::string far = join_words(words);
    if (rng.bernoulli(0.5)) {
      closer.push_back(near);
      further.push_back(far);
    } else {
      closer.push_back(p.fluent);
      further.push_back(p.disfluent == p.fluent ? near : p.disfluent);
    }
  }
  PositionBiasedJudge biased;
  OracleJudge oracle_judge;
  const auto bias = judge_pairwise(closer, further, refs, biased);
  const auto ab = judge_pairwise(closer, further, refs, oracle_judge);
  const auto ba = judge_pairwise(further, closer, refs, oracle_judge);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {bias.draw_pct == 100.0 && ab.a_win_pct == 100.0 && ba.b_win_pct == 100.0 && secs < 5.0,
          std::to_string(refs.size()) + " items, biased draws " + fmt(bias.draw_pct, 1) + "%, oracle prefers closer " +
              fmt(ab.a_win_pct, 1) + "% / " + fmt(ba.b_win_pct, 1) + "%, " + fmt(secs, 2) + " s"};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_text(e.path());
  }
  return files;
}

Outcome determinism() {
  const fs::path a = scratch("determinism_a"), b = scratch("determinism_b");
  ablate(config_file("smoke.json", a));
  ablate(config_file("smoke.json", b));
  const auto ta = tree(a), tb = tree(b);
  std::size_t checkpoints = 0, reports = 0, differing = 0;
  for (const auto& [name, bytes] : ta) {
    if (name.ends_with(".bin")) ++checkpoints;
    if (name.ends_with("_report.json") || name == "ablation.json") ++reports;
    auto it = tb.find(name);
    if (it == tb.end() || it->second != bytes) ++differing;
  }
  fs::remove_all(a);
  fs::remove_all(b);
  return {ta.size() == tb.size() && differing == 0 && checkpoints > 0 && reports > 0,
          std::to_string(ta.size()) + " files (" + std::to_string(checkpoints) + " checkpoints, " +
              std::to_string(reports) + " reports), " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"loss oracle equivalence", loss_oracle},
      {"gradient correctness", gradient_correctness},
      {"schedule fidelity", schedule_fidelity},
      {"alignment exactness", alignment_exactness},
      {"metric golden suite", metric_goldens},
      {"tagger detection", tagger_detection},
      {"contrastive ablation", contrastive_ablation},
      {"judge bias cancellation", judge_protocol},
      {"determinism", determinism},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoul(argv[i]));
  if (selected.empty()) {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);
  }
  int failed = 0;
  for (std::size_t n : selected) {
    if (n < 1 || n > criteria.size()) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    const auto& [name, check] = criteria[n - 1];
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
