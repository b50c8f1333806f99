#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dfc/error.hpp"
#include "dfc/io.hpp"
#include "dfc/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::string> lang;
  std::optional<std::string> out;
  std::optional<std::string> contrastive;
  std::optional<std::string> contrastive_norm;
  std::optional<std::string> exclude_ref;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "global seed");
  app->add_option("--lang", f.lang, "pooled or a language tag");
  app->add_option("--out", f.out, "artifact directory");
  app->add_option("--contrastive", f.contrastive, "on|off")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--contrastive-norm", f.contrastive_norm, "full|response")->check(CLI::IsMember({"full", "response"}));
  app->add_option("--exclude-ref-tokens", f.exclude_ref, "on|off")->check(CLI::IsMember({"on", "off"}));
  app->allow_extras();
}

std::string on_off(const std::string& v) { return v == "on" ? "true" : "false"; }

// Named flags first, then generic --dotted.key=value overrides in order.
dfc::PipelineConfig build_config(const CLI::App* app, const CommonFlags& f) {
  std::vector<std::pair<std::string, std::string>> overrides;
  if (f.seed) overrides.emplace_back("seed", *f.seed);
  if (f.lang) overrides.emplace_back("lang", *f.lang);
  if (f.out) overrides.emplace_back("out", *f.out);
  if (f.contrastive) overrides.emplace_back("corrector.train.contrastive", on_off(*f.contrastive));
  if (f.contrastive_norm) overrides.emplace_back("corrector.train.contrastive_norm", *f.contrastive_norm);
  if (f.exclude_ref) overrides.emplace_back("corrector.train.exclude_reference_tokens", on_off(*f.exclude_ref));

  const auto extras = app->remaining();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) dfc::fail(dfc::ErrorKind::usage, "unexpected argument: " + arg);
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      overrides.emplace_back(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      overrides.emplace_back(arg.substr(2), extras[++i]);
    } else {
      dfc::fail(dfc::ErrorKind::usage, "override " + arg + " has no value");
    }
  }
  const fs::path file(f.config);
  return dfc::PipelineConfig::load(f.config.empty() ? nullptr : &file, overrides);
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disfluency correction toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string hyp, ref, sys_a, sys_b, backend;

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic disfluent corpus");
  auto* label = app.add_subcommand("label", "train the subword vocabulary and label the corpus");
  auto* train_tagger = app.add_subcommand("train-tagger", "train the disfluency tagger");
  auto* tag = app.add_subcommand("tag", "predict token labels with the trained tagger");
  auto* train_corrector = app.add_subcommand("train-corrector", "train the corrector");
  auto* correct = app.add_subcommand("correct", "decode the test split with the corrector");
  auto* evaluate = app.add_subcommand("evaluate", "BLEU, chrF2 and TER of hypotheses");
  auto* judge = app.add_subcommand("judge", "pairwise judge of two systems");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of corrector gradients");
  auto* ablate = app.add_subcommand("ablate", "CE-only vs CE+contrastive comparison end to end");
  for (auto* sub : {gen, label, train_tagger, tag, train_corrector, correct, evaluate, judge, gradcheck, ablate}) {
    add_common(sub, flags);
  }
  evaluate->add_option("--hyp", hyp, "hypotheses (jsonl from correct, or plain lines with --ref)");
  evaluate->add_option("--ref", ref, "references, one per line");
  judge->add_option("--a", sys_a, "system A hypotheses (jsonl)")->required();
  judge->add_option("--b", sys_b, "system B hypotheses (jsonl)")->required();
  judge->add_option("--backend", backend, "oracle|position-biased|remote");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "dfc: error: kind=usage message=" << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    dfc::PipelineConfig cfg = build_config(sub, flags);
    if (!backend.empty()) cfg.raw()["judge"]["backend"] = backend;

    if (sub == gen) {
      dfc::gen_corpus(cfg);
    } else if (sub == label) {
      dfc::label_corpus(cfg);
    } else if (sub == train_tagger) {
      dfc::train_tagger_stage(cfg);
    } else if (sub == tag) {
      const auto m = dfc::tag_stage(cfg);
      std::cout << "tag P " << m.precision << " R " << m.recall << " F1 " << m.f1 << " sentence accuracy "
                << m.sentence_accuracy << "\n";
    } else if (sub == train_corrector) {
      dfc::train_corrector_stage(cfg);
    } else if (sub == correct) {
      dfc::correct_stage(cfg);
    } else if (sub == evaluate) {
      const fs::path h = hyp.empty() ? cfg.artifact("hypotheses.jsonl") : fs::path(hyp);
      const fs::path r(ref);
      dfc::evaluate_stage(cfg, h, ref.empty() ? nullptr : &r);
      std::cout << dfc::io::read_text(cfg.artifact("metrics.txt"));
    } else if (sub == judge) {
      const auto v = dfc::judge_stage(cfg, sys_a, sys_b);
      std::cout << "A wins " << v.a_win_pct << "%  B wins " << v.b_win_pct << "%  draws " << v.draw_pct << "%\n";
    } else if (sub == gradcheck) {
      const auto r = dfc::gradcheck_stage(cfg);
      std::cout << "max relative error " << r.result.max_relative_error << " at " << r.result.worst_parameter << "["
                << r.result.worst_index << "] over " << r.result.checked << " scalars (tolerance " << r.tolerance
                << ")\n";
      if (!r.passed) {
        std::cerr << "dfc: error: kind=numeric message=gradient check failed\n";
        return 1;
      }
    } else if (sub == ablate) {
      dfc::ablate(cfg);
      std::cout << dfc::io::read_text(cfg.artifact("ablation.txt"));
    }
  } catch (const dfc::Error& e) {
    std::cerr << "dfc: error: kind=" << dfc::to_string(e.kind()) << " message=" << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "dfc: error: kind=internal message=" << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
