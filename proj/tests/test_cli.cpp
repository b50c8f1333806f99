#include <cstdio>
#include <filesystem>
#include <memory>

#include "doctest.h"
#include "dfc/io.hpp"
#include "dfc/pipeline.hpp"

using namespace dfc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(DFC_CLI) + " " + args + " 2>&1";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof buf, pipe.get())) out += buf;
  const int status = pclose(pipe.release());
  return {status, out};
}

}  // namespace

TEST_CASE("default config file mirrors the built-in defaults") {
  CHECK(io::read_json(fs::path(DFC_SOURCE_DIR) / "config/default.json") == default_config());
}

TEST_CASE("config overrides") {
  auto cfg = default_config();
  apply_override(cfg, "corrector.train.lr", "0.5");
  CHECK(cfg["corrector"]["train"]["lr"] == 0.5);
  apply_override(cfg, "out", "runs/x");
  CHECK(cfg["out"] == "runs/x");
  CHECK_THROWS_AS(apply_override(cfg, "corrector.train.nope", "1"), Error);
  CHECK_THROWS_AS(merge_config(cfg, nlohmann::json{{"bogus", 1}}), Error);
}

TEST_CASE("command line") {
  const fs::path dir = fs::temp_directory_path() / "dfc_test_cli";
  fs::remove_all(dir);
  const std::string out = " --out " + dir.string();

  SUBCASE("errors are single machine-readable lines") {
    for (const std::string& args : {std::string("frobnicate"), std::string("correct") + out,
                                    std::string("label --corpus.nope=3") + out}) {
      const auto r = run(args);
      CHECK(r.status != 0);
      CHECK(r.output.rfind("dfc: error: kind=", 0) == 0);
      CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 1);
    }
  }
  SUBCASE("prevalence zero") {
    REQUIRE(run("gen-corpus --injection.prevalence=0 --corpus.sentences_per_language=20" + out).status == 0);
    for (const auto& j : io::read_jsonl(dir / "corpus.jsonl")) CHECK(j.at("disfluent") == j.at("fluent"));
  }
  SUBCASE("evaluate identical files") {
    fs::create_directories(dir);
    io::write_lines(dir / "h.txt", {"lu munu pisa .", "ka ti su ."});
    const auto r = run("evaluate --hyp " + (dir / "h.txt").string() + " --ref " + (dir / "h.txt").string() + out);
    REQUIRE(r.status == 0);
    const auto m = io::read_json(dir / "metrics.json");
    CHECK(m.at("bleu").get<double>() == doctest::Approx(100.0));
    CHECK(m.at("chrf2").get<double>() == doctest::Approx(100.0));
    CHECK(m.at("ter").get<double>() == 0.0);
  }
  fs::remove_all(dir);
}
