#include <algorithm>
#include <atomic>
#include <thread>

#include "dfc/error.hpp"
#include "dfc/eval.hpp"
#include "httplib.h"

namespace dfc {

using nlohmann::json;

Preference OracleJudge::compare(const JudgeItem& item) {
  const double a = sentence_chrf2(item.first, item.reference);
  const double b = sentence_chrf2(item.second, item.reference);
  if (a > b) return Preference::first;
  if (b > a) return Preference::second;
  return Preference::draw;
}

void to_json(json& j, const RemoteJudgeConfig& c) {
  j = json{{"endpoint", c.endpoint},
           {"timeout_seconds", c.timeout_seconds},
           {"retries", c.retries},
           {"concurrency", c.concurrency},
           {"evaluator_prompt", c.evaluator_prompt}};
}

void from_json(const json& j, RemoteJudgeConfig& c) {
  c.endpoint = j.value("endpoint", c.endpoint);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.retries = j.value("retries", c.retries);
  c.concurrency = j.value("concurrency", c.concurrency);
  c.evaluator_prompt = j.value("evaluator_prompt", c.evaluator_prompt);
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) fail(ErrorKind::config, "judge endpoint must be an http URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  host_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

Preference RemoteJudge::compare(const JudgeItem& item) {
  httplib::Client client(host_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  std::string instruction = config_.evaluator_prompt;
  if (!item.instruction.empty()) instruction += "\n\n" + std::string(item.instruction);
  const json body{{"instruction", instruction},
                  {"candidate_a", std::string(item.first)},
                  {"candidate_b", std::string(item.second)}};
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    const json reply = json::parse(res->body, nullptr, false);
    const std::string winner = reply.is_object() ? reply.value("winner", "") : "";
    if (winner == "a") return Preference::first;
    if (winner == "b") return Preference::second;
    if (winner == "draw") return Preference::draw;
    last_error = "unparseable judge reply";
  }
  fail(ErrorKind::backend, "judge request failed: " + last_error);
}

std::unique_ptr<JudgeBackend> make_judge(std::string_view name, const RemoteJudgeConfig& remote) {
  if (name == "oracle") return std::make_unique<OracleJudge>();
  if (name == "position-biased") return std::make_unique<PositionBiasedJudge>();
  if (name == "remote") return std::make_unique<RemoteJudge>(remote);
  fail(ErrorKind::config, "unknown judge backend: " + std::string(name));
}

json to_json(const JudgeVerdict& v) {
  return {{"a_win_pct", v.a_win_pct}, {"b_win_pct", v.b_win_pct}, {"draw_pct", v.draw_pct},
          {"n", v.n},                 {"failures", v.failures}};
}

JudgeVerdict judge_pairwise(std::span<const std::string> outputs_a, std::span<const std::string> outputs_b,
                            std::span<const std::string> references, JudgeBackend& backend,
                            std::span<const std::string> instructions, std::size_t concurrency) {
  const std::size_t n = references.size();
  if (outputs_a.size() != n || outputs_b.size() != n || (!instructions.empty() && instructions.size() != n)) {
    fail(ErrorKind::data, "judge_pairwise: system outputs, references and instructions differ in length");
  }
  // 1 = A wins, 2 = B wins, 0 = draw, -1 = backend failure
  std::vector<int> outcome(n, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const std::string_view inst = instructions.empty() ? std::string_view{} : std::string_view(instructions[i]);
      try {
        const Preference ab = backend.compare({inst, references[i], outputs_a[i], outputs_b[i]});
        const Preference ba = backend.compare({inst, references[i], outputs_b[i], outputs_a[i]});
        if (ab == Preference::first && ba == Preference::second) {
          outcome[i] = 1;
        } else if (ab == Preference::second && ba == Preference::first) {
          outcome[i] = 2;
        }
      } catch (const std::exception&) {
        outcome[i] = -1;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(concurrency, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  JudgeVerdict v;
  v.n = n;
  if (n == 0) return v;
  double a = 0, b = 0;
  for (int o : outcome) {
    a += o == 1;
    b += o == 2;
    v.failures += o == -1;
  }
  v.a_win_pct = 100.0 * a / static_cast<double>(n);
  v.b_win_pct = 100.0 * b / static_cast<double>(n);
  v.draw_pct = 100.0 - v.a_win_pct - v.b_win_pct;
  return v;
}

}  // namespace dfc
