#include "dfc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "dfc/error.hpp"
#include "dfc/textcore.hpp"

namespace dfc {

using nlohmann::json;

namespace {

void check_lengths(std::size_t h, std::size_t r, const char* metric) {
  if (h != r) {
    fail(ErrorKind::data, std::string(metric) + ": " + std::to_string(h) + " hypotheses for " + std::to_string(r) +
                              " references");
  }
}

std::vector<std::string> words_of(std::string_view s) { return word_texts(word_tokenize(s)); }

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& w, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) ++out[std::vector<std::string>(w.begin() + i, w.begin() + i + n)];
  return out;
}

// Code points with whitespace removed.
std::vector<std::string> chars_of(std::string_view s) {
  std::vector<std::string> out;
  for (auto& c : utf8_chars(s)) {
    if (!word_tokenize(c).empty()) out.push_back(std::move(c));
  }
  return out;
}

struct ChrfStats {
  double hyp[6] = {};
  double ref[6] = {};
  double match[6] = {};
};

void add_chrf_stats(ChrfStats& st, std::string_view hyp, std::string_view ref) {
  const auto h = chars_of(hyp), r = chars_of(ref);
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto hc = ngrams(h, n), rc = ngrams(r, n);
    double m = 0.0, ht = 0.0, rt = 0.0;
    for (const auto& [g, c] : hc) {
      ht += static_cast<double>(c);
      auto it = rc.find(g);
      if (it != rc.end()) m += static_cast<double>(std::min(c, it->second));
    }
    for (const auto& [g, c] : rc) rt += static_cast<double>(c);
    st.hyp[n - 1] += ht;
    st.ref[n - 1] += rt;
    st.match[n - 1] += m;
  }
}

double chrf_score(const ChrfStats& st) {
  constexpr double beta2 = 4.0;
  double score = 0.0;
  int effective = 0;
  for (int n = 0; n < 6; ++n) {
    if (st.hyp[n] <= 0.0 || st.ref[n] <= 0.0) continue;
    ++effective;
    const double p = st.match[n] / st.hyp[n], r = st.match[n] / st.ref[n];
    const double denom = beta2 * p + r;
    if (denom > 0.0) score += (1.0 + beta2) * p * r / denom;
  }
  return effective ? 100.0 * score / effective : 0.0;
}

}  // namespace

double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references, BleuOptions options) {
  check_lengths(hypotheses.size(), references.size(), "bleu");
  if (references.empty()) fail(ErrorKind::data, "bleu: empty corpus");
  const auto N = static_cast<std::size_t>(options.max_order);
  std::vector<double> matches(N, 0.0), totals(N, 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto h = words_of(hypotheses[i]), r = words_of(references[i]);
    hyp_len += static_cast<double>(h.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= N; ++n) {
      const auto hc = ngrams(h, n), rc = ngrams(r, n);
      for (const auto& [g, c] : hc) {
        totals[n - 1] += static_cast<double>(c);
        auto it = rc.find(g);
        if (it != rc.end()) matches[n - 1] += static_cast<double>(std::min(c, it->second));
      }
    }
  }
  if (hyp_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    double m = matches[n], t = totals[n];
    if (options.add_one && n > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(N));
}

double chrf2(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  check_lengths(hypotheses.size(), references.size(), "chrf2");
  ChrfStats st;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) add_chrf_stats(st, hypotheses[i], references[i]);
  return chrf_score(st);
}

double sentence_chrf2(std::string_view hypothesis, std::string_view reference) {
  ChrfStats st;
  add_chrf_stats(st, hypothesis, reference);
  return chrf_score(st);
}

std::size_t word_edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

TerStats ter_sentence(std::span<const std::string> hypothesis, std::span<const std::string> reference) {
  constexpr std::size_t kMaxShift = 10;
  if (reference.empty()) {
    if (!hypothesis.empty()) fail(ErrorKind::data, "ter: empty reference with non-empty hypothesis");
    return {};
  }
  std::vector<std::string> h(hypothesis.begin(), hypothesis.end());
  std::size_t ed = word_edit_distance(h, reference);
  std::size_t shifts = 0;
  while (ed > 0) {
    std::size_t best_ed = ed;
    std::vector<std::string> best;
    for (std::size_t len = 1; len <= std::min(kMaxShift, h.size()); ++len) {
      for (std::size_t i = 0; i + len <= h.size(); ++i) {
        std::vector<std::string> rest(h.begin(), h.begin() + i);
        rest.insert(rest.end(), h.begin() + i + len, h.end());
        for (std::size_t j = 0; j <= rest.size(); ++j) {
          if (j == i) continue;
          std::vector<std::string> cand(rest.begin(), rest.begin() + j);
          cand.insert(cand.end(), h.begin() + i, h.begin() + i + len);
          cand.insert(cand.end(), rest.begin() + j, rest.end());
          const std::size_t e = word_edit_distance(cand, reference);
          if (e < best_ed) {
            best_ed = e;
            best = std::move(cand);
          }
        }
      }
    }
    if (best_ed >= ed) break;
    h = std::move(best);
    ed = best_ed;
    ++shifts;
  }
  return {static_cast<double>(ed + shifts), static_cast<double>(reference.size())};
}

double ter(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  check_lengths(hypotheses.size(), references.size(), "ter");
  double edits = 0.0, ref_words = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto st = ter_sentence(words_of(hypotheses[i]), words_of(references[i]));
    edits += st.edits;
    ref_words += st.reference_words;
  }
  return ref_words > 0.0 ? 100.0 * edits / ref_words : 0.0;
}

TaggingMetrics tagging_metrics(std::span<const std::vector<int>> predicted, std::span<const std::vector<int>> gold) {
  check_lengths(predicted.size(), gold.size(), "tagging_metrics");
  double tp = 0, fp = 0, fn = 0, exact = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) {
      fail(ErrorKind::data, "tagging_metrics: sentence " + std::to_string(i) + " has " +
                                std::to_string(predicted[i].size()) + " predictions for " +
                                std::to_string(gold[i].size()) + " labels");
    }
    bool all = true;
    for (std::size_t t = 0; t < gold[i].size(); ++t) {
      const int p = predicted[i][t], g = gold[i][t];
      tp += p == 1 && g == 1;
      fp += p == 1 && g != 1;
      fn += p != 1 && g == 1;
      all = all && p == g;
    }
    exact += all;
  }
  TaggingMetrics m;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.sentence_accuracy = gold.empty() ? 0.0 : exact / static_cast<double>(gold.size());
  return m;
}

MetricsReport evaluate_corpus(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  MetricsReport r;
  r.bleu = bleu(hypotheses, references);
  r.chrf2 = chrf2(hypotheses, references);
  r.ter = ter(hypotheses, references);
  r.n_sentences = hypotheses.size();
  return r;
}

json to_json(const MetricsReport& r) {
  json j{{"bleu", r.bleu}, {"chrf2", r.chrf2}, {"ter", r.ter}, {"n_sentences", r.n_sentences}};
  if (r.has_tagging) {
    j["tag_precision"] = r.tag_precision;
    j["tag_recall"] = r.tag_recall;
    j["tag_f1"] = r.tag_f1;
    j["sentence_accuracy"] = r.sentence_accuracy;
  }
  return j;
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport r;
  r.bleu = j.value("bleu", 0.0);
  r.chrf2 = j.value("chrf2", 0.0);
  r.ter = j.value("ter", 0.0);
  r.n_sentences = j.value("n_sentences", std::size_t{0});
  r.has_tagging = j.contains("tag_f1");
  r.tag_precision = j.value("tag_precision", 0.0);
  r.tag_recall = j.value("tag_recall", 0.0);
  r.tag_f1 = j.value("tag_f1", 0.0);
  r.sentence_accuracy = j.value("sentence_accuracy", 0.0);
  return r;
}

std::string format_table(std::span<const std::pair<std::string, MetricsReport>> columns) {
  bool tagging = false;
  for (const auto& c : columns) tagging = tagging || c.second.has_tagging;
  std::vector<std::pair<std::string, double MetricsReport::*>> rows{
      {"BLEU", &MetricsReport::bleu}, {"chrF2", &MetricsReport::chrf2}, {"TER", &MetricsReport::ter}};
  if (tagging) {
    rows.insert(rows.end(), {{"tag P", &MetricsReport::tag_precision},
                             {"tag R", &MetricsReport::tag_recall},
                             {"tag F1", &MetricsReport::tag_f1},
                             {"sent acc", &MetricsReport::sentence_accuracy}});
  }
  std::size_t width = 10;
  for (const auto& c : columns) width = std::max(width, c.first.size() + 2);
  std::ostringstream os;
  os << std::left << std::setw(12) << "metric";
  for (const auto& c : columns) os << std::right << std::setw(static_cast<int>(width)) << c.first;
  os << '\n';
  for (const auto& [label, field] : rows) {
    os << std::left << std::setw(12) << label;
    for (const auto& c : columns) {
      os << std::right << std::setw(static_cast<int>(width)) << std::fixed << std::setprecision(2)
         << c.second.*field;
    }
    os << '\n';
  }
  os << std::left << std::setw(12) << "sentences";
  for (const auto& c : columns) os << std::right << std::setw(static_cast<int>(width)) << c.second.n_sentences;
  os << '\n';
  return os.str();
}

}  // namespace dfc
