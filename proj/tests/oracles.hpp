#pragma once

// Independent reference computations used by the tests. Deliberately naive:
// explicit loops, maps and enumeration, no shared code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Table = std::vector<std::vector<double>>;  // rows x vocab

// Contrastive term of one example; rows are 1-based positions, r..T scored.
inline double contrastive(const Table& p, const std::vector<std::pair<int, double>>& penalty, std::size_t r,
                          bool full_norm) {
  if (penalty.empty()) return 0.0;
  const std::size_t T = p.size();
  double sum = 0.0;
  for (std::size_t t = r; t <= T; ++t) {
    double s = 0.0;
    for (std::size_t v = 0; v < p[t - 1].size(); ++v) {
      double w = 0.0;
      for (const auto& [id, wt] : penalty) {
        if (static_cast<std::size_t>(id) == v) w = std::max(w, wt);
      }
      s += w * p[t - 1][v];
    }
    if (s > 1.0 - 1e-6) s = 1.0 - 1e-6;
    sum += -std::log(1.0 - s);
  }
  const double z = full_norm ? static_cast<double>(T) : static_cast<double>(T - r + 1);
  return sum / z;
}

inline std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::map<std::vector<std::string>, int> ngrams(const std::vector<std::string>& w, std::size_t n) {
  std::map<std::vector<std::string>, int> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out[std::vector<std::string>(w.begin() + i, w.begin() + i + n)]++;
  return out;
}

// Corpus BLEU, clipped counts, brevity penalty, no smoothing.
inline double bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  double match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  double hl = 0, rl = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto h = split(hyps[i]), r = split(refs[i]);
    hl += h.size();
    rl += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto hc = ngrams(h, n), rc = ngrams(r, n);
      for (const auto& [g, c] : hc) {
        total[n - 1] += c;
        auto it = rc.find(g);
        if (it != rc.end()) match[n - 1] += std::min(c, it->second);
      }
    }
  }
  double logsum = 0;
  for (int n = 0; n < 4; ++n) {
    if (match[n] == 0) return 0.0;
    logsum += std::log(match[n] / total[n]);
  }
  const double bp = hl >= rl ? 1.0 : std::exp(1.0 - rl / hl);
  return 100.0 * bp * std::exp(logsum / 4.0);
}

// Character n-gram F2 for one pair, averaged over orders that exist on both
// sides.
inline double chrf2(const std::string& hyp, const std::string& ref) {
  std::string h, r;
  for (char c : hyp) {
    if (c != ' ') h += c;
  }
  for (char c : ref) {
    if (c != ' ') r += c;
  }
  double sum = 0;
  int orders = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::map<std::string, int> hc, rc;
    for (std::size_t i = 0; i + n <= h.size(); ++i) hc[h.substr(i, n)]++;
    for (std::size_t i = 0; i + n <= r.size(); ++i) rc[r.substr(i, n)]++;
    if (hc.empty() || rc.empty()) continue;
    double m = 0, ht = 0, rt = 0;
    for (const auto& [g, c] : hc) {
      ht += c;
      if (rc.count(g)) m += std::min(c, rc[g]);
    }
    for (const auto& [g, c] : rc) rt += c;
    const double p = m / ht, rec = m / rt;
    sum += (p + rec) > 0 ? 5.0 * p * rec / (4.0 * p + rec) : 0.0;
    ++orders;
  }
  return orders ? 100.0 * sum / orders : 0.0;
}

inline std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

// Minimum of shifts + edit distance over every sequence of at most
// `max_shifts` block moves. Exponential; tiny inputs only.
inline double min_shift_edits(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                              int max_shifts) {
  double best = static_cast<double>(edit_distance(hyp, ref));
  if (max_shifts == 0) return best;
  const std::size_t n = hyp.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t len = 1; i + len <= n; ++len) {
      std::vector<std::string> block(hyp.begin() + i, hyp.begin() + i + len);
      std::vector<std::string> rest(hyp.begin(), hyp.begin() + i);
      rest.insert(rest.end(), hyp.begin() + i + len, hyp.end());
      for (std::size_t at = 0; at <= rest.size(); ++at) {
        if (at == i) continue;
        std::vector<std::string> moved(rest.begin(), rest.begin() + at);
        moved.insert(moved.end(), block.begin(), block.end());
        moved.insert(moved.end(), rest.begin() + at, rest.end());
        best = std::min(best, 1.0 + min_shift_edits(moved, ref, max_shifts - 1));
      }
    }
  }
  return best;
}

// Among all embeddings of `fluent` into `disfluent`, the one whose positions
// are latest (compared from the last matched position backwards); label 1 on
// every unmatched position. Exhaustive over position subsets.
inline std::optional<std::vector<int>> rightmost_labels(const std::vector<std::string>& disfluent,
                                                        const std::vector<std::string>& fluent) {
  const std::size_t n = disfluent.size(), k = fluent.size();
  std::optional<std::vector<std::size_t>> best;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) pos.push_back(i);
    }
    bool ok = true;
    for (std::size_t j = 0; j < k && ok; ++j) ok = disfluent[pos[j]] == fluent[j];
    if (!ok) continue;
    if (!best || std::lexicographical_compare(best->rbegin(), best->rend(), pos.rbegin(), pos.rend())) best = pos;
  }
  if (!best) return std::nullopt;
  std::vector<int> labels(n, 1);
  for (std::size_t p : *best) labels[p] = 0;
  return labels;
}

}  // namespace oracle
