#include "mdug/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace mdug {

double f1_from(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

BoundaryScore score_from_counts(long tp, long fp, long tn, long fn) {
  BoundaryScore s;
  s.tp = tp;
  s.fp = fp;
  s.tn = tn;
  s.fn = fn;
  const long n = tp + fp + tn + fn;
  s.acc = n > 0 ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = f1_from(s.precision, s.recall);
  return s;
}

BoundaryScore boundary_score(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size()) throw std::invalid_argument("boundary_score: prediction and gold lengths differ");
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (golds[i] != 0 && golds[i] != 1))
      throw std::invalid_argument("boundary_score: labels must be 0 or 1");
    if (preds[i] == 1) {
      golds[i] == 1 ? ++tp : ++fp;
    } else {
      golds[i] == 1 ? ++fn : ++tn;
    }
  }
  return score_from_counts(tp, fp, tn, fn);
}

namespace {

void check_sizes(std::size_t c, std::size_t r, const char* who) {
  if (c != r) throw std::invalid_argument(std::string(who) + ": candidate and reference counts differ");
}

std::map<std::string, int> unigram_counts(const Tokens& t) {
  std::map<std::string, int> m;
  for (const auto& w : t) ++m[w];
  return m;
}

using NgramCounts = std::map<std::string, int>;

// n-gram counts for n = 1..4, keyed by the space-joined n-gram.
std::array<NgramCounts, 4> ngram_counts(const Tokens& t) {
  std::array<NgramCounts, 4> out;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
      std::string key = t[i];
      for (std::size_t j = 1; j < n; ++j) key += ' ' + t[i + j];
      ++out[n - 1][key];
    }
  }
  return out;
}

}  // namespace

double bleu1(const std::vector<Tokens>& candidates, const std::vector<References>& references) {
  check_sizes(candidates.size(), references.size(), "bleu1");
  long guess = 0, correct = 0, cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto& refs = references[i];
    if (refs.empty()) throw std::invalid_argument("bleu1: candidate without reference");
    std::map<std::string, int> max_ref;
    long closest = -1;
    const long c = static_cast<long>(cand.size());
    for (const auto& r : refs) {
      for (const auto& [w, k] : unigram_counts(r)) max_ref[w] = std::max(max_ref[w], k);
      const long rl = static_cast<long>(r.size());
      if (closest < 0 || std::labs(rl - c) < std::labs(closest - c) || (std::labs(rl - c) == std::labs(closest - c) && rl < closest))
        closest = rl;
    }
    for (const auto& [w, k] : unigram_counts(cand)) {
      auto it = max_ref.find(w);
      if (it != max_ref.end()) correct += std::min(k, it->second);
    }
    guess += c;
    cand_len += c;
    ref_len += closest;
  }
  if (cand_len == 0) return 0.0;
  const double p1 = static_cast<double>(correct) / static_cast<double>(guess);
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
  return p1 * bp;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_pair(const Tokens& candidate, const References& refs) {
  constexpr double kBeta = 1.2;
  if (candidate.empty()) return 0.0;
  double pmax = 0.0, rmax = 0.0;
  for (const auto& r : refs) {
    if (r.empty()) continue;
    const double l = static_cast<double>(lcs_length(candidate, r));
    pmax = std::max(pmax, l / static_cast<double>(candidate.size()));
    rmax = std::max(rmax, l / static_cast<double>(r.size()));
  }
  if (pmax == 0.0 || rmax == 0.0) return 0.0;
  return (1.0 + kBeta * kBeta) * pmax * rmax / (rmax + kBeta * kBeta * pmax);
}

double rouge_l(const std::vector<Tokens>& candidates, const std::vector<References>& references) {
  check_sizes(candidates.size(), references.size(), "rouge_l");
  if (candidates.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) s += rouge_l_pair(candidates[i], references[i]);
  return s / static_cast<double>(candidates.size());
}

std::string stem(const std::string& word) {
  static const char* const kSuffixes[] = {"ing", "ed", "es", "ly", "s"};
  for (const char* suf : kSuffixes) {
    const std::string s(suf);
    if (word.size() >= s.size() + 3 && word.compare(word.size() - s.size(), s.size(), s) == 0)
      return word.substr(0, word.size() - s.size());
  }
  return word;
}

namespace {

double meteor_single(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<int> align(cand.size(), -1);
  std::vector<bool> used(ref.size(), false);
  // Stage 1 exact, stage 2 stem; each candidate token takes the earliest free reference token.
  for (int stage = 0; stage < 2; ++stage) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (align[i] >= 0) continue;
      const std::string ci = stage == 0 ? cand[i] : stem(cand[i]);
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (used[j]) continue;
        const std::string rj = stage == 0 ? ref[j] : stem(ref[j]);
        if (ci == rj) {
          align[i] = static_cast<int>(j);
          used[j] = true;
          break;
        }
      }
    }
  }
  int m = 0, chunks = 0, prev = -2;
  bool in_chunk = false;
  for (int a : align) {
    if (a < 0) {
      in_chunk = false;
      continue;
    }
    ++m;
    if (!in_chunk || a != prev + 1) ++chunks;
    in_chunk = true;
    prev = a;
  }
  if (m == 0) return 0.0;
  const double p = static_cast<double>(m) / static_cast<double>(cand.size());
  const double r = static_cast<double>(m) / static_cast<double>(ref.size());
  const double fmean = p * r / (0.9 * p + 0.1 * r);
  const double frag = static_cast<double>(chunks) / static_cast<double>(m);
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

}  // namespace

double meteor_pair(const Tokens& candidate, const References& refs) {
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, meteor_single(candidate, r));
  return best;
}

double meteor_lite(const std::vector<Tokens>& candidates, const std::vector<References>& references) {
  check_sizes(candidates.size(), references.size(), "meteor_lite");
  if (candidates.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) s += meteor_pair(candidates[i], references[i]);
  return s / static_cast<double>(candidates.size());
}

double cider(const std::vector<Tokens>& candidates, const std::vector<References>& references,
             const std::vector<References>& idf_corpus) {
  check_sizes(candidates.size(), references.size(), "cider");
  if (candidates.empty() || idf_corpus.empty()) return 0.0;
  std::map<std::string, int> df;
  for (const auto& doc : idf_corpus) {
    std::set<std::string> seen;
    for (const auto& r : doc)
      for (const auto& order : ngram_counts(r))
        for (const auto& [g, c] : order) seen.insert(g);
    for (const auto& g : seen) ++df[g];
  }
  const double log_n = std::log(static_cast<double>(idf_corpus.size()));

  struct Vec {
    std::array<std::map<std::string, double>, 4> w;
    std::array<double, 4> norm{};
  };
  auto vectorize = [&](const Tokens& t) {
    Vec v;
    const auto counts = ngram_counts(t);
    for (std::size_t n = 0; n < 4; ++n) {
      double sq = 0.0;
      for (const auto& [g, tf] : counts[n]) {
        auto it = df.find(g);
        const double d = it == df.end() ? 1.0 : static_cast<double>(std::max(1, it->second));
        const double x = static_cast<double>(tf) * (log_n - std::log(d));
        v.w[n][g] = x;
        sq += x * x;
      }
      v.norm[n] = std::sqrt(sq);
    }
    return v;
  };

  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Vec hv = vectorize(candidates[i]);
    std::array<double, 4> sims{};
    for (const auto& r : references[i]) {
      const Vec rv = vectorize(r);
      for (std::size_t n = 0; n < 4; ++n) {
        double dot = 0.0;
        for (const auto& [g, x] : hv.w[n]) {
          auto it = rv.w[n].find(g);
          if (it != rv.w[n].end()) dot += x * it->second;
        }
        if (hv.norm[n] != 0.0 && rv.norm[n] != 0.0) sims[n] += dot / (hv.norm[n] * rv.norm[n]);
      }
    }
    double mean = 0.0;
    for (double s : sims) mean += s;
    mean /= 4.0;
    if (!references[i].empty()) mean /= static_cast<double>(references[i].size());
    total += 10.0 * mean;
  }
  return total / static_cast<double>(candidates.size());
}

double cider(const std::vector<Tokens>& candidates, const std::vector<References>& references) {
  return cider(candidates, references, references);
}

GenScore score_generation(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  check_sizes(candidates.size(), references.size(), "score_generation");
  std::vector<Tokens> cands;
  std::vector<References> refs;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cands.push_back(tokenize(candidates[i]));
    refs.push_back({tokenize(references[i])});
  }
  GenScore s;
  s.bleu1 = bleu1(cands, refs);
  s.rouge_l = rouge_l(cands, refs);
  s.meteor = meteor_lite(cands, refs);
  s.cider = cider(cands, refs);
  return s;
}

std::vector<int> random_boundaries(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<int> out(n);
  for (auto& v : out) v = coin(rng) ? 1 : 0;
  return out;
}

std::vector<std::string> random_responses(std::size_t n, const Vocabulary& vocab, int max_len, std::uint64_t seed) {
  if (max_len < 1) throw std::invalid_argument("random_responses: max_len must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> tok(kNumSpecial, vocab.size() - 1);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> ids(static_cast<std::size_t>(len(rng)));
    for (int& t : ids) t = tok(rng);
    out.push_back(vocab.decode(ids));
  }
  return out;
}

}  // namespace mdug
