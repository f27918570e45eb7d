#include <cmath>
#include <stdexcept>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "mdug/metrics.hpp"

using namespace mdug;

namespace {

Tokens toks(const std::string& s) { return tokenize(s); }

// Plain CIDEr (no length penalty, no clipping), written independently: tf = count / total n-grams of that order,
// idf = log(N / max(1, df)), cosine per order, mean over orders, times 10, mean over candidates.
double reference_cider(const std::vector<Tokens>& cands, const std::vector<References>& refs) {
  using Counts = std::map<std::vector<std::string>, double>;
  auto grams = [](const Tokens& t, int n) {
    Counts c;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i)
      c[std::vector<std::string>(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i) + n)] += 1.0;
    return c;
  };
  const double N = static_cast<double>(refs.size());
  double total = 0.0;
  for (std::size_t d = 0; d < cands.size(); ++d) {
    double per_n = 0.0;
    for (int n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, double> df;
      for (const auto& rs : refs) {
        std::map<std::vector<std::string>, bool> seen;
        for (const auto& r : rs)
          for (const auto& [g, _] : grams(r, n)) seen[g] = true;
        for (const auto& [g, _] : seen) df[g] += 1.0;
      }
      auto vec = [&](const Tokens& t) {
        Counts c = grams(t, n);
        double sum = 0.0;
        for (auto& [g, v] : c) sum += v;
        for (auto& [g, v] : c) v = (v / sum) * std::log(N / std::max(1.0, df[g]));
        return c;
      };
      const Counts cv = vec(cands[d]);
      double sim = 0.0;
      for (const auto& r : refs[d]) {
        const Counts rv = vec(r);
        double dot = 0.0, nc = 0.0, nr = 0.0;
        for (const auto& [g, v] : cv) {
          nc += v * v;
          auto it = rv.find(g);
          if (it != rv.end()) dot += v * it->second;
        }
        for (const auto& [g, v] : rv) nr += v * v;
        if (nc > 0 && nr > 0) sim += dot / std::sqrt(nc * nr);
      }
      per_n += sim / static_cast<double>(refs[d].size());
    }
    total += 10.0 * per_n / 4.0;
  }
  return total / static_cast<double>(cands.size());
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("F1 is the harmonic mean of precision and recall") {
    CHECK(std::abs(f1_from(0.56094, 0.12062) - 0.19854) <= 1e-4);
    CHECK(std::abs(f1_from(0.57811, 0.25598) - 0.35484) <= 1e-4);
    CHECK(f1_from(0.0, 0.0) == 0.0);
  }

  TEST_CASE("boundary counts and rates") {
    const std::vector<int> pred{1, 0, 1, 0, 0, 1};
    const std::vector<int> gold{1, 1, 0, 0, 0, 1};
    const auto s = boundary_score(pred, gold);
    CHECK(s.tp == 2);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
    CHECK(s.tn == 2);
    CHECK(s.acc == doctest::Approx(4.0 / 6.0));
    CHECK(s.precision == doctest::Approx(2.0 / 3.0));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(boundary_score({1}, {1, 0}), std::invalid_argument);
  }

  TEST_CASE("all-negative predictions score 1 - p accuracy and zero F1") {
    std::vector<int> gold(1000, 0);
    for (int i = 0; i < 84; ++i) gold[static_cast<std::size_t>(i * 11)] = 1;
    const auto s = boundary_score(std::vector<int>(1000, 0), gold);
    CHECK(s.acc == doctest::Approx(1.0 - 84.0 / 1000.0));
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
  }

  TEST_CASE("BLEU-1") {
    CHECK(bleu1({toks("a b c")}, {{toks("a b c")}}) == doctest::Approx(1.0));
    CHECK(std::abs(bleu1({toks("the the the")}, {{toks("the cat")}}) - 1.0 / 3.0) <= 1e-4);
    CHECK(bleu1({Tokens{}}, {{toks("the cat")}}) == 0.0);
    // Short candidate: p1 = 1, BP = exp(1 - 4/2).
    CHECK(bleu1({toks("a b")}, {{toks("a b c d")}}) == doctest::Approx(std::exp(-1.0)));
  }

  TEST_CASE("ROUGE-L") {
    CHECK(lcs_length(toks("a b c d"), toks("a c d")) == 3);
    CHECK(rouge_l({toks("x y")}, {{toks("x y")}}) == doctest::Approx(1.0));
    const double expected = (1 + 1.44) * 1.0 * 0.75 / (1.0 + 1.44 * 0.75);
    CHECK(std::abs(rouge_l({toks("a b c d")}, {{toks("a c d")}}) - 0.8798) <= 1e-4);
    CHECK(rouge_l({toks("a b c d")}, {{toks("a c d")}}) == doctest::Approx(expected));
    CHECK(rouge_l({toks("a b")}, {{toks("c d")}}) == 0.0);
  }

  TEST_CASE("METEOR-lite closed forms") {
    CHECK(meteor_pair(toks("hello"), {toks("hello")}) == doctest::Approx(0.5));
    for (int m : {2, 5, 9}) {
      Tokens t;
      for (int i = 0; i < m; ++i) t.push_back("w" + std::to_string(i));
      CHECK(meteor_pair(t, {t}) == doctest::Approx(1.0 - 0.5 / (m * m * m)));
    }
    CHECK(meteor_pair(toks("a b"), {toks("c d")}) == 0.0);
    // Stem match aligns "walking" with "walked".
    CHECK(meteor_pair(toks("walking"), {toks("walked")}) > 0.0);
  }

  TEST_CASE("CIDEr against an independent implementation") {
    const std::vector<Tokens> cands{toks("a cat sat on the mat"), toks("dogs run very fast"), toks("birds fly high up")};
    const std::vector<References> refs{{toks("a cat sat on the mat")}, {toks("dogs run very fast")}, {toks("birds fly high up")}};
    // Every n-gram occurs in one document only, so identity scores the maximum.
    CHECK(cider(cands, refs) == doctest::Approx(10.0));
    CHECK(cider(cands, refs) == doctest::Approx(reference_cider(cands, refs)));

    const std::vector<Tokens> mixed{toks("a cat ran on the grass"), toks("dogs walk fast"), toks("zz yy")};
    CHECK(cider(mixed, refs) == doctest::Approx(reference_cider(mixed, refs)).epsilon(1e-9));
    CHECK(cider({toks("zz yy")}, {{toks("a b")}}, refs) == 0.0);

    // An n-gram in every reference document has idf 0 and adds nothing.
    const std::vector<References> shared{{toks("x a")}, {toks("x b")}};
    CHECK(cider({toks("x"), toks("x")}, shared) == 0.0);
  }

  TEST_CASE("identical candidate and reference corpus") {
    const std::vector<std::string> c{"the cat sat on a mat", "dogs run fast today", "birds fly high"};
    const GenScore s = score_generation(c, c);
    CHECK(s.bleu1 == doctest::Approx(1.0));
    CHECK(s.rouge_l == doctest::Approx(1.0));
    // "birds fly high" has no 4-grams, so its 4-gram similarity is 0.
    const double cider = 10.0 * (1.0 + 1.0 + 0.75) / 3.0;
    CHECK(s.cider == doctest::Approx(cider));
    const double meteor = ((1.0 - 0.5 / 216.0) + (1.0 - 0.5 / 64.0) + (1.0 - 0.5 / 27.0)) / 3.0;
    CHECK(s.meteor == doctest::Approx(meteor));
    CHECK(s.avg() == doctest::Approx((100.0 + 100.0 + 100.0 * meteor + cider) / 4.0));
  }

  TEST_CASE("random boundaries are seeded fair coins") {
    const auto a = random_boundaries(20000, 1), b = random_boundaries(20000, 1), c = random_boundaries(20000, 2);
    CHECK(a == b);
    CHECK(a != c);
    long ones = 0;
    for (int v : a) ones += v;
    CHECK(std::abs(static_cast<double>(ones) / 20000.0 - 0.5) < 0.02);
  }

  TEST_CASE("random responses stay in the vocabulary") {
    const Vocabulary v({"a", "b", "c"});
    for (const auto& r : random_responses(50, v, 5, 3)) {
      const auto t = tokenize(r);
      CHECK(t.size() >= 1);
      CHECK(t.size() <= 5);
      for (const auto& w : t) CHECK(v.contains(w));
    }
  }
}
