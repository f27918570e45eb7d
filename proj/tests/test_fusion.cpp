#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "mdug/fusion.hpp"
#include "support.hpp"

using namespace mdug;

namespace {

Utterance utt(const std::string& text, double t0, double t1, std::vector<double> f = {}) {
  Utterance u;
  u.text = text;
  u.t_start = t0;
  u.t_end = t1;
  u.frame_feature = std::move(f);
  return u;
}

EncoderConfig tiny_config(int vocab, int k) {
  EncoderConfig c;
  c.vocab_size = vocab;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.n_layers = 2;
  c.feature_dim = k;
  c.max_tokens = 64;
  return c;
}

// Nearest frame by brute force: smallest distance to the interval, earliest index on ties.
std::vector<double> brute_force_align(const Utterance& u, const FrameTrack& track) {
  std::vector<double> sum(track.front().feature.size(), 0.0);
  int hits = 0;
  for (const auto& f : track)
    if (u.t_start <= f.t && f.t <= u.t_end) {
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += f.feature[j];
      ++hits;
    }
  if (hits) {
    for (double& v : sum) v /= hits;
    return sum;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    auto dist = [&](double t) { return std::max(u.t_start - t, t - u.t_end); };
    if (dist(track[i].t) < dist(track[best].t)) best = i;
  }
  return track[best].feature;
}

struct Fixture {
  Vocabulary vocab{{"alpha", "beta", "gamma", "delta", "eps"}};
  std::vector<Utterance> window{utt("alpha beta", 0, 1, {1, 0, 0}), utt("gamma", 1.2, 2, {0, 1, 0}),
                                utt("delta eps alpha", 2.5, 4, {0, 0, 1})};
  FrameTrack track() const {
    FrameTrack t;
    for (const auto& u : window) t.push_back({0.5 * (u.t_start + u.t_end), u.frame_feature});
    return t;
  }
};

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("align_frames") {
    const FrameTrack track{{1.0, {1, 2}}, {2.0, {3, 4}}, {3.0, {5, 6}}, {7.0, {7, 8}}};
    SUBCASE("an interval covering one frame returns it unchanged") {
      const auto a = align_frames(utt("", 0.5, 1.5), track);
      CHECK(a.feature == std::vector<double>{1, 2});
      CHECK_FALSE(a.clamped);
    }
    SUBCASE("two covered frames are averaged") {
      CHECK(align_frames(utt("", 1.5, 3.0), track).feature == std::vector<double>{4, 5});
    }
    SUBCASE("an interval before every frame clamps to the first") {
      const auto a = align_frames(utt("", 0.0, 0.2), track);
      CHECK(a.feature == std::vector<double>{1, 2});
      CHECK(a.clamped);
    }
    SUBCASE("an empty track is an error") { CHECK_THROWS_AS(align_frames(utt("", 0, 1), {}), std::invalid_argument); }
  }

  TEST_CASE("align_frames agrees with a brute-force scan") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(0.0, 20.0), len(0.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
      FrameTrack track;
      const int n = 1 + trial % 7;
      for (int i = 0; i < n; ++i) track.push_back({std::round(t(rng) * 2) / 2, {t(rng), t(rng)}});
      const double s = std::round(t(rng) * 2) / 2;
      const Utterance u = utt("", s, s + std::round(len(rng) * 2) / 2);
      const auto expected = brute_force_align(u, track);
      const auto got = align_frames(u, track).feature;
      REQUIRE(got.size() == expected.size());
      for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }
  }

  TEST_CASE("encoder input layout") {
    Fixture fx;
    const auto in = build_encoder_input(fx.window, fx.track(), fx.vocab, 64, 3);
    CHECK(in.tokens.size() == 10);
    CHECK(in.tokens.front() == kCls);
    CHECK(in.sep_positions == std::vector<int>{3, 5, 9});
    CHECK(in.token_to_utterance == std::vector<int>{-1, 0, 0, -1, 1, -1, 2, 2, 2, -1});
    CHECK(in.token_turns == std::vector<int>{-1, 0, 0, 0, 1, 1, 2, 2, 2, 2});
    for (int p : in.sep_positions)
      for (int j = 0; j < 3; ++j) CHECK(in.token_features(p, j) == 0.0);
    CHECK(in.token_features(4, 1) == 1.0);
  }

  TEST_CASE("hidden text keeps the frame feature") {
    Fixture fx;
    const auto in = build_encoder_input(fx.window, fx.track(), fx.vocab, 64, 3, 2);
    CHECK(in.tokens == std::vector<int>{kCls, fx.vocab.id("alpha"), fx.vocab.id("beta"), kSep, fx.vocab.id("gamma"), kSep, kUnk, kSep});
    CHECK(in.token_features(6, 2) == 1.0);
  }

  TEST_CASE("truncation drops the oldest utterances and keeps the newest") {
    Fixture fx;
    const auto in = build_encoder_input(fx.window, fx.track(), fx.vocab, 6, 3);
    CHECK(in.first_utterance == 2);
    CHECK(in.sep_positions.size() == 1);
    CHECK(in.tokens.size() == 5);
    const auto cut = build_encoder_input(fx.window, fx.track(), fx.vocab, 4, 3);
    CHECK(cut.tokens.size() == 4);
    CHECK(cut.tokens.back() == kSep);
    CHECK_THROWS_AS(build_encoder_input({}, fx.track(), fx.vocab, 64, 3), std::invalid_argument);
  }

  TEST_CASE("zero features with zero projection bias give the text-only encoder bit for bit") {
    Fixture fx;
    Rng rng(3);
    ParamSet ps;
    FusionEncoder enc(ps, tiny_config(fx.vocab.size(), 3), rng);
    auto in = build_encoder_input(fx.window, fx.track(), fx.vocab, 64, 3);
    in.token_features = Matrix(in.token_features.rows(), 3);
    REQUIRE(ps.at("encoder.frame_proj.b").value.flat()[0] == 0.0);
    const auto fused = enc.encode(in, true);
    const auto text_only = enc.encode(in, false);
    CHECK(fused.hidden_states == text_only.hidden_states);
    CHECK(fused.sep_vectors == text_only.sep_vectors);
  }

  TEST_CASE("the visual term is linear in the frame feature and equals f W_proj") {
    Fixture fx;
    Rng rng(4);
    ParamSet ps;
    FusionEncoder enc(ps, tiny_config(fx.vocab.size(), 3), rng);
    const std::vector<int> tokens{kCls, 6, kSep};
    Matrix f(3, 3), f2(3, 3), zero(3, 3);
    f(1, 0) = 0.3;
    f(1, 1) = -1.2;
    f(1, 2) = 2.0;
    for (std::size_t i = 0; i < f.size(); ++i) f2.data()[i] = 2.0 * f.data()[i];
    Graph g(false);
    const Matrix e0 = g.value(enc.embed_fused(g, tokens, zero));
    const Matrix e1 = g.value(enc.embed_fused(g, tokens, f));
    const Matrix e2 = g.value(enc.embed_fused(g, tokens, f2));
    const Matrix& w = ps.at("encoder.frame_proj.w").value;
    for (int c = 0; c < 16; ++c) {
      CHECK(e2(1, c) - e0(1, c) == doctest::Approx(2.0 * (e1(1, c) - e0(1, c))));
      double oracle = 0.0;
      for (int j = 0; j < 3; ++j) oracle += f(1, j) * w(j, c);
      CHECK(e1(1, c) - e0(1, c) == doctest::Approx(oracle).epsilon(1e-12));
      CHECK(e1(0, c) == e0(0, c));
    }
    CHECK_THROWS_AS(enc.embed_fused(g, tokens, Matrix(3, 2)), std::invalid_argument);
  }

  TEST_CASE("encoding is deterministic, one sep vector per utterance, and order-sensitive") {
    Fixture fx;
    Rng rng(6);
    ParamSet ps;
    FusionEncoder enc(ps, tiny_config(fx.vocab.size(), 3), rng);
    const auto a = enc.encode(fx.window, fx.track(), fx.vocab);
    const auto b = enc.encode(fx.window, fx.track(), fx.vocab);
    CHECK(a.sep_vectors.rows() == 3);
    CHECK(a.sep_vectors == b.sep_vectors);

    auto swapped = fx.window;
    std::swap(swapped[0].text, swapped[2].text);
    const auto c = enc.encode(swapped, fx.track(), fx.vocab);
    CHECK(c.sep_vectors != a.sep_vectors);

    const std::vector<Utterance> one{fx.window[1]};
    CHECK(enc.encode(one, fx.track(), fx.vocab).sep_vectors.rows() == 1);
  }

  TEST_CASE("turn-distance bias") {
    const std::vector<int> turns{-1, 0, 0, 1, 2};
    const auto b = turn_distance_bias(turns, 4);
    REQUIRE(b.size() == 4);
    CHECK(b[0](1, 4) == 0.0);
    CHECK(b[1](1, 4) == doctest::Approx(-2.0 * turn_slope(1, 4)));
    CHECK(b[3](3, 1) == doctest::Approx(-2.0));
    CHECK(b[3](0, 4) == 0.0);  // [CLS] is never penalised
    CHECK(b[2](1, 2) == 0.0);
    CHECK(turn_slope(0, 1) > 0.0);
  }

  TEST_CASE("config validation") {
    EncoderConfig c = tiny_config(20, 3);
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config(20, 3);
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
}
