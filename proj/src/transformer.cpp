#include "mdug/transformer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mdug {

Linear Linear::create(ParamSet& ps, const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.w = &ps.add(name + ".w", in, out);
  l.b = &ps.add(name + ".b", 1, out);
  init_normal(*l.w, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  return l;
}

Var Linear::operator()(Graph& g, Var x) const { return g.add_row(g.matmul(x, g.param(*w)), g.param(*b)); }

LayerNormParams LayerNormParams::create(ParamSet& ps, const std::string& name, int d) {
  LayerNormParams ln;
  ln.gain = &ps.add(name + ".gain", 1, d);
  ln.bias = &ps.add(name + ".bias", 1, d);
  init_constant(*ln.gain, 1.0);
  return ln;
}

Var LayerNormParams::operator()(Graph& g, Var x) const { return g.layer_norm(x, g.param(*gain), g.param(*bias)); }

AttentionBlock AttentionBlock::create(ParamSet& ps, const std::string& name, int d, int n_heads, Rng& rng) {
  if (n_heads <= 0 || d % n_heads != 0) throw std::invalid_argument("d_model must be divisible by n_heads");
  AttentionBlock a;
  a.q = Linear::create(ps, name + ".q", d, d, rng);
  a.k = Linear::create(ps, name + ".k", d, d, rng);
  a.v = Linear::create(ps, name + ".v", d, d, rng);
  a.out = Linear::create(ps, name + ".out", d, d, rng);
  a.n_heads = n_heads;
  return a;
}

Var AttentionBlock::operator()(Graph& g, Var queries, Var keys_values, const Matrix* mask,
                               std::span<const Matrix> head_bias) const {
  if (!head_bias.empty() && static_cast<int>(head_bias.size()) != n_heads)
    throw std::invalid_argument("attention: need one bias matrix per head");
  Var qa = q(g, queries);
  Var ka = k(g, keys_values);
  Var va = v(g, keys_values);
  const int d = g.value(qa).cols();
  const int dh = d / n_heads;
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    Var qh = n_heads == 1 ? qa : g.slice_cols(qa, h * dh, (h + 1) * dh);
    Var kh = n_heads == 1 ? ka : g.slice_cols(ka, h * dh, (h + 1) * dh);
    Var vh = n_heads == 1 ? va : g.slice_cols(va, h * dh, (h + 1) * dh);
    Var scores = g.scale(g.matmul_nt(qh, kh), s);
    if (mask != nullptr) scores = g.add_constant(scores, *mask);
    if (!head_bias.empty()) scores = g.add_constant(scores, head_bias[static_cast<std::size_t>(h)]);
    heads.push_back(g.matmul(g.softmax(scores), vh));
  }
  Var merged = n_heads == 1 ? heads[0] : g.concat_cols(heads);
  return out(g, merged);
}

FeedForward FeedForward::create(ParamSet& ps, const std::string& name, int d, int d_ff, Rng& rng) {
  return FeedForward{Linear::create(ps, name + ".up", d, d_ff, rng), Linear::create(ps, name + ".down", d_ff, d, rng)};
}

Var FeedForward::operator()(Graph& g, Var x) const { return down(g, g.gelu(up(g, x))); }

EncoderBlock EncoderBlock::create(ParamSet& ps, const std::string& name, int d, int n_heads, int d_ff, Rng& rng) {
  EncoderBlock b;
  b.ln_attn = LayerNormParams::create(ps, name + ".ln_attn", d);
  b.attn = AttentionBlock::create(ps, name + ".attn", d, n_heads, rng);
  b.ln_ff = LayerNormParams::create(ps, name + ".ln_ff", d);
  b.ff = FeedForward::create(ps, name + ".ff", d, d_ff, rng);
  return b;
}

Var EncoderBlock::operator()(Graph& g, Var x, const Matrix* mask, double dropout, std::span<const Matrix> head_bias) const {
  Var h = ln_attn(g, x);
  x = g.add(x, g.dropout(attn(g, h, h, mask, head_bias), dropout));
  return g.add(x, g.dropout(ff(g, ln_ff(g, x)), dropout));
}

DecoderBlock DecoderBlock::create(ParamSet& ps, const std::string& name, int d, int n_heads, int d_ff, Rng& rng) {
  DecoderBlock b;
  b.ln_self = LayerNormParams::create(ps, name + ".ln_self", d);
  b.self_attn = AttentionBlock::create(ps, name + ".self_attn", d, n_heads, rng);
  b.ln_cross = LayerNormParams::create(ps, name + ".ln_cross", d);
  b.cross_attn = AttentionBlock::create(ps, name + ".cross_attn", d, n_heads, rng);
  b.ln_ff = LayerNormParams::create(ps, name + ".ln_ff", d);
  b.ff = FeedForward::create(ps, name + ".ff", d, d_ff, rng);
  return b;
}

Var DecoderBlock::operator()(Graph& g, Var x, Var memory, const Matrix& causal, double dropout) const {
  Var h = ln_self(g, x);
  x = g.add(x, g.dropout(self_attn(g, h, h, &causal), dropout));
  x = g.add(x, g.dropout(cross_attn(g, ln_cross(g, x), memory, nullptr), dropout));
  return g.add(x, g.dropout(ff(g, ln_ff(g, x)), dropout));
}

Matrix causal_mask(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = -std::numeric_limits<double>::infinity();
  return m;
}

double turn_slope(int head, int n_heads) {
  if (n_heads == 1) return 1.0;
  if (head == 0) return 0.0;
  if (n_heads == 2) return 1.0;
  return 0.5 * std::pow(4.0, static_cast<double>(head - 1) / (n_heads - 2));
}

std::vector<Matrix> turn_distance_bias(std::span<const int> turns, int n_heads) {
  const int n = static_cast<int>(turns.size());
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    const double slope = turn_slope(h, n_heads);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      const int ti = turns[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        const int tj = turns[static_cast<std::size_t>(j)];
        if (ti >= 0 && tj >= 0) m(i, j) = -slope * std::abs(ti - tj);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mdug
