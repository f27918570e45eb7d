#pragma once

// Pre-LayerNorm transformer blocks shared by the fusion encoder and the generator.

#include <span>
#include <string>
#include <vector>

#include "mdug/autograd.hpp"
#include "mdug/params.hpp"

namespace mdug {

struct Linear {
  Parameter* w = nullptr;  // in x out
  Parameter* b = nullptr;  // 1 x out

  static Linear create(ParamSet& ps, const std::string& name, int in, int out, Rng& rng);
  Var operator()(Graph& g, Var x) const;
};

struct LayerNormParams {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNormParams create(ParamSet& ps, const std::string& name, int d);
  Var operator()(Graph& g, Var x) const;
};

struct AttentionBlock {
  Linear q, k, v, out;
  int n_heads = 1;

  static AttentionBlock create(ParamSet& ps, const std::string& name, int d, int n_heads, Rng& rng);
  /// Multi-head scaled dot-product attention. `mask` (queries x keys, additive) may be null;
  /// `head_bias`, when non-empty, holds one additional additive matrix per head.
  Var operator()(Graph& g, Var queries, Var keys_values, const Matrix* mask,
                 std::span<const Matrix> head_bias = {}) const;
};

struct FeedForward {
  Linear up, down;

  static FeedForward create(ParamSet& ps, const std::string& name, int d, int d_ff, Rng& rng);
  Var operator()(Graph& g, Var x) const;
};

struct EncoderBlock {
  LayerNormParams ln_attn, ln_ff;
  AttentionBlock attn;
  FeedForward ff;

  static EncoderBlock create(ParamSet& ps, const std::string& name, int d, int n_heads, int d_ff, Rng& rng);
  Var operator()(Graph& g, Var x, const Matrix* mask, double dropout, std::span<const Matrix> head_bias = {}) const;
};

struct DecoderBlock {
  LayerNormParams ln_self, ln_cross, ln_ff;
  AttentionBlock self_attn, cross_attn;
  FeedForward ff;

  static DecoderBlock create(ParamSet& ps, const std::string& name, int d, int n_heads, int d_ff, Rng& rng);
  Var operator()(Graph& g, Var x, Var memory, const Matrix& causal, double dropout) const;
};

/// n x n additive mask: 0 on and below the diagonal, -inf above.
Matrix causal_mask(int n);

/// Slope of the turn-distance penalty for head h: head 0 is global when there is more than one
/// head, the rest grow geometrically from 0.5 to 2.
double turn_slope(int head, int n_heads);

/// Per-head additive biases -slope_h * |turn_i - turn_j|. Positions with a negative turn
/// (e.g. [CLS]) are at distance 0 from everything.
std::vector<Matrix> turn_distance_bias(std::span<const int> turns, int n_heads);

}  // namespace mdug
