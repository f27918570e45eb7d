#include "mdug/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace mdug {

void EncoderConfig::validate() const {
  if (vocab_size <= kNumSpecial) throw std::invalid_argument("EncoderConfig: vocab_size too small");
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
    throw std::invalid_argument("EncoderConfig: d_model must be divisible by n_heads");
  if (feature_dim <= 0) throw std::invalid_argument("EncoderConfig: feature_dim must be positive");
  if (n_layers < 0 || d_ff <= 0) throw std::invalid_argument("EncoderConfig: bad layer sizes");
  if (max_tokens < 3) throw std::invalid_argument("EncoderConfig: max_tokens too small");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("EncoderConfig: dropout must lie in [0, 1)");
}

AlignedFeature align_frames(const Utterance& utterance, const FrameTrack& track) {
  if (track.empty()) throw std::invalid_argument("align_frames: empty frame track");
  AlignedFeature out;
  const std::size_t k = track.front().feature.size();
  std::vector<double> sum(k, 0.0);
  int hits = 0;
  for (const auto& f : track) {
    if (f.feature.size() != k) throw std::invalid_argument("align_frames: inconsistent frame dimension");
    if (f.t >= utterance.t_start && f.t <= utterance.t_end) {
      for (std::size_t j = 0; j < k; ++j) sum[j] += f.feature[j];
      ++hits;
    }
  }
  if (hits > 0) {
    for (double& v : sum) v /= hits;
    out.feature = std::move(sum);
    return out;
  }
  // Nearest frame by distance to the interval; earliest frame wins ties.
  std::size_t best = 0;
  double best_dist = INFINITY;
  for (std::size_t i = 0; i < track.size(); ++i) {
    const double t = track[i].t;
    const double dist = t < utterance.t_start ? utterance.t_start - t : t - utterance.t_end;
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  out.feature = track[best].feature;
  out.clamped = true;
  return out;
}

EncoderInput build_encoder_input(std::span<const Utterance> window, const FrameTrack& track, const Vocabulary& vocab,
                                 int max_tokens, int feature_dim, std::size_t hide_text_from) {
  if (window.empty()) throw std::invalid_argument("encode: empty dialogue window");
  std::vector<std::vector<int>> ids;
  ids.reserve(window.size());
  for (std::size_t i = 0; i < window.size(); ++i)
    ids.push_back(i >= hide_text_from ? std::vector<int>{kUnk} : vocab.encode(window[i].text));

  // Oldest utterances go first; the newest is kept even if it has to be cut.
  std::size_t first = 0;
  long total = 1;
  for (const auto& v : ids) total += static_cast<long>(v.size()) + 1;
  while (total > max_tokens && first + 1 < ids.size()) {
    total -= static_cast<long>(ids[first].size()) + 1;
    ++first;
  }
  if (total > max_tokens) ids.back().resize(static_cast<std::size_t>(max_tokens - 2));

  EncoderInput in;
  in.first_utterance = static_cast<int>(first);
  in.tokens.push_back(kCls);
  in.token_to_utterance.push_back(-1);
  in.token_turns.push_back(-1);
  std::vector<std::vector<double>> feats;
  feats.emplace_back(static_cast<std::size_t>(feature_dim), 0.0);
  for (std::size_t i = first; i < ids.size(); ++i) {
    const AlignedFeature af = align_frames(window[i], track);
    if (static_cast<int>(af.feature.size()) != feature_dim)
      throw std::invalid_argument("encode: frame feature dimension mismatch");
    in.clamp_warnings += af.clamped ? 1 : 0;
    for (int t : ids[i]) {
      in.tokens.push_back(t);
      in.token_to_utterance.push_back(static_cast<int>(i));
      in.token_turns.push_back(static_cast<int>(i - first));
      feats.push_back(af.feature);
    }
    in.sep_positions.push_back(static_cast<int>(in.tokens.size()));
    in.tokens.push_back(kSep);
    in.token_to_utterance.push_back(-1);
    in.token_turns.push_back(static_cast<int>(i - first));
    feats.emplace_back(static_cast<std::size_t>(feature_dim), 0.0);
  }
  in.token_features = Matrix(static_cast<int>(feats.size()), feature_dim);
  for (std::size_t r = 0; r < feats.size(); ++r)
    for (int c = 0; c < feature_dim; ++c) in.token_features(static_cast<int>(r), c) = feats[r][static_cast<std::size_t>(c)];
  return in;
}

FusionEncoder::FusionEncoder(ParamSet& params, const EncoderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const int d = config_.d_model;
  token_emb_ = &params.add("encoder.token_emb", config_.vocab_size, d);
  pos_emb_ = &params.add("encoder.pos_emb", config_.max_tokens, d);
  init_normal(*token_emb_, 1.0, rng);
  init_normal(*pos_emb_, 0.1, rng);
  proj_ = Linear::create(params, "encoder.frame_proj", config_.feature_dim, d, rng);
  for (int l = 0; l < config_.n_layers; ++l)
    blocks_.push_back(EncoderBlock::create(params, "encoder.layer" + std::to_string(l), d, config_.n_heads, config_.d_ff, rng));
  final_ln_ = LayerNormParams::create(params, "encoder.final_ln", d);
}

Var FusionEncoder::embed_fused(Graph& g, std::span<const int> tokens, const Matrix& token_features, bool fuse) const {
  const int n = static_cast<int>(tokens.size());
  if (n > config_.max_tokens) throw std::invalid_argument("embed_fused: sequence longer than max_tokens");
  if (token_features.rows() != n || token_features.cols() != config_.feature_dim)
    throw std::invalid_argument("embed_fused: token feature matrix has the wrong shape");
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
  Var x = g.add(g.embed(*token_emb_, tokens), g.embed(*pos_emb_, positions));
  if (fuse) x = g.add(x, proj_(g, g.constant(token_features)));
  return x;
}

FusionEncoder::Output FusionEncoder::forward(Graph& g, const EncoderInput& input, bool fuse) const {
  Var x = g.dropout(embed_fused(g, input.tokens, input.token_features, fuse), config_.dropout);
  std::vector<Matrix> bias;
  if (!input.token_turns.empty()) {
    if (input.token_turns.size() != input.tokens.size()) throw std::invalid_argument("encode: turn index count mismatch");
    bias = turn_distance_bias(input.token_turns, config_.n_heads);
  }
  for (const auto& b : blocks_) x = b(g, x, nullptr, config_.dropout, bias);
  Var h = final_ln_(g, x);
  return {h, g.gather_rows(h, input.sep_positions)};
}

EncodedDialogue FusionEncoder::encode(const EncoderInput& input, bool fuse) const {
  Graph g(false);
  const Output out = forward(g, input, fuse);
  return {g.value(out.hidden), g.value(out.seps), input.token_to_utterance, input.first_utterance};
}

EncodedDialogue FusionEncoder::encode(std::span<const Utterance> window, const FrameTrack& track,
                                      const Vocabulary& vocab) const {
  return encode(build_encoder_input(window, track, vocab, config_.max_tokens, config_.feature_dim));
}

}  // namespace mdug
