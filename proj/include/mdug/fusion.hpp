#pragma once

// Timeline-aligned multimodal encoder. Each utterance's pooled frame feature is
// projected to the model width and added to the embeddings of its tokens;
// a transformer stack, whose heads are biased towards nearby turns, then yields
// hidden states and one separator vector per utterance.

#include <cstdint>
#include <span>
#include <vector>

#include "mdug/autograd.hpp"
#include "mdug/corpus.hpp"
#include "mdug/transformer.hpp"
#include "mdug/vocab.hpp"

namespace mdug {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 64;
  int feature_dim = 16;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_tokens = 512;
  double dropout = 0.1;

  void validate() const;
};

struct AlignedFeature {
  std::vector<double> feature;
  bool clamped = false;  // no frame inside the interval; nearest frame used
};

/// Mean of the frames whose timestamp lies in [t_start, t_end]; the nearest frame when none does.
AlignedFeature align_frames(const Utterance& utterance, const FrameTrack& track);

/// Token-level view of a dialogue window, ready for the encoder.
struct EncoderInput {
  std::vector<int> tokens;             // [CLS] u_0 [SEP] u_1 [SEP] ...
  Matrix token_features;               // n_tokens x k; zero rows on special tokens
  std::vector<int> token_to_utterance; // -1 for special positions
  std::vector<int> token_turns;        // utterance index within the kept window; a [SEP] takes its utterance's, [CLS] -1
  std::vector<int> sep_positions;      // one per kept utterance
  int first_utterance = 0;             // index of the oldest utterance kept after truncation
  int clamp_warnings = 0;
};

/// Builds the encoder input; drops the oldest utterances until the sequence fits max_tokens.
/// `hide_text_from` replaces the text of utterances at or after that index by a single [UNK]
/// placeholder token that still carries the utterance's visual feature.
EncoderInput build_encoder_input(std::span<const Utterance> window, const FrameTrack& track, const Vocabulary& vocab,
                                 int max_tokens, int feature_dim, std::size_t hide_text_from = SIZE_MAX);

struct EncodedDialogue {
  Matrix hidden_states;  // n_tokens x d_model
  Matrix sep_vectors;    // n_utterances x d_model
  std::vector<int> token_to_utterance;
  int first_utterance = 0;
};

class FusionEncoder {
 public:
  FusionEncoder(ParamSet& params, const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const { return config_; }

  /// token embedding + position embedding (+ projected frame feature when fuse).
  Var embed_fused(Graph& g, std::span<const int> tokens, const Matrix& token_features, bool fuse = true) const;

  struct Output {
    Var hidden;
    Var seps;
  };
  Output forward(Graph& g, const EncoderInput& input, bool fuse = true) const;

  /// Evaluation-mode encoding of a prepared input.
  EncodedDialogue encode(const EncoderInput& input, bool fuse = true) const;
  /// Evaluation-mode encoding of a window; throws on an empty window.
  EncodedDialogue encode(std::span<const Utterance> window, const FrameTrack& track, const Vocabulary& vocab) const;

 private:
  EncoderConfig config_;
  Parameter* token_emb_;
  Parameter* pos_emb_;
  Linear proj_;
  std::vector<EncoderBlock> blocks_;
  LayerNormParams final_ln_;
};

}  // namespace mdug
