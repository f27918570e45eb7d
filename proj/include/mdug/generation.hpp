#pragma once

// Encoder-decoder response generator trained with teacher forcing, plus greedy
// and beam decoding.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mdug/optim.hpp"
#include "mdug/prompting.hpp"
#include "mdug/transformer.hpp"
#include "mdug/vocab.hpp"

namespace mdug {

struct GeneratorConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_enc_layers = 2;
  int n_dec_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_input = 512;
  int max_target = 48;  // including [BOS] and [EOS]
  double dropout = 0.1;

  void validate() const;
};

class GeneratorModel {
 public:
  GeneratorModel(const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  ParamSet& params() { return *params_; }
  const ParamSet& params() const { return *params_; }

  /// n x d encoder states for the assembled input.
  Var encode(Graph& g, std::span<const int> input_ids) const;
  /// T x V next-token logits for each prefix position of `decoder_ids`.
  Var decode(Graph& g, Var memory, std::span<const int> decoder_ids) const;

  /// Encoder states as a plain matrix (inference).
  Matrix memory(std::span<const int> input_ids) const;
  /// Log-probabilities of the next token after `prefix`, given precomputed encoder states.
  std::vector<double> next_log_probs(const Matrix& memory, std::span<const int> prefix) const;

 private:
  GeneratorConfig config_;
  std::unique_ptr<ParamSet> params_;
  Parameter* token_emb_ = nullptr;
  Parameter* enc_pos_ = nullptr;
  Parameter* dec_pos_ = nullptr;
  std::vector<EncoderBlock> enc_layers_;
  std::vector<DecoderBlock> dec_layers_;
  LayerNormParams enc_ln_, dec_ln_;
  Linear out_;
};

/// [BOS] + encode(text) + [EOS], cut to max_target tokens (the [EOS] is kept).
std::vector<int> make_target(const std::string& text, const Vocabulary& vocab, int max_target);

/// Teacher-forced cross-entropy averaged over the target positions after [BOS].
Var ar_loss(Graph& g, const GeneratorModel& model, const GeneratorInput& input, std::span<const int> target);
double ar_loss(const GeneratorModel& model, const GeneratorInput& input, std::span<const int> target);

struct DecodeMethod {
  int beam_size = 1;  // 1 = greedy

  /// "greedy" or "beam<k>".
  std::string to_string() const;
  static DecodeMethod parse(const std::string& s);
};

struct GenerationResult {
  std::vector<int> token_ids;  // generated tokens after [BOS], [EOS] included when emitted
  std::string text;
  std::vector<double> token_log_probs;
  DecodeMethod method;

  double log_prob() const;
};

/// Greedy decoding breaks ties toward the lowest token id. Beam search ranks finished
/// hypotheses by log-probability divided by length; beam size 1 reproduces greedy.
GenerationResult generate(const GeneratorModel& model, const GeneratorInput& input, const DecodeMethod& method,
                          int max_len, const Vocabulary& vocab);

struct GenSample {
  std::string episode_id;
  GeneratorInput input;
  std::vector<int> target;
  std::string reference;
};

struct GeneratorEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_bleu1 = 0.0;
};

struct GeneratorTrainResult {
  std::vector<GeneratorEpoch> epochs;
  int best_epoch = -1;
};

/// Decodes every sample (in parallel across samples, results in input order).
std::vector<GenerationResult> generate_all(const GeneratorModel& model, const std::vector<GenSample>& samples,
                                           const DecodeMethod& method, int max_len, const Vocabulary& vocab);

/// AdamW with linear warm-up/decay; keeps the parameters of the epoch with the best dev BLEU-1.
GeneratorTrainResult train_generator(GeneratorModel& model, const std::vector<GenSample>& train,
                                     const std::vector<GenSample>& dev, const TrainOptions& options,
                                     const Vocabulary& vocab, int max_len);

struct ResponseRecord {
  std::string episode_id;
  std::string response_text;
  std::string decode_method;
  double log_prob = 0.0;
};

void write_responses(const std::filesystem::path& path, const std::vector<ResponseRecord>& records);
std::vector<ResponseRecord> read_responses(const std::filesystem::path& path);

}  // namespace mdug
