#pragma once

// Joint scene/session boundary prediction: two binary linear heads read the
// per-utterance separator vectors of the fusion encoder.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mdug/corpus.hpp"
#include "mdug/fusion.hpp"
#include "mdug/metrics.hpp"
#include "mdug/optim.hpp"

namespace mdug {

enum class TaskMode { multi, scene_only, session_only };
std::string to_string(TaskMode m);
TaskMode task_mode_from_string(const std::string& s);

struct MultiTaskConfig {
  TaskMode mode = TaskMode::multi;
  double w_scene = 1.0;
  double w_session = 1.0;
  double threshold = 0.5;
  bool repair = false;
  // Positive-class weights; <= 0 means inverse prevalence in the training split, capped at 10.
  double scene_pos_weight = 0.0;
  double session_pos_weight = 0.0;

  /// Weights consistent with the mode (unit weight on each active task).
  static MultiTaskConfig for_mode(TaskMode mode);
  void validate() const;
};

struct BoundaryPrediction {
  std::vector<double> scene_prob, session_prob;
  std::vector<int> scene_label, session_label;
  bool repair_applied = false;
};

class UnderstandingModel {
 public:
  UnderstandingModel(const EncoderConfig& config, std::uint64_t seed);

  ParamSet& params() { return *params_; }
  const ParamSet& params() const { return *params_; }
  const FusionEncoder& encoder() const { return *encoder_; }
  const EncoderConfig& config() const { return encoder_->config(); }

  struct Logits {
    Var scene;    // n_utterances x 1
    Var session;  // n_utterances x 1
  };
  Logits forward(Graph& g, const EncoderInput& input) const;

  /// Head logits for already-encoded separator vectors (n x 1 each).
  std::pair<Matrix, Matrix> head_logits(const Matrix& sep_vectors) const;

 private:
  std::unique_ptr<ParamSet> params_;
  std::unique_ptr<FusionEncoder> encoder_;
  Linear scene_head_, session_head_;
};

/// Thresholds both heads; with repair on, (scene=1, session=0) is promoted to (1, 1).
BoundaryPrediction predict(const UnderstandingModel& model, const EncodedDialogue& encoded, const MultiTaskConfig& config);

/// Labels from probabilities; prob >= threshold counts as positive.
BoundaryPrediction label_probabilities(std::vector<double> scene_prob, std::vector<double> session_prob,
                                       const MultiTaskConfig& config);

struct PositiveWeights {
  double scene = 1.0;
  double session = 1.0;
};

/// w_scene * BCE_scene + w_session * BCE_session, each a mean over utterances.
double joint_loss(const Matrix& scene_logits, const Matrix& session_logits, const std::vector<int>& scene_gold,
                  const std::vector<int>& session_gold, const MultiTaskConfig& config, PositiveWeights pw = {});
Var joint_loss(Graph& g, const UnderstandingModel::Logits& logits, const std::vector<int>& scene_gold,
               const std::vector<int>& session_gold, const MultiTaskConfig& config, PositiveWeights pw = {});

/// Resolves the configured positive weights against the training split.
PositiveWeights resolve_positive_weights(const MultiTaskConfig& config, const std::vector<DialogueEpisode>& train);

struct UnderstandingEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  BoundaryScore dev_scene, dev_session;
  double selection = 0.0;  // Acc used for checkpoint selection
};

struct UnderstandingTrainResult {
  std::vector<UnderstandingEpoch> epochs;
  int best_epoch = -1;
  std::vector<std::string> warnings;
};

/// Thrown when the training loss stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trains in place and leaves the best-dev parameters loaded in `model`.
UnderstandingTrainResult train_understanding(UnderstandingModel& model, const Corpus& corpus, const Vocabulary& vocab,
                                             const MultiTaskConfig& config, const TrainOptions& options);

/// Predictions for every utterance of every episode (evaluated in parallel, order preserved).
std::vector<BoundaryPrediction> predict_episodes(const UnderstandingModel& model,
                                                 const std::vector<DialogueEpisode>& episodes, const Vocabulary& vocab,
                                                 const MultiTaskConfig& config);

/// Flattened micro-averaged scores for both tracks.
std::pair<BoundaryScore, BoundaryScore> score_predictions(const std::vector<BoundaryPrediction>& preds,
                                                          const std::vector<DialogueEpisode>& episodes);

/// Majority-collapse signature: F1 = 0 while accuracy equals the negative rate.
bool is_majority_collapse(const BoundaryScore& score);

}  // namespace mdug
