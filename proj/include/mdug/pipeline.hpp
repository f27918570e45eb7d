#pragma once

// Glue between the two stages: turning an episode into a generator sample.
// Inference runs in a fixed order: predict the last turn's labels, render the
// prompt, caption the window, assemble the input, generate.

#include <functional>
#include <vector>

#include "mdug/captioning.hpp"
#include "mdug/generation.hpp"
#include "mdug/understanding.hpp"

namespace mdug {

struct PipelineOptions {
  int context_turns = 4;
  AblationFlags flags;
  int max_input = 512;
  int max_target = 48;
};

struct TurnLabels {
  int scene = 0;
  int session = 0;
  double scene_prob = 0.0;
  double session_prob = 0.0;
};

/// The response is the episode's final utterance; the context is up to `context_turns` utterances before it.
struct EpisodeWindow {
  std::size_t context_begin = 0;
  std::size_t response = 0;
};
EpisodeWindow episode_window(const DialogueEpisode& ep, int context_turns);

/// Labels of the final turn predicted from the context plus the final turn's frame; its text is hidden.
TurnLabels predict_last_turn(const UnderstandingModel& model, const DialogueEpisode& ep, const Vocabulary& vocab,
                             const MultiTaskConfig& config, int context_turns);

using LabelSource = std::function<TurnLabels(const DialogueEpisode&)>;

/// Gold labels of the final turn (used to build training prompts).
TurnLabels gold_last_turn(const DialogueEpisode& ep);

/// Captioner may be null only when both caption flags are off.
GenSample build_sample(const DialogueEpisode& ep, const Captioner* captioner, const TurnLabels& labels,
                       const PipelineOptions& options, const Vocabulary& vocab);

std::vector<GenSample> build_samples(const std::vector<DialogueEpisode>& episodes, const Captioner* captioner,
                                     const LabelSource& labels, const PipelineOptions& options, const Vocabulary& vocab);

}  // namespace mdug
