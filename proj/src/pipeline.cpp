#include "mdug/pipeline.hpp"

#include <stdexcept>

#include "mdug/parallel.hpp"

namespace mdug {

EpisodeWindow episode_window(const DialogueEpisode& ep, int context_turns) {
  if (ep.utterances.size() < 2) throw std::invalid_argument("episode " + ep.episode_id + " has no context before its response");
  if (context_turns < 1) throw std::invalid_argument("context_turns must be >= 1");
  EpisodeWindow w;
  w.response = ep.utterances.size() - 1;
  w.context_begin = w.response > static_cast<std::size_t>(context_turns) ? w.response - context_turns : 0;
  return w;
}

TurnLabels predict_last_turn(const UnderstandingModel& model, const DialogueEpisode& ep, const Vocabulary& vocab,
                             const MultiTaskConfig& config, int context_turns) {
  const EpisodeWindow w = episode_window(ep, context_turns);
  const std::span<const Utterance> window(ep.utterances.data() + w.context_begin, w.response - w.context_begin + 1);
  const auto& cfg = model.config();
  const auto input = build_encoder_input(window, frame_track(ep, w.context_begin, w.response + 1), vocab,
                                         cfg.max_tokens, cfg.feature_dim, window.size() - 1);
  const auto pred = predict(model, model.encoder().encode(input), config);
  return {pred.scene_label.back(), pred.session_label.back(), pred.scene_prob.back(), pred.session_prob.back()};
}

TurnLabels gold_last_turn(const DialogueEpisode& ep) {
  if (ep.utterances.empty()) throw std::invalid_argument("episode " + ep.episode_id + " is empty");
  const auto& u = ep.utterances.back();
  return {u.scene_label, u.session_label, static_cast<double>(u.scene_label), static_cast<double>(u.session_label)};
}

GenSample build_sample(const DialogueEpisode& ep, const Captioner* captioner, const TurnLabels& labels,
                       const PipelineOptions& options, const Vocabulary& vocab) {
  const EpisodeWindow w = episode_window(ep, options.context_turns);
  std::vector<std::string> context;
  for (std::size_t i = w.context_begin; i < w.response; ++i) context.push_back(ep.utterances[i].text);

  std::string video, image;
  if (options.flags.video_caption || options.flags.image_caption) {
    if (captioner == nullptr) throw std::invalid_argument("caption flags are on but no captioner is configured");
    const auto [v, im] = caption_window(*captioner, frame_track(ep, w.context_begin, w.response + 1));
    video = v.text;
    image = im.text;
  }
  GenSample s;
  s.episode_id = ep.episode_id;
  s.input = assemble_input(context, video, image, build_prompt(labels.scene, labels.session), options.flags, vocab,
                           options.max_input);
  s.reference = ep.utterances[w.response].text;
  s.target = make_target(s.reference, vocab, options.max_target);
  return s;
}

std::vector<GenSample> build_samples(const std::vector<DialogueEpisode>& episodes, const Captioner* captioner,
                                     const LabelSource& labels, const PipelineOptions& options, const Vocabulary& vocab) {
  std::vector<GenSample> out(episodes.size());
  // External captioners serialize internally; the stub and the label source are read-only.
  parallel_for(static_cast<long>(episodes.size()), [&](long i) {
    const auto& ep = episodes[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = build_sample(ep, captioner, labels(ep), options, vocab);
  });
  return out;
}

}  // namespace mdug
