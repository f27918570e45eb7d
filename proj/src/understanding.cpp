#include "mdug/understanding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mdug/kernels.hpp"
#include "mdug/optim.hpp"
#include "mdug/parallel.hpp"

namespace mdug {

std::string to_string(TaskMode m) {
  switch (m) {
    case TaskMode::multi: return "multi";
    case TaskMode::scene_only: return "scene_only";
    case TaskMode::session_only: return "session_only";
  }
  return "multi";
}

TaskMode task_mode_from_string(const std::string& s) {
  if (s == "multi") return TaskMode::multi;
  if (s == "scene_only") return TaskMode::scene_only;
  if (s == "session_only") return TaskMode::session_only;
  throw std::invalid_argument("unknown task mode '" + s + "'");
}

MultiTaskConfig MultiTaskConfig::for_mode(TaskMode mode) {
  MultiTaskConfig c;
  c.mode = mode;
  c.w_scene = mode == TaskMode::session_only ? 0.0 : 1.0;
  c.w_session = mode == TaskMode::scene_only ? 0.0 : 1.0;
  return c;
}

void MultiTaskConfig::validate() const {
  if (w_scene < 0.0 || w_session < 0.0) throw std::invalid_argument("MultiTaskConfig: loss weights must be non-negative");
  if ((mode == TaskMode::scene_only) != (w_session == 0.0))
    throw std::invalid_argument("MultiTaskConfig: scene_only mode requires w_session = 0 and vice versa");
  if ((mode == TaskMode::session_only) != (w_scene == 0.0))
    throw std::invalid_argument("MultiTaskConfig: session_only mode requires w_scene = 0 and vice versa");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("MultiTaskConfig: threshold must lie in (0, 1)");
}

UnderstandingModel::UnderstandingModel(const EncoderConfig& config, std::uint64_t seed)
    : params_(std::make_unique<ParamSet>()) {
  Rng rng(seed);
  encoder_ = std::make_unique<FusionEncoder>(*params_, config, rng);
  scene_head_ = Linear::create(*params_, "head.scene", config.d_model, 1, rng);
  session_head_ = Linear::create(*params_, "head.session", config.d_model, 1, rng);
}

UnderstandingModel::Logits UnderstandingModel::forward(Graph& g, const EncoderInput& input) const {
  const auto enc = encoder_->forward(g, input);
  return {scene_head_(g, enc.seps), session_head_(g, enc.seps)};
}

std::pair<Matrix, Matrix> UnderstandingModel::head_logits(const Matrix& sep_vectors) const {
  Graph g(false);
  const Var s = g.constant(sep_vectors);
  const Var scene = scene_head_(g, s);
  const Var session = session_head_(g, s);
  return {g.value(scene), g.value(session)};
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<int> labels_from(const DialogueEpisode& ep, int first, bool scene) {
  std::vector<int> out;
  for (std::size_t i = static_cast<std::size_t>(first); i < ep.utterances.size(); ++i)
    out.push_back(scene ? ep.utterances[i].scene_label : ep.utterances[i].session_label);
  return out;
}

}  // namespace

BoundaryPrediction label_probabilities(std::vector<double> scene_prob, std::vector<double> session_prob,
                                       const MultiTaskConfig& config) {
  BoundaryPrediction p;
  p.scene_prob = std::move(scene_prob);
  p.session_prob = std::move(session_prob);
  for (double v : p.scene_prob) p.scene_label.push_back(v >= config.threshold ? 1 : 0);
  for (double v : p.session_prob) p.session_label.push_back(v >= config.threshold ? 1 : 0);
  if (config.repair) {
    for (std::size_t i = 0; i < p.scene_label.size(); ++i) {
      if (p.scene_label[i] == 1 && p.session_label[i] == 0) {
        p.session_label[i] = 1;
        p.repair_applied = true;
      }
    }
  }
  return p;
}

BoundaryPrediction predict(const UnderstandingModel& model, const EncodedDialogue& encoded, const MultiTaskConfig& config) {
  auto [sl, tl] = model.head_logits(encoded.sep_vectors);
  std::vector<double> sp, tp;
  for (double z : sl.flat()) sp.push_back(sigmoid(z));
  for (double z : tl.flat()) tp.push_back(sigmoid(z));
  return label_probabilities(std::move(sp), std::move(tp), config);
}

double joint_loss(const Matrix& scene_logits, const Matrix& session_logits, const std::vector<int>& scene_gold,
                  const std::vector<int>& session_gold, const MultiTaskConfig& config, PositiveWeights pw) {
  Graph g(false);
  UnderstandingModel::Logits l{g.constant(scene_logits), g.constant(session_logits)};
  return g.scalar(joint_loss(g, l, scene_gold, session_gold, config, pw));
}

Var joint_loss(Graph& g, const UnderstandingModel::Logits& logits, const std::vector<int>& scene_gold,
               const std::vector<int>& session_gold, const MultiTaskConfig& config, PositiveWeights pw) {
  if (config.w_scene < 0.0 || config.w_session < 0.0) throw std::invalid_argument("joint_loss: negative task weight");
  const Var parts[] = {g.bce_with_logits(logits.scene, scene_gold, pw.scene),
                       g.bce_with_logits(logits.session, session_gold, pw.session)};
  const double weights[] = {config.w_scene, config.w_session};
  return g.weighted_sum(parts, weights);
}

PositiveWeights resolve_positive_weights(const MultiTaskConfig& config, const std::vector<DialogueEpisode>& train) {
  long n = 0, sc = 0, se = 0;
  for (const auto& ep : train)
    for (const auto& u : ep.utterances) {
      ++n;
      sc += u.scene_label;
      se += u.session_label;
    }
  auto inverse = [&](long pos) {
    if (pos == 0 || n == 0) return 1.0;
    return std::min(10.0, static_cast<double>(n - pos) / static_cast<double>(pos));
  };
  PositiveWeights w;
  w.scene = config.scene_pos_weight > 0.0 ? config.scene_pos_weight : inverse(sc);
  w.session = config.session_pos_weight > 0.0 ? config.session_pos_weight : inverse(se);
  return w;
}

std::vector<BoundaryPrediction> predict_episodes(const UnderstandingModel& model,
                                                 const std::vector<DialogueEpisode>& episodes, const Vocabulary& vocab,
                                                 const MultiTaskConfig& config) {
  std::vector<BoundaryPrediction> out(episodes.size());
  const auto& cfg = model.config();
  parallel_for(static_cast<long>(episodes.size()), [&](long li) {
    const auto i = static_cast<std::size_t>(li);
    const auto& ep = episodes[i];
    const auto input = build_encoder_input(ep.utterances, frame_track(ep), vocab, cfg.max_tokens, cfg.feature_dim);
    auto pred = predict(model, model.encoder().encode(input), config);
    // Utterances dropped by truncation are reported as non-boundaries.
    const auto pad = static_cast<std::size_t>(input.first_utterance);
    if (pad > 0) {
      pred.scene_prob.insert(pred.scene_prob.begin(), pad, 0.0);
      pred.session_prob.insert(pred.session_prob.begin(), pad, 0.0);
      pred.scene_label.insert(pred.scene_label.begin(), pad, 0);
      pred.session_label.insert(pred.session_label.begin(), pad, 0);
    }
    out[i] = std::move(pred);
  });
  return out;
}

std::pair<BoundaryScore, BoundaryScore> score_predictions(const std::vector<BoundaryPrediction>& preds,
                                                          const std::vector<DialogueEpisode>& episodes) {
  if (preds.size() != episodes.size()) throw std::invalid_argument("score_predictions: episode count mismatch");
  std::vector<int> ps, gs, pt, gt;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ps.insert(ps.end(), preds[i].scene_label.begin(), preds[i].scene_label.end());
    pt.insert(pt.end(), preds[i].session_label.begin(), preds[i].session_label.end());
    for (const auto& u : episodes[i].utterances) {
      gs.push_back(u.scene_label);
      gt.push_back(u.session_label);
    }
  }
  return {boundary_score(ps, gs), boundary_score(pt, gt)};
}

bool is_majority_collapse(const BoundaryScore& s) {
  const long n = s.tp + s.fp + s.tn + s.fn;
  if (n == 0) return false;
  const double negative_rate = static_cast<double>(s.tn + s.fp) / static_cast<double>(n);
  return s.f1 == 0.0 && std::abs(s.acc - negative_rate) < 1e-12;
}

UnderstandingTrainResult train_understanding(UnderstandingModel& model, const Corpus& corpus, const Vocabulary& vocab,
                                             const MultiTaskConfig& config, const TrainOptions& options) {
  config.validate();
  if (corpus.train.empty() || corpus.dev.empty()) throw std::invalid_argument("train_understanding: train and dev splits are required");
  if (options.epochs < 1 || options.batch_size < 1) throw std::invalid_argument("train_understanding: epochs and batch_size must be >= 1");

  const auto& cfg = model.config();
  std::vector<EncoderInput> inputs;
  inputs.reserve(corpus.train.size());
  for (const auto& ep : corpus.train)
    inputs.push_back(build_encoder_input(ep.utterances, frame_track(ep), vocab, cfg.max_tokens, cfg.feature_dim));

  const PositiveWeights pw = resolve_positive_weights(config, corpus.train);
  const long n = static_cast<long>(corpus.train.size());
  const long steps_per_epoch = (n + options.batch_size - 1) / options.batch_size;
  LinearSchedule sched{options.peak_lr, steps_per_epoch * options.epochs, options.warmup_fraction};
  AdamW opt(model.params(), {.weight_decay = options.weight_decay});
  Rng rng(options.seed ^ 0xA5A5A5A5ULL);
  model.params().zero_grad();

  UnderstandingTrainResult result;
  std::vector<Matrix> best;
  double best_sel = -1.0;
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (long b = 0; b < steps_per_epoch; ++b) {
      const long lo = b * options.batch_size;
      const long hi = std::min(n, lo + options.batch_size);
      for (long j = lo; j < hi; ++j) {
        const std::size_t idx = order[static_cast<std::size_t>(j)];
        const auto& ep = corpus.train[idx];
        const auto& in = inputs[idx];
        Graph g(true, &rng);
        const auto logits = model.forward(g, in);
        const Var loss = joint_loss(g, logits, labels_from(ep, in.first_utterance, true),
                                    labels_from(ep, in.first_utterance, false), config, pw);
        const double lv = g.scalar(loss);
        if (!std::isfinite(lv)) {
          std::ostringstream msg;
          msg << "understanding loss diverged at epoch " << epoch << ", step " << step << " (episode " << ep.episode_id
              << ", lr " << sched.at(step) << ")";
          throw DivergenceError(msg.str());
        }
        loss_sum += lv;
        g.backward(loss);
      }
      const double scale = 1.0 / static_cast<double>(hi - lo);
      for (auto& p : model.params().all())
        for (double& v : p.grad.flat()) v *= scale;
      clip_grad_norm(model.params(), options.clip_norm);
      opt.step(sched.at(step));
      ++step;
    }

    UnderstandingEpoch log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(n);
    const auto preds = predict_episodes(model, corpus.dev, vocab, config);
    std::tie(log.dev_scene, log.dev_session) = score_predictions(preds, corpus.dev);
    switch (config.mode) {
      case TaskMode::multi: log.selection = 0.5 * (log.dev_scene.acc + log.dev_session.acc); break;
      case TaskMode::scene_only: log.selection = log.dev_scene.acc; break;
      case TaskMode::session_only: log.selection = log.dev_session.acc; break;
    }
    const bool watch_scene = config.mode != TaskMode::session_only;
    const bool watch_session = config.mode != TaskMode::scene_only;
    if ((watch_scene && is_majority_collapse(log.dev_scene)) || (watch_session && is_majority_collapse(log.dev_session))) {
      result.warnings.push_back("epoch " + std::to_string(epoch) +
                                ": majority collapse (dev F1 = 0, Acc = negative rate)");
    }
    if (log.selection > best_sel) {
      best_sel = log.selection;
      best = model.params().snapshot();
      result.best_epoch = epoch;
    }
    result.epochs.push_back(log);
  }
  model.params().restore(best);
  return result;
}

}  // namespace mdug
