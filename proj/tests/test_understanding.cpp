#include <cmath>
#include <vector>

#include "doctest.h"
#include "mdug/understanding.hpp"
#include "support.hpp"

using namespace mdug;

namespace {

EncoderConfig tiny(int vocab, int k) {
  EncoderConfig c;
  c.vocab_size = vocab;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.n_layers = 1;
  c.feature_dim = k;
  c.max_tokens = 512;
  return c;
}

Matrix column(std::vector<double> v) {
  Matrix m(static_cast<int>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
  return m;
}

}  // namespace

TEST_SUITE("understanding") {
  TEST_CASE("thresholding and repair") {
    MultiTaskConfig cfg;
    auto p = label_probabilities({0.49, 0.5, 0.9}, {0.1, 0.7, 0.2}, cfg);
    CHECK(p.scene_label == std::vector<int>{0, 1, 1});
    CHECK(p.session_label == std::vector<int>{0, 1, 0});
    CHECK_FALSE(p.repair_applied);

    cfg.repair = true;
    p = label_probabilities({0.49, 0.5, 0.9}, {0.1, 0.7, 0.2}, cfg);
    CHECK(p.session_label == std::vector<int>{0, 1, 1});
    CHECK(p.scene_label == std::vector<int>{0, 1, 1});
    CHECK(p.repair_applied);

    p = label_probabilities({0.1}, {0.1}, cfg);
    CHECK(p.scene_label == std::vector<int>{0});
    CHECK(p.session_label == std::vector<int>{0});
    CHECK_FALSE(p.repair_applied);
  }

  TEST_CASE("uniform probabilities cost ln 2 per task per utterance") {
    const Matrix z = column({0.0, 0.0});
    const MultiTaskConfig both;
    CHECK(joint_loss(z, z, {1, 0}, {0, 1}, both) == doctest::Approx(2.0 * std::log(2.0)));
    CHECK(joint_loss(z, z, {1, 0}, {0, 1}, MultiTaskConfig::for_mode(TaskMode::scene_only)) ==
          doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("confident correct logits drive the loss to zero") {
    CHECK(joint_loss(column({40, -40}), column({40, -40}), {1, 0}, {1, 0}, MultiTaskConfig{}) < 1e-12);
  }

  TEST_CASE("the joint loss decomposes exactly into its single-task parts") {
    const Matrix s = testing::random_matrix(7, 1, 1), t = testing::random_matrix(7, 1, 2);
    const std::vector<int> gs{0, 1, 0, 0, 1, 0, 0}, gt{0, 1, 1, 0, 1, 0, 1};
    const PositiveWeights pw{3.0, 2.0};
    MultiTaskConfig scene_part = MultiTaskConfig::for_mode(TaskMode::scene_only);
    MultiTaskConfig session_part = MultiTaskConfig::for_mode(TaskMode::session_only);
    CHECK(joint_loss(s, t, gs, gt, MultiTaskConfig{}, pw) ==
          joint_loss(s, t, gs, gt, scene_part, pw) + joint_loss(s, t, gs, gt, session_part, pw));
  }

  TEST_CASE("with w_session = 0 the session head gets no gradient") {
    const auto c = generate_corpus(testing::small_corpus_config(2, 0, 0), 1);
    const auto vocab = corpus_vocabulary(*c.config);
    UnderstandingModel model(tiny(vocab.size(), c.feature_dim), 2);
    const auto& ep = c.train.front();
    const auto in = build_encoder_input(ep.utterances, frame_track(ep), vocab, 512, c.feature_dim);
    std::vector<int> gs, gt;
    for (const auto& u : ep.utterances) {
      gs.push_back(u.scene_label);
      gt.push_back(u.session_label);
    }
    model.params().zero_grad();
    Graph g;
    g.backward(joint_loss(g, model.forward(g, in), gs, gt, MultiTaskConfig::for_mode(TaskMode::scene_only), {4, 4}));
    for (double v : model.params().at("head.session.w").grad.flat()) CHECK(v == 0.0);
    for (double v : model.params().at("head.session.b").grad.flat()) CHECK(v == 0.0);
    double scene_norm = 0.0;
    for (double v : model.params().at("head.scene.w").grad.flat()) scene_norm += v * v;
    CHECK(scene_norm > 0.0);
  }

  TEST_CASE("mode and weight consistency") {
    MultiTaskConfig c = MultiTaskConfig::for_mode(TaskMode::scene_only);
    CHECK(c.w_session == 0.0);
    CHECK_NOTHROW(c.validate());
    c.w_session = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = MultiTaskConfig{};
    c.w_scene = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(joint_loss(column({0}), column({0}), {0}, {0}, c), std::invalid_argument);
    CHECK(task_mode_from_string(to_string(TaskMode::session_only)) == TaskMode::session_only);
    CHECK_THROWS_AS(task_mode_from_string("both"), std::invalid_argument);
  }

  TEST_CASE("positive weights default to the capped inverse prevalence") {
    const auto c = generate_corpus(testing::small_corpus_config(200, 0, 0), 3);
    const auto w = resolve_positive_weights(MultiTaskConfig{}, c.train);
    const auto st = compute_stats(c, 0);
    CHECK(w.scene == doctest::Approx(std::min(10.0, (1.0 - st.scene_positive_rate) / st.scene_positive_rate)));
    CHECK(w.session == doctest::Approx((1.0 - st.session_positive_rate) / st.session_positive_rate));
    MultiTaskConfig fixed;
    fixed.scene_pos_weight = 1.0;
    CHECK(resolve_positive_weights(fixed, c.train).scene == 1.0);
  }

  TEST_CASE("training is deterministic for a fixed seed and keeps the best dev epoch") {
    const auto c = generate_corpus(testing::small_corpus_config(12, 4, 0), 5);
    const auto vocab = corpus_vocabulary(*c.config);
    TrainOptions o;
    o.epochs = 2;
    o.batch_size = 4;
    o.peak_lr = 1e-3;
    UnderstandingModel a(tiny(vocab.size(), c.feature_dim), 9), b(tiny(vocab.size(), c.feature_dim), 9);
    const auto ra = train_understanding(a, c, vocab, MultiTaskConfig{}, o);
    const auto rb = train_understanding(b, c, vocab, MultiTaskConfig{}, o);
    CHECK(ra.epochs[0].train_loss == rb.epochs[0].train_loss);
    CHECK(ra.best_epoch == rb.best_epoch);
    double best = -1.0;
    for (const auto& e : ra.epochs) best = std::max(best, e.selection);
    CHECK(ra.epochs[static_cast<std::size_t>(ra.best_epoch)].selection == best);

    const auto preds = predict_episodes(a, c.dev, vocab, MultiTaskConfig{});
    const auto [scene, session] = score_predictions(preds, c.dev);
    CHECK(scene.acc == doctest::Approx(ra.epochs[static_cast<std::size_t>(ra.best_epoch)].dev_scene.acc));
    CHECK(session.tp + session.fp + session.tn + session.fn == scene.tp + scene.fp + scene.tn + scene.fn);
  }

  TEST_CASE("repair removes every forbidden pair from real predictions") {
    const auto c = generate_corpus(testing::small_corpus_config(0, 10, 0), 6);
    const auto vocab = corpus_vocabulary(*c.config);
    UnderstandingModel m(tiny(vocab.size(), c.feature_dim), 1);
    MultiTaskConfig cfg;
    cfg.repair = true;
    cfg.threshold = 0.3;  // untrained logits sit near zero; a low threshold produces positives
    for (const auto& p : predict_episodes(m, c.dev, vocab, cfg))
      for (std::size_t i = 0; i < p.scene_label.size(); ++i) CHECK_FALSE((p.scene_label[i] == 1 && p.session_label[i] == 0));
  }

  TEST_CASE("majority collapse signature") {
    CHECK(is_majority_collapse(score_from_counts(0, 0, 90, 10)));
    CHECK_FALSE(is_majority_collapse(score_from_counts(1, 0, 90, 9)));
  }

  TEST_CASE("divergence aborts with diagnostics") {
    const auto c = generate_corpus(testing::small_corpus_config(4, 2, 0), 7);
    const auto vocab = corpus_vocabulary(*c.config);
    UnderstandingModel m(tiny(vocab.size(), c.feature_dim), 1);
    m.params().at("head.scene.b").value(0, 0) = std::nan("");
    TrainOptions o;
    o.epochs = 1;
    CHECK_THROWS_AS(train_understanding(m, c, vocab, MultiTaskConfig{}, o), DivergenceError);
  }
}
