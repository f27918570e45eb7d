// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradient_suite.hpp"
#include "mdug/harness.hpp"

using namespace mdug;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "mdug_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<int> labels(const std::vector<DialogueEpisode>& eps, bool scene) {
  std::vector<int> out;
  for (const auto& ep : eps)
    for (const auto& u : ep.utterances) out.push_back(scene ? u.scene_label : u.session_label);
  return out;
}

Tokens words(const std::string& s) { return tokenize(s); }

Outcome f1_oracle() {
  const double a = f1_from(0.56094, 0.12062), b = f1_from(0.57811, 0.25598);
  return {within(a, 0.19854, 1e-4) && within(b, 0.35484, 1e-4), "F1 " + num(a, 5) + ", " + num(b, 5)};
}

Outcome majority_collapse() {
  const Corpus c = generate_corpus(GenConfig{}, 1);
  const auto gs = labels(c.test, true), gt = labels(c.test, false);
  const auto s = boundary_score(std::vector<int>(gs.size(), 0), gs);
  const auto t = boundary_score(std::vector<int>(gt.size(), 0), gt);
  const bool ok = within(100 * s.acc, 91.6, 0.5) && within(100 * t.acc, 87.4, 0.5) && s.f1 == 0.0 && t.f1 == 0.0;
  return {ok, "Acc_s " + num(100 * s.acc, 3) + " Acc_t " + num(100 * t.acc, 3) + " F1 " + num(s.f1, 1) + "/" +
                  num(t.f1, 1) + " over " + std::to_string(gs.size()) + " utterances"};
}

Outcome random_mode() {
  const Corpus c = generate_corpus(GenConfig{}, 1);
  std::vector<DialogueEpisode> all = c.train;
  all.insert(all.end(), c.dev.begin(), c.dev.end());
  all.insert(all.end(), c.test.begin(), c.test.end());
  const auto gs = labels(all, true), gt = labels(all, false);
  const auto coin = random_boundaries(gs.size(), 1);
  const auto s = boundary_score(coin, gs), t = boundary_score(coin, gt);
  const bool ok = gs.size() >= 5000 && within(100 * s.acc, 50, 2) && within(100 * s.recall, 50, 3) &&
                  within(100 * t.acc, 50, 2) && within(100 * t.recall, 50, 3);
  return {ok, std::to_string(gs.size()) + " utterances; scene Acc " + num(100 * s.acc, 3) + " R " +
                  num(100 * s.recall, 3) + "; session Acc " + num(100 * t.acc, 3) + " R " + num(100 * t.recall, 3)};
}

Outcome metric_oracles() {
  // Distinct sentences of at least four tokens: every n-gram has nonzero idf.
  const std::vector<std::string> corpus{"the cat sat on a mat", "dogs run very fast today", "birds fly high up there",
                                        "we talk in the office now"};
  const GenScore id = score_generation(corpus, corpus);
  bool ok = within(id.bleu1, 1.0, 1e-9) && within(id.rouge_l, 1.0, 1e-9) && within(id.cider, 10.0, 1e-9);
  double worst = 0.0;
  for (const auto& s : corpus) {
    const Tokens t = words(s);
    const double m = static_cast<double>(t.size());
    worst = std::max(worst, std::abs(meteor_pair(t, {t}) - (1.0 - 0.5 / (m * m * m))));
  }
  ok = ok && worst <= 1e-9;
  const double b = bleu1({words("the the the")}, {{words("the cat")}});
  const double r = rouge_l({words("a b c d")}, {{words("a c d")}});
  ok = ok && within(b, 1.0 / 3.0, 1e-4) && within(r, 0.8798, 1e-4);
  return {ok, "identity BLEU-1 " + num(id.bleu1) + " ROUGE-L " + num(id.rouge_l) + " CIDEr " + num(id.cider) +
                  " METEOR err " + num(worst, 12) + "; BLEU-1 " + num(b) + " ROUGE-L " + num(r)};
}

Outcome gradient_suite() {
  bool ok = true;
  std::string detail;
  for (const auto& [name, err] : testing::run_gradient_suite()) {
    ok = ok && err < 1e-4;
    detail += (detail.empty() ? "" : ", ") + name + " " + num(err, 8);
  }
  return {ok, "max rel error: " + detail};
}

Outcome co_occurrence() {
  GenConfig g;
  g.n_train = 6500;
  g.n_dev = 0;
  g.n_test = 0;
  const Corpus c = generate_corpus(g, 11);
  long utterances = 0, forbidden = 0;
  for (const auto& ep : c.train)
    for (const auto& u : ep.utterances) {
      ++utterances;
      forbidden += u.scene_label == 1 && u.session_label == 0;
    }

  // Repair over model predictions, with a threshold low enough that raw labels disagree.
  const Corpus small = generate_corpus(GenConfig{}, 1);
  const Vocabulary vocab = corpus_vocabulary(*small.config);
  EncoderConfig ec = RunConfig{}.encoder;
  ec.vocab_size = vocab.size();
  ec.feature_dim = small.feature_dim;
  const UnderstandingModel model(ec, 3);
  long repaired_forbidden = 0, raw_forbidden = 0;
  for (const bool repair : {false, true}) {
    MultiTaskConfig m;
    m.repair = repair;
    m.threshold = 0.45;
    const std::vector<DialogueEpisode> eps(small.dev.begin(), small.dev.begin() + 60);
    for (const auto& p : predict_episodes(model, eps, vocab, m))
      for (std::size_t i = 0; i < p.scene_label.size(); ++i)
        (repair ? repaired_forbidden : raw_forbidden) += p.scene_label[i] == 1 && p.session_label[i] == 0;
  }
  const bool ok = utterances >= 100000 && forbidden == 0 && repaired_forbidden == 0;
  return {ok, std::to_string(forbidden) + " forbidden pairs in " + std::to_string(utterances) +
                  " generated utterances; predictions " + std::to_string(raw_forbidden) + " before repair, " +
                  std::to_string(repaired_forbidden) + " after"};
}

Outcome multi_task(int epochs) {
  // Exact decomposition on random logits.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 2.0);
  std::bernoulli_distribution coin(0.3);
  bool exact = true;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix s(17, 1), t(17, 1);
    std::vector<int> gs, gt;
    for (int i = 0; i < 17; ++i) {
      s(i, 0) = n(rng);
      t(i, 0) = n(rng);
      gs.push_back(coin(rng));
      gt.push_back(gs.back() ? 1 : coin(rng));
    }
    const PositiveWeights pw{1.0 + trial % 5, 2.0};
    exact = exact && joint_loss(s, t, gs, gt, MultiTaskConfig{}, pw) ==
                         joint_loss(s, t, gs, gt, MultiTaskConfig::for_mode(TaskMode::scene_only), pw) +
                             joint_loss(s, t, gs, gt, MultiTaskConfig::for_mode(TaskMode::session_only), pw);
  }

  RunConfig cfg;
  cfg.threads = 1;
  cfg.understand_train.epochs = epochs;
  const Corpus c = generate_corpus(cfg.corpus, cfg.corpus_seed);
  const Vocabulary vocab = run_vocabulary(c, cfg);
  double multi = 0.0, single = 0.0;
  std::string per_seed;
  for (const std::uint64_t seed : {1, 2, 3}) {
    double acc[2];
    for (int k = 0; k < 2; ++k) {
      const MultiTaskConfig m = MultiTaskConfig::for_mode(k == 0 ? TaskMode::multi : TaskMode::scene_only);
      const auto model = train_understanding_stage(cfg, c, vocab, m, seed);
      acc[k] = 100 * score_predictions(predict_episodes(*model, c.dev, vocab, m), c.dev).first.acc;
    }
    multi += acc[0] / 3.0;
    single += acc[1] / 3.0;
    per_seed += " " + num(acc[0], 2) + "/" + num(acc[1], 2);
  }
  return {exact && multi >= single - 0.2, "mean dev scene Acc multi " + num(multi, 3) + " vs scene_only " +
                                              num(single, 3) + " (seeds:" + per_seed + "); decomposition " +
                                              (exact ? "exact" : "BROKEN")};
}

Outcome ablation_ordering() {
  RunConfig cfg;
  cfg.threads = 1;
  cfg.configurations = {"full", "w/o-prompt"};
  cfg.output_dir = scratch("ablation").string();
  const MetricReport r = run_ablation(cfg);
  const auto& full = r.configurations.at(0);
  const auto& bare = r.configurations.at(1);
  bool ok = cfg.corpus.leak == 0.8 && full.seeds.size() == bare.seeds.size() && !full.seeds.empty();
  std::string detail = "lambda " + num(cfg.corpus.leak, 1) + "; Avg full/w/o-prompt per seed:";
  for (std::size_t i = 0; i < full.seeds.size(); ++i) {
    const double a = full.seeds[i].generation.avg(), b = bare.seeds[i].generation.avg();
    ok = ok && a > b;
    detail += " " + num(a, 3) + "/" + num(b, 3);
  }
  return {ok, detail};
}

Outcome determinism() {
  RunConfig cfg = parse_config(
      "corpus.n_train = 40\ncorpus.n_dev = 10\ncorpus.n_test = 10\n"
      "understand.epochs = 2\ngenerate.epochs = 2\n"
      "run.seeds = 4\nrun.configurations = full,single-task,w/o-prompt\nrun.threads = 1\n");
  cfg.output_dir = scratch("determinism").string();
  const std::string first = run_ablation(cfg).json_text();
  fs::remove_all(cfg.output_dir);
  const std::string second = run_ablation(cfg).json_text();
  return {first == second, std::to_string(first.size()) + " bytes, " + (first == second ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<std::string> only;
  int epochs = 6;
  app.add_option("--only", only, "run only the named checks");
  app.add_option("--multitask-epochs", epochs, "understanding epochs per model in the multi-task check");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"f1-oracle", f1_oracle},
      {"majority-collapse", majority_collapse},
      {"random-mode", random_mode},
      {"metric-oracles", metric_oracles},
      {"gradient-suite", gradient_suite},
      {"co-occurrence", co_occurrence},
      {"multi-task", [epochs] { return multi_task(epochs); }},
      {"ablation-ordering", ablation_ordering},
      {"determinism", determinism},
  };

  int failures = 0;
  for (const auto& [name, check] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
