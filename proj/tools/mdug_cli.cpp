// Command-line front end: corpus generation, both training stages, inference,
// scoring, the ablation grid and report regeneration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdug/harness.hpp"
#include "mdug/kernels.hpp"

namespace fs = std::filesystem;
using namespace mdug;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string corpus;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "key = value config file");
  cmd->add_option("-s,--set", c.overrides, "override a config key (key=value), repeatable");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_file.empty() ? RunConfig{} : load_config(c.config_file);
  apply_overrides(cfg, c.overrides);
  if (!c.corpus.empty()) cfg.corpus_path = c.corpus;
  cfg.validate();
  if (cfg.threads > 0) kernels::set_num_threads(cfg.threads);
  std::cerr << "config " << cfg.hash() << "  seeds " << cfg.to_map().at("run.seeds") << '\n';
  return cfg;
}

const std::vector<DialogueEpisode>& pick_split(const Corpus& corpus, const std::string& name) {
  return corpus.split(split_from_string(name));
}

void print_boundary(const char* track, const BoundaryScore& s) {
  std::cout << track << "  Acc " << 100 * s.acc << "  P " << 100 * s.precision << "  R " << 100 * s.recall << "  F1 "
            << 100 * s.f1 << "  (tp " << s.tp << " fp " << s.fp << " tn " << s.tn << " fn " << s.fn << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal dialogue understanding and generation"};
  app.require_subcommand(1);

  Common common;
  std::string out, split = "test", model_path, gen_path, responses_path, predictions_path, dir;
  std::string mode;
  std::uint64_t seed = 1;
  bool no_video = false, no_image = false, no_prompt = false;

  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus (JSONL + stats sidecar)");
  add_common(gen, common);
  gen->add_option("-o,--out", out, "output corpus path")->required();

  auto* tu = app.add_subcommand("train-understand", "train the boundary model");
  add_common(tu, common);
  tu->add_option("--corpus", common.corpus, "corpus JSONL (default: generate from config)");
  tu->add_option("-o,--out", out, "checkpoint path")->required();
  tu->add_option("--mode", mode, "multi, scene_only or session_only");
  tu->add_option("--seed", seed, "model seed");

  auto* eu = app.add_subcommand("eval-understand", "predict and score boundaries");
  add_common(eu, common);
  eu->add_option("--corpus", common.corpus, "corpus JSONL");
  eu->add_option("--model", model_path, "boundary checkpoint");
  eu->add_option("--predictions", predictions_path, "score stored predictions instead of running a model");
  eu->add_option("--split", split, "train, dev or test");
  eu->add_option("-o,--out", out, "write predictions JSONL");

  auto* tg = app.add_subcommand("train-generate", "train the response generator");
  add_common(tg, common);
  tg->add_option("--corpus", common.corpus, "corpus JSONL");
  tg->add_option("-o,--out", out, "checkpoint path")->required();
  tg->add_option("--seed", seed, "model seed");
  tg->add_flag("--no-video", no_video, "drop the video caption");
  tg->add_flag("--no-image", no_image, "drop the image caption");
  tg->add_flag("--no-prompt", no_prompt, "drop the label prompt");

  auto* inf = app.add_subcommand("infer", "generate responses for a split");
  add_common(inf, common);
  inf->add_option("--corpus", common.corpus, "corpus JSONL");
  inf->add_option("--understand", model_path, "boundary checkpoint (needed when the prompt is on)");
  inf->add_option("--generator", gen_path, "generator checkpoint")->required();
  inf->add_option("--split", split, "train, dev or test");
  inf->add_option("-o,--out", out, "responses JSONL")->required();
  inf->add_flag("--no-video", no_video, "drop the video caption");
  inf->add_flag("--no-image", no_image, "drop the image caption");
  inf->add_flag("--no-prompt", no_prompt, "drop the label prompt");

  auto* eg = app.add_subcommand("eval-generate", "score stored responses");
  add_common(eg, common);
  eg->add_option("--corpus", common.corpus, "corpus JSONL")->required();
  eg->add_option("--responses", responses_path, "responses JSONL")->required();
  eg->add_option("--split", split, "train, dev or test");

  auto* ab = app.add_subcommand("ablate", "run every configured row for every seed and emit the comparison tables");
  add_common(ab, common);
  ab->add_option("--corpus", common.corpus, "corpus JSONL (default: generate from config)");

  auto* rep = app.add_subcommand("report", "rebuild the report of a finished run directory");
  rep->add_option("-d,--dir", dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) {
      const RunConfig cfg = resolve(common);
      const Corpus c = generate_corpus(cfg.corpus, cfg.corpus_seed);
      save_corpus(c, out);
      const auto st = compute_stats(c, corpus_vocabulary(cfg.corpus).size());
      std::cout << "wrote " << out << ": scene rate " << st.scene_positive_rate << ", session rate "
                << st.session_positive_rate << ", episodes " << st.n_train << "/" << st.n_dev << "/" << st.n_test << '\n';
      return 0;
    }
    if (tu->parsed()) {
      RunConfig cfg = resolve(common);
      if (!mode.empty()) cfg.set("understand.mode", mode);
      cfg.validate();
      const Corpus c = obtain_corpus(cfg);
      const Vocabulary vocab = run_vocabulary(c, cfg);
      const auto model = train_understanding_stage(cfg, c, vocab, cfg.multitask, seed, {&std::cerr});
      save_understanding(out, *model, cfg, cfg.multitask);
      std::cout << "wrote " << out << '\n';
      return 0;
    }
    if (eu->parsed()) {
      const RunConfig cfg = resolve(common);
      const Corpus c = obtain_corpus(cfg);
      const auto& eps = pick_split(c, split);
      std::vector<PredictionRecord> records;
      if (!predictions_path.empty()) {
        records = read_predictions(predictions_path);
      } else {
        if (model_path.empty()) throw std::invalid_argument("eval-understand needs --model or --predictions");
        const Vocabulary vocab = run_vocabulary(c, cfg);
        MultiTaskConfig mt;
        const auto model = load_understanding(model_path, vocab, c.feature_dim, &mt);
        records = to_records(predict_episodes(*model, eps, vocab, mt), eps);
      }
      if (!out.empty()) write_predictions(out, records);
      const auto [scene, session] = score_records(records, eps);
      print_boundary("scene  ", scene);
      print_boundary("session", session);
      return 0;
    }
    if (tg->parsed()) {
      const RunConfig cfg = resolve(common);
      const Corpus c = obtain_corpus(cfg);
      const Vocabulary vocab = run_vocabulary(c, cfg);
      const AblationFlags flags{!no_video, !no_image, !no_prompt};
      const auto cap = run_captioner(c, cfg, fs::path(out).parent_path() / "captioner");
      const auto model = train_generation_stage(cfg, c, vocab, cap.get(), flags, seed, {&std::cerr});
      save_generator(out, *model, cfg);
      std::cout << "wrote " << out << '\n';
      return 0;
    }
    if (inf->parsed()) {
      const RunConfig cfg = resolve(common);
      const Corpus c = obtain_corpus(cfg);
      const auto& eps = pick_split(c, split);
      const Vocabulary vocab = run_vocabulary(c, cfg);
      const AblationFlags flags{!no_video, !no_image, !no_prompt};
      const auto generator = load_generator(gen_path, vocab);
      LabelSource labels = [](const DialogueEpisode&) { return TurnLabels{}; };
      std::unique_ptr<UnderstandingModel> understander;
      MultiTaskConfig mt;
      if (flags.label_prompt) {
        if (model_path.empty()) throw std::invalid_argument("infer needs --understand when the label prompt is on");
        understander = load_understanding(model_path, vocab, c.feature_dim, &mt);
        labels = [&](const DialogueEpisode& ep) {
          return predict_last_turn(*understander, ep, vocab, mt, cfg.pipeline.context_turns);
        };
      }
      const auto cap = run_captioner(c, cfg, fs::path(out).parent_path() / "captioner");
      write_responses(out, infer_responses(*generator, eps, vocab, cap.get(), labels, cfg, flags));
      std::cout << "wrote " << out << '\n';
      return 0;
    }
    if (eg->parsed()) {
      const RunConfig cfg = resolve(common);
      const Corpus c = obtain_corpus(cfg);
      const GenScore s = score_responses(read_responses(responses_path), pick_split(c, split));
      std::cout << "BLEU-1 " << 100 * s.bleu1 << "  ROUGE-L " << 100 * s.rouge_l << "  METEOR " << 100 * s.meteor
                << "  CIDEr " << s.cider << "  Avg " << s.avg() << '\n';
      return 0;
    }
    if (ab->parsed()) {
      const RunConfig cfg = resolve(common);
      const MetricReport report = run_ablation(cfg, {&std::cerr});
      std::cout << report.table();
      std::cout << "\nreport written to " << (cfg.output_root() / report.run_id).string() << '\n';
      return 0;
    }
    if (rep->parsed()) {
      if (!fs::is_directory(dir) || fs::is_empty(dir)) {
        std::cerr << "error: " << dir << " is empty or not a directory; nothing to report\n";
        return 2;
      }
      const MetricReport report = report_from_directory(dir);
      std::ofstream(fs::path(dir) / "report.json") << report.json_text();
      std::ofstream(fs::path(dir) / "report.txt") << report.table();
      std::cout << report.table();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
