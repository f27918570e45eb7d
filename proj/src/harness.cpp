#include "mdug/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mdug/kernels.hpp"

namespace mdug {

using json = nlohmann::ordered_json;

void StageLog::line(const std::string& s) const {
  if (out != nullptr) *out << s << '\n' << std::flush;
}

Corpus obtain_corpus(const RunConfig& config) {
  if (!config.corpus_path.empty()) return load_corpus(config.corpus_path);
  return generate_corpus(config.corpus, config.corpus_seed);
}

Vocabulary run_vocabulary(const Corpus& corpus, const RunConfig& config) {
  const Vocabulary base = corpus_vocabulary(corpus.config ? *corpus.config : config.corpus);
  std::vector<std::string> words;
  for (int i = kNumSpecial; i < base.size(); ++i) words.push_back(base.word(i));
  std::set<std::string> extra;
  for (const auto* split : {&corpus.train, &corpus.dev, &corpus.test})
    for (const auto& ep : *split)
      for (const auto& u : ep.utterances)
        for (const auto& w : tokenize(u.text))
          if (!base.contains(w)) extra.insert(w);
  words.insert(words.end(), extra.begin(), extra.end());
  return Vocabulary(words);
}

std::unique_ptr<Captioner> run_captioner(const Corpus& corpus, const RunConfig& config,
                                         const std::filesystem::path& work_dir) {
  GenConfig gc = corpus.config ? *corpus.config : config.corpus;
  return make_captioner(config.captioner, gc, work_dir);
}

namespace {

EncoderConfig encoder_config(const RunConfig& config, const Vocabulary& vocab, int feature_dim) {
  EncoderConfig e = config.encoder;
  e.vocab_size = vocab.size();
  e.feature_dim = feature_dim;
  return e;
}

GeneratorConfig generator_config(const RunConfig& config, const Vocabulary& vocab) {
  GeneratorConfig g = config.generator;
  g.vocab_size = vocab.size();
  return g;
}

PipelineOptions pipeline_options(const RunConfig& config, const AblationFlags& flags) {
  PipelineOptions p = config.pipeline;
  p.flags = flags;
  p.max_input = config.generator.max_input;
  p.max_target = config.generator.max_target;
  return p;
}

std::string fixed(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

}  // namespace

std::unique_ptr<UnderstandingModel> train_understanding_stage(const RunConfig& config, const Corpus& corpus,
                                                              const Vocabulary& vocab, const MultiTaskConfig& multitask,
                                                              std::uint64_t seed, const StageLog& log) {
  auto model = std::make_unique<UnderstandingModel>(encoder_config(config, vocab, corpus.feature_dim), seed);
  TrainOptions opts = config.understand_train;
  opts.seed = seed;
  log.line("[understand] mode=" + to_string(multitask.mode) + " seed=" + std::to_string(seed) +
           " config=" + config.hash() + " params=" + std::to_string(model->params().scalar_count()));
  const auto result = train_understanding(*model, corpus, vocab, multitask, opts);
  for (const auto& e : result.epochs)
    log.line("[understand] epoch " + std::to_string(e.epoch) + " loss " + fixed(e.train_loss, 4) + " dev scene acc " +
             fixed(100 * e.dev_scene.acc, 2) + " f1 " + fixed(100 * e.dev_scene.f1, 2) + " session acc " +
             fixed(100 * e.dev_session.acc, 2) + " f1 " + fixed(100 * e.dev_session.f1, 2));
  for (const auto& w : result.warnings) log.line("[understand] warning: " + w);
  log.line("[understand] best epoch " + std::to_string(result.best_epoch));
  return model;
}

std::unique_ptr<GeneratorModel> train_generation_stage(const RunConfig& config, const Corpus& corpus,
                                                       const Vocabulary& vocab, const Captioner* captioner,
                                                       const AblationFlags& flags, std::uint64_t seed,
                                                       const StageLog& log) {
  const auto popts = pipeline_options(config, flags);
  const LabelSource gold = gold_last_turn;
  const auto train = build_samples(corpus.train, captioner, gold, popts, vocab);
  const auto dev = build_samples(corpus.dev, captioner, gold, popts, vocab);
  auto model = std::make_unique<GeneratorModel>(generator_config(config, vocab), seed);
  TrainOptions opts = config.generate_train;
  opts.seed = seed;
  log.line("[generate] seed=" + std::to_string(seed) + " config=" + config.hash() +
           " flags video=" + std::to_string(flags.video_caption) + " image=" + std::to_string(flags.image_caption) +
           " prompt=" + std::to_string(flags.label_prompt) + " params=" + std::to_string(model->params().scalar_count()));
  const auto result = train_generator(*model, train, dev, opts, vocab, config.max_len);
  for (const auto& e : result.epochs)
    log.line("[generate] epoch " + std::to_string(e.epoch) + " loss " + fixed(e.train_loss, 4) + " dev bleu1 " +
             fixed(100 * e.dev_bleu1, 2));
  log.line("[generate] best epoch " + std::to_string(result.best_epoch));
  return model;
}

namespace {

Manifest manifest_for(const RunConfig& config, const std::string& kind, int vocab_size) {
  Manifest m;
  m["kind"] = kind;
  m["vocab_size"] = std::to_string(vocab_size);
  m["config_hash"] = config.hash();
  for (const auto& [k, v] : config.to_map()) m["config." + k] = v;
  return m;
}

RunConfig config_from_manifest(const Manifest& m, const std::string& kind, const Vocabulary& vocab,
                               const std::filesystem::path& path) {
  const auto it = m.find("kind");
  if (it == m.end() || it->second != kind) throw std::runtime_error(path.string() + ": not a " + kind + " checkpoint");
  if (m.at("vocab_size") != std::to_string(vocab.size()))
    throw std::runtime_error(path.string() + ": checkpoint vocabulary size " + m.at("vocab_size") +
                             " does not match corpus vocabulary size " + std::to_string(vocab.size()));
  RunConfig c;
  for (const auto& [k, v] : m)
    if (k.rfind("config.", 0) == 0) c.set(k.substr(7), v);
  return c;
}

std::filesystem::path manifest_path(const std::filesystem::path& p) { return p.string() + ".manifest"; }

}  // namespace

void save_understanding(const std::filesystem::path& path, const UnderstandingModel& model, const RunConfig& config,
                        const MultiTaskConfig& multitask) {
  RunConfig c = config;
  c.multitask = multitask;
  auto m = manifest_for(c, "understanding", model.config().vocab_size);
  m["feature_dim"] = std::to_string(model.config().feature_dim);
  save_checkpoint(path, model.params(), m);
}

std::unique_ptr<UnderstandingModel> load_understanding(const std::filesystem::path& path, const Vocabulary& vocab,
                                                       int feature_dim, MultiTaskConfig* multitask) {
  const auto m = read_manifest(manifest_path(path));
  const RunConfig c = config_from_manifest(m, "understanding", vocab, path);
  if (m.count("feature_dim") && m.at("feature_dim") != std::to_string(feature_dim))
    throw std::runtime_error(path.string() + ": checkpoint feature_dim " + m.at("feature_dim") +
                             " does not match corpus feature_dim " + std::to_string(feature_dim));
  auto model = std::make_unique<UnderstandingModel>(encoder_config(c, vocab, feature_dim), 0);
  load_checkpoint(path, model->params());
  if (multitask != nullptr) *multitask = c.multitask;
  return model;
}

void save_generator(const std::filesystem::path& path, const GeneratorModel& model, const RunConfig& config) {
  save_checkpoint(path, model.params(), manifest_for(config, "generator", model.config().vocab_size));
}

std::unique_ptr<GeneratorModel> load_generator(const std::filesystem::path& path, const Vocabulary& vocab) {
  const RunConfig c = config_from_manifest(read_manifest(manifest_path(path)), "generator", vocab, path);
  auto model = std::make_unique<GeneratorModel>(generator_config(c, vocab), 0);
  load_checkpoint(path, model->params());
  return model;
}

std::vector<PredictionRecord> to_records(const std::vector<BoundaryPrediction>& preds,
                                         const std::vector<DialogueEpisode>& episodes) {
  if (preds.size() != episodes.size()) throw std::invalid_argument("to_records: episode count mismatch");
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t u = 0; u < preds[i].scene_label.size(); ++u)
      out.push_back({episodes[i].episode_id, static_cast<int>(u), preds[i].scene_prob[u], preds[i].session_prob[u],
                     preds[i].scene_label[u], preds[i].session_label[u]});
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) {
    json j;
    j["episode_id"] = r.episode_id;
    j["utterance_index"] = r.utterance_index;
    j["scene_prob"] = r.scene_prob;
    j["session_prob"] = r.session_prob;
    j["scene_label"] = r.scene_label;
    j["session_label"] = r.session_label;
    out << j.dump() << '\n';
  }
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("episode_id").get<std::string>(), j.at("utterance_index").get<int>(),
                     j.at("scene_prob").get<double>(), j.at("session_prob").get<double>(),
                     j.at("scene_label").get<int>(), j.at("session_label").get<int>()});
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::pair<BoundaryScore, BoundaryScore> score_records(const std::vector<PredictionRecord>& records,
                                                      const std::vector<DialogueEpisode>& episodes) {
  std::map<std::pair<std::string, int>, const PredictionRecord*> by_key;
  for (const auto& r : records)
    if (!by_key.emplace(std::make_pair(r.episode_id, r.utterance_index), &r).second)
      throw std::invalid_argument("duplicate prediction for " + r.episode_id + "#" + std::to_string(r.utterance_index));
  std::vector<int> ps, gs, pt, gt;
  for (const auto& ep : episodes)
    for (std::size_t u = 0; u < ep.utterances.size(); ++u) {
      const auto it = by_key.find({ep.episode_id, static_cast<int>(u)});
      if (it == by_key.end())
        throw std::invalid_argument("missing prediction for " + ep.episode_id + "#" + std::to_string(u));
      ps.push_back(it->second->scene_label);
      pt.push_back(it->second->session_label);
      gs.push_back(ep.utterances[u].scene_label);
      gt.push_back(ep.utterances[u].session_label);
    }
  if (by_key.size() != ps.size()) throw std::invalid_argument("predictions cover utterances absent from the gold split");
  return {boundary_score(ps, gs), boundary_score(pt, gt)};
}

GenScore score_responses(const std::vector<ResponseRecord>& responses, const std::vector<DialogueEpisode>& episodes) {
  std::map<std::string, const ResponseRecord*> by_id;
  for (const auto& r : responses)
    if (!by_id.emplace(r.episode_id, &r).second) throw std::invalid_argument("duplicate response for " + r.episode_id);
  std::vector<std::string> cands, refs;
  for (const auto& ep : episodes) {
    const auto it = by_id.find(ep.episode_id);
    if (it == by_id.end()) throw std::invalid_argument("missing response for " + ep.episode_id);
    cands.push_back(it->second->response_text);
    refs.push_back(ep.utterances.back().text);
  }
  if (by_id.size() != cands.size()) throw std::invalid_argument("responses cover episodes absent from the gold split");
  return score_generation(cands, refs);
}

std::vector<ResponseRecord> infer_responses(const GeneratorModel& generator, const std::vector<DialogueEpisode>& episodes,
                                            const Vocabulary& vocab, const Captioner* captioner,
                                            const LabelSource& labels, const RunConfig& config,
                                            const AblationFlags& flags) {
  const DecodeMethod method = DecodeMethod::parse(config.decode);
  const auto samples = build_samples(episodes, captioner, labels, pipeline_options(config, flags), vocab);
  const auto results = generate_all(generator, samples, method, config.max_len, vocab);
  std::vector<ResponseRecord> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.push_back({samples[i].episode_id, results[i].text, method.to_string(), results[i].log_prob()});
  return out;
}

Configuration configuration_from_name(const std::string& name) {
  Configuration c{name, {}, false};
  if (name == "full") return c;
  if (name == "single-task") {
    c.single_task = true;
    return c;
  }
  if (name == "w/o-image") {
    c.flags.image_caption = false;
    return c;
  }
  if (name == "w/o-video") {
    c.flags.video_caption = false;
    return c;
  }
  if (name == "w/o-prompt") {
    c.flags = {false, false, false};
    return c;
  }
  throw std::invalid_argument("unknown configuration '" + name +
                              "' (expected full, single-task, w/o-image, w/o-video or w/o-prompt)");
}

namespace {

BoundaryScore mean_of(const std::vector<BoundaryScore>& v) {
  BoundaryScore m;
  for (const auto& s : v) {
    m.tp += s.tp;
    m.fp += s.fp;
    m.tn += s.tn;
    m.fn += s.fn;
    m.acc += s.acc / static_cast<double>(v.size());
    m.precision += s.precision / static_cast<double>(v.size());
    m.recall += s.recall / static_cast<double>(v.size());
    m.f1 += s.f1 / static_cast<double>(v.size());
  }
  return m;
}

std::optional<BoundaryScore> mean_opt(const std::vector<SeedScores>& seeds, bool scene) {
  std::vector<BoundaryScore> v;
  for (const auto& s : seeds) {
    const auto& b = scene ? s.scene : s.session;
    if (!b) return std::nullopt;
    v.push_back(*b);
  }
  if (v.empty()) return std::nullopt;
  return mean_of(v);
}

json boundary_json(const BoundaryScore& s) {
  json j;
  j["acc"] = s.acc;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["tp"] = s.tp;
  j["fp"] = s.fp;
  j["tn"] = s.tn;
  j["fn"] = s.fn;
  return j;
}

json gen_json(const GenScore& s) {
  json j;
  j["bleu1"] = s.bleu1;
  j["rouge_l"] = s.rouge_l;
  j["meteor"] = s.meteor;
  j["cider"] = s.cider;
  j["avg"] = s.avg();
  return j;
}

std::string slug(const std::string& name) {
  std::string s = name;
  if (s.rfind("w/o-", 0) == 0) s = "wo-" + s.substr(4);
  return s;
}

std::filesystem::path seed_dir(const std::filesystem::path& dir, std::uint64_t seed) {
  return dir / ("seed" + std::to_string(seed));
}

std::filesystem::path predictions_file(const std::filesystem::path& dir, std::uint64_t seed, TaskMode mode) {
  return seed_dir(dir, seed) / ("understand-" + to_string(mode)) / "predictions.jsonl";
}

std::filesystem::path responses_file(const std::filesystem::path& dir, std::uint64_t seed, const std::string& name) {
  return seed_dir(dir, seed) / slug(name) / "responses.jsonl";
}

}  // namespace

GenScore ConfigurationScores::mean_generation() const {
  GenScore m;
  const double n = static_cast<double>(seeds.size());
  for (const auto& s : seeds) {
    m.bleu1 += s.generation.bleu1 / n;
    m.rouge_l += s.generation.rouge_l / n;
    m.meteor += s.generation.meteor / n;
    m.cider += s.generation.cider / n;
  }
  return m;
}

std::optional<BoundaryScore> ConfigurationScores::mean_scene() const { return mean_opt(seeds, true); }
std::optional<BoundaryScore> ConfigurationScores::mean_session() const { return mean_opt(seeds, false); }

json MetricReport::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  j["split"] = "test";
  json rows = json::array();
  for (const auto& c : configurations) {
    json row;
    row["name"] = c.name;
    json per_seed = json::array();
    for (const auto& s : c.seeds) {
      json e;
      e["seed"] = s.seed;
      e["generation"] = gen_json(s.generation);
      if (s.scene) e["scene"] = boundary_json(*s.scene);
      if (s.session) e["session"] = boundary_json(*s.session);
      per_seed.push_back(e);
    }
    row["per_seed"] = per_seed;
    json mean;
    mean["generation"] = gen_json(c.mean_generation());
    if (auto s = c.mean_scene()) mean["scene"] = boundary_json(*s);
    if (auto s = c.mean_session()) mean["session"] = boundary_json(*s);
    row["mean"] = mean;
    rows.push_back(row);
  }
  j["configurations"] = rows;
  return j;
}

std::string MetricReport::json_text() const { return to_json().dump(2) + "\n"; }

std::string MetricReport::table() const {
  std::ostringstream t;
  t << "run " << run_id << "  config " << config_hash << "  seeds";
  for (auto s : seeds) t << ' ' << s;
  t << "\n\nresponse generation (test, seed mean)\n";
  t << std::left << std::setw(14) << "configuration" << std::right << std::setw(9) << "BLEU-1" << std::setw(9)
    << "ROUGE-L" << std::setw(9) << "METEOR" << std::setw(9) << "CIDEr" << std::setw(9) << "Avg" << '\n';
  for (const auto& c : configurations) {
    const auto g = c.mean_generation();
    t << std::left << std::setw(14) << c.name << std::right << std::fixed << std::setprecision(3) << std::setw(9)
      << 100 * g.bleu1 << std::setw(9) << 100 * g.rouge_l << std::setw(9) << 100 * g.meteor << std::setw(9) << g.cider
      << std::setw(9) << g.avg() << '\n';
  }
  bool any = false;
  for (const auto& c : configurations) any = any || c.mean_scene().has_value();
  if (any) {
    t << "\nboundary prediction (test, seed mean, percent)\n";
    t << std::left << std::setw(14) << "configuration" << std::right;
    for (const char* h : {"scene Acc", "P", "R", "F1", "session Acc", "P", "R", "F1"}) t << std::setw(12) << h;
    t << '\n';
    for (const auto& c : configurations) {
      const auto s = c.mean_scene();
      const auto e = c.mean_session();
      if (!s || !e) continue;
      t << std::left << std::setw(14) << c.name << std::right << std::fixed << std::setprecision(3);
      for (const auto* b : {&*s, &*e})
        t << std::setw(12) << 100 * b->acc << std::setw(12) << 100 * b->precision << std::setw(12) << 100 * b->recall
          << std::setw(12) << 100 * b->f1;
      t << '\n';
    }
  }
  return t.str();
}

std::string run_id(const RunConfig& config) { return "run-" + config.hash(); }

MetricReport run_ablation(const RunConfig& config, const StageLog& log) {
  config.validate();
  if (config.threads > 0) kernels::set_num_threads(config.threads);
  std::vector<Configuration> rows;
  for (const auto& name : config.configurations) rows.push_back(configuration_from_name(name));

  const auto dir = config.output_root() / run_id(config);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.txt");
    out << config.to_text();
  }
  const Corpus corpus = obtain_corpus(config);
  save_corpus(corpus, dir / "corpus.jsonl");
  const Vocabulary vocab = run_vocabulary(corpus, config);
  const bool any_caption = std::any_of(rows.begin(), rows.end(), [](const Configuration& c) {
    return c.flags.video_caption || c.flags.image_caption;
  });
  const auto captioner = any_caption ? run_captioner(corpus, config, dir / "captioner") : nullptr;
  log.line("[ablate] run " + run_id(config) + " vocab " + std::to_string(vocab.size()) + " train episodes " +
           std::to_string(corpus.train.size()));

  std::set<TaskMode> modes;
  for (const auto& r : rows) {
    if (r.single_task) {
      modes.insert(TaskMode::scene_only);
      modes.insert(TaskMode::session_only);
    } else if (r.flags.label_prompt) {
      modes.insert(TaskMode::multi);
    }
  }

  for (const auto seed : config.seeds) {
    std::map<TaskMode, std::unique_ptr<UnderstandingModel>> understanders;
    std::map<TaskMode, MultiTaskConfig> mt;
    for (const auto mode : modes) {
      MultiTaskConfig m = config.multitask;
      if (mode != TaskMode::multi) {
        m = MultiTaskConfig::for_mode(mode);
        m.threshold = config.multitask.threshold;
        m.repair = config.multitask.repair;
        m.scene_pos_weight = config.multitask.scene_pos_weight;
        m.session_pos_weight = config.multitask.session_pos_weight;
      }
      mt[mode] = m;
      try {
        understanders[mode] = train_understanding_stage(config, corpus, vocab, m, seed, log);
        const auto path = predictions_file(dir, seed, mode);
        std::filesystem::create_directories(path.parent_path());
        write_predictions(path, to_records(predict_episodes(*understanders[mode], corpus.test, vocab, m), corpus.test));
      } catch (const std::exception& e) {
        throw std::runtime_error("understanding (" + to_string(mode) + ", seed " + std::to_string(seed) +
                                 ") failed: " + e.what());
      }
    }

    // Rows that share input flags share the generator (training always uses gold-label prompts).
    std::vector<std::pair<AblationFlags, std::unique_ptr<GeneratorModel>>> generators;
    for (const auto& row : rows) {
      try {
        GeneratorModel* gen = nullptr;
        for (auto& [flags, model] : generators)
          if (flags == row.flags) gen = model.get();
        if (gen == nullptr) {
          generators.emplace_back(row.flags,
                                  train_generation_stage(config, corpus, vocab, captioner.get(), row.flags, seed, log));
          gen = generators.back().second.get();
        }
        LabelSource labels = [](const DialogueEpisode&) { return TurnLabels{}; };
        const int turns = config.pipeline.context_turns;
        if (row.single_task) {
          const auto* sm = understanders.at(TaskMode::scene_only).get();
          const auto* tm = understanders.at(TaskMode::session_only).get();
          labels = [&, sm, tm, turns](const DialogueEpisode& ep) {
            const auto s = predict_last_turn(*sm, ep, vocab, mt.at(TaskMode::scene_only), turns);
            const auto t = predict_last_turn(*tm, ep, vocab, mt.at(TaskMode::session_only), turns);
            return TurnLabels{s.scene, t.session, s.scene_prob, t.session_prob};
          };
        } else if (row.flags.label_prompt) {
          const auto* m = understanders.at(TaskMode::multi).get();
          labels = [&, m, turns](const DialogueEpisode& ep) {
            return predict_last_turn(*m, ep, vocab, mt.at(TaskMode::multi), turns);
          };
        }
        const auto responses = infer_responses(*gen, corpus.test, vocab, captioner.get(), labels, config, row.flags);
        const auto path = responses_file(dir, seed, row.name);
        std::filesystem::create_directories(path.parent_path());
        write_responses(path, responses);
        log.line("[ablate] seed " + std::to_string(seed) + " " + row.name + " avg " +
                 fixed(score_responses(responses, corpus.test).avg(), 3));
      } catch (const std::exception& e) {
        throw std::runtime_error("configuration '" + row.name + "' (seed " + std::to_string(seed) + ") failed: " + e.what());
      }
    }
  }

  MetricReport report = report_from_directory(dir);
  std::ofstream(dir / "report.json") << report.json_text();
  std::ofstream(dir / "report.txt") << report.table();
  return report;
}

MetricReport report_from_directory(const std::filesystem::path& dir) {
  const auto cfg_path = dir / "config.txt";
  const auto corpus_path = dir / "corpus.jsonl";
  if (!std::filesystem::exists(cfg_path) || !std::filesystem::exists(corpus_path))
    throw std::invalid_argument("no run found in " + dir.string() + " (expected config.txt and corpus.jsonl)");
  const RunConfig config = load_config(cfg_path);
  const Corpus corpus = load_corpus(corpus_path);

  MetricReport report;
  report.run_id = run_id(config);
  report.config_hash = config.hash();
  report.seeds = config.seeds;
  for (const auto& name : config.configurations) {
    const Configuration row = configuration_from_name(name);
    ConfigurationScores cs;
    cs.name = name;
    for (const auto seed : config.seeds) {
      SeedScores s;
      s.seed = seed;
      s.generation = score_responses(read_responses(responses_file(dir, seed, name)), corpus.test);
      if (row.single_task) {
        s.scene = score_records(read_predictions(predictions_file(dir, seed, TaskMode::scene_only)), corpus.test).first;
        s.session =
            score_records(read_predictions(predictions_file(dir, seed, TaskMode::session_only)), corpus.test).second;
      } else if (row.flags.label_prompt) {
        std::tie(s.scene, s.session) =
            score_records(read_predictions(predictions_file(dir, seed, TaskMode::multi)), corpus.test);
      }
      cs.seeds.push_back(s);
    }
    report.configurations.push_back(std::move(cs));
  }
  return report;
}

}  // namespace mdug
