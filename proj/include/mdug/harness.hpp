#pragma once

// Experiment orchestration: training stages, inference, on-disk artifacts and
// the ablation report.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdug/config.hpp"

namespace mdug {

/// Loads corpus.path when set, otherwise generates from the corpus section.
Corpus obtain_corpus(const RunConfig& config);
/// Generator vocabulary plus any extra words found in the corpus (sorted).
Vocabulary run_vocabulary(const Corpus& corpus, const RunConfig& config);
std::unique_ptr<Captioner> run_captioner(const Corpus& corpus, const RunConfig& config,
                                         const std::filesystem::path& work_dir);

struct StageLog {
  std::ostream* out = nullptr;
  void line(const std::string& s) const;
};

std::unique_ptr<UnderstandingModel> train_understanding_stage(const RunConfig& config, const Corpus& corpus,
                                                              const Vocabulary& vocab, const MultiTaskConfig& multitask,
                                                              std::uint64_t seed, const StageLog& log = {});

std::unique_ptr<GeneratorModel> train_generation_stage(const RunConfig& config, const Corpus& corpus,
                                                       const Vocabulary& vocab, const Captioner* captioner,
                                                       const AblationFlags& flags, std::uint64_t seed,
                                                       const StageLog& log = {});

// Checkpoints carry the full run config in their manifest so models can be rebuilt.
void save_understanding(const std::filesystem::path& path, const UnderstandingModel& model, const RunConfig& config,
                        const MultiTaskConfig& multitask);
std::unique_ptr<UnderstandingModel> load_understanding(const std::filesystem::path& path, const Vocabulary& vocab,
                                                       int feature_dim, MultiTaskConfig* multitask = nullptr);
void save_generator(const std::filesystem::path& path, const GeneratorModel& model, const RunConfig& config);
std::unique_ptr<GeneratorModel> load_generator(const std::filesystem::path& path, const Vocabulary& vocab);

struct PredictionRecord {
  std::string episode_id;
  int utterance_index = 0;
  double scene_prob = 0.0;
  double session_prob = 0.0;
  int scene_label = 0;
  int session_label = 0;
};

std::vector<PredictionRecord> to_records(const std::vector<BoundaryPrediction>& preds,
                                         const std::vector<DialogueEpisode>& episodes);
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
/// Scores stored predictions against gold labels; every gold utterance must be covered exactly once.
std::pair<BoundaryScore, BoundaryScore> score_records(const std::vector<PredictionRecord>& records,
                                                      const std::vector<DialogueEpisode>& episodes);
/// Scores stored responses against the final utterance of each episode.
GenScore score_responses(const std::vector<ResponseRecord>& responses, const std::vector<DialogueEpisode>& episodes);

/// Inference over `episodes` in the fixed order: last-turn labels, prompt, captions, assembly, decoding.
std::vector<ResponseRecord> infer_responses(const GeneratorModel& generator, const std::vector<DialogueEpisode>& episodes,
                                            const Vocabulary& vocab, const Captioner* captioner,
                                            const LabelSource& labels, const RunConfig& config,
                                            const AblationFlags& flags);

/// One of the five comparison rows.
struct Configuration {
  std::string name;
  AblationFlags flags;
  bool single_task = false;
};
Configuration configuration_from_name(const std::string& name);

struct SeedScores {
  std::uint64_t seed = 0;
  std::optional<BoundaryScore> scene, session;  // absent when the row does not use predicted labels
  GenScore generation;
};

struct ConfigurationScores {
  std::string name;
  std::vector<SeedScores> seeds;

  GenScore mean_generation() const;
  std::optional<BoundaryScore> mean_scene() const;
  std::optional<BoundaryScore> mean_session() const;
};

struct MetricReport {
  std::string run_id;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<ConfigurationScores> configurations;

  nlohmann::ordered_json to_json() const;
  std::string json_text() const;
  /// Aligned text tables: generation (BLEU-1, ROUGE-L, METEOR, CIDEr, Avg) and boundary scores.
  std::string table() const;
};

/// Trains and evaluates every configured row for every seed, writing artifacts under
/// output_root()/<run id>, then assembles the report from those files.
MetricReport run_ablation(const RunConfig& config, const StageLog& log = {});

/// Rebuilds the report from a run directory written by run_ablation.
MetricReport report_from_directory(const std::filesystem::path& dir);

/// Run id: "run-" followed by the config hash.
std::string run_id(const RunConfig& config);

}  // namespace mdug
