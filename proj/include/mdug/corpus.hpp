#pragma once

// Dialogue data model, JSONL persistence and the synthetic episode generator.
//
// Boundary convention: label 1 on utterance i means utterance i starts a new
// scene (or session). The first utterance of an episode is never a boundary.
// Every scene boundary is also a session boundary.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdug/vocab.hpp"

namespace mdug {

enum class Split { train, dev, test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Utterance {
  std::string text;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> frame_feature;
  int scene_label = 0;
  int session_label = 0;
  int speaker_id = 0;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct DialogueEpisode {
  std::string episode_id;
  std::vector<Utterance> utterances;
  std::vector<int> latent_scene_ids;  // one per utterance when present
  Split split = Split::train;

  friend bool operator==(const DialogueEpisode&, const DialogueEpisode&) = default;
};

/// One timed frame of visual features on the video clock.
struct TimedFrame {
  double t = 0.0;
  std::vector<double> feature;
};
using FrameTrack = std::vector<TimedFrame>;

/// Frames for utterances [begin, end): one frame per utterance at its interval midpoint.
FrameTrack frame_track(const DialogueEpisode& ep, std::size_t begin, std::size_t end);
FrameTrack frame_track(const DialogueEpisode& ep);

struct GenConfig {
  double scene_rate = 0.0837;
  double session_rate = 0.1263;
  int vocab_size = 256;
  int feature_dim = 16;
  int n_scenes = 12;
  double leak = 0.8;  // probability a reference response names its scene keyword
  int min_utterances = 8;
  int max_utterances = 24;
  int n_train = 600;
  int n_dev = 150;
  int n_test = 350;
  double feature_noise = 0.5;
  double cue_prob = 0.8;  // probability a session-opening utterance starts with a cue word
  std::uint64_t bank_seed = 7;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

struct CorpusStats {
  double scene_positive_rate = 0.0;
  double session_positive_rate = 0.0;
  int vocab_size = 0;
  int n_train = 0;
  int n_dev = 0;
  int n_test = 0;
};

struct Corpus {
  std::vector<DialogueEpisode> train, dev, test;
  int feature_dim = 0;
  std::optional<GenConfig> config;  // generator settings, when known

  const std::vector<DialogueEpisode>& split(Split s) const;
  std::vector<DialogueEpisode>& split(Split s);
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// A latent scene: its keyword set (primary keyword first) and frame-feature mean.
struct SceneProfile {
  std::vector<std::string> keywords;
  std::vector<double> mean;
};

/// Scene profiles are a pure function of (n_scenes, feature_dim, bank_seed).
std::vector<SceneProfile> scene_bank(const GenConfig& config);

/// The closed vocabulary of a generated corpus, including prompt and caption words.
Vocabulary corpus_vocabulary(const GenConfig& config);

/// Topic word sets used for utterance text.
std::vector<std::vector<std::string>> topic_words(const GenConfig& config);
const std::vector<std::string>& cue_words();

Corpus generate_corpus(const GenConfig& config, std::uint64_t seed);

CorpusStats compute_stats(const Corpus& corpus, int vocab_size);

/// Raised for malformed corpus files; carries the 1-based line number.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Sidecar path: `corpus.jsonl` -> `corpus.stats.json`.
std::filesystem::path stats_path(const std::filesystem::path& corpus_path);

/// Writes the JSONL corpus plus its stats sidecar.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
/// Reads the JSONL corpus; the sidecar is optional and supplies the generator config.
Corpus load_corpus(const std::filesystem::path& path);

/// Validates one episode against the data-model invariants; throws std::invalid_argument.
void validate_episode(const DialogueEpisode& ep, int feature_dim);

}  // namespace mdug
