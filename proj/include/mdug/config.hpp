#pragma once

// Run configuration: a flat key = value text file with dotted section keys.
// Command-line overrides use the same keys.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mdug/captioning.hpp"
#include "mdug/corpus.hpp"
#include "mdug/fusion.hpp"
#include "mdug/generation.hpp"
#include "mdug/pipeline.hpp"
#include "mdug/understanding.hpp"

namespace mdug {

/// Environment variable that relocates relative output directories.
inline constexpr const char* kOutputRootEnv = "MDUG_OUTPUT_ROOT";

struct RunConfig {
  GenConfig corpus;
  std::uint64_t corpus_seed = 1;
  std::string corpus_path;  // load instead of generating when set

  EncoderConfig encoder;
  MultiTaskConfig multitask;
  TrainOptions understand_train;

  GeneratorConfig generator;
  TrainOptions generate_train;
  PipelineOptions pipeline;
  std::string decode = "greedy";
  int max_len = 24;

  CaptionerHandle captioner;

  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> configurations{"full", "single-task", "w/o-image", "w/o-video", "w/o-prompt"};
  std::string output_dir = "runs";
  int threads = 0;  // 0 = OpenMP default

  RunConfig();

  /// Every key with its canonical value, sorted by key.
  std::map<std::string, std::string> to_map() const;
  /// Sets one key; throws std::invalid_argument for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// 16 hex digits of FNV-1a over the sorted canonical "key = value" lines.
  std::string hash() const;
  std::string to_text() const;

  /// Output directory with the environment override applied to relative paths.
  std::filesystem::path output_root() const;
};

/// Parses "key = value" lines; '#' starts a comment.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

}  // namespace mdug
