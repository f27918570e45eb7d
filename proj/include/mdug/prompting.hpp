#pragma once

// Scene-aware prompt text and the generator input layout:
//   [CLS] context [SEP] video-caption [SEP] image-caption [SEP] prompt
// Disabled segments drop out together with the separator that introduces them.

#include <string>
#include <vector>

#include "mdug/vocab.hpp"

namespace mdug {

struct PromptText {
  std::string text;
  int scene_label = 0;
  int session_label = 0;
  bool forbidden_pair = false;  // (scene=1, session=0): rendered as-is, flagged
};

/// "the scene is <continuous|not continuous>, while the dialogue session is <...>"; label 1 = not continuous.
PromptText build_prompt(int scene_label, int session_label);

enum class Segment { cls, context, separator, video_caption, image_caption, prompt };
const char* to_string(Segment s);

struct AblationFlags {
  bool video_caption = true;
  bool image_caption = true;
  bool label_prompt = true;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct GeneratorInput {
  std::vector<int> token_ids;
  std::vector<Segment> segments;  // parallel to token_ids
};

/// Concatenates the enabled segments. Only the context shrinks to respect max_tokens: whole
/// oldest utterances first, then leading tokens of the oldest remaining one.
GeneratorInput assemble_input(const std::vector<std::string>& context, const std::string& video_caption,
                              const std::string& image_caption, const PromptText& prompt, const AblationFlags& flags,
                              const Vocabulary& vocab, int max_tokens);

/// Token ids as a JSON array, for debugging dumps.
std::string dump_token_ids(const GeneratorInput& input);

}  // namespace mdug
