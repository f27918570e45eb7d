#include "mdug/prompting.hpp"

#include <stdexcept>

namespace mdug {

PromptText build_prompt(int scene_label, int session_label) {
  auto word = [](int label) -> std::string {
    if (label == 0) return "continuous";
    if (label == 1) return "not continuous";
    throw std::invalid_argument("build_prompt: labels must be 0 or 1");
  };
  PromptText p;
  p.scene_label = scene_label;
  p.session_label = session_label;
  p.text = "the scene is " + word(scene_label) + ", while the dialogue session is " + word(session_label);
  p.forbidden_pair = scene_label == 1 && session_label == 0;
  return p;
}

const char* to_string(Segment s) {
  switch (s) {
    case Segment::cls: return "cls";
    case Segment::context: return "context";
    case Segment::separator: return "sep";
    case Segment::video_caption: return "video_caption";
    case Segment::image_caption: return "image_caption";
    case Segment::prompt: return "prompt";
  }
  return "?";
}

GeneratorInput assemble_input(const std::vector<std::string>& context, const std::string& video_caption,
                              const std::string& image_caption, const PromptText& prompt, const AblationFlags& flags,
                              const Vocabulary& vocab, int max_tokens) {
  std::vector<std::vector<int>> ctx;
  for (const auto& u : context) {
    auto ids = vocab.encode(u);
    if (!ids.empty()) ctx.push_back(std::move(ids));
  }
  if (ctx.empty()) throw std::invalid_argument("assemble_input: empty context");

  std::vector<std::pair<Segment, std::vector<int>>> tail;
  if (flags.video_caption) tail.emplace_back(Segment::video_caption, vocab.encode(video_caption));
  if (flags.image_caption) tail.emplace_back(Segment::image_caption, vocab.encode(image_caption));
  if (flags.label_prompt) tail.emplace_back(Segment::prompt, vocab.encode(prompt.text));

  long fixed = 1;  // [CLS]
  for (const auto& [seg, ids] : tail) fixed += 1 + static_cast<long>(ids.size());
  if (fixed >= max_tokens) throw std::invalid_argument("assemble_input: captions and prompt alone exceed max_tokens");

  long ctx_len = 0;
  for (const auto& u : ctx) ctx_len += static_cast<long>(u.size());
  std::size_t first = 0;
  while (fixed + ctx_len > max_tokens && first + 1 < ctx.size()) {
    ctx_len -= static_cast<long>(ctx[first].size());
    ++first;
  }
  if (fixed + ctx_len > max_tokens) {
    auto& oldest = ctx[first];
    oldest.erase(oldest.begin(), oldest.begin() + (fixed + ctx_len - max_tokens));
  }

  GeneratorInput in;
  auto emit = [&](int id, Segment s) {
    in.token_ids.push_back(id);
    in.segments.push_back(s);
  };
  emit(kCls, Segment::cls);
  for (std::size_t i = first; i < ctx.size(); ++i)
    for (int id : ctx[i]) emit(id, Segment::context);
  for (const auto& [seg, ids] : tail) {
    emit(kSep, Segment::separator);
    for (int id : ids) emit(id, seg);
  }
  return in;
}

std::string dump_token_ids(const GeneratorInput& input) {
  std::string s = "[";
  for (std::size_t i = 0; i < input.token_ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(input.token_ids[i]);
  }
  return s + "]";
}

}  // namespace mdug
