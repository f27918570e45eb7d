#include "mdug/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"

#include "mdug/params.hpp"

namespace mdug {

using json = nlohmann::ordered_json;

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

const std::vector<DialogueEpisode>& Corpus::split(Split s) const {
  return s == Split::train ? train : s == Split::dev ? dev : test;
}

std::vector<DialogueEpisode>& Corpus::split(Split s) {
  return s == Split::train ? train : s == Split::dev ? dev : test;
}

FrameTrack frame_track(const DialogueEpisode& ep, std::size_t begin, std::size_t end) {
  FrameTrack track;
  end = std::min(end, ep.utterances.size());
  for (std::size_t i = begin; i < end; ++i) {
    const auto& u = ep.utterances[i];
    track.push_back({0.5 * (u.t_start + u.t_end), u.frame_feature});
  }
  return track;
}

FrameTrack frame_track(const DialogueEpisode& ep) { return frame_track(ep, 0, ep.utterances.size()); }

void GenConfig::validate() const {
  auto bad = [](const std::string& m) { throw std::invalid_argument("GenConfig: " + m); };
  if (!(scene_rate > 0.0 && scene_rate < 0.5)) bad("scene_rate must lie in (0, 0.5)");
  if (!(session_rate > 0.0 && session_rate < 0.5)) bad("session_rate must lie in (0, 0.5)");
  if (scene_rate > session_rate) bad("scene_rate exceeds session_rate (every scene boundary is a session boundary)");
  if (feature_dim <= 0) bad("feature_dim must be positive");
  if (!(leak >= 0.0 && leak <= 1.0)) bad("leak must lie in [0, 1]");
  if (n_scenes < 2) bad("need at least two scenes");
  if (min_utterances < 2 || max_utterances < min_utterances) bad("bad episode length range");
  if (n_train < 0 || n_dev < 0 || n_test < 0) bad("negative split size");
  if (feature_noise < 0.0) bad("feature_noise must be non-negative");
  if (!(cue_prob >= 0.0 && cue_prob <= 1.0)) bad("cue_prob must lie in [0, 1]");
}

namespace {

const std::vector<std::vector<std::string>>& scene_lexicon() {
  static const std::vector<std::vector<std::string>> lex = {
      {"kitchen", "stove", "dinner"},    {"street", "traffic", "crosswalk"}, {"office", "desk", "meeting"},
      {"park", "bench", "trees"},        {"bar", "drinks", "counter"},       {"hospital", "doctor", "nurse"},
      {"car", "driving", "seatbelt"},    {"bedroom", "pillow", "blanket"},   {"beach", "waves", "sand"},
      {"school", "teacher", "homework"}, {"restaurant", "waiter", "menu"},  {"library", "books", "quiet"},
      {"airport", "flight", "luggage"},  {"gym", "workout", "weights"},      {"church", "wedding", "choir"},
      {"garden", "flowers", "roses"},
  };
  return lex;
}

const std::vector<std::string>& prompt_words() {
  static const std::vector<std::string> w = {"the", "scene", "is", "continuous,", "while", "dialogue", "session", "not",
                                             "continuous"};
  return w;
}

const std::vector<std::string>& caption_words() {
  static const std::vector<std::string> w = {"people", "talk", "in", "a"};
  return w;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w = {"i",    "you",  "we",   "think", "know", "really", "maybe",
                                             "yes",  "no",   "okay", "just",  "that", "it",     "was",
                                             "what", "about", "right", "here", "there", "do"};
  return w;
}

constexpr int kWordsPerTopic = 7;

std::vector<std::string> fixed_words(const GenConfig& config) {
  std::vector<std::string> w;
  auto append = [&](const std::vector<std::string>& src) {
    for (const auto& s : src)
      if (std::find(w.begin(), w.end(), s) == w.end()) w.push_back(s);
  };
  append(prompt_words());
  append(caption_words());
  append(cue_words());
  append(filler_words());
  const auto& lex = scene_lexicon();
  for (int s = 0; s < config.n_scenes; ++s) append(lex[static_cast<std::size_t>(s)]);
  return w;
}

// Pronounceable CVCV pseudo-words; index -> word is injective for index < 4900.
std::string pseudo_word(int index) {
  static const std::string cons = "bdfgklmnprstvz";
  static const std::string vows = "aeiou";
  std::string w;
  w += cons[index % 14];
  w += vows[(index / 14) % 5];
  w += cons[(index / 70) % 14];
  w += vows[(index / 980) % 5];
  return w;
}

// Episode lengths, then exact boundary counts scattered over non-initial positions.
struct SplitPlan {
  std::vector<int> lengths;
  std::vector<std::vector<int>> scene, session;
};

SplitPlan plan_split(const GenConfig& cfg, int n_episodes, Rng& rng) {
  SplitPlan plan;
  std::uniform_int_distribution<int> len(cfg.min_utterances, cfg.max_utterances);
  std::vector<std::pair<int, int>> slots;  // (episode, index) with index > 0
  long total = 0;
  for (int e = 0; e < n_episodes; ++e) {
    plan.lengths.push_back(len(rng));
    total += plan.lengths.back();
    plan.scene.emplace_back(plan.lengths.back(), 0);
    plan.session.emplace_back(plan.lengths.back(), 0);
    for (int i = 1; i < plan.lengths.back(); ++i) slots.emplace_back(e, i);
  }
  const auto n_scene = static_cast<std::size_t>(std::llround(cfg.scene_rate * static_cast<double>(total)));
  const auto n_session = static_cast<std::size_t>(std::llround(cfg.session_rate * static_cast<double>(total)));
  std::shuffle(slots.begin(), slots.end(), rng);
  for (std::size_t s = 0; s < std::min(n_session, slots.size()); ++s) {
    auto [e, i] = slots[s];
    plan.session[e][i] = 1;
    if (s < n_scene) plan.scene[e][i] = 1;
  }
  return plan;
}

double to_float_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

int pick_other(int current, int n, Rng& rng) {
  std::uniform_int_distribution<int> d(0, n - 2);
  const int r = d(rng);
  return r >= current ? r + 1 : r;
}

std::vector<DialogueEpisode> generate_split(const GenConfig& cfg, Split split, int n_episodes,
                                            const std::vector<SceneProfile>& bank,
                                            const std::vector<std::vector<std::string>>& topics, Rng& rng) {
  const SplitPlan plan = plan_split(cfg, n_episodes, rng);
  const int n_topics = static_cast<int>(topics.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> dur(1.0, 4.0);
  std::uniform_real_distribution<double> gap(0.0, 0.5);
  std::normal_distribution<double> noise(0.0, cfg.feature_noise);
  std::uniform_int_distribution<int> nwords(4, 8);
  const auto& cues = cue_words();
  const auto& fill = filler_words();

  std::vector<DialogueEpisode> out;
  for (int e = 0; e < n_episodes; ++e) {
    DialogueEpisode ep;
    ep.episode_id = to_string(split) + "-" + std::to_string(e);
    ep.split = split;
    int scene = std::uniform_int_distribution<int>(0, cfg.n_scenes - 1)(rng);
    int topic = std::uniform_int_distribution<int>(0, n_topics - 1)(rng);
    int speaker = 0;
    double t = 0.0;
    const int len = plan.lengths[e];
    for (int i = 0; i < len; ++i) {
      Utterance u;
      u.scene_label = plan.scene[e][i];
      u.session_label = plan.session[e][i];
      if (u.scene_label) scene = pick_other(scene, cfg.n_scenes, rng);
      if (u.session_label) topic = pick_other(topic, n_topics, rng);
      speaker = u.session_label ? std::uniform_int_distribution<int>(0, 2)(rng) : (speaker + 1) % 2;
      u.speaker_id = speaker;

      t += gap(rng);
      u.t_start = to_float_precision(t);
      t += dur(rng);
      u.t_end = to_float_precision(t);

      std::vector<std::string> words;
      if (u.session_label && unit(rng) < cfg.cue_prob)
        words.push_back(cues[std::uniform_int_distribution<std::size_t>(0, cues.size() - 1)(rng)]);
      const int nw = nwords(rng);
      const auto& tw = topics[static_cast<std::size_t>(topic)];
      for (int w = 0; w < nw; ++w) {
        if (unit(rng) < 0.6)
          words.push_back(tw[std::uniform_int_distribution<std::size_t>(0, tw.size() - 1)(rng)]);
        else
          words.push_back(fill[std::uniform_int_distribution<std::size_t>(0, fill.size() - 1)(rng)]);
      }
      // Only the final turn (the reference response) may name its scene.
      if (i == len - 1 && unit(rng) < cfg.leak) {
        words.insert(words.end(), {"in", "the", bank[static_cast<std::size_t>(scene)].keywords[0]});
      }
      u.text = join_tokens(words);

      const auto& mean = bank[static_cast<std::size_t>(scene)].mean;
      u.frame_feature.resize(mean.size());
      for (std::size_t d = 0; d < mean.size(); ++d) u.frame_feature[d] = to_float_precision(mean[d] + noise(rng));

      ep.latent_scene_ids.push_back(scene);
      ep.utterances.push_back(std::move(u));
    }
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& cue_words() {
  static const std::vector<std::string> w = {"anyway", "so", "well", "meanwhile"};
  return w;
}

std::vector<SceneProfile> scene_bank(const GenConfig& config) {
  if (config.n_scenes > static_cast<int>(scene_lexicon().size()))
    throw std::invalid_argument("n_scenes exceeds the scene lexicon size");
  Rng rng(config.bank_seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<SceneProfile> bank;
  for (int s = 0; s < config.n_scenes; ++s) {
    SceneProfile p;
    p.keywords = scene_lexicon()[static_cast<std::size_t>(s)];
    for (int k = 0; k < config.feature_dim; ++k) p.mean.push_back(to_float_precision(d(rng)));
    bank.push_back(std::move(p));
  }
  return bank;
}

std::vector<std::vector<std::string>> topic_words(const GenConfig& config) {
  const auto fixed = fixed_words(config);
  const int free_slots = config.vocab_size - kNumSpecial - static_cast<int>(fixed.size());
  const int n_topics = free_slots / kWordsPerTopic;
  if (n_topics < 2)
    throw std::invalid_argument("vocab_size " + std::to_string(config.vocab_size) + " leaves room for fewer than two topics");
  std::set<std::string> taken(fixed.begin(), fixed.end());
  std::vector<std::vector<std::string>> topics(static_cast<std::size_t>(n_topics));
  int next = 0;
  for (auto& t : topics) {
    while (static_cast<int>(t.size()) < kWordsPerTopic) {
      std::string w = pseudo_word(next++);
      if (taken.insert(w).second) t.push_back(std::move(w));
    }
  }
  return topics;
}

Vocabulary corpus_vocabulary(const GenConfig& config) {
  auto words = fixed_words(config);
  for (const auto& t : topic_words(config)) words.insert(words.end(), t.begin(), t.end());
  return Vocabulary(words);
}

Corpus generate_corpus(const GenConfig& config, std::uint64_t seed) {
  config.validate();
  const auto bank = scene_bank(config);
  const auto topics = topic_words(config);
  Corpus c;
  c.feature_dim = config.feature_dim;
  c.config = config;
  const std::pair<Split, int> splits[] = {{Split::train, config.n_train}, {Split::dev, config.n_dev}, {Split::test, config.n_test}};
  for (auto [s, n] : splits) {
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(s) + 1);
    c.split(s) = generate_split(config, s, n, bank, topics, rng);
  }
  return c;
}

CorpusStats compute_stats(const Corpus& corpus, int vocab_size) {
  CorpusStats st;
  long n = 0, sc = 0, se = 0;
  for (const auto* sp : {&corpus.train, &corpus.dev, &corpus.test})
    for (const auto& ep : *sp)
      for (const auto& u : ep.utterances) {
        ++n;
        sc += u.scene_label;
        se += u.session_label;
      }
  if (n > 0) {
    st.scene_positive_rate = static_cast<double>(sc) / static_cast<double>(n);
    st.session_positive_rate = static_cast<double>(se) / static_cast<double>(n);
  }
  st.vocab_size = vocab_size;
  st.n_train = static_cast<int>(corpus.train.size());
  st.n_dev = static_cast<int>(corpus.dev.size());
  st.n_test = static_cast<int>(corpus.test.size());
  return st;
}

void validate_episode(const DialogueEpisode& ep, int feature_dim) {
  auto bad = [&](const std::string& m) { throw std::invalid_argument("episode " + ep.episode_id + ": " + m); };
  if (ep.utterances.empty()) bad("no utterances");
  if (!ep.latent_scene_ids.empty() && ep.latent_scene_ids.size() != ep.utterances.size())
    bad("latent_scene_ids length differs from utterance count");
  for (std::size_t i = 0; i < ep.utterances.size(); ++i) {
    const auto& u = ep.utterances[i];
    const std::string at = "utterance " + std::to_string(i) + ": ";
    if (u.scene_label != 0 && u.scene_label != 1) bad(at + "scene_label must be 0 or 1");
    if (u.session_label != 0 && u.session_label != 1) bad(at + "session_label must be 0 or 1");
    if (u.scene_label == 1 && u.session_label == 0)
      bad(at + "co-occurrence rule violated: a scene boundary (scene=1) must also be a session boundary (session=1)");
    if (!(u.t_start < u.t_end)) bad(at + "t_start must be before t_end");
    if (i > 0 && u.t_start < ep.utterances[i - 1].t_start) bad(at + "t_start decreases");
    if (static_cast<int>(u.frame_feature.size()) != feature_dim)
      bad(at + "frame_feature has dimension " + std::to_string(u.frame_feature.size()) + ", expected " +
          std::to_string(feature_dim));
    for (double v : u.frame_feature)
      if (!std::isfinite(v)) bad(at + "non-finite frame_feature entry");
    if (!ep.latent_scene_ids.empty()) {
      const bool changed = i > 0 && ep.latent_scene_ids[i] != ep.latent_scene_ids[i - 1];
      if (changed != (u.scene_label == 1)) bad(at + "latent_scene_ids disagree with scene_label");
    }
  }
}

std::filesystem::path stats_path(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p.replace_extension(".stats.json");
  return p;
}

namespace {

json config_to_json(const GenConfig& c) {
  return json{{"scene_rate", c.scene_rate},         {"session_rate", c.session_rate},
              {"vocab_size", c.vocab_size},         {"feature_dim", c.feature_dim},
              {"n_scenes", c.n_scenes},             {"leak", c.leak},
              {"min_utterances", c.min_utterances}, {"max_utterances", c.max_utterances},
              {"n_train", c.n_train},               {"n_dev", c.n_dev},
              {"n_test", c.n_test},                 {"feature_noise", c.feature_noise},
              {"cue_prob", c.cue_prob},             {"bank_seed", c.bank_seed}};
}

GenConfig config_from_json(const json& j) {
  GenConfig c;
  c.scene_rate = j.at("scene_rate");
  c.session_rate = j.at("session_rate");
  c.vocab_size = j.at("vocab_size");
  c.feature_dim = j.at("feature_dim");
  c.n_scenes = j.at("n_scenes");
  c.leak = j.at("leak");
  c.min_utterances = j.at("min_utterances");
  c.max_utterances = j.at("max_utterances");
  c.n_train = j.at("n_train");
  c.n_dev = j.at("n_dev");
  c.n_test = j.at("n_test");
  c.feature_noise = j.at("feature_noise");
  c.cue_prob = j.at("cue_prob");
  c.bank_seed = j.at("bank_seed");
  return c;
}

json episode_to_json(const DialogueEpisode& ep) {
  json utts = json::array();
  for (const auto& u : ep.utterances) {
    utts.push_back(json{{"text", u.text},
                        {"t_start", u.t_start},
                        {"t_end", u.t_end},
                        {"frame_feature", u.frame_feature},
                        {"scene_label", u.scene_label},
                        {"session_label", u.session_label},
                        {"speaker_id", u.speaker_id}});
  }
  json j{{"episode_id", ep.episode_id}, {"split", to_string(ep.split)}};
  if (!ep.latent_scene_ids.empty()) j["latent_scene_ids"] = ep.latent_scene_ids;
  j["utterances"] = std::move(utts);
  return j;
}

template <typename T>
T field(const json& obj, const char* name, std::size_t line) {
  if (!obj.contains(name)) throw CorpusError(line, std::string("missing field '") + name + "'");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception&) {
    throw CorpusError(line, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto* sp : {&corpus.train, &corpus.dev, &corpus.test})
    for (const auto& ep : *sp) out << episode_to_json(ep).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());

  json stats;
  const int vocab = corpus.config ? corpus_vocabulary(*corpus.config).size() : 0;
  const auto st = compute_stats(corpus, vocab);
  stats["scene_positive_rate"] = st.scene_positive_rate;
  stats["session_positive_rate"] = st.session_positive_rate;
  stats["vocab_size"] = st.vocab_size;
  stats["n_episodes"] = json{{"train", st.n_train}, {"dev", st.n_dev}, {"test", st.n_test}};
  stats["feature_dim"] = corpus.feature_dim;
  if (corpus.config) stats["generator"] = config_to_json(*corpus.config);
  std::ofstream sout(stats_path(path));
  if (!sout) throw std::runtime_error("cannot write " + stats_path(path).string());
  sout << stats.dump(2) << '\n';
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus " + path.string());
  Corpus c;
  c.feature_dim = -1;
  if (std::filesystem::exists(stats_path(path))) {
    std::ifstream sin(stats_path(path));
    const json stats = json::parse(sin);
    if (stats.contains("generator")) c.config = config_from_json(stats["generator"]);
    if (stats.contains("feature_dim")) c.feature_dim = stats["feature_dim"];
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(lineno, std::string("invalid JSON: ") + e.what());
    }
    DialogueEpisode ep;
    ep.episode_id = field<std::string>(j, "episode_id", lineno);
    try {
      ep.split = split_from_string(field<std::string>(j, "split", lineno));
    } catch (const std::invalid_argument& e) {
      throw CorpusError(lineno, e.what());
    }
    if (j.contains("latent_scene_ids")) ep.latent_scene_ids = field<std::vector<int>>(j, "latent_scene_ids", lineno);
    if (!j.contains("utterances") || !j["utterances"].is_array()) throw CorpusError(lineno, "missing field 'utterances'");
    for (const auto& uj : j["utterances"]) {
      Utterance u;
      u.text = field<std::string>(uj, "text", lineno);
      u.t_start = field<double>(uj, "t_start", lineno);
      u.t_end = field<double>(uj, "t_end", lineno);
      u.frame_feature = field<std::vector<double>>(uj, "frame_feature", lineno);
      u.scene_label = field<int>(uj, "scene_label", lineno);
      u.session_label = field<int>(uj, "session_label", lineno);
      u.speaker_id = field<int>(uj, "speaker_id", lineno);
      ep.utterances.push_back(std::move(u));
    }
    if (c.feature_dim < 0 && !ep.utterances.empty()) c.feature_dim = static_cast<int>(ep.utterances[0].frame_feature.size());
    try {
      validate_episode(ep, c.feature_dim);
    } catch (const std::invalid_argument& e) {
      throw CorpusError(lineno, e.what());
    }
    c.split(ep.split).push_back(std::move(ep));
  }
  if (c.feature_dim < 0) c.feature_dim = c.config ? c.config->feature_dim : 0;
  return c;
}

}  // namespace mdug
