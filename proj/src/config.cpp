#include "mdug/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace mdug {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto s = trim(text);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T, class Ref>
Field number(std::string key, Ref ref) {
  return {key,
          [ref](const RunConfig& c) {
            const T v = ref(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return format(v);
            else return std::to_string(v);
          },
          [ref, key](RunConfig& c, const std::string& s) { ref(c) = parse_number<T>(key, s); }};
}

template <class Ref>
Field boolean(std::string key, Ref ref) {
  return {key, [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [ref, key](RunConfig& c, const std::string& s) { ref(c) = parse_bool(key, s); }};
}

template <class Ref>
Field text(std::string key, Ref ref) {
  return {key, [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); },
          [ref](RunConfig& c, const std::string& s) { ref(c) = trim(s); }};
}

void add_train_fields(std::vector<Field>& f, const std::string& prefix, TrainOptions RunConfig::*member) {
  auto opt = [member](RunConfig& c) -> TrainOptions& { return c.*member; };
  f.push_back(number<int>(prefix + ".epochs", [opt](RunConfig& c) -> int& { return opt(c).epochs; }));
  f.push_back(number<int>(prefix + ".batch_size", [opt](RunConfig& c) -> int& { return opt(c).batch_size; }));
  f.push_back(number<double>(prefix + ".lr", [opt](RunConfig& c) -> double& { return opt(c).peak_lr; }));
  f.push_back(number<double>(prefix + ".warmup", [opt](RunConfig& c) -> double& { return opt(c).warmup_fraction; }));
  f.push_back(number<double>(prefix + ".weight_decay", [opt](RunConfig& c) -> double& { return opt(c).weight_decay; }));
  f.push_back(number<double>(prefix + ".clip", [opt](RunConfig& c) -> double& { return opt(c).clip_norm; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> f;
    // corpus
    f.push_back(number<double>("corpus.scene_rate", [](RunConfig& c) -> double& { return c.corpus.scene_rate; }));
    f.push_back(number<double>("corpus.session_rate", [](RunConfig& c) -> double& { return c.corpus.session_rate; }));
    f.push_back(number<int>("corpus.vocab_size", [](RunConfig& c) -> int& { return c.corpus.vocab_size; }));
    f.push_back(number<int>("corpus.feature_dim", [](RunConfig& c) -> int& { return c.corpus.feature_dim; }));
    f.push_back(number<int>("corpus.n_scenes", [](RunConfig& c) -> int& { return c.corpus.n_scenes; }));
    f.push_back(number<double>("corpus.leak", [](RunConfig& c) -> double& { return c.corpus.leak; }));
    f.push_back(number<int>("corpus.min_utterances", [](RunConfig& c) -> int& { return c.corpus.min_utterances; }));
    f.push_back(number<int>("corpus.max_utterances", [](RunConfig& c) -> int& { return c.corpus.max_utterances; }));
    f.push_back(number<int>("corpus.n_train", [](RunConfig& c) -> int& { return c.corpus.n_train; }));
    f.push_back(number<int>("corpus.n_dev", [](RunConfig& c) -> int& { return c.corpus.n_dev; }));
    f.push_back(number<int>("corpus.n_test", [](RunConfig& c) -> int& { return c.corpus.n_test; }));
    f.push_back(number<double>("corpus.feature_noise", [](RunConfig& c) -> double& { return c.corpus.feature_noise; }));
    f.push_back(number<double>("corpus.cue_prob", [](RunConfig& c) -> double& { return c.corpus.cue_prob; }));
    f.push_back(number<std::uint64_t>("corpus.bank_seed", [](RunConfig& c) -> std::uint64_t& { return c.corpus.bank_seed; }));
    f.push_back(number<std::uint64_t>("corpus.seed", [](RunConfig& c) -> std::uint64_t& { return c.corpus_seed; }));
    f.push_back(text("corpus.path", [](RunConfig& c) -> std::string& { return c.corpus_path; }));
    // understanding
    f.push_back(number<int>("encoder.d_model", [](RunConfig& c) -> int& { return c.encoder.d_model; }));
    f.push_back(number<int>("encoder.n_layers", [](RunConfig& c) -> int& { return c.encoder.n_layers; }));
    f.push_back(number<int>("encoder.n_heads", [](RunConfig& c) -> int& { return c.encoder.n_heads; }));
    f.push_back(number<int>("encoder.d_ff", [](RunConfig& c) -> int& { return c.encoder.d_ff; }));
    f.push_back(number<int>("encoder.max_tokens", [](RunConfig& c) -> int& { return c.encoder.max_tokens; }));
    f.push_back(number<double>("encoder.dropout", [](RunConfig& c) -> double& { return c.encoder.dropout; }));
    f.push_back({"understand.mode", [](const RunConfig& c) { return to_string(c.multitask.mode); },
                 [](RunConfig& c, const std::string& s) {
                   const auto mode = task_mode_from_string(trim(s));
                   const auto old = c.multitask;
                   c.multitask = MultiTaskConfig::for_mode(mode);
                   c.multitask.threshold = old.threshold;
                   c.multitask.repair = old.repair;
                   c.multitask.scene_pos_weight = old.scene_pos_weight;
                   c.multitask.session_pos_weight = old.session_pos_weight;
                 }});
    f.push_back(number<double>("understand.w_scene", [](RunConfig& c) -> double& { return c.multitask.w_scene; }));
    f.push_back(number<double>("understand.w_session", [](RunConfig& c) -> double& { return c.multitask.w_session; }));
    f.push_back(number<double>("understand.threshold", [](RunConfig& c) -> double& { return c.multitask.threshold; }));
    f.push_back(boolean("understand.repair", [](RunConfig& c) -> bool& { return c.multitask.repair; }));
    f.push_back(number<double>("understand.scene_pos_weight",
                               [](RunConfig& c) -> double& { return c.multitask.scene_pos_weight; }));
    f.push_back(number<double>("understand.session_pos_weight",
                               [](RunConfig& c) -> double& { return c.multitask.session_pos_weight; }));
    add_train_fields(f, "understand", &RunConfig::understand_train);
    // generation
    f.push_back(number<int>("generator.d_model", [](RunConfig& c) -> int& { return c.generator.d_model; }));
    f.push_back(number<int>("generator.n_enc_layers", [](RunConfig& c) -> int& { return c.generator.n_enc_layers; }));
    f.push_back(number<int>("generator.n_dec_layers", [](RunConfig& c) -> int& { return c.generator.n_dec_layers; }));
    f.push_back(number<int>("generator.n_heads", [](RunConfig& c) -> int& { return c.generator.n_heads; }));
    f.push_back(number<int>("generator.d_ff", [](RunConfig& c) -> int& { return c.generator.d_ff; }));
    f.push_back(number<int>("generator.max_input", [](RunConfig& c) -> int& { return c.generator.max_input; }));
    f.push_back(number<int>("generator.max_target", [](RunConfig& c) -> int& { return c.generator.max_target; }));
    f.push_back(number<double>("generator.dropout", [](RunConfig& c) -> double& { return c.generator.dropout; }));
    f.push_back(number<int>("generator.context_turns", [](RunConfig& c) -> int& { return c.pipeline.context_turns; }));
    f.push_back(text("generator.decode", [](RunConfig& c) -> std::string& { return c.decode; }));
    f.push_back(number<int>("generator.max_len", [](RunConfig& c) -> int& { return c.max_len; }));
    add_train_fields(f, "generate", &RunConfig::generate_train);
    f.push_back(boolean("flags.video_caption", [](RunConfig& c) -> bool& { return c.pipeline.flags.video_caption; }));
    f.push_back(boolean("flags.image_caption", [](RunConfig& c) -> bool& { return c.pipeline.flags.image_caption; }));
    f.push_back(boolean("flags.label_prompt", [](RunConfig& c) -> bool& { return c.pipeline.flags.label_prompt; }));
    f.push_back({"captioner.kind",
                 [](const RunConfig& c) { return std::string(c.captioner.kind == CaptionerKind::stub ? "stub" : "external"); },
                 [](RunConfig& c, const std::string& s) {
                   const auto v = trim(s);
                   if (v == "stub") c.captioner.kind = CaptionerKind::stub;
                   else if (v == "external") c.captioner.kind = CaptionerKind::external;
                   else throw std::invalid_argument("config key 'captioner.kind': expected stub or external");
                 }});
    f.push_back(text("captioner.command", [](RunConfig& c) -> std::string& { return c.captioner.identifier; }));
    f.push_back(number<std::uint64_t>("captioner.seed", [](RunConfig& c) -> std::uint64_t& { return c.captioner.seed; }));
    // run
    f.push_back({"run.seeds",
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
                   return s;
                 },
                 [](RunConfig& c, const std::string& s) {
                   c.seeds.clear();
                   for (const auto& item : split_list(s)) c.seeds.push_back(parse_number<std::uint64_t>("run.seeds", item));
                 }});
    f.push_back({"run.configurations",
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.configurations.size(); ++i) s += (i ? "," : "") + c.configurations[i];
                   return s;
                 },
                 [](RunConfig& c, const std::string& s) { c.configurations = split_list(s); }});
    f.push_back(text("run.output_dir", [](RunConfig& c) -> std::string& { return c.output_dir; }));
    f.push_back(number<int>("run.threads", [](RunConfig& c) -> int& { return c.threads; }));
    return f;
  }();
  return f;
}

}  // namespace

RunConfig::RunConfig() {
  // Desk-scale models; the training recipe keeps epochs/batch/schedule and raises the peak rate
  // because these small models start from random weights.
  encoder.d_model = 32;
  encoder.n_layers = 2;
  encoder.n_heads = 4;
  encoder.d_ff = 64;
  encoder.max_tokens = 512;
  encoder.dropout = 0.1;
  understand_train.peak_lr = 1e-3;
  generator.d_model = 32;
  generator.n_heads = 4;
  generator.d_ff = 64;
  generator.max_input = 512;
  generate_train.peak_lr = 1e-3;
  captioner.seed = corpus.bank_seed;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  for (const auto& f : fields()) m[f.key] = f.get(*this);
  return m;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  corpus.validate();
  EncoderConfig e = encoder;
  e.vocab_size = kNumSpecial + 1;
  e.validate();
  multitask.validate();
  GeneratorConfig g = generator;
  g.vocab_size = kNumSpecial + 1;
  g.validate();
  for (const auto* t : {&understand_train, &generate_train}) {
    if (t->epochs < 1 || t->batch_size < 1) throw std::invalid_argument("config: epochs and batch_size must be >= 1");
    if (!(t->peak_lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
  }
  DecodeMethod::parse(decode);
  if (max_len < 1) throw std::invalid_argument("config: generator.max_len must be >= 1");
  if (pipeline.context_turns < 1) throw std::invalid_argument("config: generator.context_turns must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("config: run.seeds must not be empty");
  if (configurations.empty()) throw std::invalid_argument("config: run.configurations must not be empty");
  if (!corpus_path.empty() && !std::filesystem::exists(corpus_path))
    throw std::invalid_argument("config: corpus.path does not exist: " + corpus_path);
  if (captioner.kind == CaptionerKind::external && captioner.identifier.empty())
    throw std::invalid_argument("config: captioner.command is required for external captioners");
  if (threads < 0) throw std::invalid_argument("config: run.threads must be >= 0");
}

std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : to_map()) s += k + " = " + v + "\n";
  return s;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char ch : to_text()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path RunConfig::output_root() const {
  std::filesystem::path p(output_dir);
  if (p.is_relative()) {
    if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return std::filesystem::path(env) / p;
  }
  return p;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + o + "' is not key=value");
    config.set(trim(o.substr(0, eq)), o.substr(eq + 1));
  }
}

}  // namespace mdug
