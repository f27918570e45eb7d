#include "mdug/generation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mdug/metrics.hpp"
#include "mdug/parallel.hpp"

namespace mdug {

void GeneratorConfig::validate() const {
  if (vocab_size <= kNumSpecial) throw std::invalid_argument("GeneratorConfig: vocab_size too small");
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
    throw std::invalid_argument("GeneratorConfig: d_model must be divisible by n_heads");
  if (n_enc_layers < 0 || n_dec_layers < 0 || d_ff <= 0) throw std::invalid_argument("GeneratorConfig: bad layer sizes");
  if (max_input < 2 || max_target < 3) throw std::invalid_argument("GeneratorConfig: max_input/max_target too small");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("GeneratorConfig: dropout must lie in [0, 1)");
}

GeneratorModel::GeneratorModel(const GeneratorConfig& config, std::uint64_t seed)
    : config_(config), params_(std::make_unique<ParamSet>()) {
  config_.validate();
  Rng rng(seed);
  auto& ps = *params_;
  const int d = config_.d_model;
  token_emb_ = &ps.add("generator.token_emb", config_.vocab_size, d);
  enc_pos_ = &ps.add("generator.enc_pos", config_.max_input, d);
  dec_pos_ = &ps.add("generator.dec_pos", config_.max_target, d);
  init_normal(*token_emb_, 1.0, rng);
  init_normal(*enc_pos_, 0.1, rng);
  init_normal(*dec_pos_, 0.1, rng);
  for (int l = 0; l < config_.n_enc_layers; ++l)
    enc_layers_.push_back(
        EncoderBlock::create(ps, "generator.enc" + std::to_string(l), d, config_.n_heads, config_.d_ff, rng));
  enc_ln_ = LayerNormParams::create(ps, "generator.enc_ln", d);
  for (int l = 0; l < config_.n_dec_layers; ++l)
    dec_layers_.push_back(
        DecoderBlock::create(ps, "generator.dec" + std::to_string(l), d, config_.n_heads, config_.d_ff, rng));
  dec_ln_ = LayerNormParams::create(ps, "generator.dec_ln", d);
  out_ = Linear::create(ps, "generator.out", d, config_.vocab_size, rng);
}

namespace {

std::vector<int> iota_n(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

Var GeneratorModel::encode(Graph& g, std::span<const int> input_ids) const {
  if (input_ids.empty()) throw std::invalid_argument("generator: empty input");
  if (static_cast<int>(input_ids.size()) > config_.max_input)
    throw std::invalid_argument("generator: input longer than max_input");
  const auto pos = iota_n(input_ids.size());
  Var x = g.add(g.embed(*token_emb_, input_ids), g.embed(*enc_pos_, pos));
  x = g.dropout(x, config_.dropout);
  for (const auto& b : enc_layers_) x = b(g, x, nullptr, config_.dropout);
  return enc_ln_(g, x);
}

Var GeneratorModel::decode(Graph& g, Var memory, std::span<const int> decoder_ids) const {
  if (decoder_ids.empty()) throw std::invalid_argument("generator: empty decoder prefix");
  if (static_cast<int>(decoder_ids.size()) > config_.max_target)
    throw std::invalid_argument("generator: decoder prefix longer than max_target");
  const auto pos = iota_n(decoder_ids.size());
  Var y = g.add(g.embed(*token_emb_, decoder_ids), g.embed(*dec_pos_, pos));
  y = g.dropout(y, config_.dropout);
  const Matrix causal = causal_mask(static_cast<int>(decoder_ids.size()));
  for (const auto& b : dec_layers_) y = b(g, y, memory, causal, config_.dropout);
  return out_(g, dec_ln_(g, y));
}

Matrix GeneratorModel::memory(std::span<const int> input_ids) const {
  Graph g(false);
  return g.value(encode(g, input_ids));
}

std::vector<double> GeneratorModel::next_log_probs(const Matrix& memory, std::span<const int> prefix) const {
  Graph g(false);
  const Var logits = decode(g, g.constant(memory), prefix);
  const auto last = g.value(logits).row(g.value(logits).rows() - 1);
  const double mx = *std::max_element(last.begin(), last.end());
  double z = 0.0;
  for (double v : last) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(last.size());
  for (std::size_t i = 0; i < last.size(); ++i) out[i] = last[i] - lz;
  return out;
}

std::vector<int> make_target(const std::string& text, const Vocabulary& vocab, int max_target) {
  std::vector<int> t{kBos};
  for (int id : vocab.encode(text)) {
    if (static_cast<int>(t.size()) + 1 >= max_target) break;
    t.push_back(id);
  }
  t.push_back(kEos);
  return t;
}

Var ar_loss(Graph& g, const GeneratorModel& model, const GeneratorInput& input, std::span<const int> target) {
  if (target.size() < 2 || target.front() != kBos || target.back() != kEos)
    throw std::invalid_argument("ar_loss: target must start with [BOS] and end with [EOS]");
  const Var memory = model.encode(g, input.token_ids);
  const Var logits = model.decode(g, memory, target.first(target.size() - 1));
  return g.cross_entropy(logits, target.subspan(1));
}

double ar_loss(const GeneratorModel& model, const GeneratorInput& input, std::span<const int> target) {
  Graph g(false);
  return g.scalar(ar_loss(g, model, input, target));
}

std::string DecodeMethod::to_string() const {
  return beam_size == 1 ? "greedy" : "beam" + std::to_string(beam_size);
}

DecodeMethod DecodeMethod::parse(const std::string& s) {
  if (s == "greedy") return {1};
  if (s.rfind("beam", 0) == 0) {
    try {
      std::size_t used = 0;
      const int b = std::stoi(s.substr(4), &used);
      if (used == s.size() - 4 && b >= 1) return {b};
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("unknown decode method '" + s + "' (expected greedy or beam<k>)");
}

double GenerationResult::log_prob() const {
  return std::accumulate(token_log_probs.begin(), token_log_probs.end(), 0.0);
}

namespace {

struct Hypothesis {
  std::vector<int> ids;  // starts with [BOS]
  std::vector<double> log_probs;
  double sum = 0.0;

  double normalized() const { return sum / static_cast<double>(log_probs.size()); }
};

GenerationResult finish(const Hypothesis& h, const DecodeMethod& method, const Vocabulary& vocab) {
  GenerationResult r;
  r.token_ids.assign(h.ids.begin() + 1, h.ids.end());
  r.token_log_probs = h.log_probs;
  r.text = vocab.decode(r.token_ids);
  r.method = method;
  return r;
}

}  // namespace

GenerationResult generate(const GeneratorModel& model, const GeneratorInput& input, const DecodeMethod& method,
                          int max_len, const Vocabulary& vocab) {
  if (max_len < 1) throw std::invalid_argument("generate: max_len must be >= 1");
  if (method.beam_size < 1) throw std::invalid_argument("generate: beam size must be >= 1");
  max_len = std::min(max_len, model.config().max_target - 1);
  const Matrix memory = model.memory(input.token_ids);
  const auto b = static_cast<std::size_t>(method.beam_size);

  std::vector<Hypothesis> alive{Hypothesis{{kBos}, {}, 0.0}};
  std::vector<Hypothesis> finished;
  for (int step = 0; step < max_len && !alive.empty() && finished.size() < b; ++step) {
    struct Candidate {
      std::size_t parent;
      int token;
      double lp;
      double sum;
    };
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const auto lp = model.next_log_probs(memory, alive[h].ids);
      // Top-b tokens of this hypothesis, lowest id first among equal scores.
      std::vector<int> order(lp.size());
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + static_cast<long>(std::min(b, order.size())), order.end(),
                        [&](int x, int y) { return lp[x] > lp[y] || (lp[x] == lp[y] && x < y); });
      for (std::size_t i = 0; i < std::min(b, order.size()); ++i)
        cands.push_back({h, order[i], lp[order[i]], alive[h].sum + lp[order[i]]});
    }
    // Every alive hypothesis has the same length, so ranking by sum equals ranking by normalized score.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) { return x.sum > y.sum; });
    std::vector<Hypothesis> next;
    for (const auto& c : cands) {
      if (next.size() + finished.size() >= b) break;
      Hypothesis h = alive[c.parent];
      h.ids.push_back(c.token);
      h.log_probs.push_back(c.lp);
      h.sum = c.sum;
      (c.token == kEos ? finished : next).push_back(std::move(h));
    }
    alive = std::move(next);
  }
  for (auto& h : alive) finished.push_back(std::move(h));
  const auto best = std::max_element(finished.begin(), finished.end(), [](const Hypothesis& x, const Hypothesis& y) {
    return x.normalized() < y.normalized();
  });
  return finish(*best, method, vocab);
}

std::vector<GenerationResult> generate_all(const GeneratorModel& model, const std::vector<GenSample>& samples,
                                           const DecodeMethod& method, int max_len, const Vocabulary& vocab) {
  std::vector<GenerationResult> out(samples.size());
  parallel_for(static_cast<long>(samples.size()), [&](long i) {
    out[static_cast<std::size_t>(i)] = generate(model, samples[static_cast<std::size_t>(i)].input, method, max_len, vocab);
  });
  return out;
}

GeneratorTrainResult train_generator(GeneratorModel& model, const std::vector<GenSample>& train,
                                     const std::vector<GenSample>& dev, const TrainOptions& options,
                                     const Vocabulary& vocab, int max_len) {
  if (train.empty() || dev.empty()) throw std::invalid_argument("train_generator: train and dev samples are required");
  if (options.epochs < 1 || options.batch_size < 1) throw std::invalid_argument("train_generator: epochs and batch_size must be >= 1");

  const long n = static_cast<long>(train.size());
  const long steps_per_epoch = (n + options.batch_size - 1) / options.batch_size;
  LinearSchedule sched{options.peak_lr, steps_per_epoch * options.epochs, options.warmup_fraction};
  AdamW opt(model.params(), {.weight_decay = options.weight_decay});
  Rng rng(options.seed ^ 0x5A5A5A5AULL);
  model.params().zero_grad();

  std::vector<std::string> dev_refs;
  for (const auto& s : dev) dev_refs.push_back(s.reference);

  GeneratorTrainResult result;
  std::vector<Matrix> best;
  double best_bleu = -1.0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (long b = 0; b < steps_per_epoch; ++b) {
      const long lo = b * options.batch_size;
      const long hi = std::min(n, lo + options.batch_size);
      for (long j = lo; j < hi; ++j) {
        const auto& s = train[order[static_cast<std::size_t>(j)]];
        Graph g(true, &rng);
        const Var loss = ar_loss(g, model, s.input, s.target);
        const double lv = g.scalar(loss);
        if (!std::isfinite(lv)) {
          std::ostringstream msg;
          msg << "generator loss diverged at epoch " << epoch << ", step " << step << " (episode " << s.episode_id
              << ", lr " << sched.at(step) << ")";
          throw std::runtime_error(msg.str());
        }
        loss_sum += lv;
        g.backward(loss);
      }
      const double scale = 1.0 / static_cast<double>(hi - lo);
      for (auto& p : model.params().all())
        for (double& v : p.grad.flat()) v *= scale;
      clip_grad_norm(model.params(), options.clip_norm);
      opt.step(sched.at(step));
      ++step;
    }

    GeneratorEpoch log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(n);
    std::vector<std::string> cands;
    for (const auto& r : generate_all(model, dev, DecodeMethod{1}, max_len, vocab)) cands.push_back(r.text);
    log.dev_bleu1 = score_generation(cands, dev_refs).bleu1;
    if (log.dev_bleu1 > best_bleu) {
      best_bleu = log.dev_bleu1;
      best = model.params().snapshot();
      result.best_epoch = epoch;
    }
    result.epochs.push_back(log);
  }
  model.params().restore(best);
  return result;
}

void write_responses(const std::filesystem::path& path, const std::vector<ResponseRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["episode_id"] = r.episode_id;
    j["response_text"] = r.response_text;
    j["decode_method"] = r.decode_method;
    j["log_prob"] = r.log_prob;
    out << j.dump() << '\n';
  }
}

std::vector<ResponseRecord> read_responses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<ResponseRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("episode_id").get<std::string>(), j.at("response_text").get<std::string>(),
                     j.at("decode_method").get<std::string>(), j.at("log_prob").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mdug
