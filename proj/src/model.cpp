#include "aglm/model.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "aglm/rng.hpp"

namespace aglm {

std::string to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::Word: return "word";
    case EmbeddingMode::Morph: return "morph";
    case EmbeddingMode::Char: return "char";
    case EmbeddingMode::Syllable: return "syl";
    case EmbeddingMode::SyllableMorph: return "syl+morph";
  }
  return "?";
}

EmbeddingMode embedding_mode_from_string(std::string_view s) {
  if (s == "word") return EmbeddingMode::Word;
  if (s == "morph") return EmbeddingMode::Morph;
  if (s == "char") return EmbeddingMode::Char;
  if (s == "syl" || s == "syllable") return EmbeddingMode::Syllable;
  if (s == "syl+morph" || s == "syllable+morph") return EmbeddingMode::SyllableMorph;
  throw std::invalid_argument("unknown embedding mode: " + std::string(s));
}

BandSpec ModelConfig::default_band_spec() {
  return BandSpec{{{5000, 152}, {20000, 52}, {BandSpec::kRemainder, 12}}};
}

int ModelConfig::total_filters() const {
  int n = 0;
  for (auto [w, c] : filter_spec) n += c;
  return n;
}

int ModelConfig::input_width() const {
  switch (embedding_mode) {
    case EmbeddingMode::Word: return word_emb_dim;
    case EmbeddingMode::Morph: return 3 * morph_emb_dim;
    case EmbeddingMode::Char: return total_filters();
    case EmbeddingMode::Syllable: return total_filters();
    case EmbeddingMode::SyllableMorph: return total_filters() + 3 * morph_emb_dim;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (syll_emb_dim <= 0 || morph_emb_dim <= 0 || word_emb_dim <= 0 ||
      lstm_hidden <= 0 || max_syllables <= 0 || bptt_len <= 0 || highway_layers < 0) {
    throw std::invalid_argument("model config: all dimensions must be positive");
  }
  bool uses_syll_cnn = embedding_mode == EmbeddingMode::Syllable ||
                       embedding_mode == EmbeddingMode::SyllableMorph;
  bool uses_cnn = uses_syll_cnn || embedding_mode == EmbeddingMode::Char;
  if (uses_cnn) {
    if (filter_spec.empty()) {
      throw std::invalid_argument("model config: filter spec is empty");
    }
    int seq_len = embedding_mode == EmbeddingMode::Char ? 3 * max_syllables : max_syllables;
    for (auto [w, c] : filter_spec) {
      if (w <= 0 || c <= 0) {
        throw std::invalid_argument("model config: filter widths and counts must be positive");
      }
      if (w > seq_len) {
        throw std::invalid_argument("model config: filter width exceeds padded sequence length");
      }
    }
  }
  if (word_vocab <= Vocabulary::kNumSpecials) {
    throw std::invalid_argument("model config: word vocabulary size not set");
  }
  band_partition(static_cast<size_t>(word_vocab), band_spec);
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["embedding_mode"] = to_string(embedding_mode);
  kv["syll_emb_dim"] = std::to_string(syll_emb_dim);
  kv["morph_emb_dim"] = std::to_string(morph_emb_dim);
  kv["word_emb_dim"] = std::to_string(word_emb_dim);
  std::ostringstream fs;
  for (size_t i = 0; i < filter_spec.size(); ++i) {
    if (i) fs << ',';
    fs << filter_spec[i].first << 'x' << filter_spec[i].second;
  }
  kv["filter_spec"] = fs.str();
  kv["highway_layers"] = std::to_string(highway_layers);
  kv["coupled_carry"] = coupled_carry ? "1" : "0";
  kv["lstm_hidden"] = std::to_string(lstm_hidden);
  kv["band_spec"] = band_spec_to_string(band_spec);
  kv["max_syllables"] = std::to_string(max_syllables);
  kv["bptt_len"] = std::to_string(bptt_len);
  kv["word_vocab"] = std::to_string(word_vocab);
  kv["morph_vocab"] = std::to_string(morph_vocab);
  kv["syll_vocab"] = std::to_string(syll_vocab);
  kv["jamo_vocab"] = std::to_string(jamo_vocab);
  return kv;
}

std::vector<std::pair<int, int>> parse_filter_spec(const std::string& text) {
  std::vector<std::pair<int, int>> spec;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    size_t x = part.find('x');
    if (x == std::string::npos) {
      throw std::invalid_argument("filter spec entry needs WIDTHxCOUNT, got: " + part);
    }
    spec.emplace_back(std::stoi(part.substr(0, x)), std::stoi(part.substr(x + 1)));
  }
  if (spec.empty()) throw std::invalid_argument("empty filter spec");
  return spec;
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(std::string("config missing key: ") + key);
    return it->second;
  };
  c.embedding_mode = embedding_mode_from_string(get("embedding_mode"));
  c.syll_emb_dim = std::stoi(get("syll_emb_dim"));
  c.morph_emb_dim = std::stoi(get("morph_emb_dim"));
  c.word_emb_dim = std::stoi(get("word_emb_dim"));
  c.filter_spec = parse_filter_spec(get("filter_spec"));
  c.highway_layers = std::stoi(get("highway_layers"));
  c.coupled_carry = get("coupled_carry") == "1";
  c.lstm_hidden = std::stoi(get("lstm_hidden"));
  c.band_spec = parse_band_spec(get("band_spec"));
  c.max_syllables = std::stoi(get("max_syllables"));
  c.bptt_len = std::stoi(get("bptt_len"));
  c.word_vocab = std::stoi(get("word_vocab"));
  c.morph_vocab = std::stoi(get("morph_vocab"));
  c.syll_vocab = std::stoi(get("syll_vocab"));
  c.jamo_vocab = std::stoi(get("jamo_vocab"));
  return c;
}

Tensor& ModelParams::find(const std::string& name) {
  for (auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named " + name);
}

const Tensor& ModelParams::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ModelParams::has(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

int64_t ModelParams::total_size() const {
  int64_t n = 0;
  for (const auto& [name, t] : tensors) n += static_cast<int64_t>(t.size());
  return n;
}

namespace {

struct ShapeList {
  std::vector<std::pair<std::string, std::vector<int>>> shapes;
  void add(std::string name, std::vector<int> shape) {
    shapes.emplace_back(std::move(name), std::move(shape));
  }
};

// Single source of truth for which tensors a config owns.
ShapeList parameter_shapes(const ModelConfig& c) {
  ShapeList s;
  EmbeddingMode m = c.embedding_mode;
  bool syll_cnn = m == EmbeddingMode::Syllable || m == EmbeddingMode::SyllableMorph;
  bool morphs = m == EmbeddingMode::Morph || m == EmbeddingMode::SyllableMorph;
  if (m == EmbeddingMode::Word) {
    s.add("word_emb", {c.word_vocab, c.word_emb_dim});
  }
  if (syll_cnn) s.add("syll_emb", {c.syll_vocab, c.syll_emb_dim});
  if (m == EmbeddingMode::Char) s.add("jamo_emb", {c.jamo_vocab, c.syll_emb_dim});
  if (syll_cnn || m == EmbeddingMode::Char) {
    for (size_t i = 0; i < c.filter_spec.size(); ++i) {
      auto [w, count] = c.filter_spec[i];
      s.add("cnn.w" + std::to_string(i), {w, c.syll_emb_dim, count});
      s.add("cnn.b" + std::to_string(i), {count});
    }
  }
  if (morphs) s.add("morph_emb", {c.morph_vocab, c.morph_emb_dim});
  int d = c.input_width();
  for (int l = 0; l < c.highway_layers; ++l) {
    std::string p = "highway" + std::to_string(l);
    s.add(p + ".wt", {d, d});
    s.add(p + ".bt", {d});
    s.add(p + ".wh", {d, d});
    s.add(p + ".bh", {d});
    if (!c.coupled_carry) {
      s.add(p + ".wc", {d, d});
      s.add(p + ".bc", {d});
    }
  }
  int h = c.lstm_hidden;
  s.add("lstm.wx", {d, 4 * h});
  s.add("lstm.wh", {h, 4 * h});
  s.add("lstm.b", {4 * h});
  std::vector<Band> bands = band_partition(static_cast<size_t>(c.word_vocab), c.band_spec);
  for (size_t i = 0; i < bands.size(); ++i) {
    int size = static_cast<int>(bands[i].end - bands[i].begin);
    s.add("softmax.a" + std::to_string(i), {h, bands[i].rank});
    s.add("softmax.b" + std::to_string(i), {bands[i].rank, size});
    s.add("softmax.bias" + std::to_string(i), {size});
  }
  return s;
}

bool is_bias(const std::string& name) {
  return name.ends_with(".b") || name.find(".bias") != std::string::npos ||
         name.find(".bt") != std::string::npos || name.find(".bh") != std::string::npos ||
         name.find(".bc") != std::string::npos ||
         (name.rfind("cnn.b", 0) == 0);
}

}  // namespace

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams params;
  for (auto& [name, shape] : parameter_shapes(config).shapes) {
    Tensor t(shape);
    if (!is_bias(name)) {
      SplitMix64 rng = SplitMix64::split(seed, name);
      for (double& v : t.data) v = rng.uniform(-0.05, 0.05);
    }
    if (name == "lstm.b") {
      // forget gate bias starts at +1
      int h = config.lstm_hidden;
      for (int i = h; i < 2 * h; ++i) t.at(i) = 1.0;
    }
    params.tensors.emplace_back(name, std::move(t));
  }
  return params;
}

int64_t param_count(const ModelConfig& config) {
  int64_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(config).shapes) {
    n += static_cast<int64_t>(Tensor::element_count(shape));
  }
  return n;
}

int64_t dsoftmax_param_count(const ModelConfig& config) {
  int64_t n = 0;
  std::vector<Band> bands = band_partition(static_cast<size_t>(config.word_vocab),
                                           config.band_spec);
  for (const Band& b : bands) {
    int64_t size = b.end - b.begin;
    n += static_cast<int64_t>(config.lstm_hidden) * b.rank + static_cast<int64_t>(b.rank) * size + size;
  }
  return n;
}

int64_t full_softmax_param_count(const ModelConfig& config) {
  return static_cast<int64_t>(config.lstm_hidden) * config.word_vocab + config.word_vocab;
}

ModelRuntime::ModelRuntime(const ModelConfig& config, const ModelParams& params,
                           Tape& tape)
    : config_(config), tape_(tape) {
  for (const auto& [name, t] : params.tensors) {
    vars_[name] = tape_.input(t, /*requires_grad=*/true);
  }
  bands_ = band_partition(static_cast<size_t>(config.word_vocab), config.band_spec);
}

VarId ModelRuntime::param(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("no model parameter " + name);
  return it->second;
}

ModelRuntime::State ModelRuntime::initial_state() {
  Tensor zero({config_.lstm_hidden});
  return {tape_.input(zero, false), tape_.input(zero, false)};
}

ModelRuntime::State ModelRuntime::make_state(const Tensor& h, const Tensor& c) {
  return {tape_.input(h, false), tape_.input(c, false)};
}

VarId ModelRuntime::cnn(VarId emb_rows) {
  std::vector<VarId> pooled;
  for (size_t i = 0; i < config_.filter_spec.size(); ++i) {
    VarId conv = tape_.conv1d(emb_rows, param("cnn.w" + std::to_string(i)),
                              param("cnn.b" + std::to_string(i)));
    pooled.push_back(tape_.max_over_time(tape_.tanh(conv)));
  }
  return tape_.concat(pooled);
}

VarId ModelRuntime::embed_syllables(const WordFeatures& f) {
  return cnn(tape_.rows(param("syll_emb"), f.syllable_ids));
}

VarId ModelRuntime::embed_jamo(const WordFeatures& f) {
  return cnn(tape_.rows(param("jamo_emb"), f.jamo_ids));
}

VarId ModelRuntime::embed_morphs(const WordFeatures& f) {
  VarId picked = tape_.rows(param("morph_emb"),
                            {f.morphs.start, f.morphs.middle, f.morphs.end});
  return tape_.reshape(picked, {3 * config_.morph_emb_dim});
}

VarId ModelRuntime::highway(VarId x) {
  for (int l = 0; l < config_.highway_layers; ++l) {
    std::string p = "highway" + std::to_string(l);
    VarId t_gate = tape_.sigmoid(
        tape_.add(tape_.matmul(x, param(p + ".wt")), param(p + ".bt")));
    VarId h = tape_.tanh(tape_.add(tape_.matmul(x, param(p + ".wh")), param(p + ".bh")));
    VarId transformed = tape_.mul(t_gate, h);
    if (config_.coupled_carry) {
      // T*H + (1-T)*x  ==  T*H + x - T*x
      x = tape_.sub(tape_.add(transformed, x), tape_.mul(t_gate, x));
    } else {
      VarId c_gate = tape_.sigmoid(
          tape_.add(tape_.matmul(x, param(p + ".wc")), param(p + ".bc")));
      x = tape_.add(transformed, tape_.mul(c_gate, x));
    }
  }
  return x;
}

VarId ModelRuntime::embed(const WordFeatures& f) {
  VarId x;
  switch (config_.embedding_mode) {
    case EmbeddingMode::Word: {
      VarId picked = tape_.rows(param("word_emb"), {f.word_id});
      x = tape_.reshape(picked, {config_.word_emb_dim});
      break;
    }
    case EmbeddingMode::Morph:
      x = embed_morphs(f);
      break;
    case EmbeddingMode::Char:
      x = embed_jamo(f);
      break;
    case EmbeddingMode::Syllable:
      x = embed_syllables(f);
      break;
    case EmbeddingMode::SyllableMorph:
      x = tape_.concat({embed_syllables(f), embed_morphs(f)});
      break;
  }
  return highway(x);
}

std::pair<ModelRuntime::State, VarId> ModelRuntime::lstm_step(const State& state,
                                                              VarId x) {
  int h = config_.lstm_hidden;
  VarId gates = tape_.add(
      tape_.add(tape_.matmul(x, param("lstm.wx")), tape_.matmul(state.h, param("lstm.wh"))),
      param("lstm.b"));
  VarId i_gate = tape_.sigmoid(tape_.slice(gates, 0, h));
  VarId f_gate = tape_.sigmoid(tape_.slice(gates, h, h));
  VarId g = tape_.tanh(tape_.slice(gates, 2 * h, h));
  VarId o_gate = tape_.sigmoid(tape_.slice(gates, 3 * h, h));
  VarId c_new = tape_.add(tape_.mul(f_gate, state.c), tape_.mul(i_gate, g));
  VarId h_new = tape_.mul(o_gate, tape_.tanh(c_new));
  return {State{h_new, c_new}, h_new};
}

VarId ModelRuntime::dsoftmax_log_probs(VarId h) {
  std::vector<VarId> band_logits;
  for (size_t i = 0; i < bands_.size(); ++i) {
    VarId low = tape_.matmul(h, param("softmax.a" + std::to_string(i)));
    VarId logits = tape_.add(tape_.matmul(low, param("softmax.b" + std::to_string(i))),
                             param("softmax.bias" + std::to_string(i)));
    band_logits.push_back(logits);
  }
  return tape_.log_softmax(tape_.concat(band_logits));
}

SentenceLoss forward_sentence(ModelRuntime& rt, const std::vector<WordFeatures>& words) {
  if (words.empty()) throw std::invalid_argument("forward_sentence: empty sentence");
  SentenceLoss out;
  // inputs BOS w1..wn, targets w1..wn EOS
  std::vector<WordFeatures> inputs;
  inputs.push_back(bos_features(rt.config().max_syllables));
  for (const auto& w : words) inputs.push_back(w);
  for (const auto& w : words) out.targets.push_back(w.word_id);
  out.targets.push_back(Vocabulary::kEos);

  ModelRuntime::State state = rt.initial_state();
  std::vector<VarId> losses;
  for (size_t t = 0; t < inputs.size(); ++t) {
    VarId x = rt.embed(inputs[t]);
    auto [next_state, h] = rt.lstm_step(state, x);
    state = next_state;
    VarId log_probs = rt.dsoftmax_log_probs(h);
    out.step_log_probs.push_back(log_probs);
    losses.push_back(rt.tape().nll(log_probs, out.targets[t]));
  }
  out.loss = rt.tape().add_scalars(losses);
  return out;
}

}  // namespace aglm
