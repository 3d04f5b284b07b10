#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aglm/tape.hpp"
#include "aglm/tensor.hpp"
#include "aglm/vocab.hpp"

namespace aglm {

enum class EmbeddingMode { Word, Morph, Char, Syllable, SyllableMorph };

std::string to_string(EmbeddingMode mode);
EmbeddingMode embedding_mode_from_string(std::string_view s);
std::vector<std::pair<int, int>> parse_filter_spec(const std::string& text);

struct ModelConfig {
  EmbeddingMode embedding_mode = EmbeddingMode::SyllableMorph;
  int syll_emb_dim = 15;
  int morph_emb_dim = 52;
  int word_emb_dim = 306;  // word mode only; default matches syl+morph width
  std::vector<std::pair<int, int>> filter_spec = {{1, 30}, {2, 40}, {3, 40}, {4, 40}};
  int highway_layers = 1;
  bool coupled_carry = true;  // C = 1 - T; false adds an independent carry gate
  int lstm_hidden = 500;
  BandSpec band_spec = default_band_spec();
  int max_syllables = 8;
  int bptt_len = 35;

  // vocabulary sizes the parameter shapes are derived from
  int word_vocab = 0;
  int morph_vocab = 0;
  int syll_vocab = 0;
  int jamo_vocab = 0;

  static BandSpec default_band_spec();

  int total_filters() const;
  int input_width() const;  // embedding width fed to highway and LSTM
  void validate() const;    // throws std::invalid_argument

  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

// Named parameter tensors in a fixed deterministic order.
struct ModelParams {
  std::vector<std::pair<std::string, Tensor>> tensors;

  Tensor& find(const std::string& name);
  const Tensor& find(const std::string& name) const;
  bool has(const std::string& name) const;
  int64_t total_size() const;
};

ModelParams init_params(const ModelConfig& config, uint64_t seed);

// Closed-form parameter count; equals init_params(...).total_size().
int64_t param_count(const ModelConfig& config);
int64_t dsoftmax_param_count(const ModelConfig& config);
// What a full-rank softmax over the same vocabulary would cost.
int64_t full_softmax_param_count(const ModelConfig& config);

// Per-tape view of the model: registers every parameter as a tape input once
// and exposes the forward pieces. One instance per Tape.
class ModelRuntime {
 public:
  ModelRuntime(const ModelConfig& config, const ModelParams& params, Tape& tape);

  struct State {
    VarId h;
    VarId c;
  };
  State initial_state();
  State make_state(const Tensor& h, const Tensor& c);  // detached values

  VarId embed_syllables(const WordFeatures& f);  // CNN over syllables
  VarId embed_jamo(const WordFeatures& f);       // CNN over jamo (char mode)
  VarId embed_morphs(const WordFeatures& f);
  VarId highway(VarId x);
  VarId embed(const WordFeatures& f);  // mode dispatch + highway
  std::pair<State, VarId> lstm_step(const State& state, VarId x);
  VarId dsoftmax_log_probs(VarId h);

  VarId param(const std::string& name) const;
  Tape& tape() { return tape_; }
  const ModelConfig& config() const { return config_; }

 private:
  VarId cnn(VarId emb_rows);  // conv/tanh/pool per filter group, concatenated

  const ModelConfig& config_;
  Tape& tape_;
  std::map<std::string, VarId> vars_;
  std::vector<Band> bands_;
};

struct SentenceLoss {
  VarId loss;                      // summed NLL over all prediction steps
  std::vector<VarId> step_log_probs;
  std::vector<int> targets;        // word ids, final one EOS
};

// Teacher-forced pass over BOS w1..wn with targets w1..wn EOS. State starts
// at zero. Throws on an empty sentence; callers skip those.
SentenceLoss forward_sentence(ModelRuntime& rt, const std::vector<WordFeatures>& words);

}  // namespace aglm
