#include "aglm/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aglm/rng.hpp"

namespace aglm {

void TrainConfig::validate() const {
  if (epochs <= 0 || batch_size <= 0 || lr <= 0 || clip_norm <= 0 || decay_after < 0) {
    throw std::invalid_argument("train config: all knobs must be positive");
  }
  if (lr_decay <= 0 || lr_decay > 1) {
    throw std::invalid_argument("train config: lr_decay must be in (0,1]");
  }
  if (validation_fraction < 0 || validation_fraction >= 1) {
    throw std::invalid_argument("train config: validation_fraction must be in [0,1)");
  }
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["epochs"] = std::to_string(epochs);
  kv["batch_size"] = std::to_string(batch_size);
  kv["lr"] = std::to_string(lr);
  kv["lr_decay"] = std::to_string(lr_decay);
  kv["decay_after"] = std::to_string(decay_after);
  kv["clip_norm"] = std::to_string(clip_norm);
  kv["seed"] = std::to_string(seed);
  return kv;
}

std::string metrics_to_tsv(const std::vector<EpochMetrics>& metrics) {
  std::ostringstream out;
  out << "epoch\ttrain_nll\tvalid_ppl\n";
  for (const auto& m : metrics) {
    out << m.epoch << '\t' << m.train_nll << '\t' << m.valid_ppl << '\n';
  }
  return out.str();
}

EncodedCorpus encode_corpus(const Corpus& corpus, const VocabSet& vocabs,
                            const SegmenterLexicon& lexicon, int max_syllables) {
  EncodedCorpus out;
  for (const auto& sentence : corpus.sentences) {
    if (sentence.empty()) {
      ++out.skipped_empty;
      continue;
    }
    std::vector<WordFeatures> encoded;
    encoded.reserve(sentence.size());
    for (const auto& word : sentence) {
      encoded.push_back(encode_word(word, vocabs, lexicon, max_syllables));
    }
    out.token_count += encoded.size() + 1;  // + EOS
    out.sentences.push_back(std::move(encoded));
  }
  return out;
}

namespace {

struct WindowResult {
  double loss = 0.0;
  Tensor h;
  Tensor c;
};

// One truncated-BPTT window. `state` carries across windows of the same
// sentence as detached values. Gradients accumulate into `grads` (same order
// as params.tensors) when that pointer is non-null.
WindowResult run_window(const ModelConfig& config, const ModelParams& params,
                        const std::vector<const WordFeatures*>& inputs,
                        const std::vector<int>& targets, const Tensor& h0,
                        const Tensor& c0, std::vector<Tensor>* grads) {
  Tape tape;
  ModelRuntime rt(config, params, tape);
  ModelRuntime::State state = rt.make_state(h0, c0);
  std::vector<VarId> losses;
  for (size_t t = 0; t < inputs.size(); ++t) {
    VarId x = rt.embed(*inputs[t]);
    auto [next_state, hvar] = rt.lstm_step(state, x);
    state = next_state;
    losses.push_back(tape.nll(rt.dsoftmax_log_probs(hvar), targets[t]));
  }
  VarId loss = tape.add_scalars(losses);
  WindowResult out;
  out.loss = tape.value(loss).data[0];
  out.h = tape.value(state.h);
  out.c = tape.value(state.c);
  if (grads && std::isfinite(out.loss)) {
    tape.backward(loss);
    for (size_t i = 0; i < params.tensors.size(); ++i) {
      // parameters were registered first, in order
      const Tensor& g = tape.grad(static_cast<VarId>(i));
      if (g.data.empty()) continue;
      Tensor& acc = (*grads)[i];
      for (size_t k = 0; k < g.size(); ++k) acc.data[k] += g.data[k];
    }
  }
  return out;
}

double sentence_nll(const ModelConfig& config, const ModelParams& params,
                    const std::vector<WordFeatures>& sentence) {
  std::vector<const WordFeatures*> inputs;
  std::vector<int> targets;
  WordFeatures bos = bos_features(config.max_syllables);
  inputs.push_back(&bos);
  for (const auto& w : sentence) inputs.push_back(&w);
  for (const auto& w : sentence) targets.push_back(w.word_id);
  targets.push_back(Vocabulary::kEos);
  // evaluate in bptt-sized windows too, to bound tape memory
  Tensor h({config.lstm_hidden}), c({config.lstm_hidden});
  double total = 0.0;
  size_t pos = 0;
  while (pos < inputs.size()) {
    size_t len = std::min(static_cast<size_t>(config.bptt_len), inputs.size() - pos);
    std::vector<const WordFeatures*> win_in(inputs.begin() + pos, inputs.begin() + pos + len);
    std::vector<int> win_tg(targets.begin() + pos, targets.begin() + pos + len);
    WindowResult r = run_window(config, params, win_in, win_tg, h, c, nullptr);
    total += r.loss;
    h = std::move(r.h);
    c = std::move(r.c);
    pos += len;
  }
  return total;
}

}  // namespace

double perplexity(const ModelConfig& config, const ModelParams& params,
                  const EncodedCorpus& corpus) {
  if (corpus.sentences.empty()) return std::nan("");
  double total = 0.0;
  size_t tokens = 0;
  for (const auto& sentence : corpus.sentences) {
    total += sentence_nll(config, params, sentence);
    tokens += sentence.size() + 1;
  }
  return std::exp(total / static_cast<double>(tokens));
}

double perplexity(const Checkpoint& ckpt, const Corpus& corpus, const VocabSet& vocabs,
                  const SegmenterLexicon& lexicon) {
  verify_vocab_hashes(ckpt, vocabs);
  EncodedCorpus encoded = encode_corpus(corpus, vocabs, lexicon, ckpt.config.max_syllables);
  return perplexity(ckpt.config, ckpt.params, encoded);
}

TrainResult train(const Corpus& corpus, const VocabSet& vocabs,
                  const SegmenterLexicon& lexicon, ModelConfig model_config,
                  const TrainConfig& train_config, std::ostream* log) {
  train_config.validate();
  model_config.word_vocab = static_cast<int>(vocabs.word.size());
  model_config.morph_vocab = static_cast<int>(vocabs.morph.size());
  model_config.syll_vocab = static_cast<int>(vocabs.syllable.size());
  model_config.jamo_vocab = static_cast<int>(vocabs.jamo.size());
  model_config.validate();

  EncodedCorpus all = encode_corpus(corpus, vocabs, lexicon, model_config.max_syllables);
  if (all.sentences.empty()) throw std::runtime_error("training corpus has no sentences");
  size_t n_valid = static_cast<size_t>(
      static_cast<double>(all.sentences.size()) * train_config.validation_fraction);
  size_t n_train = all.sentences.size() - n_valid;
  EncodedCorpus valid;
  valid.sentences.assign(all.sentences.begin() + static_cast<long>(n_train),
                         all.sentences.end());
  all.sentences.resize(n_train);
  if (all.sentences.empty()) throw std::runtime_error("no training sentences after split");

  ModelParams params = init_params(model_config, train_config.seed);
  ModelParams last_good = params;

  std::vector<size_t> order(all.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<Tensor> grads;
  grads.reserve(params.tensors.size());
  for (const auto& [name, t] : params.tensors) grads.emplace_back(t.shape);
  auto zero_grads = [&] {
    for (Tensor& g : grads) std::fill(g.data.begin(), g.data.end(), 0.0);
  };

  TrainResult result;
  bool aborted = false;
  for (int epoch = 1; epoch <= train_config.epochs && !aborted; ++epoch) {
    SplitMix64 shuffle_rng =
        SplitMix64::split(train_config.seed, "shuffle." + std::to_string(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }
    double lr = train_config.lr;
    for (int e = train_config.decay_after; e < epoch - 1; ++e) lr *= train_config.lr_decay;

    double epoch_nll = 0.0;
    size_t epoch_tokens = 0;
    size_t batch_tokens = 0;
    size_t in_batch = 0;
    zero_grads();

    auto apply_update = [&]() {
      if (batch_tokens == 0) return;
      double inv = 1.0 / static_cast<double>(batch_tokens);
      double norm_sq = 0.0;
      for (Tensor& g : grads) {
        for (double& v : g.data) {
          v *= inv;
          norm_sq += v * v;
        }
      }
      double norm = std::sqrt(norm_sq);
      double scale = norm > train_config.clip_norm ? train_config.clip_norm / norm : 1.0;
      for (size_t i = 0; i < grads.size(); ++i) {
        Tensor& p = params.tensors[i].second;
        const Tensor& g = grads[i];
        for (size_t k = 0; k < p.size(); ++k) p.data[k] -= lr * scale * g.data[k];
      }
      zero_grads();
      batch_tokens = 0;
      in_batch = 0;
    };

    for (size_t oi = 0; oi < order.size() && !aborted; ++oi) {
      const std::vector<WordFeatures>& sentence = all.sentences[order[oi]];
      WordFeatures bos = bos_features(model_config.max_syllables);
      std::vector<const WordFeatures*> inputs;
      std::vector<int> targets;
      inputs.push_back(&bos);
      for (const auto& w : sentence) inputs.push_back(&w);
      for (const auto& w : sentence) targets.push_back(w.word_id);
      targets.push_back(Vocabulary::kEos);

      Tensor h({model_config.lstm_hidden}), c({model_config.lstm_hidden});
      size_t pos = 0;
      while (pos < inputs.size()) {
        size_t len =
            std::min(static_cast<size_t>(model_config.bptt_len), inputs.size() - pos);
        std::vector<const WordFeatures*> win_in(inputs.begin() + pos,
                                                inputs.begin() + pos + len);
        std::vector<int> win_tg(targets.begin() + pos, targets.begin() + pos + len);
        WindowResult r = run_window(model_config, params, win_in, win_tg, h, c, &grads);
        if (!std::isfinite(r.loss)) {
          aborted = true;
          break;
        }
        epoch_nll += r.loss;
        batch_tokens += len;
        h = std::move(r.h);
        c = std::move(r.c);
        pos += len;
      }
      epoch_tokens += targets.size();
      if (!aborted && ++in_batch >= static_cast<size_t>(train_config.batch_size)) {
        apply_update();
      }
    }
    if (aborted) {
      result.diverged = true;
      params = last_good;
      if (log) *log << "# diverged: non-finite loss, keeping last good parameters\n";
      break;
    }
    apply_update();

    EpochMetrics m;
    m.epoch = epoch;
    m.train_nll = epoch_nll / static_cast<double>(epoch_tokens);
    m.valid_ppl = perplexity(model_config, params, valid);
    result.metrics.push_back(m);
    if (log) {
      *log << m.epoch << '\t' << m.train_nll << '\t' << m.valid_ppl << '\n';
    }
    last_good = params;
  }

  Checkpoint ckpt;
  ckpt.config = model_config;
  ckpt.params = std::move(params);
  ckpt.word_vocab_hash = vocabs.word.hash();
  ckpt.morph_vocab_hash = vocabs.morph.hash();
  ckpt.syll_vocab_hash = vocabs.syllable.hash();
  ckpt.jamo_vocab_hash = vocabs.jamo.hash();
  ckpt.prng_id = SplitMix64::kId;
  for (const auto& [k, v] : train_config.to_map()) ckpt.extra[k] = v;
  result.checkpoint = std::move(ckpt);
  return result;
}

}  // namespace aglm
