#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "aglm/checkpoint.hpp"
#include "aglm/model.hpp"
#include "aglm/vocab.hpp"

namespace aglm {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 16;
  double lr = 1.0;
  double lr_decay = 0.5;
  int decay_after = 4;  // epochs at full lr before decay kicks in
  double clip_norm = 5.0;
  uint64_t seed = 1;
  double validation_fraction = 0.05;  // deterministic last slice by line order

  void validate() const;
  std::map<std::string, std::string> to_map() const;
};

struct EpochMetrics {
  int epoch;        // 1-based
  double train_nll; // mean per-token NLL over the epoch
  double valid_ppl; // NaN when the validation slice is empty
};

std::string metrics_to_tsv(const std::vector<EpochMetrics>& metrics);

struct EncodedCorpus {
  std::vector<std::vector<WordFeatures>> sentences;  // empty ones dropped
  size_t skipped_empty = 0;
  size_t token_count = 0;  // prediction targets: words + one EOS per sentence
};

EncodedCorpus encode_corpus(const Corpus& corpus, const VocabSet& vocabs,
                            const SegmenterLexicon& lexicon, int max_syllables);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> metrics;
  bool diverged = false;  // checkpoint then holds the last finite epoch
};

// Mini-batch truncated-BPTT SGD. Deterministic for a fixed seed: sentence
// order, gradient accumulation order and updates are all fixed.
TrainResult train(const Corpus& corpus, const VocabSet& vocabs,
                  const SegmenterLexicon& lexicon, ModelConfig model_config,
                  const TrainConfig& train_config, std::ostream* log = nullptr);

// exp(sum NLL / token count); targets include every word (UNK too) and EOS.
double perplexity(const ModelConfig& config, const ModelParams& params,
                  const EncodedCorpus& corpus);
double perplexity(const Checkpoint& ckpt, const Corpus& corpus, const VocabSet& vocabs,
                  const SegmenterLexicon& lexicon);

}  // namespace aglm
