#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "aglm/checkpoint.hpp"
#include "aglm/hangul.hpp"
#include "aglm/model.hpp"
#include "aglm/train.hpp"

namespace aglm {

// Sentence-scoped LSTM state for prefix-conditioned prediction. reset() puts
// the model just after BOS; push_word advances with the true word.
class PredictionContext {
 public:
  PredictionContext(const ModelConfig& config, const ModelParams& params);

  void reset();
  void push_word(const WordFeatures& features);
  // Log-probabilities over the word vocabulary for the next position.
  const Tensor& next_word_dist() const { return dist_; }

 private:
  void step(const WordFeatures& features);

  const ModelConfig& config_;
  const ModelParams& params_;
  Tensor h_, c_;
  Tensor dist_;
};

// Precomputed jamo expansions of every vocabulary word; specials excluded.
class CompletionIndex {
 public:
  explicit CompletionIndex(const Vocabulary& word_vocab);
  const std::vector<hangul::Codepoint>& expansion(int id) const {
    return expansions_[static_cast<size_t>(id)];
  }
  size_t size() const { return expansions_.size(); }

 private:
  std::vector<std::vector<hangul::Codepoint>> expansions_;
};

// Jamo expansion of a typed prefix; compatibility jamo (what a keyboard
// produces for a dangling consonant/vowel) map onto conjoining lead/vowel.
std::vector<hangul::Codepoint> prefix_jamo_expansion(std::string_view prefix);

struct Completion {
  int word_id;
  double log_prob;
};

// Vocabulary words whose jamo expansion starts with the prefix's, ranked by
// model probability, ties by id. At most n results.
std::vector<Completion> complete(const PredictionContext& context,
                                 const CompletionIndex& index,
                                 std::string_view typed_prefix, int n);

// What the KSS simulator drives. Implementations: the trained model, and
// scripted fakes in tests.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual void start_sentence() = 0;
  virtual void commit_word(const std::string& word) = 0;
  // typed is the UTF-8 conjoining-jamo prefix typed so far (may be empty)
  virtual std::vector<std::string> suggest(const std::string& typed, int n) = 0;
};

class ModelPredictor : public Predictor {
 public:
  ModelPredictor(const Checkpoint& ckpt, const VocabSet& vocabs,
                 const SegmenterLexicon& lexicon);
  void start_sentence() override;
  void commit_word(const std::string& word) override;
  std::vector<std::string> suggest(const std::string& typed, int n) override;

  PredictionContext& context() { return context_; }
  const CompletionIndex& index() const { return index_; }
  const Vocabulary& word_vocab() const { return vocabs_.word; }

 private:
  const Checkpoint& ckpt_;
  const VocabSet& vocabs_;
  const SegmenterLexicon& lexicon_;
  PredictionContext context_;
  CompletionIndex index_;
};

struct KssOptions {
  int n_suggestions = 3;
  int selection_cost = 0;   // keystrokes charged for accepting a suggestion
  bool count_separators = true;
};

struct SentenceKss {
  size_t total = 0;
  size_t pressed = 0;
  size_t saved = 0;
};

struct KssReport {
  size_t total = 0;
  size_t pressed = 0;
  size_t saved = 0;
  std::vector<SentenceKss> per_sentence;

  double kss_percent() const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(saved) / static_cast<double>(total);
  }
};

// Virtual-typist replay: before every keystroke the typist checks the top-n
// suggestions and accepts the intended word when present; remaining jamo and
// the word's separator count as saved. Vanilla baseline presses everything.
KssReport kss_evaluate(Predictor& predictor,
                       const std::vector<std::vector<std::string>>& sentences,
                       const KssOptions& options);

KssReport kss_evaluate(const Checkpoint& ckpt, const Corpus& corpus,
                       const VocabSet& vocabs, const SegmenterLexicon& lexicon,
                       const KssOptions& options);

std::string kss_per_sentence_tsv(const KssReport& report);

}  // namespace aglm
