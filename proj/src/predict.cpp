#include "aglm/predict.hpp"

#include <algorithm>
#include <sstream>

#include "aglm/hangul.hpp"

namespace aglm {

PredictionContext::PredictionContext(const ModelConfig& config, const ModelParams& params)
    : config_(config), params_(params) {
  reset();
}

void PredictionContext::reset() {
  h_ = Tensor({config_.lstm_hidden});
  c_ = Tensor({config_.lstm_hidden});
  step(bos_features(config_.max_syllables));
}

void PredictionContext::push_word(const WordFeatures& features) { step(features); }

void PredictionContext::step(const WordFeatures& features) {
  Tape tape;
  ModelRuntime rt(config_, params_, tape);
  ModelRuntime::State state = rt.make_state(h_, c_);
  VarId x = rt.embed(features);
  auto [next_state, h] = rt.lstm_step(state, x);
  VarId log_probs = rt.dsoftmax_log_probs(h);
  h_ = tape.value(next_state.h);
  c_ = tape.value(next_state.c);
  dist_ = tape.value(log_probs);
}

CompletionIndex::CompletionIndex(const Vocabulary& word_vocab) {
  expansions_.resize(word_vocab.size());
  for (size_t id = Vocabulary::kNumSpecials; id < word_vocab.size(); ++id) {
    expansions_[id] = hangul::jamo_expansion(word_vocab.surface_of(static_cast<int>(id)));
  }
}

std::vector<hangul::Codepoint> prefix_jamo_expansion(std::string_view prefix) {
  using hangul::Codepoint;
  // compatibility consonants U+3131.. that can open a syllable, by offset
  static constexpr int kCompatToLead[30] = {
      0,  1,  -1, 2,  -1, -1, 3,  4,  5,  -1, -1, -1, -1, -1, -1,
      -1, 6,  7,  8,  -1, 9,  10, 11, 12, 13, 14, 15, 16, 17, 18};
  std::vector<Codepoint> out;
  for (Codepoint cp : hangul::decode_utf8(prefix)) {
    if (hangul::is_syllable(cp)) {
      for (Codepoint j : hangul::jamo_expansion(hangul::encode_utf8(cp))) out.push_back(j);
    } else if (cp >= 0x3131 && cp <= 0x314E) {
      int lead = kCompatToLead[cp - 0x3131];
      out.push_back(lead >= 0 ? hangul::kLeadBase + static_cast<Codepoint>(lead) : cp);
    } else if (cp >= 0x314F && cp <= 0x3163) {
      out.push_back(hangul::kVowelBase + (cp - 0x314F));
    } else {
      out.push_back(cp);
    }
  }
  return out;
}

namespace {

bool starts_with(const std::vector<hangul::Codepoint>& full,
                 const std::vector<hangul::Codepoint>& prefix) {
  if (prefix.size() > full.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), full.begin());
}

}  // namespace

std::vector<Completion> complete(const PredictionContext& context,
                                 const CompletionIndex& index,
                                 std::string_view typed_prefix, int n) {
  if (n < 1) throw std::invalid_argument("complete: n must be >= 1");
  std::vector<hangul::Codepoint> prefix = prefix_jamo_expansion(typed_prefix);
  const Tensor& dist = context.next_word_dist();
  std::vector<Completion> matches;
  for (size_t id = Vocabulary::kNumSpecials; id < index.size(); ++id) {
    if (starts_with(index.expansion(static_cast<int>(id)), prefix)) {
      matches.push_back({static_cast<int>(id), dist.at(static_cast<int>(id))});
    }
  }
  auto better = [](const Completion& a, const Completion& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.word_id < b.word_id;
  };
  size_t keep = std::min(static_cast<size_t>(n), matches.size());
  std::partial_sort(matches.begin(), matches.begin() + static_cast<long>(keep),
                    matches.end(), better);
  matches.resize(keep);
  return matches;
}

ModelPredictor::ModelPredictor(const Checkpoint& ckpt, const VocabSet& vocabs,
                               const SegmenterLexicon& lexicon)
    : ckpt_(ckpt),
      vocabs_(vocabs),
      lexicon_(lexicon),
      context_(ckpt.config, ckpt.params),
      index_(vocabs.word) {
  verify_vocab_hashes(ckpt, vocabs);
}

void ModelPredictor::start_sentence() { context_.reset(); }

void ModelPredictor::commit_word(const std::string& word) {
  context_.push_word(encode_word(word, vocabs_, lexicon_, ckpt_.config.max_syllables));
}

std::vector<std::string> ModelPredictor::suggest(const std::string& typed, int n) {
  std::vector<std::string> out;
  for (const Completion& c : complete(context_, index_, typed, n)) {
    out.push_back(vocabs_.word.surface_of(c.word_id));
  }
  return out;
}

KssReport kss_evaluate(Predictor& predictor,
                       const std::vector<std::vector<std::string>>& sentences,
                       const KssOptions& options) {
  KssReport report;
  for (const auto& sentence : sentences) {
    SentenceKss s;
    predictor.start_sentence();
    for (const std::string& word : sentence) {
      std::vector<hangul::Codepoint> jamo = hangul::jamo_expansion(word);
      size_t len = jamo.size();
      size_t sep = options.count_separators ? 1 : 0;
      s.total += len + sep;
      bool selected = false;
      size_t consult_limit = options.count_separators ? len : (len == 0 ? 0 : len - 1);
      for (size_t k = 0; k <= consult_limit; ++k) {
        std::string typed = hangul::encode_utf8(
            std::vector<hangul::Codepoint>(jamo.begin(), jamo.begin() + static_cast<long>(k)));
        std::vector<std::string> suggestions =
            predictor.suggest(typed, options.n_suggestions);
        size_t benefit = len - k + sep;
        if (benefit > static_cast<size_t>(options.selection_cost) &&
            std::find(suggestions.begin(), suggestions.end(), word) != suggestions.end()) {
          s.pressed += k + static_cast<size_t>(options.selection_cost);
          s.saved += benefit - static_cast<size_t>(options.selection_cost);
          selected = true;
          break;
        }
        // k == consult_limit means the word (and separator, when counted)
        // was typed in full
      }
      if (!selected) s.pressed += len + sep;
      predictor.commit_word(word);
    }
    report.total += s.total;
    report.pressed += s.pressed;
    report.saved += s.saved;
    report.per_sentence.push_back(s);
  }
  return report;
}

KssReport kss_evaluate(const Checkpoint& ckpt, const Corpus& corpus,
                       const VocabSet& vocabs, const SegmenterLexicon& lexicon,
                       const KssOptions& options) {
  ModelPredictor predictor(ckpt, vocabs, lexicon);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : corpus.sentences) {
    if (!s.empty()) sentences.push_back(s);
  }
  return kss_evaluate(predictor, sentences, options);
}

std::string kss_per_sentence_tsv(const KssReport& report) {
  std::ostringstream out;
  for (size_t i = 0; i < report.per_sentence.size(); ++i) {
    const SentenceKss& s = report.per_sentence[i];
    out << (i + 1) << '\t' << s.total << '\t' << s.pressed << '\t' << s.saved << '\n';
  }
  return out.str();
}

}  // namespace aglm
