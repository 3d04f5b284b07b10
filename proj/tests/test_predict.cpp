#include <doctest.h>

#include <algorithm>
#include <map>

#include "aglm/predict.hpp"
#include "aglm/rng.hpp"
#include "test_helpers.hpp"

using namespace aglm;

namespace {

ModelConfig predict_config() {
  ModelConfig c;
  c.embedding_mode = EmbeddingMode::SyllableMorph;
  c.syll_emb_dim = 4;
  c.morph_emb_dim = 5;
  c.filter_spec = {{1, 3}, {2, 3}};
  c.lstm_hidden = 12;
  c.band_spec = BandSpec{{{BandSpec::kRemainder, 4}}};
  c.max_syllables = 4;
  c.bptt_len = 8;
  return c;
}

// Never suggests anything: the vanilla-typing baseline.
struct SilentPredictor : Predictor {
  void start_sentence() override {}
  void commit_word(const std::string&) override {}
  std::vector<std::string> suggest(const std::string&, int) override { return {}; }
};

// Always knows the next word of its scripted sentence.
struct OraclePredictor : Predictor {
  std::vector<std::string> sentence;
  size_t pos = 0;
  void start_sentence() override { pos = 0; }
  void commit_word(const std::string&) override { ++pos; }
  std::vector<std::string> suggest(const std::string&, int) override {
    return pos < sentence.size() ? std::vector<std::string>{sentence[pos]} : std::vector<std::string>{};
  }
};

// Pure function of (words committed this sentence, jamo typed so far).
struct ScriptedPredictor : Predictor {
  std::map<std::pair<size_t, size_t>, std::vector<std::string>> script;
  size_t committed = 0;
  void start_sentence() override { committed = 0; }
  void commit_word(const std::string&) override { ++committed; }
  std::vector<std::string> suggest(const std::string& typed, int n) override {
    size_t k = hangul::decode_utf8(typed).size();
    auto it = script.find({committed, k});
    if (it == script.end()) return {};
    std::vector<std::string> out = it->second;
    if (out.size() > static_cast<size_t>(n)) out.resize(static_cast<size_t>(n));
    return out;
  }
};

// Straight-line re-simulation used as an oracle for kss_evaluate: for each
// word, find the earliest consultation point whose list contains it.
KssReport kss_brute_force(ScriptedPredictor& predictor,
                          const std::vector<std::vector<std::string>>& sentences,
                          const KssOptions& options) {
  KssReport report;
  for (const auto& sentence : sentences) {
    SentenceKss s;
    for (size_t wi = 0; wi < sentence.size(); ++wi) {
      const std::string& word = sentence[wi];
      size_t len = hangul::jamo_expansion(word).size();
      size_t sep = options.count_separators ? 1 : 0;
      size_t limit = options.count_separators ? len : len - 1;
      s.total += len + sep;
      size_t cost = static_cast<size_t>(options.selection_cost);
      bool found = false;
      for (size_t k = 0; k <= limit && !found; ++k) {
        auto it = predictor.script.find({wi, k});
        if (it == predictor.script.end()) continue;
        size_t shown = std::min(it->second.size(),
                                static_cast<size_t>(options.n_suggestions));
        for (size_t j = 0; j < shown; ++j) {
          if (it->second[j] == word && len - k + sep > cost) {
            s.pressed += k + cost;
            s.saved += len - k + sep - cost;
            found = true;
            break;
          }
        }
      }
      if (!found) s.pressed += len + sep;
    }
    report.total += s.total;
    report.pressed += s.pressed;
    report.saved += s.saved;
    report.per_sentence.push_back(s);
  }
  return report;
}

}  // namespace

TEST_CASE("prefix jamo expansion maps keyboard jamo onto conjoining ones") {
  using hangul::Codepoint;
  CHECK(prefix_jamo_expansion("그") == std::vector<Codepoint>{0x1100, 0x1173});
  // compatibility ㄱ (U+3131) -> conjoining lead
  CHECK(prefix_jamo_expansion("ㄱ") == std::vector<Codepoint>{0x1100});
  // compatibility ㄴ (U+3134) -> lead index 2
  CHECK(prefix_jamo_expansion("ㄴ") == std::vector<Codepoint>{0x1102});
  // compatibility vowel ㅏ (U+314F)
  CHECK(prefix_jamo_expansion("ㅏ") == std::vector<Codepoint>{0x1161});
  // syllable followed by a dangling consonant, as typed mid-syllable
  std::vector<Codepoint> mixed = prefix_jamo_expansion("가ㄱ");
  CHECK(mixed == std::vector<Codepoint>{0x1100, 0x1161, 0x1100});
  CHECK(prefix_jamo_expansion("").empty());
}

TEST_CASE("completion index skips specials and expands words") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  CompletionIndex index(set.word);
  CHECK(index.size() == set.word.size());
  for (int id = 0; id < Vocabulary::kNumSpecials; ++id) {
    CHECK(index.expansion(id).empty());
  }
  int id = set.word.id_of("그가");
  CHECK(index.expansion(id) == hangul::jamo_expansion("그가"));
}

TEST_CASE("complete filters by typed prefix and ranks by probability") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  ModelConfig mc = predict_config();
  mc.word_vocab = static_cast<int>(set.word.size());
  mc.morph_vocab = static_cast<int>(set.morph.size());
  mc.syll_vocab = static_cast<int>(set.syllable.size());
  mc.jamo_vocab = static_cast<int>(set.jamo.size());
  ModelParams params = init_params(mc, 11);
  PredictionContext ctx(mc, params);
  CompletionIndex index(set.word);

  // corpus has 그가 and 그는: prefix 그 matches exactly those
  std::vector<Completion> grs = complete(ctx, index, "그", 10);
  REQUIRE(grs.size() == 2);
  for (const Completion& comp : grs) {
    std::string surface = set.word.surface_of(comp.word_id);
    CHECK(surface.rfind("그", 0) == 0);
  }
  CHECK(grs[0].log_prob >= grs[1].log_prob);

  // dangling consonant prefix ㅁ matches 먹었다 and 많이
  std::vector<Completion> m = complete(ctx, index, "ㅁ", 10);
  REQUIRE(m.size() == 2);

  // empty prefix: everything eligible, top-n by probability
  std::vector<Completion> all = complete(ctx, index, "", 3);
  REQUIRE(all.size() == 3);
  CHECK(all[0].log_prob >= all[1].log_prob);
  CHECK(all[1].log_prob >= all[2].log_prob);

  // top-1 is a prefix of top-3
  std::vector<Completion> one = complete(ctx, index, "", 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].word_id == all[0].word_id);

  // no match
  CHECK(complete(ctx, index, "햄버거", 5).empty());
  CHECK_THROWS_AS(complete(ctx, index, "", 0), std::invalid_argument);
}

TEST_CASE("silent predictor saves nothing") {
  SilentPredictor p;
  KssReport r = kss_evaluate(p, {{"그가", "간다"}}, {});
  CHECK(r.total == 11);  // 4+1 and 5+1
  CHECK(r.pressed == 11);
  CHECK(r.saved == 0);
  CHECK(r.kss_percent() == 0.0);
}

TEST_CASE("oracle predictor saves every keystroke at zero selection cost") {
  OraclePredictor p;
  p.sentence = {"그가", "간다"};
  KssReport r = kss_evaluate(p, {p.sentence}, {});
  CHECK(r.pressed == 0);
  CHECK(r.saved == r.total);
  CHECK(r.kss_percent() == doctest::Approx(100.0));
}

TEST_CASE("scripted fixture reproduces the worked KSS number") {
  // 그가 is never suggested; 간다 appears once two jamo have been typed.
  ScriptedPredictor p;
  p.script[{1, 2}] = {"없다", "간다"};
  KssOptions opts;
  KssReport r = kss_evaluate(p, {{"그가", "간다"}}, opts);
  CHECK(r.total == 11);
  CHECK(r.pressed == 7);  // 그가 in full (5) + two jamo of 간다
  CHECK(r.saved == 4);
  CHECK(r.kss_percent() == doctest::Approx(100.0 * 4 / 11));

  // with a selection keystroke the pick still pays off, one stroke worse
  opts.selection_cost = 1;
  KssReport r1 = kss_evaluate(p, {{"그가", "간다"}}, opts);
  CHECK(r1.pressed == 8);
  CHECK(r1.saved == 3);
}

TEST_CASE("suggestion list is truncated to n before matching") {
  ScriptedPredictor p;
  p.script[{0, 0}] = {"하나", "둘", "셋"};
  KssOptions opts;
  opts.n_suggestions = 2;
  // intended word is third in the list: with n=2 it is invisible
  KssReport r = kss_evaluate(p, {{"셋"}}, opts);
  CHECK(r.saved == 0);
  opts.n_suggestions = 3;
  KssReport r3 = kss_evaluate(p, {{"셋"}}, opts);
  CHECK(r3.saved == r3.total);
}

TEST_CASE("separator handling") {
  // word fully typed, suggestion only then: saves just the separator
  ScriptedPredictor p;
  p.script[{0, 2}] = {"가"};  // 가 = 2 jamo
  KssOptions opts;
  KssReport with_sep = kss_evaluate(p, {{"가"}}, opts);
  CHECK(with_sep.total == 3);
  CHECK(with_sep.pressed == 2);
  CHECK(with_sep.saved == 1);

  // without separators that consultation point does not exist
  opts.count_separators = false;
  KssReport without = kss_evaluate(p, {{"가"}}, opts);
  CHECK(without.total == 2);
  CHECK(without.saved == 0);

  // benefit == selection_cost is not worth a pick
  ScriptedPredictor q;
  q.script[{0, 1}] = {"가"};
  KssOptions cost1;
  cost1.count_separators = false;
  cost1.selection_cost = 1;
  KssReport even = kss_evaluate(q, {{"가"}}, cost1);
  CHECK(even.saved == 0);
  CHECK(even.pressed == 2);
}

TEST_CASE("pressed plus saved always equals total") {
  SplitMix64 rng(77);
  std::vector<std::string> pool = {"그가", "간다", "많이", "왔다", "먹었다", "밥을"};
  for (int trial = 0; trial < 50; ++trial) {
    ScriptedPredictor p;
    std::vector<std::vector<std::string>> sentences;
    size_t n_sent = 1 + rng.next_below(3);
    for (size_t si = 0; si < n_sent; ++si) {
      std::vector<std::string> sentence;
      size_t n_words = 1 + rng.next_below(4);
      for (size_t wi = 0; wi < n_words; ++wi) {
        sentence.push_back(pool[rng.next_below(pool.size())]);
        size_t k = rng.next_below(6);
        std::vector<std::string> sugg;
        size_t n_sugg = 1 + rng.next_below(3);
        for (size_t j = 0; j < n_sugg; ++j) {
          sugg.push_back(pool[rng.next_below(pool.size())]);
        }
        p.script[{wi, k}] = sugg;
      }
      sentences.push_back(sentence);
    }
    KssOptions opts;
    opts.n_suggestions = 1 + static_cast<int>(rng.next_below(3));
    opts.selection_cost = static_cast<int>(rng.next_below(2));
    opts.count_separators = rng.next_below(2) == 0;
    KssReport r = kss_evaluate(p, sentences, opts);
    CHECK(r.pressed + r.saved == r.total);
    for (const SentenceKss& s : r.per_sentence) {
      CHECK(s.pressed + s.saved == s.total);
    }

    KssReport oracle = kss_brute_force(p, sentences, opts);
    CHECK(r.total == oracle.total);
    CHECK(r.pressed == oracle.pressed);
    CHECK(r.saved == oracle.saved);
  }
}

TEST_CASE("per-sentence tsv lines") {
  ScriptedPredictor p;
  KssReport r = kss_evaluate(p, {{"그가"}, {"간다"}}, {});
  std::string tsv = kss_per_sentence_tsv(r);
  CHECK(tsv == "1\t5\t5\t0\n2\t6\t6\t0\n");
}

TEST_CASE("model predictor round trips through the full stack") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 2;
  tc.lr = 0.5;
  tc.decay_after = 40;
  tc.validation_fraction = 0.0;
  tc.seed = 5;
  TrainResult r = train(c, set, c.lexicon, predict_config(), tc);
  REQUIRE(!r.diverged);

  KssReport report = kss_evaluate(r.checkpoint, c, set, c.lexicon, {});
  CHECK(report.pressed + report.saved == report.total);
  // a model that memorized five sentences must save something
  CHECK(report.saved > 0);

  // mismatched vocabulary is refused
  Corpus other = parse_corpus("다른 어휘\n");
  VocabSet other_set = build_vocab_set(other, other.lexicon, {});
  CHECK_THROWS_AS(kss_evaluate(r.checkpoint, other, other_set, other.lexicon, {}),
                  CheckpointException);
}
