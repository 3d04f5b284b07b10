#include <doctest.h>

#include <cmath>
#include <sstream>

#include "aglm/checkpoint.hpp"
#include "aglm/train.hpp"
#include "test_helpers.hpp"

using namespace aglm;

namespace {

ModelConfig small_config() {
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

TrainConfig fast_train(int epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 2;
  t.lr = 0.5;
  t.decay_after = epochs;
  t.seed = 7;
  t.validation_fraction = 0.0;
  return t;
}

}  // namespace

TEST_CASE("metrics tsv layout") {
  std::vector<EpochMetrics> m = {{1, 5.25, 120.5}, {2, 4.0, 90.0}};
  std::string tsv = metrics_to_tsv(m);
  CHECK(tsv.rfind("epoch\ttrain_nll\tvalid_ppl\n", 0) == 0);
  CHECK(tsv.find("\n1\t") != std::string::npos);
  CHECK(tsv.find("\n2\t") != std::string::npos);
}

TEST_CASE("encode_corpus drops empty sentences and counts targets") {
  Corpus c = parse_corpus("그가 갔다\n\n왔다\n", false);
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  EncodedCorpus enc = encode_corpus(c, set, c.lexicon, 4);
  CHECK(enc.sentences.size() == 2);
  // every word plus one EOS per sentence
  CHECK(enc.token_count == 3 + 2);
  REQUIRE(enc.sentences[0].size() == 2);
  CHECK(enc.sentences[0][0].word_id == set.word.id_of("그가"));
}

TEST_CASE("all-zero parameters give perplexity exactly the vocab size") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  ModelConfig mc = small_config();
  mc.word_vocab = static_cast<int>(set.word.size());
  mc.morph_vocab = static_cast<int>(set.morph.size());
  mc.syll_vocab = static_cast<int>(set.syllable.size());
  mc.jamo_vocab = static_cast<int>(set.jamo.size());
  ModelParams p = init_params(mc, 1);
  for (auto& [name, t] : p.tensors) {
    for (double& v : t.data) v = 0;
  }
  EncodedCorpus enc = encode_corpus(c, set, c.lexicon, mc.max_syllables);
  double ppl = perplexity(mc, p, enc);
  CHECK(ppl == doctest::Approx(static_cast<double>(set.word.size())).epsilon(1e-9));
}

TEST_CASE("freshly initialized model is near-uniform perplexity") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  ModelConfig mc = small_config();
  mc.word_vocab = static_cast<int>(set.word.size());
  mc.morph_vocab = static_cast<int>(set.morph.size());
  mc.syll_vocab = static_cast<int>(set.syllable.size());
  mc.jamo_vocab = static_cast<int>(set.jamo.size());
  ModelParams p = init_params(mc, 2);
  EncodedCorpus enc = encode_corpus(c, set, c.lexicon, mc.max_syllables);
  double ppl = perplexity(mc, p, enc);
  CHECK(ppl == doctest::Approx(static_cast<double>(set.word.size())).epsilon(0.05));
}

TEST_CASE("training memorizes a low-entropy corpus") {
  Corpus c = aglm::testing::repetition_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  ModelConfig mc = small_config();
  mc.lstm_hidden = 16;
  mc.band_spec = BandSpec{{{BandSpec::kRemainder, 8}}};

  TrainConfig tc = fast_train(200);
  tc.lr = 1.0;
  tc.batch_size = 1;
  TrainResult r = train(c, set, c.lexicon, mc, tc);
  CHECK(!r.diverged);
  REQUIRE(r.metrics.size() == 200);
  double before = r.metrics.front().train_nll;
  double after = r.metrics.back().train_nll;
  CHECK(after < before * 0.3);

  double ppl = perplexity(r.checkpoint, c, set, c.lexicon);
  CHECK(ppl < 2.0);
}

TEST_CASE("training is deterministic for a fixed seed") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  ModelConfig mc = small_config();

  TrainResult a = train(c, set, c.lexicon, mc, fast_train(3));
  TrainResult b = train(c, set, c.lexicon, mc, fast_train(3));
  CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint));

  TrainConfig other = fast_train(3);
  other.seed = 8;
  TrainResult d = train(c, set, c.lexicon, mc, other);
  CHECK(serialize_checkpoint(a.checkpoint) != serialize_checkpoint(d.checkpoint));
}

TEST_CASE("gradient clipping bounds the update step") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  ModelConfig mc = small_config();
  mc.word_vocab = static_cast<int>(set.word.size());
  mc.morph_vocab = static_cast<int>(set.morph.size());
  mc.syll_vocab = static_cast<int>(set.syllable.size());
  mc.jamo_vocab = static_cast<int>(set.jamo.size());

  TrainConfig tc = fast_train(1);
  tc.batch_size = 100;  // whole corpus in one update
  tc.clip_norm = 0.01;
  tc.lr = 1.0;

  ModelParams before = init_params(mc, tc.seed);
  ModelConfig mc_copy = small_config();
  TrainResult r = train(c, set, c.lexicon, mc_copy, tc);

  // with one update per epoch the total parameter change is at most
  // lr * clip_norm in L2 norm (up to f32 checkpoint rounding)
  double sq = 0;
  for (size_t i = 0; i < before.tensors.size(); ++i) {
    const Tensor& a = before.tensors[i].second;
    const Tensor& b = r.checkpoint.params.tensors[i].second;
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) {
      double d = a.data[k] - b.data[k];
      sq += d * d;
    }
  }
  CHECK(std::sqrt(sq) <= tc.lr * tc.clip_norm * 1.05 + 1e-4);
}

TEST_CASE("checkpoint serialization round trips byte-exactly") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  TrainResult r = train(c, set, c.lexicon, small_config(), fast_train(2));

  std::string bytes = serialize_checkpoint(r.checkpoint);
  Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(back.prng_id == "splitmix64");
  CHECK(back.word_vocab_hash == set.word.hash());
  CHECK(back.config.lstm_hidden == 12);
  CHECK(back.params.tensors.size() == r.checkpoint.params.tensors.size());
  CHECK_NOTHROW(verify_vocab_hashes(back, set));
}

TEST_CASE("checkpoint failure modes carry distinct error codes") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  TrainResult r = train(c, set, c.lexicon, small_config(), fast_train(1));
  std::string bytes = serialize_checkpoint(r.checkpoint);

  auto code_of = [](const std::string& data) {
    try {
      deserialize_checkpoint(data);
    } catch (const CheckpointException& e) {
      return e.code;
    }
    throw std::runtime_error("expected a checkpoint error");
  };

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of(bad_magic) == CheckpointError::BadMagic);

  std::string skew = bytes;
  skew[4] = static_cast<char>(Checkpoint::kVersion + 1);
  CHECK(code_of(skew) == CheckpointError::VersionSkew);

  CHECK(code_of(bytes.substr(0, bytes.size() / 2)) == CheckpointError::Truncated);
  CHECK(code_of(bytes.substr(0, 3)) == CheckpointError::Truncated);

  // foreign vocabulary -> hash mismatch
  Corpus other = parse_corpus("서로 다른 문장\n");
  VocabSet other_set = build_vocab_set(other, other.lexicon, {});
  CHECK_THROWS_AS(verify_vocab_hashes(r.checkpoint, other_set), CheckpointException);
  try {
    verify_vocab_hashes(r.checkpoint, other_set);
  } catch (const CheckpointException& e) {
    CHECK(e.code == CheckpointError::VocabHashMismatch);
  }
}

TEST_CASE("divergence aborts and keeps the last finite parameters") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  TrainConfig tc = fast_train(20);
  tc.lr = 1e160;       // parameters overflow within a few updates
  tc.clip_norm = 1e300;  // clipping effectively disabled
  std::ostringstream log;
  TrainResult r = train(c, set, c.lexicon, small_config(), tc, &log);
  CHECK(r.diverged);
  for (const auto& [name, t] : r.checkpoint.params.tensors) {
    CHECK(t.all_finite());
  }
}

TEST_CASE("validation slice reports finite perplexity") {
  Corpus c = aglm::testing::make_synthetic_corpus({.sentences = 40, .noun_stems = 10,
                                                   .verb_stems = 5, .seed = 3});
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  TrainConfig tc = fast_train(2);
  tc.validation_fraction = 0.2;
  TrainResult r = train(c, set, c.lexicon, small_config(), tc);
  for (const EpochMetrics& m : r.metrics) {
    CHECK(std::isfinite(m.valid_ppl));
    CHECK(m.valid_ppl > 1.0);
  }

  // no validation slice -> NaN marker
  TrainResult none = train(c, set, c.lexicon, small_config(), fast_train(1));
  CHECK(std::isnan(none.metrics.back().valid_ppl));
}

TEST_CASE("learning rate decay kicks in after the configured epoch") {
  Corpus c = aglm::testing::memorization_corpus();
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  TrainConfig tc = fast_train(6);
  tc.decay_after = 2;
  std::ostringstream log;
  TrainResult r = train(c, set, c.lexicon, small_config(), tc, &log);
  CHECK(!r.diverged);
  REQUIRE(r.metrics.size() == 6);
  // training still converges under the decayed schedule
  CHECK(r.metrics.back().train_nll < r.metrics.front().train_nll);
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  tc = TrainConfig{};
  tc.lr = -1;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  tc = TrainConfig{};
  tc.validation_fraction = 1.5;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  CHECK_NOTHROW(TrainConfig{}.validate());
}
