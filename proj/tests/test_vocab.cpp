#include <doctest.h>

#include "aglm/rng.hpp"
#include "aglm/vocab.hpp"

using namespace aglm;

TEST_CASE("build_vocab counts and orders by frequency") {
  Corpus c = parse_corpus("그가 그가 갔다\n");
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  CHECK(set.word.size() == Vocabulary::kNumSpecials + 2);
  CHECK(set.word.id_of("그가") == Vocabulary::kNumSpecials);
  CHECK(set.word.id_of("갔다") == Vocabulary::kNumSpecials + 1);
  CHECK(set.word.frequency_of(Vocabulary::kNumSpecials) == 2);
  CHECK(set.word.id_of("없는말") == Vocabulary::kUnk);
}

TEST_CASE("frequency ties break by first occurrence") {
  Corpus c = parse_corpus("a b a\n");
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  CHECK(set.word.id_of("a") < set.word.id_of("b"));

  Corpus tie = parse_corpus("z q\n");
  VocabSet tset = build_vocab_set(tie, tie.lexicon, {});
  CHECK(tset.word.id_of("z") < tset.word.id_of("q"));
}

TEST_CASE("empty corpus is an error") {
  Corpus c = parse_corpus("\n\n");
  CHECK_THROWS(build_vocab_set(c, c.lexicon, {}));
}

TEST_CASE("max_size caps the vocabulary") {
  Corpus c = parse_corpus("a a a b b c\n");
  VocabBuildOptions opts;
  opts.max_words = Vocabulary::kNumSpecials + 2;
  VocabSet set = build_vocab_set(c, c.lexicon, opts);
  CHECK(set.word.size() == Vocabulary::kNumSpecials + 2);
  CHECK(set.word.id_of("c") == Vocabulary::kUnk);
}

TEST_CASE("vocab serialization round trip and determinism") {
  Corpus c = parse_corpus("그가 갔다 그가\n많이 왔다\n");
  VocabSet a = build_vocab_set(c, c.lexicon, {});
  VocabSet b = build_vocab_set(c, c.lexicon, {});
  CHECK(a.word.serialize() == b.word.serialize());
  Vocabulary back = Vocabulary::deserialize(a.word.serialize());
  CHECK(back.serialize() == a.word.serialize());
  CHECK(back.hash() == a.word.hash());
  CHECK(back.kind() == VocabKind::Word);
}

TEST_CASE("segment_morphemes greedy longest match") {
  SegmenterLexicon lex;
  lex.add("그");
  lex.add("가");
  CHECK(segment_morphemes("그가", lex) == std::vector<std::string>{"그", "가"});

  SegmenterLexicon lex2;
  lex2.add("그");
  lex2.add("에게");
  CHECK(segment_morphemes("그에게", lex2) == std::vector<std::string>{"그", "에게"});

  SegmenterLexicon empty;
  CHECK(segment_morphemes("xyz", empty) == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("longest match wins over shorter") {
  SegmenterLexicon lex;
  lex.add("에");
  lex.add("에게");
  lex.add("그");
  CHECK(segment_morphemes("그에게", lex) == std::vector<std::string>{"그", "에게"});
}

TEST_CASE("annotations take precedence over greedy matching") {
  SegmenterLexicon lex;
  lex.add("그에");
  lex.annotate("그에게", {"그", "에게"});
  CHECK(segment_morphemes("그에게", lex) == std::vector<std::string>{"그", "에게"});
}

TEST_CASE("segmentation always concatenates back") {
  SegmenterLexicon lex;
  lex.add("가나");
  lex.add("다");
  SplitMix64 rng(11);
  for (int i = 0; i < 200; ++i) {
    std::string word;
    size_t len = 1 + rng.next_below(6);
    for (size_t k = 0; k < len; ++k) {
      word += std::vector<std::string>{"가", "나", "다", "라"}[rng.next_below(4)];
    }
    std::string rebuilt;
    for (const auto& m : segment_morphemes(word, lex)) rebuilt += m;
    CHECK(rebuilt == word);
  }
}

TEST_CASE("to_morph_triple slot mapping for 1..5 units") {
  Corpus c = parse_corpus("그 가 bc a b c d e\n");
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  const Vocabulary& mv = set.morph;

  MorphTriple one = to_morph_triple({"그"}, mv);
  CHECK(one.start == mv.id_of("그"));
  CHECK(one.middle == Vocabulary::kNone);
  CHECK(one.end == Vocabulary::kNone);

  MorphTriple two = to_morph_triple({"그", "가"}, mv);
  CHECK(two.start == mv.id_of("그"));
  CHECK(two.middle == Vocabulary::kNone);
  CHECK(two.end == mv.id_of("가"));

  MorphTriple three = to_morph_triple({"a", "b", "c"}, mv);
  CHECK(three.middle == mv.id_of("b"));

  // interior units merge into one surface, looked up whole
  MorphTriple four = to_morph_triple({"a", "b", "c", "d"}, mv);
  CHECK(four.start == mv.id_of("a"));
  CHECK(four.middle == mv.id_of("bc"));
  CHECK(four.end == mv.id_of("d"));

  MorphTriple five = to_morph_triple({"a", "b", "c", "d", "e"}, mv);
  CHECK(five.middle == Vocabulary::kUnk);  // "bcd" is not in the vocab
  CHECK(five.end == mv.id_of("e"));
}

TEST_CASE("band_partition examples") {
  BandSpec ref{{{5000, 152}, {20000, 52}, {BandSpec::kRemainder, 12}}};
  std::vector<Band> bands = band_partition(200000, ref);
  REQUIRE(bands.size() == 3);
  CHECK(bands[0] == Band{0, 5000, 152});
  CHECK(bands[1] == Band{5000, 25000, 52});
  CHECK(bands[2] == Band{25000, 200000, 12});

  CHECK(band_partition(10, BandSpec{{{BandSpec::kRemainder, 4}}}) ==
        std::vector<Band>{{0, 10, 4}});
  std::vector<Band> two = band_partition(10, BandSpec{{{4, 3}, {BandSpec::kRemainder, 2}}});
  CHECK(two == std::vector<Band>{{0, 4, 3}, {4, 10, 2}});
}

TEST_CASE("band_partition rejects bad specs") {
  CHECK_THROWS(band_partition(10, BandSpec{{{12, 3}}}));
  CHECK_THROWS(band_partition(10, BandSpec{{{4, 2}, {BandSpec::kRemainder, 3}}}));
  CHECK_THROWS(band_partition(10, BandSpec{{{BandSpec::kRemainder, 2}, {4, 1}}}));
  CHECK_THROWS(band_partition(10, BandSpec{{{4, 0}}}));
}

TEST_CASE("band_partition is a partition for random valid specs") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    size_t vocab = 5 + rng.next_below(500);
    BandSpec spec;
    size_t remaining = vocab;
    int rank = 40 + static_cast<int>(rng.next_below(20));
    while (remaining > 1 && spec.bands.size() < 4 && rng.next_below(3) != 0) {
      int64_t size = 1 + static_cast<int64_t>(rng.next_below(remaining - 1));
      spec.bands.emplace_back(size, rank);
      remaining -= static_cast<size_t>(size);
      rank = std::max(1, rank - 1 - static_cast<int>(rng.next_below(5)));
    }
    spec.bands.emplace_back(BandSpec::kRemainder, rank);
    std::vector<Band> bands = band_partition(vocab, spec);
    int64_t cursor = 0;
    for (const Band& b : bands) {
      CHECK(b.begin == cursor);
      CHECK(b.end > b.begin);
      cursor = b.end;
    }
    CHECK(cursor == static_cast<int64_t>(vocab));
  }
}

TEST_CASE("band spec text round trip") {
  BandSpec spec = parse_band_spec("5000:152,20000:52,rest:12");
  CHECK(band_spec_to_string(spec) == "5000:152,20000:52,rest:12");
  CHECK_THROWS(parse_band_spec("nonsense"));
}

TEST_CASE("encode_word pads, truncates and survives OOV") {
  Corpus c = parse_corpus("그가|그+가 갔다\n");
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  WordFeatures f = encode_word("그가", set, c.lexicon, 8);
  REQUIRE(f.syllable_ids.size() == 8);
  CHECK(f.syllable_ids[0] == set.syllable.id_of("그"));
  CHECK(f.syllable_ids[1] == set.syllable.id_of("가"));
  for (size_t i = 2; i < 8; ++i) CHECK(f.syllable_ids[i] == Vocabulary::kPad);
  CHECK(f.morphs.start == set.morph.id_of("그"));
  CHECK(f.morphs.middle == Vocabulary::kNone);
  CHECK(f.morphs.end == set.morph.id_of("가"));
  CHECK(f.word_id == set.word.id_of("그가"));

  // OOV word: UNK word id, syllable ids still populated
  WordFeatures oov = encode_word("그그", set, c.lexicon, 8);
  CHECK(oov.word_id == Vocabulary::kUnk);
  CHECK(oov.syllable_ids[0] == set.syllable.id_of("그"));

  // truncation keeps the first max_syllables
  WordFeatures longw = encode_word("가가가가가", set, c.lexicon, 3);
  REQUIRE(longw.syllable_ids.size() == 3);
  for (int id : longw.syllable_ids) CHECK(id == set.syllable.id_of("가"));
}

TEST_CASE("encode_word ids always within vocab bounds") {
  Corpus c = parse_corpus("그가 갔다 많이\n");
  VocabSet set = build_vocab_set(c, c.lexicon, {});
  for (std::string word : {"그가", "zz9", "한국어처럼긴단어입니다", "?!"}) {
    WordFeatures f = encode_word(word, set, c.lexicon, 8);
    for (int id : f.syllable_ids) {
      CHECK(id >= 0);
      CHECK(id < static_cast<int>(set.syllable.size()));
    }
    for (int id : f.jamo_ids) {
      CHECK(id >= 0);
      CHECK(id < static_cast<int>(set.jamo.size()));
    }
    CHECK(f.word_id < static_cast<int>(set.word.size()));
  }
}

TEST_CASE("annotated corpus escaping via doubling") {
  Corpus c = parse_corpus("a||b|x+y c\n", true);
  REQUIRE(c.sentences.size() == 1);
  CHECK(c.sentences[0][0] == "a|b");
  CHECK(c.lexicon.annotations.at("a|b") == std::vector<std::string>{"x", "y"});

  Corpus plus = parse_corpus("w|m1++m2\n", true);
  CHECK(plus.lexicon.annotations.at("w") == std::vector<std::string>{"m1+m2"});
}

TEST_CASE("lexicon file round trip") {
  SegmenterLexicon lex;
  lex.add("그", 5);
  lex.add("에게", 2);
  SegmenterLexicon back = SegmenterLexicon::deserialize(lex.serialize());
  CHECK(back.entries == lex.entries);
  CHECK(back.max_morpheme_syllables == 2);
}
