#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aglm {

enum class VocabKind { Word, Morpheme, Syllable, Jamo };

std::string to_string(VocabKind kind);
VocabKind vocab_kind_from_string(std::string_view s);

// Frequency-ordered id map. Specials occupy ids 0..3, non-special entries
// follow in descending frequency, ties broken by first occurrence.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kPad = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;
  // Morpheme triples reuse the otherwise-idle PAD slot as the NONE
  // placeholder; it gets its own learned embedding row that way.
  static constexpr int kNone = kPad;

  Vocabulary() = default;
  Vocabulary(VocabKind kind, std::vector<std::pair<std::string, uint64_t>> counted,
             size_t max_size);

  VocabKind kind() const { return kind_; }
  size_t size() const { return surfaces_.size(); }
  int id_of(std::string_view surface) const;  // kUnk if absent
  const std::string& surface_of(int id) const;
  uint64_t frequency_of(int id) const;

  std::string serialize() const;  // "#vocab <kind> <size>" header + TSV body
  static Vocabulary deserialize(std::string_view bytes);

  uint64_t hash() const;  // FNV-1a over serialized bytes

 private:
  VocabKind kind_ = VocabKind::Word;
  std::vector<std::string> surfaces_;
  std::vector<uint64_t> freqs_;
  std::unordered_map<std::string, int> ids_;
};

// Morpheme lexicon for the greedy fallback segmenter, plus an optional map of
// gold segmentations keyed by exact word surface.
struct SegmenterLexicon {
  std::unordered_map<std::string, uint64_t> entries;
  std::unordered_map<std::string, std::vector<std::string>> annotations;
  size_t max_morpheme_syllables = 0;

  void add(std::string_view morpheme, uint64_t freq = 1);
  void annotate(std::string_view word, std::vector<std::string> morphemes);

  std::string serialize() const;  // "morpheme<TAB>frequency" lines
  static SegmenterLexicon deserialize(std::string_view bytes);
};

// Gold segmentation if annotated, otherwise greedy longest match from the
// left; unmatched spans fall back to single syllables. Output always
// concatenates back to the word surface.
std::vector<std::string> segment_morphemes(std::string_view word,
                                           const SegmenterLexicon& lexicon);

struct MorphTriple {
  int start = Vocabulary::kUnk;
  int middle = Vocabulary::kNone;
  int end = Vocabulary::kNone;
  bool operator==(const MorphTriple&) const = default;
};

// Map 1..n morphemes onto the (start, middle, end) slots: 1 -> (m, -, -),
// 2 -> (m1, -, m2), 3 -> (m1, m2, m3), >3 merges the interior units into one
// surface looked up whole.
MorphTriple to_morph_triple(const std::vector<std::string>& morphemes,
                            const Vocabulary& morph_vocab);

struct BandSpec {
  static constexpr int64_t kRemainder = -1;
  std::vector<std::pair<int64_t, int>> bands;  // (size or kRemainder, rank)
};

struct Band {
  int64_t begin;
  int64_t end;  // exclusive
  int rank;
  bool operator==(const Band&) const = default;
};

// Contiguous id ranges in frequency order covering the whole vocabulary.
// Throws std::invalid_argument when the spec does not fit the size.
std::vector<Band> band_partition(size_t vocab_size, const BandSpec& spec);

BandSpec parse_band_spec(std::string_view text);  // e.g. "5000:152,20000:52,rest:12"
std::string band_spec_to_string(const BandSpec& spec);

struct WordFeatures {
  std::vector<int> syllable_ids;  // padded to max_syllables
  std::vector<int> jamo_ids;      // padded to 3 * max_syllables
  MorphTriple morphs;
  int word_id = Vocabulary::kUnk;
};

struct VocabSet {
  Vocabulary word;
  Vocabulary morph;
  Vocabulary syllable;
  Vocabulary jamo;
};

WordFeatures encode_word(std::string_view word, const VocabSet& vocabs,
                         const SegmenterLexicon& lexicon, int max_syllables);

WordFeatures bos_features(int max_syllables);

// Corpus handling: UTF-8, one sentence per line. In annotated form each word
// may carry `surface|m1+m2+m3`; `|` and `+` are escaped by doubling.
struct Corpus {
  std::vector<std::vector<std::string>> sentences;  // normalized surface words
  SegmenterLexicon lexicon;                         // filled from annotations
  size_t word_count = 0;
};

Corpus load_corpus(std::string_view path, bool annotated = false);
Corpus parse_corpus(std::string_view text, bool annotated = false);

struct VocabBuildOptions {
  size_t max_words = 200000;
  size_t max_morphs = 20000;
  size_t max_syllables = 3000;
  size_t max_jamo = 300;
};

VocabSet build_vocab_set(const Corpus& corpus, const SegmenterLexicon& lexicon,
                         const VocabBuildOptions& options);

Vocabulary build_vocab(const std::vector<std::pair<std::string, uint64_t>>& counts,
                       VocabKind kind, size_t max_size);

uint64_t fnv1a(std::string_view bytes);

}  // namespace aglm
