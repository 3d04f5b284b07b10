#include "aglm/vocab.hpp"

#include <algorithm>
#include <limits>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aglm/hangul.hpp"

namespace aglm {

namespace {
const char* kSpecialSurfaces[] = {"<unk>", "<pad>", "<bos>", "<eos>"};
}

std::string to_string(VocabKind kind) {
  switch (kind) {
    case VocabKind::Word: return "word";
    case VocabKind::Morpheme: return "morpheme";
    case VocabKind::Syllable: return "syllable";
    case VocabKind::Jamo: return "jamo";
  }
  return "?";
}

VocabKind vocab_kind_from_string(std::string_view s) {
  if (s == "word") return VocabKind::Word;
  if (s == "morpheme") return VocabKind::Morpheme;
  if (s == "syllable") return VocabKind::Syllable;
  if (s == "jamo") return VocabKind::Jamo;
  throw std::invalid_argument("unknown vocab kind: " + std::string(s));
}

uint64_t fnv1a(std::string_view bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Vocabulary::Vocabulary(VocabKind kind,
                       std::vector<std::pair<std::string, uint64_t>> counted,
                       size_t max_size)
    : kind_(kind) {
  if (max_size <= kNumSpecials) {
    throw std::invalid_argument("vocab max_size must exceed the special count");
  }
  // counted arrives in first-occurrence order; stable sort keeps that order
  // as the tie break.
  std::stable_sort(counted.begin(), counted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  size_t keep = std::min(counted.size(), max_size - kNumSpecials);
  surfaces_.reserve(kNumSpecials + keep);
  freqs_.reserve(kNumSpecials + keep);
  for (const char* s : kSpecialSurfaces) {
    surfaces_.emplace_back(s);
    freqs_.push_back(0);
  }
  for (size_t i = 0; i < keep; ++i) {
    surfaces_.push_back(counted[i].first);
    freqs_.push_back(counted[i].second);
  }
  for (size_t i = 0; i < surfaces_.size(); ++i) {
    ids_.emplace(surfaces_[i], static_cast<int>(i));
  }
}

int Vocabulary::id_of(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::surface_of(int id) const {
  return surfaces_.at(static_cast<size_t>(id));
}

uint64_t Vocabulary::frequency_of(int id) const {
  return freqs_.at(static_cast<size_t>(id));
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  out << "#vocab " << to_string(kind_) << ' ' << size() << '\n';
  for (size_t i = 0; i < surfaces_.size(); ++i) {
    out << surfaces_[i] << '\t' << freqs_[i] << '\n';
  }
  return out.str();
}

Vocabulary Vocabulary::deserialize(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string header;
  if (!std::getline(in, header) || header.rfind("#vocab ", 0) != 0) {
    throw std::runtime_error("vocab file missing '#vocab' header");
  }
  std::istringstream hs(header.substr(7));
  std::string kind_str;
  size_t declared = 0;
  hs >> kind_str >> declared;
  Vocabulary v;
  v.kind_ = vocab_kind_from_string(kind_str);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("vocab line missing tab: " + line);
    v.surfaces_.push_back(line.substr(0, tab));
    v.freqs_.push_back(std::stoull(line.substr(tab + 1)));
  }
  if (v.surfaces_.size() != declared) {
    throw std::runtime_error("vocab size header does not match body");
  }
  for (size_t i = 0; i < v.surfaces_.size(); ++i) {
    v.ids_.emplace(v.surfaces_[i], static_cast<int>(i));
  }
  return v;
}

uint64_t Vocabulary::hash() const { return fnv1a(serialize()); }

void SegmenterLexicon::add(std::string_view morpheme, uint64_t freq) {
  if (morpheme.empty()) throw std::invalid_argument("empty lexicon morpheme");
  entries[std::string(morpheme)] += freq;
  max_morpheme_syllables =
      std::max(max_morpheme_syllables, hangul::decode_utf8(morpheme).size());
}

void SegmenterLexicon::annotate(std::string_view word,
                                std::vector<std::string> morphemes) {
  for (const auto& m : morphemes) add(m);
  annotations[std::string(word)] = std::move(morphemes);
}

std::string SegmenterLexicon::serialize() const {
  // sorted for determinism
  std::vector<std::pair<std::string, uint64_t>> rows(entries.begin(), entries.end());
  std::sort(rows.begin(), rows.end());
  std::ostringstream out;
  for (const auto& [m, f] : rows) out << m << '\t' << f << '\n';
  return out.str();
}

SegmenterLexicon SegmenterLexicon::deserialize(std::string_view bytes) {
  SegmenterLexicon lex;
  std::istringstream in{std::string(bytes)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("lexicon line missing tab: " + line);
    lex.add(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
  }
  return lex;
}

std::vector<std::string> segment_morphemes(std::string_view word,
                                           const SegmenterLexicon& lexicon) {
  if (auto it = lexicon.annotations.find(std::string(word));
      it != lexicon.annotations.end()) {
    return it->second;
  }
  std::vector<hangul::Codepoint> cps = hangul::decode_utf8(word);
  std::vector<std::string> out;
  size_t i = 0;
  while (i < cps.size()) {
    size_t limit = std::min(cps.size() - i, std::max<size_t>(lexicon.max_morpheme_syllables, 1));
    size_t matched = 0;
    std::string matched_surface;
    for (size_t len = limit; len >= 1; --len) {
      std::string candidate =
          hangul::encode_utf8({cps.begin() + i, cps.begin() + i + len});
      if (lexicon.entries.count(candidate)) {
        matched = len;
        matched_surface = std::move(candidate);
        break;
      }
    }
    if (matched == 0) {
      matched = 1;
      matched_surface = hangul::encode_utf8(cps[i]);
    }
    out.push_back(std::move(matched_surface));
    i += matched;
  }
  return out;
}

MorphTriple to_morph_triple(const std::vector<std::string>& morphemes,
                            const Vocabulary& morph_vocab) {
  if (morphemes.empty()) throw std::invalid_argument("to_morph_triple: empty input");
  MorphTriple t;
  size_t n = morphemes.size();
  t.start = morph_vocab.id_of(morphemes.front());
  if (n == 1) return t;
  t.end = morph_vocab.id_of(morphemes.back());
  if (n == 2) return t;
  if (n == 3) {
    t.middle = morph_vocab.id_of(morphemes[1]);
    return t;
  }
  std::string merged;
  for (size_t i = 1; i + 1 < n; ++i) merged += morphemes[i];
  t.middle = morph_vocab.id_of(merged);
  return t;
}

std::vector<Band> band_partition(size_t vocab_size, const BandSpec& spec) {
  if (spec.bands.empty()) throw std::invalid_argument("band spec is empty");
  int prev_rank = std::numeric_limits<int>::max();
  std::vector<Band> out;
  int64_t cursor = 0;
  int64_t total = static_cast<int64_t>(vocab_size);
  for (size_t i = 0; i < spec.bands.size(); ++i) {
    auto [size, rank] = spec.bands[i];
    if (rank <= 0) throw std::invalid_argument("band rank must be positive");
    if (rank > prev_rank) {
      throw std::invalid_argument("band ranks must be non-increasing");
    }
    prev_rank = rank;
    int64_t band_size;
    if (size == BandSpec::kRemainder) {
      if (i + 1 != spec.bands.size()) {
        throw std::invalid_argument("only the last band may be REMAINDER");
      }
      band_size = total - cursor;
    } else {
      band_size = size;
    }
    if (band_size <= 0 || cursor + band_size > total) {
      throw std::invalid_argument("band sizes do not fit the vocabulary size");
    }
    out.push_back({cursor, cursor + band_size, rank});
    cursor += band_size;
  }
  if (cursor != total) {
    throw std::invalid_argument("band sizes must sum to the vocabulary size");
  }
  return out;
}

BandSpec parse_band_spec(std::string_view text) {
  BandSpec spec;
  std::istringstream in{std::string(text)};
  std::string part;
  while (std::getline(in, part, ',')) {
    size_t colon = part.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("band spec entry needs size:rank, got: " + part);
    }
    std::string size_str = part.substr(0, colon);
    int rank = std::stoi(part.substr(colon + 1));
    int64_t size = (size_str == "rest" || size_str == "remainder")
                       ? BandSpec::kRemainder
                       : std::stoll(size_str);
    spec.bands.emplace_back(size, rank);
  }
  if (spec.bands.empty()) throw std::invalid_argument("empty band spec");
  return spec;
}

std::string band_spec_to_string(const BandSpec& spec) {
  std::ostringstream out;
  for (size_t i = 0; i < spec.bands.size(); ++i) {
    if (i) out << ',';
    if (spec.bands[i].first == BandSpec::kRemainder) {
      out << "rest";
    } else {
      out << spec.bands[i].first;
    }
    out << ':' << spec.bands[i].second;
  }
  return out.str();
}

WordFeatures encode_word(std::string_view word, const VocabSet& vocabs,
                         const SegmenterLexicon& lexicon, int max_syllables) {
  WordFeatures f;
  std::vector<hangul::Codepoint> sylls = hangul::syllabify(word);
  f.syllable_ids.assign(static_cast<size_t>(max_syllables), Vocabulary::kPad);
  for (size_t i = 0; i < sylls.size() && i < static_cast<size_t>(max_syllables); ++i) {
    f.syllable_ids[i] = vocabs.syllable.id_of(hangul::encode_utf8(sylls[i]));
  }
  std::vector<hangul::Codepoint> jamo = hangul::jamo_expansion(word);
  size_t max_jamo = static_cast<size_t>(max_syllables) * 3;
  f.jamo_ids.assign(max_jamo, Vocabulary::kPad);
  for (size_t i = 0; i < jamo.size() && i < max_jamo; ++i) {
    f.jamo_ids[i] = vocabs.jamo.id_of(hangul::encode_utf8(jamo[i]));
  }
  f.morphs = to_morph_triple(segment_morphemes(word, lexicon), vocabs.morph);
  f.word_id = vocabs.word.id_of(word);
  return f;
}

WordFeatures bos_features(int max_syllables) {
  WordFeatures f;
  f.syllable_ids.assign(static_cast<size_t>(max_syllables), Vocabulary::kPad);
  f.syllable_ids[0] = Vocabulary::kBos;
  f.jamo_ids.assign(static_cast<size_t>(max_syllables) * 3, Vocabulary::kPad);
  f.jamo_ids[0] = Vocabulary::kBos;
  f.morphs = {Vocabulary::kBos, Vocabulary::kNone, Vocabulary::kNone};
  f.word_id = Vocabulary::kBos;
  return f;
}

namespace {

// Splits a token on a single unescaped separator; doubled separators are
// literals.
std::pair<std::string, std::optional<std::string>> split_escaped(
    const std::string& token, char sep) {
  std::string left;
  for (size_t i = 0; i < token.size(); ++i) {
    if (token[i] == sep) {
      if (i + 1 < token.size() && token[i + 1] == sep) {
        left.push_back(sep);
        ++i;
      } else {
        return {left, token.substr(i + 1)};
      }
    } else {
      left.push_back(token[i]);
    }
  }
  return {left, std::nullopt};
}

std::vector<std::string> split_morph_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '+') {
      if (i + 1 < text.size() && text[i + 1] == '+') {
        cur.push_back('+');
        ++i;
      } else {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(text[i]);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Corpus parse_corpus(std::string_view text, bool annotated) {
  Corpus corpus;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> sentence;
    if (annotated) {
      for (const std::string& token : hangul::split_words(line)) {
        auto [raw_surface, seg] = split_escaped(token, '|');
        std::string surface = hangul::normalize(raw_surface);
        if (surface.empty()) continue;
        if (seg) {
          std::vector<std::string> morphs;
          for (const std::string& m : split_morph_list(*seg)) {
            std::string norm = hangul::normalize(m);
            if (!norm.empty()) morphs.push_back(std::move(norm));
          }
          if (!morphs.empty()) corpus.lexicon.annotate(surface, std::move(morphs));
        }
        sentence.push_back(std::move(surface));
      }
    } else {
      sentence = hangul::split_words(hangul::normalize(line));
    }
    corpus.word_count += sentence.size();
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

Corpus load_corpus(std::string_view path, bool annotated) {
  std::ifstream in{std::string(path), std::ios::binary};
  if (!in) throw std::runtime_error("cannot open corpus: " + std::string(path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), annotated);
}

Vocabulary build_vocab(const std::vector<std::pair<std::string, uint64_t>>& counts,
                       VocabKind kind, size_t max_size) {
  if (counts.empty()) throw std::runtime_error("cannot build a vocabulary from an empty corpus");
  return Vocabulary(kind, counts, max_size);
}

namespace {

class Counter {
 public:
  void add(const std::string& unit) {
    auto [it, inserted] = index_.emplace(unit, rows_.size());
    if (inserted) {
      rows_.emplace_back(unit, 1);
    } else {
      rows_[it->second].second += 1;
    }
  }
  std::vector<std::pair<std::string, uint64_t>> take() { return std::move(rows_); }

 private:
  std::unordered_map<std::string, size_t> index_;
  std::vector<std::pair<std::string, uint64_t>> rows_;  // first-occurrence order
};

}  // namespace

VocabSet build_vocab_set(const Corpus& corpus, const SegmenterLexicon& lexicon,
                         const VocabBuildOptions& options) {
  Counter words, morphs, sylls, jamos;
  for (const auto& sentence : corpus.sentences) {
    for (const auto& word : sentence) {
      words.add(word);
      for (const auto& m : segment_morphemes(word, lexicon)) morphs.add(m);
      for (hangul::Codepoint cp : hangul::syllabify(word)) {
        sylls.add(hangul::encode_utf8(cp));
      }
      for (hangul::Codepoint cp : hangul::jamo_expansion(word)) {
        jamos.add(hangul::encode_utf8(cp));
      }
    }
  }
  VocabSet set;
  set.word = build_vocab(words.take(), VocabKind::Word, options.max_words);
  set.morph = build_vocab(morphs.take(), VocabKind::Morpheme, options.max_morphs);
  set.syllable = build_vocab(sylls.take(), VocabKind::Syllable, options.max_syllables);
  set.jamo = build_vocab(jamos.take(), VocabKind::Jamo, options.max_jamo);
  return set;
}

}  // namespace aglm
