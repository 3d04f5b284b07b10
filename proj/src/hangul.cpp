#include "aglm/hangul.hpp"

#include <cctype>
#include <stdexcept>

namespace aglm::hangul {

bool is_syllable(Codepoint cp) {
  return cp >= kSyllableBase && cp <= kSyllableLast;
}

bool is_lead_jamo(Codepoint cp) {
  return cp >= kLeadBase && cp < kLeadBase + kLeadCount;
}

bool is_vowel_jamo(Codepoint cp) {
  return cp >= kVowelBase && cp < kVowelBase + kVowelCount;
}

bool is_tail_jamo(Codepoint cp) {
  return cp > kTailBase && cp < kTailBase + kTailCount;
}

JamoTriple decompose_jamo(Codepoint syllable) {
  if (!is_syllable(syllable)) {
    throw std::invalid_argument("decompose_jamo: not a precomposed Hangul syllable");
  }
  int index = static_cast<int>(syllable - kSyllableBase);
  JamoTriple t;
  t.tail = index % kTailCount;
  t.vowel = (index / kTailCount) % kVowelCount;
  t.lead = index / (kTailCount * kVowelCount);
  return t;
}

Codepoint compose_jamo(const JamoTriple& t) {
  if (t.lead < 0 || t.lead >= kLeadCount || t.vowel < 0 || t.vowel >= kVowelCount ||
      t.tail < 0 || t.tail >= kTailCount) {
    throw std::out_of_range("compose_jamo: jamo index out of range");
  }
  return kSyllableBase +
         static_cast<Codepoint>((t.lead * kVowelCount + t.vowel) * kTailCount + t.tail);
}

DecodeError::DecodeError(size_t offset)
    : std::runtime_error("malformed UTF-8 at byte offset " + std::to_string(offset)),
      byte_offset(offset) {}

std::vector<Codepoint> decode_utf8(std::string_view text) {
  std::vector<Codepoint> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    size_t len;
    Codepoint cp;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw DecodeError(i);
    }
    if (i + len > text.size()) throw DecodeError(i);
    for (size_t k = 1; k < len; ++k) {
      unsigned char b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) throw DecodeError(i);
      cp = (cp << 6) | (b & 0x3F);
    }
    // reject overlong forms and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      throw DecodeError(i);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(Codepoint cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode_utf8(const std::vector<Codepoint>& cps) {
  std::string out;
  for (Codepoint cp : cps) out += encode_utf8(cp);
  return out;
}

namespace {

bool is_space_cp(Codepoint cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n' || cp == U'\f' ||
         cp == U'\v';
}

// Hangul composition pass of NFC: L V -> LV, LV T -> LVT.
std::vector<Codepoint> compose_hangul_runs(const std::vector<Codepoint>& cps) {
  std::vector<Codepoint> out;
  out.reserve(cps.size());
  for (Codepoint cp : cps) {
    if (!out.empty()) {
      Codepoint prev = out.back();
      if (is_lead_jamo(prev) && is_vowel_jamo(cp)) {
        JamoTriple t{static_cast<int>(prev - kLeadBase),
                     static_cast<int>(cp - kVowelBase), 0};
        out.back() = compose_jamo(t);
        continue;
      }
      if (is_syllable(prev) && is_tail_jamo(cp)) {
        JamoTriple t = decompose_jamo(prev);
        if (t.tail == 0) {
          t.tail = static_cast<int>(cp - kTailBase);
          out.back() = compose_jamo(t);
          continue;
        }
      }
    }
    out.push_back(cp);
  }
  return out;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::vector<Codepoint> cps = compose_hangul_runs(decode_utf8(text));
  std::vector<Codepoint> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (Codepoint cp : cps) {
    if (is_space_cp(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

std::vector<std::string> split_words(std::string_view sentence) {
  std::vector<std::string> words;
  std::vector<Codepoint> cps = decode_utf8(sentence);
  std::vector<Codepoint> cur;
  for (Codepoint cp : cps) {
    if (is_space_cp(cp)) {
      if (!cur.empty()) {
        words.push_back(encode_utf8(cur));
        cur.clear();
      }
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) words.push_back(encode_utf8(cur));
  return words;
}

std::vector<Codepoint> syllabify(std::string_view word) {
  return decode_utf8(word);
}

std::vector<Codepoint> jamo_expansion(std::string_view word) {
  std::vector<Codepoint> out;
  for (Codepoint cp : decode_utf8(word)) {
    if (is_syllable(cp)) {
      JamoTriple t = decompose_jamo(cp);
      out.push_back(kLeadBase + static_cast<Codepoint>(t.lead));
      out.push_back(kVowelBase + static_cast<Codepoint>(t.vowel));
      if (t.tail != 0) out.push_back(kTailBase + static_cast<Codepoint>(t.tail));
    } else {
      out.push_back(cp);
    }
  }
  return out;
}

size_t jamo_keystrokes(std::string_view word) {
  return jamo_expansion(word).size();
}

}  // namespace aglm::hangul
