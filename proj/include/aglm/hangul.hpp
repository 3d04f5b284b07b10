#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aglm::hangul {

using Codepoint = char32_t;

constexpr Codepoint kSyllableBase = 0xAC00;
constexpr Codepoint kSyllableLast = 0xD7A3;
constexpr int kLeadCount = 19;
constexpr int kVowelCount = 21;
constexpr int kTailCount = 28;  // index 0 = no tail

// Conjoining jamo blocks used when expanding a syllable to keystrokes.
constexpr Codepoint kLeadBase = 0x1100;
constexpr Codepoint kVowelBase = 0x1161;
constexpr Codepoint kTailBase = 0x11A7;  // tail index t maps to kTailBase + t, t >= 1

struct JamoTriple {
  int lead = 0;   // 0..18
  int vowel = 0;  // 0..20
  int tail = 0;   // 0..27, 0 = no tail

  bool operator==(const JamoTriple&) const = default;
};

bool is_syllable(Codepoint cp);
bool is_lead_jamo(Codepoint cp);
bool is_vowel_jamo(Codepoint cp);
bool is_tail_jamo(Codepoint cp);

// Arithmetic decomposition of a precomposed syllable. Throws
// std::invalid_argument for non-Hangul input.
JamoTriple decompose_jamo(Codepoint syllable);

// Inverse of decompose_jamo. Throws std::out_of_range for bad indices.
Codepoint compose_jamo(const JamoTriple& triple);

// UTF-8 decode with validation. Throws aglm::hangul::DecodeError naming the
// byte offset of the first malformed sequence.
struct DecodeError : std::runtime_error {
  size_t byte_offset;
  explicit DecodeError(size_t offset);
};

std::vector<Codepoint> decode_utf8(std::string_view text);
std::string encode_utf8(const std::vector<Codepoint>& cps);
std::string encode_utf8(Codepoint cp);

// NFC for the Hangul range (composes conjoining jamo runs into precomposed
// syllables) plus whitespace cleanup: runs of whitespace collapse to a single
// space, leading/trailing whitespace removed. Non-Hangul text passes through.
std::string normalize(std::string_view text);

// Maximal non-whitespace runs, in order.
std::vector<std::string> split_words(std::string_view sentence);

// One unit per Unicode scalar; Hangul syllables and everything else alike.
std::vector<Codepoint> syllabify(std::string_view word);

// Keystroke expansion: each Hangul syllable becomes its 2-3 conjoining jamo,
// every other codepoint stays as-is.
std::vector<Codepoint> jamo_expansion(std::string_view word);

// Number of key presses to type the word on a vanilla keyboard.
size_t jamo_keystrokes(std::string_view word);

}  // namespace aglm::hangul
