#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace siglqc {

// A letter over the alphabet {1, ..., D+1}.  Letter 1 is the time component;
// letter d+1 carries the d-th driver coordinate.
using Letter = std::uint8_t;

inline constexpr int kMaxWordLength = 19;

// A word indexes one iterated-integral coordinate.  The empty word is valid
// and acts as the unit of both the concatenation and shuffle products.
class Word {
 public:
  Word() = default;

  Word(std::initializer_list<int> letters) {
    for (int l : letters) push_back(l);
  }

  // Parses a digit string such as "121"; "e" (or "") denotes the empty word.
  static Word from_string(std::string_view digits) {
    Word w;
    if (digits == "e") return w;
    for (char c : digits) {
      if (c < '1' || c > '9') throw std::invalid_argument("word digit out of range: " + std::string(digits));
      w.push_back(c - '0');
    }
    return w;
  }

  int size() const { return size_; }
  bool empty() const { return size_ == 0; }

  Letter operator[](int i) const { return letters_[i]; }
  Letter back() const { return letters_[size_ - 1]; }

  void push_back(int letter) {
    if (letter < 1 || letter > 255) throw std::invalid_argument("letter out of range");
    if (size_ >= kMaxWordLength) throw std::length_error("word too long");
    letters_[size_++] = static_cast<Letter>(letter);
  }

  Word append(int letter) const {
    Word w = *this;
    w.push_back(letter);
    return w;
  }

  // The word without its last letter.
  Word parent() const {
    Word w = *this;
    if (w.size_ == 0) throw std::logic_error("empty word has no parent");
    --w.size_;
    return w;
  }

  // Rendered as a digit string; the empty word prints as "e".
  std::string to_string() const {
    if (size_ == 0) return "e";
    std::string s;
    s.reserve(size_);
    for (int i = 0; i < size_; ++i) s.push_back('0' + letters_[i]);
    return s;
  }

  friend bool operator==(const Word& a, const Word& b) {
    if (a.size_ != b.size_) return false;
    for (int i = 0; i < a.size_; ++i)
      if (a.letters_[i] != b.letters_[i]) return false;
    return true;
  }

 private:
  std::array<Letter, kMaxWordLength> letters_{};
  std::uint8_t size_ = 0;
};

// Packed key: length tag in the high bits, base-(alphabet) digits below, the
// first letter most significant.  Numeric key order is exactly the canonical
// (length, lexicographic) order.
inline std::uint64_t pack_word(const Word& w, int alphabet_size) {
  std::uint64_t r = 0;
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] > alphabet_size) throw std::invalid_argument("letter exceeds alphabet");
    r = r * static_cast<std::uint64_t>(alphabet_size) + (w[i] - 1);
  }
  return (static_cast<std::uint64_t>(w.size()) << 56) | r;
}

inline int packed_length(std::uint64_t key) { return static_cast<int>(key >> 56); }

// Lexicographic rank within the key's own level.
inline std::uint64_t packed_rank(std::uint64_t key) { return key & ((std::uint64_t(1) << 56) - 1); }

inline Word unpack_word(std::uint64_t key, int alphabet_size) {
  int len = packed_length(key);
  std::uint64_t r = packed_rank(key);
  Word w;
  std::array<Letter, kMaxWordLength> tmp{};
  for (int i = len - 1; i >= 0; --i) {
    tmp[i] = static_cast<Letter>(r % alphabet_size + 1);
    r /= alphabet_size;
  }
  for (int i = 0; i < len; ++i) w.push_back(tmp[i]);
  return w;
}

inline std::uint64_t pack_from(int length, std::uint64_t rank) {
  return (static_cast<std::uint64_t>(length) << 56) | rank;
}

// Canonical (length, lexicographic) order.
inline bool canonical_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

// All words of length <= level in canonical order.
std::vector<Word> enumerate_words(int alphabet_size, int level);

// Number of words of length <= level: sum of alphabet_size^m.
std::uint64_t word_count(int alphabet_size, int level);

}  // namespace siglqc
