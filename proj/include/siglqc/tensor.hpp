#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "siglqc/word.hpp"

namespace siglqc {

// Sparse truncated tensor: a map from words of length <= level to real
// coefficients, stored as a flat vector sorted by packed key (canonical
// order).  Absent words are zero.  Values are immutable once shared;
// operations never mutate their inputs.
class TruncatedTensor {
 public:
  struct Entry {
    std::uint64_t key;
    double c;
  };

  TruncatedTensor(int alphabet_size, int level);

  static TruncatedTensor unit(int alphabet_size, int level, double c = 1.0);

  // Builds from unsorted, possibly duplicated raw entries; duplicates are
  // summed and exact zeros dropped.
  static TruncatedTensor from_entries(int alphabet_size, int level, std::vector<Entry> raw);

  int alphabet_size() const { return alphabet_; }
  int level() const { return level_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool is_zero() const { return entries_.empty(); }

  double coeff(const Word& w) const;
  double coeff_key(std::uint64_t key) const;

  // Builder-style insert (overwrites); intended for construction before the
  // value is shared.
  void set(const Word& w, double c);

  Word word_of(const Entry& e) const { return unpack_word(e.key, alphabet_); }

  // Maximum stored word length (0 for the zero tensor).
  int max_word_length() const;

  friend bool operator==(const TruncatedTensor& a, const TruncatedTensor& b) {
    return a.alphabet_ == b.alphabet_ && a.entries_ == b.entries_;
  }
  friend bool operator==(const Entry& a, const Entry& b) { return a.key == b.key && a.c == b.c; }

 private:
  int alphabet_;
  int level_;
  std::vector<Entry> entries_;
};

struct GrowthEstimate {
  std::vector<double> per_level_max;  // index m = word length, 0..level
  double rate = 0.0;                  // max over m >= 1 of per_level_max[m]^(1/m)
};

// Concatenation (tensor) product, truncated at `level`.
TruncatedTensor concat(const TruncatedTensor& a, const TruncatedTensor& b, int level);

// Shuffle product, truncated at `level`.  Word pairs whose combined length
// exceeds `level` are skipped before any interleaving is generated.
TruncatedTensor shuffle(const TruncatedTensor& a, const TruncatedTensor& b, int level);

// Hilbert-Schmidt pairing: sum over common words of coefficient products.
double pair(const TruncatedTensor& ell, const TruncatedTensor& g);

// Appends `letter` to every stored word; words exceeding `level` are dropped.
TruncatedTensor right_concat_letter(const TruncatedTensor& ell, int letter, int level);

GrowthEstimate growth_estimate(const TruncatedTensor& ell);

TruncatedTensor add(const TruncatedTensor& a, const TruncatedTensor& b);
TruncatedTensor add_scaled(const TruncatedTensor& a, double alpha, const TruncatedTensor& b, double beta);
TruncatedTensor scale(const TruncatedTensor& a, double c);

// The tensor 1^{(x)m}: coefficient 1 on the m-fold repeat of the time letter.
TruncatedTensor time_word_tensor(int alphabet_size, int level, int m);

// Text serialization: one line per word, "word<TAB>coefficient", the empty
// word rendered as "e", in canonical order.
std::string tensor_to_text(const TruncatedTensor& t);
TruncatedTensor tensor_from_text(const std::string& text, int alphabet_size, int level);

namespace detail {

// Dense per-level workspace used by the product kernels and the streaming
// signature.  lv[m] holds alphabet^m coefficients in lexicographic rank order.
struct DenseTensor {
  int alphabet = 0;
  int level = 0;
  std::vector<std::vector<double>> lv;

  static DenseTensor zeros(int alphabet_size, int level);
  static DenseTensor from_sparse(const TruncatedTensor& t, int level);
  TruncatedTensor to_sparse() const;
};

// Total dense size guard for kernel workspaces.
inline constexpr std::uint64_t kDenseWordCap = std::uint64_t(1) << 24;

void check_dense_capacity(int alphabet_size, int level);

}  // namespace detail

}  // namespace siglqc
