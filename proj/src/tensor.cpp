#include "siglqc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace siglqc {

std::uint64_t word_count(int alphabet_size, int level) {
  std::uint64_t total = 0, pw = 1;
  for (int m = 0; m <= level; ++m) {
    total += pw;
    if (m < level) {
      if (pw > (std::uint64_t(1) << 60) / alphabet_size) throw std::length_error("word count overflow");
      pw *= alphabet_size;
    }
  }
  return total;
}

std::vector<Word> enumerate_words(int alphabet_size, int level) {
  if (alphabet_size < 1) throw std::invalid_argument("alphabet_size must be >= 1");
  if (level < 0) throw std::invalid_argument("level must be >= 0");
  if (level > kMaxWordLength) throw std::length_error("level exceeds max word length");
  std::uint64_t n = word_count(alphabet_size, level);
  if (n > detail::kDenseWordCap) throw std::length_error("too many words to enumerate");
  std::vector<Word> out;
  out.reserve(n);
  for (int m = 0; m <= level; ++m) {
    std::uint64_t lvl = 1;
    for (int i = 0; i < m; ++i) lvl *= alphabet_size;
    for (std::uint64_t r = 0; r < lvl; ++r) out.push_back(unpack_word(pack_from(m, r), alphabet_size));
  }
  return out;
}

TruncatedTensor::TruncatedTensor(int alphabet_size, int level) : alphabet_(alphabet_size), level_(level) {
  if (alphabet_size < 1) throw std::invalid_argument("alphabet_size must be >= 1");
  if (level < 0 || level > kMaxWordLength) throw std::invalid_argument("bad truncation level");
}

TruncatedTensor TruncatedTensor::unit(int alphabet_size, int level, double c) {
  TruncatedTensor t(alphabet_size, level);
  if (c != 0.0) t.entries_.push_back({pack_from(0, 0), c});
  return t;
}

TruncatedTensor TruncatedTensor::from_entries(int alphabet_size, int level, std::vector<Entry> raw) {
  TruncatedTensor t(alphabet_size, level);
  std::sort(raw.begin(), raw.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
  for (std::size_t i = 0; i < raw.size();) {
    std::uint64_t k = raw[i].key;
    double c = 0.0;
    while (i < raw.size() && raw[i].key == k) c += raw[i++].c;
    if (c != 0.0 && packed_length(k) <= level) t.entries_.push_back({k, c});
  }
  return t;
}

double TruncatedTensor::coeff_key(std::uint64_t key) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, std::uint64_t k) { return e.key < k; });
  return (it != entries_.end() && it->key == key) ? it->c : 0.0;
}

double TruncatedTensor::coeff(const Word& w) const {
  if (w.size() > level_) return 0.0;
  return coeff_key(pack_word(w, alphabet_));
}

void TruncatedTensor::set(const Word& w, double c) {
  if (w.size() > level_) throw std::length_error("word exceeds truncation level");
  std::uint64_t key = pack_word(w, alphabet_);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, std::uint64_t k) { return e.key < k; });
  if (it != entries_.end() && it->key == key) {
    if (c == 0.0)
      entries_.erase(it);
    else
      it->c = c;
  } else if (c != 0.0) {
    entries_.insert(it, {key, c});
  }
}

int TruncatedTensor::max_word_length() const {
  return entries_.empty() ? 0 : packed_length(entries_.back().key);
}

namespace detail {

void check_dense_capacity(int alphabet_size, int level) {
  if (word_count(alphabet_size, level) > kDenseWordCap)
    throw std::length_error("tensor workspace too large (alphabet/level beyond supported range)");
}

DenseTensor DenseTensor::zeros(int alphabet_size, int level) {
  check_dense_capacity(alphabet_size, level);
  DenseTensor d;
  d.alphabet = alphabet_size;
  d.level = level;
  d.lv.resize(level + 1);
  std::uint64_t sz = 1;
  for (int m = 0; m <= level; ++m) {
    d.lv[m].assign(sz, 0.0);
    sz *= alphabet_size;
  }
  return d;
}

DenseTensor DenseTensor::from_sparse(const TruncatedTensor& t, int level) {
  DenseTensor d = zeros(t.alphabet_size(), level);
  for (const auto& e : t.entries()) {
    int m = packed_length(e.key);
    if (m <= level) d.lv[m][packed_rank(e.key)] = e.c;
  }
  return d;
}

TruncatedTensor DenseTensor::to_sparse() const {
  std::vector<TruncatedTensor::Entry> raw;
  for (int m = 0; m <= level; ++m)
    for (std::uint64_t r = 0; r < lv[m].size(); ++r)
      if (lv[m][r] != 0.0) raw.push_back({pack_from(m, r), lv[m][r]});
  return TruncatedTensor::from_entries(alphabet, level, std::move(raw));
}

}  // namespace detail

namespace {

void require_same_alphabet(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (a.alphabet_size() != b.alphabet_size()) throw std::invalid_argument("alphabet size mismatch");
}

// Accumulates c times the shuffle of w1 and w2 into dst (the level
// |w1|+|w2| slab), enumerating interleavings recursively and carrying the
// lexicographic rank of the partial output word.
void accumulate_shuffle(const Word& w1, const Word& w2, int i, int j, std::uint64_t rank, double c,
                        std::uint64_t alphabet, double* dst) {
  if (i == w1.size() && j == w2.size()) {
    dst[rank] += c;
    return;
  }
  if (i < w1.size()) accumulate_shuffle(w1, w2, i + 1, j, rank * alphabet + (w1[i] - 1), c, alphabet, dst);
  if (j < w2.size()) accumulate_shuffle(w1, w2, i, j + 1, rank * alphabet + (w2[j] - 1), c, alphabet, dst);
}

}  // namespace

TruncatedTensor concat(const TruncatedTensor& a, const TruncatedTensor& b, int level) {
  require_same_alphabet(a, b);
  const int A = a.alphabet_size();
  std::vector<TruncatedTensor::Entry> raw;
  std::vector<std::uint64_t> apow(kMaxWordLength + 1, 1);
  for (int m = 1; m <= kMaxWordLength; ++m) apow[m] = apow[m - 1] * A;
  for (const auto& ea : a.entries()) {
    int la = packed_length(ea.key);
    if (la > level) break;
    for (const auto& eb : b.entries()) {
      int lb = packed_length(eb.key);
      if (la + lb > level) break;
      raw.push_back({pack_from(la + lb, packed_rank(ea.key) * apow[lb] + packed_rank(eb.key)), ea.c * eb.c});
    }
  }
  return TruncatedTensor::from_entries(A, level, std::move(raw));
}

TruncatedTensor shuffle(const TruncatedTensor& a, const TruncatedTensor& b, int level) {
  require_same_alphabet(a, b);
  const int A = a.alphabet_size();
  detail::DenseTensor out = detail::DenseTensor::zeros(A, level);
  for (const auto& ea : a.entries()) {
    int la = packed_length(ea.key);
    if (la > level) break;
    Word wa = unpack_word(ea.key, A);
    for (const auto& eb : b.entries()) {
      int lb = packed_length(eb.key);
      if (la + lb > level) break;  // skipped, not computed then dropped
      Word wb = unpack_word(eb.key, A);
      accumulate_shuffle(wa, wb, 0, 0, 0, ea.c * eb.c, A, out.lv[la + lb].data());
    }
  }
  return out.to_sparse();
}

double pair(const TruncatedTensor& ell, const TruncatedTensor& g) {
  require_same_alphabet(ell, g);
  const auto& ea = ell.entries();
  const auto& eb = g.entries();
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].key < eb[j].key)
      ++i;
    else if (eb[j].key < ea[i].key)
      ++j;
    else
      s += ea[i++].c * eb[j++].c;
  }
  return s;
}

TruncatedTensor right_concat_letter(const TruncatedTensor& ell, int letter, int level) {
  const int A = ell.alphabet_size();
  if (letter < 1 || letter > A) throw std::invalid_argument("letter out of range");
  TruncatedTensor out(A, level);
  std::vector<TruncatedTensor::Entry> raw;
  raw.reserve(ell.entries().size());
  for (const auto& e : ell.entries()) {
    int m = packed_length(e.key);
    if (m + 1 > level) continue;
    raw.push_back({pack_from(m + 1, packed_rank(e.key) * A + (letter - 1)), e.c});
  }
  return TruncatedTensor::from_entries(A, level, std::move(raw));
}

GrowthEstimate growth_estimate(const TruncatedTensor& ell) {
  GrowthEstimate g;
  g.per_level_max.assign(ell.level() + 1, 0.0);
  for (const auto& e : ell.entries()) {
    int m = packed_length(e.key);
    g.per_level_max[m] = std::max(g.per_level_max[m], std::abs(e.c));
  }
  g.rate = 0.0;
  for (int m = 1; m <= ell.level(); ++m)
    if (g.per_level_max[m] > 0.0) g.rate = std::max(g.rate, std::pow(g.per_level_max[m], 1.0 / m));
  return g;
}

TruncatedTensor add(const TruncatedTensor& a, const TruncatedTensor& b) { return add_scaled(a, 1.0, b, 1.0); }

TruncatedTensor add_scaled(const TruncatedTensor& a, double alpha, const TruncatedTensor& b, double beta) {
  require_same_alphabet(a, b);
  int level = std::max(a.level(), b.level());
  std::vector<TruncatedTensor::Entry> raw;
  raw.reserve(a.entries().size() + b.entries().size());
  for (const auto& e : a.entries()) raw.push_back({e.key, alpha * e.c});
  for (const auto& e : b.entries()) raw.push_back({e.key, beta * e.c});
  return TruncatedTensor::from_entries(a.alphabet_size(), level, std::move(raw));
}

TruncatedTensor scale(const TruncatedTensor& a, double c) {
  std::vector<TruncatedTensor::Entry> raw;
  if (c != 0.0) {
    raw.reserve(a.entries().size());
    for (const auto& e : a.entries()) raw.push_back({e.key, c * e.c});
  }
  return TruncatedTensor::from_entries(a.alphabet_size(), a.level(), std::move(raw));
}

TruncatedTensor time_word_tensor(int alphabet_size, int level, int m) {
  if (m > level) throw std::length_error("time word exceeds level");
  TruncatedTensor t(alphabet_size, level);
  Word w;
  for (int i = 0; i < m; ++i) w.push_back(1);
  t.set(w, 1.0);
  return t;
}

std::string tensor_to_text(const TruncatedTensor& t) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& e : t.entries()) os << t.word_of(e).to_string() << '\t' << e.c << '\n';
  return os.str();
}

TruncatedTensor tensor_from_text(const std::string& text, int alphabet_size, int level) {
  TruncatedTensor t(alphabet_size, level);
  std::istringstream is(text);
  std::string line;
  std::vector<TruncatedTensor::Entry> raw;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("bad tensor line: " + line);
    Word w = Word::from_string(line.substr(0, tab));
    double c = std::stod(line.substr(tab + 1));
    raw.push_back({pack_word(w, alphabet_size), c});
  }
  return TruncatedTensor::from_entries(alphabet_size, level, std::move(raw));
}

}  // namespace siglqc
