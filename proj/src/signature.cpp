#include "siglqc/signature.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "siglqc/parallel.hpp"

namespace siglqc {

void SampledPath::validate() const {
  if (times.size() < 2) throw std::invalid_argument("path needs at least 2 samples");
  if (values.size() != times.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("times/values length mismatch");
  if (times[0] != 0.0) throw std::invalid_argument("path must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("times must be strictly increasing");
}

SignatureState::SignatureState(int driver_dim, int level)
    : dim_(driver_dim), level_(level), time_(0.0), tensor_(detail::DenseTensor::zeros(driver_dim + 1, level)) {
  if (driver_dim < 0) throw std::invalid_argument("driver dimension must be >= 0");
  tensor_.lv[0][0] = 1.0;
  seg_.resize(level + 1);
  std::size_t sz = 1;
  for (int m = 0; m <= level; ++m) {
    seg_[m].assign(sz, 0.0);
    sz *= alphabet_size();
  }
}

void SignatureState::advance(double dt, std::span<const double> dw) {
  if (!(dt > 0.0)) throw std::invalid_argument("chen step requires dt > 0");
  if (static_cast<int>(dw.size()) != dim_) throw std::invalid_argument("increment dimension mismatch");
  const int A = alphabet_size();
  const int L = level_;

  // Exponential of the level-1 increment: seg_[m] = delta^{(x)m} / m!.
  if (L >= 1) {
    seg_[1][0] = dt;
    for (int d = 0; d < dim_; ++d) seg_[1][d + 1] = dw[d];
  }
  seg_[0][0] = 1.0;
  for (int m = 2; m <= L; ++m) {
    const auto& prev = seg_[m - 1];
    auto& cur = seg_[m];
    const double inv = 1.0 / m;
    std::size_t idx = 0;
    for (double p : prev)
      for (int j = 0; j < A; ++j) cur[idx++] = p * seg_[1][j] * inv;
  }

  // In-place concatenation, highest level first; both factors have a unit
  // empty-word coefficient.
  for (int level = L; level >= 1; --level) {
    auto& dest = tensor_.lv[level];
    for (int mylevel = level - 1; mylevel >= 1; --mylevel) {
      const auto& mine = tensor_.lv[mylevel];
      const auto& oth = seg_[level - mylevel];
      std::size_t idx = 0;
      for (double mv : mine)
        for (double ov : oth) dest[idx++] += mv * ov;
    }
    const auto& oth = seg_[level];
    for (std::size_t i = 0; i < dest.size(); ++i) dest[i] += oth[i];
  }
  time_ += dt;
}

double SignatureState::coeff(const Word& w) const {
  if (w.size() > level_) return 0.0;
  std::uint64_t key = pack_word(w, alphabet_size());
  return tensor_.lv[packed_length(key)][packed_rank(key)];
}

SignatureState chen_step(const SignatureState& state, double dt, std::span<const double> dw) {
  SignatureState next = state;
  next.advance(dt, dw);
  return next;
}

SignatureState signature_of_path(const SampledPath& path, int level) {
  path.validate();
  SignatureState sig(path.dim, level);
  std::vector<double> dw(path.dim);
  for (int i = 1; i < path.samples(); ++i) {
    double dt = path.times[i] - path.times[i - 1];
    for (int d = 0; d < path.dim; ++d) dw[d] = path.value(i, d) - path.value(i - 1, d);
    sig.advance(dt, dw);
  }
  return sig;
}

double pair(const TruncatedTensor& ell, const SignatureState& sig) {
  if (ell.alphabet_size() != sig.alphabet_size()) throw std::invalid_argument("alphabet size mismatch");
  double s = 0.0;
  for (const auto& e : ell.entries()) {
    int m = packed_length(e.key);
    if (m > sig.level()) break;
    s += e.c * sig.dense().lv[m][packed_rank(e.key)];
  }
  return s;
}

PairingPlan::PairingPlan(const TruncatedTensor& t, int max_level) {
  for (const auto& e : t.entries()) {
    int m = packed_length(e.key);
    if (m <= max_level) terms_.push_back({m, packed_rank(e.key), e.c});
  }
}

double PairingPlan::eval(const detail::DenseTensor& d) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.c * d.lv[t.level][t.rank];
  return s;
}

TruncatedTensor fawcett_expected_signature(double T, int D, int level) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  const int A = D + 1;
  TruncatedTensor g(A, std::min(level, 2));
  if (level >= 1) g.set(Word{1}, 1.0);
  if (level >= 2)
    for (int d = 2; d <= A; ++d) g.set(Word{d, d}, 0.5);
  TruncatedTensor result = TruncatedTensor::unit(A, level);
  TruncatedTensor power = TruncatedTensor::unit(A, level);
  for (int n = 1; n <= level; ++n) {
    power = scale(concat(power, g, level), T / n);
    if (power.is_zero()) break;
    result = add(result, power);
  }
  return result;
}

ExpectedSignatureEstimate mc_expected_signature(const std::vector<SampledPath>& paths, int level,
                                                int workers) {
  if (paths.size() < 2) throw std::invalid_argument("need at least 2 paths");
  const auto& grid = paths.front().times;
  for (const auto& p : paths) {
    if (p.dim != paths.front().dim) throw std::invalid_argument("path dimension mismatch");
    if (p.times != grid) throw std::invalid_argument("paths must share one time grid");
  }
  const int dim = paths.front().dim;
  const std::int64_t n = static_cast<std::int64_t>(paths.size());
  const std::uint64_t nwords = word_count(dim + 1, level);

  const std::int64_t nblocks = reduction_block_count(n);
  std::vector<std::vector<double>> bsum(nblocks), bsq(nblocks);

  parallel_for_index(nblocks, workers, [&](std::int64_t b) {
    std::vector<double> sum(nwords, 0.0), sq(nwords, 0.0);
    const std::int64_t lo = b * kReductionBlock, hi = std::min(n, lo + kReductionBlock);
    for (std::int64_t i = lo; i < hi; ++i) {
      SignatureState sig = signature_of_path(paths[i], level);
      std::size_t idx = 0;
      for (int m = 0; m <= level; ++m)
        for (double v : sig.dense().lv[m]) {
          sum[idx] += v;
          sq[idx] += v * v;
          ++idx;
        }
    }
    bsum[b] = std::move(sum);
    bsq[b] = std::move(sq);
  });

  std::vector<double> sum(nwords, 0.0), sq(nwords, 0.0);
  for (std::int64_t b = 0; b < nblocks; ++b)
    for (std::uint64_t i = 0; i < nwords; ++i) {
      sum[i] += bsum[b][i];
      sq[i] += bsq[b][i];
    }

  detail::DenseTensor mean = detail::DenseTensor::zeros(dim + 1, level);
  detail::DenseTensor se = detail::DenseTensor::zeros(dim + 1, level);
  std::size_t idx = 0;
  const double dn = static_cast<double>(n);
  for (int m = 0; m <= level; ++m)
    for (std::size_t r = 0; r < mean.lv[m].size(); ++r, ++idx) {
      double mu = sum[idx] / dn;
      double var = (sq[idx] - dn * mu * mu) / (dn - 1.0);
      mean.lv[m][r] = mu;
      se.lv[m][r] = var > 0.0 ? std::sqrt(var / dn) : 0.0;
    }
  return {mean.to_sparse(), se.to_sparse()};
}

void write_path_csv(std::ostream& os, const SampledPath& path) {
  os << 't';
  for (int d = 1; d <= path.dim; ++d) os << ",w" << d;
  os << '\n';
  os.precision(17);
  for (int i = 0; i < path.samples(); ++i) {
    os << path.times[i];
    for (int d = 0; d < path.dim; ++d) os << ',' << path.value(i, d);
    os << '\n';
  }
}

SampledPath read_path_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("empty path CSV");
  int dim = 0;
  for (char c : line)
    if (c == ',') ++dim;
  SampledPath p;
  p.dim = dim;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',')) throw std::invalid_argument("bad path CSV row");
    p.times.push_back(std::stod(cell));
    for (int d = 0; d < dim; ++d) {
      if (!std::getline(row, cell, ',')) throw std::invalid_argument("bad path CSV row");
      p.values.push_back(std::stod(cell));
    }
  }
  p.validate();
  return p;
}

}  // namespace siglqc
