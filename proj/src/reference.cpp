#include "siglqc/reference.hpp"

#include <cmath>

namespace siglqc::reference {

TruncatedTensor shuffle(const TruncatedTensor& a, const TruncatedTensor& b, int level) {
  if (a.alphabet_size() != b.alphabet_size()) throw std::invalid_argument("alphabet size mismatch");
  const int A = a.alphabet_size();
  std::vector<TruncatedTensor::Entry> raw;
  for (const Word& w : enumerate_words(A, level)) {
    const int m = w.size();
    double c = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      Word left, right;
      for (int i = 0; i < m; ++i)
        (mask & (1u << i)) ? left.push_back(w[i]) : right.push_back(w[i]);
      c += a.coeff(left) * b.coeff(right);
    }
    if (c != 0.0) raw.push_back({pack_word(w, A), c});
  }
  return TruncatedTensor::from_entries(A, level, std::move(raw));
}

TruncatedTensor signature_of_path(const SampledPath& path, int level) {
  path.validate();
  const int A = path.dim + 1;
  TruncatedTensor sig = TruncatedTensor::unit(A, level);
  for (int i = 1; i < path.samples(); ++i) {
    TruncatedTensor delta(A, 1);
    delta.set(Word{1}, path.times[i] - path.times[i - 1]);
    for (int d = 0; d < path.dim; ++d) delta.set(Word{d + 2}, path.value(i, d) - path.value(i - 1, d));
    TruncatedTensor seg = TruncatedTensor::unit(A, level);
    TruncatedTensor power = TruncatedTensor::unit(A, level);
    for (int m = 1; m <= level; ++m) {
      power = scale(concat(power, delta, level), 1.0 / m);
      seg = add(seg, power);
    }
    sig = concat(sig, seg, level);
  }
  return sig;
}

ExpectedSignatureEstimate mc_expected_signature(const std::vector<SampledPath>& paths, int level) {
  if (paths.size() < 2) throw std::invalid_argument("need at least 2 paths");
  const int A = paths.front().dim + 1;
  const std::uint64_t nwords = word_count(A, level);
  std::vector<double> sum(nwords, 0.0), sq(nwords, 0.0);
  for (const auto& p : paths) {
    SignatureState sig = siglqc::signature_of_path(p, level);
    std::size_t idx = 0;
    for (int m = 0; m <= level; ++m)
      for (double v : sig.dense().lv[m]) {
        sum[idx] += v;
        sq[idx] += v * v;
        ++idx;
      }
  }
  const double n = static_cast<double>(paths.size());
  detail::DenseTensor mean = detail::DenseTensor::zeros(A, level);
  detail::DenseTensor se = detail::DenseTensor::zeros(A, level);
  std::size_t idx = 0;
  for (int m = 0; m <= level; ++m)
    for (std::size_t r = 0; r < mean.lv[m].size(); ++r, ++idx) {
      double mu = sum[idx] / n;
      double var = (sq[idx] - n * mu * mu) / (n - 1.0);
      mean.lv[m][r] = mu;
      se.lv[m][r] = var > 0.0 ? std::sqrt(var / n) : 0.0;
    }
  return {mean.to_sparse(), se.to_sparse()};
}

MCEstimate estimate_cost(const LQModel& model, const CostSpec& cost, const ControlPolicy& control,
                         const std::vector<SampledPath>& paths) {
  double sum = 0.0, sumsq = 0.0;
  std::int64_t ok = 0;
  for (const auto& path : paths) {
    Trajectory traj = simulate_state(model, control, path);
    if (!traj.finite) continue;
    double run = 0.0, prev = 0.0;
    for (int i = 0; i < traj.states.rows(); ++i) {
      double t = traj.times[i];
      Eigen::VectorXd x = traj.states.row(i), u = traj.controls.row(i);
      double f = x.dot(cost.A_at(t) * x) + u.dot(cost.B_at(t) * u) + 2.0 * cost.C_at(t).dot(x) +
                 2.0 * cost.D_at(t).dot(u);
      if (i > 0) run += 0.5 * (prev + f) * (t - traj.times[i - 1]);
      prev = f;
    }
    Eigen::VectorXd xT = traj.states.row(traj.states.rows() - 1);
    double total = run + xT.dot(cost.E * xT) + 2.0 * cost.G.dot(xT);
    sum += total;
    sumsq += total * total;
    ++ok;
  }
  return MCEstimate::from_sums(sum, sumsq, ok);
}

}  // namespace siglqc::reference
