#include "siglqc/lq_model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "siglqc/errors.hpp"

namespace siglqc {

namespace {

double poly_eval(double t, int degree, const Eigen::MatrixXd* Ms, Eigen::MatrixXd& out) {
  out = Ms[0];
  double f = 1.0;
  for (int m = 1; m <= degree; ++m) {
    f *= t / m;
    out += f * Ms[m];
  }
  return f;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void LQModel::validate() const {
  require(N >= 1 && K >= 1 && D >= 1, "dimensions N, K, D must be >= 1");
  require(T > 0.0, "horizon T must be positive");
  require(x0.size() == N, "x0 must have N entries");
  require(b0.size() == N, "b0 must have N entries");
  require(b1.rows() == N && b1.cols() == K, "b1 must be N x K");
  require(b2.rows() == N && b2.cols() == N, "b2 must be N x N");
  require(sigma0.rows() == N && sigma0.cols() == D, "sigma0 must be N x D");
  require(static_cast<int>(sigma2.size()) == D, "sigma2 must have D slices");
  for (const auto& s : sigma2) require(s.rows() == N && s.cols() == N, "sigma2 slices must be N x N");
  auto finite = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
  require(finite(x0) && finite(b0) && finite(b1) && finite(b2) && finite(sigma0), "non-finite model entry");
  for (const auto& s : sigma2) require(finite(s), "non-finite sigma2 entry");
}

Eigen::MatrixXd CostSpec::A_at(double t) const {
  Eigen::MatrixXd out;
  poly_eval(t, degree, A.data(), out);
  return out;
}
Eigen::MatrixXd CostSpec::B_at(double t) const {
  Eigen::MatrixXd out;
  poly_eval(t, degree, B.data(), out);
  return out;
}
Eigen::VectorXd CostSpec::C_at(double t) const {
  Eigen::VectorXd out = C[0];
  double f = 1.0;
  for (int m = 1; m <= degree; ++m) {
    f *= t / m;
    out += f * C[m];
  }
  return out;
}
Eigen::VectorXd CostSpec::D_at(double t) const {
  Eigen::VectorXd out = D[0];
  double f = 1.0;
  for (int m = 1; m <= degree; ++m) {
    f *= t / m;
    out += f * D[m];
  }
  return out;
}

void CostSpec::validate(int N, int K) const {
  require(degree >= 0, "cost degree must be >= 0");
  require(static_cast<int>(A.size()) == degree + 1, "A must have degree+1 matrices");
  require(static_cast<int>(B.size()) == degree + 1, "B must have degree+1 matrices");
  require(static_cast<int>(C.size()) == degree + 1, "C must have degree+1 vectors");
  require(static_cast<int>(D.size()) == degree + 1, "D must have degree+1 vectors");
  for (const auto& m : A) {
    require(m.rows() == N && m.cols() == N, "A_m must be N x N");
    require(m.isApprox(m.transpose(), 1e-12), "A_m must be symmetric");
  }
  for (const auto& m : B) {
    require(m.rows() == K && m.cols() == K, "B_m must be K x K");
    require(m.isApprox(m.transpose(), 1e-12), "B_m must be symmetric");
  }
  for (const auto& v : C) require(v.size() == N, "C_m must have N entries");
  for (const auto& v : D) require(v.size() == K, "D_m must have K entries");
  require(E.rows() == N && E.cols() == N, "E must be N x N");
  require(E.isApprox(E.transpose(), 1e-12), "E must be symmetric");
  require(G.size() == N, "G must have N entries");
}

PositivityReport check_cost_positivity(const CostSpec& cost, double T) {
  PositivityReport rep;
  rep.min_eig_A = std::numeric_limits<double>::infinity();
  rep.min_eig_B = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    double t = T * i / 100.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(cost.A_at(t), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(cost.B_at(t), Eigen::EigenvaluesOnly);
    rep.min_eig_A = std::min(rep.min_eig_A, ea.eigenvalues().minCoeff());
    rep.min_eig_B = std::min(rep.min_eig_B, eb.eigenvalues().minCoeff());
  }
  rep.a_psd = rep.min_eig_A >= -1e-12;
  rep.b_pd = rep.min_eig_B > 1e-12;
  return rep;
}

namespace {

using nlohmann::json;

Eigen::VectorXd parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(name + " must be a 2-d array");
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw ConfigError(name + " has ragged rows");
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

LQProblem parse_problem(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!j.contains("model") || !j.contains("cost")) throw ConfigError("problem file needs model and cost objects");
  const json& jm = j["model"];
  const json& jc = j["cost"];
  LQProblem p;
  try {
    p.model.N = jm.at("N").get<int>();
    p.model.K = jm.at("K").get<int>();
    p.model.D = jm.at("D").get<int>();
    p.model.T = jm.at("T").get<double>();
    p.model.x0 = parse_vector(jm.at("x0"), "x0");
    p.model.b0 = parse_vector(jm.at("b0"), "b0");
    p.model.b1 = parse_matrix(jm.at("b1"), "b1");
    p.model.b2 = parse_matrix(jm.at("b2"), "b2");
    p.model.sigma0 = parse_matrix(jm.at("sigma0"), "sigma0");
    const json& s2 = jm.at("sigma2");
    if (!s2.is_array() || static_cast<int>(s2.size()) != p.model.N)
      throw ConfigError("sigma2 must be an N x D x N array");
    p.model.sigma2.assign(p.model.D, Eigen::MatrixXd::Zero(p.model.N, p.model.N));
    for (int n = 0; n < p.model.N; ++n) {
      Eigen::MatrixXd slice = parse_matrix(s2[n], "sigma2");  // D x N slice for coordinate n
      if (slice.rows() != p.model.D || slice.cols() != p.model.N)
        throw ConfigError("sigma2 slices must be D x N");
      for (int d = 0; d < p.model.D; ++d)
        for (int n2 = 0; n2 < p.model.N; ++n2) p.model.sigma2[d](n, n2) = slice(d, n2);
    }
    p.cost.degree = jc.at("degree").get<int>();
    for (const auto& a : jc.at("A")) p.cost.A.push_back(parse_matrix(a, "A_m"));
    for (const auto& b : jc.at("B")) p.cost.B.push_back(parse_matrix(b, "B_m"));
    for (const auto& c : jc.at("C")) p.cost.C.push_back(parse_vector(c, "C_m"));
    for (const auto& d : jc.at("D")) p.cost.D.push_back(parse_vector(d, "D_m"));
    p.cost.E = parse_matrix(jc.at("E"), "E");
    p.cost.G = parse_vector(jc.at("G"), "G");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem file field error: ") + e.what());
  }
  p.model.validate();
  p.cost.validate(p.model.N, p.model.K);
  return p;
}

LQProblem load_problem(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open problem file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_problem(text);
}

ControlTensor ControlTensor::zero(int K, int alphabet_size, int level) {
  ControlTensor u;
  u.coord.assign(K, TruncatedTensor(alphabet_size, level));
  return u;
}

StateEquation build_pq(const LQModel& model, const ControlTensor& u) {
  model.validate();
  if (u.K() != model.K) throw std::invalid_argument("control has wrong number of coordinates");
  const int A = model.D + 1;
  if (u.alphabet_size() != A) throw std::invalid_argument("control alphabet mismatch");
  const int M = u.level();
  const int Lp = M + 1;

  StateEquation eq;
  eq.p.reserve(model.N);
  for (int n = 0; n < model.N; ++n) {
    // x0 phi + (b0 phi + sum_k b1 u^(k)) (x) 1 + sum_d sigma0 a(d+1)
    TruncatedTensor inner = TruncatedTensor::unit(A, M, model.b0[n]);
    for (int k = 0; k < model.K; ++k)
      if (model.b1(n, k) != 0.0) inner = add_scaled(inner, 1.0, u.coord[k], model.b1(n, k));
    TruncatedTensor pn = add(TruncatedTensor::unit(A, Lp, model.x0[n]), right_concat_letter(inner, 1, Lp));
    TruncatedTensor noise(A, Lp);
    for (int d = 0; d < model.D; ++d) noise.set(Word{d + 2}, model.sigma0(n, d));
    eq.p.push_back(add(pn, noise));
  }
  eq.q.assign(model.N, std::vector<TruncatedTensor>());
  for (int n = 0; n < model.N; ++n)
    for (int n2 = 0; n2 < model.N; ++n2) {
      TruncatedTensor q(A, 1);
      q.set(Word{1}, model.b2(n, n2));
      for (int d = 0; d < model.D; ++d) q.set(Word{d + 2}, model.sigma2[d](n, n2));
      eq.q[n].push_back(std::move(q));
    }
  return eq;
}

StateTensor solve_state_tensor(const StateEquation& eq, int level) {
  const int N = static_cast<int>(eq.p.size());
  if (N == 0) throw std::invalid_argument("empty state equation");
  const int A = eq.p.front().alphabet_size();
  for (const auto& row : eq.q)
    for (const auto& q : row) {
      if (q.coeff(Word{}) != 0.0)
        throw std::invalid_argument("q has a nonzero empty-word coefficient; the recursion requires q^phi = 0");
      if (q.max_word_length() > 1) throw std::invalid_argument("q must be a pure level-1 tensor");
    }

  // q coefficient table: qc[n][n2*A + j]
  std::vector<std::vector<double>> qc(N, std::vector<double>(N * A, 0.0));
  for (int n = 0; n < N; ++n)
    for (int n2 = 0; n2 < N; ++n2)
      for (int j = 0; j < A; ++j) qc[n][n2 * A + j] = eq.q[n][n2].coeff_key(pack_from(1, j));

  std::vector<detail::DenseTensor> p, x;
  for (int n = 0; n < N; ++n) {
    p.push_back(detail::DenseTensor::from_sparse(eq.p[n], std::min(level, eq.p[n].level())));
    x.push_back(detail::DenseTensor::zeros(A, level));
    x[n].lv[0][0] = p[n].lv[0][0];
  }
  for (int m = 1; m <= level; ++m) {
    for (int n = 0; n < N; ++n) {
      auto& dst = x[n].lv[m];
      if (m <= p[n].level) dst = p[n].lv[m];
      for (int n2 = 0; n2 < N; ++n2) {
        const auto& prev = x[n2].lv[m - 1];
        const double* q = &qc[n][n2 * A];
        std::size_t idx = 0;
        for (double pv : prev)
          for (int j = 0; j < A; ++j) dst[idx++] += pv * q[j];
      }
    }
  }
  StateTensor out;
  for (int n = 0; n < N; ++n) out.coord.push_back(x[n].to_sparse());
  return out;
}

bool growth_bound_check(const StateTensor& x, const StateEquation& eq, double* C_out) {
  const int N = x.N();
  const int A = eq.p.front().alphabet_size();
  int Mp = 1;
  for (const auto& pn : eq.p) Mp = std::max(Mp, pn.max_word_length());

  double C1 = 0.0;
  for (const auto& xn : x.coord)
    for (const auto& e : xn.entries()) {
      int m = packed_length(e.key);
      if (m >= 1 && m <= Mp && e.c != 0.0) C1 = std::max(C1, std::pow(std::abs(e.c), 1.0 / m));
    }
  double rowsum = 0.0;
  for (int j = 0; j < A; ++j)
    for (int n = 0; n < N; ++n) {
      double s = 0.0;
      for (int n2 = 0; n2 < N; ++n2) s += std::abs(eq.q[n][n2].coeff_key(pack_from(1, j)));
      rowsum = std::max(rowsum, s);
    }
  double C = std::max(C1, rowsum);
  if (C_out) *C_out = C;

  for (const auto& xn : x.coord)
    for (const auto& e : xn.entries()) {
      double bound = std::pow(C, packed_length(e.key));
      if (std::abs(e.c) > bound * (1.0 + 1e-12)) return false;
    }
  return true;
}

TruncatedTensor build_cost_tensor(const LQModel& model, const CostSpec& cost, const ControlTensor& u,
                                  const StateTensor& x, int level_J) {
  cost.validate(model.N, model.K);
  if (x.N() != model.N) throw std::invalid_argument("state tensor has wrong number of coordinates");
  if (u.K() != model.K) throw std::invalid_argument("control tensor has wrong number of coordinates");
  const int A = model.D + 1;

  bool need_xx = cost.E.cwiseAbs().sum() != 0.0;
  bool need_uu = false;
  for (int m = 0; m <= cost.degree; ++m) {
    if (cost.A[m].cwiseAbs().sum() != 0.0) need_xx = true;
    if (cost.B[m].cwiseAbs().sum() != 0.0) need_uu = true;
  }

  // Pairwise shuffles, computed once and reused across the time-polynomial
  // terms and the terminal term.
  std::vector<std::vector<TruncatedTensor>> xx, uu;
  if (need_xx) {
    xx.assign(model.N, std::vector<TruncatedTensor>(model.N, TruncatedTensor(A, level_J)));
    for (int n = 0; n < model.N; ++n)
      for (int n2 = n; n2 < model.N; ++n2) {
        xx[n][n2] = shuffle(x.coord[n], x.coord[n2], level_J);
        if (n2 != n) xx[n2][n] = xx[n][n2];
      }
  }
  if (need_uu) {
    uu.assign(model.K, std::vector<TruncatedTensor>(model.K, TruncatedTensor(A, level_J)));
    for (int k = 0; k < model.K; ++k)
      for (int k2 = k; k2 < model.K; ++k2) {
        uu[k][k2] = shuffle(u.coord[k], u.coord[k2], level_J);
        if (k2 != k) uu[k2][k] = uu[k][k2];
      }
  }

  TruncatedTensor running_total(A, level_J);
  for (int m = 0; m <= cost.degree; ++m) {
    TruncatedTensor term(A, level_J);
    for (int n = 0; n < model.N; ++n) {
      for (int n2 = 0; n2 < model.N; ++n2)
        if (cost.A[m](n, n2) != 0.0) term = add_scaled(term, 1.0, xx[n][n2], cost.A[m](n, n2));
      if (cost.C[m][n] != 0.0) term = add_scaled(term, 1.0, x.coord[n], 2.0 * cost.C[m][n]);
    }
    for (int k = 0; k < model.K; ++k) {
      for (int k2 = 0; k2 < model.K; ++k2)
        if (cost.B[m](k, k2) != 0.0) term = add_scaled(term, 1.0, uu[k][k2], cost.B[m](k, k2));
      if (cost.D[m][k] != 0.0) term = add_scaled(term, 1.0, u.coord[k], 2.0 * cost.D[m][k]);
    }
    if (term.is_zero()) continue;
    if (m > 0) term = shuffle(term, time_word_tensor(A, m, m), level_J);
    running_total = add(running_total, term);
  }

  TruncatedTensor J = right_concat_letter(running_total, 1, level_J);
  for (int n = 0; n < model.N; ++n) {
    for (int n2 = 0; n2 < model.N; ++n2)
      if (cost.E(n, n2) != 0.0) J = add_scaled(J, 1.0, xx[n][n2], cost.E(n, n2));
    if (cost.G[n] != 0.0) J = add_scaled(J, 1.0, x.coord[n], 2.0 * cost.G[n]);
  }
  return J;
}

double evaluate_cost(const TruncatedTensor& J_tensor, const TruncatedTensor& expected_signature) {
  if (expected_signature.level() < J_tensor.max_word_length())
    throw std::invalid_argument("expected signature level below cost tensor depth");
  return pair(J_tensor, expected_signature);
}

}  // namespace siglqc
