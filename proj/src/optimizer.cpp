#include "siglqc/optimizer.hpp"

#include <sstream>

#include "siglqc/errors.hpp"
#include "siglqc/parallel.hpp"

namespace siglqc {

ControlBasis::ControlBasis(int K, int alphabet_size, int level)
    : K_(K), alphabet_(alphabet_size), level_(level), words_(enumerate_words(alphabet_size, level)) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
}

ControlTensor to_control_tensor(const Eigen::VectorXd& v, const ControlBasis& basis) {
  if (v.size() != basis.dim()) throw std::invalid_argument("coefficient vector has wrong length");
  ControlTensor u = ControlTensor::zero(basis.K(), basis.alphabet_size(), basis.level());
  for (int k = 0; k < basis.K(); ++k) {
    std::vector<TruncatedTensor::Entry> raw;
    for (int w = 0; w < static_cast<int>(basis.words().size()); ++w) {
      double c = v[basis.index(k, w)];
      if (c != 0.0) raw.push_back({pack_word(basis.words()[w], basis.alphabet_size()), c});
    }
    u.coord[k] = TruncatedTensor::from_entries(basis.alphabet_size(), basis.level(), std::move(raw));
  }
  return u;
}

Eigen::VectorXd flatten(const ControlTensor& u, const ControlBasis& basis) {
  if (u.K() != basis.K()) throw std::invalid_argument("control has wrong number of coordinates");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.dim());
  for (int k = 0; k < basis.K(); ++k)
    for (int w = 0; w < static_cast<int>(basis.words().size()); ++w)
      v[basis.index(k, w)] = u.coord[k].coeff(basis.words()[w]);
  return v;
}

QuadraticForm extract_quadratic(const CostEvaluator& evaluator, const ControlBasis& basis, int workers) {
  const int P = basis.dim();

  // Probe layout: [0] zero, [1..P] +e_i, [P+1..2P] -e_i, then pairs (i<j).
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(P * (P - 1) / 2);
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j) pairs.emplace_back(i, j);
  const std::int64_t nprobe = 1 + 2 * P + static_cast<std::int64_t>(pairs.size());

  std::vector<double> F(nprobe);
  parallel_for_index(nprobe, workers, [&](std::int64_t t) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(P);
    if (t >= 1 && t <= P)
      v[t - 1] = 1.0;
    else if (t >= P + 1 && t <= 2 * P)
      v[t - P - 1] = -1.0;
    else if (t > 2 * P) {
      auto [i, j] = pairs[t - 2 * P - 1];
      v[i] = 1.0;
      v[j] = 1.0;
    }
    F[t] = evaluator(to_control_tensor(v, basis));
  });

  QuadraticForm Q;
  Q.c0 = F[0];
  Q.H = Eigen::MatrixXd::Zero(P, P);
  Q.g = Eigen::VectorXd::Zero(P);
  for (int i = 0; i < P; ++i) {
    Q.H(i, i) = (F[1 + i] + F[1 + P + i]) / 2.0 - Q.c0;
    Q.g[i] = (F[1 + i] - F[1 + P + i]) / 2.0;
  }
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    auto [i, j] = pairs[t];
    // F(e_i + e_j) carries the linear parts; subtract them along with the
    // diagonal contributions before halving.
    double cij = (F[1 + 2 * P + t] - Q.H(i, i) - Q.H(j, j) - Q.c0) / 2.0 - (Q.g[i] + Q.g[j]) / 2.0;
    Q.H(i, j) = Q.H(j, i) = cij;
  }
  return Q;
}

CostEvaluator make_cost_evaluator(const LQModel& model, const CostSpec& cost, int state_level,
                                  const TruncatedTensor& expected_signature) {
  return [model, cost, state_level, expected_signature](const ControlTensor& u) {
    StateEquation eq = build_pq(model, u);
    StateTensor x = solve_state_tensor(eq, state_level);
    int level_J = cost_tensor_level(state_level, u.level(), cost.degree);
    TruncatedTensor J = build_cost_tensor(model, cost, u, x, level_J);
    return evaluate_cost(J, expected_signature);
  };
}

QuadraticForm assemble_quadratic_direct(const LQModel& model, const CostSpec& cost, int state_level,
                                        const TruncatedTensor& ES, const ControlBasis& basis) {
  const int P = basis.dim();
  const int A = basis.alphabet_size();
  const int M = basis.level();
  const int level_J = cost_tensor_level(state_level, M, cost.degree);

  // Affine family: index 0 is the zero-control member, 1..P the responses to
  // the basis directions.  x(u) = X[0] + sum_i v_i X[i].
  std::vector<ControlTensor> U;
  U.push_back(ControlTensor::zero(model.K, A, M));
  std::vector<StateTensor> X;
  X.push_back(solve_state_tensor(build_pq(model, U[0]), state_level));
  StateEquation eq0 = build_pq(model, U[0]);
  for (int i = 0; i < P; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(P);
    v[i] = 1.0;
    ControlTensor ui = to_control_tensor(v, basis);
    // Response part of p: only the b1 u (x) 1 term, no x0/b0/sigma0.
    StateEquation eq = eq0;
    for (int n = 0; n < model.N; ++n) {
      TruncatedTensor inner(A, M);
      for (int k = 0; k < model.K; ++k)
        if (model.b1(n, k) != 0.0) inner = add_scaled(inner, 1.0, ui.coord[k], model.b1(n, k));
      eq.p[n] = right_concat_letter(inner, 1, M + 1);
    }
    X.push_back(solve_state_tensor(eq, state_level));
    U.push_back(ui);
  }

  std::vector<TruncatedTensor> tw;
  for (int m = 0; m <= cost.degree; ++m) tw.push_back(time_word_tensor(A, m, m));

  auto quad_part = [&](int a, int b) {
    TruncatedTensor run(A, level_J);
    TruncatedTensor terminal(A, level_J);
    for (int m = 0; m <= cost.degree; ++m) {
      TruncatedTensor term(A, level_J);
      for (int n = 0; n < model.N; ++n)
        for (int n2 = 0; n2 < model.N; ++n2)
          if (cost.A[m](n, n2) != 0.0)
            term = add_scaled(term, 1.0, shuffle(X[a].coord[n], X[b].coord[n2], level_J), cost.A[m](n, n2));
      for (int k = 0; k < model.K; ++k)
        for (int k2 = 0; k2 < model.K; ++k2)
          if (cost.B[m](k, k2) != 0.0)
            term = add_scaled(term, 1.0, shuffle(U[a].coord[k], U[b].coord[k2], level_J), cost.B[m](k, k2));
      if (term.is_zero()) continue;
      if (m > 0) term = shuffle(term, tw[m], level_J);
      run = add(run, term);
    }
    for (int n = 0; n < model.N; ++n)
      for (int n2 = 0; n2 < model.N; ++n2)
        if (cost.E(n, n2) != 0.0)
          terminal = add_scaled(terminal, 1.0, shuffle(X[a].coord[n], X[b].coord[n2], level_J), cost.E(n, n2));
    return pair(right_concat_letter(run, 1, level_J), ES) + pair(terminal, ES);
  };

  auto linear_part = [&](int a) {
    TruncatedTensor run(A, level_J);
    TruncatedTensor terminal(A, level_J);
    for (int m = 0; m <= cost.degree; ++m) {
      TruncatedTensor term(A, level_J);
      for (int n = 0; n < model.N; ++n)
        if (cost.C[m][n] != 0.0) term = add_scaled(term, 1.0, X[a].coord[n], 2.0 * cost.C[m][n]);
      for (int k = 0; k < model.K; ++k)
        if (cost.D[m][k] != 0.0) term = add_scaled(term, 1.0, U[a].coord[k], 2.0 * cost.D[m][k]);
      if (term.is_zero()) continue;
      if (m > 0) term = shuffle(term, tw[m], level_J);
      run = add(run, term);
    }
    for (int n = 0; n < model.N; ++n)
      if (cost.G[n] != 0.0) terminal = add_scaled(terminal, 1.0, X[a].coord[n], 2.0 * cost.G[n]);
    return pair(right_concat_letter(run, 1, level_J), ES) + pair(terminal, ES);
  };

  QuadraticForm Q;
  Q.H = Eigen::MatrixXd::Zero(P, P);
  Q.g = Eigen::VectorXd::Zero(P);
  Q.c0 = quad_part(0, 0) + linear_part(0);
  for (int i = 0; i < P; ++i) {
    Q.g[i] = quad_part(0, i + 1) + quad_part(i + 1, 0) + linear_part(i + 1);
    for (int j = i; j < P; ++j) {
      double h = (quad_part(i + 1, j + 1) + quad_part(j + 1, i + 1)) / 2.0;
      Q.H(i, j) = Q.H(j, i) = h;
    }
  }
  return Q;
}

ConvexityReport check_strict_convexity(const QuadraticForm& Q) {
  Eigen::MatrixXd Hs = 0.5 * (Q.H + Q.H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs, Eigen::EigenvaluesOnly);
  ConvexityReport rep;
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  rep.threshold = 1e-10 * (1.0 + norm);
  rep.strictly_convex = rep.min_eigenvalue > rep.threshold;
  return rep;
}

MinimizeResult minimize_quadratic(const QuadraticForm& Q) {
  ConvexityReport conv = check_strict_convexity(Q);
  if (!conv.strictly_convex) {
    std::ostringstream os;
    os << "Hessian is not positive definite (min eigenvalue " << conv.min_eigenvalue
       << ", threshold " << conv.threshold << "); check B(t) positivity or truncation levels";
    throw NumericError(os.str());
  }
  MinimizeResult res;
  Eigen::MatrixXd H2 = Q.H + Q.H.transpose();  // 2H, symmetrized
  if (conv.min_eigenvalue < 10.0 * conv.threshold) {
    res.used_fallback = true;
    res.v = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(H2).solve(-Q.g);
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(H2);
    if (llt.info() != Eigen::Success) {
      res.used_fallback = true;
      res.v = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(H2).solve(-Q.g);
    } else {
      res.v = llt.solve(-Q.g);
    }
  }
  res.residual = (H2 * res.v + Q.g).norm();
  res.value = Q.value(res.v);
  return res;
}

std::string quadratic_to_csv(const QuadraticForm& Q) {
  std::ostringstream os;
  os.precision(17);
  os << "# H\n";
  for (int i = 0; i < Q.H.rows(); ++i) {
    for (int j = 0; j < Q.H.cols(); ++j) os << (j ? "," : "") << Q.H(i, j);
    os << '\n';
  }
  os << "# g\n";
  for (int i = 0; i < Q.g.size(); ++i) os << (i ? "," : "") << Q.g[i];
  os << "\n# c0\n" << Q.c0 << '\n';
  return os.str();
}

}  // namespace siglqc
