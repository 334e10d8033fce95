#include <doctest.h>

#include <cmath>
#include <sstream>

#include "siglqc/reference.hpp"
#include "siglqc/rng.hpp"
#include "siglqc/signature.hpp"

using namespace siglqc;

namespace {

SampledPath straight_line(double T, double a, int steps) {
  SampledPath p;
  p.dim = 1;
  for (int i = 0; i <= steps; ++i) {
    p.times.push_back(T * i / steps);
    p.values.push_back(a * i / steps);
  }
  return p;
}

SampledPath random_pw_linear(SubstreamRng& rng, int dim, int segments, double T) {
  SampledPath p;
  p.dim = dim;
  double t = 0.0;
  std::vector<double> v(dim, 0.0);
  p.times.push_back(0.0);
  p.values.insert(p.values.end(), v.begin(), v.end());
  for (int i = 0; i < segments; ++i) {
    t += T / segments;
    for (int d = 0; d < dim; ++d) v[d] += rng.next_normal() * std::sqrt(T / segments);
    p.times.push_back(t);
    p.values.insert(p.values.end(), v.begin(), v.end());
  }
  return p;
}

TruncatedTensor random_small_tensor(SubstreamRng& rng, int A, int max_level, int full_level) {
  TruncatedTensor t(A, full_level);
  for (const Word& w : enumerate_words(A, max_level)) t.set(w, rng.next_normal());
  return t;
}

int w_letter_count(const Word& w) {
  int c = 0;
  for (int i = 0; i < w.size(); ++i)
    if (w[i] >= 2) ++c;
  return c;
}

}  // namespace

TEST_CASE("chen_step: time-only segment") {
  const double T = 0.8;
  SignatureState s(1, 3);
  double dw[1] = {0.0};
  s.advance(T, dw);
  CHECK(s.coeff(Word{}) == 1.0);
  CHECK(s.coeff(Word{1}) == doctest::Approx(T).epsilon(1e-15));
  CHECK(s.coeff(Word{1, 1}) == doctest::Approx(T * T / 2).epsilon(1e-15));
  CHECK(s.coeff(Word{2}) == 0.0);
  CHECK(s.current_time() == T);
}

TEST_CASE("chen_step: one linear segment is the increment exponential") {
  const double a = 1.3;
  SignatureState s(1, 3);
  double dw[1] = {a};
  s.advance(1.0, dw);
  CHECK(s.coeff(Word{2}) == doctest::Approx(a).epsilon(1e-15));
  CHECK(s.coeff(Word{2, 2}) == doctest::Approx(a * a / 2).epsilon(1e-15));
  CHECK(s.coeff(Word{1, 2}) == doctest::Approx(a / 2).epsilon(1e-15));
  CHECK(s.coeff(Word{2, 1}) == doctest::Approx(a / 2).epsilon(1e-15));
}

TEST_CASE("chen_step rejects dt <= 0") {
  SignatureState s(1, 2);
  double dw[1] = {0.1};
  CHECK_THROWS_AS(s.advance(0.0, dw), std::invalid_argument);
  CHECK_THROWS_AS(s.advance(-0.1, dw), std::invalid_argument);
}

TEST_CASE("two collinear steps equal one combined step") {
  double dw1[1] = {0.4}, dw2[1] = {0.8}, dw[1] = {1.2};
  SignatureState a(1, 5);
  a.advance(0.25, dw1);
  a.advance(0.5, dw2);
  SignatureState b(1, 5);
  b.advance(0.75, dw);
  for (const Word& w : enumerate_words(2, 5))
    CHECK(a.coeff(w) == doctest::Approx(b.coeff(w)).epsilon(1e-12));
}

TEST_CASE("signature_of_path examples") {
  // zero values: time-only signature
  SampledPath flat = straight_line(2.0, 0.0, 7);
  SignatureState s = signature_of_path(flat, 4);
  double f = 1.0;
  Word w;
  for (int m = 1; m <= 4; ++m) {
    w.push_back(1);
    f *= 2.0 / m;
    CHECK(s.coeff(w) == doctest::Approx(f).epsilon(1e-12));
  }
  CHECK(s.coeff(Word{2}) == 0.0);

  // a straight line sampled finely matches the single chen step
  SampledPath line = straight_line(1.0, 0.9, 50);
  SignatureState fine = signature_of_path(line, 4);
  SignatureState one(1, 4);
  double dw[1] = {0.9};
  one.advance(1.0, dw);
  for (const Word& word : enumerate_words(2, 4))
    CHECK(fine.coeff(word) == doctest::Approx(one.coeff(word)).epsilon(1e-12));

  // W_t = t on [0,1]: both mixed level-2 words integrate to 1/2
  SignatureState diag = signature_of_path(straight_line(1.0, 1.0, 100), 2);
  CHECK(diag.coeff(Word{1, 2}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(diag.coeff(Word{2, 1}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("signature_of_path rejects bad grids") {
  SampledPath p;
  p.dim = 1;
  p.times = {0.0, 0.5, 0.5};
  p.values = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(signature_of_path(p, 2), std::invalid_argument);
}

TEST_CASE("time-word invariant after random steps") {
  SubstreamRng rng(5, 0);
  SignatureState s(2, 5);
  double dw[2];
  for (int i = 0; i < 37; ++i) {
    dw[0] = rng.next_normal();
    dw[1] = rng.next_normal();
    s.advance(0.01 + 0.02 * rng.next_uniform(), dw);
  }
  double t = s.current_time(), f = 1.0;
  Word w;
  for (int m = 1; m <= 5; ++m) {
    w.push_back(1);
    f *= t / m;
    CHECK(std::abs(s.coeff(w) - f) <= 1e-10 * std::abs(f));
  }
}

TEST_CASE("Chen consistency: split path equals concatenated halves") {
  SubstreamRng rng(11, 3);
  SampledPath p = random_pw_linear(rng, 2, 20, 1.0);
  SignatureState full = signature_of_path(p, 4);

  SignatureState first(2, 4), second(2, 4);
  double dw[2];
  for (int i = 1; i <= 20; ++i) {
    double dt = p.times[i] - p.times[i - 1];
    for (int d = 0; d < 2; ++d) dw[d] = p.value(i, d) - p.value(i - 1, d);
    (i <= 10 ? first : second).advance(dt, dw);
  }
  TruncatedTensor combined = concat(first.tensor(), second.tensor(), 4);
  for (const Word& w : enumerate_words(3, 4))
    CHECK(full.coeff(w) == doctest::Approx(combined.coeff(w)).epsilon(1e-12));
}

TEST_CASE("streaming signature matches the sparse reference") {
  SubstreamRng rng(13, 1);
  for (int rep = 0; rep < 3; ++rep) {
    SampledPath p = random_pw_linear(rng, 1, 15, 1.0);
    SignatureState s = signature_of_path(p, 5);
    TruncatedTensor ref = reference::signature_of_path(p, 5);
    for (const Word& w : enumerate_words(2, 5))
      CHECK(s.coeff(w) == doctest::Approx(ref.coeff(w)).epsilon(1e-12));
  }
}

TEST_CASE("shuffle character property on random paths") {
  SubstreamRng rng(17, 0);
  for (int rep = 0; rep < 20; ++rep) {
    SampledPath p = random_pw_linear(rng, 1, 12, 1.0);
    SignatureState s = signature_of_path(p, 4);
    TruncatedTensor S = s.tensor();
    auto a = random_small_tensor(rng, 2, 2, 4);
    auto b = random_small_tensor(rng, 2, 2, 4);
    double prod = pair(a, S) * pair(b, S);
    double shuf = pair(shuffle(a, b, 4), S);
    CHECK(std::abs(shuf - prod) <= 1e-9 * (1.0 + std::abs(prod)));
  }
}

TEST_CASE("Fawcett expected signature") {
  const double T = 1.7;
  TruncatedTensor es = fawcett_expected_signature(T, 1, 4);
  CHECK(es.coeff(Word{}) == 1.0);
  CHECK(es.coeff(Word{1}) == doctest::Approx(T).epsilon(1e-15));
  CHECK(es.coeff(Word{2, 2}) == doctest::Approx(T / 2).epsilon(1e-15));
  CHECK(es.coeff(Word{1, 2, 2}) == doctest::Approx(T * T / 4).epsilon(1e-14));
  CHECK(es.coeff(Word{2, 2, 1}) == doctest::Approx(T * T / 4).epsilon(1e-14));
  CHECK(es.coeff(Word{2, 2, 2, 2}) == doctest::Approx(T * T / 8).epsilon(1e-14));

  // words with an odd count of any W letter vanish identically
  for (const Word& w : enumerate_words(2, 4))
    if (w_letter_count(w) % 2 == 1) CHECK(es.coeff(w) == 0.0);

  // multidimensional generalization
  TruncatedTensor es2 = fawcett_expected_signature(T, 2, 3);
  CHECK(es2.coeff(Word{2, 2}) == doctest::Approx(T / 2).epsilon(1e-15));
  CHECK(es2.coeff(Word{3, 3}) == doctest::Approx(T / 2).epsilon(1e-15));
  CHECK(es2.coeff(Word{2, 3}) == 0.0);
  CHECK(es2.coeff(Word{3}) == 0.0);
}

TEST_CASE("mc_expected_signature: identical paths give zero stderr") {
  SubstreamRng rng(23, 5);
  SampledPath p = random_pw_linear(rng, 1, 10, 1.0);
  std::vector<SampledPath> paths{p, p};
  auto est = mc_expected_signature(paths, 3);
  SignatureState s = signature_of_path(p, 3);
  CHECK(est.stderr_.is_zero());
  for (const Word& w : enumerate_words(2, 3)) CHECK(est.mean.coeff(w) == s.coeff(w));
}

TEST_CASE("mc_expected_signature: grids must match") {
  SubstreamRng rng(29, 0);
  SampledPath a = random_pw_linear(rng, 1, 10, 1.0);
  SampledPath b = random_pw_linear(rng, 1, 11, 1.0);
  std::vector<SampledPath> paths{a, b};
  CHECK_THROWS_AS(mc_expected_signature(paths, 2), std::invalid_argument);
}

TEST_CASE("mc_expected_signature: worker count does not change bits") {
  SubstreamRng rng(31, 0);
  std::vector<SampledPath> paths;
  for (int i = 0; i < 101; ++i) {
    SubstreamRng prng(31, i + 1);
    paths.push_back(random_pw_linear(prng, 1, 16, 1.0));
  }
  auto a = mc_expected_signature(paths, 4, 1);
  auto b = mc_expected_signature(paths, 4, 2);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr_ == b.stderr_);

  // and the naive serial reference agrees to rounding
  auto ref = reference::mc_expected_signature(paths, 4);
  for (const Word& w : enumerate_words(2, 4))
    CHECK(a.mean.coeff(w) == doctest::Approx(ref.mean.coeff(w)).epsilon(1e-12));
}

TEST_CASE("mc_expected_signature: odd W-letter words near zero for Brownian paths") {
  std::vector<SampledPath> paths;
  for (int i = 0; i < 400; ++i) {
    SubstreamRng rng(37, i);
    paths.push_back(random_pw_linear(rng, 1, 50, 1.0));
  }
  auto est = mc_expected_signature(paths, 3);
  for (const Word& w : enumerate_words(2, 3))
    if (w_letter_count(w) % 2 == 1)
      CHECK(std::abs(est.mean.coeff(w)) <= 3.0 * est.stderr_.coeff(w) + 1e-12);
}

TEST_CASE("path CSV round trip") {
  SubstreamRng rng(41, 0);
  SampledPath p = random_pw_linear(rng, 2, 8, 1.0);
  std::ostringstream os;
  write_path_csv(os, p);
  std::istringstream is(os.str());
  SampledPath q = read_path_csv(is);
  REQUIRE(q.dim == p.dim);
  REQUIRE(q.times.size() == p.times.size());
  for (std::size_t i = 0; i < p.times.size(); ++i) CHECK(q.times[i] == p.times[i]);
  for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(q.values[i] == p.values[i]);
}
