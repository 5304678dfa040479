#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "chebprop/chebkernel.hpp"
#include "chebprop/oracle.hpp"
#include "test_helpers.hpp"

using namespace chebprop;
using test_helpers::max_abs_diff;
using test_helpers::random_hermitian;
using test_helpers::random_state;

namespace {

// power-series Bessel evaluation, independent of the production recurrence
double bessel_series(int n, double x) {
  double term = std::pow(0.5 * x, n);
  for (int k = 2; k <= n; ++k) term /= k;
  double sum = term;
  for (int j = 1; j <= 60; ++j) {
    term *= -0.25 * x * x / (j * (j + n));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

TEST_CASE("scalar propagator functions") {
  SECTION("order zero is the exponential") {
    const FmSpec f0(0, 0.7);
    for (double z : {-2.0, 0.0, 1.3}) {
      CHECK(std::abs(fm_scalar(f0, z) - std::exp(Complex(0.0, -z * 0.7))) < 1e-15);
    }
  }
  SECTION("value at z = 0 is t^m / m!") {
    CHECK(std::abs(fm_scalar(FmSpec(1, 2.0), 0.0) - Complex(2.0)) < 1e-15);
    CHECK(std::abs(fm_scalar(FmSpec(3, 2.0), 0.0) - Complex(8.0 / 6.0)) < 1e-15);
  }
  SECTION("direct and series branches agree at the switchover") {
    // |z t| = 0.5 sits right at the default switch
    const FmSpec spec(3, 1.0);
    const Complex direct = fm_scalar_direct(spec, 0.5);
    const Complex series = fm_scalar_taylor(spec, 0.5);
    CHECK(std::abs(direct - series) < 1e-13 * std::abs(series));
    for (int m = 1; m <= 4; ++m) {
      for (double z : {0.5, 0.7, 1.0}) {
        const FmSpec s(m, 1.0);
        CHECK(std::abs(fm_scalar_direct(s, z) - fm_scalar_taylor(s, z)) <
              1e-12 * std::abs(fm_scalar_taylor(s, z)));
      }
    }
  }
  SECTION("negative step duration") {
    const FmSpec spec(2, -0.8);
    const Complex got = fm_scalar(spec, 0.3);
    // f_2(z) = (-iz)^{-2} (e^{-izt} - 1 + izt)
    const Complex miz(0.0, -0.3);
    const Complex ref = (std::exp(miz * -0.8) - 1.0 - miz * -0.8) / (miz * miz);
    CHECK(std::abs(got - ref) < 1e-12 * std::abs(ref));
  }
}

TEST_CASE("Bessel sequence matches independent evaluations") {
  // power series is reliable only at moderate arguments (cancellation)
  for (double x : {0.3, 1.0, 4.5, 8.0}) {
    const auto jn = bessel_jn_sequence(12, x);
    for (int n = 0; n <= 12; ++n) {
      CHECK(std::abs(jn[n] - bessel_series(n, x)) < 1e-13 * std::max(1.0, std::abs(jn[n])));
    }
  }
  for (double x : {20.0, 55.0}) {
    const auto jn = bessel_jn_sequence(40, x);
    for (int n = 0; n <= 40; n += 4)
      CHECK(std::abs(jn[n] - std::cyl_bessel_j(n, x)) < 1e-13);
  }
  const auto jneg = bessel_jn_sequence(3, -1.0);
  CHECK(jneg[1] == Catch::Approx(-bessel_series(1, 1.0)));
  CHECK(jneg[2] == Catch::Approx(bessel_series(2, 1.0)));
}

TEST_CASE("analytic exponential coefficients") {
  SECTION("zero step is the identity") {
    const auto exp = coefficients_analytic_f0(100, SpectralBounds{-1.0, 1.0}, 0.0);
    CHECK(std::abs(exp.coeffs[0] - Complex(1.0)) < 1e-15);
    for (std::size_t n = 1; n < exp.coeffs.size(); ++n) CHECK(std::abs(exp.coeffs[n]) < 1e-15);
    CHECK(std::abs(exp.phase_external - Complex(1.0)) < 1e-15);
  }
  SECTION("coefficient ratio at dE t/2 = 1") {
    const auto exp = coefficients_analytic_f0(100, SpectralBounds{-1.0, 1.0}, 1.0);
    const Complex ratio = exp.coeffs[1] / exp.coeffs[0];
    const Complex expected = Complex(0.0, -2.0) * bessel_series(1, 1.0) / bessel_series(0, 1.0);
    CHECK(std::abs(ratio - expected) < 1e-13);
  }
  SECTION("truncation failure reports the last coefficient") {
    CHECK_THROWS_AS(coefficients_analytic_f0(4, SpectralBounds{-40.0, 40.0}, 1.0),
                    TruncationError);
  }
  SECTION("last kept coefficient is below tolerance") {
    const auto exp = coefficients_analytic_f0(1 << 12, SpectralBounds{-3.0, 5.0}, 2.0, 1e-12);
    CHECK(std::abs(exp.coeffs.back()) < 1e-12);
    CHECK(exp.coeffs.size() > 4);
  }
}

TEST_CASE("numeric coefficients") {
  SECTION("analytic and cosine-transform routes agree termwise") {
    for (double w : {0.1, 1.0, 10.0}) {
      SpectralBounds bounds{-0.5, 1.5};
      const double t = 2.0 * w / bounds.delta();
      const auto a = coefficients_analytic_f0(1 << 14, bounds, t, 1e-13);
      const auto n = coefficients_numeric(FmSpec(0, t), bounds, 256, 1e-13);
      const std::size_t common = std::min(a.coeffs.size(), n.coeffs.size());
      REQUIRE(common > 3);
      for (std::size_t k = 0; k < common; ++k)
        CHECK(std::abs(a.phase_external * a.coeffs[k] - n.coeffs[k]) < 1e-12);
    }
  }
  SECTION("nearly-constant f_1 collapses to a single coefficient") {
    // f_1 deviates from t only at O(|E| t^2), so the higher terms vanish
    SpectralBounds bounds{-1.0, 1.0};
    const double t = 1e-9;
    const auto exp = coefficients_numeric(FmSpec(1, t), bounds, 64, 1e-12);
    CHECK(std::abs(exp.coeffs[0] - Complex(t)) < 1e-6 * t);
    for (std::size_t k = 1; k < exp.coeffs.size(); ++k)
      CHECK(std::abs(exp.coeffs[k]) < 1e-6 * t);
  }
  SECTION("tolerance must be reachable") {
    CHECK_THROWS_AS(coefficients_numeric(FmSpec(1, 5.0), SpectralBounds{-20.0, 20.0}, 16, 1e-12),
                    TruncationError);
  }
}

// slow O(N^2) cosine sum, written out independently of the FFT path
TEST_CASE("cosine transform against a direct sum") {
  SpectralBounds bounds{-2.0, 2.0};
  const FmSpec spec(2, 1.5);
  const int n = 64;
  std::vector<Complex> g(n);
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (k + 0.5) / n;
    const double e = bounds.e_min + 0.5 * bounds.delta() * (std::cos(theta) + 1.0);
    g[k] = fm_scalar(spec, e);
  }
  ChebyshevExpansion viafft;
  try {
    viafft = coefficients_numeric(spec, bounds, n, 1e-14);
  } catch (const TruncationError&) {
    viafft = coefficients_numeric(spec, bounds, 128, 1e-14);
  }
  for (std::size_t idx = 0; idx < viafft.coeffs.size(); ++idx) {
    Complex slow = 0.0;
    for (int k = 0; k < n; ++k)
      slow += g[k] * std::cos(idx * std::numbers::pi * (k + 0.5) / n);
    slow *= (idx == 0 ? 1.0 : 2.0) / n;
    CHECK(std::abs(slow - viafft.coeffs[idx]) < 1e-14);
  }
}

TEST_CASE("expansion application") {
  std::mt19937_64 rng(31);
  SECTION("zero step returns the input unchanged") {
    const auto h = Hamiltonian::dense(random_hermitian(rng, 4));
    const auto exp = coefficients_analytic_f0(100, h.spectral_bounds(0.0), 0.0);
    const StateVector v = random_state(rng, 4);
    CHECK(max_abs_diff(apply_expansion(exp, h, 0.0, v), v) < 1e-14);
  }
  SECTION("f_0 matches the eigendecomposition propagator") {
    const auto h = Hamiltonian::dense(random_hermitian(rng, 4));
    const StateVector v = random_state(rng, 4);
    const double t = 1.7;
    const auto exp = coefficients_analytic_f0(1 << 12, h.spectral_bounds(0.0), t, 1e-14);
    CHECK(max_abs_diff(apply_expansion(exp, h, 0.0, v), oracle::dense_expm(h, 0.0, t, v)) <
          1e-12);
  }
  SECTION("f_2 matches scalar evaluation on the eigenvalues") {
    const auto m = random_hermitian(rng, 4);
    const auto h = Hamiltonian::dense(m);
    const StateVector v = random_state(rng, 4);
    const double t = 0.9;
    const auto exp = build_expansion(FmSpec(2, t), h.spectral_bounds(0.0), 1e-13);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
    StateVector ref = es.eigenvectors().adjoint() * v;
    for (int i = 0; i < 4; ++i) ref[i] *= fm_scalar(FmSpec(2, t), es.eigenvalues()[i]);
    ref = es.eigenvectors() * ref;
    CHECK(max_abs_diff(apply_expansion(exp, h, 0.0, v), ref) < 1e-11);
  }
  SECTION("spectral accuracy for orders up to 4") {
    for (int m_order = 1; m_order <= 4; ++m_order) {
      const auto m = random_hermitian(rng, 16, 0.8);
      const auto h = Hamiltonian::dense(m);
      const StateVector v = random_state(rng, 16);
      const double t = 1.2;
      const auto exp = build_expansion(FmSpec(m_order, t), h.spectral_bounds(0.0), 1e-12);
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
      StateVector ref = es.eigenvectors().adjoint() * v;
      for (int i = 0; i < 16; ++i) ref[i] *= fm_scalar(FmSpec(m_order, t), es.eigenvalues()[i]);
      ref = es.eigenvectors() * ref;
      CHECK(max_abs_diff(apply_expansion(exp, h, 0.0, v), ref) < 1e-10);
    }
  }
  SECTION("norm conservation for the unitary case") {
    const auto h = Hamiltonian::dense(random_hermitian(rng, 6));
    StateVector v = random_state(rng, 6);
    const auto exp = coefficients_analytic_f0(1 << 12, h.spectral_bounds(0.0), 0.8, 1e-14);
    for (int i = 0; i < 50; ++i) v = apply_expansion(exp, h, 0.0, v);
    CHECK(std::abs(norm_of(v) - 1.0) < 1e-12);
  }
  SECTION("one Hamiltonian application per recursion term") {
    const auto h = Hamiltonian::dense(random_hermitian(rng, 5)).with_fresh_counter();
    const auto exp = coefficients_analytic_f0(1 << 12, h.spectral_bounds(0.0), 1.1, 1e-13);
    (void)apply_expansion(exp, h, 0.0, random_state(rng, 5));
    CHECK(h.applications() == exp.coeffs.size() - 1);
  }
}

TEST_CASE("coefficient decay and truncation index growth") {
  SpectralBounds bounds{-1.0, 1.0};
  int previous = 0;
  for (double w : {5.0, 10.0, 20.0, 40.0}) {
    const auto exp = coefficients_analytic_f0(1 << 14, bounds, 2.0 * w, 1e-12);
    const int degree = exp.degree();
    CHECK(degree > previous);
    previous = degree;
    // decay past the truncation index: everything after the bulk stays tiny
    const auto jn = bessel_jn_sequence(degree + 20, w);
    for (int n = degree + 1; n <= degree + 20; ++n) CHECK(std::abs(2.0 * jn[n]) < 1e-11);
    // roughly linear growth in w for large arguments
    CHECK(degree < 2.5 * w + 25.0);
  }
}
