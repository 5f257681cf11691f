#include "nvq/matrix_core.hpp"
#include "nvq/spin_operators.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace nvq;

namespace {

const Complex I{0.0, 1.0};

double max_abs(const ComplexMatrix& a) { return a.cwiseAbs().maxCoeff(); }

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

ComplexMatrix bell_state() {
  ComplexVector psi = ComplexVector::Zero(4);
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  return psi * psi.adjoint();
}

}  // namespace

TEST_CASE("kron: sigma_z x sigma_z is diag(1, -1, -1, 1)") {
  const ComplexMatrix k = kron<double>(pauli_z(), pauli_z());
  ComplexMatrix want = ComplexMatrix::Zero(4, 4);
  want.diagonal() << 1, -1, -1, 1;
  CHECK(max_abs(k - want) == 0.0);
}

TEST_CASE("kron: identity factor gives block diagonal copies") {
  std::mt19937_64 rng(1);
  const ComplexMatrix a = oracle::random_matrix(rng, 3);
  const ComplexMatrix k = kron<double>(identity(2), a);
  CHECK(max_abs(k.topLeftCorner(3, 3) - a) == 0.0);
  CHECK(max_abs(k.bottomRightCorner(3, 3) - a) == 0.0);
  CHECK(max_abs(k.topRightCorner(3, 3)) == 0.0);
  CHECK(max_abs(k.bottomLeftCorner(3, 3)) == 0.0);
}

TEST_CASE("kron: matches the index formula, including (S_x x S_x)[1,3]") {
  const auto s = spin_matrices(Formalism::Spin1);
  const ComplexMatrix k = kron<double>(s.x, s.x);
  // row 1 = (i=0, k=1), col 3 = (j=1, l=0): Sx[0,1] * Sx[1,0] = 1/2
  CHECK(k(1, 3).real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(k(1, 3).imag() == 0.0);
  CHECK(max_abs(k - oracle::kron_index(s.x, s.x)) == 0.0);

  std::mt19937_64 rng(2);
  const ComplexMatrix a = oracle::random_matrix(rng, 2), b = oracle::random_matrix(rng, 3);
  CHECK(max_abs(kron<double>(a, b) - oracle::kron_index(a, b)) == 0.0);
}

TEST_CASE("kron: associativity up to one rounding per entry") {
  std::mt19937_64 rng(3);
  const ComplexMatrix a = oracle::random_matrix(rng, 2), b = oracle::random_matrix(rng, 3),
                      c = oracle::random_matrix(rng, 2);
  const ComplexMatrix left = kron<double>(kron<double>(a, b), c);
  const ComplexMatrix right = kron<double>(a, kron<double>(b, c));
  // Each entry is a product of three factors; compare with a tolerance of one
  // rounding since (ab)c and a(bc) may round differently.
  CHECK(max_abs(left - right) <= 4 * std::numeric_limits<double>::epsilon() * max_abs(left));
  const std::vector<ComplexMatrix> fs{a, b, c};
  CHECK(max_abs(kron<double>(std::span<const ComplexMatrix>(fs)) - left) == 0.0);
}

TEST_CASE("expm: zero and diagonal cases") {
  CHECK(max_abs(expm<double>(ComplexMatrix::Zero(4, 4)) - ComplexMatrix::Identity(4, 4)) < 1e-15);
  const auto s = spin_matrices(Formalism::Spin1);
  ComplexMatrix want = ComplexMatrix::Zero(3, 3);
  want.diagonal() << -1, 1, -1;
  CHECK(max_abs(expm<double>(ComplexMatrix(-I * std::numbers::pi * s.z)) - want) < 1e-14);
}

TEST_CASE("expm: Euler formula for an involutory matrix") {
  const double a = std::numbers::pi / 4;
  const ComplexMatrix got = expm<double>(ComplexMatrix(-I * a * pauli_x()));
  const ComplexMatrix want = std::cos(a) * identity(2) - I * std::sin(a) * pauli_x();
  CHECK(max_abs(got - want) < 1e-15);
}

TEST_CASE("expm: agrees with a 30-term Taylor oracle on random anti-Hermitian input") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    ComplexMatrix h = oracle::random_hermitian(rng, n);
    h *= (0.1 + 4.9 * (trial % 10) / 9.0) / h.norm();  // ||A||_F in [0.1, 5]
    const ComplexMatrix a = I * h;
    const ComplexMatrix u = expm<double>(a);
    CHECK(max_abs(u - oracle::expm_taylor(a)) < 1e-9);
    CHECK(max_abs(u.adjoint() * u - ComplexMatrix::Identity(n, n)) < 1e-10);
  }
}

TEST_CASE("expm: general input and large norms") {
  std::mt19937_64 rng(5);
  const ComplexMatrix a = oracle::random_matrix(rng, 6, 3.0);
  const ComplexMatrix e = expm<double>(a);
  const ComplexMatrix t = oracle::expm_taylor(a);
  CHECK(max_abs(e - t) <= 1e-9 * max_abs(t));
  // exp(A) exp(-A) = I
  CHECK(max_abs(e * expm<double>(ComplexMatrix(-a)) - ComplexMatrix::Identity(6, 6)) < 1e-9);
}

TEST_CASE("expm: non-finite input is rejected") {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(expm<double>(a), NumericalError);
  a(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(expm<double>(a), NumericalError);
}

TEST_CASE("hermitian_eig: Pauli x") {
  const auto e = hermitian_eig<double>(pauli_x());
  CHECK(e.eigenvalues(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(e.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));
  // (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
  const double r = 1.0 / std::sqrt(2.0);
  ComplexVector minus(2), plus(2);
  minus << r, -r;
  plus << r, r;
  CHECK(std::abs(minus.dot(e.eigenvectors.col(0))) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(plus.dot(e.eigenvectors.col(1))) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("hermitian_eig: diagonal input is sorted with permuted basis vectors") {
  ComplexMatrix a = ComplexMatrix::Zero(3, 3);
  a.diagonal() << 3, 1, 2;
  const auto e = hermitian_eig<double>(a);
  CHECK(e.eigenvalues(0) == 1.0);
  CHECK(e.eigenvalues(1) == 2.0);
  CHECK(e.eigenvalues(2) == 3.0);
  CHECK(std::abs(e.eigenvectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.eigenvectors(2, 1)) == doctest::Approx(1.0));
  CHECK(std::abs(e.eigenvectors(0, 2)) == doctest::Approx(1.0));
}

TEST_CASE("hermitian_eig: random 3x3 matches the characteristic polynomial roots") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexMatrix a = oracle::random_hermitian(rng, 3);
    const auto e = hermitian_eig<double>(a);
    const auto roots = oracle::hermitian3_eigenvalues(a);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(e.eigenvalues(k) - roots[k]) < 1e-9);
  }
}

TEST_CASE("hermitian_eig: residual, orthonormality and reconstruction on 120 random matrices") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 120; ++trial) {
    const Eigen::Index n = 2 + trial % 17;  // dims 2..18
    const ComplexMatrix a = oracle::random_hermitian(rng, n, trial % 3 == 0 ? 100.0 : 1.0);
    const auto e = hermitian_eig<double>(a);
    const double norm = a.norm();
    const auto& v = e.eigenvectors;
    for (Eigen::Index k = 0; k < n; ++k) {
      CHECK((a * v.col(k) - e.eigenvalues(k) * v.col(k)).norm() <= 1e-10 * norm);
      if (k > 0) CHECK(e.eigenvalues(k) >= e.eigenvalues(k - 1));
    }
    CHECK(max_abs(v.adjoint() * v - ComplexMatrix::Identity(n, n)) <= 1e-10);
    CHECK((v * e.eigenvalues.cast<Complex>().asDiagonal() * v.adjoint() - a).norm() <= 1e-9 * norm);
  }
}

TEST_CASE("hermitian_eig: degenerate spectrum keeps an orthonormal eigenbasis") {
  std::mt19937_64 rng(8);
  const ComplexMatrix q = oracle::random_matrix(rng, 5).householderQr().householderQ();
  RealVector lam(5);
  lam << 1, 1, 1, -2, 0;
  const ComplexMatrix a = q * lam.cast<Complex>().asDiagonal() * q.adjoint();
  const auto e = hermitian_eig<double>(ComplexMatrix((a + a.adjoint()) / 2.0));
  CHECK(e.eigenvalues(0) == doctest::Approx(-2.0));
  CHECK(e.eigenvalues(4) == doctest::Approx(1.0));
  CHECK(max_abs(e.eigenvectors.adjoint() * e.eigenvectors - ComplexMatrix::Identity(5, 5)) < 1e-10);
}

TEST_CASE("hermitian_eig: non-Hermitian input is rejected with the asymmetry norm") {
  ComplexMatrix a = pauli_x();
  a(0, 1) = 2.0;
  try {
    hermitian_eig<double>(a);
    FAIL("expected a NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("1.41421") != std::string::npos);
  }
}

TEST_CASE("partial_trace: product state and Bell state") {
  std::mt19937_64 rng(9);
  const ComplexMatrix ra = oracle::random_density(rng, 3), rb = oracle::random_density(rng, 2);
  const std::vector<std::size_t> dims{3, 2};
  CHECK(max_abs(partial_trace<double>(kron<double>(ra, rb), dims, 0) - ra) < 1e-12);
  CHECK(max_abs(partial_trace<double>(kron<double>(ra, rb), dims, 1) - rb) < 1e-12);

  // Tr_B(A x B) = Tr(B) A for a non-normalized B
  const ComplexMatrix b = 2.5 * rb;
  CHECK(max_abs(partial_trace<double>(kron<double>(ra, b), dims, 0) - 2.5 * ra) < 1e-12);

  const std::vector<std::size_t> qq{2, 2};
  CHECK(max_abs(partial_trace<double>(bell_state(), qq, 0) - identity(2) / 2.0) < 1e-15);
  CHECK(max_abs(partial_trace<double>(bell_state(), qq, 1) - identity(2) / 2.0) < 1e-15);
}

TEST_CASE("partial_trace: random 3x2 state matches the index-sum oracle") {
  std::mt19937_64 rng(10);
  const ComplexMatrix rho = oracle::random_density(rng, 6);
  const std::vector<std::size_t> dims{3, 2};
  const ComplexMatrix a = partial_trace<double>(rho, dims, 0);
  const ComplexMatrix b = partial_trace<double>(rho, dims, 1);
  CHECK(max_abs(a - oracle::partial_trace_sum(rho, 3, 2, true)) < 1e-12);
  CHECK(max_abs(b - oracle::partial_trace_sum(rho, 3, 2, false)) < 1e-12);
  CHECK(std::abs(a.trace() - rho.trace()) < 1e-12);
}

TEST_CASE("partial_trace: three subsystems, middle factor") {
  std::mt19937_64 rng(11);
  const ComplexMatrix a = oracle::random_density(rng, 2), b = oracle::random_density(rng, 3),
                      c = oracle::random_density(rng, 2);
  const std::vector<std::size_t> dims{2, 3, 2};
  const ComplexMatrix abc = kron<double>(kron<double>(a, b), c);
  CHECK(max_abs(partial_trace<double>(abc, dims, 1) - b) < 1e-12);
  CHECK(max_abs(partial_trace<double>(abc, dims, 2) - c) < 1e-12);
}

TEST_CASE("partial_trace / partial_transpose: dimension mismatch") {
  const ComplexMatrix m = ComplexMatrix::Identity(6, 6);
  const std::vector<std::size_t> bad{2, 2};
  CHECK_THROWS_AS(partial_trace<double>(m, bad, 0), DimensionError);
  CHECK_THROWS_AS(partial_transpose<double>(m, bad, 0), DimensionError);
  const std::vector<std::size_t> good{3, 2};
  CHECK_THROWS_AS(partial_trace<double>(m, good, 2), DimensionError);
  CHECK_THROWS_AS(partial_trace<double>(ComplexMatrix::Identity(6, 5), good, 0), DimensionError);
}

TEST_CASE("partial_transpose: product state, Bell state, involution") {
  std::mt19937_64 rng(12);
  const ComplexMatrix ra = oracle::random_density(rng, 3), rb = oracle::random_density(rng, 2);
  const std::vector<std::size_t> dims{3, 2};
  const ComplexMatrix prod = kron<double>(ra, rb);
  const ComplexMatrix pt1 = partial_transpose<double>(prod, dims, 1);
  CHECK(max_abs(pt1 - kron<double>(ra, ComplexMatrix(rb.transpose()))) < 1e-15);
  CHECK(hermitian_eig<double>(pt1).eigenvalues(0) > -1e-12);
  const ComplexMatrix pt0 = partial_transpose<double>(prod, dims, 0);
  CHECK(max_abs(pt0 - kron<double>(ComplexMatrix(ra.transpose()), rb)) < 1e-15);

  const std::vector<std::size_t> qq{2, 2};
  const auto e = hermitian_eig<double>(partial_transpose<double>(bell_state(), qq, 0));
  CHECK(e.eigenvalues(0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(e.eigenvalues(3) == doctest::Approx(0.5).epsilon(1e-14));

  const ComplexMatrix rho = oracle::random_density(rng, 6);
  CHECK(max_abs(partial_transpose<double>(partial_transpose<double>(rho, dims, 0), dims, 0) - rho) == 0.0);
  CHECK(max_abs(partial_transpose<double>(partial_transpose<double>(rho, dims, 1), dims, 1) - rho) == 0.0);
}

TEST_CASE("vec / unvec: column stacking and vec(AXB) = (B^T x A) vec(X)") {
  std::mt19937_64 rng(13);
  const ComplexMatrix a = oracle::random_matrix(rng, 3), x = oracle::random_matrix(rng, 3),
                      b = oracle::random_matrix(rng, 3);
  const ComplexVector v = vec<double>(x);
  CHECK(v(1) == x(1, 0));
  CHECK(v(3) == x(0, 1));
  CHECK(max_abs(unvec<double>(v, 3) - x) == 0.0);
  const ComplexVector lhs = vec<double>(ComplexMatrix(a * x * b));
  const ComplexVector rhs = kron<double>(ComplexMatrix(b.transpose()), a) * v;
  CHECK((lhs - rhs).norm() < 1e-12);
  CHECK_THROWS_AS(unvec<double>(v, 2), DimensionError);
}

TEST_CASE("algebra identities on random matrices") {
  std::mt19937_64 rng(14);
  const ComplexMatrix a = oracle::random_matrix(rng, 4), b = oracle::random_matrix(rng, 4);
  CHECK(max_abs(ComplexMatrix((a * b).adjoint()) - b.adjoint() * a.adjoint()) < 1e-12);
  CHECK(std::abs((a * b).trace() - (b * a).trace()) < 1e-12);
  CHECK(max_abs(commutator<double>(a, a)) == 0.0);
}

TEST_CASE("templated on the scalar: float instantiation") {
  CMatrix<float> m = CMatrix<float>::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0f;
  const auto e = hermitian_eig<float>(m);
  CHECK(e.eigenvalues(0) == doctest::Approx(-1.0f).epsilon(1e-6));
  const CMatrix<float> u = expm<float>(CMatrix<float>(std::complex<float>(0, -1) * m));
  CHECK(std::abs(u(0, 0) - std::complex<float>(std::cos(1.0f), 0)) < 1e-6f);
}
