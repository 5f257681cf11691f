#pragma once

// Dense complex linear algebra kernel.
//
// Everything is a free function over Eigen dense types, templated on the real
// scalar. Subsystem convention (binding everywhere in the library): subsystem 0
// is the leftmost Kronecker factor, and the flattened index of a multi-index
// (i_0, ..., i_{n-1}) is sum_k i_k * prod_{j>k} dims_j.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nvq {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using ComplexMatrix = CMatrix<double>;
using ComplexVector = CVector<double>;
using RealVector = RVector<double>;
using Complex = std::complex<double>;

/// Thrown when a numerical precondition or postcondition is violated
/// (non-Hermitian input, non-finite entries, invalid states).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for inconsistent shapes or subsystem layouts.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Real>
struct EigenDecomposition {
  RVector<Real> eigenvalues;   // ascending
  CMatrix<Real> eigenvectors;  // column k pairs with eigenvalues[k]
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(std::real(a(i, j))) || !std::isfinite(std::imag(a(i, j)))) return false;
  return true;
}

template <typename Real>
void require_square(const CMatrix<Real>& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
}

/// Frobenius norm of A - A^dagger.
template <typename Real>
Real hermitian_defect(const CMatrix<Real>& a) {
  return (a - a.adjoint()).norm();
}

template <typename Real>
bool is_hermitian(const CMatrix<Real>& a, Real rel_tol = Real(1e-10)) {
  if (a.rows() != a.cols()) return false;
  const Real scale = std::max(a.norm(), Real(1));
  return hermitian_defect(a) <= rel_tol * scale;
}

template <typename Real>
CMatrix<Real> kron(const CMatrix<Real>& a, const CMatrix<Real>& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  CMatrix<Real> out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j) out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

template <typename Real>
CMatrix<Real> kron(std::span<const CMatrix<Real>> factors) {
  if (factors.empty()) throw DimensionError("kron: empty factor list");
  CMatrix<Real> out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron<Real>(out, factors[k]);
  return out;
}

namespace detail {

template <typename Real>
Real one_norm(const CMatrix<Real>& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace detail

/// Matrix exponential by scaling and squaring around a degree-13 Padé
/// approximant (Higham 2005 coefficients and threshold).
template <typename Real>
CMatrix<Real> expm(const CMatrix<Real>& a) {
  require_square(a, "expm");
  if (!all_finite(a)) throw NumericalError("expm: input has non-finite entries");

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const Eigen::Index n = a.rows();
  const Real norm = detail::one_norm(a);
  int s = 0;
  if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  const CMatrix<Real> x = a / std::pow(Real(2), s);

  const CMatrix<Real> id = CMatrix<Real>::Identity(n, n);
  const CMatrix<Real> x2 = x * x;
  const CMatrix<Real> x4 = x2 * x2;
  const CMatrix<Real> x6 = x4 * x2;

  const CMatrix<Real> u_inner = Real(b[13]) * x6 + Real(b[11]) * x4 + Real(b[9]) * x2;
  const CMatrix<Real> u = x * (x6 * u_inner + Real(b[7]) * x6 + Real(b[5]) * x4 +
                               Real(b[3]) * x2 + Real(b[1]) * id);
  const CMatrix<Real> v_inner = Real(b[12]) * x6 + Real(b[10]) * x4 + Real(b[8]) * x2;
  const CMatrix<Real> v =
      x6 * v_inner + Real(b[6]) * x6 + Real(b[4]) * x4 + Real(b[2]) * x2 + Real(b[0]) * id;

  CMatrix<Real> r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = (r * r).eval();
  if (!all_finite(r)) throw NumericalError("expm: result overflowed");
  return r;
}

/// Cyclic Jacobi diagonalization of a complex Hermitian matrix.
/// Eigenvalues come back ascending; degenerate eigenvectors are any
/// orthonormal basis of their eigenspace.
template <typename Real>
EigenDecomposition<Real> hermitian_eig(const CMatrix<Real>& input) {
  require_square(input, "hermitian_eig");
  if (!all_finite(input)) throw NumericalError("hermitian_eig: input has non-finite entries");
  const Real scale = input.norm();
  const Real defect = hermitian_defect(input);
  if (defect > Real(1e-10) * std::max(scale, Real(1))) {
    std::ostringstream os;
    os << "hermitian_eig: matrix is not Hermitian (||A - A^H||_F = " << defect
       << ", ||A||_F = " << scale << ")";
    throw NumericalError(os.str());
  }

  const Eigen::Index n = input.rows();
  CMatrix<Real> a = (input + input.adjoint()) / Real(2);
  CMatrix<Real> v = CMatrix<Real>::Identity(n, n);

  auto off_norm = [&] {
    Real sum = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) sum += std::norm(a(i, j));
    return std::sqrt(sum);
  };

  // Sweep to working precision; 1e-12 relative is the convergence requirement.
  const Real required = Real(1e-12) * scale;
  const Real target = Real(4) * std::numeric_limits<Real>::epsilon() * scale;
  constexpr int max_sweeps = 100;
  int sweep = 0;
  Real off = off_norm();
  for (; sweep < max_sweeps && off > target; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const std::complex<Real> apq = a(p, q);
        const Real r = std::abs(apq);
        if (r == Real(0)) continue;
        const std::complex<Real> phase = apq / r;
        const Real app = std::real(a(p, p)), aqq = std::real(a(q, q));
        const Real theta = (aqq - app) / (Real(2) * r);
        const Real t = (theta >= 0 ? Real(1) : Real(-1)) /
                       (std::abs(theta) + std::sqrt(theta * theta + Real(1)));
        const Real c = Real(1) / std::sqrt(t * t + Real(1));
        const Real s = t * c;
        // G = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q).
        const std::complex<Real> g_pp = c, g_pq = s;
        const std::complex<Real> g_qp = -s * std::conj(phase), g_qq = c * std::conj(phase);

        // A <- A G
        for (Eigen::Index k = 0; k < n; ++k) {
          const std::complex<Real> akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * g_pp + akq * g_qp;
          a(k, q) = akp * g_pq + akq * g_qq;
        }
        // A <- G^H A
        for (Eigen::Index k = 0; k < n; ++k) {
          const std::complex<Real> apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(g_pp) * apk + std::conj(g_qp) * aqk;
          a(q, k) = std::conj(g_pq) * apk + std::conj(g_qq) * aqk;
        }
        a(p, q) = 0;
        a(q, p) = 0;
        a(p, p) = std::real(a(p, p));
        a(q, q) = std::real(a(q, q));
        // V <- V G
        for (Eigen::Index k = 0; k < n; ++k) {
          const std::complex<Real> vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * g_pp + vkq * g_qp;
          v(k, q) = vkp * g_pq + vkq * g_qq;
        }
      }
    }
    const Real next = off_norm();
    if (next >= off) {
      off = next;
      break;
    }
    off = next;
  }
  if (off > required) throw NumericalError("hermitian_eig: Jacobi sweeps did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return std::real(a(i, i)) < std::real(a(j, j));
  });

  EigenDecomposition<Real> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = std::real(a(order[k], order[k]));
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  return out;
}

namespace detail {

inline std::size_t checked_total(std::span<const std::size_t> dims, Eigen::Index expected,
                                 const char* what) {
  if (dims.empty()) throw DimensionError(std::string(what) + ": empty subsystem list");
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError(std::string(what) + ": zero subsystem dimension");
    total *= d;
  }
  if (static_cast<Eigen::Index>(total) != expected) {
    std::ostringstream os;
    os << what << ": subsystem dimensions multiply to " << total << " but matrix has dimension "
       << expected;
    throw DimensionError(os.str());
  }
  return total;
}

// Splits a flat index into (before, target, after) coordinates around subsystem k.
struct Split {
  std::size_t before_dim, target_dim, after_dim;
};

inline Split split_at(std::span<const std::size_t> dims, std::size_t k) {
  Split s{1, dims[k], 1};
  for (std::size_t j = 0; j < k; ++j) s.before_dim *= dims[j];
  for (std::size_t j = k + 1; j < dims.size(); ++j) s.after_dim *= dims[j];
  return s;
}

}  // namespace detail

/// Reduced state on subsystem `keep`, tracing out every other subsystem.
template <typename Real>
CMatrix<Real> partial_trace(const CMatrix<Real>& m, std::span<const std::size_t> dims,
                            std::size_t keep) {
  require_square(m, "partial_trace");
  detail::checked_total(dims, m.rows(), "partial_trace");
  if (keep >= dims.size()) throw DimensionError("partial_trace: subsystem index out of range");
  const auto [nb, nk, na] = detail::split_at(dims, keep);
  const auto nki = static_cast<Eigen::Index>(nk);
  CMatrix<Real> out = CMatrix<Real>::Zero(nki, nki);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          const auto row = static_cast<Eigen::Index>((b * nk + i) * na + a);
          const auto col = static_cast<Eigen::Index>((b * nk + j) * na + a);
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += m(row, col);
        }
  return out;
}

/// Transposes the indices of subsystem `which` only.
template <typename Real>
CMatrix<Real> partial_transpose(const CMatrix<Real>& m, std::span<const std::size_t> dims,
                                std::size_t which) {
  require_square(m, "partial_transpose");
  detail::checked_total(dims, m.rows(), "partial_transpose");
  if (which >= dims.size()) throw DimensionError("partial_transpose: subsystem index out of range");
  const auto [nb, nk, na] = detail::split_at(dims, which);
  CMatrix<Real> out(m.rows(), m.cols());
  for (std::size_t b1 = 0; b1 < nb; ++b1)
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t a1 = 0; a1 < na; ++a1)
        for (std::size_t b2 = 0; b2 < nb; ++b2)
          for (std::size_t j = 0; j < nk; ++j)
            for (std::size_t a2 = 0; a2 < na; ++a2) {
              const auto r = static_cast<Eigen::Index>((b1 * nk + i) * na + a1);
              const auto c = static_cast<Eigen::Index>((b2 * nk + j) * na + a2);
              const auto rt = static_cast<Eigen::Index>((b1 * nk + j) * na + a1);
              const auto ct = static_cast<Eigen::Index>((b2 * nk + i) * na + a2);
              out(rt, ct) = m(r, c);
            }
  return out;
}

/// Column-stacking vectorization: vec(X)[i + j*d] = X(i, j).
template <typename Real>
CVector<Real> vec(const CMatrix<Real>& x) {
  return Eigen::Map<const CVector<Real>>(x.data(), x.size());
}

template <typename Real>
CMatrix<Real> unvec(const CVector<Real>& v, Eigen::Index dim) {
  if (v.size() != dim * dim) throw DimensionError("unvec: length is not dim^2");
  return Eigen::Map<const CMatrix<Real>>(v.data(), dim, dim);
}

template <typename Real>
CMatrix<Real> commutator(const CMatrix<Real>& a, const CMatrix<Real>& b) {
  return a * b - b * a;
}

}  // namespace nvq
