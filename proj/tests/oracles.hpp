#pragma once

// Reference implementations used only by the tests. None of them call the
// library routine they check.

#include "nvq/dynamics.hpp"
#include "nvq/matrix_core.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using nvq::Complex;
using nvq::ComplexMatrix;

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ComplexMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  const ComplexMatrix a = random_matrix(rng, n, scale);
  return (a + a.adjoint()) / 2.0;
}

/// Full-rank random density matrix A A^+ / Tr(A A^+).
inline ComplexMatrix random_density(std::mt19937_64& rng, Eigen::Index n) {
  const ComplexMatrix a = random_matrix(rng, n);
  const ComplexMatrix r = a * a.adjoint();
  return r / r.trace().real();
}

/// Element-by-element Kronecker product from the index formula.
inline ComplexMatrix kron_index(const ComplexMatrix& a, const ComplexMatrix& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  ComplexMatrix out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j)
      for (Eigen::Index k = 0; k < rb; ++k)
        for (Eigen::Index l = 0; l < cb; ++l) out(i * rb + k, j * cb + l) = a(i, j) * b(k, l);
  return out;
}

/// exp(A) = (T_30(A / 2^s))^(2^s) with ||A / 2^s|| <= 1/2.
inline ComplexMatrix expm_taylor(const ComplexMatrix& a, int terms = 30) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::ldexp(1.0, s) > 0.5) ++s;
  const ComplexMatrix x = a / std::ldexp(1.0, s);
  ComplexMatrix term = ComplexMatrix::Identity(a.rows(), a.cols());
  ComplexMatrix sum = term;
  for (int k = 1; k <= terms; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum;
}

/// Real roots of the characteristic polynomial of a 3x3 Hermitian matrix,
/// ascending, from the trigonometric form of Cardano's formula.
inline std::vector<double> hermitian3_eigenvalues(const ComplexMatrix& a) {
  const double c2 = -a.trace().real();
  const double c1 = (a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) -
                     a(0, 1) * a(1, 0) - a(0, 2) * a(2, 0) - a(1, 2) * a(2, 1)).real();
  const double c0 = -a.determinant().real();
  // x^3 + c2 x^2 + c1 x + c0, depressed via x = y - c2/3.
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  std::vector<double> roots(3);
  if (std::abs(p) < 1e-300) {
    roots.assign(3, -c2 / 3.0);
    return roots;
  }
  const double m = 2.0 * std::sqrt(-p / 3.0);
  double arg = 3.0 * q / (p * m);
  arg = std::clamp(arg, -1.0, 1.0);
  const double theta = std::acos(arg) / 3.0;
  for (int k = 0; k < 3; ++k)
    roots[k] = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - c2 / 3.0;
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Tr_B or Tr_A of a bipartite matrix by explicit double-index summation.
inline ComplexMatrix partial_trace_sum(const ComplexMatrix& m, Eigen::Index da, Eigen::Index db,
                                       bool keep_first) {
  if (keep_first) {
    ComplexMatrix out = ComplexMatrix::Zero(da, da);
    for (Eigen::Index i = 0; i < da; ++i)
      for (Eigen::Index j = 0; j < da; ++j)
        for (Eigen::Index k = 0; k < db; ++k) out(i, j) += m(i * db + k, j * db + k);
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(db, db);
  for (Eigen::Index k = 0; k < db; ++k)
    for (Eigen::Index l = 0; l < db; ++l)
      for (Eigen::Index i = 0; i < da; ++i) out(k, l) += m(i * db + k, i * db + l);
  return out;
}

struct Channel {
  ComplexMatrix jump;
  double rate;
};

/// Right-hand side of the master equation in matrix form,
///   -i[H, rho] + sum rate (J rho J^+ - 1/2 J^+ J rho - 1/2 rho J^+ J).
inline ComplexMatrix lindblad_rhs(const ComplexMatrix& h, const std::vector<Channel>& ch,
                                  const ComplexMatrix& rho) {
  const Complex i{0.0, 1.0};
  ComplexMatrix out = -i * (h * rho - rho * h);
  for (const auto& c : ch) {
    const ComplexMatrix jd = c.jump.adjoint();
    const ComplexMatrix jdj = jd * c.jump;
    out += c.rate * (c.jump * rho * jd - 0.5 * (jdj * rho + rho * jdj));
  }
  return out;
}

/// Generator matrix of lindblad_rhs on column-stacked states, assembled one
/// basis matrix E_ij at a time.
inline ComplexMatrix generator_from_rhs(const ComplexMatrix& h, const std::vector<Channel>& ch) {
  const Eigen::Index d = h.rows();
  ComplexMatrix L(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      ComplexMatrix e = ComplexMatrix::Zero(d, d);
      e(i, j) = 1.0;
      const ComplexMatrix r = lindblad_rhs(h, ch, e);
      L.col(j * d + i) = Eigen::Map<const nvq::ComplexVector>(r.data(), d * d);
    }
  return L;
}

/// One classical RK4 step of lindblad_rhs.
inline ComplexMatrix rk4_step(const ComplexMatrix& h, const std::vector<Channel>& ch,
                              const ComplexMatrix& rho, double dt) {
  const ComplexMatrix k1 = lindblad_rhs(h, ch, rho);
  const ComplexMatrix k2 = lindblad_rhs(h, ch, rho + 0.5 * dt * k1);
  const ComplexMatrix k3 = lindblad_rhs(h, ch, rho + 0.5 * dt * k2);
  const ComplexMatrix k4 = lindblad_rhs(h, ch, rho + dt * k3);
  return rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 step matrix minus identity: hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24.
/// For a linear autonomous flow one RK4 step of length h is exactly I + this.
inline ComplexMatrix rk4_increment(const ComplexMatrix& L, double h) {
  const ComplexMatrix x = h * L;
  const ComplexMatrix x2 = x * x;
  return x + x2 / 2.0 + x2 * x / 6.0 + x2 * x2 / 24.0;
}

/// Propagator of 2^m consecutive RK4 steps of length dt / 2^m, where m is the
/// smallest value with ||L dt / 2^m||_1 <= max_hl. Squaring keeps the
/// increment E = P - I separate, (I + E)^2 = I + (2E + E^2), so the identity
/// never absorbs the small terms.
inline ComplexMatrix rk4_propagator(const ComplexMatrix& L, double dt, double max_hl = 2e-4,
                                    int* substeps_log2 = nullptr) {
  const double norm = L.cwiseAbs().colwise().sum().maxCoeff() * dt;
  int m = 0;
  while (norm / std::ldexp(1.0, m) > max_hl) ++m;
  ComplexMatrix e = rk4_increment(L, dt / std::ldexp(1.0, m));
  for (int k = 0; k < m; ++k) e = 2.0 * e + e * e;
  if (substeps_log2) *substeps_log2 = m;
  return ComplexMatrix::Identity(L.rows(), L.cols()) + e;
}

inline std::vector<Channel> channels(const nvq::ProtocolConfig& cfg) {
  const auto sites = nvq::protocol_layout(cfg);
  std::vector<Channel> out;
  for (const auto& d : nvq::protocol_dissipators(cfg)) out.push_back({nvq::jump_operator(d, sites), d.rate});
  return out;
}

/// The protocol integrated with RK4 (via rk4_propagator) on the same step and
/// sampling grid as run_protocol: squeeze samples, then free-evolution samples.
struct Rk4Run {
  std::vector<ComplexMatrix> squeeze;
  std::vector<ComplexMatrix> free;
};

inline Rk4Run rk4_protocol(const nvq::ProtocolConfig& cfg) {
  auto to_vec = [](const ComplexMatrix& r) {
    return nvq::ComplexVector(Eigen::Map<const nvq::ComplexVector>(r.data(), r.size()));
  };
  auto to_mat = [](const nvq::ComplexVector& v, Eigen::Index d) {
    return ComplexMatrix(Eigen::Map<const ComplexMatrix>(v.data(), d, d));
  };
  const auto ch = channels(cfg);
  ComplexMatrix rho = nvq::initial_state(cfg);
  const Eigen::Index d = rho.rows();
  Rk4Run out;
  out.squeeze.push_back(rho);
  if (cfg.squeeze && cfg.t_sq_ns > 0) {
    const double h = cfg.t_sq_ns * 1e-3 / cfg.squeeze_steps;
    const ComplexMatrix P = rk4_propagator(generator_from_rhs(nvq::squeeze_stage_hamiltonian(cfg), ch), h);
    nvq::ComplexVector v = to_vec(rho);
    for (int k = 0; k < cfg.squeeze_steps; ++k) {
      v = P * v;
      out.squeeze.push_back(to_mat(v, d));
    }
    rho = out.squeeze.back();
  }
  const ComplexMatrix u = nvq::protocol_pulse(cfg);
  rho = u * rho * u.adjoint();
  const auto steps = static_cast<long>(std::ceil(cfg.t_fr_us / cfg.free_step_us - 1e-9));
  const double h = cfg.t_fr_us / static_cast<double>(steps);
  const long stride = std::max(1L, std::lround(cfg.sample_step_us / h));
  const ComplexMatrix P = rk4_propagator(generator_from_rhs(nvq::free_stage_hamiltonian(cfg), ch), h);
  nvq::ComplexVector v = to_vec(rho);
  out.free.push_back(rho);
  for (long k = 1; k <= steps; ++k) {
    v = P * v;
    if (k % stride == 0 || k == steps) out.free.push_back(to_mat(v, d));
  }
  return out;
}

}  // namespace oracle
