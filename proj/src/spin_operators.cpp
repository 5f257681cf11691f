#include "nvq/spin_operators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nvq {

namespace {

const Complex I{0.0, 1.0};

void require_sites(std::size_t n, const char* what) {
  if (n < 1 || n > 2) throw std::invalid_argument(std::string(what) + ": site count must be 1 or 2");
}

// Sum of embed(op, i) over all sites.
ComplexMatrix collective(const ComplexMatrix& op, std::size_t n, Formalism f) {
  const auto d = static_cast<Eigen::Index>(std::pow(local_dim(f), n));
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  for (std::size_t i = 0; i < n; ++i) out += embed(op, i, n, f);
  return out;
}

}  // namespace

std::string_view to_string(Formalism f) { return f == Formalism::Spin1 ? "spin1" : "spin_half"; }

Formalism formalism_from_string(std::string_view s) {
  if (s == "spin1") return Formalism::Spin1;
  if (s == "spin_half") return Formalism::SpinHalf;
  throw std::invalid_argument("unknown formalism '" + std::string(s) +
                              "' (expected spin1 or spin_half)");
}

std::string_view to_string(FrequencyConvention c) {
  return c == FrequencyConvention::Direct ? "direct" : "two_pi";
}

FrequencyConvention convention_from_string(std::string_view s) {
  if (s == "direct") return FrequencyConvention::Direct;
  if (s == "two_pi") return FrequencyConvention::TwoPi;
  throw std::invalid_argument("unknown frequency convention '" + std::string(s) +
                              "' (expected direct or two_pi)");
}

double PhysicalParams::mhz() const {
  return convention == FrequencyConvention::Direct ? 1.0 : 2.0 * std::numbers::pi;
}

void PhysicalParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + ": must be finite");
    if (v < 0) throw std::invalid_argument(std::string(name) + ": must be non-negative");
  };
  check(D, "D");
  check(gS, "gS");
  check(Bz, "Bz");
  check(c1, "c1");
  check(gamma_t, "gamma_t");
  check(gamma_d, "gamma_d");
  check(g_anc, "g_anc");
}

SpinMatrices spin_matrices(Formalism f) {
  if (f == Formalism::Spin1) {
    const double r = 1.0 / std::sqrt(2.0);
    ComplexMatrix x(3, 3), y(3, 3), z(3, 3);
    x << 0, r, 0,
         r, 0, r,
         0, r, 0;
    y << 0, -I * r, 0,
         I * r, 0, -I * r,
         0, I * r, 0;
    z << 1, 0, 0,
         0, 0, 0,
         0, 0, -1;
    return {x, y, z};
  }
  ComplexMatrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1,
       1, 0;
  y << 0, -I,
       I, 0;
  z << 1, 0,
       0, -1;
  return {x, y, z};
}

ComplexMatrix lowering_operator(Formalism f) {
  const auto s = spin_matrices(f);
  if (f == Formalism::Spin1) return 0.5 * (s.x - I * s.y);
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 0) = 1.0;  // |0><-1|
  return m;
}

ComplexMatrix identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return ComplexMatrix::Identity(d, d);
}

ComplexMatrix embed(const ComplexMatrix& op, std::size_t site, std::span<const std::size_t> dims) {
  if (site >= dims.size()) throw DimensionError("embed: site index out of range");
  if (op.rows() != static_cast<Eigen::Index>(dims[site]) || op.cols() != op.rows())
    throw DimensionError("embed: operator dimension does not match the site dimension");
  ComplexMatrix out = site == 0 ? op : identity(dims[0]);
  for (std::size_t k = 1; k < dims.size(); ++k)
    out = kron<double>(out, k == site ? op : identity(dims[k]));
  return out;
}

ComplexMatrix embed(const ComplexMatrix& op, std::size_t site, std::size_t n, Formalism f) {
  const auto dims = register_dims(n, f);
  return embed(op, site, dims);
}

std::vector<std::size_t> register_dims(std::size_t n, Formalism f) {
  if (n < 1) throw DimensionError("register needs at least one site");
  return std::vector<std::size_t>(n, local_dim(f));
}

ComplexMatrix free_hamiltonian(const PhysicalParams& p, std::size_t n, Formalism f) {
  require_sites(n, "free_hamiltonian");
  const auto s = spin_matrices(f);
  if (f == Formalism::Spin1) {
    const ComplexMatrix h1 = p.D * p.ghz() * s.z * s.z + p.gS * p.Bz * p.mhz() * s.z;
    return collective(h1, n, f);
  }
  const double omega = p.D * p.ghz() - p.gS * p.Bz * p.mhz();
  return collective(0.5 * omega * s.z, n, f);
}

ComplexMatrix field_generator(const PhysicalParams& p, std::size_t n, Formalism f) {
  require_sites(n, "field_generator");
  const auto s = spin_matrices(f);
  if (f == Formalism::Spin1) return collective(p.gS * p.mhz() * s.z, n, f);
  return collective(-0.5 * p.gS * p.mhz() * s.z, n, f);
}

ComplexMatrix squeezing_hamiltonian(const PhysicalParams& p, std::size_t n, Formalism f) {
  require_sites(n, "squeezing_hamiltonian");
  const ComplexMatrix sx = collective(spin_matrices(f).x, n, f);
  return p.c1 * p.ghz() * sx * sx;
}

ComplexMatrix half_pi_pulse(std::size_t n, Formalism f) {
  require_sites(n, "half_pi_pulse");
  const double angle = f == Formalism::Spin1 ? std::numbers::pi / 2 : std::numbers::pi / 4;
  const ComplexMatrix u1 = expm<double>(-I * angle * spin_matrices(f).x);
  ComplexMatrix u = u1;
  for (std::size_t k = 1; k < n; ++k) u = kron<double>(u, u1);
  return u;
}

SpinMatrices manifold_collective_J(std::size_t n) {
  require_sites(n, "manifold_collective_J");
  // Spin-1 basis indices: |+1> = 0, |0> = 1, |-1> = 2.
  ComplexMatrix sx = ComplexMatrix::Zero(3, 3), sy = sx, sz = sx;
  sx(1, 2) = 1.0;
  sx(2, 1) = 1.0;
  sy(1, 2) = I;
  sy(2, 1) = -I;
  sz(2, 2) = 1.0;
  sz(1, 1) = -1.0;
  return {0.5 * collective(sx, n, Formalism::Spin1), 0.5 * collective(sy, n, Formalism::Spin1),
          0.5 * collective(sz, n, Formalism::Spin1)};
}

SpinMatrices qubit_collective_J(std::size_t n) {
  require_sites(n, "qubit_collective_J");
  const auto s = spin_matrices(Formalism::SpinHalf);
  return {0.5 * collective(s.x, n, Formalism::SpinHalf),
          0.5 * collective(s.y, n, Formalism::SpinHalf),
          0.5 * collective(s.z, n, Formalism::SpinHalf)};
}

ComplexMatrix ancilla_coupling(const PhysicalParams& p, Formalism f) {
  const auto nv = spin_matrices(f);
  const auto anc = spin_matrices(Formalism::SpinHalf);
  return p.g_anc * p.ghz() * (kron<double>(nv.x, anc.x) + kron<double>(nv.y, anc.y));
}

ComplexMatrix excited_product_state(std::size_t n, Formalism f) {
  const std::size_t d = local_dim(f);
  ComplexMatrix local = ComplexMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const Eigen::Index excited = f == Formalism::Spin1 ? 2 : 0;
  local(excited, excited) = 1.0;
  ComplexMatrix rho = local;
  for (std::size_t k = 1; k < n; ++k) rho = kron<double>(rho, local);
  return rho;
}

}  // namespace nvq
