#include "nvq/metrology.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nvq {

namespace {

using Vec3 = std::array<double, 3>;

double expectation(const ComplexMatrix& rho, const ComplexMatrix& op) {
  return (rho * op).trace().real();
}

SpinMatrices collective_spin_for(Eigen::Index dim, std::size_t& n_spins) {
  switch (dim) {
    case 3: n_spins = 1; return manifold_collective_J(1);
    case 9: n_spins = 2; return manifold_collective_J(2);
    case 2: n_spins = 1; return qubit_collective_J(1);
    case 4: n_spins = 2; return qubit_collective_J(2);
    default: break;
  }
  std::ostringstream os;
  os << "squeezing_parameter: unsupported state dimension " << dim
     << " (expected 3 or 9 for spin-1, 2 or 4 for qubits)";
  throw DimensionError(os.str());
}

}  // namespace

ParameterDerivative rho_derivative(const ProtocolConfig& cfg, double delta) {
  if (!(delta > 0) || !std::isfinite(delta))
    throw std::invalid_argument("rho_derivative: delta must be positive");
  ProtocolConfig plus = cfg, minus = cfg;
  plus.params.Bz += delta;
  minus.params.Bz -= delta;
  const Trajectory tp = run_protocol(plus);
  const Trajectory tm = run_protocol(minus);
  const auto& sp = tp.observed();
  const auto& sm = tm.observed();
  ParameterDerivative out;
  out.delta = delta;
  out.states.reserve(sp.size());
  for (std::size_t k = 0; k < sp.size(); ++k) out.states.push_back((sp[k] - sm[k]) / (2 * delta));
  return out;
}

ParameterDerivative tangent_derivative(const ProtocolConfig& cfg) {
  const Trajectory traj = run_protocol(cfg, true);
  return {traj.observed_tangent(), 0.0};
}

std::string_view to_string(DerivativeMethod m) {
  return m == DerivativeMethod::Tangent ? "tangent" : "central";
}

DerivativeMethod derivative_method_from_string(std::string_view s) {
  if (s == "tangent") return DerivativeMethod::Tangent;
  if (s == "central") return DerivativeMethod::CentralDifference;
  throw std::invalid_argument("unknown derivative method '" + std::string(s) +
                              "' (expected tangent or central)");
}

QfiBreakdown qfi_breakdown(const ComplexMatrix& rho, const ComplexMatrix& drho, double cutoff) {
  require_square(rho, "qfi");
  if (drho.rows() != rho.rows() || drho.cols() != rho.cols())
    throw DimensionError("qfi: derivative dimension does not match the state");
  check_density_matrix(rho, {}, "qfi");

  const ComplexMatrix sym = (rho + rho.adjoint()) / 2.0;
  const auto eig = hermitian_eig<double>(sym);
  const ComplexMatrix& v = eig.eigenvectors;
  const ComplexMatrix d = v.adjoint() * drho * v;
  const Eigen::Index n = rho.rows();

  QfiBreakdown out;
  ComplexMatrix sld_eigbasis = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      const double denom = eig.eigenvalues(k) + eig.eigenvalues(l);
      if (denom <= cutoff) continue;
      out.spectral += 2.0 * std::norm(d(k, l)) / denom;
      sld_eigbasis(k, l) = 2.0 * d(k, l) / denom;
    }
  const ComplexMatrix sld = v * sld_eigbasis * v.adjoint();
  out.sld = (sym * sld * sld).trace().real();
  return out;
}

double qfi(const ComplexMatrix& rho, const ComplexMatrix& drho, double cutoff) {
  const auto q = qfi_breakdown(rho, drho, cutoff);
  const double scale = std::max(std::abs(q.spectral), std::abs(q.sld));
  if (std::abs(q.spectral - q.sld) > 1e-6 * scale + 1e-12) {
    std::ostringstream os;
    os << "qfi: spectral form " << q.spectral << " disagrees with Tr(rho L^2) = " << q.sld;
    throw NumericalError(os.str());
  }
  return std::max(q.spectral, 0.0);
}

double cramer_rao_bound(double fisher) {
  if (fisher < 0) throw std::invalid_argument("cramer_rao_bound: negative Fisher information");
  return fisher > 0 ? 1.0 / std::sqrt(fisher) : std::numeric_limits<double>::infinity();
}

void Povm::validate() const {
  if (elements.empty()) throw NumericalError("povm: no elements");
  const Eigen::Index n = elements.front().rows();
  ComplexMatrix sum = ComplexMatrix::Zero(n, n);
  for (const auto& e : elements) {
    if (e.rows() != n || e.cols() != n) throw DimensionError("povm: elements differ in dimension");
    const double lmin = hermitian_eig<double>((e + e.adjoint()) / 2.0).eigenvalues(0);
    if (lmin < -1e-10) {
      std::ostringstream os;
      os << "povm: element has negative eigenvalue " << lmin;
      throw NumericalError(os.str());
    }
    sum += e;
  }
  const double defect = (sum - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "povm: elements do not sum to the identity (max deviation " << defect << ")";
    throw NumericalError(os.str());
  }
}

Povm projective_povm(const ComplexMatrix& op) {
  const auto eig = hermitian_eig<double>(op);
  const Eigen::Index n = op.rows();
  Povm povm;
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && eig.eigenvalues(stop) - eig.eigenvalues(stop - 1) <= 1e-8) ++stop;
    const auto block = eig.eigenvectors.middleCols(start, stop - start);
    povm.elements.push_back(block * block.adjoint());
    start = stop;
  }
  return povm;
}

Povm product_povm(const ComplexMatrix& local_op, std::size_t n) {
  if (n < 1) throw DimensionError("product_povm: need at least one site");
  const Povm local = projective_povm(local_op);
  Povm out = local;
  for (std::size_t k = 1; k < n; ++k) {
    Povm next;
    for (const auto& a : out.elements)
      for (const auto& b : local.elements) next.elements.push_back(kron<double>(a, b));
    out = std::move(next);
  }
  return out;
}

double cfi(const ComplexMatrix& rho, const ComplexMatrix& drho, const Povm& povm, double cutoff) {
  povm.validate();
  if (povm.elements.front().rows() != rho.rows())
    throw DimensionError("cfi: POVM dimension does not match the state");
  double total_p = 0;
  double out = 0;
  for (const auto& e : povm.elements) {
    const double p = expectation(rho, e);
    const double dp = expectation(drho, e);
    total_p += p;
    if (p > cutoff) out += dp * dp / p;
  }
  if (std::abs(total_p - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "cfi: outcome probabilities sum to " << total_p;
    throw NumericalError(os.str());
  }
  return out;
}

double squeezing_parameter(const ComplexMatrix& rho) {
  require_square(rho, "squeezing_parameter");
  std::size_t n_spins = 0;
  const SpinMatrices j = collective_spin_for(rho.rows(), n_spins);
  const std::array<const ComplexMatrix*, 3> ops{&j.x, &j.y, &j.z};

  Vec3 mean{};
  for (std::size_t a = 0; a < 3; ++a) mean[a] = expectation(rho, *ops[a]);
  const double length = std::sqrt(mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]);
  if (length < 1e-9)
    throw UndefinedDirectionError("squeezing_parameter: mean spin vanishes, direction undefined");
  const Vec3 n{mean[0] / length, mean[1] / length, mean[2] / length};

  // Coordinate axis least aligned with n (ties resolved x, y, z).
  std::size_t axis = 0;
  for (std::size_t a = 1; a < 3; ++a)
    if (std::abs(n[a]) < std::abs(n[axis])) axis = a;
  Vec3 e1{};
  e1[axis] = 1.0;
  for (std::size_t a = 0; a < 3; ++a) e1[a] -= n[axis] * n[a];
  const double e1_len = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& c : e1) c /= e1_len;
  const Vec3 e2{n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2],
                n[0] * e1[1] - n[1] * e1[0]};

  auto along = [&](const Vec3& e) {
    return ComplexMatrix(e[0] * j.x + e[1] * j.y + e[2] * j.z);
  };
  const ComplexMatrix j1 = along(e1), j2 = along(e2);
  const double m1 = expectation(rho, j1), m2 = expectation(rho, j2);
  const double g11 = expectation(rho, j1 * j1) - m1 * m1;
  const double g22 = expectation(rho, j2 * j2) - m2 * m2;
  const double g12 = 0.5 * expectation(rho, j1 * j2 + j2 * j1) - m1 * m2;
  const double half_trace = 0.5 * (g11 + g22);
  const double radius = std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + g12 * g12);
  const double var_min = half_trace - radius;
  return 4.0 * var_min / static_cast<double>(n_spins);
}

double log_negativity(const ComplexMatrix& rho, std::span<const std::size_t> dims) {
  if (dims.size() != 2) throw DimensionError("log_negativity: expected a bipartite layout");
  const ComplexMatrix pt = partial_transpose<double>(rho, dims, 0);
  const auto eig = hermitian_eig<double>((pt + pt.adjoint()) / 2.0);
  double negativity = 0;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k)
    if (eig.eigenvalues(k) < 0) negativity -= eig.eigenvalues(k);
  return std::log2(2.0 * negativity + 1.0);
}

double find_optimal_tsq(const ProtocolConfig& cfg, double t_max_ns, int grid) {
  if (cfg.params.c1 <= 0) throw std::invalid_argument("find_optimal_tsq: c1 = 0, no squeezing to optimize");
  if (grid < 3) throw std::invalid_argument("find_optimal_tsq: grid must have at least 3 points");
  if (!(t_max_ns > 0)) throw std::invalid_argument("find_optimal_tsq: t_max must be positive");
  ProtocolConfig scan = cfg;
  scan.squeeze = true;
  scan.t_sq_ns = t_max_ns;
  scan.squeeze_steps = grid;
  const Trajectory traj = run_squeeze_stage(scan);

  double best_t = 0, best_xi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    ComplexMatrix rho = traj.states[k];
    if (cfg.nonmarkovian) rho = partial_trace<double>(rho, traj.dims, 0);
    const double xi = squeezing_parameter(rho);
    if (xi < best_xi) {
      best_xi = xi;
      best_t = t_max_ns * static_cast<double>(k) / grid;
    }
  }
  return best_t;
}

std::vector<MetrologyRecord> evaluate_protocol(const ProtocolConfig& cfg,
                                               const ObservableSelection& sel,
                                               const DerivativeOptions& opts) {
  const bool need_deriv = sel.qfi || sel.cfi;
  const bool tangent = need_deriv && opts.method == DerivativeMethod::Tangent;
  const Trajectory traj = run_protocol(cfg, tangent);
  const auto& observed = traj.observed();
  std::optional<ParameterDerivative> deriv;
  if (tangent) deriv = ParameterDerivative{traj.observed_tangent(), 0.0};
  else if (need_deriv) deriv = rho_derivative(cfg, opts.delta);

  std::optional<Povm> povm_x, povm_y;
  if (sel.cfi) {
    const auto s = spin_matrices(cfg.formalism);
    povm_x = product_povm(s.x, cfg.n_spins);
    povm_y = product_povm(s.y, cfg.n_spins);
  }
  if (sel.logneg && traj.dims.size() != 2)
    throw std::invalid_argument("log negativity needs a bipartite register (two NVs or NV + ancilla)");

  std::vector<MetrologyRecord> out;
  out.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    MetrologyRecord r;
    r.time = traj.times[k];
    if (sel.qfi) r.qfi = qfi(observed[k], deriv->states[k]);
    if (sel.cfi) {
      r.cfi_sx = cfi(observed[k], deriv->states[k], *povm_x);
      r.cfi_sy = cfi(observed[k], deriv->states[k], *povm_y);
    }
    if (sel.xi2) r.xi2 = squeezing_parameter(observed[k]);
    if (sel.logneg) r.log_negativity = log_negativity(traj.states[k], traj.dims);
    out.push_back(r);
  }
  return out;
}

}  // namespace nvq
