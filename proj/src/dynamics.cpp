#include "nvq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nvq {

namespace {

const Complex I{0.0, 1.0};

ComplexMatrix local_jump(DissipatorKind kind, Formalism f) {
  return kind == DissipatorKind::Dephasing ? spin_matrices(f).z : lowering_operator(f);
}

}  // namespace

std::vector<std::size_t> layout_dims(std::span<const Formalism> sites) {
  std::vector<std::size_t> dims;
  dims.reserve(sites.size());
  for (Formalism f : sites) dims.push_back(local_dim(f));
  return dims;
}

ComplexMatrix jump_operator(const DissipatorSpec& d, std::span<const Formalism> sites) {
  if (d.site >= sites.size()) throw DimensionError("jump_operator: site index out of range");
  const auto dims = layout_dims(sites);
  return embed(local_jump(d.kind, sites[d.site]), d.site, dims);
}

std::vector<DissipatorSpec> markovian_dissipators(const PhysicalParams& p,
                                                  std::span<const std::size_t> on_sites) {
  std::vector<DissipatorSpec> out;
  for (std::size_t site : on_sites) {
    if (p.gamma_t > 0) out.push_back({DissipatorKind::Thermalization, site, p.gamma_t * p.mhz()});
    if (p.gamma_d > 0) out.push_back({DissipatorKind::Dephasing, site, p.gamma_d * p.mhz()});
  }
  return out;
}

ComplexMatrix liouvillian(const ComplexMatrix& h, std::span<const DissipatorSpec> diss,
                          std::span<const Formalism> sites) {
  require_square(h, "liouvillian");
  const auto dims = layout_dims(sites);
  detail::checked_total(dims, h.rows(), "liouvillian");
  if (!is_hermitian(h)) {
    std::ostringstream os;
    os << "liouvillian: Hamiltonian is not Hermitian (||H - H^H||_F = " << hermitian_defect(h)
       << ")";
    throw NumericalError(os.str());
  }
  const Eigen::Index d = h.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);

  // vec(A X B) = (B^T kron A) vec(X)
  ComplexMatrix L = -I * (kron<double>(id, h) - kron<double>(h.transpose(), id));
  for (const auto& spec : diss) {
    if (spec.rate < 0) throw std::invalid_argument("liouvillian: negative dissipation rate");
    if (spec.rate == 0) continue;
    const ComplexMatrix j = jump_operator(spec, sites);
    const ComplexMatrix jdj = j.adjoint() * j;
    L += spec.rate * (kron<double>(j.conjugate(), j) -
                      0.5 * kron<double>(id, jdj) - 0.5 * kron<double>(jdj.transpose(), id));
  }
  return L;
}

void check_density_matrix(const ComplexMatrix& rho, const StateTolerance& tol,
                          std::string_view context) {
  require_square(rho, "check_density_matrix");
  std::ostringstream os;
  if (!all_finite(rho)) {
    os << context << ": non-finite entries";
    throw NumericalError(os.str());
  }
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.hermitian) {
    os << context << ": not Hermitian (max |rho - rho^H| = " << herm << ")";
    throw NumericalError(os.str());
  }
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > tol.trace) {
    os << context << ": trace " << tr.real() << (tr.imag() >= 0 ? "+" : "") << tr.imag()
       << "i differs from 1";
    throw NumericalError(os.str());
  }
  const ComplexMatrix sym = (rho + rho.adjoint()) / 2.0;
  const double lmin = hermitian_eig<double>(sym).eigenvalues(0);
  if (lmin < tol.min_eigenvalue) {
    os << context << ": negative eigenvalue " << lmin;
    throw NumericalError(os.str());
  }
}

namespace {

struct Stepping {
  long n_steps = 0;
  double h = 0;
  long stride = 1;
};

Stepping plan_steps(double duration, double step, double sample_interval) {
  if (!(duration >= 0) || !std::isfinite(duration))
    throw std::invalid_argument("propagate: duration must be finite and non-negative");
  if (!(step > 0)) throw std::invalid_argument("propagate: step must be positive");
  Stepping s;
  if (duration == 0) return s;
  s.n_steps = static_cast<long>(std::max(1.0, std::ceil(duration / step - 1e-9)));
  s.h = duration / static_cast<double>(s.n_steps);
  s.stride = sample_interval > 0 ? std::max(1L, std::lround(sample_interval / s.h)) : 1L;
  return s;
}

void check_superoperator(const ComplexMatrix& rho0, const ComplexMatrix& L) {
  require_square(rho0, "propagate");
  const Eigen::Index d = rho0.rows();
  if (L.rows() != d * d || L.cols() != d * d)
    throw DimensionError("propagate: superoperator does not match the state dimension");
}

ComplexMatrix checked_sample(const ComplexVector& v, Eigen::Index d, double t) {
  ComplexMatrix rho = unvec<double>(v, d);
  std::ostringstream ctx;
  ctx << "propagate: sample at t = " << t;
  check_density_matrix(rho, {}, ctx.str());
  return rho;
}

}  // namespace

Trajectory propagate(const ComplexMatrix& rho0, const ComplexMatrix& L, double duration,
                     double step, double sample_interval) {
  check_superoperator(rho0, L);
  const auto plan = plan_steps(duration, step, sample_interval);
  check_density_matrix(rho0, {}, "propagate: initial state");
  const Eigen::Index d = rho0.rows();

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);
  if (plan.n_steps == 0) return traj;

  const ComplexMatrix P = expm<double>(ComplexMatrix(L * plan.h));
  ComplexVector v = vec<double>(rho0);
  for (long k = 1; k <= plan.n_steps; ++k) {
    v = P * v;
    if (k % plan.stride == 0 || k == plan.n_steps) {
      const double t = duration * static_cast<double>(k) / static_cast<double>(plan.n_steps);
      traj.times.push_back(t);
      traj.states.push_back(checked_sample(v, d, t));
    }
  }
  return traj;
}

Trajectory propagate_tangent(const ComplexMatrix& rho0, const ComplexMatrix& drho0,
                             const ComplexMatrix& L, const ComplexMatrix& dL, double duration,
                             double step, double sample_interval) {
  check_superoperator(rho0, L);
  if (dL.rows() != L.rows() || dL.cols() != L.cols())
    throw DimensionError("propagate_tangent: dL does not match L");
  if (drho0.rows() != rho0.rows() || drho0.cols() != rho0.cols())
    throw DimensionError("propagate_tangent: initial tangent does not match the state");
  const auto plan = plan_steps(duration, step, sample_interval);
  check_density_matrix(rho0, {}, "propagate: initial state");
  const Eigen::Index d = rho0.rows();

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);
  traj.tangent.push_back(drho0);
  if (plan.n_steps == 0) return traj;

  const Eigen::Index m = L.rows();
  ComplexMatrix block = ComplexMatrix::Zero(2 * m, 2 * m);
  block.topLeftCorner(m, m) = L * plan.h;
  block.topRightCorner(m, m) = dL * plan.h;
  block.bottomRightCorner(m, m) = L * plan.h;
  const ComplexMatrix E = expm<double>(block);
  const ComplexMatrix P = E.topLeftCorner(m, m);
  const ComplexMatrix dP = E.topRightCorner(m, m);

  ComplexVector v = vec<double>(rho0);
  ComplexVector w = vec<double>(drho0);
  for (long k = 1; k <= plan.n_steps; ++k) {
    w = (P * w + dP * v).eval();
    v = (P * v).eval();
    if (k % plan.stride == 0 || k == plan.n_steps) {
      const double t = duration * static_cast<double>(k) / static_cast<double>(plan.n_steps);
      traj.times.push_back(t);
      traj.states.push_back(checked_sample(v, d, t));
      traj.tangent.push_back(unvec<double>(w, d));
    }
  }
  return traj;
}

ComplexMatrix apply_unitary(const ComplexMatrix& rho, const ComplexMatrix& u) {
  require_square(u, "apply_unitary");
  if (u.rows() != rho.rows()) throw DimensionError("apply_unitary: dimension mismatch");
  const ComplexMatrix id = ComplexMatrix::Identity(u.rows(), u.cols());
  const double defect = (u.adjoint() * u - id).cwiseAbs().maxCoeff();
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "apply_unitary: operator is not unitary (max |U^H U - I| = " << defect << ")";
    throw NumericalError(os.str());
  }
  return u * rho * u.adjoint();
}

std::string_view to_string(DissipatorPlacement p) {
  switch (p) {
    case DissipatorPlacement::NVOnly: return "nv_only";
    case DissipatorPlacement::AncillaOnly: return "ancilla_only";
    case DissipatorPlacement::Both: return "both";
  }
  return "?";
}

DissipatorPlacement placement_from_string(std::string_view s) {
  if (s == "nv_only") return DissipatorPlacement::NVOnly;
  if (s == "ancilla_only") return DissipatorPlacement::AncillaOnly;
  if (s == "both") return DissipatorPlacement::Both;
  throw std::invalid_argument("unknown dissipator placement '" + std::string(s) +
                              "' (expected nv_only, ancilla_only or both)");
}

void ProtocolConfig::validate() const {
  params.validate();
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0)
      throw std::invalid_argument(std::string(name) + ": must be finite and positive");
  };
  if (n_spins < 1 || n_spins > 2) throw std::invalid_argument("n_spins: must be 1 or 2");
  if (!std::isfinite(t_sq_ns) || t_sq_ns < 0)
    throw std::invalid_argument("t_sq_ns: must be finite and non-negative");
  if (!std::isfinite(t_fr_us) || t_fr_us < 0)
    throw std::invalid_argument("t_fr_us: must be finite and non-negative");
  positive(sample_step_us, "sample_step_us");
  positive(free_step_us, "free_step_us");
  if (squeeze_steps < 1) throw std::invalid_argument("squeeze_steps: must be at least 1");
  if (nonmarkovian && n_spins != 1)
    throw std::invalid_argument("nonmarkovian: requires n_spins = 1");
  if (nonmarkovian && formalism != Formalism::Spin1)
    throw std::invalid_argument("nonmarkovian: requires the spin1 formalism");
}

SiteLayout protocol_layout(const ProtocolConfig& cfg) {
  SiteLayout sites(cfg.n_spins, cfg.formalism);
  if (cfg.nonmarkovian) sites.push_back(Formalism::SpinHalf);
  return sites;
}

namespace {

ComplexMatrix with_ancilla(const ComplexMatrix& op) { return kron<double>(op, identity(2)); }

}  // namespace

ComplexMatrix free_stage_hamiltonian(const ProtocolConfig& cfg) {
  const ComplexMatrix h0 = free_hamiltonian(cfg.params, cfg.n_spins, cfg.formalism);
  if (!cfg.nonmarkovian) return h0;
  return with_ancilla(h0) + ancilla_coupling(cfg.params, cfg.formalism);
}

ComplexMatrix squeeze_stage_hamiltonian(const ProtocolConfig& cfg) {
  const ComplexMatrix hs = squeezing_hamiltonian(cfg.params, cfg.n_spins, cfg.formalism);
  return free_stage_hamiltonian(cfg) + (cfg.nonmarkovian ? with_ancilla(hs) : hs);
}

std::vector<DissipatorSpec> protocol_dissipators(const ProtocolConfig& cfg) {
  std::vector<std::size_t> sites;
  if (!cfg.nonmarkovian) {
    for (std::size_t i = 0; i < cfg.n_spins; ++i) sites.push_back(i);
  } else {
    if (cfg.placement != DissipatorPlacement::AncillaOnly) sites.push_back(0);
    if (cfg.placement != DissipatorPlacement::NVOnly) sites.push_back(1);
  }
  return markovian_dissipators(cfg.params, sites);
}

ComplexMatrix initial_state(const ProtocolConfig& cfg) {
  const ComplexMatrix nv = excited_product_state(cfg.n_spins, cfg.formalism);
  if (!cfg.nonmarkovian) return nv;
  ComplexMatrix ground = ComplexMatrix::Zero(2, 2);
  ground(1, 1) = 1.0;  // ancilla |g>
  return kron<double>(nv, ground);
}

ComplexMatrix protocol_pulse(const ProtocolConfig& cfg) {
  const ComplexMatrix u = half_pi_pulse(cfg.n_spins, cfg.formalism);
  return cfg.nonmarkovian ? with_ancilla(u) : u;
}

ComplexMatrix field_liouvillian(const ComplexMatrix& generator) {
  require_square(generator, "field_liouvillian");
  const Eigen::Index d = generator.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  return -I * (kron<double>(id, generator) - kron<double>(generator.transpose(), id));
}

ComplexMatrix protocol_field_generator(const ProtocolConfig& cfg) {
  const ComplexMatrix g = field_generator(cfg.params, cfg.n_spins, cfg.formalism);
  return cfg.nonmarkovian ? with_ancilla(g) : g;
}

namespace {

// One evolution stage, with or without the tangent.
Trajectory evolve(const ComplexMatrix& rho0, const ComplexMatrix* drho0, const ComplexMatrix& h,
                  const ProtocolConfig& cfg, double duration, double step, double sample) {
  const auto sites = protocol_layout(cfg);
  const auto diss = protocol_dissipators(cfg);
  const ComplexMatrix L = liouvillian(h, diss, sites);
  Trajectory traj =
      drho0 ? propagate_tangent(rho0, *drho0, L, field_liouvillian(protocol_field_generator(cfg)),
                                duration, step, sample)
            : propagate(rho0, L, duration, step, sample);
  traj.dims = layout_dims(sites);
  return traj;
}

}  // namespace

Trajectory run_squeeze_stage(const ProtocolConfig& cfg, bool with_tangent) {
  cfg.validate();
  const ComplexMatrix rho0 = initial_state(cfg);
  const ComplexMatrix zero = ComplexMatrix::Zero(rho0.rows(), rho0.cols());
  if (!cfg.squeeze || cfg.t_sq_ns == 0) {
    Trajectory traj;
    traj.times = {0.0};
    traj.states = {rho0};
    if (with_tangent) traj.tangent = {zero};
    traj.dims = layout_dims(protocol_layout(cfg));
    return traj;
  }
  const double t_sq = cfg.t_sq_ns * 1e-3;
  const double h = t_sq / cfg.squeeze_steps;
  return evolve(rho0, with_tangent ? &zero : nullptr, squeeze_stage_hamiltonian(cfg), cfg, t_sq, h,
                h);
}

namespace {

Trajectory run_full(const ProtocolConfig& cfg, bool with_tangent) {
  const Trajectory prep = run_squeeze_stage(cfg, with_tangent);
  const ComplexMatrix u = protocol_pulse(cfg);
  const ComplexMatrix pulsed = apply_unitary(prep.states.back(), u);
  if (!with_tangent)
    return evolve(pulsed, nullptr, free_stage_hamiltonian(cfg), cfg, cfg.t_fr_us,
                  cfg.free_step_us, cfg.sample_step_us);
  const ComplexMatrix dpulsed = u * prep.tangent.back() * u.adjoint();
  return evolve(pulsed, &dpulsed, free_stage_hamiltonian(cfg), cfg, cfg.t_fr_us, cfg.free_step_us,
                cfg.sample_step_us);
}

}  // namespace

Trajectory run_protocol(const ProtocolConfig& cfg, bool with_tangent) {
  cfg.validate();
  if (cfg.nonmarkovian) return run_protocol_nonmarkovian(cfg, with_tangent);
  return run_full(cfg, with_tangent);
}

Trajectory run_protocol_nonmarkovian(const ProtocolConfig& cfg, bool with_tangent) {
  if (!cfg.nonmarkovian)
    throw std::invalid_argument("run_protocol_nonmarkovian: nonmarkovian flag not set");
  cfg.validate();
  Trajectory traj = run_full(cfg, with_tangent);
  for (const auto& rho : traj.states) traj.probe.push_back(partial_trace<double>(rho, traj.dims, 0));
  for (const auto& drho : traj.tangent)
    traj.probe_tangent.push_back(partial_trace<double>(drho, traj.dims, 0));
  return traj;
}

}  // namespace nvq
