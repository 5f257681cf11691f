#pragma once

// Lindblad dynamics and the Ramsey protocol: optional squeezing under
// H0 + H_S, an instantaneous pi/2 pulse, then free evolution under H0.
//
// Superoperators act on the column-stacked state vec(rho); see `vec`.

#include "nvq/matrix_core.hpp"
#include "nvq/spin_operators.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace nvq {

enum class DissipatorKind { Dephasing, Thermalization };

/// One Lindblad channel. The jump operator is S_z / sigma_z (Dephasing) or the
/// lowering operator (Thermalization) of the site's formalism. `rate` is an
/// internal rate in 1/us.
struct DissipatorSpec {
  DissipatorKind kind = DissipatorKind::Dephasing;
  std::size_t site = 0;
  double rate = 0.0;
};

/// Formalism of each tensor factor, leftmost first.
using SiteLayout = std::vector<Formalism>;

std::vector<std::size_t> layout_dims(std::span<const Formalism> sites);

ComplexMatrix jump_operator(const DissipatorSpec& d, std::span<const Formalism> sites);

/// Dephasing and thermalization on each listed site, rates from `p`.
std::vector<DissipatorSpec> markovian_dissipators(const PhysicalParams& p,
                                                  std::span<const std::size_t> on_sites);

/// L such that vec(drho/dt) = L vec(rho) for
///   drho/dt = -i[H, rho] + sum_k rate_k (J rho J^+ - 1/2 {J^+ J, rho}).
/// For sigma_z (J^2 = I) the dephasing term reduces to rate (J rho J - rho); for
/// spin-1 S_z the anticommutator keeps the flow trace preserving.
ComplexMatrix liouvillian(const ComplexMatrix& h, std::span<const DissipatorSpec> diss,
                          std::span<const Formalism> sites);

struct StateTolerance {
  double hermitian = 1e-9;
  double trace = 1e-9;
  double min_eigenvalue = -1e-8;
};

/// Throws NumericalError with diagnostics if rho is not a valid density matrix.
void check_density_matrix(const ComplexMatrix& rho, const StateTolerance& tol = {},
                          std::string_view context = "state");

struct Trajectory {
  std::vector<double> times;           // us
  std::vector<ComplexMatrix> states;   // full register state per sample
  std::vector<ComplexMatrix> probe;    // reduced NV state (non-Markovian runs), else empty
  std::vector<std::size_t> dims;       // subsystem dimensions of `states`

  // d/dBz of `states` and `probe` (1/G), filled only by tangent propagation.
  std::vector<ComplexMatrix> tangent;
  std::vector<ComplexMatrix> probe_tangent;

  /// The states observables are evaluated on: reduced NV states when present.
  const std::vector<ComplexMatrix>& observed() const { return probe.empty() ? states : probe; }
  const std::vector<ComplexMatrix>& observed_tangent() const {
    return probe.empty() ? tangent : probe_tangent;
  }
};

/// Piecewise-constant propagation rho(t + h) = expm(L h) rho(t) with equal steps
/// of at most `step`; samples every `sample_interval` (rounded to a whole number
/// of steps) plus the final time. Every sample is validated.
Trajectory propagate(const ComplexMatrix& rho0, const ComplexMatrix& L, double duration,
                     double step, double sample_interval);

/// Propagates (rho, d rho/dBz) together. Each step uses the block exponential
/// expm([[L, dL], [0, L]] h) = [[P, dP], [0, P]], whose corner dP is the exact
/// derivative of the step propagator, so the tangent carries no finite-difference
/// error. The tangent samples land in `Trajectory::tangent`.
Trajectory propagate_tangent(const ComplexMatrix& rho0, const ComplexMatrix& drho0,
                             const ComplexMatrix& L, const ComplexMatrix& dL, double duration,
                             double step, double sample_interval);

/// U rho U^+, U unitary to 1e-10.
ComplexMatrix apply_unitary(const ComplexMatrix& rho, const ComplexMatrix& u);

enum class DissipatorPlacement { NVOnly, AncillaOnly, Both };

std::string_view to_string(DissipatorPlacement p);
DissipatorPlacement placement_from_string(std::string_view s);

struct ProtocolConfig {
  Formalism formalism = Formalism::Spin1;
  std::size_t n_spins = 1;
  PhysicalParams params{};
  bool squeeze = false;
  double t_sq_ns = 3.0;
  double t_fr_us = 20.0;
  double sample_step_us = 0.1;
  double free_step_us = 0.01;
  int squeeze_steps = 100;
  bool nonmarkovian = false;
  DissipatorPlacement placement = DissipatorPlacement::AncillaOnly;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const ProtocolConfig&) const = default;
};

/// Register layout: n sites of the formalism, plus an ancilla qubit for
/// non-Markovian runs.
SiteLayout protocol_layout(const ProtocolConfig& cfg);

/// Hamiltonians of the two evolution stages on the full register.
ComplexMatrix free_stage_hamiltonian(const ProtocolConfig& cfg);
ComplexMatrix squeeze_stage_hamiltonian(const ProtocolConfig& cfg);
std::vector<DissipatorSpec> protocol_dissipators(const ProtocolConfig& cfg);
ComplexMatrix initial_state(const ProtocolConfig& cfg);
ComplexMatrix protocol_pulse(const ProtocolConfig& cfg);

/// d L / d Bz for a Hamiltonian whose field dependence is `generator` * Bz.
ComplexMatrix field_liouvillian(const ComplexMatrix& generator);

/// d H / d Bz on the full register (identical in both stages).
ComplexMatrix protocol_field_generator(const ProtocolConfig& cfg);

/// Squeeze stage from the initial state, sampled at every step (t in us from
/// the start of squeezing). Returns just the initial state if squeezing is off.
Trajectory run_squeeze_stage(const ProtocolConfig& cfg, bool with_tangent = false);

/// Full protocol; the returned trajectory covers free evolution only, with t = 0
/// immediately after the pulse. With `with_tangent`, d rho/dBz is propagated
/// alongside (Bz enters H0 in every stage).
Trajectory run_protocol(const ProtocolConfig& cfg, bool with_tangent = false);

/// Single NV plus ancilla qubit; `probe` holds the reduced NV states.
Trajectory run_protocol_nonmarkovian(const ProtocolConfig& cfg, bool with_tangent = false);

}  // namespace nvq
