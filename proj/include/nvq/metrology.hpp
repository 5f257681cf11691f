#pragma once

// Estimation-theoretic observables of the field Bz: quantum and classical
// Fisher information, the Kitagawa-Ueda squeezing parameter, and logarithmic
// negativity.

#include "nvq/dynamics.hpp"
#include "nvq/matrix_core.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nvq {

/// Per-sample central differences d rho / d Bz (units 1/G).
struct ParameterDerivative {
  std::vector<ComplexMatrix> states;
  double delta = 1e-3;  // G
};

/// Runs the protocol at Bz + delta and Bz - delta. Bz enters H0 in every stage.
ParameterDerivative rho_derivative(const ProtocolConfig& cfg, double delta = 1e-3);

/// Exact d rho / d Bz from tangent propagation alongside a single run
/// (`delta` is reported as 0).
ParameterDerivative tangent_derivative(const ProtocolConfig& cfg);

enum class DerivativeMethod { Tangent, CentralDifference };

std::string_view to_string(DerivativeMethod m);
DerivativeMethod derivative_method_from_string(std::string_view s);

struct QfiBreakdown {
  double spectral = 0;  // 2 sum |<k|drho|l>|^2 / (l_k + l_l)
  double sld = 0;       // Tr(rho L^2) with L rebuilt from the same spectral data
};

/// Both evaluations of the QFI; pairs with l_k + l_l <= cutoff are skipped.
QfiBreakdown qfi_breakdown(const ComplexMatrix& rho, const ComplexMatrix& drho,
                           double cutoff = 1e-12);

/// Spectral-form QFI. Throws NumericalError if it disagrees with Tr(rho L^2)
/// by more than 1e-6 relative.
double qfi(const ComplexMatrix& rho, const ComplexMatrix& drho, double cutoff = 1e-12);

/// Lower bound 1/sqrt(F) on the field uncertainty; infinite when F = 0.
double cramer_rao_bound(double fisher);

struct Povm {
  std::vector<ComplexMatrix> elements;

  /// Completeness to 1e-10 and positivity (min eigenvalue >= -1e-10).
  void validate() const;
};

/// Eigenprojectors of a Hermitian operator, eigenvalues grouped within 1e-8.
Povm projective_povm(const ComplexMatrix& op);

/// Products of single-site eigenprojectors of `local_op` over n sites.
Povm product_povm(const ComplexMatrix& local_op, std::size_t n);

/// sum_i (d p_i)^2 / p_i over outcomes with p_i > cutoff.
double cfi(const ComplexMatrix& rho, const ComplexMatrix& drho, const Povm& povm,
           double cutoff = 1e-12);

/// Thrown when the mean spin vanishes and no squeezing direction exists.
class UndefinedDirectionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Kitagawa-Ueda xi^2 = 4 (Var J_perp)_min / N with the collective spin taken on
/// the {|0>, |-1>} manifold (spin-1 registers, dim 3 or 9) or on the qubits
/// (dim 2 or 4).
double squeezing_parameter(const ComplexMatrix& rho);

/// log2(2 N + 1), N the absolute sum of negative eigenvalues of the partial
/// transpose on subsystem 0.
double log_negativity(const ComplexMatrix& rho, std::span<const std::size_t> dims);

/// Scans squeeze durations t_max * k / grid (k = 1..grid) and returns the one
/// minimizing xi^2 right after squeezing; ties go to the shorter duration. ns.
double find_optimal_tsq(const ProtocolConfig& cfg, double t_max_ns, int grid);

struct MetrologyRecord {
  double time = 0;
  double qfi = 0;
  std::optional<double> cfi_sx, cfi_sy, xi2, log_negativity;
};

struct ObservableSelection {
  bool qfi = true;
  bool cfi = false;
  bool xi2 = false;
  bool logneg = false;

  bool operator==(const ObservableSelection&) const = default;
};

struct DerivativeOptions {
  DerivativeMethod method = DerivativeMethod::Tangent;
  double delta = 1e-3;  // G, central differences only

  bool operator==(const DerivativeOptions&) const = default;
};

/// Evaluates the selected observables at every free-evolution sample.
std::vector<MetrologyRecord> evaluate_protocol(const ProtocolConfig& cfg,
                                               const ObservableSelection& sel,
                                               const DerivativeOptions& deriv = {});

}  // namespace nvq
