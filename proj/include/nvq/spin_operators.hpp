#pragma once

// Operators for one or two NV centres in the spin-1 (qutrit) or reduced
// spin-1/2 (qubit) description.
//
// Local basis ordering:
//   Spin1    : (|+1>, |0>, |-1>), so S_z = diag(1, 0, -1)
//   SpinHalf : (|-1>, |0>),       so sigma_z = |-1><-1| - |0><0| = diag(1, -1)
//
// Units: parameters are stored as quoted (GHz, MHz/G, G, MHz). Internally time
// is in microseconds and every frequency is an angular frequency in rad/us,
// obtained through `PhysicalParams::mhz` and `PhysicalParams::ghz`.

#include "nvq/matrix_core.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nvq {

enum class Formalism { Spin1, SpinHalf };

constexpr std::size_t local_dim(Formalism f) { return f == Formalism::Spin1 ? 3 : 2; }

std::string_view to_string(Formalism f);
Formalism formalism_from_string(std::string_view s);

/// How quoted frequencies map onto angular frequencies.
/// Direct: 1 GHz -> 1000 rad/us. TwoPi (default): 1 GHz -> 2*pi*1000 rad/us.
enum class FrequencyConvention { Direct, TwoPi };

std::string_view to_string(FrequencyConvention c);
FrequencyConvention convention_from_string(std::string_view s);

struct PhysicalParams {
  double D = 2.87;         // zero-field splitting, GHz
  double gS = 2.80;        // gyromagnetic ratio, MHz/G
  double Bz = 50.0;        // field along the NV axis, G
  double c1 = 2.5;         // squeezing constant, GHz
  double gamma_t = 0.2;    // thermalization rate, MHz
  double gamma_d = 0.02;   // dephasing rate, MHz
  double g_anc = 0.1;      // NV-ancilla coupling, GHz
  FrequencyConvention convention = FrequencyConvention::TwoPi;

  /// rad/us per quoted MHz.
  double mhz() const;
  /// rad/us per quoted GHz.
  double ghz() const { return 1000.0 * mhz(); }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const PhysicalParams&) const = default;
};

struct SpinMatrices {
  ComplexMatrix x, y, z;
};

/// Spin-1 matrices with hbar = 1, or the Pauli matrices for SpinHalf.
SpinMatrices spin_matrices(Formalism f);

/// Spin1: 1/2 (S_x - i S_y), prefactor included as written for the model.
/// SpinHalf: sigma^- = |0><-1|.
ComplexMatrix lowering_operator(Formalism f);

ComplexMatrix identity(std::size_t dim);

/// I x ... x op x ... x I over the given subsystem dimensions.
ComplexMatrix embed(const ComplexMatrix& op, std::size_t site, std::span<const std::size_t> dims);
/// Homogeneous register of n sites of formalism f.
ComplexMatrix embed(const ComplexMatrix& op, std::size_t site, std::size_t n, Formalism f);

std::vector<std::size_t> register_dims(std::size_t n, Formalism f);

/// Spin1: sum_i D S_zi^2 + gS Bz S_zi.  SpinHalf: sum_i (omega/2) sigma_zi with
/// omega = D - gS Bz.
ComplexMatrix free_hamiltonian(const PhysicalParams& p, std::size_t n, Formalism f);

/// d H0 / d Bz, the generator of the field encoding.
ComplexMatrix field_generator(const PhysicalParams& p, std::size_t n, Formalism f);

/// One-axis twisting c1 (sum_i S_xi)^2, with sigma_x in place of S_x for SpinHalf.
ComplexMatrix squeezing_hamiltonian(const PhysicalParams& p, std::size_t n, Formalism f);

/// Product of single-site pi/2 rotations about x. Spin1 uses exp(-i pi/2 S_x);
/// SpinHalf uses exp(-i pi/4 sigma_x), which is the pi/2 rotation of the Bloch
/// vector.
ComplexMatrix half_pi_pulse(std::size_t n, Formalism f);

/// Collective spin on the {|0>, |-1>} manifold of n spin-1 sites (n = 1 or 2):
/// J_a = 1/2 sum_i sigma_a^(i), each sigma_a acting as zero on |+1>.
SpinMatrices manifold_collective_J(std::size_t n);

/// Collective spin sum_i sigma^(i)/2 of n qubits.
SpinMatrices qubit_collective_J(std::size_t n);

/// g (S_x x sigma_x + S_y x sigma_y) for one NV (first factor) and one ancilla
/// qubit (second factor, basis (|e>, |g>)). `g` is in quoted GHz.
ComplexMatrix ancilla_coupling(const PhysicalParams& p, Formalism f = Formalism::Spin1);

/// Product state in which every site is in |-1>.
ComplexMatrix excited_product_state(std::size_t n, Formalism f);

}  // namespace nvq
