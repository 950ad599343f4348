#pragma once

// Modular variables. For a hermitian generator A and a shift scale theta the
// observable content of "A modulo 2 pi hbar / theta" is carried entirely by
// the unitary exp(i A theta / hbar) and its integer powers. This header
// provides that unitary, the folded observable, the moment sequence
// <exp(i n A theta / hbar)>, a binned phase distribution, and the exact
// phase relation between conjugate shift pairs on a uniform lattice.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modclock/opalg.hpp"

namespace modclock {

struct ModularVariable {
  Operator base;      // hermitian generator
  double scale;       // conjugate shift theta
  std::string label;

  ModularVariable(Operator base_op, double shift_scale, std::string name = "")
      : base(std::move(base_op)), scale(shift_scale), label(std::move(name)) {
    if (!base.hermitian_flag())
      throw std::invalid_argument("modular variable needs a hermitian base");
    if (!(scale > 0.0))
      throw std::invalid_argument("modular variable needs a positive scale");
  }

  // eigenvalue period the unitary cannot distinguish
  double modulus() const { return 2.0 * pi * hbar() / scale; }
};

// exp(i A theta / hbar)
inline Operator modular_unitary(const ModularVariable& v) {
  return unitary_exp(v.base, v.scale, ExpSign::plus);
}

// fold the spectrum of a hermitian operator into [0, modulus)
inline Operator modular_reduce(const Operator& op, double modulus) {
  if (!op.hermitian_flag())
    throw std::invalid_argument("modular reduction needs a hermitian operator");
  if (!(modulus > 0.0))
    throw std::invalid_argument("modular reduction needs a positive modulus");
  return apply_to_spectrum(op, [modulus](double v) { return positive_fmod(v, modulus); });
}

inline Operator modular_reduce(const ModularVariable& v) {
  return modular_reduce(v.base, v.modulus());
}

// ===== MOMENT SEQUENCE =====

class UncertaintyProfile {
 public:
  explicit UncertaintyProfile(std::vector<Complex> values) : values_(std::move(values)) {
    for (const Complex& m : values_)
      if (std::abs(m) > 1.0 + 1e-12)
        throw std::logic_error("moment of a unitary cannot exceed unit modulus");
  }

  int n_max() const { return static_cast<int>(values_.size()); }

  Complex moment(int n) const {
    if (n < 1 || n > n_max()) throw std::out_of_range("moment index out of range");
    return values_[n - 1];
  }

  double max_abs_moment() const {
    double best = 0.0;
    for (const Complex& m : values_) best = std::max(best, std::abs(m));
    return best;
  }

 private:
  std::vector<Complex> values_;
};

namespace detail {

// spectral weights w_j and phases phi_j = lambda_j theta / hbar of psi in the
// eigenbasis of the generator; diagonal generators skip the eigensolve
inline void spectral_phases(const StateVector& psi, const ModularVariable& v,
                            std::vector<double>& weights, std::vector<double>& phases) {
  if (psi.layout() != v.base.layout())
    throw std::invalid_argument("state and modular variable live on different spaces");
  const Index dim = v.base.dim();
  weights.resize(static_cast<size_t>(dim));
  phases.resize(static_cast<size_t>(dim));
  if (strictly_diagonal(v.base.mat())) {
    for (Index j = 0; j < dim; ++j) {
      weights[j] = std::norm(psi.amps()[j]);
      phases[j] = v.base.mat()(j, j).real() * v.scale / hbar();
    }
    return;
  }
  HermitianEigen eig = hermitian_eig(v.base);
  Vector coeffs = eig.vectors.adjoint() * psi.amps();
  for (Index j = 0; j < dim; ++j) {
    weights[j] = std::norm(coeffs[j]);
    phases[j] = eig.values[j] * v.scale / hbar();
  }
}

}  // namespace detail

// moments <exp(i n A theta / hbar)> for n = 1..n_max, computed spectrally
inline UncertaintyProfile fourier_moments(const StateVector& psi, const ModularVariable& v,
                                          int n_max = 8) {
  if (n_max < 1) throw std::invalid_argument("need at least one moment");
  std::vector<double> weights, phases;
  detail::spectral_phases(psi, v, weights, phases);
  std::vector<Complex> moments(static_cast<size_t>(n_max), Complex(0.0, 0.0));
  for (size_t j = 0; j < weights.size(); ++j)
    for (int n = 1; n <= n_max; ++n)
      moments[n - 1] += std::polar(weights[j], n * phases[j]);
  return UncertaintyProfile(std::move(moments));
}

// every probe power of the shift unitary averages to (near) zero
inline bool is_completely_uncertain(const UncertaintyProfile& profile, double tol = 1e-8) {
  return profile.max_abs_moment() < tol;
}

// histogram of the folded phase A theta / hbar mod 2 pi over [0, 2 pi);
// weights sum to one
inline RealVector modular_distribution(const StateVector& psi, const ModularVariable& v,
                                       int bins) {
  if (bins < 1) throw std::invalid_argument("need at least one bin");
  std::vector<double> weights, phases;
  detail::spectral_phases(psi, v, weights, phases);
  RealVector hist = RealVector::Zero(bins);
  const double width = 2.0 * pi / bins;
  for (size_t j = 0; j < weights.size(); ++j) {
    int b = static_cast<int>(positive_fmod(phases[j], 2.0 * pi) / width);
    if (b >= bins) b = bins - 1;
    hist[b] += weights[j];
  }
  return hist;
}

inline double modular_bin_center(int b, int bins) { return (b + 0.5) * 2.0 * pi / bins; }

// ===== CONJUGATE SHIFT PAIRS =====

struct WeylCheckResult {
  Complex phase;              // exp(-i ell p0 / hbar)
  double relation_residual;   // || U_x U_p - phase U_p U_x ||_max
  double commutator_residual; // || U_x U_p - U_p U_x ||_max
};

// Exact phase relation between U_x = exp(i X p0 / hbar) and
// U_p = exp(i P ell / hbar) on a uniform N-site lattice of spacing dx:
// requires ell on the site lattice and p0 on the reciprocal lattice
// 2 pi hbar / (N dx), otherwise neither unitary closes on the ring.
inline WeylCheckResult weyl_commutation_check(const Operator& x, const Operator& p,
                                              double ell, double p0) {
  if (x.layout() != p.layout())
    throw std::invalid_argument("shift pair must live on one space");
  if (!x.hermitian_flag() || !p.hermitian_flag())
    throw std::invalid_argument("shift pair must be hermitian");
  if (!strictly_diagonal(x.mat()))
    throw std::invalid_argument("lattice coordinate must be diagonal");

  const Index n_sites = x.dim();
  if (n_sites < 2) throw std::invalid_argument("lattice needs at least two sites");
  const double dx = (x.mat()(1, 1) - x.mat()(0, 0)).real();
  if (!(dx > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
  for (Index k = 0; k + 1 < n_sites; ++k) {
    double step = (x.mat()(k + 1, k + 1) - x.mat()(k, k)).real();
    if (std::abs(step - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw std::invalid_argument("lattice coordinate must be uniformly spaced");
  }

  const double ring = n_sites * dx;
  const double p_unit = 2.0 * pi * hbar() / ring;
  const double m_sites = ell / dx;
  const double n_recip = p0 / p_unit;
  if (std::abs(m_sites - std::round(m_sites)) > 1e-9 * std::max(1.0, std::abs(m_sites)))
    throw std::invalid_argument("shift is not a whole number of lattice sites");
  if (std::abs(n_recip - std::round(n_recip)) > 1e-9 * std::max(1.0, std::abs(n_recip)))
    throw std::invalid_argument("momentum is not on the reciprocal lattice");

  Operator ux = unitary_exp(x, p0, ExpSign::plus);
  Operator up = unitary_exp(p, ell, ExpSign::plus);
  Matrix forward = ux.mat() * up.mat();
  Matrix reversed = up.mat() * ux.mat();
  Complex phase = std::polar(1.0, -ell * p0 / hbar());
  return WeylCheckResult{phase, max_abs(Matrix(forward - phase * reversed)),
                         max_abs(Matrix(forward - reversed))};
}

}  // namespace modclock
