#pragma once

// Finite cyclic clock: a d-point time lattice T = diag(t0 + k dt) together
// with the conjugate Hamiltonian H = F diag(E_n) F^dag on the centered
// wavenumber lattice E_n = 2 pi hbar (n - floor(d/2)) / (d dt). With this
// pairing exp(-i H dt / hbar) advances the clock by exactly one tick.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "modclock/opalg.hpp"

namespace modclock {

class ClockModel {
 public:
  ClockModel(int d, double delta_t, double t0, std::string label)
      : d_(d), delta_t_(delta_t), t0_(t0), label_(std::move(label)) {
    if (d_ < 2) throw std::invalid_argument("clock needs at least two ticks");
    if (!(delta_t_ > 0.0)) throw std::invalid_argument("clock tick must be positive");
    if (d_ > max_dim()) throw std::length_error("clock dimension exceeds max_dim cap");
    layout_ = SpaceLayout::single(label_, d_);
  }

  int d() const { return d_; }
  double delta_t() const { return delta_t_; }
  double t0() const { return t0_; }
  double period() const { return d_ * delta_t_; }
  double energy_quantum() const { return 2.0 * pi * hbar() / period(); }
  const std::string& label() const { return label_; }
  const SpaceLayout& layout() const { return layout_; }

  // the dense d x d matrices are built on first use: a clock that only keeps
  // time for a history never pays for them (instances are not shared across
  // threads, so the lazy fill needs no locking)
  const Operator& time_op() const {
    if (t_op_.dim() == 0) {
      RealVector ticks(d_);
      for (int k = 0; k < d_; ++k) ticks[k] = tick_value(k);
      t_op_ = Operator::diagonal(ticks, layout_);
    }
    return t_op_;
  }

  const Operator& hamiltonian() const {
    if (h_op_.dim() == 0) {
      // circulant kernel of H; mirrored halves keep it hermitian to the bit
      Vector kernel(d_);
      for (int r = 0; r <= d_ / 2; ++r) {
        Complex sum = 0.0;
        for (int n = 0; n < d_; ++n)
          sum += energy(n) * std::polar(1.0 / d_, 2.0 * pi * double(r) * centered(n) / d_);
        if (r == 0 || 2 * r == d_) sum = Complex(sum.real(), 0.0);
        kernel[r] = sum;
        if (r > 0 && 2 * r != d_) kernel[d_ - r] = std::conj(sum);
      }
      Matrix h(d_, d_);
      for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k) h(j, k) = kernel[((j - k) % d_ + d_) % d_];
      h_op_ = Operator::hermitian(std::move(h), layout_);
    }
    return h_op_;
  }

  double tick_value(int k) const { return t0_ + k * delta_t_; }
  double energy(int n) const { return energy_quantum() * centered(n); }

  // e^{-i H t / hbar} assembled from the spectral sum (not a permutation
  // shortcut; the exact-shift property is checked against one in the tests)
  Operator evolution(double t) const {
    Vector kernel(d_);
    for (int r = 0; r < d_; ++r) {
      Complex sum = 0.0;
      for (int n = 0; n < d_; ++n)
        sum += std::polar(1.0 / d_,
                          -energy(n) * t / hbar() + 2.0 * pi * double(r) * centered(n) / d_);
      kernel[r] = sum;
    }
    Matrix u(d_, d_);
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k) u(j, k) = kernel[((j - k) % d_ + d_) % d_];
    return trusted_operator(std::move(u), layout_, false, true);
  }

  // advance by an integer number of ticks
  Operator time_shift(int steps) const { return evolution(steps * delta_t_); }

  // F diag(f(E_n)) F^dag assembled from a mirrored circulant kernel, so the
  // result is hermitian to the bit (used for the grid analogue's kinetic term)
  Operator conjugate_observable(const std::function<double(double)>& f) const {
    Vector kernel(d_);
    for (int r = 0; r <= d_ / 2; ++r) {
      Complex sum = 0.0;
      for (int n = 0; n < d_; ++n)
        sum += f(energy(n)) * std::polar(1.0 / d_, 2.0 * pi * double(r) * centered(n) / d_);
      if (r == 0 || 2 * r == d_) sum = Complex(sum.real(), 0.0);
      kernel[r] = sum;
      if (r > 0 && 2 * r != d_) kernel[d_ - r] = std::conj(sum);
    }
    Matrix m(d_, d_);
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k) m(j, k) = kernel[((j - k) % d_ + d_) % d_];
    return Operator::hermitian(std::move(m), layout_);
  }

  // e^{2 pi i T / tau}; when d dt / tau is an integer s this ladders the
  // energy basis by s (mod d)
  Operator modular_time_unitary(double tau) const {
    if (tau == 0.0) throw std::invalid_argument("modular_time_unitary needs tau != 0");
    Vector phases(d_);
    for (int k = 0; k < d_; ++k) phases[k] = std::polar(1.0, 2.0 * pi * tick_value(k) / tau);
    return Operator::diagonal_phases(phases, layout_);
  }

  // k-th column of the centered Fourier unitary, i.e. the H eigenvector of E_n
  Vector energy_state(int n) const {
    Vector v(d_);
    for (int k = 0; k < d_; ++k)
      v[k] = std::polar(1.0 / std::sqrt(double(d_)), 2.0 * pi * double(k) * centered(n) / d_);
    return v;
  }

  Matrix fourier() const {
    Matrix f(d_, d_);
    for (int n = 0; n < d_; ++n) f.col(n) = energy_state(n);
    return f;
  }

 private:
  double centered(int n) const { return double(n - d_ / 2); }

  int d_;
  double delta_t_;
  double t0_;
  std::string label_;
  SpaceLayout layout_;
  mutable Operator t_op_;
  mutable Operator h_op_;
};

inline ClockModel make_clock(int d, double delta_t, double t0 = 0.0, std::string label = "A") {
  return ClockModel(d, delta_t, t0, std::move(label));
}

struct ClockState {
  StateVector state;
  double mean = 0.0;
  double variance = 0.0;
};

// Gaussian amplitude profile exp(-delta^2 / 4 width^2) with delta the
// minimal-image distance on the clock circle; width is clamped below at
// dt/10, which collapses onto the nearest tick eigenstate.
inline ClockState gaussian_clock_state(const ClockModel& clock, double mean, double width) {
  if (!(width >= 0.0)) throw std::invalid_argument("clock state width must be non-negative");
  double w = std::max(width, clock.delta_t() / 10.0);
  Vector amps(clock.d());
  for (int k = 0; k < clock.d(); ++k) {
    double delta = std::remainder(clock.tick_value(k) - mean, clock.period());
    amps[k] = std::exp(-delta * delta / (4.0 * w * w));
  }
  StateVector psi = StateVector::normalized(std::move(amps), clock.layout());
  double m = expectation(psi, clock.time_op()).real();
  double m2 = 0.0;
  for (int k = 0; k < clock.d(); ++k)
    m2 += std::norm(psi.amps()[k]) * clock.tick_value(k) * clock.tick_value(k);
  return ClockState{std::move(psi), m, m2 - m * m};
}

// probability mass within `margin` of the wrap seam (the boundary between
// the last and first tick); interior assertions require this to be tiny
inline double seam_mass(const ClockModel& clock, const StateVector& psi, double margin) {
  double seam = clock.t0() - clock.delta_t() / 2.0;
  double total = 0.0;
  for (int k = 0; k < clock.d(); ++k) {
    double dist = std::abs(std::remainder(clock.tick_value(k) - seam, clock.period()));
    if (dist < margin) total += std::norm(psi.amps()[k]);
  }
  return total;
}

inline bool seam_clear(const ClockModel& clock, const StateVector& psi) {
  return seam_mass(clock, psi, 4.0 * clock.delta_t()) < 1e-8;
}

}  // namespace modclock
