#pragma once

// Periodic position grid for a particle on a ring of circumference `length`.
// Same cyclic conjugate-pair construction as the clock, with (T, H) traded
// for (X, P): X = diag(k dx) and P lives on the centered wavenumber lattice
// p_n = 2 pi hbar (n - floor(N/2)) / length, so exp(i P (m dx) / hbar) moves
// the particle by exactly m sites.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "modclock/clock.hpp"
#include "modclock/opalg.hpp"

namespace modclock {

class GridSystem {
 public:
  GridSystem(int n, double length, double mass, std::string label)
      : pair_(n, length / n, 0.0, std::move(label)), length_(length), mass_(mass) {
    if (!(length > 0.0)) throw std::invalid_argument("grid length must be positive");
    if (!(mass > 0.0)) throw std::invalid_argument("grid mass must be positive");
  }

  int n() const { return pair_.d(); }
  double length() const { return length_; }
  double dx() const { return pair_.delta_t(); }
  double mass() const { return mass_; }
  // smallest momentum resolvable on the ring
  double momentum_quantum() const { return pair_.energy_quantum(); }
  const std::string& label() const { return pair_.label(); }
  const SpaceLayout& layout() const { return pair_.layout(); }

  const Operator& position_op() const { return pair_.time_op(); }
  const Operator& momentum_op() const { return pair_.hamiltonian(); }

  double site(int k) const { return pair_.tick_value(k); }
  double momentum(int n) const { return pair_.energy(n); }

  Operator kinetic() const {
    double m = mass_;
    return pair_.conjugate_observable([m](double p) { return p * p / (2.0 * m); });
  }

  // exp(i P ell / hbar); for ell = m dx this permutes sites by m
  Operator position_shift(double ell) const { return pair_.evolution(-ell); }

  // diag(v(x_k)) for an arbitrary on-site potential
  Operator potential(const std::function<double(double)>& v) const {
    RealVector vals(n());
    for (int k = 0; k < n(); ++k) vals[k] = v(site(k));
    return Operator::diagonal(vals, layout());
  }

  // diag(v((x_k + shift) mod length)): the potential dragged along the ring
  Operator shifted_potential(const std::function<double(double)>& v, double shift) const {
    RealVector vals(n());
    for (int k = 0; k < n(); ++k) vals[k] = v(positive_fmod(site(k) + shift, length_));
    return Operator::diagonal(vals, layout());
  }

  StateVector momentum_state(int n) const {
    return StateVector(pair_.energy_state(n), layout());
  }

  // amplitudes on the momentum lattice (entry n pairs with momentum(n))
  Vector momentum_amplitudes(const Vector& amps) const {
    if (amps.size() != n()) throw std::invalid_argument("amplitude count must match the grid");
    return pair_.fourier().adjoint() * amps;
  }

 private:
  ClockModel pair_;
  double length_;
  double mass_;
};

inline GridSystem make_grid(int n, double length, double mass = 1.0,
                            const std::string& label = "S") {
  return GridSystem(n, length, mass, label);
}

// Gaussian packet with a momentum boost; displacements from the center are
// taken on the minimal image so a packet can sit anywhere on the ring.
inline StateVector gaussian_packet(const GridSystem& grid, double center, double sigma,
                                   double momentum = 0.0) {
  if (!(sigma > 0.0)) throw std::invalid_argument("packet width must be positive");
  Vector amps(grid.n());
  for (int k = 0; k < grid.n(); ++k) {
    double delta = std::remainder(grid.site(k) - center, grid.length());
    amps[k] = std::polar(std::exp(-delta * delta / (4.0 * sigma * sigma)),
                         momentum * delta / hbar());
  }
  return StateVector::normalized(std::move(amps), grid.layout());
}

}  // namespace modclock
