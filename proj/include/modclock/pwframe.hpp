#pragma once

// History states over a cyclic clock. The clock's ticks index a sequence of
// system states generated by a static term plus a drive whose argument is
// read off the clock. The sequence can be assembled into one entangled state
// on clock x system, conditioned back on a tick, and probed tick-locally
// with shift unitaries on either side. The drive can also be promoted to an
// exact tick-gated operator on the joint space, where a clock-energy shift
// unitary drags the gate schedule around the ring.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modclock/clock.hpp"
#include "modclock/opalg.hpp"

namespace modclock {

// drive: time -> hermitian operator on the system space; empty means none
using DriveFunction = std::function<Operator(double)>;

struct HamiltonianSpec {
  ClockModel clock;       // ticks index the history
  Operator h_system;      // static system generator
  DriveFunction drive;    // optional drive read off the clock
  // the clock itself never appears inside the generator; it only keeps time,
  // and nothing in this model couples to the bookkeeping degree of freedom

  HamiltonianSpec(ClockModel c, Operator h, DriveFunction d = nullptr)
      : clock(std::move(c)), h_system(std::move(h)), drive(std::move(d)) {
    if (!h_system.hermitian_flag())
      throw std::invalid_argument("static system generator must be hermitian");
  }

  // full generator at clock-time t
  Operator generator(double t) const {
    if (!drive) return h_system;
    Operator g = add(h_system, drive(t));
    if (!g.hermitian_flag())
      throw std::invalid_argument("drive must stay hermitian at every time");
    return g;
  }
};

// ===== HISTORY CONSTRUCTION =====

class HistoryState {
 public:
  HistoryState(ClockModel clock, SpaceLayout system_layout, std::vector<Vector> states,
               std::string integrator)
      : clock_(std::move(clock)),
        system_layout_(std::move(system_layout)),
        states_(std::move(states)),
        integrator_(std::move(integrator)) {
    if (static_cast<int>(states_.size()) != clock_.d())
      throw std::invalid_argument("history needs one state per tick");
    for (const Vector& s : states_)
      if (s.size() != system_layout_.total_dim())
        throw std::invalid_argument("history state dim does not match layout");
  }

  const ClockModel& clock() const { return clock_; }
  const SpaceLayout& system_layout() const { return system_layout_; }
  int d() const { return clock_.d(); }
  double delta_t() const { return clock_.delta_t(); }
  const std::string& integrator() const { return integrator_; }

  const Vector& amps_at(int k) const { return states_.at(index(k)); }
  StateVector state(int k) const {
    return StateVector::normalized(states_.at(index(k)), system_layout_);
  }

  // periodic tick indexing
  int index(int k) const {
    int d = clock_.d();
    return ((k % d) + d) % d;
  }

 private:
  ClockModel clock_;
  SpaceLayout system_layout_;
  std::vector<Vector> states_;
  std::string integrator_;
};

// midpoint-sampled stepping: each step applies exp(-i g(t + dt/2) dt / hbar).
// consecutive identical generators reuse the cached propagator, so a constant
// or piecewise-constant generator costs one eigensolve per distinct piece
inline HistoryState propagate_history(const ClockModel& clock, const StateVector& initial,
                                      const std::function<Operator(double)>& generator) {
  if (!generator) throw std::invalid_argument("history needs a generator");
  std::vector<Vector> states;
  states.reserve(clock.d());
  states.push_back(initial.amps());

  Matrix cached_gen;
  Operator propagator;
  bool have_cache = false;
  for (int k = 0; k + 1 < clock.d(); ++k) {
    Operator g = generator(clock.tick_value(k) + 0.5 * clock.delta_t());
    if (!g.hermitian_flag())
      throw std::invalid_argument("generator must be hermitian at every time");
    if (g.layout() != initial.layout())
      throw std::invalid_argument("generator layout does not match the state");
    if (!have_cache || max_abs(Matrix(g.mat() - cached_gen)) != 0.0) {
      propagator = unitary_exp(g, clock.delta_t(), ExpSign::minus);
      cached_gen = g.mat();
      have_cache = true;
    }
    states.push_back(propagator.mat() * states.back());
  }
  return HistoryState(clock, initial.layout(), std::move(states), "midpoint");
}

inline HistoryState build_history(const HamiltonianSpec& spec, const StateVector& initial) {
  if (initial.layout() != spec.h_system.layout())
    throw std::invalid_argument("initial state does not live on the system space");
  return propagate_history(spec.clock, initial,
                           [&spec](double t) { return spec.generator(t); });
}

// ===== ASSEMBLY AND CONDITIONING =====

// (1/sqrt d) sum_k |t_k> (x) |psi_k> on clock x system
inline StateVector assemble_full_state(const HistoryState& h) {
  SpaceLayout full = concat(h.clock().layout(), h.system_layout());
  const Index n = h.system_layout().total_dim();
  Vector amps(full.total_dim());
  const double w = 1.0 / std::sqrt(double(h.d()));
  for (int k = 0; k < h.d(); ++k) amps.segment(Index(k) * n, n) = w * h.amps_at(k);
  return StateVector::normalized(std::move(amps), std::move(full));
}

struct ConditionalState {
  StateVector state;
  double weight;
};

// project the joint state onto tick k of its leading clock factor
inline ConditionalState conditional_state(const StateVector& full, const ClockModel& clock,
                                          int k) {
  if (full.layout().factor(0).label != clock.label() ||
      full.layout().factor(0).dim != clock.d())
    throw std::invalid_argument("leading factor of the state is not this clock");
  if (k < 0 || k >= clock.d()) throw std::out_of_range("tick index out of range");
  const Index n = full.dim() / clock.d();
  Vector block = full.amps().segment(Index(k) * n, n);
  double weight = block.squaredNorm();
  if (weight < 1e-30)
    throw std::invalid_argument("tick carries no weight to condition on");
  SpaceLayout rest = full.layout().drop_first();
  return ConditionalState{StateVector::normalized(std::move(block), std::move(rest)), weight};
}

// ===== TICK-LOCAL EXPECTATIONS =====

// Ordering of the tick projector against a clock-shift unitary. With the
// projector first the shift lands on the ket side; with the projector last
// it lands on the bra side; the symmetric variant averages the two.
enum class SandwichVariant { left, right, sym };

inline Complex tick_overlap(const HistoryState& h, int bra_k, int ket_k) {
  return h.amps_at(bra_k).dot(h.amps_at(ket_k));
}

// d * <<Psi| Pi_k (shift q on the clock) (x) O |Psi>> and its reorderings
inline Complex expectation_at(const HistoryState& h, int k, const Operator& op,
                              SandwichVariant variant = SandwichVariant::left, int q = 0) {
  if (op.layout() != h.system_layout())
    throw std::invalid_argument("operator does not live on the system space");
  auto bracket = [&h, &op](int bra_k, int ket_k) {
    return h.amps_at(bra_k).dot(Vector(op.mat() * h.amps_at(ket_k)));
  };
  switch (variant) {
    case SandwichVariant::left:
      return bracket(k, k + q);
    case SandwichVariant::right:
      return bracket(k - q, k);
    case SandwichVariant::sym:
      return 0.5 * (bracket(k, k + q) + bracket(k - q, k));
  }
  throw std::logic_error("unreachable");
}

// ===== MODULAR ENERGY PROBES =====

struct ModularEnergySample {
  Complex value;
  bool wraps;         // the probed tick pair crossed the ring seam
  bool interpolated;  // the shift fell between ticks
};

// clock-side probe exp(i H_clock q dt / hbar): tick overlaps q apart
inline ModularEnergySample modular_energy_clock_side(
    const HistoryState& h, int k, int q, SandwichVariant variant = SandwichVariant::left) {
  auto out_of_range = [&h](int j) { return j < 0 || j >= h.d(); };
  bool wraps = false;
  Complex value;
  switch (variant) {
    case SandwichVariant::left:
      value = tick_overlap(h, k, k + q);
      wraps = out_of_range(k) || out_of_range(k + q);
      break;
    case SandwichVariant::right:
      value = tick_overlap(h, k - q, k);
      wraps = out_of_range(k) || out_of_range(k - q);
      break;
    case SandwichVariant::sym: {
      ModularEnergySample a = modular_energy_clock_side(h, k, q, SandwichVariant::left);
      ModularEnergySample b = modular_energy_clock_side(h, k, q, SandwichVariant::right);
      return ModularEnergySample{0.5 * (a.value + b.value), a.wraps || b.wraps, false};
    }
  }
  return ModularEnergySample{value, wraps, false};
}

// real shift scale: snaps to the tick lattice when possible, otherwise
// linearly interpolates between the bracketing tick shifts
inline ModularEnergySample modular_energy_clock_side(
    const HistoryState& h, int k, double tau, SandwichVariant variant = SandwichVariant::left) {
  double q_real = tau / h.delta_t();
  double q_round = std::round(q_real);
  if (std::abs(q_real - q_round) <= 1e-9 * std::max(1.0, std::abs(q_real)))
    return modular_energy_clock_side(h, k, int(q_round), variant);
  int q0 = int(std::floor(q_real));
  double w = q_real - q0;
  ModularEnergySample a = modular_energy_clock_side(h, k, q0, variant);
  ModularEnergySample b = modular_energy_clock_side(h, k, q0 + 1, variant);
  return ModularEnergySample{(1.0 - w) * a.value + w * b.value, a.wraps || b.wraps, true};
}

// system-side probe exp(i H_sys tau / hbar) at one tick
inline Complex modular_energy_system_side(const HistoryState& h, const Operator& h_system,
                                          int k, double tau) {
  Operator w = unitary_exp(h_system, tau, ExpSign::plus);
  return expectation_at(h, k, w);
}

// <<Psi| exp(i H_clock q dt / hbar) (x) I |Psi>>: the tick-overlap average
// around the whole ring, seam wrap included
inline Complex global_modular_energy_clock_side(const HistoryState& h, int q) {
  Complex sum = 0.0;
  for (int k = 0; k < h.d(); ++k) sum += tick_overlap(h, k, k + q);
  return sum / double(h.d());
}

// same quantity through the clock's energy decomposition: weights of the
// joint state on each energy level, phased by exp(i E_n tau / hbar). Works
// for any real tau and shares no code with the overlap route.
inline Complex spectral_modular_expectation(const HistoryState& h, double tau) {
  const ClockModel& c = h.clock();
  const Index n_sys = h.system_layout().total_dim();
  Matrix hist(c.d(), n_sys);
  const double w = 1.0 / std::sqrt(double(c.d()));
  for (int k = 0; k < c.d(); ++k) hist.row(k) = w * h.amps_at(k).transpose();
  Matrix in_energy = c.fourier().adjoint() * hist;
  Complex out = 0.0;
  for (int n = 0; n < c.d(); ++n)
    out += std::polar(in_energy.row(n).squaredNorm(), c.energy(n) * tau / hbar());
  return out;
}

// ===== CONSTRAINT RESIDUAL =====

struct ConstraintResidual {
  RealVector per_tick;   // centered-difference defect norm at each tick
  double max_interior;   // worst tick away from the ring seam
  double seam_start;     // k = 0 entry, computed with periodic wrap
  double seam_end;       // k = d-1 entry, computed with periodic wrap
};

// defect of i hbar (d/dt) psi = g(t) psi under the centered difference; the
// two seam entries close the stencil around the ring and are reported apart,
// since a generic history is not periodic
inline ConstraintResidual constraint_residual(const HistoryState& h,
                                              const std::function<Operator(double)>& generator) {
  const int d = h.d();
  const double dt = h.delta_t();
  RealVector r(d);
  for (int k = 0; k < d; ++k) {
    Operator g = generator(h.clock().tick_value(k));
    Vector defect = Complex(0.0, hbar()) * (h.amps_at(k + 1) - h.amps_at(k - 1)) / (2.0 * dt) -
                    g.mat() * h.amps_at(k);
    r[k] = defect.norm();
  }
  double interior = 0.0;
  for (int k = 1; k + 1 < d; ++k) interior = std::max(interior, r[k]);
  double seam_start = r[0], seam_end = r[d - 1];
  return ConstraintResidual{std::move(r), interior, seam_start, seam_end};
}

inline ConstraintResidual constraint_residual(const HistoryState& h,
                                              const HamiltonianSpec& spec) {
  return constraint_residual(h, [&spec](double t) { return spec.generator(t); });
}

// ===== TICK-GATED JOINT OPERATOR =====

// H_clock (x) I + I (x) H_sys + sum_k Pi_k (x) drive(t_(k+gate_shift) mod d):
// the drive promoted to an operator on clock x system, gated by the tick
// projectors; a nonzero gate_shift reindexes the schedule around the ring
inline Operator effective_pair_hamiltonian(const HamiltonianSpec& spec, int gate_shift = 0) {
  const int d = spec.clock.d();
  const Index n = spec.h_system.dim();
  if (Index(d) * n > max_dim())
    throw std::length_error("joint dimension exceeds max_dim cap");
  SpaceLayout joint = concat(spec.clock.layout(), spec.h_system.layout());

  Matrix m = kron(spec.clock.hamiltonian().mat(), Matrix(Matrix::Identity(n, n)));
  for (int k = 0; k < d; ++k) {
    int gate = (((k + gate_shift) % d) + d) % d;
    Operator block = spec.generator(spec.clock.tick_value(gate));
    m.block(Index(k) * n, Index(k) * n, n, n) += block.mat();
  }
  return Operator::hermitian(std::move(m), std::move(joint));
}

struct ConservedModularEnergy {
  std::vector<Complex> series;  // joint-shift expectation at every tick
  double drift;                 // worst departure from the initial value
};

// evolve the joint state by the integrator and watch the expectation of
// exp(i H_joint tau / hbar): a time-independent generator must keep it flat
inline ConservedModularEnergy conserved_modular_energy_check(const HamiltonianSpec& spec,
                                                             const StateVector& initial_joint,
                                                             double tau) {
  Operator h_joint = effective_pair_hamiltonian(spec);
  if (initial_joint.layout() != h_joint.layout())
    throw std::invalid_argument("initial state does not live on the joint space");
  HistoryState h = propagate_history(spec.clock, initial_joint,
                                     [&h_joint](double) { return h_joint; });
  Operator w = unitary_exp(h_joint, tau, ExpSign::plus);
  std::vector<Complex> series;
  series.reserve(h.d());
  for (int k = 0; k < h.d(); ++k)
    series.push_back(h.amps_at(k).dot(Vector(w.mat() * h.amps_at(k))));
  double drift = 0.0;
  for (const Complex& v : series) drift = std::max(drift, std::abs(v - series.front()));
  return ConservedModularEnergy{std::move(series), drift};
}

}  // namespace modclock
