#pragma once

// Three runnable physical settings built on the clock/grid machinery: a
// two-packet interference state probed through shift expectations, a particle
// bouncing in a box whose far wall is displaced while the particle is away
// from it, and a spin driven by a pulse train read off the clock. Each comes
// with a config struct, a runner returning raw series plus packaged checks,
// and pinned default geometries.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modclock/clock.hpp"
#include "modclock/grid.hpp"
#include "modclock/modvars.hpp"
#include "modclock/opalg.hpp"
#include "modclock/pwframe.hpp"
#include "modclock/verify.hpp"

namespace modclock {

// ===== TWO-PACKET INTERFERENCE =====

struct DoubleSlitConfig {
  double center = 6.0;  // near packet position
  double sigma = 0.25;  // packet width
  double ell = 4.0;     // packet separation, a whole number of sites
  double phi = 0.0;     // relative phase on the far packet
};

inline DoubleSlitConfig default_double_slit(double phi) {
  DoubleSlitConfig cfg;
  cfg.phi = phi;
  return cfg;
}

// geometry for moment probes up to n=5: the separation divides the box four
// extra times over, so no probed shift comes back around the ring
inline DoubleSlitConfig collapse_double_slit(double phi) {
  DoubleSlitConfig cfg;
  cfg.ell = 2.0;
  cfg.sigma = 0.125;
  cfg.phi = phi;
  return cfg;
}

// (|xi_1> + e^{i phi} |xi_2>)/sqrt(2) with xi_2 the same packet one
// separation along; the packets must not overlap measurably
inline StateVector two_packet_state(const GridSystem& grid, const DoubleSlitConfig& cfg) {
  double sites = cfg.ell / grid.dx();
  if (std::abs(sites - std::round(sites)) > 1e-9)
    throw std::invalid_argument("separation must be a whole number of sites");
  Vector near = gaussian_packet(grid, cfg.center, cfg.sigma).amps();
  Vector far = gaussian_packet(grid, cfg.center + cfg.ell, cfg.sigma).amps();
  if (std::abs(near.dot(far)) > 1e-12)
    throw std::invalid_argument("packets overlap; widen the separation or narrow them");
  return StateVector::normalized(near + std::polar(1.0, cfg.phi) * far, grid.layout());
}

// moments of exp(i n P ell / hbar) on the two-packet state
inline UncertaintyProfile double_slit_moments(const GridSystem& grid,
                                              const DoubleSlitConfig& cfg, int n_max = 8) {
  StateVector psi = two_packet_state(grid, cfg);
  return fourier_moments(psi, ModularVariable(grid.momentum_op(), cfg.ell, "momentum"), n_max);
}

// worst relative phase-dependence over monomials X^a P^b with a+b <= degree;
// scales are read off the occupied position and momentum ranges so degrees
// are compared on an even footing
inline double polynomial_phase_insensitivity(const GridSystem& grid,
                                             const DoubleSlitConfig& cfg, int max_degree,
                                             const std::vector<double>& phis) {
  if (max_degree < 1) throw std::invalid_argument("need degree at least one");

  auto monomial_table = [&](double phi) {
    DoubleSlitConfig c = cfg;
    c.phi = phi;
    Vector amps = two_packet_state(grid, c).amps();
    double x_sup = 0.0, p_sup = 0.0;
    for (int k = 0; k < grid.n(); ++k)
      if (std::norm(amps[k]) > 1e-12) x_sup = std::max(x_sup, std::abs(grid.site(k)));
    Vector wave = grid.momentum_amplitudes(amps);
    for (int j = 0; j < grid.n(); ++j)
      if (std::norm(wave[j]) > 1e-12) p_sup = std::max(p_sup, std::abs(grid.momentum(j)));

    std::vector<Complex> vals;
    std::vector<double> scales;
    Vector pb = amps;
    for (int b = 0; b <= max_degree; ++b) {
      Vector xa_pb = pb;
      for (int a = 0; a + b <= max_degree; ++a) {
        vals.push_back(amps.dot(xa_pb));
        scales.push_back(std::pow(x_sup, a) * std::pow(p_sup, b));
        for (int k = 0; k < grid.n(); ++k) xa_pb[k] *= grid.site(k);
      }
      pb = grid.momentum_op().mat() * pb;
    }
    return std::pair<std::vector<Complex>, std::vector<double>>(std::move(vals),
                                                                std::move(scales));
  };

  auto base = monomial_table(0.0);
  double worst = 0.0;
  for (double phi : phis) {
    auto probe = monomial_table(phi);
    for (std::size_t i = 0; i < base.first.size(); ++i)
      worst = std::max(worst, std::abs(probe.first[i] - base.first[i]) / base.second[i]);
  }
  return worst;
}

struct CollapseDemo {
  UncertaintyProfile before;
  UncertaintyProfile after;
};

// projecting onto one packet wipes out every shift moment: the retained
// packet alone carries no trace of the relative phase
inline CollapseDemo collapse_uncertainty_demo(const GridSystem& grid,
                                              const DoubleSlitConfig& cfg, int n_max = 5) {
  ModularVariable var(grid.momentum_op(), cfg.ell, "momentum");
  StateVector psi = two_packet_state(grid, cfg);
  UncertaintyProfile before = fourier_moments(psi, var, n_max);

  Vector near = gaussian_packet(grid, cfg.center, cfg.sigma).amps();
  Complex weight = near.dot(psi.amps());
  StateVector collapsed = StateVector::normalized(weight * near, grid.layout());
  UncertaintyProfile after = fourier_moments(collapsed, var, n_max);
  return CollapseDemo{std::move(before), std::move(after)};
}

// ===== PARTICLE AND MOVING WALL =====

struct PistonConfig {
  double wall_left = 2.0;     // rise midpoint of the left wall
  double wall_right = 14.0;   // rise midpoint of the movable right wall
  double wall_height = 1500.0;
  double wall_scale = 0.125;  // sigmoid steepness (2 dx at N=256, L=16)
  double displacement = pi / 192.0;  // distance the wall moves in
  double ramp_start = 0.03;
  double ramp_end = 0.10;
  double packet_center = 6.0;
  double packet_momentum = 12.0;
  double packet_width = 0.75;
};

inline PistonConfig default_piston(double displacement) {
  PistonConfig cfg;
  cfg.displacement = displacement;
  return cfg;
}

// wall displacement at clock reading t: zero, then a linear ramp on
// [ramp_start, ramp_end), then held at the full displacement (exact branch
// values so identical schedule ticks produce bitwise-equal generators)
inline double ramp_displacement(const PistonConfig& cfg, double t) {
  if (t < cfg.ramp_start) return 0.0;
  if (t >= cfg.ramp_end) return cfg.displacement;
  return cfg.displacement * (t - cfg.ramp_start) / (cfg.ramp_end - cfg.ramp_start);
}

namespace detail {

inline double left_wall(const PistonConfig& cfg, double x) {
  return cfg.wall_height / (1.0 + std::exp((x - cfg.wall_left) / cfg.wall_scale));
}

inline double right_wall(const PistonConfig& cfg, double x) {
  return cfg.wall_height / (1.0 + std::exp(-(x - cfg.wall_right) / cfg.wall_scale));
}

}  // namespace detail

// static box Hamiltonian: kinetic term plus both walls
inline Operator piston_static_hamiltonian(const GridSystem& grid, const PistonConfig& cfg) {
  Operator walls = grid.potential([&cfg](double x) {
    return detail::left_wall(cfg, x) + detail::right_wall(cfg, x);
  });
  return add(grid.kinetic(), walls);
}

// gate read off the clock: the right wall dragged in by the ramp, minus the
// wall at rest
inline DriveFunction piston_drive(const GridSystem& grid, PistonConfig cfg) {
  return [&grid, cfg](double t) {
    double f = ramp_displacement(cfg, t);
    return grid.potential([&cfg, f](double x) {
      return detail::right_wall(cfg, x + f) - detail::right_wall(cfg, x);
    });
  };
}

inline HamiltonianSpec piston_spec(const GridSystem& grid, const PistonConfig& cfg,
                                   int d_clock, double clock_period) {
  ClockModel clock(d_clock, clock_period / d_clock, 0.0, "A");
  return HamiltonianSpec(clock, piston_static_hamiltonian(grid, cfg),
                         piston_drive(grid, cfg));
}

struct PistonResult {
  int revival_tick;
  double revival_time;
  double revival_overlap;       // |<psi(0)|psi(revival)>| of the still run
  double phase_shift;           // moved-run return phase minus still-run
  double predicted_shift;       // -2 p delta / hbar, wrapped to (-pi, pi]
  CheckResult phase_check;      // extracted vs predicted, 5% of the magnitude
  CheckResult window_identity;  // schedule difference over the window vs the
                                // held-displacement potential gap
  double max_wall_mass;         // worst near-wall mass during the ramp window
  std::vector<Complex> modular_series_still;  // <exp(i H_S t_rev / hbar)> per tick
  std::vector<Complex> modular_series_moved;
};

// principal-branch angle difference
inline double wrap_angle(double a) { return std::arg(std::polar(1.0, a)); }

// Runs the box twice, with the wall held and with it displaced while the
// packet is far away, and reads the return-amplitude phase difference at the
// still run's revival tick.
inline PistonResult run_piston(const GridSystem& grid, const PistonConfig& cfg,
                               int d_clock = 1024, double clock_period = 2.56) {
  if (!(cfg.ramp_start < cfg.ramp_end))
    throw std::invalid_argument("ramp must open before it closes");
  if (!(cfg.ramp_end < clock_period))
    throw std::invalid_argument("ramp must close within the clock period");

  ClockModel clock(d_clock, clock_period / d_clock, 0.0, "A");
  Operator h_static = piston_static_hamiltonian(grid, cfg);
  StateVector packet =
      gaussian_packet(grid, cfg.packet_center, cfg.packet_width, cfg.packet_momentum);

  HistoryState still = propagate_history(clock, packet, [&h_static](double) {
    return h_static;
  });
  HistoryState moved =
      build_history(HamiltonianSpec(clock, h_static, piston_drive(grid, cfg)), packet);

  // revival of the still run: best return overlap in the second half-ring
  int best_k = d_clock / 2;
  double best = 0.0;
  for (int k = d_clock / 2; k < d_clock; ++k) {
    double overlap = std::abs(packet.amps().dot(still.amps_at(k)));
    if (overlap > best) {
      best = overlap;
      best_k = k;
    }
  }
  double revival_time = clock.tick_value(best_k);
  if ((cfg.ramp_end - cfg.ramp_start) > 0.05 * revival_time)
    throw std::invalid_argument("displacement window is not short against the bounce period");

  // the packet must stay away from the wall it is trading phase with
  double near_edge = cfg.wall_right - 4.0 * cfg.wall_scale - 0.5;
  double max_wall_mass = 0.0;
  for (int k = 0; k < d_clock; ++k) {
    double t = clock.tick_value(k);
    if (t < cfg.ramp_start - clock.delta_t() || t > cfg.ramp_end + clock.delta_t()) continue;
    double mass = 0.0;
    const Vector& amps = moved.amps_at(k);
    for (int j = 0; j < grid.n(); ++j)
      if (grid.site(j) >= near_edge) mass += std::norm(amps[j]);
    max_wall_mass = std::max(max_wall_mass, mass);
  }
  if (max_wall_mass > 1e-6)
    throw std::invalid_argument("packet reaches the moving wall during the displacement window");

  Complex ret_still = packet.amps().dot(still.amps_at(best_k));
  Complex ret_moved = packet.amps().dot(moved.amps_at(best_k));
  double shift = wrap_angle(std::arg(ret_moved) - std::arg(ret_still));
  double predicted =
      wrap_angle(-2.0 * cfg.packet_momentum * cfg.displacement / hbar());
  double tol = 0.05 * std::abs(2.0 * cfg.packet_momentum * cfg.displacement / hbar());
  CheckResult phase_check =
      cfg.displacement == 0.0
          ? check_upper("piston-phase-shift", std::abs(shift), 1e-12)
          : check_upper("piston-phase-shift", std::abs(wrap_angle(shift - predicted)), tol);

  // over ticks whose schedule difference spans the window, the gate gap must
  // equal the held-displacement potential gap
  Operator held_gap = grid.potential([&cfg](double x) {
    return detail::right_wall(cfg, x + cfg.displacement) - detail::right_wall(cfg, x);
  });
  DriveFunction drive = piston_drive(grid, cfg);
  double identity_worst = 0.0;
  bool window_seen = false;
  for (int k = 0; k < d_clock; ++k) {
    double before = clock.tick_value(k);
    double after = positive_fmod(before + revival_time, clock.period());
    if (!(ramp_displacement(cfg, before) == 0.0 &&
          ramp_displacement(cfg, after) == cfg.displacement))
      continue;
    window_seen = true;
    Matrix gap = drive(after).mat() - drive(before).mat();
    identity_worst = std::max(identity_worst, max_abs(Matrix(gap - held_gap.mat())));
  }
  CheckResult window_identity =
      check_upper("piston-window-identity", identity_worst, 1e-10, !window_seen,
                  window_seen ? "" : "no tick pair spans the window");

  // return-amplitude modular series for both runs
  Operator w_s = unitary_exp(h_static, revival_time, ExpSign::plus);
  std::vector<Complex> series_still(d_clock), series_moved(d_clock);
  for (int k = 0; k < d_clock; ++k) {
    series_still[k] = still.amps_at(k).dot(Vector(w_s.mat() * still.amps_at(k)));
    series_moved[k] = moved.amps_at(k).dot(Vector(w_s.mat() * moved.amps_at(k)));
  }

  return PistonResult{best_k,
                      revival_time,
                      best,
                      shift,
                      predicted,
                      std::move(phase_check),
                      std::move(window_identity),
                      max_wall_mass,
                      std::move(series_still),
                      std::move(series_moved)};
}

// ===== PULSED SPIN =====

enum class SpinRegime { resonant, detuned_bare, detuned_compensated };
enum class PulseShape { rect, smooth };

struct SpinPulseConfig {
  double mu = 1.0;
  double b0 = 0.0;            // static field; precession period 2 pi/(mu b0)
  double pulse_period = 0.0;  // spacing of the drive pulses
  double pulse_width = 0.0;
  double ax = 0.0;            // transverse pulse amplitude
  double az = 0.0;            // compensation pulse amplitude
  double offset_x = 0.0;      // pulse start within each period
  double offset_z = 0.0;
  bool compensate = false;
  PulseShape shape = PulseShape::rect;

  double precession_period() const { return 2.0 * pi / (mu * b0); }
};

namespace detail {

// rectangular window on [offset, offset + width) within each period, or a
// raised-cosine bump of the same integrated area centered on that window
inline double pulse_profile(const SpinPulseConfig& cfg, double amplitude, double offset,
                            double t) {
  if (amplitude == 0.0) return 0.0;
  double u = positive_fmod(t, cfg.pulse_period);
  if (cfg.shape == PulseShape::rect) {
    // edges nudged by a hair so samples on the tick lattice, which land either
    // on an edge or at least half a step away, never flip on roundoff in u
    double edge = 1e-9 * cfg.pulse_period;
    return (u >= offset - edge && u < offset + cfg.pulse_width - edge) ? amplitude : 0.0;
  }
  // raised-cosine bump spanning twice the rectangle, same integrated area
  double half_span = cfg.pulse_width;
  double dist = u - (offset + 0.5 * cfg.pulse_width);
  if (std::abs(dist) >= half_span) return 0.0;
  double c = std::cos(0.5 * pi * dist / half_span);
  return amplitude * c * c;
}

}  // namespace detail

inline double spin_field_x(const SpinPulseConfig& cfg, double t) {
  return detail::pulse_profile(cfg, cfg.ax, cfg.offset_x, t);
}

inline double spin_field_z(const SpinPulseConfig& cfg, double t) {
  return cfg.compensate ? detail::pulse_profile(cfg, cfg.az, cfg.offset_z, t) : 0.0;
}

inline void validate_spin_config(const SpinPulseConfig& cfg) {
  if (!(cfg.b0 > 0.0) || !(cfg.pulse_period > 0.0) || !(cfg.pulse_width > 0.0))
    throw std::invalid_argument("spin config needs positive field, period and width");
  if (cfg.pulse_width / cfg.pulse_period > 0.02)
    throw std::invalid_argument("pulses must be short against their spacing");
  if (cfg.offset_x < 0.0 || cfg.offset_x + cfg.pulse_width > cfg.pulse_period)
    throw std::invalid_argument("transverse pulse leaves its period");
  if (cfg.compensate) {
    if (cfg.offset_z < 0.0 || cfg.offset_z + cfg.pulse_width > cfg.pulse_period)
      throw std::invalid_argument("compensation pulse leaves its period");
    double lo = std::max(cfg.offset_x, cfg.offset_z);
    double hi = std::min(cfg.offset_x + cfg.pulse_width, cfg.offset_z + cfg.pulse_width);
    if (lo < hi) throw std::invalid_argument("pulse supports must not overlap");
  }
}

// Pinned geometries on a tick lattice. The precession period spans tau_ticks;
// detuned regimes space the pulses 3/2 of that apart, and the compensated
// variant adds a z pulse that tops the per-period precession up to a full
// turn. Pulse angles: pi/20 about x per pulse, pi about z.
inline SpinPulseConfig spin_config_for(SpinRegime regime, double delta_t,
                                       int tau_ticks = 272) {
  if (tau_ticks % 2 != 0) throw std::invalid_argument("tick count must be even");
  SpinPulseConfig cfg;
  cfg.mu = 1.0;
  double tau = tau_ticks * delta_t;
  cfg.b0 = 2.0 * pi / (cfg.mu * tau);
  int period_ticks = regime == SpinRegime::resonant ? tau_ticks : tau_ticks * 3 / 2;
  cfg.pulse_period = period_ticks * delta_t;
  cfg.pulse_width = delta_t;
  cfg.ax = (pi / 20.0) / (cfg.mu * cfg.pulse_width);
  int offset_ticks = period_ticks / 4;
  cfg.offset_x = offset_ticks * delta_t;
  if (regime == SpinRegime::detuned_compensated) {
    cfg.compensate = true;
    // z-pulse angle pi completes mu*b0*period = 3 pi to a full turn
    cfg.az = pi / (cfg.mu * cfg.pulse_width);
    int z_ticks = ((offset_ticks - tau_ticks) % period_ticks + period_ticks) % period_ticks;
    cfg.offset_z = z_ticks * delta_t;
  }
  validate_spin_config(cfg);
  return cfg;
}

inline HamiltonianSpec spin_spec(const SpinPulseConfig& cfg, int d_clock, double delta_t) {
  validate_spin_config(cfg);
  ClockModel clock(d_clock, delta_t, 0.0, "A");
  SpaceLayout spin = SpaceLayout::single("S", 2);
  Matrix sz(2, 2), sx(2, 2);
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  Operator h_s = Operator::hermitian(Matrix(0.5 * hbar() * cfg.mu * cfg.b0 * sz), spin);
  Matrix sx_c = sx, sz_c = sz;
  double half_mu = 0.5 * hbar() * cfg.mu;
  DriveFunction drive = [cfg, spin, sx_c, sz_c, half_mu](double t) {
    Matrix m = half_mu * (spin_field_x(cfg, t) * sx_c + spin_field_z(cfg, t) * sz_c);
    return Operator::hermitian(std::move(m), spin);
  };
  return HamiltonianSpec(clock, h_s, std::move(drive));
}

struct SpinRunResult {
  std::vector<double> p_flip;  // population of the flipped level per tick
  double max_flip;
  double norm_drift;
  double mean_sz;              // tick-averaged <sigma_z>
  CheckResult regime_check;
  CheckResult norm_check;
};

// drives the spin from the upper level through a full ring of pulses
inline SpinRunResult run_spin(const SpinPulseConfig& cfg, int d_clock, double delta_t,
                              SpinRegime regime) {
  HamiltonianSpec spec = spin_spec(cfg, d_clock, delta_t);
  Vector up(2);
  up << 1.0, 0.0;
  HistoryState h = build_history(spec, StateVector(up, spec.h_system.layout()));

  std::vector<double> p_flip(d_clock);
  double max_flip = 0.0, norm_drift = 0.0, mean_sz = 0.0;
  for (int k = 0; k < d_clock; ++k) {
    const Vector& amps = h.amps_at(k);
    p_flip[k] = std::norm(amps[1]);
    max_flip = std::max(max_flip, p_flip[k]);
    norm_drift = std::max(norm_drift, std::abs(amps.norm() - 1.0));
    mean_sz += std::norm(amps[0]) - std::norm(amps[1]);
  }
  mean_sz /= d_clock;

  CheckResult regime_check =
      regime == SpinRegime::detuned_bare
          ? check_upper("spin-detuned-flip", max_flip, 0.1)
          : check_lower(regime == SpinRegime::resonant ? "spin-resonant-flip"
                                                       : "spin-compensated-flip",
                        max_flip, 0.99, false, "the spin must flip");
  CheckResult norm_check = check_upper("spin-norm-drift", norm_drift, 1e-10);
  return SpinRunResult{std::move(p_flip), max_flip,    norm_drift,
                       mean_sz,           std::move(regime_check), std::move(norm_check)};
}

struct SpinRateReport {
  CheckResult at_pulse_period;  // shift by the pulse spacing commutes
  CheckResult at_precession;    // shift by the precession period: gate-drag law
  CheckResult reduced_forms;    // blockwise short-pulse reductions
};

// Conjugating the joint generator by the clock-energy shift at the pulse
// spacing leaves the schedule fixed; at the precession period it drags the
// gates, and on pulse-free ticks the drag collapses to single-field blocks.
inline SpinRateReport spin_modular_energy_rates(const SpinPulseConfig& cfg, int d_clock,
                                                double delta_t) {
  HamiltonianSpec spec = spin_spec(cfg, d_clock, delta_t);
  double period_ticks = cfg.pulse_period / delta_t;
  double tau_ticks = cfg.precession_period() / delta_t;
  int qp = static_cast<int>(std::lround(period_ticks));
  int qt = static_cast<int>(std::lround(tau_ticks));
  if (std::abs(period_ticks - qp) > 1e-9 || std::abs(tau_ticks - qt) > 1e-9)
    throw std::invalid_argument("periods must sit on the tick lattice");
  if (d_clock % qp != 0 || d_clock % qt != 0)
    throw std::invalid_argument("ring must close on both periods");

  Operator h_eff = effective_pair_hamiltonian(spec);
  const ClockModel& clock = spec.clock;

  // shift by the pulse spacing: schedule invariant, so the commutator is zero
  Operator wp = embed(clock.time_shift(-qp), h_eff.layout(), clock.label());
  double r_period = max_abs(commutator(wp, h_eff).mat());
  CheckResult at_pulse_period = check_upper("spin-rate-pulse-period", r_period, 1e-10);

  // shift by the precession period: full gate-drag identity
  CheckResult at_precession =
      check_modular_energy_identity(spec, qt, 1e-10, "spin-rate-precession");

  // blockwise reductions: R (|t_k> (x) v) = -(i/hbar) (gate(t_k) - gate(t_{k-qt}))
  // (|t_{k-qt}> (x) v); on ticks where one field vanishes only the other
  // field's block survives
  Operator wt = embed(clock.time_shift(-qt), h_eff.layout(), clock.label());
  Matrix rate = Complex(0.0, -1.0) / hbar() * commutator(wt, h_eff).mat();
  SpaceLayout spin = spec.h_system.layout();
  Matrix sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;

  double reduced_worst = 0.0;
  bool saw_mixed = false, saw_lone = false;
  for (int k = 0; k < d_clock; ++k) {
    int j = ((k - qt) % d_clock + d_clock) % d_clock;
    double t_now = clock.tick_value(k);
    double t_back = clock.tick_value(j);
    double bx_now = spin_field_x(cfg, t_now), bx_back = spin_field_x(cfg, t_back);
    double bz_now = spin_field_z(cfg, t_now), bz_back = spin_field_z(cfg, t_back);
    if (bx_now == 0.0 && bx_back == 0.0 && bz_now == 0.0 && bz_back == 0.0) continue;
    // transverse pulse ahead paired with a compensation pulse behind
    if (bx_now != 0.0 && bz_back != 0.0 && bx_back == 0.0 && bz_now == 0.0) saw_mixed = true;
    // lone transverse pulse behind, nothing ahead
    if (bx_back != 0.0 && bx_now == 0.0 && bz_now == 0.0 && bz_back == 0.0) saw_lone = true;
    Matrix expected = Complex(0.0, -0.5 * cfg.mu) *
                      ((bx_now - bx_back) * sx + (bz_now - bz_back) * sz);
    for (int a = 0; a < 2; ++a) {
      Vector v = Vector::Zero(2);
      v[a] = 1.0;
      Vector basis = Vector::Zero(d_clock);
      basis[k] = 1.0;
      Vector out = rate * kron(basis, v);
      Vector back_basis = Vector::Zero(d_clock);
      back_basis[j] = 1.0;
      Vector target = kron(back_basis, Vector(expected * v));
      reduced_worst = std::max(reduced_worst, (out - target).norm());
    }
  }
  CheckResult reduced_forms =
      check_upper("spin-rate-reduced-forms", reduced_worst, 1e-10, !(saw_mixed && saw_lone),
                  saw_mixed && saw_lone ? "" : "schedule never exposed both pulse layouts");
  return SpinRateReport{std::move(at_pulse_period), std::move(at_precession),
                        std::move(reduced_forms)};
}

struct GranularityProbe {
  double bare_offset;         // distance of the energy change from the nearest
  double compensated_offset;  // whole number of quanta, in quantum units
  CheckResult bare;
  CheckResult compensated;
};

// Energy bookkeeping over the whole train, in units of the pulse-spacing
// quantum 2 pi hbar / pulse_period: without compensation the spin barely
// moves and the change sits on a whole number of quanta; with compensation
// the flip completes and the change lands strictly between multiples.
inline GranularityProbe spin_energy_granularity(double delta_t, int periods = 20,
                                                int tau_ticks = 272) {
  auto energy_change = [&](SpinRegime regime) {
    SpinPulseConfig cfg = spin_config_for(regime, delta_t, tau_ticks);
    int period_ticks = static_cast<int>(std::lround(cfg.pulse_period / delta_t));
    int d = periods * period_ticks;
    HamiltonianSpec spec = spin_spec(cfg, d, delta_t);
    Vector up(2);
    up << 1.0, 0.0;
    HistoryState h = build_history(spec, StateVector(up, spec.h_system.layout()));
    const Vector& first = h.amps_at(0);
    const Vector& last = h.amps_at(d - 1);
    double half = 0.5 * hbar() * cfg.mu * cfg.b0;
    double e0 = half * (std::norm(first[0]) - std::norm(first[1]));
    double e1 = half * (std::norm(last[0]) - std::norm(last[1]));
    double quantum = 2.0 * pi * hbar() / cfg.pulse_period;
    double in_quanta = (e1 - e0) / quantum;
    return std::abs(in_quanta - std::round(in_quanta));
  };

  double bare = energy_change(SpinRegime::detuned_bare);
  double comp = energy_change(SpinRegime::detuned_compensated);
  return GranularityProbe{
      bare, comp, check_upper("granularity-bare", bare, 0.1),
      check_lower("granularity-compensated", comp, 0.1, false,
                  "the exchange must land between whole quanta")};
}

// ===== REFINEMENT PROBES =====

// worst centered-difference residual over stencils that stay away from the
// ring seam and from schedule kinks
inline double masked_interior_residual(const HamiltonianSpec& spec, const StateVector& initial,
                                       const std::function<bool(double)>& near_kink) {
  HistoryState h = build_history(spec, initial);
  ConstraintResidual r = constraint_residual(h, spec);
  const ClockModel& c = spec.clock;
  double worst = 0.0;
  for (int k = 1; k + 1 < c.d(); ++k) {
    if (near_kink(c.tick_value(k - 1)) || near_kink(c.tick_value(k)) ||
        near_kink(c.tick_value(k + 1)))
      continue;
    worst = std::max(worst, r.per_tick[k]);
  }
  return worst;
}

struct ConvergenceReport {
  std::vector<double> diffs;   // state gap between consecutive refinements
  std::vector<double> orders;  // log2 of consecutive gap ratios
};

// Stepper order measured on the pulsed spin itself: one smooth-pulse schedule
// run at successive step halvings, states compared at a fixed common time.
// The smooth shape matters; a rectangle constant across each step leaves the
// stepper nothing to converge on.
inline ConvergenceReport spin_self_convergence(int tau_ticks = 68, double base_dt = 0.1,
                                               int levels = 3) {
  if (levels < 2) throw std::invalid_argument("need at least two refinement levels");
  SpinPulseConfig cfg = spin_config_for(SpinRegime::resonant, base_dt, tau_ticks);
  cfg.shape = PulseShape::smooth;
  Vector up(2);
  up << 1.0, 0.0;
  std::vector<Vector> probes;
  for (int lvl = 0; lvl <= levels; ++lvl) {
    int scale = 1 << lvl;
    HamiltonianSpec spec = spin_spec(cfg, tau_ticks * scale, base_dt / scale);
    HistoryState h = build_history(spec, StateVector(up, spec.h_system.layout()));
    probes.push_back(h.amps_at(tau_ticks * scale / 2));
  }
  ConvergenceReport rep;
  for (int lvl = 0; lvl < levels; ++lvl)
    rep.diffs.push_back((probes[lvl] - probes[lvl + 1]).norm());
  for (int lvl = 0; lvl + 1 < levels; ++lvl)
    rep.orders.push_back(std::log2(rep.diffs[lvl] / rep.diffs[lvl + 1]));
  return rep;
}

}  // namespace modclock
