#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace modclock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Global reduced Planck constant. Natural units by default; set once at
// startup before building any operators.
inline double& hbar_ref() {
  static double value = 1.0;
  return value;
}

inline double hbar() { return hbar_ref(); }

inline void set_hbar(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("hbar must be positive");
  hbar_ref() = value;
}

// Cap on total Hilbert-space dimension for tensor assembly (guards against
// runaway allocations; override via set_max_dim or the MODCLOCK_MAX_DIM env
// var handled by the CLI).
inline Index& max_dim_ref() {
  static Index value = 1 << 16;
  return value;
}

inline Index max_dim() { return max_dim_ref(); }

inline void set_max_dim(Index value) {
  if (value < 2) throw std::invalid_argument("max_dim must be at least 2");
  max_dim_ref() = value;
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

constexpr double pi = 3.14159265358979323846;

// remainder of x mod m folded into [0, m)
inline double positive_fmod(double x, double m) {
  double r = std::fmod(x, m);
  if (r < 0.0) r += m;
  if (r >= m) r = 0.0;  // guard against fmod rounding to m itself
  return r;
}

}  // namespace modclock
