#pragma once

// Dense operator algebra on labelled tensor-factor spaces. Everything is a
// plain complex matrix under the hood (Eigen); the layout bookkeeping keeps
// tensor embeddings honest.

#include <cmath>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modclock/common.hpp"

namespace modclock {

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kNormTol = 1e-12;

struct Factor {
  std::string label;
  Index dim = 0;
};

class SpaceLayout {
 public:
  SpaceLayout() = default;

  explicit SpaceLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
    for (const auto& f : factors_) {
      if (f.dim < 1) throw std::invalid_argument("layout factor dim must be >= 1");
      if (f.label.empty()) throw std::invalid_argument("layout factor label must be non-empty");
    }
    for (std::size_t i = 0; i < factors_.size(); ++i)
      for (std::size_t j = i + 1; j < factors_.size(); ++j)
        if (factors_[i].label == factors_[j].label)
          throw std::invalid_argument("duplicate factor label '" + factors_[i].label + "'");
  }

  SpaceLayout(std::initializer_list<Factor> factors)
      : SpaceLayout(std::vector<Factor>(factors)) {}

  static SpaceLayout single(std::string label, Index dim) {
    return SpaceLayout({Factor{std::move(label), dim}});
  }

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  const Factor& factor(std::size_t i) const { return factors_.at(i); }

  // layout of everything past the leading factor
  SpaceLayout drop_first() const {
    if (factors_.empty()) throw std::invalid_argument("layout has no factors to drop");
    return SpaceLayout(std::vector<Factor>(factors_.begin() + 1, factors_.end()));
  }

  Index total_dim() const {
    Index d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
  }

  bool has(const std::string& label) const {
    for (const auto& f : factors_) if (f.label == label) return true;
    return false;
  }

  Index dim_of(const std::string& label) const {
    for (const auto& f : factors_) if (f.label == label) return f.dim;
    throw std::invalid_argument("no factor labelled '" + label + "' in layout");
  }

  friend bool operator==(const SpaceLayout& a, const SpaceLayout& b) {
    if (a.factors_.size() != b.factors_.size()) return false;
    for (std::size_t i = 0; i < a.factors_.size(); ++i)
      if (a.factors_[i].label != b.factors_[i].label || a.factors_[i].dim != b.factors_[i].dim)
        return false;
    return true;
  }
  friend bool operator!=(const SpaceLayout& a, const SpaceLayout& b) { return !(a == b); }

 private:
  std::vector<Factor> factors_;
};

inline SpaceLayout concat(const SpaceLayout& a, const SpaceLayout& b) {
  std::vector<Factor> fs = a.factors();
  for (const auto& f : b.factors()) fs.push_back(f);
  return SpaceLayout(std::move(fs));
}

// ===== Operator =====

class Operator {
 public:
  Operator() = default;

  static Operator general(Matrix m, SpaceLayout layout) {
    check_shape(m, layout);
    return Operator(std::move(m), std::move(layout), false, false);
  }

  static Operator hermitian(Matrix m, SpaceLayout layout) {
    check_shape(m, layout);
    double dev = max_abs(Matrix(m - m.adjoint()));
    if (dev >= kHermitianTol)
      throw std::invalid_argument("operator fails hermiticity check, max |A - A^dag| = " +
                                  std::to_string(dev));
    return Operator(std::move(m), std::move(layout), true, false);
  }

  static Operator unitary(Matrix m, SpaceLayout layout) {
    check_shape(m, layout);
    Matrix g = m.adjoint() * m;
    g.diagonal().array() -= 1.0;
    double dev = max_abs(g);
    if (dev >= kUnitaryTol)
      throw std::invalid_argument("operator fails unitarity check, max |A^dag A - 1| = " +
                                  std::to_string(dev));
    return Operator(std::move(m), std::move(layout), false, true);
  }

  static Operator identity(SpaceLayout layout) {
    Index d = layout.total_dim();
    return Operator(Matrix::Identity(d, d), std::move(layout), true, true);
  }

  // real diagonal, hermitian by construction
  static Operator diagonal(const RealVector& diag, SpaceLayout layout) {
    if (diag.size() != layout.total_dim())
      throw std::invalid_argument("diagonal length does not match layout dim");
    Matrix m = Matrix::Zero(diag.size(), diag.size());
    m.diagonal() = diag.cast<Complex>();
    return Operator(std::move(m), std::move(layout), true, false);
  }

  // unit-modulus diagonal, unitary by construction
  static Operator diagonal_phases(const Vector& diag, SpaceLayout layout) {
    if (diag.size() != layout.total_dim())
      throw std::invalid_argument("diagonal length does not match layout dim");
    for (Index i = 0; i < diag.size(); ++i)
      if (std::abs(std::abs(diag[i]) - 1.0) >= kUnitaryTol)
        throw std::invalid_argument("diagonal phase entries must have unit modulus");
    Matrix m = Matrix::Zero(diag.size(), diag.size());
    m.diagonal() = diag;
    return Operator(std::move(m), std::move(layout), false, true);
  }

  const Matrix& mat() const { return mat_; }
  const SpaceLayout& layout() const { return layout_; }
  Index dim() const { return mat_.rows(); }
  bool hermitian_flag() const { return hermitian_; }
  bool unitary_flag() const { return unitary_; }

  Operator adjoint() const {
    return Operator(mat_.adjoint(), layout_, hermitian_, unitary_);
  }

 private:
  Operator(Matrix m, SpaceLayout layout, bool hermitian, bool unitary)
      : mat_(std::move(m)), layout_(std::move(layout)), hermitian_(hermitian), unitary_(unitary) {}

  static void check_shape(const Matrix& m, const SpaceLayout& layout) {
    if (m.rows() != m.cols()) throw std::invalid_argument("operator matrix must be square");
    if (m.rows() != layout.total_dim())
      throw std::invalid_argument("operator dim does not match layout dim");
    if (m.rows() > max_dim())
      throw std::length_error("operator dim exceeds max_dim cap");
  }

  friend Operator trusted_operator(Matrix m, SpaceLayout layout, bool hermitian, bool unitary);

  Matrix mat_;
  SpaceLayout layout_;
  bool hermitian_ = false;
  bool unitary_ = false;
};

// construction path for operators whose flags hold by algebra (e.g. V f(D) V^dag
// with orthonormal V); property tests cover these routes
inline Operator trusted_operator(Matrix m, SpaceLayout layout, bool hermitian, bool unitary) {
  return Operator(std::move(m), std::move(layout), hermitian, unitary);
}

// ===== StateVector =====

class StateVector {
 public:
  StateVector() = default;

  StateVector(Vector amps, SpaceLayout layout) : amps_(std::move(amps)), layout_(std::move(layout)) {
    if (amps_.size() != layout_.total_dim())
      throw std::invalid_argument("state dim does not match layout dim");
    if (std::abs(amps_.norm() - 1.0) >= kNormTol)
      throw std::invalid_argument("state vector is not normalized");
  }

  static StateVector normalized(Vector amps, SpaceLayout layout) {
    double n = amps.norm();
    if (n <= 0.0) throw std::invalid_argument("cannot normalize a zero vector");
    return StateVector(Vector(amps / n), std::move(layout));
  }

  static StateVector basis(Index k, SpaceLayout layout) {
    Vector v = Vector::Zero(layout.total_dim());
    if (k < 0 || k >= v.size()) throw std::invalid_argument("basis index out of range");
    v[k] = 1.0;
    return StateVector(std::move(v), std::move(layout));
  }

  const Vector& amps() const { return amps_; }
  const SpaceLayout& layout() const { return layout_; }
  Index dim() const { return amps_.size(); }

 private:
  Vector amps_;
  SpaceLayout layout_;
};

// ===== elementwise / compositional algebra =====

inline void require_same_layout(const Operator& a, const Operator& b, const char* what) {
  if (a.layout() != b.layout())
    throw std::invalid_argument(std::string(what) + ": operator layouts differ");
}

inline Operator add(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "add");
  return trusted_operator(a.mat() + b.mat(), a.layout(),
                          a.hermitian_flag() && b.hermitian_flag(), false);
}

inline Operator sub(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "sub");
  return trusted_operator(a.mat() - b.mat(), a.layout(),
                          a.hermitian_flag() && b.hermitian_flag(), false);
}

inline Operator scale(Complex c, const Operator& a) {
  bool herm = a.hermitian_flag() && c.imag() == 0.0;
  return trusted_operator(c * a.mat(), a.layout(), herm, false);
}

inline Operator mul(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "mul");
  return trusted_operator(a.mat() * b.mat(), a.layout(), false,
                          a.unitary_flag() && b.unitary_flag());
}

inline Operator commutator(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "commutator");
  return trusted_operator(a.mat() * b.mat() - b.mat() * a.mat(), a.layout(), false, false);
}

inline Operator anticommutator(const Operator& a, const Operator& b) {
  require_same_layout(a, b, "anticommutator");
  return trusted_operator(a.mat() * b.mat() + b.mat() * a.mat(), a.layout(), false, false);
}

// ===== tensor structure =====

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

inline Operator tensor_product(const Operator& a, const Operator& b) {
  if (a.dim() * b.dim() > max_dim())
    throw std::length_error("tensor_product result exceeds max_dim cap");
  return trusted_operator(kron(a.mat(), b.mat()), concat(a.layout(), b.layout()),
                          a.hermitian_flag() && b.hermitian_flag(),
                          a.unitary_flag() && b.unitary_flag());
}

inline StateVector tensor_product(const StateVector& a, const StateVector& b) {
  if (a.dim() * b.dim() > max_dim())
    throw std::length_error("tensor_product result exceeds max_dim cap");
  return StateVector(kron(a.amps(), b.amps()), concat(a.layout(), b.layout()));
}

// lift op (acting on the factor `label`) to the full layout, identity elsewhere
inline Operator embed(const Operator& op, const SpaceLayout& layout, const std::string& label) {
  if (layout.total_dim() > max_dim())
    throw std::length_error("embed target layout exceeds max_dim cap");
  if (op.dim() != layout.dim_of(label))
    throw std::invalid_argument("embed: operator dim does not match factor '" + label + "'");
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : layout.factors()) {
    if (f.label == label)
      out = kron(out, op.mat());
    else
      out = kron(out, Matrix(Matrix::Identity(f.dim, f.dim)));
  }
  return trusted_operator(std::move(out), layout, op.hermitian_flag(), op.unitary_flag());
}

// ===== spectral calculus =====

struct HermitianEigen {
  RealVector values;   // ascending
  Matrix vectors;      // columns
};

inline HermitianEigen hermitian_eig(const Operator& h) {
  if (!h.hermitian_flag())
    throw std::invalid_argument("hermitian_eig requires a hermitian-flagged operator");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.mat());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian eigendecomposition failed to converge");
  return HermitianEigen{solver.eigenvalues(), solver.eigenvectors()};
}

inline bool strictly_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
  return true;
}

enum class ExpSign { plus, minus };

// e^{+-i H theta / hbar}; the one place a phase gets divided by hbar
inline Operator unitary_exp(const Operator& h, double theta, ExpSign sign) {
  if (!h.hermitian_flag())
    throw std::invalid_argument("unitary_exp requires a hermitian-flagged operator");
  double s = (sign == ExpSign::plus ? 1.0 : -1.0) * theta / hbar();
  if (strictly_diagonal(h.mat())) {
    Vector d(h.dim());
    for (Index i = 0; i < h.dim(); ++i)
      d[i] = std::polar(1.0, s * h.mat()(i, i).real());
    Matrix m = Matrix::Zero(h.dim(), h.dim());
    m.diagonal() = d;
    return trusted_operator(std::move(m), h.layout(), false, true);
  }
  HermitianEigen eig = hermitian_eig(h);
  Vector phases(h.dim());
  for (Index i = 0; i < h.dim(); ++i) phases[i] = std::polar(1.0, s * eig.values[i]);
  Matrix m = eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
  return trusted_operator(std::move(m), h.layout(), false, true);
}

// f applied to the spectrum; for exactly-diagonal h this maps the diagonal
inline Operator apply_to_spectrum(const Operator& h, const std::function<double(double)>& f) {
  if (!h.hermitian_flag())
    throw std::invalid_argument("apply_to_spectrum requires a hermitian-flagged operator");
  if (strictly_diagonal(h.mat())) {
    RealVector d(h.dim());
    for (Index i = 0; i < h.dim(); ++i) d[i] = f(h.mat()(i, i).real());
    return Operator::diagonal(d, h.layout());
  }
  HermitianEigen eig = hermitian_eig(h);
  RealVector mapped(h.dim());
  for (Index i = 0; i < h.dim(); ++i) mapped[i] = f(eig.values[i]);
  Matrix m = eig.vectors * mapped.asDiagonal().toDenseMatrix().cast<Complex>() *
             eig.vectors.adjoint();
  // symmetrize away the last-bit asymmetry from the two matrix products
  m = 0.5 * (m + Matrix(m.adjoint()));
  return trusted_operator(std::move(m), h.layout(), true, false);
}

inline Vector apply(const Operator& op, const StateVector& psi) {
  if (op.layout() != psi.layout())
    throw std::invalid_argument("apply: operator and state layouts differ");
  return op.mat() * psi.amps();
}

inline StateVector apply_unitary(const Operator& u, const StateVector& psi) {
  if (!u.unitary_flag())
    throw std::invalid_argument("apply_unitary requires a unitary-flagged operator");
  return StateVector::normalized(apply(u, psi), psi.layout());
}

inline Complex expectation(const StateVector& psi, const Operator& op) {
  if (op.layout() != psi.layout())
    throw std::invalid_argument("expectation: operator and state layouts differ");
  return psi.amps().dot(op.mat() * psi.amps());  // Eigen dot conjugates the left side
}

}  // namespace modclock
