#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "modclock/opalg.hpp"
#include "oracles.hpp"

using namespace modclock;
using Catch::Approx;

namespace {

Matrix pauli_x() { return (Matrix(2, 2) << 0, 1, 1, 0).finished(); }
Matrix pauli_y() {
  return (Matrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished();
}
Matrix pauli_z() { return (Matrix(2, 2) << 1, 0, 0, -1).finished(); }

SpaceLayout qubit(const std::string& label) { return SpaceLayout::single(label, 2); }

}  // namespace

TEST_CASE("layout bookkeeping", "[opalg]") {
  SpaceLayout as({{"A", 4}, {"S", 3}});
  CHECK(as.total_dim() == 12);
  CHECK(as.dim_of("S") == 3);
  CHECK(as.has("A"));
  CHECK_FALSE(as.has("B"));
  CHECK_THROWS_AS(SpaceLayout({{"A", 2}, {"A", 2}}), std::invalid_argument);
  CHECK_THROWS_AS(as.dim_of("B"), std::invalid_argument);
}

TEST_CASE("construction flags enforce their invariants", "[opalg]") {
  Matrix h = oracles::random_hermitian(5, 11);
  CHECK_NOTHROW(Operator::hermitian(h, SpaceLayout::single("S", 5)));

  Matrix broken = h;
  broken(1, 2) += Complex(0.0, 1e-9);
  CHECK_THROWS_AS(Operator::hermitian(broken, SpaceLayout::single("S", 5)),
                  std::invalid_argument);

  CHECK_NOTHROW(Operator::unitary(pauli_x(), qubit("S")));
  Matrix nonunit = pauli_x();
  nonunit(0, 1) = 1.0 + 1e-8;
  CHECK_THROWS_AS(Operator::unitary(nonunit, qubit("S")), std::invalid_argument);

  Vector v(2);
  v << 1.0, 1e-5;
  CHECK_THROWS_AS(StateVector(v, qubit("S")), std::invalid_argument);
  CHECK_NOTHROW(StateVector::normalized(v, qubit("S")));
}

TEST_CASE("tensor product matches the index-formula oracle", "[opalg]") {
  for (unsigned seed : {1u, 2u, 3u}) {
    Matrix a = oracles::random_matrix(3, seed);
    Matrix b = oracles::random_matrix(4, seed + 100);
    Operator oa = Operator::general(a, SpaceLayout::single("A", 3));
    Operator ob = Operator::general(b, SpaceLayout::single("S", 4));
    Operator t = tensor_product(oa, ob);
    CHECK(max_abs(Matrix(t.mat() - oracles::kron_by_indices(a, b))) == 0.0);
    CHECK(t.layout() == SpaceLayout({{"A", 3}, {"S", 4}}));
  }
}

TEST_CASE("tensor product is bilinear", "[opalg]") {
  Matrix a1 = oracles::random_matrix(3, 21), a2 = oracles::random_matrix(3, 22);
  Matrix b = oracles::random_matrix(2, 23);
  SpaceLayout la = SpaceLayout::single("A", 3), lb = SpaceLayout::single("S", 2);
  Complex alpha(0.7, -1.3);
  Matrix lhs = kron(Matrix(a1 + alpha * a2), b);
  Matrix rhs = kron(a1, b) + alpha * kron(a2, b);
  CHECK(max_abs(Matrix(lhs - rhs)) < 1e-14);
  (void)la; (void)lb;
}

TEST_CASE("tensor product flips both qubits", "[opalg]") {
  Operator xx = tensor_product(Operator::unitary(pauli_x(), qubit("L")),
                               Operator::unitary(pauli_x(), qubit("R")));
  StateVector zero_zero = StateVector::basis(0, SpaceLayout({{"L", 2}, {"R", 2}}));
  Vector out = apply(xx, zero_zero);
  CHECK(std::abs(out[3] - 1.0) < 1e-15);
  CHECK(out.head(3).norm() < 1e-15);
}

TEST_CASE("tensor product respects the dimension cap", "[opalg]") {
  Index old_cap = max_dim();
  set_max_dim(8);
  Operator a = Operator::identity(SpaceLayout::single("A", 4));
  Operator b = Operator::identity(SpaceLayout::single("S", 4));
  CHECK_THROWS_AS(tensor_product(a, b), std::length_error);
  set_max_dim(old_cap);
}

TEST_CASE("embed places the operator on the right factor", "[opalg]") {
  SpaceLayout full({{"A", 3}, {"S", 2}});
  Operator z = Operator::hermitian(pauli_z(), qubit("S"));
  Operator emb = embed(z, full, "S");
  Matrix expect = oracles::kron_by_indices(Matrix::Identity(3, 3), pauli_z());
  CHECK(max_abs(Matrix(emb.mat() - expect)) == 0.0);

  // disjoint embeddings commute
  Matrix ra = oracles::random_hermitian(3, 31);
  Operator ea = embed(Operator::hermitian(ra, SpaceLayout::single("A", 3)), full, "A");
  CHECK(max_abs(commutator(ea, emb).mat()) < 1e-14);

  CHECK_THROWS_AS(embed(z, full, "A"), std::invalid_argument);
}

TEST_CASE("commutator algebra on paulis", "[opalg]") {
  Operator sx = Operator::hermitian(pauli_x(), qubit("S"));
  Operator sy = Operator::hermitian(pauli_y(), qubit("S"));
  Matrix expect = Complex(0, 2) * pauli_z();
  CHECK(max_abs(Matrix(commutator(sx, sy).mat() - expect)) < 1e-15);
  CHECK(max_abs(anticommutator(sx, sy).mat()) < 1e-15);
}

TEST_CASE("hermitian_eig reproduces the spectrum", "[opalg]") {
  Operator sx = Operator::hermitian(pauli_x(), qubit("S"));
  HermitianEigen eig = hermitian_eig(sx);
  CHECK(eig.values[0] == Approx(-1.0).margin(1e-14));
  CHECK(eig.values[1] == Approx(1.0).margin(1e-14));

  for (unsigned seed : {5u, 6u, 7u}) {
    Matrix h = oracles::random_hermitian(12, seed);
    Operator oh = Operator::hermitian(h, SpaceLayout::single("S", 12));
    HermitianEigen e = hermitian_eig(oh);
    Matrix resid = h * e.vectors - e.vectors * e.values.asDiagonal().toDenseMatrix().cast<Complex>();
    CHECK(max_abs(resid) < 1e-10 * max_abs(h));
    Matrix gram = e.vectors.adjoint() * e.vectors;
    gram.diagonal().array() -= 1.0;
    CHECK(max_abs(gram) < 1e-12);
  }
}

TEST_CASE("unitary_exp on sigma_z gives the closed-form phases", "[opalg]") {
  Operator sz = Operator::hermitian(pauli_z(), qubit("S"));
  Operator u = unitary_exp(sz, pi / 2, ExpSign::minus);
  CHECK(std::abs(u.mat()(0, 0) - Complex(0, -1)) < 1e-14);
  CHECK(std::abs(u.mat()(1, 1) - Complex(0, 1)) < 1e-14);
  CHECK(std::abs(u.mat()(0, 1)) == 0.0);
}

TEST_CASE("unitary_exp divides the phase by hbar exactly once", "[opalg]") {
  Operator sz = Operator::hermitian(pauli_z(), qubit("S"));
  set_hbar(2.0);
  Operator u = unitary_exp(sz, pi, ExpSign::minus);  // phase pi/2 after the division
  set_hbar(1.0);
  CHECK(std::abs(u.mat()(0, 0) - Complex(0, -1)) < 1e-14);
  CHECK(std::abs(u.mat()(1, 1) - Complex(0, 1)) < 1e-14);
}

TEST_CASE("unitary_exp stays unitary for random hermitian inputs", "[opalg]") {
  for (unsigned seed : {10u, 20u, 30u}) {
    Matrix h = oracles::random_hermitian(16, seed);
    Operator oh = Operator::hermitian(h, SpaceLayout::single("S", 16));
    for (double theta : {0.0, 0.37, -2.5, 40.0}) {
      Operator u = unitary_exp(oh, theta, ExpSign::plus);
      Matrix g = u.mat().adjoint() * u.mat();
      g.diagonal().array() -= 1.0;
      CHECK(max_abs(g) < 1e-10);
    }
  }
}

TEST_CASE("unitary_exp satisfies the group law", "[opalg]") {
  Matrix h = oracles::random_hermitian(10, 77);
  Operator oh = Operator::hermitian(h, SpaceLayout::single("S", 10));
  double t1 = 0.83, t2 = -1.91;
  Operator u1 = unitary_exp(oh, t1, ExpSign::minus);
  Operator u2 = unitary_exp(oh, t2, ExpSign::minus);
  Operator u12 = unitary_exp(oh, t1 + t2, ExpSign::minus);
  CHECK(max_abs(Matrix(mul(u1, u2).mat() - u12.mat())) < 1e-9);
  // plus and minus signs are inverses of one another
  Operator v = unitary_exp(oh, t1, ExpSign::plus);
  Matrix g = v.mat() * u1.mat();
  g.diagonal().array() -= 1.0;
  CHECK(max_abs(g) < 1e-10);
}

TEST_CASE("apply_to_spectrum maps diagonals elementwise", "[opalg]") {
  RealVector d(4);
  d << 0, 1, 2, 3;
  Operator x = Operator::diagonal(d, SpaceLayout::single("S", 4));
  Operator xmod = apply_to_spectrum(x, [](double v) { return std::fmod(v, 2.0); });
  RealVector expect(4);
  expect << 0, 1, 0, 1;
  for (Index i = 0; i < 4; ++i)
    CHECK(xmod.mat()(i, i).real() == Approx(expect[i]).margin(0.0));
  CHECK(strictly_diagonal(xmod.mat()));
}

TEST_CASE("apply_to_spectrum agrees with direct matrix functions", "[opalg]") {
  Matrix h = oracles::random_hermitian(9, 41);
  Operator oh = Operator::hermitian(h, SpaceLayout::single("S", 9));
  Operator sq = apply_to_spectrum(oh, [](double v) { return v * v; });
  CHECK(max_abs(Matrix(sq.mat() - h * h)) < 1e-10 * max_abs(Matrix(h * h)));
  CHECK(sq.hermitian_flag());
}

TEST_CASE("expectation values on product states are local", "[opalg]") {
  SpaceLayout full({{"A", 3}, {"S", 2}});
  Vector a = oracles::random_state(3, 51);
  Vector s = oracles::random_state(2, 52);
  StateVector psi(kron(a, s), full);
  Operator z = Operator::hermitian(pauli_z(), qubit("S"));
  Complex local = Vector(s).dot(pauli_z() * s);
  Complex lifted = expectation(psi, embed(z, full, "S"));
  CHECK(std::abs(lifted - local) < 1e-13);
}

// canonical pair on a periodic grid, built here from the explicit
// centered-wavenumber formulas rather than any library helper
TEST_CASE("position/momentum commutator acts as i hbar on interior points", "[opalg]") {
  const Index n = 64;
  const double length = 16.0;
  const double dx = length / double(n);
  const Index c = n / 2;

  RealVector xs(n);
  for (Index k = 0; k < n; ++k) xs[k] = double(k) * dx;
  Operator x = Operator::diagonal(xs, SpaceLayout::single("S", n));

  Matrix p(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      Complex sum = 0.0;
      for (Index m = 0; m < n; ++m) {
        double pm = 2.0 * pi * hbar() * double(m - c) / length;
        sum += pm * std::polar(1.0 / double(n), 2.0 * pi * double((j - k) * (m - c)) / double(n));
      }
      p(j, k) = sum;
    }
  }
  p = 0.5 * (p + Matrix(p.adjoint()));
  Operator pop = Operator::hermitian(p, SpaceLayout::single("S", n));

  const double sigma = 0.7, center = length / 2.0;
  Vector g(n);
  for (Index k = 0; k < n; ++k) {
    double d = xs[k] - center;
    g[k] = std::exp(-d * d / (4.0 * sigma * sigma));
  }
  g /= g.norm();

  Vector resid = commutator(x, pop).mat() * g - Complex(0.0, hbar()) * g;
  for (Index k = 0; k < n; ++k) {
    if (std::abs(xs[k] - center) > length / 2.0 - 6.0 * sigma) continue;  // interior only
    CHECK(std::abs(resid[k]) < 1e-8);
  }
}
