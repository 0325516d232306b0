#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlreg/forward.hpp"
#include "nlreg/mesh.hpp"
#include "test_support.hpp"

using namespace nlreg;
using nlreg::testing::random_vector;

TEST_CASE("build_mesh basics") {
  const Mesh1D two = build_mesh(2);
  CHECK(two.nodes[0] == 0.0);
  CHECK(two.nodes[1] == 1.0);
  CHECK(two.h == 1.0);

  const Mesh1D five = build_mesh(5);
  for (Index i = 0; i < 5; ++i) {
    CHECK(five.nodes[i] == doctest::Approx(0.25 * i).epsilon(1e-15));
  }

  const Mesh1D paper = build_mesh(128);
  CHECK(paper.h == doctest::Approx(1.0 / 127.0).epsilon(1e-16));
  CHECK(paper.nodes[127] == 1.0);
  for (Index i = 0; i + 1 < 128; ++i) {
    CHECK(paper.nodes[i + 1] - paper.nodes[i] ==
          doctest::Approx(paper.h).epsilon(1e-13));
  }

  CHECK_THROWS_AS(build_mesh(1), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(0), std::invalid_argument);
}

TEST_CASE("mass and stiffness structure") {
  const Mesh1D mesh = build_mesh(9);
  const ForwardSystem sys = assemble_fem(mesh, 0.1);
  const Index n = mesh.n_nodes;
  const Vector ones = Vector::Ones(n);

  // constants span the Neumann stiffness kernel
  CHECK((sys.stiffness * ones).cwiseAbs().maxCoeff() < 1e-13 / mesh.h);
  // mass integrates 1 over the unit interval
  CHECK(ones.dot(sys.mass * ones) == doctest::Approx(1.0).epsilon(1e-14));
  // interior mass row: h * [1/6, 2/3, 1/6]
  const Scalar h = mesh.h;
  CHECK(sys.mass(4, 3) == doctest::Approx(h / 6.0).epsilon(1e-14));
  CHECK(sys.mass(4, 4) == doctest::Approx(2.0 * h / 3.0).epsilon(1e-14));
  CHECK(sys.mass(4, 5) == doctest::Approx(h / 6.0).epsilon(1e-14));
  CHECK(sys.mass(4, 6) == 0.0);

  CHECK_THROWS_AS(assemble_fem(mesh, 0.0), std::invalid_argument);
}

TEST_CASE("forward map on constants and zero") {
  const ForwardSystem sys = assemble_fem(build_mesh(33), 0.1);
  const Index n = sys.n();
  const Vector c = Vector::Constant(n, 3.25);
  CHECK((apply_forward(sys, c) - c).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(apply_forward(sys, Vector::Zero(n)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(apply_forward(sys, Vector::Zero(n + 1)),
                  std::invalid_argument);
}

TEST_CASE("forward map against the cos(pi x) eigenfunction") {
  // -rho y'' + y = cos(pi x) with Neumann data has y = cos(pi x)/(1+rho pi^2)
  const Scalar rho = 0.1;
  const Scalar factor = 1.0 / (1.0 + rho * M_PI * M_PI);
  auto nodal_error = [&](Index n) {
    const Mesh1D mesh = build_mesh(n);
    const ForwardSystem sys = assemble_fem(mesh, rho);
    Vector u(n);
    for (Index j = 0; j < n; ++j) u[j] = std::cos(M_PI * mesh.node(j));
    const Vector y = apply_forward(sys, u);
    Scalar err = 0;
    for (Index j = 0; j < n; ++j) {
      err = std::max(err, std::abs(y[j] - factor * u[j]));
    }
    return err;
  };
  const Scalar e1 = nodal_error(17);
  const Scalar e2 = nodal_error(33);
  const Scalar e3 = nodal_error(65);
  CHECK(e1 < 2e-3);
  // O(h^2): halving h divides the error by about four
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("l2 inner product") {
  const ForwardSystem sys = assemble_fem(build_mesh(17), 0.1);
  const Index n = sys.n();
  const Vector ones = Vector::Ones(n);
  CHECK(l2_inner(sys, ones, ones) == doctest::Approx(1.0).epsilon(1e-14));

  RandomStream rng(5);
  Vector v = random_vector(rng, n);
  // subtract the M-mean: constants and mean-zero vectors are orthogonal
  v -= Vector::Constant(n, ones.dot(sys.mass * v));
  CHECK(std::abs(l2_inner(sys, ones, v)) < 1e-14);

  const Vector u = random_vector(rng, n);
  CHECK(l2_inner(sys, u, u) >= 0.0);
  CHECK(l2_inner(sys, u, v) == doctest::Approx(l2_inner(sys, v, u)));
  CHECK_THROWS_AS(l2_inner(sys, u, Vector::Zero(n - 1)),
                  std::invalid_argument);
}

TEST_CASE("forward map linearity and self-adjointness") {
  const ForwardSystem sys = assemble_fem(build_mesh(29), 0.1);
  const Index n = sys.n();
  RandomStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = random_vector(rng, n);
    const Vector v = random_vector(rng, n);
    const Scalar a = 2.0 * rng.uniform() - 1.0;
    const Scalar b = 2.0 * rng.uniform() - 1.0;
    const Vector su = apply_forward(sys, u);
    const Vector sv = apply_forward(sys, v);
    const Vector lhs = apply_forward(sys, a * u + b * v);
    CHECK((lhs - a * su - b * sv).norm() <=
          1e-12 * (su.norm() + sv.norm() + 1e-30));
    // (Mu)^T (Sv) = (Su)^T (Mv): S = (rho K + M)^{-1} M with symmetric M, K
    const Scalar left = (sys.mass * u).dot(sv);
    const Scalar right = su.dot(sys.mass * v);
    CHECK(left == doctest::Approx(right).epsilon(1e-12));
  }
}
