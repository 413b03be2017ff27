#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "stdic/error.hpp"
#include "stdic/shapefn.hpp"
#include "test_support.hpp"

using namespace stdic;

namespace {

const ShapeFunctionSpec kSpatial(1, 0, {}, 1);
const ShapeFunctionSpec kOrder1(1, 1, {}, 5);
const ShapeFunctionSpec kOrder1Cross(1, 1, {true, true}, 5);
const ShapeFunctionSpec kOrder2(1, 2, {}, 5);

std::vector<double> values(const BasisVector& b) { return {b.values().begin(), b.values().end()}; }

ParamSet random_params(const ShapeFunctionSpec& spec, test::Rng& rng, double scale) {
  ParamSet p = ParamSet::zero(spec);
  for (int i = 0; i < p.size(); ++i) p.flat()[i] = rng.uniform(-scale, scale);
  return p;
}

// Exact function composition: a applied to the point that b produces.
WarpedPoint compose_functions(const ParamSet& a, const ParamSet& b, const ShapeFunctionSpec& spec, double dx,
                              double dy, double dt) {
  const WarpedPoint inner = warp_point(b, spec, dx, dy, dt);
  return warp_point(a, spec, inner.x, inner.y, dt);
}

}  // namespace

TEST_CASE("monomial table drives the basis ordering") {
  CHECK(kMonomialOrder.size() == 10);
  CHECK(kMonomialOrder[0] == Monomial::One);
  CHECK(kMonomialOrder[3] == Monomial::T);
  CHECK(kMonomialOrder[4] == Monomial::XT);
  CHECK(kMonomialOrder[9] == Monomial::TT);
  // Every spec filters the table without reordering it.
  for (const auto& spec : {kSpatial, kOrder1, kOrder1Cross, kOrder2, ShapeFunctionSpec(2, 2, {true, true}, 3)}) {
    int last = -1;
    for (const Monomial m : spec.monomials()) {
      const int pos = static_cast<int>(std::find(kMonomialOrder.begin(), kMonomialOrder.end(), m) - kMonomialOrder.begin());
      CHECK(pos > last);
      last = pos;
    }
    CHECK(spec.monomials().front() == Monomial::One);
    CHECK(spec.param_count() == 2 * spec.basis_size());
  }
}

TEST_CASE("basis vectors") {
  CHECK(values(basis_at(kSpatial, 2, 3, 0)) == std::vector<double>{1, 2, 3});
  CHECK(values(basis_at(kOrder1Cross, 1, -2, 2)) == std::vector<double>{1, 1, -2, 2, 2, -4});
  // {1, dx, dy, dt, dx^2, dx*dy, dy^2, dt^2}
  const ShapeFunctionSpec second(2, 2, {}, 3);
  CHECK(second.basis_size() == 8);
  CHECK(values(basis_at(second, 1, 1, 1)) == std::vector<double>(8, 1.0));
  CHECK(values(basis_at(second, 2, 3, -1)) == std::vector<double>{1, 2, 3, -1, 4, 6, 9, 1});
  CHECK(values(basis_at(kOrder2, 2, 3, -2)) == std::vector<double>{1, 2, 3, -2, 4});
}

TEST_CASE("spec validation and tags") {
  CHECK_THROWS_AS(ShapeFunctionSpec(1, 1, {}, 1), Error);
  CHECK_THROWS_AS(ShapeFunctionSpec(1, 0, {true, false}, 1), Error);
  CHECK_THROWS_AS(ShapeFunctionSpec(1, 0, {}, 4), Error);
  CHECK_THROWS_AS(ShapeFunctionSpec(3, 0, {}, 1), Error);
  CHECK(kOrder1Cross.tag() == "s1t1-xt-yt-m5");
  CHECK(kOrder1Cross.half_window() == 2);
  CHECK(window_offsets(5) == std::vector<int>{-2, -1, 0, 1, 2});
  CHECK(window_offsets(1) == std::vector<int>{0});
  CHECK(param_names(kOrder1Cross) ==
        std::vector<std::string>{"u", "ux", "uy", "ut", "uxt", "uyt", "v", "vx", "vy", "vt", "vxt", "vyt"});
  CHECK(kOrder2.warp_capable());
  CHECK_FALSE(ShapeFunctionSpec(2, 0, {}, 1).warp_capable());
  CHECK_FALSE(ShapeFunctionSpec(0, 1, {}, 3).has_gradients());
}

TEST_CASE("warp_point") {
  test::Rng rng(1);
  const ParamSet zero = ParamSet::zero(kOrder1Cross);
  for (int i = 0; i < 20; ++i) {
    const double dx = rng.uniform(-15, 15), dy = rng.uniform(-15, 15), dt = rng.integer(-2, 2);
    const WarpedPoint w = warp_point(zero, kOrder1Cross, dx, dy, dt);
    CHECK(w.x == dx);
    CHECK(w.y == dy);
  }
  ParamSet p = ParamSet::zero(kOrder1);
  p.u(0) = 0.5;
  p.u(3) = 0.1;
  CHECK(warp_point(p, kOrder1, 0, 0, 2).x == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(ParamSet::get_u(p, kOrder1, Monomial::T).value() == 0.1);
  CHECK_FALSE(ParamSet::get_u(p, kOrder1, Monomial::XT).has_value());

  // 2x3 affine matrix form.
  for (int i = 0; i < 100; ++i) {
    const ParamSet q = random_params(kSpatial, rng, 0.5);
    const double dx = rng.uniform(-15, 15), dy = rng.uniform(-15, 15);
    Eigen::Matrix<double, 2, 3> m;
    m << q.u(0), 1 + q.u(1), q.u(2), q.v(0), q.v(1), 1 + q.v(2);
    const Eigen::Vector2d expect = m * Eigen::Vector3d(1, dx, dy);
    const WarpedPoint w = warp_point(q, kSpatial, dx, dy, 0);
    CHECK(std::abs(w.x - expect.x()) < 1e-12);
    CHECK(std::abs(w.y - expect.y()) < 1e-12);
  }
}

TEST_CASE("shape jacobian") {
  const auto j = shape_jacobian(kSpatial, 4, -7, 0);
  Eigen::Matrix<double, 2, 6> expect;
  expect << 1, 4, -7, 0, 0, 0, 0, 0, 0, 1, 4, -7;
  CHECK((j - expect).cwiseAbs().maxCoeff() == 0.0);

  for (const auto& spec : {kSpatial, kOrder1, kOrder1Cross, kOrder2}) {
    const auto j0 = shape_jacobian(spec, 0, 0, 0);
    const int k = spec.basis_size();
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, 2 * k);
    e(0, 0) = 1;
    e(1, k) = 1;
    CHECK((j0 - e).cwiseAbs().maxCoeff() == 0.0);
  }

  test::Rng rng(2);
  for (const auto& spec : {kSpatial, kOrder1Cross, kOrder2, ShapeFunctionSpec(2, 2, {true, true}, 5)}) {
    for (int trial = 0; trial < 10; ++trial) {
      const ParamSet p = random_params(spec, rng, 0.05);
      const double dx = rng.uniform(-15, 15), dy = rng.uniform(-15, 15), dt = rng.integer(-2, 2);
      const auto jac = shape_jacobian(spec, dx, dy, dt);
      const double h = 1e-3;
      for (int c = 0; c < p.size(); ++c) {
        ParamSet plus = p, minus = p;
        plus.flat()[c] += h;
        minus.flat()[c] -= h;
        const WarpedPoint a = warp_point(plus, spec, dx, dy, dt);
        const WarpedPoint b = warp_point(minus, spec, dx, dy, dt);
        CHECK(test::rel_err((a.x - b.x) / (2 * h), jac(0, c)) < 1e-10);
        CHECK(test::rel_err((a.y - b.y) / (2 * h), jac(1, c)) < 1e-10);
      }
    }
  }
}

TEST_CASE("block jacobian generalises to three displaced dimensions") {
  const std::vector<double> basis{1, 2, 3, 4};
  const Eigen::MatrixXd j = block_jacobian(basis, 3);
  REQUIRE(j.rows() == 3);
  REQUIRE(j.cols() == 12);
  for (int d = 0; d < 3; ++d) {
    for (int c = 0; c < 12; ++c) CHECK(j(d, c) == (c / 4 == d ? basis[static_cast<std::size_t>(c % 4)] : 0.0));
  }
}

TEST_CASE("warp matrices of the affine and spatial-temporal specs") {
  CHECK(to_warp(ParamSet::zero(kOrder1Cross), kOrder1Cross).matrix().isIdentity(0.0));
  ParamSet p = ParamSet::zero(kSpatial);
  p.flat() << 0.3, 0.01, -0.02, -0.4, 0.03, 0.04;
  Eigen::Matrix3d affine;
  affine << 1, 0, 0, 0.3, 1.01, -0.02, -0.4, 0.03, 1.04;
  CHECK((to_warp(p, kSpatial).matrix() - affine).cwiseAbs().maxCoeff() < 1e-15);

  ParamSet q = ParamSet::zero(kOrder1Cross);
  // u, ux, uy, ut, uxt, uyt | v, vx, vy, vt, vxt, vyt
  q.flat() << 0.5, 0.01, 0.02, 0.03, 0.004, 0.005, -0.6, 0.06, 0.07, 0.08, 0.009, 0.001;
  Eigen::Matrix<double, 6, 6> expect;
  // Coordinates [1, x, y, t, xt, yt]. The xt row follows x~t = xt + u t + u_x xt
  // + u_y yt with the t^2 terms dropped, so u multiplies the t coordinate.
  expect << 1, 0, 0, 0, 0, 0,
      0.5, 1.01, 0.02, 0.03, 0.004, 0.005,
      -0.6, 0.06, 1.07, 0.08, 0.009, 0.001,
      0, 0, 0, 1, 0, 0,
      0, 0, 0, 0.5, 1.01, 0.02,
      0, 0, 0, -0.6, 0.06, 1.07;
  const WarpMatrix w = to_warp(q, kOrder1Cross);
  CHECK((w.matrix() - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(to_warp(ParamSet::zero(ShapeFunctionSpec(2, 0, {}, 1)), ShapeFunctionSpec(2, 0, {}, 1)), Error);
}

TEST_CASE("warp rows reproduce warp_point and parameters round-trip") {
  test::Rng rng(5);
  for (const auto& spec : {kSpatial, kOrder1, kOrder1Cross, kOrder2, ShapeFunctionSpec(0, 1, {}, 3)}) {
    for (int trial = 0; trial < 50; ++trial) {
      const ParamSet p = random_params(spec, rng, 0.2);
      const WarpMatrix w = to_warp(p, spec);
      CHECK((from_warp(w).flat() - p.flat()).cwiseAbs().maxCoeff() < 1e-15);
      const double dx = rng.uniform(-15, 15), dy = rng.uniform(-15, 15), dt = rng.integer(-2, 2);
      const WarpedPoint a = w.apply(dx, dy, dt);
      const WarpedPoint b = warp_point(p, spec, dx, dy, dt);
      CHECK(std::abs(a.x - b.x) < 1e-12);
      CHECK(std::abs(a.y - b.y) < 1e-12);
    }
  }
}

TEST_CASE("compose and invert") {
  test::Rng rng(8);
  for (const auto& spec : {kSpatial, kOrder1Cross}) {
    const WarpMatrix w = to_warp(random_params(spec, rng, 0.05), spec);
    CHECK((compose(w, WarpMatrix::identity(spec)).matrix() - w.matrix()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(invert(WarpMatrix::identity(spec)).matrix().isIdentity(0.0));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const ParamSet p = random_params(kSpatial, rng, 0.3);
    const WarpMatrix w = to_warp(p, kSpatial);
    CHECK(from_warp(compose(w, invert(w))).flat().cwiseAbs().maxCoeff() < 1e-12);
    // The affine group is closed: products keep the structural first row.
    const WarpMatrix c = compose(w, to_warp(random_params(kSpatial, rng, 0.3), kSpatial));
    CHECK(c.matrix().row(0) == Eigen::RowVector3d(1, 0, 0).transpose().transpose());
  }
  ParamSet singular = ParamSet::zero(kSpatial);
  singular.u(1) = -1.0;
  CHECK_THROWS_AS(invert(to_warp(singular, kSpatial)), Error);
}

TEST_CASE("temporal specs without cross terms compose exactly") {
  test::Rng rng(13);
  for (const auto& spec : {kOrder1, kOrder2}) {
    for (int trial = 0; trial < 30; ++trial) {
      const ParamSet a = random_params(spec, rng, 0.05);
      const ParamSet b = random_params(spec, rng, 0.05);
      const WarpMatrix c = compose(to_warp(a, spec), to_warp(b, spec));
      const double dx = rng.uniform(-15, 15), dy = rng.uniform(-15, 15), dt = rng.integer(-2, 2);
      const WarpedPoint m = c.apply(dx, dy, dt);
      const WarpedPoint f = compose_functions(a, b, spec, dx, dy, dt);
      CHECK(std::abs(m.x - f.x) < 1e-12);
      CHECK(std::abs(m.y - f.y) < 1e-12);
    }
  }
}

TEST_CASE("cross-term composition differs from function composition only by dropped terms") {
  test::Rng rng(21);
  const auto& spec = kOrder1Cross;
  double central = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ParamSet a = random_params(spec, rng, 0.01);
    const ParamSet b = random_params(spec, rng, 0.01);
    const WarpMatrix c = compose(to_warp(a, spec), to_warp(b, spec));
    const double dx = rng.uniform(-15, 15), dy = rng.uniform(-15, 15), dt = rng.integer(-2, 2);
    const WarpedPoint m = c.apply(dx, dy, dt);
    const WarpedPoint f = compose_functions(a, b, spec, dx, dy, dt);
    // b moves (x, y) by (ub, vb); a's rate terms then see (x + ub) t, of which
    // the matrix keeps only the parts linear in t.
    const double ub_t = b.u(3) * dt + b.u(4) * dx * dt + b.u(5) * dy * dt;
    const double vb_t = b.v(3) * dt + b.v(4) * dx * dt + b.v(5) * dy * dt;
    const double drop_x = (a.u(4) * ub_t + a.u(5) * vb_t) * dt;
    const double drop_y = (a.v(4) * ub_t + a.v(5) * vb_t) * dt;
    CHECK(std::abs((f.x - m.x) - drop_x) < 1e-12);
    CHECK(std::abs((f.y - m.y) - drop_y) < 1e-12);

    // Every dropped term carries dt^2, so the central frame composes exactly.
    const WarpedPoint m0 = c.apply(dx, dy, 0);
    const WarpedPoint f0 = compose_functions(a, b, spec, dx, dy, 0);
    central = std::max({central, std::abs(m0.x - f0.x), std::abs(m0.y - f0.y)});
  }
  CHECK(central < 1e-6);
}

TEST_CASE("cross-term inverse is re-projected onto the structured form") {
  test::Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet p = random_params(kOrder1Cross, rng, 0.02);
    const WarpMatrix inv = invert(to_warp(p, kOrder1Cross));
    // Structural rows are restored exactly.
    const Eigen::MatrixXd& m = inv.matrix();
    CHECK(m.row(0) == Eigen::RowVectorXd::Unit(6, 0));
    CHECK(m.row(3) == Eigen::RowVectorXd::Unit(6, 3));
    CHECK(m(4, 3) == m(1, 0));
    CHECK(m(4, 4) == m(1, 1));
    CHECK(m(5, 5) == m(2, 2));
    // Parameters match the numeric inverse's x~ / y~ rows.
    const Eigen::MatrixXd numeric = to_warp(p, kOrder1Cross).matrix().inverse();
    CHECK((m.topRows(3) - numeric.topRows(3)).cwiseAbs().maxCoeff() < 1e-12);
  }
}
