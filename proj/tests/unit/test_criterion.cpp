#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "stdic/criterion.hpp"
#include "stdic/error.hpp"
#include "stdic/solver.hpp"
#include "test_support.hpp"

using namespace stdic;

namespace {

SubsetSample random_sample(test::Rng& rng, int n, int m, double lo = 20, double hi = 230) {
  std::vector<double> v(static_cast<std::size_t>(n * n * m));
  for (double& x : v) x = rng.uniform(lo, hi);
  return SubsetSample(v, n, m);
}

SubsetSample mapped(const SubsetSample& s, double a, double b) {
  std::vector<double> v(s.values().begin(), s.values().end());
  for (double& x : v) x = a * x + b;
  return SubsetSample(v, s.subset_size(), s.frames());
}

}  // namespace

TEST_CASE("subset statistics use the root-sum-square deviation") {
  const SubsetSample s({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25}, 5, 1);
  CHECK(s.mean() == doctest::Approx(13.0));
  double ss = 0;
  for (int i = 1; i <= 25; ++i) ss += (i - 13.0) * (i - 13.0);
  CHECK(std::abs(s.sdev() - std::sqrt(ss)) < 1e-9);
  CHECK(s.flatness_threshold() == doctest::Approx(5e-6));
  CHECK_FALSE(s.is_flat());
  CHECK_THROWS_AS(SubsetSample(std::vector<double>(24, 1.0), 5, 1), Error);
  const SubsetSample flat(std::vector<double>(75, 3.0), 5, 3);
  CHECK(flat.is_flat());
  CHECK(flat.flatness_threshold() == doctest::Approx(1e-6 * 5 * std::sqrt(3.0)));
}

TEST_CASE("stored statistics match recomputation") {
  test::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SubsetSample s = random_sample(rng, 7, 3);
    const double mean = s.values().mean();
    CHECK(std::abs(s.mean() - mean) < 1e-9);
    CHECK(std::abs(s.sdev() - std::sqrt((s.values().array() - mean).square().sum())) < 1e-9);
  }
}

TEST_CASE("ssd residual") {
  const SubsetSample a(std::vector<double>(25, 100.0), 5, 1);
  const SubsetSample b(std::vector<double>(25, 90.0), 5, 1);
  CHECK(residual_ssd(a, b) == Eigen::VectorXd::Constant(25, 10.0));
  CHECK(residual_ssd(a, a).isZero(0.0));
  test::Rng rng(5);
  const SubsetSample f = random_sample(rng, 9, 5);
  const SubsetSample g = random_sample(rng, 9, 5);
  const Eigen::VectorXd r = residual_ssd(f, g);
  for (Eigen::Index i = 0; i < r.size(); ++i) CHECK(r[i] == f.values()[i] - g.values()[i]);
  CHECK_THROWS_AS(residual_ssd(f, random_sample(rng, 9, 3)), Error);
}

TEST_CASE("znssd residual") {
  test::Rng rng(6);
  const SubsetSample f = random_sample(rng, 9, 5);
  const SubsetSample g = random_sample(rng, 9, 5);
  CHECK(residual_znssd(f, f).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(residual_znssd(f, mapped(f, 1.7, 20.0)).cwiseAbs().maxCoeff() < 1e-12);

  // Direct recomputation from raw values.
  const Eigen::VectorXd r = residual_znssd(f, g);
  const double fm = f.values().mean(), gm = g.values().mean();
  double fs = 0, gs = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    fs += (f.values()[i] - fm) * (f.values()[i] - fm);
    gs += (g.values()[i] - gm) * (g.values()[i] - gm);
  }
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double expect = (f.values()[i] - fm) / std::sqrt(fs) - (g.values()[i] - gm) / std::sqrt(gs);
    CHECK(std::abs(r[i] - expect) < 1e-12);
  }

  const SubsetSample flat(std::vector<double>(405, 50.0), 9, 5);
  try {
    residual_znssd(f, flat);
    FAIL("expected FlatSubset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FlatSubset);
  }
}

TEST_CASE("znssd cost is invariant under affine intensity maps") {
  test::Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const SubsetSample f = random_sample(rng, 7, 3);
    const SubsetSample g = random_sample(rng, 7, 3);
    const double a = rng.uniform(0.2, 5.0);
    const double b = rng.uniform(-100.0, 100.0);
    const double c0 = residual_znssd(f, g).squaredNorm();
    const double c1 = residual_znssd(f, mapped(g, a, b)).squaredNorm();
    CHECK(std::abs(c0 - c1) < 1e-10);
  }
}

TEST_CASE("step scale") {
  test::Rng rng(8);
  const SubsetSample f = random_sample(rng, 5, 1);
  const SubsetSample g = random_sample(rng, 5, 1);
  CHECK(step_scale(CriterionKind::SSD, OptimizerFamily::Forward, f, g) == 1.0);
  CHECK(step_scale(CriterionKind::SSD, OptimizerFamily::Inverse, f, g) == 1.0);
  CHECK(step_scale(CriterionKind::ZNSSD, OptimizerFamily::Forward, f, g) == g.sdev());
  CHECK(step_scale(CriterionKind::ZNSSD, OptimizerFamily::Inverse, f, g) == f.sdev());

  // A subset whose deviation is 37.2 by construction.
  std::vector<double> v(25, 100.0);
  v[0] = 100.0 + 37.2 * std::sqrt(24.0 / 25.0);
  for (std::size_t i = 1; i < 25; ++i) v[i] = 100.0 - 37.2 / std::sqrt(24.0 * 25.0);
  const SubsetSample ref(v, 5, 1);
  CHECK(step_scale(CriterionKind::ZNSSD, OptimizerFamily::Inverse, ref, g) == doctest::Approx(37.2).epsilon(1e-12));
}

TEST_CASE("scaled SSD step equals the explicit znssd jacobian step") {
  test::Rng rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    const int rows = 81;
    const int np = 6;
    Eigen::MatrixXd j_ssd(rows, np);
    for (Eigen::Index i = 0; i < j_ssd.size(); ++i) j_ssd.data()[i] = rng.uniform(-30, 30);
    const SubsetSample f = random_sample(rng, 9, 1);
    const SubsetSample g = random_sample(rng, 9, 1);
    const Eigen::VectorXd r = residual_znssd(f, g);
    const Eigen::MatrixXd pinv = (j_ssd.transpose() * j_ssd).inverse() * j_ssd.transpose();

    // Inverse family: the znssd Jacobian is the reference-side SSD Jacobian / dF.
    const Eigen::VectorXd short_inv = -step_scale(CriterionKind::ZNSSD, OptimizerFamily::Inverse, f, g) * (pinv * r);
    const Eigen::VectorXd direct_inv = gauss_newton_step(j_ssd / f.sdev(), r);
    CHECK((short_inv - direct_inv).norm() / direct_inv.norm() < 1e-10);

    // Forward family: divided by dG instead.
    const Eigen::VectorXd short_fwd = -step_scale(CriterionKind::ZNSSD, OptimizerFamily::Forward, f, g) * (pinv * r);
    const Eigen::VectorXd direct_fwd = gauss_newton_step(j_ssd / g.sdev(), r);
    CHECK((short_fwd - direct_fwd).norm() / direct_fwd.norm() < 1e-10);
  }
}

TEST_CASE("criterion names") {
  CHECK(parse_criterion("ZNSSD") == CriterionKind::ZNSSD);
  CHECK(parse_criterion("ssd") == CriterionKind::SSD);
  CHECK(std::string(to_string(CriterionKind::ZNSSD)) == "znssd");
  CHECK_THROWS_AS(parse_criterion("zncc"), Error);
}
