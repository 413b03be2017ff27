#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "stdic/error.hpp"
#include "stdic/metrics.hpp"
#include "test_support.hpp"

using namespace stdic;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no stdic::Error thrown");
  return ErrorCode::Parse;
}

// Field whose converged points carry the given (u, v) and, for a gradient
// spec, the given u_x / v_y.
DisplacementField field_of(int frame, const std::vector<std::array<double, 4>>& pts, bool converged = true) {
  DisplacementField f;
  f.frame_index = frame;
  f.spec = ShapeFunctionSpec(1, 0, {}, 1);
  const int k = f.spec.basis_size();
  int x = 10;
  for (const auto& p : pts) {
    PointResult r;
    r.x = x;
    r.y = 20;
    x += 5;
    r.outcome.params = ParamSet(k);
    r.outcome.params.u(0) = p[0];
    r.outcome.params.v(0) = p[1];
    r.outcome.params.u(*f.spec.index_of(Monomial::X)) = p[2];
    r.outcome.params.v(*f.spec.index_of(Monomial::Y)) = p[3];
    r.outcome.converged = converged;
    f.points.push_back(r);
  }
  return f;
}

GroundTruth constant_truth(int frames, double u, double v) {
  GroundTruth t;
  for (int k = 0; k <= frames; ++k) t.records.push_back({k, 0.01 * k, u, v, 0.0, 0.0});
  return t;
}

}  // namespace

TEST_CASE("component error example") {
  const std::vector<double> measured = {0.50, 0.52, 0.48};
  const std::vector<double> truth(3, 0.5);
  const ComponentError e = component_error(measured, truth);
  CHECK(e.mean_l1 == doctest::Approx(0.04 / 3).epsilon(1e-12));
  // Signed deviations {0, 0.02, -0.02}: population SD sqrt(0.0008 / 3).
  CHECK(e.sd == doctest::Approx(std::sqrt(0.0008 / 3)).epsilon(1e-12));
}

TEST_CASE("frame error skips unconverged points") {
  DisplacementField f = field_of(3, {{0.50, 1.0, 0, 0}, {0.52, 1.0, 0, 0}, {0.48, 1.0, 0, 0}});
  PointResult bad;
  bad.outcome.params = ParamSet(f.spec.basis_size());
  bad.outcome.params.u(0) = 100.0;
  bad.outcome.converged = false;
  f.points.push_back(bad);
  const FrameError e = frame_error(f, constant_truth(5, 0.5, 1.0));
  CHECK(e.frame == 3);
  CHECK(e.n_points == 3);
  CHECK(e.n_total == 4);
  CHECK(e.u.mean_l1 == doctest::Approx(0.013333333333333).epsilon(1e-10));
  CHECK(e.v.mean_l1 == 0.0);
  CHECK(e[Component::U].mean_l1 == e.u.mean_l1);
}

TEST_CASE("frame error uses the position-dependent truth") {
  GroundTruth t;
  t.center_x = 50;
  t.center_y = 50;
  t.records = {{0, 0, 0, 0, 0, 0}, {1, 1, 0.1, 0.0, 0.01, 0.0}};
  // Exact measurements at x = 10, 15, 20.
  DisplacementField f = field_of(1, {{0.1 + 0.01 * (10 - 50), 0, 0, 0},
                                     {0.1 + 0.01 * (15 - 50), 0, 0, 0},
                                     {0.1 + 0.01 * (20 - 50), 0, 0, 0}});
  const FrameError e = frame_error(f, t);
  CHECK(e.u.mean_l1 < 1e-15);
  CHECK(e.u.sd < 1e-15);
}

TEST_CASE("frame error failures") {
  CHECK(code_of([] { frame_error(field_of(1, {{0, 0, 0, 0}}, false), constant_truth(2, 0, 0)); }) ==
        ErrorCode::NoConvergedPoints);
  CHECK(code_of([] { component_error(std::vector<double>{1, 2}, std::vector<double>{1}); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("error ratio") {
  CHECK(error_ratio(std::vector<double>{2, 4}, std::vector<double>{1, 3}) == doctest::Approx(1.5));
  const std::vector<double> a = {0.013, 0.02, 0.0071};
  CHECK(error_ratio(a, a) == 1.0);
  CHECK(code_of([] { error_ratio(std::vector<double>{}, std::vector<double>{}); }) == ErrorCode::EmptyAfterFilter);
  CHECK(code_of([] { error_ratio(std::vector<double>{1}, std::vector<double>{1, 2}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("published ratio table is ordered as the experiment expects") {
  // Mean error ratio to ST order 1 for t > 1 s, noise 0..5 %.
  const double spatial[] = {1.033, 1.252, 1.295, 1.308, 1.403, 1.348};
  const double order2[] = {1.031, 1.092, 1.112, 1.116, 1.157, 1.132};
  for (int i = 1; i < 6; ++i) {
    CHECK(spatial[i] > order2[i]);
    CHECK(order2[i] > 1.0);
  }
  // A per-frame list scaled by the table value gives the table value back.
  const std::vector<double> st1 = {0.004, 0.0061, 0.0052, 0.0049};
  std::vector<double> sp;
  for (const double e : st1) sp.push_back(1.308 * e);
  CHECK(error_ratio(sp, st1) == doctest::Approx(1.308).epsilon(1e-12));
}

TEST_CASE("frame-list error ratio honours the filter") {
  std::vector<FrameError> a(4), b(4);
  for (int i = 0; i < 4; ++i) {
    a[static_cast<std::size_t>(i)].frame = b[static_cast<std::size_t>(i)].frame = i;
    a[static_cast<std::size_t>(i)].u.mean_l1 = i < 2 ? 10.0 : 2.0;
    b[static_cast<std::size_t>(i)].u.mean_l1 = 1.0;
    a[static_cast<std::size_t>(i)].v.mean_l1 = 3.0;
    b[static_cast<std::size_t>(i)].v.mean_l1 = 2.0;
  }
  CHECK(error_ratio(a, b, Component::U) == doctest::Approx(6.0));
  CHECK(error_ratio(a, b, Component::U, [](int f) { return f >= 2; }) == doctest::Approx(2.0));
  CHECK(error_ratio(a, b, Component::V) == doctest::Approx(1.5));
  CHECK(code_of([&] { error_ratio(a, b, Component::U, [](int) { return false; }); }) == ErrorCode::EmptyAfterFilter);
  std::vector<FrameError> c = b;
  c[0].frame = 9;
  CHECK(code_of([&] { error_ratio(a, c, Component::U); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("strain statistics") {
  const DisplacementField f = field_of(2, {{0, 0, 1e-4, 3e-4}, {0, 0, 2e-4, 3e-4}, {0, 0, 3e-4, 3e-4}});
  const StrainStats s = strain_stats(f);
  CHECK(s.n_points == 3);
  CHECK(s.mean_ux == doctest::Approx(2e-4));
  CHECK(s.mean_vy == doctest::Approx(3e-4));
  CHECK(s.sd_ux == doctest::Approx(std::sqrt(2.0 / 3.0) * 1e-4));
  CHECK(s.sd_vy == doctest::Approx(0.0));

  DisplacementField rigid;
  rigid.spec = ShapeFunctionSpec(0, 0, {}, 1);
  PointResult p;
  p.outcome.params = ParamSet(1);
  p.outcome.converged = true;
  rigid.points.push_back(p);
  CHECK(code_of([&] { strain_stats(rigid); }) == ErrorCode::SpecLacksGradients);
  CHECK(code_of([] { strain_stats(field_of(1, {{0, 0, 0, 0}}, false)); }) == ErrorCode::NoConvergedPoints);
}

TEST_CASE("linear fit of an exact line") {
  const std::vector<double> x = {0, 1, 2, 3, 4};
  std::vector<double> y;
  for (const double v : x) y.push_back(2e-5 * v - 1e-6);
  const LinearFit f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2e-5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(-1e-6).epsilon(1e-9));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(f.constant_y);
}

TEST_CASE("linear fit of constant y") {
  const LinearFit f = linear_fit(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4});
  CHECK(f.slope == 0.0);
  CHECK(f.intercept == 4.0);
  CHECK(f.r_squared == 0.0);
  CHECK(f.constant_y);
}

TEST_CASE("linear fit failures") {
  CHECK(code_of([] { linear_fit(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) ==
        ErrorCode::DegenerateAbscissa);
  CHECK(code_of([] { linear_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { linear_fit(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("linear fit against the normal equations") {
  test::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.integer(3, 40);
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
      y[static_cast<std::size_t>(i)] = rng.uniform(-1, 1) + 0.3 * x[static_cast<std::size_t>(i)];
    }
    // Solve [n sx; sx sxx] [b; a] = [sy; sxy] in long double.
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += x[static_cast<std::size_t>(i)];
      sy += y[static_cast<std::size_t>(i)];
      sxx += static_cast<long double>(x[static_cast<std::size_t>(i)]) * x[static_cast<std::size_t>(i)];
      sxy += static_cast<long double>(x[static_cast<std::size_t>(i)]) * y[static_cast<std::size_t>(i)];
    }
    const long double det = n * sxx - sx * sx;
    const double slope = static_cast<double>((n * sxy - sx * sy) / det);
    const double intercept = static_cast<double>((sxx * sy - sx * sxy) / det);
    const LinearFit f = linear_fit(x, y);
    CHECK(test::rel_err(f.slope, slope, 1e-3) < 1e-10);
    CHECK(test::rel_err(f.intercept, intercept, 1e-3) < 1e-10);
    CHECK(f.r_squared >= 0.0);
    CHECK(f.r_squared <= 1.0);

    // Residuals are orthogonal to 1 and x.
    double r1 = 0, rx = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[static_cast<std::size_t>(i)] - (f.intercept + f.slope * x[static_cast<std::size_t>(i)]);
      r1 += r;
      rx += r * x[static_cast<std::size_t>(i)];
    }
    CHECK(std::abs(r1) < 1e-10);
    CHECK(std::abs(rx) < 1e-9);
  }
}

TEST_CASE("errors are unchanged by a common offset of measurement and truth") {
  test::Rng rng(5);
  std::vector<double> m(30), t(30);
  for (std::size_t i = 0; i < m.size(); ++i) {
    t[i] = rng.uniform(-3, 3);
    m[i] = t[i] + rng.uniform(-0.05, 0.05);
  }
  const ComponentError base = component_error(m, t);
  for (const double shift : {-7.25, 0.5, 13.0}) {
    std::vector<double> ms = m, ts = t;
    for (std::size_t i = 0; i < m.size(); ++i) {
      ms[i] += shift;
      ts[i] += shift;
    }
    const ComponentError e = component_error(ms, ts);
    CHECK(e.mean_l1 == doctest::Approx(base.mean_l1).epsilon(1e-9));
    CHECK(e.sd == doctest::Approx(base.sd).epsilon(1e-9));
  }
}
