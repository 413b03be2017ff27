#include "stdic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stdic/error.hpp"

namespace stdic {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

ComponentError component_error(std::span<const double> measured, std::span<const double> truth) {
  if (measured.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "measured/truth length mismatch");
  if (measured.empty()) throw Error(ErrorCode::NoConvergedPoints, "no points to evaluate");
  std::vector<double> dev(measured.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    dev[i] = measured[i] - truth[i];
    l1 += std::abs(dev[i]);
  }
  return {l1 / static_cast<double>(dev.size()), population_sd(dev)};
}

FrameError frame_error(const DisplacementField& field, const GroundTruth& truth) {
  std::vector<double> mu, tu, mv, tv;
  for (const PointResult& p : field.points) {
    if (!p.outcome.converged) continue;
    mu.push_back(p.outcome.params.disp_u());
    mv.push_back(p.outcome.params.disp_v());
    tu.push_back(truth.u_at(field.frame_index, p.x, p.y));
    tv.push_back(truth.v_at(field.frame_index, p.x, p.y));
  }
  if (mu.empty()) {
    throw Error(ErrorCode::NoConvergedPoints, "frame " + std::to_string(field.frame_index) + " has no converged points");
  }
  FrameError e;
  e.frame = field.frame_index;
  e.u = component_error(mu, tu);
  e.v = component_error(mv, tv);
  e.n_points = mu.size();
  e.n_total = field.points.size();
  return e;
}

double error_ratio(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "error lists differ in length");
  if (a.empty()) throw Error(ErrorCode::EmptyAfterFilter, "no frames left to compare");
  return mean_of(a) / mean_of(b);
}

double error_ratio(std::span<const FrameError> a, std::span<const FrameError> b, Component c,
                   const std::function<bool(int frame)>& keep) {
  std::vector<double> va, vb;
  std::vector<int> fa, fb;
  for (const FrameError& e : a) {
    if (keep && !keep(e.frame)) continue;
    va.push_back(e[c].mean_l1);
    fa.push_back(e.frame);
  }
  for (const FrameError& e : b) {
    if (keep && !keep(e.frame)) continue;
    vb.push_back(e[c].mean_l1);
    fb.push_back(e.frame);
  }
  if (fa != fb) throw Error(ErrorCode::LengthMismatch, "error lists cover different frames");
  return error_ratio(va, vb);
}

StrainStats strain_stats(const DisplacementField& field) {
  const auto kx = field.spec.index_of(Monomial::X);
  const auto ky = field.spec.index_of(Monomial::Y);
  if (!kx || !ky) throw Error(ErrorCode::SpecLacksGradients, "shape function has no u_x / v_y parameters");
  std::vector<double> ux, vy;
  for (const PointResult& p : field.points) {
    if (!p.outcome.converged) continue;
    ux.push_back(p.outcome.params.u(*kx));
    vy.push_back(p.outcome.params.v(*ky));
  }
  if (ux.empty()) throw Error(ErrorCode::NoConvergedPoints, "field has no converged points");
  return {mean_of(ux), mean_of(vy), population_sd(ux), population_sd(vy), ux.size()};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
  if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "linear fit needs at least 3 points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateAbscissa, "all x values are equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (!(syy > 0.0)) {
    fit.r_squared = 0.0;
    fit.constant_y = true;
    return fit;
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

}  // namespace stdic
