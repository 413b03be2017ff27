#include "stdic/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stdic/error.hpp"

namespace stdic {

const char* to_string(Optimizer opt) noexcept {
  switch (opt) {
    case Optimizer::FA: return "fa";
    case Optimizer::FC: return "fc";
    case Optimizer::IC: return "ic";
  }
  return "?";
}

Optimizer parse_optimizer(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "fa") return Optimizer::FA;
  if (s == "fc") return Optimizer::FC;
  if (s == "ic") return Optimizer::IC;
  throw Error(ErrorCode::Parse, "unknown optimizer '" + name + "' (expected fa, fc or ic)");
}

const char* to_string(SolveFailure f) noexcept {
  switch (f) {
    case SolveFailure::Singular: return "Singular";
    case SolveFailure::Diverged: return "Diverged";
    case SolveFailure::OutOfDomain: return "OutOfDomain";
    case SolveFailure::FlatSubset: return "FlatSubset";
    case SolveFailure::NotFound: return "NotFound";
  }
  return "?";
}

void SolveSettings::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "convergence_tol must be > 0");
  if (!(divergence_guard > 0.0)) throw Error(ErrorCode::InvalidArgument, "divergence_guard must be > 0");
}

FrameWindow::FrameWindow(const ImageSequence& sequence, int central_frame, int window) {
  const int half = (window - 1) / 2;
  if (window < 1 || window % 2 == 0 || central_frame - half < 0 ||
      central_frame + half >= static_cast<int>(sequence.size())) {
    throw Error(ErrorCode::WindowOutOfRange,
                "window of " + std::to_string(window) + " frames around frame " +
                    std::to_string(central_frame) + " leaves the sequence");
  }
  for (int t = -half; t <= half; ++t) frames_.push_back(&sequence[static_cast<std::size_t>(central_frame + t)]);
}

FrameWindow::FrameWindow(std::vector<const GrayImage*> frames) : frames_(std::move(frames)) {
  if (frames_.empty() || frames_.size() % 2 == 0) {
    throw Error(ErrorCode::WindowOutOfRange, "a frame window needs an odd number of frames");
  }
}

SubsetLayout::SubsetLayout(const SubsetRegion& region, const ShapeFunctionSpec& spec)
    : region_(region), frames_(spec.window()) {
  const int n = region.size();
  const int h = region.half_width;
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * n * frames_;
  dx_.resize(rows);
  dy_.resize(rows);
  basis_.resize(rows, spec.basis_size());
  const auto offsets = window_offsets(frames_);
  Eigen::Index r = 0;
  for (int y = -h; y <= h; ++y) {
    for (int x = -h; x <= h; ++x) {
      for (const int t : offsets) {
        dx_[r] = x;
        dy_[r] = y;
        const BasisVector b = basis_at(spec, x, y, t);
        for (int i = 0; i < b.size(); ++i) basis_(r, i) = b[i];
        ++r;
      }
    }
  }
}

SubsetSample reference_sample(const GrayImage& reference, const SubsetRegion& region, int window) {
  region.validate(reference);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(region.pixel_count()) * static_cast<std::size_t>(window));
  const int h = region.half_width;
  for (int y = -h; y <= h; ++y) {
    for (int x = -h; x <= h; ++x) {
      const double v = reference.at(region.center_x + x, region.center_y + y);
      for (int t = 0; t < window; ++t) values.push_back(v);
    }
  }
  return SubsetSample(std::move(values), region.size(), window);
}

namespace {

constexpr double kMaxCondition = 1e12;

// Returns H^{-1} g for the symmetric normal matrix H, rejecting
// ill-conditioned systems.
Eigen::MatrixXd solve_normal(const Eigen::MatrixXd& normal, const Eigen::MatrixXd& rhs) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > kMaxCondition) {
    throw Error(ErrorCode::Singular, "normal matrix is singular or ill-conditioned");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::Singular, "normal matrix is not positive definite");
  return llt.solve(rhs);
}

std::optional<SolveFailure> failure_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Singular:
    case ErrorCode::SingularWarp: return SolveFailure::Singular;
    case ErrorCode::FlatSubset: return SolveFailure::FlatSubset;
    case ErrorCode::OutOfDomain: return SolveFailure::OutOfDomain;
    default: return std::nullopt;
  }
}

struct WarpedData {
  SubsetSample sample;
  Eigen::VectorXd gx;
  Eigen::VectorXd gy;
};

std::optional<WarpedData> sample_window(const FrameWindow& window, const SubsetLayout& layout,
                                        const ParamSet& p, bool with_gradient) {
  const Eigen::Index rows = layout.rows();
  const Eigen::Index k = layout.basis().cols();
  const Eigen::VectorXd du = layout.basis() * p.flat().head(k);
  const Eigen::VectorXd dv = layout.basis() * p.flat().tail(k);
  const double cx = layout.region().center_x;
  const double cy = layout.region().center_y;

  std::vector<double> values(static_cast<std::size_t>(rows));
  WarpedData out;
  if (with_gradient) {
    out.gx.resize(rows);
    out.gy.resize(rows);
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const GrayImage& img = window.frame(layout.slot(r));
    const double x = cx + layout.dx(r) + du[r];
    const double y = cy + layout.dy(r) + dv[r];
    if (!img.in_domain(x, y)) return std::nullopt;
    if (with_gradient) {
      const SampleGrad s = img.sample_with_gradient_unchecked(x, y);
      values[static_cast<std::size_t>(r)] = s.value;
      out.gx[r] = s.dx;
      out.gy[r] = s.dy;
    } else {
      values[static_cast<std::size_t>(r)] = img.sample_unchecked(x, y);
    }
  }
  out.sample = SubsetSample(std::move(values), layout.region().size(), layout.frames());
  return out;
}

void check_problem(const FrameWindow& window, const SubsetRegion& region, const ShapeFunctionSpec& spec,
                   const ParamSet& init, const SolveSettings& settings) {
  settings.validate();
  if (window.size() != spec.window()) {
    throw Error(ErrorCode::WindowOutOfRange, "frame window size does not match the shape function window");
  }
  if (init.basis_size() != spec.basis_size()) {
    throw Error(ErrorCode::LengthMismatch, "initial parameters do not match the shape function");
  }
  region.validate(window.frame(0));
}

// One Gauss-Newton loop; step() returns dp for the current state, update()
// folds it into the parameters.
using StepFn = std::function<Eigen::VectorXd(const ParamSet&, const WarpedData&, const Eigen::VectorXd&)>;
using UpdateFn = std::function<ParamSet(const ParamSet&, const Eigen::VectorXd&)>;

SolveOutcome iterate(const SubsetSample& ref, const FrameWindow& window, const SubsetLayout& layout,
                     CriterionKind criterion, const ParamSet& init, const SolveSettings& settings,
                     bool needs_gradient, const StepFn& step, const UpdateFn& update) {
  SolveOutcome out;
  out.params = init;
  const int k = init.basis_size();
  try {
    for (int iter = 1; iter <= settings.max_iterations; ++iter) {
      const auto warped = sample_window(window, layout, out.params, needs_gradient);
      if (!warped) {
        out.failure = SolveFailure::OutOfDomain;
        return out;
      }
      const Eigen::VectorXd r = residual(criterion, ref, warped->sample);
      if (iter == 1) {
        out.initial_residual_norm = r.norm();
        out.final_residual_norm = out.initial_residual_norm;
      }
      const Eigen::VectorXd dp = step(out.params, *warped, r);
      const double disp_step = std::hypot(dp[0], dp[k]);
      if (!std::isfinite(disp_step) || disp_step > settings.divergence_guard) {
        out.failure = SolveFailure::Diverged;
        return out;
      }
      out.params = update(out.params, dp);
      out.iterations = iter;
      if (disp_step < settings.convergence_tol) {
        out.converged = true;
        break;
      }
    }
    const auto final_sample = sample_window(window, layout, out.params, false);
    if (!final_sample) {
      out.converged = false;
      out.failure = SolveFailure::OutOfDomain;
      return out;
    }
    out.final_residual_norm = residual(criterion, ref, final_sample->sample).norm();
  } catch (const Error& e) {
    const auto f = failure_of(e);
    if (!f) throw;
    out.converged = false;
    out.failure = f;
  }
  return out;
}

// SSD-form forward Jacobian for the additive update: -[G_x X_H^T, G_y X_H^T].
Eigen::MatrixXd forward_additive_jacobian(const SubsetLayout& layout, const WarpedData& w) {
  const Eigen::Index k = layout.basis().cols();
  Eigen::MatrixXd j(layout.rows(), 2 * k);
  j.leftCols(k) = -(w.gx.asDiagonal() * layout.basis());
  j.rightCols(k) = -(w.gy.asDiagonal() * layout.basis());
  return j;
}

Eigen::VectorXd scaled_gn_step(const Eigen::MatrixXd& j, const Eigen::VectorXd& r, double scale) {
  return -scale * solve_normal(j.transpose() * j, j.transpose() * r);
}

}  // namespace

std::optional<SubsetSample> sample_warped(const FrameWindow& window, const SubsetLayout& layout,
                                          const ParamSet& p) {
  auto w = sample_window(window, layout, p, false);
  if (!w) return std::nullopt;
  return std::move(w->sample);
}

Eigen::VectorXd linear_lsq_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& offset) {
  if (design.rows() != offset.size()) {
    throw Error(ErrorCode::LengthMismatch, "design matrix rows must match the offset length");
  }
  return -solve_normal(design.transpose() * design, design.transpose() * offset);
}

Eigen::VectorXd gauss_newton_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual) {
  return linear_lsq_solve(jacobian, residual);
}

SolveOutcome solve_fa(const SubsetSample& ref_sample, const FrameWindow& window,
                      const SubsetRegion& region, const ShapeFunctionSpec& spec,
                      CriterionKind criterion, const ParamSet& init, const SolveSettings& settings) {
  check_problem(window, region, spec, init, settings);
  const SubsetLayout layout(region, spec);
  if (ref_sample.size() != layout.rows()) {
    throw Error(ErrorCode::LengthMismatch, "reference sample does not match the subset layout");
  }
  const auto step = [&](const ParamSet&, const WarpedData& w, const Eigen::VectorXd& r) {
    const double scale = step_scale(criterion, OptimizerFamily::Forward, ref_sample, w.sample);
    return scaled_gn_step(forward_additive_jacobian(layout, w), r, scale);
  };
  const auto update = [](const ParamSet& p, const Eigen::VectorXd& dp) {
    return ParamSet(p.basis_size(), p.flat() + dp);
  };
  return iterate(ref_sample, window, layout, criterion, init, settings, true, step, update);
}

SolveOutcome solve_fc(const SubsetSample& ref_sample, const FrameWindow& window,
                      const SubsetRegion& region, const ShapeFunctionSpec& spec,
                      CriterionKind criterion, const ParamSet& init, const SolveSettings& settings) {
  check_problem(window, region, spec, init, settings);
  if (!spec.warp_capable()) {
    throw Error(ErrorCode::UnsupportedSpec, "forward-compositional update needs a warp embedding");
  }
  const SubsetLayout layout(region, spec);
  if (ref_sample.size() != layout.rows()) {
    throw Error(ErrorCode::LengthMismatch, "reference sample does not match the subset layout");
  }

  // Extended coordinates of every row, and the generators E_j = W(e_j) - I.
  const WarpMatrix identity = WarpMatrix::identity(spec);
  const int dim = identity.dimension();
  Eigen::MatrixXd coords(layout.rows(), dim);
  const auto offsets = window_offsets(spec.window());
  for (Eigen::Index r = 0; r < layout.rows(); ++r) {
    coords.row(r) = identity.coordinate_vector(layout.dx(r), layout.dy(r),
                                               offsets[static_cast<std::size_t>(layout.slot(r))]);
  }
  const int np = spec.param_count();
  std::vector<Eigen::MatrixXd> generators;
  for (int j = 0; j < np; ++j) {
    ParamSet e(spec.basis_size());
    e.flat()[j] = 1.0;
    generators.push_back(to_warp(e, spec).matrix() - identity.matrix());
  }
  const int rx = identity.row_of(Monomial::X);
  const int ry = identity.row_of(Monomial::Y);

  const auto step = [&](const ParamSet& p, const WarpedData& w, const Eigen::VectorXd& r) {
    // d(W(p) W(dp) X_H)/d dp_j at dp = 0 is W(p) E_j X_H.
    const Eigen::MatrixXd wp = to_warp(p, spec).matrix();
    Eigen::MatrixXd mx(dim, np);
    Eigen::MatrixXd my(dim, np);
    for (int j = 0; j < np; ++j) {
      const Eigen::MatrixXd m = wp * generators[static_cast<std::size_t>(j)];
      mx.col(j) = m.row(rx).transpose();
      my.col(j) = m.row(ry).transpose();
    }
    const Eigen::MatrixXd jac = -(w.gx.asDiagonal() * (coords * mx) + w.gy.asDiagonal() * (coords * my));
    const double scale = step_scale(criterion, OptimizerFamily::Forward, ref_sample, w.sample);
    return scaled_gn_step(jac, r, scale);
  };
  const auto update = [&](const ParamSet& p, const Eigen::VectorXd& dp) {
    return from_warp(compose(to_warp(p, spec), to_warp(ParamSet(p.basis_size(), dp), spec)));
  };
  return iterate(ref_sample, window, layout, criterion, init, settings, true, step, update);
}

PrecomputedIC::PrecomputedIC(SubsetLayout layout, ShapeFunctionSpec spec, Eigen::MatrixXd jacobian,
                             Eigen::MatrixXd pseudo_inverse, SubsetSample ref_sample)
    : layout_(std::move(layout)),
      spec_(std::move(spec)),
      jacobian_(std::move(jacobian)),
      pseudo_inverse_(std::move(pseudo_inverse)),
      ref_sample_(std::move(ref_sample)) {}

PrecomputedIC precompute_ic(const GrayImage& reference, const SubsetRegion& region,
                            const ShapeFunctionSpec& spec, CriterionKind criterion) {
  if (!spec.warp_capable()) {
    throw Error(ErrorCode::UnsupportedSpec, "inverse-compositional update needs a warp embedding");
  }
  region.validate(reference);
  SubsetLayout layout(region, spec);
  SubsetSample ref = reference_sample(reference, region, spec.window());
  if (criterion == CriterionKind::ZNSSD && ref.is_flat()) {
    throw Error(ErrorCode::FlatSubset, "reference subset has no usable texture");
  }

  const Eigen::Index rows = layout.rows();
  const Eigen::Index k = spec.basis_size();
  Eigen::VectorXd fx(rows);
  Eigen::VectorXd fy(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Gradient g = reference.gradient(region.center_x + layout.dx(r), region.center_y + layout.dy(r));
    fx[r] = g.dx;
    fy[r] = g.dy;
  }
  Eigen::MatrixXd jac(rows, 2 * k);
  jac.leftCols(k) = fx.asDiagonal() * layout.basis();
  jac.rightCols(k) = fy.asDiagonal() * layout.basis();

  const Eigen::MatrixXd normal = jac.transpose() * jac;
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(2 * k, 2 * k);
  const Eigen::MatrixXd normal_inv = solve_normal(normal, ident);
  Eigen::MatrixXd pinv = normal_inv * jac.transpose();
  return PrecomputedIC(std::move(layout), spec, std::move(jac), std::move(pinv), std::move(ref));
}

SolveOutcome solve_ic(const PrecomputedIC& pre, const FrameWindow& window,
                      const SubsetRegion& region, const ShapeFunctionSpec& spec,
                      CriterionKind criterion, const ParamSet& init, const SolveSettings& settings) {
  check_problem(window, region, spec, init, settings);
  if (!spec.warp_capable()) {
    throw Error(ErrorCode::UnsupportedSpec, "inverse-compositional update needs a warp embedding");
  }
  if (!(pre.spec() == spec) || pre.layout().region().center_x != region.center_x ||
      pre.layout().region().center_y != region.center_y ||
      pre.layout().region().half_width != region.half_width) {
    throw Error(ErrorCode::InvalidArgument, "precomputed data belongs to a different subset or spec");
  }
  const SubsetSample& ref = pre.ref_sample();
  const auto step = [&](const ParamSet&, const WarpedData& w, const Eigen::VectorXd& r) {
    const double scale = step_scale(criterion, OptimizerFamily::Inverse, ref, w.sample);
    return Eigen::VectorXd(-scale * (pre.pseudo_inverse() * r));
  };
  const auto update = [&](const ParamSet& p, const Eigen::VectorXd& dp) {
    const WarpMatrix current = to_warp(p, spec);
    const WarpMatrix increment = to_warp(ParamSet(p.basis_size(), dp), spec);
    return from_warp(compose(current, invert(increment)));
  };
  return iterate(ref, window, pre.layout(), criterion, init, settings, false, step, update);
}

}  // namespace stdic
