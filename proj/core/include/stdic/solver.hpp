#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stdic/criterion.hpp"
#include "stdic/image.hpp"
#include "stdic/shapefn.hpp"

namespace stdic {

// Parameter-update strategy: forward-additive, forward-compositional or
// inverse-compositional. All three take Gauss-Newton steps.
enum class Optimizer { FA, FC, IC };

const char* to_string(Optimizer opt) noexcept;
Optimizer parse_optimizer(const std::string& name);

struct SolveSettings {
  Optimizer optimizer = Optimizer::IC;
  int max_iterations = 50;
  // Applied to the (du, dv) part of each step, in pixels.
  double convergence_tol = 1e-4;
  // Largest admissible |(du, dv)| per step before the solve is abandoned.
  double divergence_guard = 5.0;

  void validate() const;
};

enum class SolveFailure { Singular, Diverged, OutOfDomain, FlatSubset, NotFound };

const char* to_string(SolveFailure f) noexcept;

struct SolveOutcome {
  ParamSet params;
  int iterations = 0;
  double initial_residual_norm = 0.0;
  double final_residual_norm = 0.0;
  bool converged = false;
  std::optional<SolveFailure> failure;
};

// The m frames of a temporal window, slot i holding dt = i - (m-1)/2.
class FrameWindow {
 public:
  // Throws WindowOutOfRange when central +- (m-1)/2 leaves the sequence.
  FrameWindow(const ImageSequence& sequence, int central_frame, int window);
  // frames.size() must be odd.
  explicit FrameWindow(std::vector<const GrayImage*> frames);

  int size() const noexcept { return static_cast<int>(frames_.size()); }
  const GrayImage& frame(int slot) const { return *frames_.at(static_cast<std::size_t>(slot)); }
  int offset(int slot) const noexcept { return slot - (size() - 1) / 2; }

 private:
  std::vector<const GrayImage*> frames_;
};

// Per-row geometry of a spatial-temporal subset, in SubsetSample order.
class SubsetLayout {
 public:
  SubsetLayout(const SubsetRegion& region, const ShapeFunctionSpec& spec);

  Eigen::Index rows() const noexcept { return basis_.rows(); }
  int frames() const noexcept { return frames_; }
  int slot(Eigen::Index row) const noexcept { return static_cast<int>(row % frames_); }
  double dx(Eigen::Index row) const noexcept { return dx_[row]; }
  double dy(Eigen::Index row) const noexcept { return dy_[row]; }
  // N x k matrix of basis values, one row per (pixel, slot).
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  const SubsetRegion& region() const noexcept { return region_; }

 private:
  SubsetRegion region_;
  int frames_ = 1;
  Eigen::VectorXd dx_;
  Eigen::VectorXd dy_;
  Eigen::MatrixXd basis_;
};

// Reference intensities at the integer subset pixels, repeated for each of the
// window's frame slots.
SubsetSample reference_sample(const GrayImage& reference, const SubsetRegion& region, int window);

// Closed-form linear least squares for r(p) = A p + b:
// p* = -(A^T A)^{-1} A^T b. Throws Singular when cond(A^T A) > 1e12.
Eigen::VectorXd linear_lsq_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& offset);

// dp = -(J^T J)^{-1} J^T r. Throws Singular.
Eigen::VectorXd gauss_newton_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual);

// Inverse-compositional data that depends only on the reference image.
class PrecomputedIC {
 public:
  PrecomputedIC(SubsetLayout layout, ShapeFunctionSpec spec, Eigen::MatrixXd jacobian,
                Eigen::MatrixXd pseudo_inverse, SubsetSample ref_sample);

  const SubsetLayout& layout() const noexcept { return layout_; }
  const ShapeFunctionSpec& spec() const noexcept { return spec_; }
  // SSD-form Jacobian, rows [F_x X_H^T, F_y X_H^T].
  const Eigen::MatrixXd& jacobian() const noexcept { return jacobian_; }
  const Eigen::MatrixXd& pseudo_inverse() const noexcept { return pseudo_inverse_; }
  const SubsetSample& ref_sample() const noexcept { return ref_sample_; }

 private:
  SubsetLayout layout_;
  ShapeFunctionSpec spec_;
  Eigen::MatrixXd jacobian_;
  Eigen::MatrixXd pseudo_inverse_;
  SubsetSample ref_sample_;
};

// Throws Singular (no usable gradient), FlatSubset (ZNSSD on a flat subset),
// OutOfDomain, UnsupportedSpec.
PrecomputedIC precompute_ic(const GrayImage& reference, const SubsetRegion& region,
                            const ShapeFunctionSpec& spec, CriterionKind criterion);

// Per-point solvers. Numerical failures are reported in the outcome; bad
// arguments (mismatched spec/window, unsupported spec) throw.
SolveOutcome solve_fa(const SubsetSample& ref_sample, const FrameWindow& window,
                      const SubsetRegion& region, const ShapeFunctionSpec& spec,
                      CriterionKind criterion, const ParamSet& init, const SolveSettings& settings);

SolveOutcome solve_fc(const SubsetSample& ref_sample, const FrameWindow& window,
                      const SubsetRegion& region, const ShapeFunctionSpec& spec,
                      CriterionKind criterion, const ParamSet& init, const SolveSettings& settings);

SolveOutcome solve_ic(const PrecomputedIC& pre, const FrameWindow& window,
                      const SubsetRegion& region, const ShapeFunctionSpec& spec,
                      CriterionKind criterion, const ParamSet& init, const SolveSettings& settings);

// Samples the deformed window at the warped subset positions; nullopt when any
// position leaves an image's interior domain.
std::optional<SubsetSample> sample_warped(const FrameWindow& window, const SubsetLayout& layout,
                                          const ParamSet& p);

}  // namespace stdic
