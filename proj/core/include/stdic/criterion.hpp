#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace stdic {

enum class CriterionKind { SSD, ZNSSD };
enum class OptimizerFamily { Forward, Inverse };

const char* to_string(CriterionKind kind) noexcept;
// Accepts "ssd" / "znssd" (case-insensitive); throws Parse otherwise.
CriterionKind parse_criterion(const std::string& name);

// Intensities of one spatial-temporal subset, pixel-major and frame-minor:
// index = pixel * frames + frame_slot, pixels row-major, frame slots in
// ascending dt. sdev is the un-normalised root-sum-square deviation
// sqrt(sum (v - mean)^2).
class SubsetSample {
 public:
  SubsetSample() = default;
  SubsetSample(std::vector<double> values, int subset_size, int frames);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  double mean() const noexcept { return mean_; }
  double sdev() const noexcept { return sdev_; }
  int subset_size() const noexcept { return n_; }
  int frames() const noexcept { return m_; }
  Eigen::Index size() const noexcept { return values_.size(); }

  // 1e-6 * n * sqrt(m): below this the subset is considered untextured.
  double flatness_threshold() const noexcept;
  bool is_flat() const noexcept { return sdev_ < flatness_threshold(); }

 private:
  Eigen::VectorXd values_;
  double mean_ = 0.0;
  double sdev_ = 0.0;
  int n_ = 0;
  int m_ = 0;
};

// F - G elementwise. Throws LengthMismatch.
Eigen::VectorXd residual_ssd(const SubsetSample& ref, const SubsetSample& warped);
// (F - mean F)/dF - (G - mean G)/dG. Throws LengthMismatch, FlatSubset.
Eigen::VectorXd residual_znssd(const SubsetSample& ref, const SubsetSample& warped);
Eigen::VectorXd residual(CriterionKind kind, const SubsetSample& ref, const SubsetSample& warped);

// Factor multiplying the SSD pseudo-inverse step: 1 for SSD; for ZNSSD the
// warped-subset deviation (forward methods) or the reference deviation
// (inverse methods).
double step_scale(CriterionKind kind, OptimizerFamily family, const SubsetSample& ref,
                  const SubsetSample& warped);

}  // namespace stdic
