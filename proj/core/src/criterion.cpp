#include "stdic/criterion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "stdic/error.hpp"

namespace stdic {

const char* to_string(CriterionKind kind) noexcept {
  return kind == CriterionKind::SSD ? "ssd" : "znssd";
}

CriterionKind parse_criterion(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ssd") return CriterionKind::SSD;
  if (s == "znssd") return CriterionKind::ZNSSD;
  throw Error(ErrorCode::Parse, "unknown criterion '" + name + "' (expected ssd or znssd)");
}

SubsetSample::SubsetSample(std::vector<double> values, int subset_size, int frames)
    : values_(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))),
      n_(subset_size),
      m_(frames) {
  if (static_cast<std::size_t>(subset_size) * static_cast<std::size_t>(subset_size) *
          static_cast<std::size_t>(frames) !=
      values.size()) {
    throw Error(ErrorCode::LengthMismatch, "subset sample must hold n*n*m values");
  }
  mean_ = values_.mean();
  sdev_ = std::sqrt((values_.array() - mean_).square().sum());
}

double SubsetSample::flatness_threshold() const noexcept {
  return 1e-6 * n_ * std::sqrt(static_cast<double>(m_));
}

namespace {

void require_same_length(const SubsetSample& a, const SubsetSample& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "reference and warped subsets differ in length");
  }
}

void require_textured(const SubsetSample& s, const char* which) {
  if (s.is_flat()) {
    throw Error(ErrorCode::FlatSubset, std::string(which) + " subset has no usable texture");
  }
}

}  // namespace

Eigen::VectorXd residual_ssd(const SubsetSample& ref, const SubsetSample& warped) {
  require_same_length(ref, warped);
  return ref.values() - warped.values();
}

Eigen::VectorXd residual_znssd(const SubsetSample& ref, const SubsetSample& warped) {
  require_same_length(ref, warped);
  require_textured(ref, "reference");
  require_textured(warped, "warped");
  return (ref.values().array() - ref.mean()) / ref.sdev() -
         (warped.values().array() - warped.mean()) / warped.sdev();
}

Eigen::VectorXd residual(CriterionKind kind, const SubsetSample& ref, const SubsetSample& warped) {
  return kind == CriterionKind::SSD ? residual_ssd(ref, warped) : residual_znssd(ref, warped);
}

double step_scale(CriterionKind kind, OptimizerFamily family, const SubsetSample& ref,
                  const SubsetSample& warped) {
  if (kind == CriterionKind::SSD) return 1.0;
  if (family == OptimizerFamily::Forward) {
    require_textured(warped, "warped");
    return warped.sdev();
  }
  require_textured(ref, "reference");
  return ref.sdev();
}

}  // namespace stdic
