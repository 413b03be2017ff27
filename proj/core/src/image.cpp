#include "stdic/image.hpp"

#include <string>

#include "stdic/error.hpp"

namespace stdic {
namespace {

// Solves c[i-1] + 4 c[i] + c[i+1] = 6 f[i] on the interior with the endpoint
// rows c[0] = f[0], c[n-1] = f[n-1]. Those endpoint rows are what the
// point-symmetric extension c[-1] = 2c[0] - c[1] reduces to, and they make the
// spline reproduce linear data exactly all the way to the border.
class LinePrefilter {
 public:
  explicit LinePrefilter(int n) : n_(n), cprime_(static_cast<std::size_t>(n), 0.0) {
    // Thomas forward sweep coefficients for the (n-2) interior unknowns.
    double prev = 0.0;
    for (int i = 1; i <= n_ - 2; ++i) {
      const double denom = 4.0 - prev;
      cprime_[static_cast<std::size_t>(i)] = 1.0 / denom;
      prev = cprime_[static_cast<std::size_t>(i)];
    }
  }

  // data is strided; result overwrites it.
  void apply(double* data, std::ptrdiff_t stride, std::vector<double>& scratch) const {
    const auto at = [&](int i) -> double& { return data[i * stride]; };
    if (n_ < 3) return;
    scratch.assign(static_cast<std::size_t>(n_), 0.0);
    const double first = at(0);
    const double last = at(n_ - 1);
    // forward sweep
    double dprev = 0.0;
    for (int i = 1; i <= n_ - 2; ++i) {
      double rhs = 6.0 * at(i);
      if (i == 1) rhs -= first;
      if (i == n_ - 2) rhs -= last;
      const double denom = 4.0 - (i == 1 ? 0.0 : cprime_[static_cast<std::size_t>(i - 1)]);
      const double d = (rhs - (i == 1 ? 0.0 : dprev)) / denom;
      scratch[static_cast<std::size_t>(i)] = d;
      dprev = d;
    }
    // back substitution
    for (int i = n_ - 3; i >= 1; --i) {
      scratch[static_cast<std::size_t>(i)] -=
          cprime_[static_cast<std::size_t>(i)] * scratch[static_cast<std::size_t>(i + 1)];
    }
    for (int i = 1; i <= n_ - 2; ++i) at(i) = scratch[static_cast<std::size_t>(i)];
  }

 private:
  int n_;
  std::vector<double> cprime_;
};

struct Weights {
  double w[4];
};

inline Weights value_weights(double f) noexcept {
  const double f2 = f * f;
  const double f3 = f2 * f;
  const double g = 1.0 - f;
  return {{g * g * g / 6.0, (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0,
           (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0, f3 / 6.0}};
}

inline Weights derivative_weights(double f) noexcept {
  const double f2 = f * f;
  const double g = 1.0 - f;
  return {{-0.5 * g * g, 1.5 * f2 - 2.0 * f, -1.5 * f2 + f + 0.5, 0.5 * f2}};
}

// Splits a coordinate into a base index and fraction so that the four taps
// (base-1 .. base+2) stay inside the grid at the upper domain edge.
inline void split(double x, int limit, int& base, double& frac) noexcept {
  base = static_cast<int>(std::floor(x));
  if (base > limit) base = limit;
  frac = x - base;
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::vector<double> intensities)
    : width_(width), height_(height), pixels_(std::move(intensities)) {
  if (width < kMinSize || height < kMinSize) {
    throw Error(ErrorCode::DimensionTooSmall, "image must be at least 5x5, got " +
                                                  std::to_string(width) + "x" +
                                                  std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::SizeMismatch, "intensity array length does not match width*height");
  }

  coeffs_ = pixels_;
  std::vector<double> scratch;
  const LinePrefilter rows(width_);
  for (int y = 0; y < height_; ++y) rows.apply(&coeffs_[index(0, y)], 1, scratch);
  const LinePrefilter cols(height_);
  for (int x = 0; x < width_; ++x) cols.apply(&coeffs_[index(x, 0)], width_, scratch);
}

GrayImage build_interpolant(int width, int height, std::vector<double> intensities) {
  return GrayImage(width, height, std::move(intensities));
}

void GrayImage::check_domain(double x, double y) const {
  if (!in_domain(x, y)) {
    throw Error(ErrorCode::OutOfDomain, "sample point (" + std::to_string(x) + ", " +
                                            std::to_string(y) + ") outside interior domain");
  }
}

double GrayImage::sample(double x, double y) const {
  check_domain(x, y);
  return sample_unchecked(x, y);
}

Gradient GrayImage::gradient(double x, double y) const {
  check_domain(x, y);
  const SampleGrad s = sample_with_gradient_unchecked(x, y);
  return {s.dx, s.dy};
}

SampleGrad GrayImage::sample_with_gradient(double x, double y) const {
  check_domain(x, y);
  return sample_with_gradient_unchecked(x, y);
}

double GrayImage::sample_unchecked(double x, double y) const noexcept {
  int bx = 0;
  int by = 0;
  double fx = 0.0;
  double fy = 0.0;
  split(x, width_ - 3, bx, fx);
  split(y, height_ - 3, by, fy);
  const Weights wx = value_weights(fx);
  const Weights wy = value_weights(fy);
  const double* base = coeffs_.data() + index(bx - 1, by - 1);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double* row = base + static_cast<std::ptrdiff_t>(j) * width_;
    const double r = wx.w[0] * row[0] + wx.w[1] * row[1] + wx.w[2] * row[2] + wx.w[3] * row[3];
    acc += wy.w[j] * r;
  }
  return acc;
}

SampleGrad GrayImage::sample_with_gradient_unchecked(double x, double y) const noexcept {
  int bx = 0;
  int by = 0;
  double fx = 0.0;
  double fy = 0.0;
  split(x, width_ - 3, bx, fx);
  split(y, height_ - 3, by, fy);
  const Weights wx = value_weights(fx);
  const Weights wy = value_weights(fy);
  const Weights dx = derivative_weights(fx);
  const Weights dy = derivative_weights(fy);
  const double* base = coeffs_.data() + index(bx - 1, by - 1);
  SampleGrad out;
  for (int j = 0; j < 4; ++j) {
    const double* row = base + static_cast<std::ptrdiff_t>(j) * width_;
    const double rv = wx.w[0] * row[0] + wx.w[1] * row[1] + wx.w[2] * row[2] + wx.w[3] * row[3];
    const double rd = dx.w[0] * row[0] + dx.w[1] * row[1] + dx.w[2] * row[2] + dx.w[3] * row[3];
    out.value += wy.w[j] * rv;
    out.dx += wy.w[j] * rd;
    out.dy += dy.w[j] * rv;
  }
  return out;
}

ImageSequence::ImageSequence(std::vector<GrayImage> frames, double frame_interval)
    : frames_(std::move(frames)), frame_interval_(frame_interval) {
  if (frames_.empty()) throw Error(ErrorCode::InvalidArgument, "image sequence needs at least one frame");
  if (!(frame_interval_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame interval must be positive");
  for (const auto& f : frames_) {
    if (f.width() != frames_.front().width() || f.height() != frames_.front().height()) {
      throw Error(ErrorCode::SizeMismatch, "all frames of a sequence must share dimensions");
    }
  }
}

void SubsetRegion::validate(int image_width, int image_height) const {
  if (half_width < 2) {
    throw Error(ErrorCode::InvalidArgument, "subset size must be odd and >= 5");
  }
  const int m = GrayImage::kMargin;
  if (center_x - half_width < m || center_y - half_width < m ||
      center_x + half_width > image_width - 1 - m || center_y + half_width > image_height - 1 - m) {
    throw Error(ErrorCode::OutOfDomain, "subset at (" + std::to_string(center_x) + ", " +
                                            std::to_string(center_y) +
                                            ") does not fit inside the image margin");
  }
}

}  // namespace stdic
