#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace stdic {

struct Gradient {
  double dx = 0.0;
  double dy = 0.0;
};

struct SampleGrad {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

// Grayscale image with a cubic B-spline interpolant.
//
// The coefficient grid is computed once at construction so that the spline
// passes through every stored pixel. Sampling is defined on the interior
// domain [kMargin, width-1-kMargin] x [kMargin, height-1-kMargin]; anything
// outside is an OutOfDomain error rather than an extrapolated value.
// Gradients are analytic derivatives of the same spline.
class GrayImage {
 public:
  static constexpr int kMargin = 2;
  static constexpr int kMinSize = 5;

  GrayImage() = default;
  // Throws DimensionTooSmall if either side is < 5, SizeMismatch if the
  // intensity array does not hold width*height values.
  GrayImage(int width, int height, std::vector<double> intensities);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  double at(int x, int y) const { return pixels_[index(x, y)]; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }

  bool in_domain(double x, double y) const noexcept {
    return x >= kMargin && y >= kMargin && x <= width_ - 1 - kMargin &&
           y <= height_ - 1 - kMargin;
  }

  double sample(double x, double y) const;
  Gradient gradient(double x, double y) const;
  SampleGrad sample_with_gradient(double x, double y) const;

  // Hot-loop variants; the caller guarantees in_domain(x, y).
  double sample_unchecked(double x, double y) const noexcept;
  SampleGrad sample_with_gradient_unchecked(double x, double y) const noexcept;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  void check_domain(double x, double y) const;

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
  std::vector<double> coeffs_;
};

GrayImage build_interpolant(int width, int height, std::vector<double> intensities);

class ImageSequence {
 public:
  ImageSequence() = default;
  // Throws InvalidArgument when empty, SizeMismatch when frame sizes differ.
  explicit ImageSequence(std::vector<GrayImage> frames, double frame_interval = 1.0);

  std::size_t size() const noexcept { return frames_.size(); }
  const GrayImage& frame(std::size_t i) const { return frames_.at(i); }
  const GrayImage& operator[](std::size_t i) const { return frames_[i]; }
  std::span<const GrayImage> frames() const noexcept { return frames_; }
  double frame_interval() const noexcept { return frame_interval_; }
  int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
  int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }

 private:
  std::vector<GrayImage> frames_;
  double frame_interval_ = 1.0;
};

// Square subset of side 2*half_width+1 centred on an integer pixel.
struct SubsetRegion {
  int center_x = 0;
  int center_y = 0;
  int half_width = 0;

  int size() const noexcept { return 2 * half_width + 1; }
  int pixel_count() const noexcept { return size() * size(); }

  // Throws InvalidArgument for n < 5, OutOfDomain when the subset does not
  // sit inside the interpolation margin of an image of the given size.
  void validate(int image_width, int image_height) const;
  void validate(const GrayImage& image) const { validate(image.width(), image.height()); }
};

}  // namespace stdic
