#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stdic/engine.hpp"
#include "stdic/image.hpp"

namespace stdic {

// Portable generator: std::mt19937_64 seeded with splitmix64(seed, stream).
// Uniform and normal variates are derived here rather than through the
// implementation-defined std distributions so that streams match everywhere.
class PortableRng {
 public:
  PortableRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }
  // [0, 1) with 53 random bits.
  double uniform();
  // Box-Muller, one variate per call (the second is cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

struct SpeckleParams {
  double radius = 2.5;
  double density = 0.02;
};

// Periodic sum S of Gaussian blobs a*exp(-r^2/R^2), a uniform in [0.5, 1],
// mapped through 1 - exp(-3 S) and stretched to [10, 245]. Density 0 gives a
// uniform 127.5 background.
GrayImage make_speckle(int width, int height, std::uint64_t seed, SpeckleParams params = {});

// Band-limited circular translation by (dx, dy): out(x, y) = in(x - dx, y - dy).
// Odd image sizes make shifts compose exactly; with an even size the Nyquist
// row/column is damped by cos(pi * shift).
GrayImage fourier_shift(const GrayImage& image, double dx, double dy);

enum class MotionKind { Translation, Vibration, UniformStrain, ConstantVelocity };

const char* to_string(MotionKind kind) noexcept;
MotionKind parse_motion(const std::string& name);

struct MotionProgram {
  MotionKind kind = MotionKind::Translation;
  // Deformed frames; the rendered sequence holds frame_count + 1 images.
  int frame_count = 20;
  // Seconds (or frames) between images.
  double frame_interval = 1.0;
  // ConstantVelocity: pixels per frame.
  double velocity_u = 0.0;
  double velocity_v = 0.0;
  // UniformStrain: strain per frame about the image centre.
  double strain_rate_x = 0.0;
  double strain_rate_y = 0.0;

  static MotionProgram translation(int frame_count = 20);
  static MotionProgram vibration(int frame_count = 200, double time_step = 0.01);
  static MotionProgram uniform_strain(double rate_x, double rate_y, int frame_count);
  static MotionProgram constant_velocity(double u_per_frame, double v_per_frame, int frame_count);

  double time_of(int frame) const noexcept { return frame * frame_interval; }
  // Rigid part of the motion at a frame.
  double u_at(int frame) const;
  double v_at(int frame) const;
  double exx_at(int frame) const noexcept;
  double eyy_at(int frame) const noexcept;
  // Fourier shifting applies (no strain component).
  bool is_translation() const noexcept { return kind != MotionKind::UniformStrain; }
  void validate() const;
};

struct NoiseSpec {
  // Fraction of 255.
  double level = 0.0;
  std::uint64_t seed = 0;
  bool quantize_8bit = false;
};

struct TruthRecord {
  int frame = 0;
  double t_seconds = 0.0;
  double u = 0.0;
  double v = 0.0;
  double exx = 0.0;
  double eyy = 0.0;
};

struct GroundTruth {
  std::vector<TruthRecord> records;
  double center_x = 0.0;
  double center_y = 0.0;

  const TruthRecord& at(int frame) const;
  // Reference-coordinate displacement of the material point (x, y).
  double u_at(int frame, double x, double y) const;
  double v_at(int frame, double x, double y) const;
};

struct RenderedSequence {
  ImageSequence sequence;
  GroundTruth truth;
  // Border width that keeps wrapped or clamped content out of any subset.
  int roi_inset = 0;
};

// Largest |displacement| of any pixel over the program.
double max_displacement(const MotionProgram& motion, int width, int height);
int roi_inset(const MotionProgram& motion, int width, int height);
Roi inset_roi(int width, int height, int inset);

// Frame 0 is the base itself (plus noise). Throws MotionTooLarge when the
// inset ROI could not hold a 5x5 subset.
RenderedSequence render_sequence(const GrayImage& base, const MotionProgram& motion,
                                 const NoiseSpec& noise);

// Adds N(0, (level*255)^2) noise seeded by (seed, frame); optional 8-bit
// rounding and clipping.
GrayImage add_noise(const GrayImage& image, const NoiseSpec& noise, int frame);

}  // namespace stdic
