#include "stdic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "stdic/error.hpp"

namespace stdic {

namespace {

constexpr std::uint64_t kSpeckleStream = 0x5350454b4c45ULL;
constexpr double kSaturation = 3.0;

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

// Signed frequency index of DFT bin k.
double frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PortableRng::PortableRng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ stream)) {}

double PortableRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double PortableRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

GrayImage make_speckle(int width, int height, std::uint64_t seed, SpeckleParams params) {
  if (width < 64 || height < 64) throw Error(ErrorCode::DimensionTooSmall, "speckle images must be at least 64x64");
  if (params.radius <= 0.0 || params.density < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "speckle radius must be > 0 and density >= 0");
  }
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> field(count, 0.0);
  PortableRng rng(seed, kSpeckleStream);
  const auto blobs = static_cast<long>(std::llround(params.density * width * height));
  const double r2 = params.radius * params.radius;
  const int reach = static_cast<int>(std::ceil(4.0 * params.radius));
  for (long b = 0; b < blobs; ++b) {
    const double bx = rng.uniform() * width;
    const double by = rng.uniform() * height;
    const double amp = 0.5 + 0.5 * rng.uniform();
    const int ix = static_cast<int>(std::floor(bx));
    const int iy = static_cast<int>(std::floor(by));
    for (int y = iy - reach; y <= iy + reach; ++y) {
      const double ddy = y - by;
      const int wy = ((y % height) + height) % height;
      for (int x = ix - reach; x <= ix + reach; ++x) {
        const double ddx = x - bx;
        const int wx = ((x % width) + width) % width;
        field[static_cast<std::size_t>(wy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(wx)] +=
            amp * std::exp(-(ddx * ddx + ddy * ddy) / r2);
      }
    }
  }
  // Soft saturation keeps overlapping blobs from flattening the contrast of
  // everything else when the range is stretched.
  for (double& v : field) v = 1.0 - std::exp(-kSaturation * v);
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  const double low = *lo;
  const double span = *hi - low;
  for (double& v : field) v = span > 0.0 ? 10.0 + 235.0 * (v - low) / span : 127.5;
  return GrayImage(width, height, std::move(field));
}

GrayImage fourier_shift(const GrayImage& image, double dx, double dy) {
  const int w = image.width();
  const int h = image.height();
  const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  FftwBuffer buf(count);
  fftw_plan forward;
  fftw_plan backward;
  {
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_2d(h, w, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_2d(h, w, buf.data, buf.data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  const auto px = image.pixels();
  for (std::size_t i = 0; i < count; ++i) {
    buf.data[i][0] = px[i];
    buf.data[i][1] = 0.0;
  }
  fftw_execute(forward);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int ky = 0; ky < h; ++ky) {
    const double fy = frequency(ky, h) / h;
    for (int kx = 0; kx < w; ++kx) {
      const double fx = frequency(kx, w) / w;
      const std::complex<double> ramp = std::polar(1.0, -two_pi * (fx * dx + fy * dy));
      auto& c = buf.data[static_cast<std::size_t>(ky) * static_cast<std::size_t>(w) + static_cast<std::size_t>(kx)];
      const std::complex<double> z = std::complex<double>(c[0], c[1]) * ramp;
      c[0] = z.real();
      c[1] = z.imag();
    }
  }
  fftw_execute(backward);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  std::vector<double> out(count);
  const double scale = 1.0 / static_cast<double>(count);
  // Keeping the real part is the conjugate-symmetric projection of the ramp.
  for (std::size_t i = 0; i < count; ++i) out[i] = buf.data[i][0] * scale;
  return GrayImage(w, h, std::move(out));
}

const char* to_string(MotionKind kind) noexcept {
  switch (kind) {
    case MotionKind::Translation: return "translation";
    case MotionKind::Vibration: return "vibration";
    case MotionKind::UniformStrain: return "uniform_strain";
    case MotionKind::ConstantVelocity: return "constant_velocity";
  }
  return "?";
}

MotionKind parse_motion(const std::string& name) {
  for (const MotionKind k : {MotionKind::Translation, MotionKind::Vibration, MotionKind::UniformStrain,
                             MotionKind::ConstantVelocity}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::Parse, "unknown motion kind '" + name + "'");
}

MotionProgram MotionProgram::translation(int frame_count) {
  MotionProgram m;
  m.kind = MotionKind::Translation;
  m.frame_count = frame_count;
  return m;
}

MotionProgram MotionProgram::vibration(int frame_count, double time_step) {
  MotionProgram m;
  m.kind = MotionKind::Vibration;
  m.frame_count = frame_count;
  m.frame_interval = time_step;
  return m;
}

MotionProgram MotionProgram::uniform_strain(double rate_x, double rate_y, int frame_count) {
  MotionProgram m;
  m.kind = MotionKind::UniformStrain;
  m.frame_count = frame_count;
  m.strain_rate_x = rate_x;
  m.strain_rate_y = rate_y;
  return m;
}

MotionProgram MotionProgram::constant_velocity(double u_per_frame, double v_per_frame, int frame_count) {
  MotionProgram m;
  m.kind = MotionKind::ConstantVelocity;
  m.frame_count = frame_count;
  m.velocity_u = u_per_frame;
  m.velocity_v = v_per_frame;
  return m;
}

double MotionProgram::u_at(int frame) const {
  switch (kind) {
    case MotionKind::Translation: return frame / 20.0;
    case MotionKind::Vibration: {
      const double t = time_of(frame);
      return 10.0 * std::exp(-2.0 * t) * std::sin(10.0 * t);
    }
    case MotionKind::ConstantVelocity: return velocity_u * frame;
    case MotionKind::UniformStrain: return 0.0;
  }
  return 0.0;
}

double MotionProgram::v_at(int frame) const {
  switch (kind) {
    case MotionKind::Vibration: {
      const double t = time_of(frame);
      return 10.0 * std::exp(-3.0 * t) * std::sin(5.0 * t);
    }
    case MotionKind::ConstantVelocity: return velocity_v * frame;
    default: return 0.0;
  }
}

double MotionProgram::exx_at(int frame) const noexcept {
  return kind == MotionKind::UniformStrain ? strain_rate_x * frame : 0.0;
}

double MotionProgram::eyy_at(int frame) const noexcept {
  return kind == MotionKind::UniformStrain ? strain_rate_y * frame : 0.0;
}

void MotionProgram::validate() const {
  if (frame_count < 1) throw Error(ErrorCode::InvalidArgument, "frame_count must be >= 1");
  if (!(frame_interval > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame_interval must be > 0");
  if (kind == MotionKind::UniformStrain) {
    for (const int k : {frame_count}) {
      if (1.0 + strain_rate_x * k <= 0.0 || 1.0 + strain_rate_y * k <= 0.0) {
        throw Error(ErrorCode::MotionTooLarge, "strain history collapses the image");
      }
    }
  }
}

const TruthRecord& GroundTruth::at(int frame) const {
  if (frame < 0 || static_cast<std::size_t>(frame) >= records.size()) {
    throw Error(ErrorCode::InvalidArgument, "ground truth has no frame " + std::to_string(frame));
  }
  return records[static_cast<std::size_t>(frame)];
}

double GroundTruth::u_at(int frame, double x, double /*y*/) const {
  const TruthRecord& r = at(frame);
  return r.u + r.exx * (x - center_x);
}

double GroundTruth::v_at(int frame, double /*x*/, double y) const {
  const TruthRecord& r = at(frame);
  return r.v + r.eyy * (y - center_y);
}

double max_displacement(const MotionProgram& motion, int width, int height) {
  const double hx = 0.5 * (width - 1);
  const double hy = 0.5 * (height - 1);
  double peak = 0.0;
  for (int k = 0; k <= motion.frame_count; ++k) {
    const double u = std::abs(motion.u_at(k)) + std::abs(motion.exx_at(k)) * hx;
    const double v = std::abs(motion.v_at(k)) + std::abs(motion.eyy_at(k)) * hy;
    peak = std::max({peak, u, v});
  }
  return peak;
}

int roi_inset(const MotionProgram& motion, int width, int height) {
  return static_cast<int>(std::ceil(max_displacement(motion, width, height))) + 5;
}

Roi inset_roi(int width, int height, int inset) {
  return Roi{inset, inset, width - 2 * inset, height - 2 * inset};
}

GrayImage add_noise(const GrayImage& image, const NoiseSpec& noise, int frame) {
  if (noise.level < 0.0) throw Error(ErrorCode::InvalidArgument, "noise level must be >= 0");
  std::vector<double> px(image.pixels().begin(), image.pixels().end());
  if (noise.level > 0.0) {
    PortableRng rng(noise.seed, static_cast<std::uint64_t>(frame));
    const double sd = noise.level * 255.0;
    for (double& v : px) v += sd * rng.normal();
  }
  if (noise.quantize_8bit) {
    for (double& v : px) v = std::clamp(std::round(v), 0.0, 255.0);
  }
  return GrayImage(image.width(), image.height(), std::move(px));
}

RenderedSequence render_sequence(const GrayImage& base, const MotionProgram& motion, const NoiseSpec& noise) {
  motion.validate();
  if (noise.level < 0.0) throw Error(ErrorCode::InvalidArgument, "noise level must be >= 0");
  const int w = base.width();
  const int h = base.height();
  const int inset = roi_inset(motion, w, h);
  if (2 * inset + GrayImage::kMinSize > std::min(w, h)) {
    throw Error(ErrorCode::MotionTooLarge, "displacements leave no analysable region in the image");
  }

  GroundTruth truth;
  truth.center_x = 0.5 * (w - 1);
  truth.center_y = 0.5 * (h - 1);
  std::vector<GrayImage> frames;
  frames.reserve(static_cast<std::size_t>(motion.frame_count) + 1);
  for (int k = 0; k <= motion.frame_count; ++k) {
    TruthRecord rec{k, motion.time_of(k), motion.u_at(k), motion.v_at(k), motion.exx_at(k), motion.eyy_at(k)};
    truth.records.push_back(rec);

    GrayImage clean;
    if (k == 0) {
      clean = base;
    } else if (motion.is_translation()) {
      clean = fourier_shift(base, rec.u, rec.v);
    } else {
      // Backward map of x = c + (1 + e)(X - c), clamped to the spline domain.
      std::vector<double> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
      const double lo = GrayImage::kMargin;
      for (int y = 0; y < h; ++y) {
        const double sy = std::clamp(truth.center_y + (y - truth.center_y) / (1.0 + rec.eyy), lo, h - 1.0 - lo);
        for (int x = 0; x < w; ++x) {
          const double sx = std::clamp(truth.center_x + (x - truth.center_x) / (1.0 + rec.exx), lo, w - 1.0 - lo);
          px[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
              base.sample_unchecked(sx, sy);
        }
      }
      clean = GrayImage(w, h, std::move(px));
    }
    frames.push_back(noise.level > 0.0 || noise.quantize_8bit ? add_noise(clean, noise, k) : std::move(clean));
  }
  return RenderedSequence{ImageSequence(std::move(frames), motion.frame_interval), std::move(truth), inset};
}

}  // namespace stdic
