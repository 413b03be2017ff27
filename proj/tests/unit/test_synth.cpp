#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "stdic/error.hpp"
#include "stdic/synth.hpp"
#include "test_support.hpp"

using namespace stdic;

namespace {

double max_abs_diff(const GrayImage& a, const GrayImage& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

double norm2(const GrayImage& a) {
  double s = 0;
  for (const double v : a.pixels()) s += v * v;
  return std::sqrt(s);
}

struct Stats {
  double mean;
  double sd;
};

Stats stats(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (const double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

TEST_CASE("splitmix64 and the portable generator") {
  // Reference outputs of splitmix64 seeded with 0, and of the 64-bit Mersenne
  // Twister's 10000th draw with the default seed.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  std::mt19937_64 mt;
  mt.discard(9999);
  CHECK(mt() == 9981545732273789042ULL);

  PortableRng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  std::mt19937_64 direct(splitmix64(splitmix64(42) ^ 1));
  PortableRng d(42, 1);
  CHECK(d.next() == direct());

  PortableRng u(7, 0);
  std::vector<double> us, ns;
  for (int i = 0; i < 200000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    us.push_back(x);
  }
  PortableRng n(7, 3);
  for (int i = 0; i < 200000; ++i) ns.push_back(n.normal());
  CHECK(std::abs(stats(us).mean - 0.5) < 0.005);
  CHECK(std::abs(stats(ns).mean) < 0.01);
  CHECK(std::abs(stats(ns).sd - 1.0) < 0.01);
}

TEST_CASE("speckle generation") {
  const GrayImage a = make_speckle(128, 96, 99);
  const GrayImage b = make_speckle(128, 96, 99);
  CHECK(std::equal(a.pixels().begin(), a.pixels().end(), b.pixels().begin()));
  CHECK(max_abs_diff(a, make_speckle(128, 96, 100)) > 10.0);

  const std::vector<double> px(a.pixels().begin(), a.pixels().end());
  const Stats s = stats(px);
  CHECK(s.mean >= 80.0);
  CHECK(s.mean <= 180.0);
  CHECK(s.sd > 20.0);
  CHECK(*std::min_element(px.begin(), px.end()) == doctest::Approx(10.0));
  CHECK(*std::max_element(px.begin(), px.end()) == doctest::Approx(245.0));

  const GrayImage flat = make_speckle(64, 64, 1, SpeckleParams{2.5, 0.0});
  for (const double v : flat.pixels()) CHECK(v == 127.5);

  CHECK_THROWS_AS(make_speckle(63, 100, 1), Error);
  CHECK_THROWS_AS(make_speckle(64, 64, 1, SpeckleParams{0.0, 0.02}), Error);
}

TEST_CASE("default speckle textures nearly every subset") {
  const GrayImage img = make_speckle(256, 256, 20240501);
  int total = 0, good = 0;
  for (int cy = 15; cy + 15 < 256; cy += 8) {
    for (int cx = 15; cx + 15 < 256; cx += 8) {
      std::vector<double> v;
      for (int y = -15; y <= 15; ++y) {
        for (int x = -15; x <= 15; ++x) v.push_back(img.at(cx + x, cy + y));
      }
      ++total;
      good += stats(v).sd > 20.0 ? 1 : 0;
    }
  }
  CHECK(good >= 0.99 * total);
}

TEST_CASE("fourier shift") {
  const GrayImage img = make_speckle(101, 101, 5);
  CHECK(max_abs_diff(fourier_shift(img, 0, 0), img) < 1e-9);

  const GrayImage rolled = fourier_shift(img, 3, 0);
  double worst = 0;
  for (int y = 0; y < 101; ++y) {
    for (int x = 0; x < 101; ++x) worst = std::max(worst, std::abs(rolled.at(x, y) - img.at((x - 3 + 101) % 101, y)));
  }
  CHECK(worst < 1e-9);

  CHECK(max_abs_diff(fourier_shift(fourier_shift(img, 0.5, 0), -0.5, 0), img) < 1e-9);
  const GrayImage ab = fourier_shift(fourier_shift(img, 0.3, -0.2), 0.45, 0.7);
  CHECK(max_abs_diff(ab, fourier_shift(img, 0.75, 0.5)) < 1e-9);

  // Linear in the image.
  const GrayImage other = make_speckle(101, 101, 6);
  const GrayImage sum = test::image_from(101, 101, [&](int x, int y) { return img.at(x, y) + 2.0 * other.at(x, y); });
  const GrayImage s1 = fourier_shift(img, 0.37, 0.11), s2 = fourier_shift(other, 0.37, 0.11);
  const GrayImage lin = test::image_from(101, 101, [&](int x, int y) { return s1.at(x, y) + 2.0 * s2.at(x, y); });
  CHECK(max_abs_diff(fourier_shift(sum, 0.37, 0.11), lin) < 1e-9);

  CHECK(std::abs(norm2(fourier_shift(img, 0.31, 0.77)) - norm2(img)) < 1e-12 * norm2(img));
}

TEST_CASE("motion laws") {
  const MotionProgram tr = MotionProgram::translation();
  CHECK(tr.frame_count == 20);
  CHECK(tr.u_at(10) == 0.5);
  CHECK(tr.v_at(10) == 0.0);

  const MotionProgram vib = MotionProgram::vibration();
  CHECK(vib.frame_count == 200);
  CHECK(vib.frame_interval == 0.01);
  MotionProgram probe = MotionProgram::vibration(1, 0.157);
  const long double t = 0.157L;
  const long double u = 10.0L * std::exp(-2.0L * t) * std::sin(10.0L * t);
  const long double v = 10.0L * std::exp(-3.0L * t) * std::sin(5.0L * t);
  CHECK(std::abs(probe.u_at(1) - static_cast<double>(u)) < 1e-12);
  CHECK(std::abs(probe.v_at(1) - static_cast<double>(v)) < 1e-12);
  CHECK(probe.u_at(1) == doctest::Approx(7.306).epsilon(1e-4));

  CHECK(std::string(to_string(parse_motion("uniform_strain"))) == "uniform_strain");
  CHECK_THROWS_AS(parse_motion("shear"), Error);
  MotionProgram bad = MotionProgram::translation(0);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rendered translation sequences") {
  const GrayImage base = make_speckle(101, 101, 11);
  const RenderedSequence r = render_sequence(base, MotionProgram::translation(20), NoiseSpec{});
  REQUIRE(r.sequence.size() == 21);
  CHECK(r.truth.records.size() == 21);
  CHECK(r.truth.at(10).u == 0.5);
  CHECK(r.roi_inset == 6);
  for (int k = 0; k <= 20; ++k) CHECK(std::abs(r.truth.at(k).u - k / 20.0) < 1e-12);
  CHECK(std::equal(r.sequence[0].pixels().begin(), r.sequence[0].pixels().end(), base.pixels().begin()));
  for (const int k : {1, 7, 20}) {
    const GrayImage expect = fourier_shift(base, k / 20.0, 0.0);
    CHECK(std::equal(r.sequence[static_cast<std::size_t>(k)].pixels().begin(),
                     r.sequence[static_cast<std::size_t>(k)].pixels().end(), expect.pixels().begin()));
  }
  CHECK(r.truth.u_at(10, 3.0, 90.0) == 0.5);
  CHECK(r.sequence.frame_interval() == 1.0);
}

TEST_CASE("noise calibration and determinism") {
  const GrayImage base = make_speckle(128, 128, 12);
  for (const double level : {0.01, 0.03, 0.05}) {
    const GrayImage noisy = add_noise(base, NoiseSpec{level, 77, false}, 4);
    std::vector<double> d;
    for (std::size_t i = 0; i < base.pixels().size(); ++i) d.push_back(noisy.pixels()[i] - base.pixels()[i]);
    CHECK(std::abs(stats(d).sd - level * 255.0) < 0.02 * level * 255.0);
  }
  const GrayImage a = add_noise(base, NoiseSpec{0.02, 5, false}, 3);
  const GrayImage b = add_noise(base, NoiseSpec{0.02, 5, false}, 3);
  const GrayImage c = add_noise(base, NoiseSpec{0.02, 5, false}, 4);
  CHECK(max_abs_diff(a, b) == 0.0);
  CHECK(max_abs_diff(a, c) > 0.0);

  const GrayImage q = add_noise(base, NoiseSpec{0.05, 5, true}, 1);
  for (const double v : q.pixels()) {
    CHECK(v == std::round(v));
    CHECK(v >= 0.0);
    CHECK(v <= 255.0);
  }
  CHECK_THROWS_AS(add_noise(base, NoiseSpec{-0.1, 0, false}, 0), Error);
}

TEST_CASE("uniform strain sequences") {
  const GrayImage base = make_speckle(101, 101, 13);
  const MotionProgram m = MotionProgram::uniform_strain(0.002, -0.001, 4);
  const RenderedSequence r = render_sequence(base, m, NoiseSpec{});
  CHECK(r.truth.center_x == 50.0);
  CHECK(r.truth.at(3).exx == doctest::Approx(0.006));
  CHECK(r.truth.u_at(3, 70.0, 10.0) == doctest::Approx(0.12));
  CHECK(r.truth.v_at(3, 10.0, 70.0) == doctest::Approx(-0.06));
  // Pixel x of frame 4 shows the material point X with X + u(X) = x.
  const int x = 62, y = 41;
  const double X = 50.0 + (x - 50.0) / 1.008, Y = 50.0 + (y - 50.0) / (1.0 - 0.004);
  CHECK(X + r.truth.u_at(4, X, Y) == doctest::Approx(x).epsilon(1e-12));
  CHECK(Y + r.truth.v_at(4, X, Y) == doctest::Approx(y).epsilon(1e-12));
  CHECK(r.sequence[4].at(x, y) == doctest::Approx(base.sample(X, Y)).epsilon(1e-12));
  CHECK(r.roi_inset == static_cast<int>(std::ceil(0.008 * 50.0)) + 5);
}

TEST_CASE("motion that leaves no analysable region is rejected") {
  const GrayImage base = make_speckle(64, 64, 14);
  try {
    render_sequence(base, MotionProgram::constant_velocity(3.0, 0.0, 10), NoiseSpec{});
    FAIL("expected MotionTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MotionTooLarge);
  }
  CHECK(inset_roi(100, 80, 7).width == 86);
  CHECK(inset_roi(100, 80, 7).height == 66);
  CHECK(max_displacement(MotionProgram::vibration(), 137, 137) == doctest::Approx(7.4478688).epsilon(1e-6));
}
