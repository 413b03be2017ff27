#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stdic/engine.hpp"
#include "stdic/synth.hpp"

namespace stdic {

enum class Component { U, V };

struct ComponentError {
  // Mean absolute deviation from truth.
  double mean_l1 = 0.0;
  // Population SD of the signed deviations.
  double sd = 0.0;
};

struct FrameError {
  int frame = 0;
  ComponentError u;
  ComponentError v;
  std::size_t n_points = 0;
  std::size_t n_total = 0;

  const ComponentError& operator[](Component c) const noexcept { return c == Component::U ? u : v; }
};

// Over converged points only. Throws NoConvergedPoints.
FrameError frame_error(const DisplacementField& field, const GroundTruth& truth);

// Same statistic from raw measured and true values.
ComponentError component_error(std::span<const double> measured, std::span<const double> truth);

// mean(a) / mean(b). Throws EmptyAfterFilter, LengthMismatch.
double error_ratio(std::span<const double> a, std::span<const double> b);

// Ratio of per-frame mean_l1 over frames accepted by `keep` (all when empty).
// Both lists must hold the same frames after filtering.
double error_ratio(std::span<const FrameError> a, std::span<const FrameError> b, Component c,
                   const std::function<bool(int frame)>& keep = {});

struct StrainStats {
  double mean_ux = 0.0;
  double mean_vy = 0.0;
  double sd_ux = 0.0;
  double sd_vy = 0.0;
  std::size_t n_points = 0;
};

// From the solved u_x, v_y parameters of converged points. Throws
// SpecLacksGradients, NoConvergedPoints.
StrainStats strain_stats(const DisplacementField& field);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  // y had zero variance; r_squared was set to 0.
  bool constant_y = false;
};

// Ordinary least squares. Throws InvalidArgument (< 3 points or length
// mismatch), DegenerateAbscissa.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace stdic
