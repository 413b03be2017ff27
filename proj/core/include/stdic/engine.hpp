#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stdic/criterion.hpp"
#include "stdic/image.hpp"
#include "stdic/shapefn.hpp"
#include "stdic/solver.hpp"

namespace stdic {

struct Roi {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct GridPoint {
  int x;
  int y;
};

struct AnalysisPlan {
  int grid_step = 10;
  int subset_half_width = 15;
  Roi roi;
  ShapeFunctionSpec spec;
  CriterionKind criterion = CriterionKind::ZNSSD;
  SolveSettings settings;
  int search_radius = 10;
  // Points whose integer-search ZNCC peak falls below this are NotFound.
  double zncc_threshold = 0.3;
  // Worker count; 0 means all hardware threads. Never changes results.
  int threads = 0;

  int window() const noexcept { return spec.window(); }
  // Subset centres, row-major, every subset inside the ROI.
  std::vector<GridPoint> grid() const;
  // Throws InvalidArgument / OutOfDomain / WindowOutOfRange.
  void validate(const ImageSequence& sequence) const;
  // Stable FNV-1a digest of every numeric setting.
  std::uint64_t hash() const;
};

struct PointResult {
  int x = 0;
  int y = 0;
  SolveOutcome outcome;
};

struct DisplacementField {
  int frame_index = 0;
  ShapeFunctionSpec spec;
  std::vector<PointResult> points;
  std::uint64_t provenance = 0;

  std::size_t converged_count() const noexcept;
  double converged_fraction() const noexcept;
};

struct IntegerShift {
  int u = 0;
  int v = 0;
  double zncc = 0.0;
};

// Exhaustive integer search maximising ZNCC over [-radius, radius]^2. Ties
// (scores within 1e-12) go to the smaller |(u, v)|, then lexicographically.
// Throws OutOfDomain when the search window leaves the target frame.
IntegerShift initial_guess(const GrayImage& reference, const GrayImage& target,
                           const SubsetRegion& region, int search_radius);

// Central frames whose full window lies inside a sequence of `frame_count`.
std::vector<int> valid_central_frames(int frame_count, int window);

// Analyses one central frame against frame 0 of the sequence. `previous`, when
// it is the field of central_frame - 1 from the same plan, seeds temporal rates.
DisplacementField analyze_frame(const ImageSequence& sequence, const AnalysisPlan& plan,
                                int central_frame, const DisplacementField* previous = nullptr);

// Fields for `frames` in the given order. Reference-side data (IC Jacobians)
// is computed once and shared across frames.
std::vector<DisplacementField> analyze_sequence(const ImageSequence& sequence, const AnalysisPlan& plan,
                                                std::span<const int> frames);

}  // namespace stdic
