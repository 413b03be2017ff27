#include "stdic/engine.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "stdic/error.hpp"
#include "stdic/parallel.hpp"

namespace stdic {

namespace {
constexpr double kZnccTie = 1e-12;
}  // namespace

std::vector<GridPoint> AnalysisPlan::grid() const {
  std::vector<GridPoint> pts;
  const int h = subset_half_width;
  if (grid_step < 1) return pts;
  for (int y = roi.y + h; y + h <= roi.y + roi.height - 1; y += grid_step) {
    for (int x = roi.x + h; x + h <= roi.x + roi.width - 1; x += grid_step) pts.push_back({x, y});
  }
  return pts;
}

void AnalysisPlan::validate(const ImageSequence& sequence) const {
  settings.validate();
  if (grid_step < 1) throw Error(ErrorCode::InvalidArgument, "grid_step must be >= 1");
  if (subset_half_width < 2) throw Error(ErrorCode::InvalidArgument, "subset size must be odd and >= 5");
  if (search_radius < 0) throw Error(ErrorCode::InvalidArgument, "search_radius must be >= 0");
  if (roi.width < 1 || roi.height < 1 || roi.x < 0 || roi.y < 0 || roi.x + roi.width > sequence.width() ||
      roi.y + roi.height > sequence.height()) {
    throw Error(ErrorCode::OutOfDomain, "ROI does not lie inside the images");
  }
  if (grid().empty()) throw Error(ErrorCode::InvalidArgument, "ROI holds no complete subset");
  if (window() > static_cast<int>(sequence.size())) {
    throw Error(ErrorCode::WindowOutOfRange, "temporal window is longer than the sequence");
  }
}

std::uint64_t AnalysisPlan::hash() const {
  std::ostringstream s;
  s.precision(17);
  s << grid_step << '|' << subset_half_width << '|' << roi.x << ',' << roi.y << ',' << roi.width << ','
    << roi.height << '|' << spec.tag() << '|' << to_string(criterion) << '|' << to_string(settings.optimizer)
    << '|' << settings.max_iterations << '|' << settings.convergence_tol << '|' << settings.divergence_guard
    << '|' << search_radius << '|' << zncc_threshold;
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : s.str()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::size_t DisplacementField::converged_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : points) n += p.outcome.converged ? 1 : 0;
  return n;
}

double DisplacementField::converged_fraction() const noexcept {
  return points.empty() ? 0.0 : static_cast<double>(converged_count()) / static_cast<double>(points.size());
}

IntegerShift initial_guess(const GrayImage& reference, const GrayImage& target, const SubsetRegion& region,
                           int search_radius) {
  const int h = region.half_width;
  const int r = search_radius;
  const int cx = region.center_x;
  const int cy = region.center_y;
  if (cx - h < 0 || cy - h < 0 || cx + h >= reference.width() || cy + h >= reference.height()) {
    throw Error(ErrorCode::OutOfDomain, "reference subset leaves the reference image");
  }
  if (cx - h - r < 0 || cy - h - r < 0 || cx + h + r >= target.width() || cy + h + r >= target.height()) {
    throw Error(ErrorCode::OutOfDomain, "initial-guess search window leaves the target frame");
  }

  const int n = region.size();
  const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<double> tmpl(count);
  double mean = 0.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double v = reference.at(cx - h + x, cy - h + y);
      tmpl[static_cast<std::size_t>(y * n + x)] = v;
      mean += v;
    }
  }
  mean /= static_cast<double>(count);
  double tnorm = 0.0;
  for (double& v : tmpl) {
    v -= mean;
    tnorm += v * v;
  }
  tnorm = std::sqrt(tnorm);

  // Summed-area tables of the search area for the window mean and energy.
  const int span = n + 2 * r;
  const int ox = cx - h - r;
  const int oy = cy - h - r;
  const auto stride = static_cast<std::size_t>(span + 1);
  std::vector<double> s1(stride * stride, 0.0);
  std::vector<double> s2(stride * stride, 0.0);
  for (int y = 0; y < span; ++y) {
    double row1 = 0.0;
    double row2 = 0.0;
    for (int x = 0; x < span; ++x) {
      const double v = target.at(ox + x, oy + y);
      row1 += v;
      row2 += v * v;
      const std::size_t i = static_cast<std::size_t>(y + 1) * stride + static_cast<std::size_t>(x + 1);
      s1[i] = s1[i - stride] + row1;
      s2[i] = s2[i - stride] + row2;
    }
  }
  const auto box = [&](const std::vector<double>& s, int x0, int y0) {
    const std::size_t a = static_cast<std::size_t>(y0) * stride + static_cast<std::size_t>(x0);
    const std::size_t b = static_cast<std::size_t>(y0 + n) * stride + static_cast<std::size_t>(x0);
    return s[b + static_cast<std::size_t>(n)] - s[b] - s[a + static_cast<std::size_t>(n)] + s[a];
  };

  IntegerShift best{0, 0, -std::numeric_limits<double>::infinity()};
  int best_norm = std::numeric_limits<int>::max();
  for (int v = -r; v <= r; ++v) {
    for (int u = -r; u <= r; ++u) {
      const int x0 = u + r;
      const int y0 = v + r;
      const double sum = box(s1, x0, y0);
      const double energy = box(s2, x0, y0) - sum * sum / static_cast<double>(count);
      double cross = 0.0;
      for (int y = 0; y < n; ++y) {
        const double* trow = &tmpl[static_cast<std::size_t>(y * n)];
        for (int x = 0; x < n; ++x) cross += trow[x] * target.at(ox + x0 + x, oy + y0 + y);
      }
      const double denom = tnorm * std::sqrt(std::max(energy, 0.0));
      const double score = denom > 0.0 ? cross / denom : 0.0;
      const int norm = u * u + v * v;
      // Scores within rounding of each other are ties; summed-area sums are
      // not bit-exact across positions.
      const bool tie = std::abs(score - best.zncc) <= kZnccTie;
      const bool better = (!tie && score > best.zncc) ||
                          (tie && (norm < best_norm || (norm == best_norm && (u < best.u || (u == best.u && v < best.v)))));
      if (better) {
        best = {u, v, score};
        best_norm = norm;
      }
    }
  }
  return best;
}

std::vector<int> valid_central_frames(int frame_count, int window) {
  std::vector<int> frames;
  const int half = (window - 1) / 2;
  for (int f = half; f + half < frame_count; ++f) frames.push_back(f);
  return frames;
}

namespace {

Optimizer effective_optimizer(const AnalysisPlan& plan) {
  return plan.spec.warp_capable() ? plan.settings.optimizer : Optimizer::FA;
}

// Reference-side state of every grid point, built once per plan.
class FieldAnalyzer {
 public:
  FieldAnalyzer(const ImageSequence& sequence, const AnalysisPlan& plan)
      : sequence_(sequence), plan_(plan), grid_(plan.grid()), setups_(grid_.size()) {
    plan_.validate(sequence_);
    const GrayImage& ref = sequence_[0];
    const Optimizer opt = effective_optimizer(plan_);
    parallel_for(grid_.size(), plan_.threads, [&](std::size_t i) {
      Setup& s = setups_[i];
      s.region = {grid_[i].x, grid_[i].y, plan_.subset_half_width};
      try {
        s.region.validate(ref);
        if (opt == Optimizer::IC) {
          s.ic.emplace(precompute_ic(ref, s.region, plan_.spec, plan_.criterion));
        } else {
          s.ref.emplace(reference_sample(ref, s.region, plan_.window()));
          if (plan_.criterion == CriterionKind::ZNSSD && s.ref->is_flat()) s.failure = SolveFailure::FlatSubset;
        }
      } catch (const Error& e) {
        switch (e.code()) {
          case ErrorCode::Singular: s.failure = SolveFailure::Singular; break;
          case ErrorCode::FlatSubset: s.failure = SolveFailure::FlatSubset; break;
          case ErrorCode::OutOfDomain: s.failure = SolveFailure::OutOfDomain; break;
          default: throw;
        }
      }
    });
  }

  DisplacementField run(int central, const DisplacementField* previous) const {
    const FrameWindow window(sequence_, central, plan_.window());
    const GrayImage& ref = sequence_[0];
    const GrayImage& target = sequence_[static_cast<std::size_t>(central)];
    const ShapeFunctionSpec& spec = plan_.spec;
    const bool seed_rates = previous != nullptr && previous->frame_index == central - 1 &&
                            previous->spec == spec && previous->points.size() == grid_.size();
    const Optimizer opt = effective_optimizer(plan_);

    DisplacementField field;
    field.frame_index = central;
    field.spec = spec;
    field.provenance = plan_.hash();
    field.points.resize(grid_.size());

    parallel_for(grid_.size(), plan_.threads, [&](std::size_t i) {
      const Setup& s = setups_[i];
      PointResult& out = field.points[i];
      out.x = grid_[i].x;
      out.y = grid_[i].y;
      out.outcome.params = ParamSet::zero(spec);
      if (s.failure) {
        out.outcome.failure = s.failure;
        return;
      }
      IntegerShift guess;
      try {
        guess = initial_guess(ref, target, s.region, plan_.search_radius);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutOfDomain) throw;
        out.outcome.failure = SolveFailure::OutOfDomain;
        return;
      }
      if (!(guess.zncc >= plan_.zncc_threshold)) {
        out.outcome.failure = SolveFailure::NotFound;
        return;
      }
      ParamSet init = ParamSet::zero(spec);
      init.u(0) = guess.u;
      init.v(0) = guess.v;
      if (seed_rates && previous->points[i].outcome.converged) {
        const ParamSet& prev = previous->points[i].outcome.params;
        for (const Monomial m : {Monomial::T, Monomial::TT}) {
          if (const auto k = spec.index_of(m)) {
            init.u(*k) = prev.u(*k);
            init.v(*k) = prev.v(*k);
          }
        }
      }
      switch (opt) {
        case Optimizer::IC:
          out.outcome = solve_ic(*s.ic, window, s.region, spec, plan_.criterion, init, plan_.settings);
          break;
        case Optimizer::FC:
          out.outcome = solve_fc(*s.ref, window, s.region, spec, plan_.criterion, init, plan_.settings);
          break;
        case Optimizer::FA:
          out.outcome = solve_fa(*s.ref, window, s.region, spec, plan_.criterion, init, plan_.settings);
          break;
      }
    });
    return field;
  }

 private:
  struct Setup {
    SubsetRegion region;
    std::optional<SolveFailure> failure;
    std::optional<PrecomputedIC> ic;
    std::optional<SubsetSample> ref;
  };

  const ImageSequence& sequence_;
  const AnalysisPlan& plan_;
  std::vector<GridPoint> grid_;
  std::vector<Setup> setups_;
};

}  // namespace

DisplacementField analyze_frame(const ImageSequence& sequence, const AnalysisPlan& plan, int central_frame,
                                const DisplacementField* previous) {
  // Fail on the window before paying for the reference-side setup.
  FrameWindow(sequence, central_frame, plan.window());
  return FieldAnalyzer(sequence, plan).run(central_frame, previous);
}

std::vector<DisplacementField> analyze_sequence(const ImageSequence& sequence, const AnalysisPlan& plan,
                                                std::span<const int> frames) {
  for (const int f : frames) FrameWindow(sequence, f, plan.window());
  const FieldAnalyzer analyzer(sequence, plan);
  std::vector<DisplacementField> fields;
  fields.reserve(frames.size());
  for (const int f : frames) {
    const DisplacementField* prev = fields.empty() ? nullptr : &fields.back();
    fields.push_back(analyzer.run(f, prev));
  }
  return fields;
}

}  // namespace stdic
