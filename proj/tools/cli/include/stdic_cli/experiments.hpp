#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stdic/engine.hpp"
#include "stdic/metrics.hpp"
#include "stdic/synth.hpp"
#include "stdic_cli/config.hpp"

namespace stdic::cli {

// A canned synth -> analyze -> metrics run over several noise levels.
struct ExperimentSetup {
  std::string name;
  int width = 151;
  int height = 151;
  SpeckleParams speckle;
  MotionProgram motion;
  std::vector<double> noise_levels;
  std::vector<MethodConfig> methods;
  AnalysisConfig analysis;
  std::uint64_t seed = 20240501;
  int threads = 0;
  std::string baseline = "st-order-1";
  std::optional<double> ratio_t_min;
  bool quantize_8bit = false;
  // Write full displacement-field CSVs (large for long sequences).
  bool write_fields = true;
};

ExperimentSetup translation_setup();
ExperimentSetup vibration_setup();
// Synthetic thermal-expansion analogue: uniform strain growing linearly.
ExperimentSetup expansion_setup();
// "translation" | "vibration" | "expansion"; throws UsageError otherwise.
ExperimentSetup named_setup(const std::string& name);

struct MethodRun {
  std::string name;
  ShapeFunctionSpec spec;
  std::vector<DisplacementField> fields;
  // Parallel to fields; frames without converged points hold NaN errors.
  std::vector<FrameError> errors;
  std::vector<std::optional<StrainStats>> strains;
};

struct LevelRun {
  double noise_level = 0.0;
  std::vector<MethodRun> methods;

  const MethodRun& method(const std::string& name) const;
};

struct ExperimentResult {
  ExperimentSetup setup;
  GroundTruth truth;
  Roi roi;
  std::vector<int> frames;
  std::vector<LevelRun> levels;

  double time_of(int frame) const { return truth.at(frame).t_seconds; }
};

// Analysis ROI: `inset` on every side, never closer than the search radius.
Roi auto_roi(int width, int height, int truth_inset, const AnalysisConfig& analysis);

// Frame errors and strain statistics for fields; failures become NaN rows.
void evaluate(MethodRun& run, const GroundTruth& truth);

ExperimentResult run_experiment(const ExperimentSetup& setup, std::ostream* log = nullptr);

// Mean of per-frame mean_l1 / sd over frames accepted by `keep`.
struct ErrorSummary {
  double mean_l1 = 0.0;
  double mean_sd = 0.0;
  std::size_t frames = 0;
};
ErrorSummary summarize(const MethodRun& run, Component c, const std::function<bool(int)>& keep = {});

// Ratio of mean errors of `method` to the setup's baseline at one level.
double level_ratio(const ExperimentResult& result, const LevelRun& level, const std::string& method,
                   Component c);

// metrics.csv, ratio_u.csv / ratio_v.csv, plot_*.csv, strain.csv, fit.csv,
// fields_*.csv (optional) and summary.txt.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& out);

}  // namespace stdic::cli
