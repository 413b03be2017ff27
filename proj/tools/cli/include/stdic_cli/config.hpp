#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stdic/criterion.hpp"
#include "stdic/engine.hpp"
#include "stdic/shapefn.hpp"
#include "stdic/solver.hpp"
#include "stdic/synth.hpp"

namespace stdic::cli {

// Bad flags or an invalid config document (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MethodConfig {
  std::string name;
  ShapeFunctionSpec spec;
};

// Named shape-function presets: "spatial", "st-order-1", "st-order-2".
MethodConfig method_preset(const std::string& name);

enum class FrameFormat { F64, Pgm8, Pgm16 };

struct SynthConfig {
  int width = 151;
  int height = 151;
  SpeckleParams speckle;
  // Optional base image file replacing the generated speckle.
  std::string base_image;
  MotionProgram motion;
  double noise_level = 0.0;
  bool quantize_8bit = false;
  FrameFormat format = FrameFormat::F64;
};

struct AnalysisConfig {
  int subset_size = 31;
  int grid_step = 10;
  // Empty: inset from the synth metadata (or search_radius) on every side.
  std::optional<Roi> roi;
  CriterionKind criterion = CriterionKind::ZNSSD;
  SolveSettings settings;
  int search_radius = 10;
  double zncc_threshold = 0.3;
  // Central-frame range; negative means "as far as the window allows".
  int first_frame = -1;
  int last_frame = -1;
  bool per_frame = false;
};

struct MetricsConfig {
  // Denominator of the ratio tables.
  std::string baseline = "st-order-1";
  // Ratio tables only use frames with t_seconds > ratio_t_min.
  std::optional<double> ratio_t_min;
  // Label written to the noise_level column.
  double noise_level = 0.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 20240501;
  int threads = 0;
  // Frames for analyze, field CSVs and truth for metrics.
  std::string input_dir;
  SynthConfig synth;
  AnalysisConfig analysis;
  std::vector<MethodConfig> methods;
  MetricsConfig metrics;
};

// Throws UsageError on unknown keys, wrong types or out-of-range values.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
// Every field with defaults resolved; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

AnalysisPlan make_plan(const AnalysisConfig& analysis, const MethodConfig& method, const Roi& roi,
                       int threads);

}  // namespace stdic::cli
