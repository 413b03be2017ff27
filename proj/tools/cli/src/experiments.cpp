#include "stdic_cli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "stdic/csv.hpp"
#include "stdic/error.hpp"

namespace stdic::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string level_tag(double level) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(std::lround(level * 1000.0)));
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::function<bool(int)> ratio_filter(const ExperimentResult& r) {
  if (!r.setup.ratio_t_min) return {};
  const double t0 = *r.setup.ratio_t_min;
  return [&r, t0](int frame) { return r.time_of(frame) > t0; };
}

}  // namespace

ExperimentSetup translation_setup() {
  ExperimentSetup s;
  s.name = "translation";
  s.width = 151;
  s.height = 151;
  s.motion = MotionProgram::translation(20);
  s.noise_levels = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
  s.methods = {method_preset("spatial"), method_preset("st-order-1")};
  s.baseline = "st-order-1";
  return s;
}

ExperimentSetup vibration_setup() {
  ExperimentSetup s;
  s.name = "vibration";
  s.width = 137;
  s.height = 137;
  s.motion = MotionProgram::vibration(200, 0.01);
  s.noise_levels = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
  s.methods = {method_preset("spatial"), method_preset("st-order-1"), method_preset("st-order-2")};
  s.baseline = "st-order-1";
  s.ratio_t_min = 1.0;
  s.write_fields = false;
  return s;
}

ExperimentSetup expansion_setup() {
  ExperimentSetup s;
  s.name = "expansion";
  s.width = 131;
  s.height = 131;
  s.motion = MotionProgram::uniform_strain(20e-6, 20e-6, 20);
  s.noise_levels = {0.0, 0.02};
  s.methods = {method_preset("spatial"), method_preset("st-order-1")};
  s.analysis.subset_size = 51;
  s.analysis.grid_step = 15;
  s.analysis.search_radius = 3;
  s.baseline = "st-order-1";
  return s;
}

ExperimentSetup named_setup(const std::string& name) {
  if (name == "translation") return translation_setup();
  if (name == "vibration") return vibration_setup();
  if (name == "expansion") return expansion_setup();
  throw UsageError("unknown experiment '" + name + "' (expected translation, vibration or expansion)");
}

const MethodRun& LevelRun::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.name == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "no method named '" + name + "'");
}

Roi auto_roi(int width, int height, int truth_inset, const AnalysisConfig& analysis) {
  return inset_roi(width, height, std::max(truth_inset, analysis.search_radius));
}

void evaluate(MethodRun& run, const GroundTruth& truth) {
  run.errors.clear();
  run.strains.clear();
  for (const DisplacementField& f : run.fields) {
    try {
      run.errors.push_back(frame_error(f, truth));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoConvergedPoints) throw;
      FrameError nan;
      nan.frame = f.frame_index;
      nan.u = {kNaN, kNaN};
      nan.v = {kNaN, kNaN};
      nan.n_total = f.points.size();
      run.errors.push_back(nan);
    }
    std::optional<StrainStats> s;
    if (f.spec.has_gradients() && f.converged_count() > 0) s = strain_stats(f);
    run.strains.push_back(s);
  }
}

ExperimentResult run_experiment(const ExperimentSetup& setup, std::ostream* log) {
  ExperimentResult result;
  result.setup = setup;
  const GrayImage base = make_speckle(setup.width, setup.height, setup.seed, setup.speckle);
  int window = 1;
  for (const auto& m : setup.methods) window = std::max(window, m.spec.window());
  result.frames = valid_central_frames(setup.motion.frame_count + 1, window);
  if (result.frames.empty()) throw Error(ErrorCode::WindowOutOfRange, "sequence is shorter than the temporal window");

  for (const double level : setup.noise_levels) {
    const auto t0 = std::chrono::steady_clock::now();
    const RenderedSequence seq =
        render_sequence(base, setup.motion, NoiseSpec{level, setup.seed, setup.quantize_8bit});
    if (result.levels.empty()) {
      result.truth = seq.truth;
      result.roi = auto_roi(setup.width, setup.height, seq.roi_inset, setup.analysis);
    }
    LevelRun lr;
    lr.noise_level = level;
    for (const MethodConfig& m : setup.methods) {
      MethodRun run;
      run.name = m.name;
      run.spec = m.spec;
      const AnalysisPlan plan = make_plan(setup.analysis, m, result.roi, setup.threads);
      run.fields = analyze_sequence(seq.sequence, plan, result.frames);
      evaluate(run, seq.truth);
      lr.methods.push_back(std::move(run));
    }
    if (log != nullptr) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log << setup.name << ": noise " << level << " done in " << secs << " s" << std::endl;
    }
    result.levels.push_back(std::move(lr));
  }
  return result;
}

ErrorSummary summarize(const MethodRun& run, Component c, const std::function<bool(int)>& keep) {
  ErrorSummary s;
  for (const FrameError& e : run.errors) {
    if (keep && !keep(e.frame)) continue;
    s.mean_l1 += e[c].mean_l1;
    s.mean_sd += e[c].sd;
    ++s.frames;
  }
  if (s.frames > 0) {
    s.mean_l1 /= static_cast<double>(s.frames);
    s.mean_sd /= static_cast<double>(s.frames);
  }
  return s;
}

double level_ratio(const ExperimentResult& result, const LevelRun& level, const std::string& method,
                   Component c) {
  const MethodRun& a = level.method(method);
  const MethodRun& b = level.method(result.setup.baseline);
  return error_ratio(a.errors, b.errors, c, ratio_filter(result));
}

void write_experiment(const ExperimentResult& r, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  const auto& setup = r.setup;

  {
    auto f = open_output(out / "metrics.csv");
    CsvWriter w(f);
    w.row({"frame", "method", "noise_level", "mean_l1_u", "sd_u", "mean_l1_v", "sd_v", "n_converged"});
    for (const auto& level : r.levels) {
      for (const auto& m : level.methods) {
        for (const auto& e : m.errors) {
          w.row({std::to_string(e.frame), m.name, format_double(level.noise_level), format_double(e.u.mean_l1),
                 format_double(e.u.sd), format_double(e.v.mean_l1), format_double(e.v.sd),
                 std::to_string(e.n_points)});
        }
      }
    }
  }

  bool has_baseline = false;
  for (const auto& m : setup.methods) has_baseline = has_baseline || m.name == setup.baseline;
  if (has_baseline && setup.methods.size() > 1) {
    for (const Component c : {Component::U, Component::V}) {
      auto f = open_output(out / (c == Component::U ? "ratio_u.csv" : "ratio_v.csv"));
      CsvWriter w(f);
      std::vector<std::string> header = {"noise_level"};
      for (const auto& m : setup.methods) {
        if (m.name != setup.baseline) header.push_back(m.name);
      }
      w.row(header);
      for (const auto& level : r.levels) {
        std::vector<std::string> row = {format_double(level.noise_level)};
        for (const auto& m : setup.methods) {
          if (m.name != setup.baseline) row.push_back(format_double(level_ratio(r, level, m.name, c)));
        }
        w.row(row);
      }
    }
  }

  for (const auto& m : setup.methods) {
    for (const Component c : {Component::U, Component::V}) {
      const char* comp = c == Component::U ? "u" : "v";
      auto f = open_output(out / ("plot_" + std::string(comp) + "_" + m.name + ".csv"));
      CsvWriter w(f);
      w.row({"noise_level", "frame", "t_seconds", "true", "measured_mean", "mean_l1", "sd"});
      for (const auto& level : r.levels) {
        const MethodRun& run = level.method(m.name);
        for (std::size_t i = 0; i < run.fields.size(); ++i) {
          const DisplacementField& fld = run.fields[i];
          double sum = 0.0;
          std::size_t n = 0;
          for (const auto& p : fld.points) {
            if (!p.outcome.converged) continue;
            sum += c == Component::U ? p.outcome.params.disp_u() : p.outcome.params.disp_v();
            ++n;
          }
          const TruthRecord& t = r.truth.at(fld.frame_index);
          w.row({format_double(level.noise_level), std::to_string(fld.frame_index), format_double(t.t_seconds),
                 format_double(c == Component::U ? t.u : t.v), format_double(n > 0 ? sum / n : kNaN),
                 format_double(run.errors[i][c].mean_l1), format_double(run.errors[i][c].sd)});
        }
      }
    }
  }

  bool any_gradients = false;
  for (const auto& m : setup.methods) any_gradients = any_gradients || m.spec.has_gradients();
  if (any_gradients) {
    auto sf = open_output(out / "strain.csv");
    CsvWriter sw(sf);
    sw.row({"frame", "method", "noise_level", "t_seconds", "exx_true", "eyy_true", "mean_ux", "mean_vy", "sd_ux",
            "sd_vy", "n_converged"});
    auto ff = open_output(out / "fit.csv");
    CsvWriter fw(ff);
    fw.row({"method", "noise_level", "component", "slope", "intercept", "r_squared", "constant_y"});
    for (const auto& level : r.levels) {
      for (const auto& run : level.methods) {
        if (!run.spec.has_gradients()) continue;
        std::vector<double> t, ux, vy;
        for (std::size_t i = 0; i < run.fields.size(); ++i) {
          const int frame = run.fields[i].frame_index;
          const TruthRecord& tr = r.truth.at(frame);
          const auto& s = run.strains[i];
          sw.row({std::to_string(frame), run.name, format_double(level.noise_level), format_double(tr.t_seconds),
                  format_double(tr.exx), format_double(tr.eyy), format_double(s ? s->mean_ux : kNaN),
                  format_double(s ? s->mean_vy : kNaN), format_double(s ? s->sd_ux : kNaN),
                  format_double(s ? s->sd_vy : kNaN), std::to_string(s ? s->n_points : 0)});
          if (s) {
            t.push_back(tr.t_seconds);
            ux.push_back(s->mean_ux);
            vy.push_back(s->mean_vy);
          }
        }
        if (t.size() < 3 || t.front() == t.back()) continue;
        for (const auto& [name, ys] : {std::pair{"ux", &ux}, std::pair{"vy", &vy}}) {
          const LinearFit fit = linear_fit(t, *ys);
          fw.row({run.name, format_double(level.noise_level), name, format_double(fit.slope),
                  format_double(fit.intercept), format_double(fit.r_squared), fit.constant_y ? "true" : "false"});
        }
      }
    }
  }

  if (setup.write_fields) {
    for (const auto& level : r.levels) {
      for (const auto& run : level.methods) {
        auto f = open_output(out / ("fields_" + run.name + "_n" + level_tag(level.noise_level) + ".csv"));
        write_field_csv(f, run.fields);
      }
    }
  }

  {
    auto f = open_output(out / "summary.txt");
    const auto keep = ratio_filter(r);
    f << "experiment=" << setup.name << '\n';
    f << "frames=" << r.frames.front() << ".." << r.frames.back() << '\n';
    f << "roi=" << r.roi.x << ',' << r.roi.y << ',' << r.roi.width << ',' << r.roi.height << '\n';
    if (setup.ratio_t_min) f << "ratio_t_min=" << format_double(*setup.ratio_t_min) << '\n';
    for (const auto& level : r.levels) {
      for (const auto& run : level.methods) {
        for (const Component c : {Component::U, Component::V}) {
          const ErrorSummary s = summarize(run, c, keep);
          f << "noise=" << format_double(level.noise_level) << " method=" << run.name
            << " component=" << (c == Component::U ? 'u' : 'v') << " mean_l1=" << format_double(s.mean_l1)
            << " mean_sd=" << format_double(s.mean_sd) << " frames=" << s.frames << '\n';
        }
      }
    }
  }
}

}  // namespace stdic::cli
