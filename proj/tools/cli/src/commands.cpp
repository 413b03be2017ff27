#include "stdic_cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "stdic/csv.hpp"
#include "stdic/error.hpp"
#include "stdic/image_io.hpp"
#include "stdic_cli/experiments.hpp"

namespace stdic::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void echo_config(const ExperimentConfig& c, const fs::path& out) {
  auto f = open_output(out / "config.json");
  f << to_json(c).dump(2) << '\n';
}

fs::path require_out(const CommandOptions& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

fs::path input_dir(const ExperimentConfig& c, const CommandOptions& o) {
  if (c.input_dir.empty()) throw UsageError("config input_dir is required");
  fs::path dir = c.input_dir;
  if (dir.is_relative() && !o.config.empty()) dir = o.config.parent_path() / dir;
  return dir;
}

std::map<std::string, std::string> maybe_metadata(const fs::path& dir) {
  const fs::path p = dir / "metadata.txt";
  if (!fs::exists(p)) return {};
  return read_key_values(p);
}

Roi resolve_roi(const ExperimentConfig& c, int width, int height, const std::map<std::string, std::string>& meta) {
  if (c.analysis.roi) return *c.analysis.roi;
  int inset = 0;
  if (const auto it = meta.find("roi_inset"); it != meta.end()) inset = std::stoi(it->second);
  return auto_roi(width, height, inset, c.analysis);
}

std::vector<int> resolve_frames(const ExperimentConfig& c, int frame_count) {
  int window = 1;
  for (const auto& m : c.methods) window = std::max(window, m.spec.window());
  const std::vector<int> valid = valid_central_frames(frame_count, window);
  if (valid.empty()) throw Error(ErrorCode::WindowOutOfRange, "sequence is shorter than the temporal window");
  const int first = c.analysis.first_frame >= 0 ? c.analysis.first_frame : valid.front();
  const int last = c.analysis.last_frame >= 0 ? c.analysis.last_frame : valid.back();
  if (last < first) throw UsageError("analysis.last_frame is before analysis.first_frame");
  std::vector<int> frames;
  for (int f = first; f <= last; ++f) frames.push_back(f);
  return frames;
}

std::string frame_tag(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", frame);
  return buf;
}

}  // namespace

ExperimentConfig effective_config(const CommandOptions& o) {
  ExperimentConfig c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
  if (o.threads) c.threads = *o.threads;
  if (o.seed) c.seed = *o.seed;
  if (o.quantize_8bit) c.synth.quantize_8bit = true;
  if (o.per_frame) c.analysis.per_frame = true;
  if (c.threads < 0) throw UsageError("--threads must be >= 0");
  return c;
}

fs::path frame_path(const fs::path& dir, int index, const std::string& ext) {
  return dir / ("frame_" + frame_tag(index) + "." + ext);
}

ImageSequence load_frames(const fs::path& dir) {
  const auto meta = maybe_metadata(dir);
  std::string ext = "f64";
  if (!fs::exists(frame_path(dir, 0, ext))) ext = "pgm";
  if (!fs::exists(frame_path(dir, 0, ext))) {
    throw Error(ErrorCode::Io, "missing frame " + frame_path(dir, 0, "f64").string());
  }
  int expected = -1;
  double interval = 1.0;
  if (const auto it = meta.find("frame_count"); it != meta.end()) expected = std::stoi(it->second) + 1;
  if (const auto it = meta.find("frame_interval"); it != meta.end()) interval = std::stod(it->second);
  std::vector<GrayImage> frames;
  for (int i = 0; expected < 0 || i < expected; ++i) {
    const fs::path p = frame_path(dir, i, ext);
    if (!fs::exists(p)) {
      if (expected >= 0) throw Error(ErrorCode::Io, "missing frame " + p.string());
      break;
    }
    frames.push_back(read_image(p));
  }
  return ImageSequence(std::move(frames), interval);
}

void cmd_synth(const CommandOptions& o, std::ostream& log) {
  const ExperimentConfig c = effective_config(o);
  const fs::path out = require_out(o);
  const SynthConfig& s = c.synth;
  const GrayImage base =
      s.base_image.empty() ? make_speckle(s.width, s.height, c.seed, s.speckle) : read_image(s.base_image);
  const RenderedSequence seq = render_sequence(base, s.motion, NoiseSpec{s.noise_level, c.seed, s.quantize_8bit});
  const std::string ext = s.format == FrameFormat::F64 ? "f64" : "pgm";
  for (std::size_t i = 0; i < seq.sequence.size(); ++i) {
    const fs::path p = frame_path(out, static_cast<int>(i), ext);
    switch (s.format) {
      case FrameFormat::F64: write_f64(p, seq.sequence[i]); break;
      case FrameFormat::Pgm8: write_pgm(p, seq.sequence[i], PgmDepth::Bits8); break;
      case FrameFormat::Pgm16: write_pgm(p, seq.sequence[i], PgmDepth::Bits16); break;
    }
  }
  {
    auto f = open_output(out / "truth.csv");
    write_truth_csv(f, seq.truth);
  }
  {
    auto f = open_output(out / "metadata.txt");
    write_key_values(f, {{"motion", to_string(s.motion.kind)},
                         {"frame_count", std::to_string(s.motion.frame_count)},
                         {"frame_interval", format_double(s.motion.frame_interval)},
                         {"velocity_u", format_double(s.motion.velocity_u)},
                         {"velocity_v", format_double(s.motion.velocity_v)},
                         {"strain_rate_x", format_double(s.motion.strain_rate_x)},
                         {"strain_rate_y", format_double(s.motion.strain_rate_y)},
                         {"noise_level", format_double(s.noise_level)},
                         {"quantize_8bit", s.quantize_8bit ? "true" : "false"},
                         {"seed", std::to_string(c.seed)},
                         {"roi_inset", std::to_string(seq.roi_inset)},
                         {"width", std::to_string(base.width())},
                         {"height", std::to_string(base.height())},
                         {"format", ext}});
  }
  echo_config(c, out);
  log << "synth: wrote " << seq.sequence.size() << " frames to " << out.string() << '\n';
}

void cmd_analyze(const CommandOptions& o, std::ostream& log) {
  const ExperimentConfig c = effective_config(o);
  const fs::path in = input_dir(c, o);
  const fs::path out = require_out(o);
  const ImageSequence seq = load_frames(in);
  const Roi roi = resolve_roi(c, seq.width(), seq.height(), maybe_metadata(in));
  const std::vector<int> frames = resolve_frames(c, static_cast<int>(seq.size()));

  auto logf = open_output(out / "run_log.csv");
  CsvWriter lw(logf);
  lw.row({"method", "frame", "n_points", "n_converged", "mean_iterations", "max_iterations", "n_singular", "n_diverged",
          "n_out_of_domain", "n_flat", "n_not_found"});
  for (const MethodConfig& m : c.methods) {
    const AnalysisPlan plan = make_plan(c.analysis, m, roi, c.threads);
    const std::vector<DisplacementField> fields = analyze_sequence(seq, plan, frames);
    if (c.analysis.per_frame) {
      for (const auto& f : fields) {
        auto file = open_output(out / ("fields_" + m.name + "_f" + frame_tag(f.frame_index) + ".csv"));
        write_field_csv(file, std::span<const DisplacementField>(&f, 1));
      }
    } else {
      auto file = open_output(out / ("fields_" + m.name + ".csv"));
      write_field_csv(file, fields);
    }
    for (const auto& f : fields) {
      std::size_t counts[5] = {0, 0, 0, 0, 0};
      long iters = 0;
      int max_it = 0;
      for (const auto& p : f.points) {
        iters += p.outcome.iterations;
        max_it = std::max(max_it, p.outcome.iterations);
        if (p.outcome.failure) ++counts[static_cast<int>(*p.outcome.failure)];
      }
      const double mean_it = f.points.empty() ? 0.0 : static_cast<double>(iters) / static_cast<double>(f.points.size());
      lw.row({m.name, std::to_string(f.frame_index), std::to_string(f.points.size()),
              std::to_string(f.converged_count()), format_double(mean_it), std::to_string(max_it),
              std::to_string(counts[0]), std::to_string(counts[1]), std::to_string(counts[2]),
              std::to_string(counts[3]), std::to_string(counts[4])});
    }
    log << "analyze: " << m.name << " " << fields.size() << " frames\n";
  }
  echo_config(c, out);
}

void cmd_metrics(const CommandOptions& o, std::ostream& log) {
  const ExperimentConfig c = effective_config(o);
  const fs::path in = input_dir(c, o);
  const fs::path out = require_out(o);

  ExperimentResult r;
  r.setup.name = "metrics";
  r.setup.methods = c.methods;
  r.setup.baseline = c.metrics.baseline;
  r.setup.ratio_t_min = c.metrics.ratio_t_min;
  r.setup.write_fields = false;
  r.truth = read_truth_csv(in / "truth.csv");
  LevelRun level;
  level.noise_level = c.metrics.noise_level;
  for (const MethodConfig& m : c.methods) {
    MethodRun run;
    run.name = m.name;
    run.spec = m.spec;
    const fs::path whole = in / ("fields_" + m.name + ".csv");
    if (fs::exists(whole)) {
      run.fields = read_field_csv(whole, m.spec);
    } else {
      std::vector<fs::path> parts;
      const std::string prefix = "fields_" + m.name + "_f";
      if (fs::is_directory(in)) {
        for (const auto& e : fs::directory_iterator(in)) {
          const std::string n = e.path().filename().string();
          if (n.rfind(prefix, 0) == 0 && e.path().extension() == ".csv") parts.push_back(e.path());
        }
      }
      if (parts.empty()) throw Error(ErrorCode::Io, "missing field CSV " + whole.string());
      std::sort(parts.begin(), parts.end());
      for (const auto& p : parts) {
        auto f = read_field_csv(p, m.spec);
        run.fields.insert(run.fields.end(), f.begin(), f.end());
      }
    }
    std::vector<int> frames;
    for (const auto& f : run.fields) {
      if (f.frame_index < 0 || static_cast<std::size_t>(f.frame_index) >= r.truth.records.size()) {
        throw Error(ErrorCode::Parse, "field frame " + std::to_string(f.frame_index) + " has no ground truth");
      }
      frames.push_back(f.frame_index);
    }
    if (r.frames.empty()) {
      r.frames = frames;
    } else if (frames != r.frames) {
      throw Error(ErrorCode::Parse, "method " + m.name + " covers different frames from " + c.methods.front().name);
    }
    evaluate(run, r.truth);
    level.methods.push_back(std::move(run));
  }
  if (r.frames.empty()) throw Error(ErrorCode::Parse, "field CSVs hold no frames");
  r.levels.push_back(std::move(level));
  write_experiment(r, out);
  echo_config(c, out);
  log << "metrics: " << c.methods.size() << " methods, " << r.frames.size() << " frames\n";
}

void cmd_reproduce(const std::string& name, const CommandOptions& o, std::ostream& log) {
  ExperimentSetup s = named_setup(name);
  const fs::path out = require_out(o);
  if (o.seed) s.seed = *o.seed;
  if (o.threads) s.threads = *o.threads;
  if (o.quantize_8bit) s.quantize_8bit = true;
  const ExperimentResult r = run_experiment(s, &log);
  write_experiment(r, out);
  log << "reproduce: " << name << " written to " << out.string() << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial-temporal digital image correlation"};
  app.require_subcommand(1);
  CommandOptions o;
  std::string experiment;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config, "JSON config file");
    if (needs_config) cfg->required();
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_option("--seed", seed, "Seed override");
    sub->add_flag("--quantize-8bit", o.quantize_8bit, "Round and clip frames to 8-bit");
    sub->add_flag("--per-frame", o.per_frame, "One field CSV per frame");
  };
  auto* synth = app.add_subcommand("synth", "Render a synthetic image sequence");
  add_common(synth, true);
  auto* analyze = app.add_subcommand("analyze", "Measure displacement fields");
  add_common(analyze, true);
  auto* metrics = app.add_subcommand("metrics", "Error statistics against ground truth");
  add_common(metrics, true);
  auto* reproduce = app.add_subcommand("reproduce", "Run a canned experiment end to end");
  reproduce->add_option("name", experiment, "translation | vibration | expansion")->required();
  add_common(reproduce, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  o.threads = threads;
  o.seed = seed;
  try {
    if (synth->parsed()) cmd_synth(o, out);
    if (analyze->parsed()) cmd_analyze(o, out);
    if (metrics->parsed()) cmd_metrics(o, out);
    if (reproduce->parsed()) cmd_reproduce(experiment, o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace stdic::cli
