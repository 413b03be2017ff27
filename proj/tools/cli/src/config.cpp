#include "stdic_cli/config.hpp"

#include <fstream>
#include <set>

#include "stdic/error.hpp"

namespace stdic::cli {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it was not asked about.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw UsageError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw UsageError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw UsageError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw UsageError("");
      } else {
        if (!v->is_string()) throw UsageError("");
      }
      return v->get<T>();
    } catch (const std::exception&) {
      throw UsageError(where(key) + " has the wrong type");
    }
  }

  Fields child(const std::string& key) {
    const json* v = raw(key);
    static const json empty = json::object();
    return Fields(v == nullptr ? empty : *v, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw UsageError("unknown config key " + where(key));
    }
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

const char* to_string(FrameFormat f) {
  switch (f) {
    case FrameFormat::F64: return "f64";
    case FrameFormat::Pgm8: return "pgm8";
    case FrameFormat::Pgm16: return "pgm16";
  }
  return "?";
}

FrameFormat parse_format(const std::string& s) {
  for (const FrameFormat f : {FrameFormat::F64, FrameFormat::Pgm8, FrameFormat::Pgm16}) {
    if (s == to_string(f)) return f;
  }
  throw UsageError("synth.format must be f64, pgm8 or pgm16");
}

MethodConfig parse_method(const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return method_preset(j.get<std::string>());
    } catch (const Error& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
  Fields f(j, where);
  MethodConfig m;
  m.name = f.get<std::string>("name", "");
  require(!m.name.empty(), where + ".name is required");
  const int spatial = f.get("spatial_order", 1);
  const int temporal = f.get("temporal_order", 0);
  const int window = f.get("window", 1);
  CrossTerms cross;
  if (const json* c = f.raw("cross_terms")) {
    require(c->is_array(), where + ".cross_terms must be an array");
    for (const auto& t : *c) {
      require(t.is_string(), where + ".cross_terms entries must be strings");
      const auto s = t.get<std::string>();
      if (s == "xt") {
        cross.xt = true;
      } else if (s == "yt") {
        cross.yt = true;
      } else {
        throw UsageError(where + ".cross_terms accepts only \"xt\" and \"yt\"");
      }
    }
  }
  f.finish();
  try {
    m.spec = ShapeFunctionSpec(spatial, temporal, cross, window);
  } catch (const Error& e) {
    throw UsageError(where + ": " + e.what());
  }
  return m;
}

json method_json(const MethodConfig& m) {
  json cross = json::array();
  if (m.spec.cross_terms().xt) cross.push_back("xt");
  if (m.spec.cross_terms().yt) cross.push_back("yt");
  return {{"name", m.name},
          {"spatial_order", m.spec.spatial_order()},
          {"temporal_order", m.spec.temporal_order()},
          {"cross_terms", cross},
          {"window", m.spec.window()}};
}

}  // namespace

MethodConfig method_preset(const std::string& name) {
  if (name == "spatial") return {name, ShapeFunctionSpec(1, 0, {}, 1)};
  if (name == "st-order-1") return {name, ShapeFunctionSpec(1, 1, {true, true}, 5)};
  if (name == "st-order-2") return {name, ShapeFunctionSpec(1, 2, {}, 5)};
  throw Error(ErrorCode::InvalidArgument, "unknown method preset '" + name + "'");
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Fields top(doc, "");
  c.seed = top.get<std::uint64_t>("seed", c.seed);
  c.threads = top.get("threads", c.threads);
  require(c.threads >= 0, "threads must be >= 0");
  c.input_dir = top.get<std::string>("input_dir", "");

  {
    Fields s = top.child("synth");
    SynthConfig& y = c.synth;
    y.width = s.get("width", y.width);
    y.height = s.get("height", y.height);
    y.base_image = s.get<std::string>("base_image", "");
    {
      Fields sp = s.child("speckle");
      y.speckle.radius = sp.get("radius", y.speckle.radius);
      y.speckle.density = sp.get("density", y.speckle.density);
      sp.finish();
    }
    {
      Fields m = s.child("motion");
      try {
        y.motion.kind = parse_motion(m.get<std::string>("kind", to_string(y.motion.kind)));
      } catch (const Error& e) {
        throw UsageError(std::string("synth.motion.kind: ") + e.what());
      }
      if (y.motion.kind == MotionKind::Vibration) {
        y.motion.frame_count = 200;
        y.motion.frame_interval = 0.01;
      }
      y.motion.frame_count = m.get("frame_count", y.motion.frame_count);
      y.motion.frame_interval = m.get("frame_interval", y.motion.frame_interval);
      y.motion.velocity_u = m.get("velocity_u", y.motion.velocity_u);
      y.motion.velocity_v = m.get("velocity_v", y.motion.velocity_v);
      y.motion.strain_rate_x = m.get("strain_rate_x", y.motion.strain_rate_x);
      y.motion.strain_rate_y = m.get("strain_rate_y", y.motion.strain_rate_y);
      m.finish();
      try {
        y.motion.validate();
      } catch (const Error& e) {
        throw UsageError(std::string("synth.motion: ") + e.what());
      }
    }
    {
      Fields n = s.child("noise");
      y.noise_level = n.get("level", y.noise_level);
      y.quantize_8bit = n.get("quantize_8bit", y.quantize_8bit);
      n.finish();
      require(y.noise_level >= 0.0, "synth.noise.level must be >= 0");
    }
    y.format = parse_format(s.get<std::string>("format", to_string(y.format)));
    s.finish();
    require(y.width >= 64 && y.height >= 64, "synth.width and synth.height must be >= 64");
    require(y.speckle.radius > 0.0 && y.speckle.density >= 0.0, "synth.speckle radius must be > 0, density >= 0");
  }

  {
    Fields a = top.child("analysis");
    AnalysisConfig& y = c.analysis;
    y.subset_size = a.get("subset_size", y.subset_size);
    y.grid_step = a.get("grid_step", y.grid_step);
    if (const json* r = a.raw("roi")) {
      Fields rf(*r, "analysis.roi");
      Roi roi;
      roi.x = rf.get("x", 0);
      roi.y = rf.get("y", 0);
      roi.width = rf.get("width", 0);
      roi.height = rf.get("height", 0);
      rf.finish();
      require(roi.width > 0 && roi.height > 0 && roi.x >= 0 && roi.y >= 0, "analysis.roi must be a positive rectangle");
      y.roi = roi;
    }
    try {
      y.criterion = parse_criterion(a.get<std::string>("criterion", to_string(y.criterion)));
      y.settings.optimizer = parse_optimizer(a.get<std::string>("optimizer", to_string(y.settings.optimizer)));
    } catch (const Error& e) {
      throw UsageError(std::string("analysis: ") + e.what());
    }
    y.settings.max_iterations = a.get("max_iterations", y.settings.max_iterations);
    y.settings.convergence_tol = a.get("convergence_tol", y.settings.convergence_tol);
    y.settings.divergence_guard = a.get("divergence_guard", y.settings.divergence_guard);
    y.search_radius = a.get("search_radius", y.search_radius);
    y.zncc_threshold = a.get("zncc_threshold", y.zncc_threshold);
    y.first_frame = a.get("first_frame", y.first_frame);
    y.last_frame = a.get("last_frame", y.last_frame);
    y.per_frame = a.get("per_frame", y.per_frame);
    a.finish();
    require(y.subset_size >= 5 && y.subset_size % 2 == 1, "analysis.subset_size must be odd and >= 5");
    require(y.grid_step >= 1, "analysis.grid_step must be >= 1");
    require(y.search_radius >= 0, "analysis.search_radius must be >= 0");
    try {
      y.settings.validate();
    } catch (const Error& e) {
      throw UsageError(std::string("analysis: ") + e.what());
    }
  }

  if (const json* m = top.raw("methods")) {
    require(m->is_array(), "methods must be an array");
    for (std::size_t i = 0; i < m->size(); ++i) {
      c.methods.push_back(parse_method((*m)[i], "methods[" + std::to_string(i) + "]"));
    }
  } else {
    c.methods = {method_preset("spatial"), method_preset("st-order-1")};
  }
  require(!c.methods.empty(), "methods must not be empty");
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) require(c.methods[i].name != c.methods[j].name, "duplicate method name");
  }

  {
    Fields mt = top.child("metrics");
    c.metrics.baseline = mt.get<std::string>("baseline", c.metrics.baseline);
    if (const json* t = mt.raw("ratio_t_min")) {
      require(t->is_number(), "metrics.ratio_t_min must be a number");
      c.metrics.ratio_t_min = t->get<double>();
    }
    c.metrics.noise_level = mt.get("noise_level", c.synth.noise_level);
    mt.finish();
  }
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods) methods.push_back(method_json(m));
  json analysis = {
      {"subset_size", c.analysis.subset_size},
      {"grid_step", c.analysis.grid_step},
      {"roi", nullptr},
      {"criterion", to_string(c.analysis.criterion)},
      {"optimizer", to_string(c.analysis.settings.optimizer)},
      {"max_iterations", c.analysis.settings.max_iterations},
      {"convergence_tol", c.analysis.settings.convergence_tol},
      {"divergence_guard", c.analysis.settings.divergence_guard},
      {"search_radius", c.analysis.search_radius},
      {"zncc_threshold", c.analysis.zncc_threshold},
      {"first_frame", c.analysis.first_frame},
      {"last_frame", c.analysis.last_frame},
      {"per_frame", c.analysis.per_frame},
  };
  if (c.analysis.roi) {
    const Roi& r = *c.analysis.roi;
    analysis["roi"] = {{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}};
  }
  json metrics = {{"baseline", c.metrics.baseline}, {"ratio_t_min", nullptr}, {"noise_level", c.metrics.noise_level}};
  if (c.metrics.ratio_t_min) metrics["ratio_t_min"] = *c.metrics.ratio_t_min;
  const MotionProgram& mo = c.synth.motion;
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"input_dir", c.input_dir},
      {"synth",
       {{"width", c.synth.width},
        {"height", c.synth.height},
        {"base_image", c.synth.base_image},
        {"speckle", {{"radius", c.synth.speckle.radius}, {"density", c.synth.speckle.density}}},
        {"motion",
         {{"kind", to_string(mo.kind)},
          {"frame_count", mo.frame_count},
          {"frame_interval", mo.frame_interval},
          {"velocity_u", mo.velocity_u},
          {"velocity_v", mo.velocity_v},
          {"strain_rate_x", mo.strain_rate_x},
          {"strain_rate_y", mo.strain_rate_y}}},
        {"noise", {{"level", c.synth.noise_level}, {"quantize_8bit", c.synth.quantize_8bit}}},
        {"format", to_string(c.synth.format)}}},
      {"analysis", analysis},
      {"methods", methods},
      {"metrics", metrics},
  };
}

AnalysisPlan make_plan(const AnalysisConfig& analysis, const MethodConfig& method, const Roi& roi, int threads) {
  AnalysisPlan plan;
  plan.grid_step = analysis.grid_step;
  plan.subset_half_width = (analysis.subset_size - 1) / 2;
  plan.roi = roi;
  plan.spec = method.spec;
  plan.criterion = analysis.criterion;
  plan.settings = analysis.settings;
  plan.search_radius = analysis.search_radius;
  plan.zncc_threshold = analysis.zncc_threshold;
  plan.threads = threads;
  return plan;
}

}  // namespace stdic::cli
