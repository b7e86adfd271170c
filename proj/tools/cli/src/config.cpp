#include "sparke_cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace sparke::cli {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed`; `where` names the section in messages.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (obj.contains(key) && !obj.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return get<double>(obj, key, fallback, where);
}

std::int64_t get_int(const json& obj, const char* key, std::int64_t fallback, const std::string& where) {
  if (obj.contains(key) && !obj.at(key).is_number_integer()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return get<std::int64_t>(obj, key, fallback, where);
}

std::uint64_t get_u64(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Vector to_vector(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(where + ": expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError(where + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

std::vector<Vector> to_vectors(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(to_vector(arr[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json from_vector(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json from_vectors(const std::vector<Vector>& vs) {
  json arr = json::array();
  for (const auto& v : vs) arr.push_back(from_vector(v));
  return arr;
}

KernelSpec parse_kernel(const json& obj, KernelSpec fallback, const std::string& where) {
  if (obj.is_null()) return fallback;
  check_keys(obj, {"kind", "bandwidth"}, where);
  KernelSpec spec = fallback;
  if (obj.contains("kind")) {
    try {
      spec.kind = parse_kernel_kind(get<std::string>(obj, "kind", "", where));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  spec.bandwidth = get_number(obj, "bandwidth", spec.bandwidth, where);
  return spec;
}

json kernel_json(const KernelSpec& k) {
  return {{"kind", std::string(to_string(k.kind))}, {"bandwidth", k.bandwidth}};
}

json resolve_schedule(const json& in) {
  const std::string where = "schedule";
  const json obj = in.is_null() ? json::object() : in;
  check_keys(obj, {"kind", "train_steps", "beta_start", "beta_end", "steps", "eta_ddim"}, where);
  if (get<std::string>(obj, "kind", "linear_beta", where) != "linear_beta") {
    throw ConfigError("schedule.kind: only 'linear_beta' is supported");
  }
  return {{"kind", "linear_beta"},
          {"train_steps", get_int(obj, "train_steps", 1000, where)},
          {"beta_start", get_number(obj, "beta_start", 1e-4, where)},
          {"beta_end", get_number(obj, "beta_end", 0.02, where)},
          {"steps", get_int(obj, "steps", 50, where)},
          {"eta_ddim", get_number(obj, "eta_ddim", 0.0, where)}};
}

NoiseSchedule build_schedule(const json& s) {
  return NoiseSchedule::linear_beta(s["train_steps"].get<int>(), s["beta_start"].get<double>(),
                                    s["beta_end"].get<double>(), s["steps"].get<int>(),
                                    s["eta_ddim"].get<double>());
}

json resolve_gmm(const json& in) {
  const std::string where = "gmm";
  const json obj = in.is_null() ? json::object() : in;
  const std::string kind = obj.is_object() ? get<std::string>(obj, "kind", "grid", where) : "";
  if (kind == "grid") {
    check_keys(obj, {"kind", "grid_size", "spacing", "std"}, where);
    return {{"kind", "grid"},
            {"grid_size", get_int(obj, "grid_size", 5, where)},
            {"spacing", get_number(obj, "spacing", 2.0, where)},
            {"std", get_number(obj, "std", 0.05, where)}};
  }
  if (kind == "custom") {
    check_keys(obj, {"kind", "components", "conditions"}, where);
    json out = {{"kind", "custom"}, {"components", json::array()}, {"conditions", json::array()}};
    if (!obj.contains("components") || !obj["components"].is_array()) {
      throw ConfigError("gmm.components: required array");
    }
    for (const auto& c : obj["components"]) {
      check_keys(c, {"mean", "std", "weight"}, "gmm.components[]");
      out["components"].push_back({{"mean", from_vector(to_vector(c.value("mean", json()), "gmm.components[].mean"))},
                                   {"std", get_number(c, "std", 1.0, "gmm.components[]")},
                                   {"weight", get_number(c, "weight", 1.0, "gmm.components[]")}});
    }
    for (const auto& c : obj.value("conditions", json::array())) {
      check_keys(c, {"vector", "components"}, "gmm.conditions[]");
      out["conditions"].push_back(
          {{"vector", from_vector(to_vector(c.value("vector", json()), "gmm.conditions[].vector"))},
           {"components", get<std::vector<std::size_t>>(c, "components", {}, "gmm.conditions[]")}});
    }
    return out;
  }
  throw ConfigError("gmm.kind: expected 'grid' or 'custom'");
}

GmmSpec build_gmm(const json& g) {
  if (g["kind"] == "grid") {
    return GmmSpec::grid(g["grid_size"].get<int>(), g["spacing"].get<double>(), g["std"].get<double>());
  }
  std::vector<GmmComponent> comps;
  for (const auto& c : g["components"]) {
    comps.push_back({to_vector(c["mean"], "gmm"), c["std"].get<double>(), c["weight"].get<double>()});
  }
  std::vector<GmmCondition> conds;
  for (const auto& c : g["conditions"]) {
    conds.push_back({to_vector(c["vector"], "gmm"), c["components"].get<std::vector<std::size_t>>()});
  }
  return GmmSpec(std::move(comps), std::move(conds));
}

GuidanceConfig parse_guidance(const json& in) {
  const std::string where = "guidance";
  const json obj = in.is_null() ? json::object() : in;
  check_keys(obj, {"mode", "eta", "frequency", "kernel_z", "kernel_y", "window", "max_grad_norm", "scale",
                   "chain_factor"},
             where);
  GuidanceConfig g;
  try {
    g.mode = parse_guidance_mode(get<std::string>(obj, "mode", std::string(to_string(g.mode)), where));
    g.scale = parse_gradient_scale(get<std::string>(obj, "scale", std::string(to_string(g.scale)), where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  g.eta = get_number(obj, "eta", g.eta, where);
  g.frequency = static_cast<int>(get_int(obj, "frequency", g.frequency, where));
  g.kernel_z = parse_kernel(obj.value("kernel_z", json()), g.kernel_z, where + ".kernel_z");
  g.kernel_y = parse_kernel(obj.value("kernel_y", json()), g.kernel_y, where + ".kernel_y");
  if (obj.contains("window") && !obj["window"].is_null()) {
    const auto w = get_int(obj, "window", 0, where);
    if (w <= 0) throw ConfigError("guidance.window: must be a positive integer or null");
    g.window = static_cast<std::size_t>(w);
  }
  g.max_grad_norm = get_number(obj, "max_grad_norm", g.max_grad_norm, where);
  g.chain_factor = get<bool>(obj, "chain_factor", g.chain_factor, where);
  return g;
}

json guidance_json(const GuidanceConfig& g) {
  return {{"mode", std::string(to_string(g.mode))},
          {"eta", g.eta},
          {"frequency", g.frequency},
          {"kernel_z", kernel_json(g.kernel_z)},
          {"kernel_y", kernel_json(g.kernel_y)},
          {"window", g.window ? json(*g.window) : json(nullptr)},
          {"max_grad_norm", g.max_grad_norm},
          {"scale", std::string(to_string(g.scale))},
          {"chain_factor", g.chain_factor}};
}

std::vector<std::size_t> parse_sizes(const json& obj, const char* key, std::vector<std::size_t> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto sizes = get<std::vector<std::size_t>>(obj, key, {}, "bench");
  if (sizes.empty()) throw ConfigError(std::string("bench.") + key + ": must be nonempty");
  return sizes;
}

BenchSuite parse_bench(const json& in) {
  const std::string where = "bench";
  const json obj = in.is_null() ? json::object() : in;
  check_keys(obj, {"methods", "vendi_sizes", "rke_sizes", "gradient_sizes", "dim", "trials", "seed", "eigen_cap",
                   "bandwidth", "min_trial_seconds", "pipeline_history", "pipeline_samples"},
             where);
  BenchSuite b;
  if (obj.contains("methods")) {
    b.methods.clear();
    for (const auto& name : get<std::vector<std::string>>(obj, "methods", {}, where)) {
      try {
        b.methods.push_back(bench::parse_method(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bench.methods: ") + e.what());
      }
    }
  }
  b.vendi_sizes = parse_sizes(obj, "vendi_sizes", b.vendi_sizes);
  b.rke_sizes = parse_sizes(obj, "rke_sizes", b.rke_sizes);
  b.gradient_sizes = parse_sizes(obj, "gradient_sizes", b.gradient_sizes);
  b.options.dim = static_cast<std::size_t>(get_int(obj, "dim", static_cast<std::int64_t>(b.options.dim), where));
  b.options.trials = static_cast<int>(get_int(obj, "trials", b.options.trials, where));
  b.options.seed = get_u64(obj, "seed", b.options.seed, where);
  b.options.eigen_cap =
      static_cast<std::size_t>(get_int(obj, "eigen_cap", static_cast<std::int64_t>(b.options.eigen_cap), where));
  b.options.bandwidth = get_number(obj, "bandwidth", b.options.bandwidth, where);
  b.options.min_trial_seconds = get_number(obj, "min_trial_seconds", b.options.min_trial_seconds, where);
  b.pipeline_history = static_cast<std::size_t>(
      get_int(obj, "pipeline_history", static_cast<std::int64_t>(b.pipeline_history), where));
  b.pipeline_samples = static_cast<int>(get_int(obj, "pipeline_samples", b.pipeline_samples, where));
  if (b.options.trials < 3) throw ConfigError("bench.trials: must be >= 3");
  if (b.options.dim == 0) throw ConfigError("bench.dim: must be >= 1");
  if (b.pipeline_samples < 1) throw ConfigError("bench.pipeline_samples: must be >= 1");
  return b;
}

json bench_json(const BenchSuite& b) {
  json methods = json::array();
  for (const auto m : b.methods) methods.push_back(std::string(bench::to_string(m)));
  return {{"methods", methods},
          {"vendi_sizes", b.vendi_sizes},
          {"rke_sizes", b.rke_sizes},
          {"gradient_sizes", b.gradient_sizes},
          {"dim", b.options.dim},
          {"trials", b.options.trials},
          {"seed", b.options.seed},
          {"eigen_cap", b.options.eigen_cap},
          {"bandwidth", b.options.bandwidth},
          {"min_trial_seconds", b.options.min_trial_seconds},
          {"pipeline_history", b.pipeline_history},
          {"pipeline_samples", b.pipeline_samples}};
}

SweepAxes parse_sweep(const json& in) {
  const std::string where = "sweep";
  SweepAxes s;
  if (in.is_null()) return s;
  check_keys(in, {"eta", "cfg_scale", "kernel", "mode"}, where);
  s.eta = get<std::vector<double>>(in, "eta", {}, where);
  s.cfg_scale = get<std::vector<double>>(in, "cfg_scale", {}, where);
  try {
    for (const auto& k : get<std::vector<std::string>>(in, "kernel", {}, where)) s.kernel.push_back(parse_kernel_kind(k));
    for (const auto& m : get<std::vector<std::string>>(in, "mode", {}, where)) s.mode.push_back(parse_guidance_mode(m));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

json sweep_json(const SweepAxes& s) {
  json kernels = json::array(), modes = json::array();
  for (const auto k : s.kernel) kernels.push_back(std::string(to_string(k)));
  for (const auto m : s.mode) modes.push_back(std::string(to_string(m)));
  return {{"eta", s.eta}, {"cfg_scale", s.cfg_scale}, {"kernel", kernels}, {"mode", modes}};
}

void validate(const ExperimentConfig& cfg) {
  try {
    cfg.run.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.radius_mult > 0.0)) throw ConfigError("metrics.radius_mult: must be > 0");
  if (cfg.output_dir.empty()) throw ConfigError("output.dir: must be nonempty");
}

}  // namespace

const std::vector<std::size_t>& BenchSuite::sizes_for(bench::Method m) const {
  switch (m) {
    case bench::Method::vendi_eigen:
      return vendi_sizes;
    case bench::Method::rke_frobenius:
      return rke_sizes;
    default:
      return gradient_sizes;
  }
}

ExperimentConfig parse_config(const json& doc) {
  const json root = doc.is_null() ? json::object() : doc;
  check_keys(root, {"seed", "samples_per_prompt", "cfg_scale", "prompts", "schedule", "gmm", "guidance", "reference",
                    "metrics", "output", "bench", "sweep"},
             "config");
  ExperimentConfig cfg;
  try {
    cfg.schedule_echo = resolve_schedule(root.value("schedule", json()));
    cfg.gmm_echo = resolve_gmm(root.value("gmm", json()));
    cfg.run.sched = build_schedule(cfg.schedule_echo);
    cfg.run.gmm = build_gmm(cfg.gmm_echo);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.run.seed = get_u64(root, "seed", 0, "config");
  cfg.run.samples_per_prompt = static_cast<int>(get_int(root, "samples_per_prompt", 100, "config"));
  cfg.run.cfg_scale = get_number(root, "cfg_scale", 7.5, "config");
  cfg.run.guidance = parse_guidance(root.value("guidance", json()));

  const json prompts = root.value("prompts", json("all"));
  if (prompts == json("all")) {
    for (const auto& c : cfg.run.gmm.conditions()) cfg.run.prompts.push_back(c.vector);
  } else {
    cfg.run.prompts = to_vectors(prompts, "prompts");
  }

  if (root.contains("reference")) {
    const auto& ref = root["reference"];
    check_keys(ref, {"points", "conditions"}, "reference");
    cfg.run.reference_points = to_vectors(ref.value("points", json::array()), "reference.points");
    cfg.run.reference_conditions = to_vectors(ref.value("conditions", json::array()), "reference.conditions");
  }
  if (root.contains("metrics")) {
    check_keys(root["metrics"], {"radius_mult"}, "metrics");
    cfg.radius_mult = get_number(root["metrics"], "radius_mult", cfg.radius_mult, "metrics");
  }
  if (root.contains("output")) {
    check_keys(root["output"], {"dir"}, "output");
    cfg.output_dir = get<std::string>(root["output"], "dir", cfg.output_dir, "output");
  }
  cfg.bench = parse_bench(root.value("bench", json()));
  cfg.sweep = parse_sweep(root.value("sweep", json()));
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::optional<std::string>& path) {
  if (!path) return parse_config(json::object());
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot read config file '" + *path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
  if (ov.seed) cfg.run.seed = *ov.seed;
  if (ov.kernel) cfg.run.guidance.kernel_z.kind = *ov.kernel;
  if (ov.bandwidth) cfg.run.guidance.kernel_z.bandwidth = *ov.bandwidth;
  if (ov.eta) cfg.run.guidance.eta = *ov.eta;
  if (ov.mode) cfg.run.guidance.mode = *ov.mode;
  if (ov.out) {
    cfg.output_dir = *ov.out;
  } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
    cfg.output_dir = env;
  }
  validate(cfg);
}

json to_json(const ExperimentConfig& cfg) {
  const auto& r = cfg.run;
  return {{"seed", r.seed},
          {"samples_per_prompt", r.samples_per_prompt},
          {"cfg_scale", r.cfg_scale},
          {"prompts", from_vectors(r.prompts)},
          {"schedule", cfg.schedule_echo},
          {"gmm", cfg.gmm_echo},
          {"guidance", guidance_json(r.guidance)},
          {"reference", {{"points", from_vectors(r.reference_points)}, {"conditions", from_vectors(r.reference_conditions)}}},
          {"metrics", {{"radius_mult", cfg.radius_mult}}},
          {"output", {{"dir", cfg.output_dir}}},
          {"bench", bench_json(cfg.bench)},
          {"sweep", sweep_json(cfg.sweep)}};
}

}  // namespace sparke::cli
