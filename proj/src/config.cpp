#include "nfield/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nfield/errors.hpp"

namespace nfield {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) bad(prefix + it.key(), "unknown key");
  }
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

Scalar num(const json& obj, const std::string& prefix, const char* key,
           Scalar dflt) {
  const json* v = member(obj, key);
  if (!v) return dflt;
  if (!v->is_number()) bad(prefix + key, "expected a number");
  return v->get<Scalar>();
}

long integer(const json& obj, const std::string& prefix, const char* key,
             long dflt) {
  const json* v = member(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) bad(prefix + key, "expected an integer");
  return v->get<long>();
}

bool boolean(const json& obj, const std::string& prefix, const char* key,
             bool dflt) {
  const json* v = member(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) bad(prefix + key, "expected true or false");
  return v->get<bool>();
}

std::string text(const json& obj, const std::string& prefix, const char* key,
                 const std::string& dflt) {
  const json* v = member(obj, key);
  if (!v) return dflt;
  if (!v->is_string()) bad(prefix + key, "expected a string");
  return v->get<std::string>();
}

// Grids are either explicit arrays or {min, max, count} ranges.
Vector grid_value(const json& v, const std::string& key) {
  if (v.is_array()) {
    if (v.empty()) bad(key, "grid must not be empty");
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (const json& e : v) {
      if (!e.is_number()) bad(key, "grid entries must be numbers");
      out[i++] = e.get<Scalar>();
    }
    return out;
  }
  if (v.is_object()) {
    check_keys(v, key + ".", {"min", "max", "count"});
    if (!v.contains("min") || !v.contains("max") || !v.contains("count")) {
      bad(key, "range grid needs min, max and count");
    }
    const Scalar lo = num(v, key + ".", "min", 0);
    const Scalar hi = num(v, key + ".", "max", 0);
    const long n = integer(v, key + ".", "count", 0);
    if (n < 1) bad(key + ".count", "must be >= 1");
    Vector out(n);
    for (long i = 0; i < n; ++i) {
      out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<Scalar>(i) /
                                      static_cast<Scalar>(n - 1);
    }
    return out;
  }
  bad(key, "expected an array of numbers or {min, max, count}");
}

Vector grid_or(const json& obj, const std::string& prefix, const char* key,
               const Vector& dflt) {
  const json* v = member(obj, key);
  if (!v) return dflt;
  return grid_value(*v, prefix + key);
}

json grid_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void parse_noise(const json& obj, NoiseSpec& noise) {
  check_keys(obj, "noise.", {"variant", "eta", "epsilon", "lambda"});
  const std::string variant = text(obj, "noise.", "variant", "white");
  if (variant == "white") {
    noise.kind = NoiseSpec::Kind::white;
  } else if (variant == "coloured" || variant == "colored") {
    noise.kind = NoiseSpec::Kind::coloured;
  } else {
    bad("noise.variant", "expected \"white\" or \"coloured\"");
  }
  noise.eta = num(obj, "noise.", "eta", noise.eta);
  noise.epsilon = num(obj, "noise.", "epsilon", noise.epsilon);
  noise.lambda = num(obj, "noise.", "lambda", noise.lambda);
}

void parse_window(const json& obj, EstimationWindow& w) {
  check_keys(obj, "window.",
             {"burst_duration", "dt_est", "discard", "lag_fit"});
  w.burst_duration = num(obj, "window.", "burst_duration", w.burst_duration);
  w.dt_est = num(obj, "window.", "dt_est", w.dt_est);
  w.discard = num(obj, "window.", "discard", w.discard);
  w.lag_fit = boolean(obj, "window.", "lag_fit", w.lag_fit);
}

void parse_estimate(const json& obj, EstimateConfig& e) {
  check_keys(obj, "estimate.",
             {"mode", "h_bin", "n_min", "n_bursts", "v_grid"});
  e.mode = text(obj, "estimate.", "mode", e.mode);
  e.h_bin = num(obj, "estimate.", "h_bin", e.h_bin);
  e.n_min = integer(obj, "estimate.", "n_min", e.n_min);
  e.n_bursts = integer(obj, "estimate.", "n_bursts", e.n_bursts);
  e.v_grid = grid_or(obj, "estimate.", "v_grid", e.v_grid);
}

void parse_sweep(const json& obj, SweepSection& s) {
  check_keys(obj, "sweep.",
             {"parameter", "grid", "design_v", "n_bursts", "symmetric_mode",
              "density_extrema"});
  s.parameter = text(obj, "sweep.", "parameter", s.parameter);
  s.grid = grid_or(obj, "sweep.", "grid", s.grid);
  s.design_v = grid_or(obj, "sweep.", "design_v", s.design_v);
  s.n_bursts = integer(obj, "sweep.", "n_bursts", s.n_bursts);
  s.symmetric_mode = boolean(obj, "sweep.", "symmetric_mode", s.symmetric_mode);
  s.density_extrema =
      boolean(obj, "sweep.", "density_extrema", s.density_extrema);
}

void parse_kramers(const json& obj, KramersSection& k) {
  check_keys(obj, "kramers.", {"v_grid", "n_bursts"});
  k.v_grid = grid_or(obj, "kramers.", "v_grid", k.v_grid);
  k.n_bursts = integer(obj, "kramers.", "n_bursts", k.n_bursts);
}

void parse_dmap(const json& obj, DmapSection& d) {
  check_keys(obj, "dmap.",
             {"duration", "sample_interval", "sigma_scale", "sigma_override",
              "k", "max_dense"});
  d.duration = num(obj, "dmap.", "duration", d.duration);
  d.sample_interval = num(obj, "dmap.", "sample_interval", d.sample_interval);
  d.sigma_scale = num(obj, "dmap.", "sigma_scale", d.sigma_scale);
  d.sigma_override = num(obj, "dmap.", "sigma_override", d.sigma_override);
  d.k = static_cast<int>(integer(obj, "dmap.", "k", d.k));
  d.max_dense = integer(obj, "dmap.", "max_dense", d.max_dense);
}

void parse_sa(const json& obj, SAConfig& sa) {
  check_keys(obj, "lift.sa.",
             {"lambda_obj", "t_init", "cooling", "steps_per_epoch",
              "move_scale", "max_epochs", "success_tol"});
  sa.lambda_obj = num(obj, "lift.sa.", "lambda_obj", sa.lambda_obj);
  sa.t_init = num(obj, "lift.sa.", "t_init", sa.t_init);
  sa.cooling = num(obj, "lift.sa.", "cooling", sa.cooling);
  sa.steps_per_epoch = static_cast<int>(
      integer(obj, "lift.sa.", "steps_per_epoch", sa.steps_per_epoch));
  sa.move_scale = num(obj, "lift.sa.", "move_scale", sa.move_scale);
  sa.max_epochs =
      static_cast<int>(integer(obj, "lift.sa.", "max_epochs", sa.max_epochs));
  sa.success_tol = num(obj, "lift.sa.", "success_tol", sa.success_tol);
}

void parse_lift(const json& obj, LiftSection& l) {
  check_keys(obj, "lift.",
             {"target", "model_path", "n_bursts", "database_duration", "h_bin",
              "sa"});
  l.target = num(obj, "lift.", "target", l.target);
  l.model_path = text(obj, "lift.", "model_path", l.model_path);
  l.n_bursts = integer(obj, "lift.", "n_bursts", l.n_bursts);
  l.database_duration =
      num(obj, "lift.", "database_duration", l.database_duration);
  l.h_bin = num(obj, "lift.", "h_bin", l.h_bin);
  if (const json* sa = member(obj, "sa")) {
    if (!sa->is_object()) bad("lift.sa", "expected an object");
    parse_sa(*sa, l.sa);
  }
}

}  // namespace

EstimateConfig::EstimateConfig() {
  v_grid = Vector::LinSpaced(61, -0.3, 0.3);
}

SweepSection::SweepSection() { design_v = SweepConfig().design_v; }

KramersSection::KramersSection() {
  const KramersConfig defaults;
  v_grid = defaults.v_grid;
  n_bursts = defaults.n_bursts;
}

RunConfig RunConfig::from_text(const std::string& content) {
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  check_keys(root, "",
             {"M", "A", "I", "tau", "kernel_arg_mode", "noise", "dt",
              "duration", "sample_interval", "seed", "workers", "out_dir",
              "window", "estimate", "potential", "sweep", "switching",
              "kramers", "dmap", "lift"});

  RunConfig cfg;
  cfg.params.nodes = static_cast<int>(integer(root, "", "M", cfg.params.nodes));
  cfg.params.adaptation_strength =
      num(root, "", "A", cfg.params.adaptation_strength);
  cfg.params.background_current =
      num(root, "", "I", cfg.params.background_current);
  cfg.params.adaptation_tau = num(root, "", "tau", cfg.params.adaptation_tau);
  const std::string mode =
      text(root, "", "kernel_arg_mode", "adaptation_at_source");
  if (mode == "adaptation_at_source") {
    cfg.params.kernel_arg_mode = KernelArgMode::adaptation_at_source;
  } else if (mode == "adaptation_at_target") {
    cfg.params.kernel_arg_mode = KernelArgMode::adaptation_at_target;
  } else {
    bad("kernel_arg_mode",
        "expected \"adaptation_at_source\" or \"adaptation_at_target\"");
  }

  if (const json* noise = member(root, "noise")) {
    if (!noise->is_object()) bad("noise", "expected an object");
    parse_noise(*noise, cfg.noise);
  }

  cfg.sim.dt = num(root, "", "dt", cfg.sim.dt);
  cfg.sim.duration = num(root, "", "duration", cfg.sim.duration);
  cfg.sim.sample_interval =
      num(root, "", "sample_interval", cfg.sim.sample_interval);

  if (const json* v = member(root, "seed")) {
    if (v->is_number_unsigned()) {
      cfg.seed = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<long long>() >= 0) {
      cfg.seed = static_cast<std::uint64_t>(v->get<long long>());
    } else {
      bad("seed", "expected a non-negative integer");
    }
  }
  cfg.workers = static_cast<int>(integer(root, "", "workers", cfg.workers));
  cfg.out_dir = text(root, "", "out_dir", cfg.out_dir);

  if (const json* v = member(root, "window")) {
    if (!v->is_object()) bad("window", "expected an object");
    parse_window(*v, cfg.window);
  }
  if (const json* v = member(root, "estimate")) {
    if (!v->is_object()) bad("estimate", "expected an object");
    parse_estimate(*v, cfg.estimate);
  }
  if (const json* v = member(root, "potential")) {
    if (!v->is_object()) bad("potential", "expected an object");
    check_keys(*v, "potential.", {"bins"});
    cfg.potential.bins =
        static_cast<int>(integer(*v, "potential.", "bins", cfg.potential.bins));
  }
  if (const json* v = member(root, "sweep")) {
    if (!v->is_object()) bad("sweep", "expected an object");
    parse_sweep(*v, cfg.sweep);
  }
  if (const json* v = member(root, "switching")) {
    if (!v->is_object()) bad("switching", "expected an object");
    check_keys(*v, "switching.", {"hysteresis_fraction"});
    cfg.switching.hysteresis_fraction =
        num(*v, "switching.", "hysteresis_fraction",
            cfg.switching.hysteresis_fraction);
  }
  if (const json* v = member(root, "kramers")) {
    if (!v->is_object()) bad("kramers", "expected an object");
    parse_kramers(*v, cfg.kramers);
  }
  if (const json* v = member(root, "dmap")) {
    if (!v->is_object()) bad("dmap", "expected an object");
    parse_dmap(*v, cfg.dmap);
  }
  if (const json* v = member(root, "lift")) {
    if (!v->is_object()) bad("lift", "expected an object");
    parse_lift(*v, cfg.lift);
  }

  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::string RunConfig::to_text() const {
  json root;
  root["M"] = params.nodes;
  root["A"] = params.adaptation_strength;
  root["I"] = params.background_current;
  root["tau"] = params.adaptation_tau;
  root["kernel_arg_mode"] =
      params.kernel_arg_mode == KernelArgMode::adaptation_at_source
          ? "adaptation_at_source"
          : "adaptation_at_target";
  root["noise"] = {
      {"variant",
       noise.kind == NoiseSpec::Kind::white ? "white" : "coloured"},
      {"eta", noise.eta},
      {"epsilon", noise.epsilon},
      {"lambda", noise.lambda}};
  root["dt"] = sim.dt;
  root["duration"] = sim.duration;
  root["sample_interval"] = sim.sample_interval;
  root["seed"] = seed;
  root["workers"] = workers;
  root["out_dir"] = out_dir;
  root["window"] = {{"burst_duration", window.burst_duration},
                    {"dt_est", window.dt_est},
                    {"discard", window.discard},
                    {"lag_fit", window.lag_fit}};
  root["estimate"] = {{"mode", estimate.mode},
                      {"h_bin", estimate.h_bin},
                      {"n_min", estimate.n_min},
                      {"n_bursts", estimate.n_bursts},
                      {"v_grid", grid_to_json(estimate.v_grid)}};
  root["potential"] = {{"bins", potential.bins}};
  root["sweep"] = {{"parameter", sweep.parameter},
                   {"grid", grid_to_json(sweep.grid)},
                   {"design_v", grid_to_json(sweep.design_v)},
                   {"n_bursts", sweep.n_bursts},
                   {"symmetric_mode", sweep.symmetric_mode},
                   {"density_extrema", sweep.density_extrema}};
  root["switching"] = {{"hysteresis_fraction", switching.hysteresis_fraction}};
  root["kramers"] = {{"v_grid", grid_to_json(kramers.v_grid)},
                     {"n_bursts", kramers.n_bursts}};
  root["dmap"] = {{"duration", dmap.duration},
                  {"sample_interval", dmap.sample_interval},
                  {"sigma_scale", dmap.sigma_scale},
                  {"sigma_override", dmap.sigma_override},
                  {"k", dmap.k},
                  {"max_dense", dmap.max_dense}};
  root["lift"] = {{"target", lift.target},
                  {"model_path", lift.model_path},
                  {"n_bursts", lift.n_bursts},
                  {"database_duration", lift.database_duration},
                  {"h_bin", lift.h_bin},
                  {"sa",
                   {{"lambda_obj", lift.sa.lambda_obj},
                    {"t_init", lift.sa.t_init},
                    {"cooling", lift.sa.cooling},
                    {"steps_per_epoch", lift.sa.steps_per_epoch},
                    {"move_scale", lift.sa.move_scale},
                    {"max_epochs", lift.sa.max_epochs},
                    {"success_tol", lift.sa.success_tol}}}};
  return root.dump(2) + "\n";
}

void RunConfig::validate() const {
  params.validate();
  noise.validate();
  sim.validate();
  if (workers < 0) throw ConfigError("workers: must be >= 0");

  if (estimate.mode != "database" && estimate.mode != "burst") {
    throw ConfigError("estimate.mode: expected \"database\" or \"burst\"");
  }
  if (!(estimate.h_bin > 0)) throw ConfigError("estimate.h_bin: must be > 0");
  if (estimate.n_min < 2) throw ConfigError("estimate.n_min: must be >= 2");
  if (estimate.n_bursts < 2) {
    throw ConfigError("estimate.n_bursts: must be >= 2");
  }
  window.validate();
  if (potential.bins < 2) throw ConfigError("potential.bins: must be >= 2");

  if (sweep.parameter != "A" && sweep.parameter != "eta" &&
      sweep.parameter != "lambda") {
    throw ConfigError("sweep.parameter: expected \"A\", \"eta\" or \"lambda\"");
  }
  if (sweep.design_v.size() < 2) {
    throw ConfigError("sweep.design_v: need at least 2 points");
  }
  if (sweep.n_bursts < 2) throw ConfigError("sweep.n_bursts: must be >= 2");

  if (!(switching.hysteresis_fraction > 0 &&
        switching.hysteresis_fraction <= 1)) {
    throw ConfigError("switching.hysteresis_fraction: must be in (0, 1]");
  }
  if (kramers.v_grid.size() < 11) {
    throw ConfigError("kramers.v_grid: need at least 11 points");
  }
  if (kramers.n_bursts < 2) throw ConfigError("kramers.n_bursts: must be >= 2");

  if (!(dmap.duration > 0)) throw ConfigError("dmap.duration: must be > 0");
  if (!(dmap.sample_interval > 0)) {
    throw ConfigError("dmap.sample_interval: must be > 0");
  }
  if (dmap.k < 2) throw ConfigError("dmap.k: must be >= 2");
  if (dmap.max_dense < 10) throw ConfigError("dmap.max_dense: must be >= 10");
  if (!(dmap.sigma_override > 0) && !(dmap.sigma_scale > 0)) {
    throw ConfigError("dmap.sigma_scale: must be > 0 without an override");
  }

  lift.sa.validate();
  if (!(lift.h_bin > 0)) throw ConfigError("lift.h_bin: must be > 0");
  if (lift.n_bursts < 0) throw ConfigError("lift.n_bursts: must be >= 0");
  if (lift.database_duration < 0) {
    throw ConfigError("lift.database_duration: must be >= 0");
  }
}

SweepConfig RunConfig::sweep_config() const {
  SweepConfig sc;
  sc.design_v = sweep.design_v;
  sc.n_bursts = sweep.n_bursts;
  sc.symmetric_mode = sweep.symmetric_mode;
  sc.density_extrema = sweep.density_extrema;
  sc.window = window;
  sc.seed = seed;
  sc.workers = workers;
  sc.dt = sim.dt;
  return sc;
}

KramersConfig RunConfig::kramers_config() const {
  KramersConfig kc;
  kc.v_grid = kramers.v_grid;
  kc.n_bursts = kramers.n_bursts;
  kc.window = window;
  kc.seed = seed;
  kc.workers = workers;
  kc.dt = sim.dt;
  return kc;
}

BuildOptions RunConfig::dmap_options() const {
  BuildOptions opts;
  opts.sigma_scale = dmap.sigma_scale;
  opts.sigma_override = dmap.sigma_override;
  opts.k = dmap.k;
  opts.max_dense = dmap.max_dense;
  return opts;
}

}  // namespace nfield
