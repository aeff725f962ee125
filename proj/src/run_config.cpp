#include "krigcv/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>

namespace krigcv {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void RunConfig::validate() const {
  try {
    truth.validate();
    box.validate();
    optimizer.validate();
    if (!(model_nu > 0)) throw ConfigError("model_nu must be positive");
    if (specifications.empty()) throw ConfigError("at least one specification is required");
    std::set<std::string> labels;
    for (const auto& s : specifications) {
      if (s.label.empty() || s.label.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("specification label must be non-empty without commas or quotes");
      if (!labels.insert(s.label).second)
        throw ConfigError("duplicate specification label '" + s.label + "'");
      if (!(s.model_delta >= kDefaultNuggetFloor))
        throw ConfigError("specification '" + s.label + "': model_delta below nugget floor " +
                          std::to_string(kDefaultNuggetFloor));
    }
    if (sizes.empty()) throw ConfigError("at least one sample size is required");
    for (const auto& s : sizes)
      if (s.n < 2 || s.n_reps < 1) throw ConfigError("sizes need n >= 2 and n_reps >= 1");
    if (d < 1) throw ConfigError("d must be >= 1");
    if (quad_m < 1) throw ConfigError("quadrature.m must be >= 1");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    if (histogram_bins < 1) throw ConfigError("histogram_bins must be >= 1");
    for (const auto& f : formats)
      if (f != "csv" && f != "json") throw ConfigError("unknown output format '" + f + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Scenario RunConfig::scenario(const Specification& spec, const SampleSize& size) const {
  Scenario s;
  s.label = spec.label;
  s.truth = truth;
  s.model_nu = model_nu;
  s.model_delta = spec.model_delta;
  s.box = box;
  s.n = size.n;
  s.d = d;
  s.n_reps = size.n_reps;
  s.quad_m = quad_m;
  s.quad_origin = quad_origin;
  s.master_seed = master_seed;
  s.optimizer = optimizer;
  return s;
}

const Specification& RunConfig::specification(const std::string& label) const {
  const auto it = std::find_if(specifications.begin(), specifications.end(),
                               [&](const Specification& s) { return s.label == label; });
  if (it == specifications.end()) throw ConfigError("no specification labelled '" + label + "'");
  return *it;
}

int RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

json to_json(const RunConfig& cfg) {
  json specs = json::array();
  for (const auto& s : cfg.specifications)
    specs.push_back({{"label", s.label}, {"model_delta", s.model_delta}});
  json sizes = json::array();
  for (const auto& s : cfg.sizes) sizes.push_back({{"n", s.n}, {"n_reps", s.n_reps}});
  return {
      {"truth",
       {{"sigma2", cfg.truth.cov.sigma2},
        {"ell", cfg.truth.cov.ell},
        {"nu", cfg.truth.cov.nu},
        {"delta", cfg.truth.cov.delta}}},
      {"model_nu", cfg.model_nu},
      {"specifications", specs},
      {"box", {{"sigma2", interval_json(cfg.box.sigma2)}, {"ell", interval_json(cfg.box.ell)}}},
      {"sizes", sizes},
      {"d", cfg.d},
      {"quadrature", {{"m", cfg.quad_m}, {"origin", std::string(to_string(cfg.quad_origin))}}},
      {"optimizer",
       {{"grid_sigma2", cfg.optimizer.grid_sigma2},
        {"grid_ell", cfg.optimizer.grid_ell},
        {"starts", cfg.optimizer.starts},
        {"rel_tol", cfg.optimizer.rel_tol},
        {"max_evals_per_start", cfg.optimizer.max_evals_per_start}}},
      {"master_seed", cfg.master_seed},
      {"output", {{"dir", cfg.out_dir}, {"formats", cfg.formats}}},
      {"workers", cfg.workers},
      {"histogram_bins", cfg.histogram_bins},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  check_keys(j, "config",
             {"truth", "model_nu", "specifications", "box", "sizes", "d", "quadrature",
              "optimizer", "master_seed", "output", "workers", "histogram_bins"});
  if (j.contains("truth")) {
    const json& t = j["truth"];
    check_keys(t, "truth", {"sigma2", "ell", "nu", "delta"});
    read(t, "sigma2", cfg.truth.cov.sigma2, "truth");
    read(t, "ell", cfg.truth.cov.ell, "truth");
    read(t, "nu", cfg.truth.cov.nu, "truth");
    read(t, "delta", cfg.truth.cov.delta, "truth");
  }
  read(j, "model_nu", cfg.model_nu, "config");
  if (j.contains("specifications")) {
    if (!j["specifications"].is_array()) throw ConfigError("specifications: expected an array");
    cfg.specifications.clear();
    for (const auto& s : j["specifications"]) {
      check_keys(s, "specifications[]", {"label", "model_delta"});
      Specification spec;
      read(s, "label", spec.label, "specifications[]");
      read(s, "model_delta", spec.model_delta, "specifications[]");
      cfg.specifications.push_back(spec);
    }
  }
  if (j.contains("box")) {
    const json& b = j["box"];
    check_keys(b, "box", {"sigma2", "ell"});
    if (b.contains("sigma2")) cfg.box.sigma2 = interval_from(b["sigma2"], "box.sigma2");
    if (b.contains("ell")) cfg.box.ell = interval_from(b["ell"], "box.ell");
  }
  if (j.contains("sizes")) {
    if (!j["sizes"].is_array()) throw ConfigError("sizes: expected an array");
    cfg.sizes.clear();
    for (const auto& s : j["sizes"]) {
      check_keys(s, "sizes[]", {"n", "n_reps"});
      SampleSize size;
      read(s, "n", size.n, "sizes[]");
      read(s, "n_reps", size.n_reps, "sizes[]");
      cfg.sizes.push_back(size);
    }
  }
  read(j, "d", cfg.d, "config");
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    check_keys(q, "quadrature", {"m", "origin"});
    read(q, "m", cfg.quad_m, "quadrature");
    if (q.contains("origin")) {
      try {
        cfg.quad_origin = parse_quadrature_origin(q["origin"].get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("quadrature.origin: ") + e.what());
      }
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    check_keys(o, "optimizer",
               {"grid_sigma2", "grid_ell", "starts", "rel_tol", "max_evals_per_start"});
    read(o, "grid_sigma2", cfg.optimizer.grid_sigma2, "optimizer");
    read(o, "grid_ell", cfg.optimizer.grid_ell, "optimizer");
    read(o, "starts", cfg.optimizer.starts, "optimizer");
    read(o, "rel_tol", cfg.optimizer.rel_tol, "optimizer");
    read(o, "max_evals_per_start", cfg.optimizer.max_evals_per_start, "optimizer");
  }
  read(j, "master_seed", cfg.master_seed, "config");
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"dir", "formats"});
    read(o, "dir", cfg.out_dir, "output");
    read(o, "formats", cfg.formats, "output");
  }
  read(j, "workers", cfg.workers, "config");
  read(j, "histogram_bins", cfg.histogram_bins, "config");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file " + path.string());
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw std::runtime_error("error writing config file " + path.string());
}

}  // namespace krigcv
