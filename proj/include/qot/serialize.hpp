#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qot/core.hpp"
#include "qot/errors.hpp"
#include "qot/experiments.hpp"
#include "qot/solvers.hpp"
#include "qot/synthetic.hpp"
#include "qot/version.hpp"

namespace qot {

using json = nlohmann::json;

/// Shortest round-trip decimal form; locale independent.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Write-then-rename so readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InvalidInput("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InvalidInput(what + ": malformed JSON");
  return j;
}

/// Versioned strict schema: unknown fields are rejected so config typos
/// cannot silently change an experiment.
inline void check_schema(const json& j, const std::set<std::string>& allowed,
                         const std::set<std::string>& required,
                         const std::string& what) {
  if (!j.is_object()) throw InvalidInput(what + ": expected a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw InvalidInput(what + ": unknown field '" + item.key() + "'");
  for (const auto& key : required)
    if (!j.contains(key))
      throw InvalidInput(what + ": missing field '" + key + "'");
  if (j.at("schema_version").get<int>() != 1)
    throw InvalidInput(what + ": unsupported schema_version");
}

}  // namespace detail

inline json instance_to_json(const EmpiricalInstance& inst) {
  json j;
  j["schema_version"] = 1;
  j["d"] = inst.benchmark.d;
  j["base"] = inst.benchmark.base;
  j["covariance"] = to_string(inst.benchmark.cov_model);
  j["seed"] = inst.seed;
  j["N"] = inst.n();
  j["M"] = inst.m();
  j["p_pair"] = inst.p_pair;
  j["paired_count"] = inst.paired_count;
  j["scale"] = inst.benchmark.scale;
  std::vector<double> xs(inst.X.data(), inst.X.data() + inst.X.size());
  std::vector<double> ys(inst.Y.data(), inst.Y.data() + inst.Y.size());
  j["X"] = xs;
  j["Y"] = ys;
  return j;
}

inline EmpiricalInstance instance_from_json(const json& j) {
  detail::check_schema(
      j,
      {"schema_version", "d", "base", "covariance", "seed", "N", "M",
       "p_pair", "paired_count", "scale", "X", "Y"},
      {"schema_version", "d", "base", "covariance", "seed", "N", "M",
       "p_pair", "paired_count", "scale", "X", "Y"},
      "instance");
  const int d = j.at("d").get<int>();
  const double base = j.at("base").get<double>();
  const auto model = covariance_from_string(j.at("covariance").get<std::string>());
  EmpiricalInstance inst;
  inst.benchmark = make_affine_family(d, base, model);
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.p_pair = j.at("p_pair").get<double>();
  inst.paired_count = j.at("paired_count").get<Index>();
  const Index n = j.at("N").get<Index>();
  const Index m = j.at("M").get<Index>();
  const auto xs = j.at("X").get<std::vector<double>>();
  const auto ys = j.at("Y").get<std::vector<double>>();
  if (static_cast<Index>(xs.size()) != n * d ||
      static_cast<Index>(ys.size()) != m * d)
    throw InvalidInput("instance: point array size does not match N, M, d");
  inst.X = Eigen::Map<const RowMatrix>(xs.data(), n, d);
  inst.Y = Eigen::Map<const RowMatrix>(ys.data(), m, d);
  inst.a = Vector::Constant(n, 1.0 / static_cast<double>(n));
  inst.b = Vector::Constant(m, 1.0 / static_cast<double>(m));
  return inst;
}

/// Sparse plan as CSV triples, row-major, header included.
inline std::string plan_to_csv(const CouplingPlan& plan) {
  std::string out = "i,j,mass\n";
  for (const auto& e : plan.entries) {
    out += std::to_string(e.i);
    out += ',';
    out += std::to_string(e.j);
    out += ',';
    out += format_double(e.mass);
    out += '\n';
  }
  return out;
}

inline json potentials_to_json(const DualPotentials& pot) {
  json j;
  j["schema_version"] = 1;
  j["f"] = std::vector<double>(pot.f.data(), pot.f.data() + pot.f.size());
  j["g"] = std::vector<double>(pot.g.data(), pot.g.data() + pot.g.size());
  return j;
}

struct GenerateConfig {
  std::vector<int> dims;
  std::vector<std::uint64_t> seeds;
  Index n_source = 0;
  Index n_target = 0;
  double base = 1.00005;
  CovarianceModel cov_model = CovarianceModel::paper;
  std::optional<double> p_pair;
};

inline GenerateConfig generate_config_from_json(const json& j) {
  detail::check_schema(
      j,
      {"schema_version", "dims", "seeds", "N", "M", "base", "covariance",
       "p_pair"},
      {"schema_version", "dims", "seeds", "N", "M"}, "generate config");
  GenerateConfig cfg;
  cfg.dims = j.at("dims").get<std::vector<int>>();
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.n_source = j.at("N").get<Index>();
  cfg.n_target = j.at("M").get<Index>();
  if (j.contains("base")) cfg.base = j.at("base").get<double>();
  if (j.contains("covariance"))
    cfg.cov_model = covariance_from_string(j.at("covariance").get<std::string>());
  if (j.contains("p_pair") && !j.at("p_pair").is_null())
    cfg.p_pair = j.at("p_pair").get<double>();
  if (cfg.dims.empty()) throw InvalidInput("generate config: dims is empty");
  if (cfg.seeds.empty()) throw InvalidInput("generate config: seeds is empty");
  return cfg;
}

inline ScalingConfig scaling_config_from_json(const json& j) {
  detail::check_schema(
      j,
      {"schema_version", "dims", "seeds", "N", "M", "base", "covariance",
       "relative_eps_grid", "init_tol", "tau", "solver", "p_pair",
       "warm_start", "max_sweeps", "max_newton_iters"},
      {"schema_version", "dims", "seeds", "N", "M"}, "scaling config");
  ScalingConfig cfg;
  cfg.dims = j.at("dims").get<std::vector<int>>();
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.n_source = j.at("N").get<Index>();
  cfg.n_target = j.at("M").get<Index>();
  cfg.relative_eps_grid = paper_relative_grid();
  cfg.cov_model = CovarianceModel::paper;
  if (j.contains("base")) cfg.base = j.at("base").get<double>();
  if (j.contains("covariance"))
    cfg.cov_model = covariance_from_string(j.at("covariance").get<std::string>());
  if (j.contains("relative_eps_grid"))
    cfg.relative_eps_grid = j.at("relative_eps_grid").get<std::vector<double>>();
  if (j.contains("init_tol")) cfg.init_tol = j.at("init_tol").get<double>();
  if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
  if (j.contains("solver"))
    cfg.solver = solver_from_string(j.at("solver").get<std::string>());
  if (j.contains("p_pair") && !j.at("p_pair").is_null())
    cfg.p_pair = j.at("p_pair").get<double>();
  if (j.contains("warm_start")) cfg.warm_start = j.at("warm_start").get<bool>();
  if (j.contains("max_sweeps")) cfg.max_sweeps = j.at("max_sweeps").get<Index>();
  if (j.contains("max_newton_iters"))
    cfg.max_newton_iters = j.at("max_newton_iters").get<Index>();
  return cfg;
}

inline json scaling_config_to_json(const ScalingConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["dims"] = cfg.dims;
  j["seeds"] = cfg.seeds;
  j["N"] = cfg.n_source;
  j["M"] = cfg.n_target;
  j["base"] = cfg.base;
  j["covariance"] = to_string(cfg.cov_model);
  j["relative_eps_grid"] = cfg.relative_eps_grid;
  j["init_tol"] = cfg.init_tol;
  j["tau"] = cfg.tau;
  j["solver"] = to_string(cfg.solver);
  if (cfg.p_pair)
    j["p_pair"] = *cfg.p_pair;
  else
    j["p_pair"] = nullptr;
  j["warm_start"] = cfg.warm_start;
  j["max_sweeps"] = cfg.max_sweeps;
  j["max_newton_iters"] = cfg.max_newton_iters;
  return j;
}

/// Per-run results; a pure function of the config (wall times live in the
/// metadata record instead).
inline std::string runs_to_csv(const ScalingReport& report) {
  std::string out = "d,seed,solver,eps,bias,converged,iters\n";
  for (const auto& r : report.runs) {
    out += std::to_string(r.d);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += to_string(r.solver);
    out += ',';
    out += format_double(r.eps);
    out += ',';
    out += format_double(r.bias);
    out += ',';
    out += r.converged ? "true" : "false";
    out += ',';
    out += std::to_string(r.iters);
    out += '\n';
  }
  return out;
}

inline std::string summary_to_csv(const ScalingReport& report) {
  std::string out = "d,beta_mean,beta_std,rel_err\n";
  for (const auto& s : report.dim_summaries) {
    out += std::to_string(s.d);
    out += ',';
    if (s.ok) {
      out += format_double(s.beta_mean);
      out += ',';
      out += format_double(s.beta_std);
      out += ',';
      out += format_double(s.rel_err);
    } else {
      out += "nan,nan,nan";
    }
    out += '\n';
  }
  return out;
}

inline json report_metadata(const ScalingReport& report) {
  json j;
  j["schema_version"] = 1;
  j["version"] = QOT_VERSION;
  j["config"] = scaling_config_to_json(report.config);
  j["jobs"] = report.config.jobs;
  j["total_wall_time_s"] = report.total_wall_time_s;
  json fits = json::array();
  for (const auto& f : report.seed_fits) {
    json jf;
    jf["d"] = f.d;
    jf["seed"] = f.seed;
    jf["ok"] = f.ok;
    if (f.ok) {
      jf["alpha"] = f.alpha;
      jf["beta"] = f.beta;
      jf["points_used"] = f.points_used;
    } else {
      jf["error"] = f.error;
    }
    fits.push_back(jf);
  }
  j["seed_fits"] = fits;
  json walls = json::array();
  for (const auto& r : report.runs) walls.push_back(r.wall_time_s);
  j["run_wall_times_s"] = walls;
  return j;
}

}  // namespace qot
