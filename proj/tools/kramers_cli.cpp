#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "kramers/config.hpp"
#include "kramers/errors.hpp"
#include "kramers/integrators.hpp"
#include "kramers/lyapunov.hpp"
#include "kramers/lyapunov_check.hpp"
#include "kramers/models.hpp"
#include "kramers/montecarlo.hpp"

using nlohmann::json;
using namespace kramers;

namespace {

constexpr int kConfigError = 1;
constexpr int kNumericalFailure = 2;
constexpr double kQuarantineLimit = 0.01;

struct Options {
  std::string model;
  std::string config_path;
  std::vector<std::string> params;
  std::vector<double> x0, v0, masses, eps;
  std::optional<double> T, dt, mass;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::uint64_t path_index = 0;
  std::size_t every = 1;
  std::size_t points = 200;
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
  std::string gnuplot;
};

struct Resolved {
  Model model;
  json model_doc;
  ExperimentPlan plan;
};

std::vector<double> json_vector(const json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string("config: '") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string("config: '") + key + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// JSON config, then flags on top.
Resolved resolve(const Options& o) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config file " + o.config_path);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + o.config_path + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  if (!o.model.empty()) {
    if (doc.contains("model") && doc["model"] != o.model) doc["params"] = json::object();
    doc["model"] = o.model;
  }
  if (!doc.contains("model")) throw ConfigError("no model given (use --model or a config file)");
  if (!doc.contains("params")) doc["params"] = json::object();
  for (const auto& kv : o.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    json value = json::parse(kv.substr(eq + 1), nullptr, false);
    if (value.is_discarded() || !value.is_number()) throw ConfigError("--param " + key + ": value must be a number");
    doc["params"][key] = value;
  }

  Resolved r;
  r.model = model_from_json(doc);
  r.model_doc = model_to_json(r.model);

  ExperimentPlan& plan = r.plan;
  plan.x0 = default_initial_position(r.model);
  const json exp = doc.value("experiment", json::object());
  if (!exp.is_object()) throw ConfigError("config: 'experiment' must be an object");
  for (const auto& [key, value] : exp.items()) {
    if (key == "x0") {
      plan.x0 = to_vector(json_vector(value, "x0"));
    } else if (key == "v0") {
      plan.v0 = to_vector(json_vector(value, "v0"));
    } else if (key == "masses") {
      plan.masses = json_vector(value, "masses");
    } else if (key == "epsilon") {
      plan.epsilons = value.is_array() ? json_vector(value, "epsilon") : std::vector<double>{value.get<double>()};
    } else if (key == "T" || key == "dt") {
      if (!value.is_number()) throw ConfigError("config: '" + key + "' must be a number");
      (key == "T" ? plan.T : plan.dt) = value.get<double>();
    } else if (key == "paths" || key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError("config: '" + key + "' must be a nonnegative integer");
      if (key == "paths") {
        plan.n_paths = value.get<std::size_t>();
      } else {
        plan.master_seed = value.get<std::uint64_t>();
      }
    } else {
      throw ConfigError("config: unknown experiment key '" + key + "'");
    }
  }
  if (!o.x0.empty()) plan.x0 = to_vector(o.x0);
  if (!o.v0.empty()) plan.v0 = to_vector(o.v0);
  if (!o.masses.empty()) plan.masses = o.masses;
  if (!o.eps.empty()) plan.epsilons = o.eps;
  if (o.T) plan.T = *o.T;
  if (o.dt) plan.dt = *o.dt;
  if (o.paths) plan.n_paths = *o.paths;
  if (o.seed) plan.master_seed = *o.seed;
  if (plan.x0.size() != r.model.n) throw ConfigError("x0 must have " + std::to_string(r.model.n) + " entries");
  return r;
}

void validate(const Resolved& r) {
  try {
    validate_plan(r.model, r.plan);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

json header(const std::string& command, const Resolved& r, const json& extra = json::object()) {
  json h = {{"command", command}, {"model", r.model_doc["model"]}, {"params", r.model_doc["params"]}};
  json plan = to_json(r.plan);
  for (auto it = extra.begin(); it != extra.end(); ++it) plan[it.key()] = it.value();
  h["experiment"] = plan;
  return h;
}

std::string csv_header(const json& h) {
  std::ostringstream os;
  os << "# kramers " << h["command"].get<std::string>() << '\n';
  os << "# config " << h.dump() << '\n';
  os << "# seed " << h["experiment"]["seed"].get<std::uint64_t>() << '\n';
  return os.str();
}

// Writes to a temporary sibling and renames it over the target.
void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path())) {
    throw ConfigError("output directory does not exist: " + target.parent_path().string());
  }
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string output_path(const Options& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  return "kramers-" + command + "." + o.format;
}

std::string emit(const Options& o, const std::string& command, const std::string& csv_body, const json& h,
                 const json& result) {
  const std::string path = output_path(o, command);
  if (o.format == "json") {
    write_atomically(path, json{{"config", h}, {"result", result}}.dump(2) + "\n");
  } else {
    write_atomically(path, csv_header(h) + csv_body);
  }
  return path;
}

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

json optional_time(const std::optional<double>& t) { return t ? json(*t) : json(nullptr); }

int run_simulate(const Options& o) {
  Resolved r = resolve(o);
  if (!o.mass) throw ConfigError("simulate needs --mass");
  r.plan.masses = {*o.mass};
  validate(r);
  if (o.every < 1) throw ConfigError("--every must be at least 1");

  TrajectoryPair t =
      simulate_coupled(r.model, r.plan.x0, r.plan.v0, *o.mass, r.plan.T, r.plan.dt, r.plan.master_seed, o.path_index);
  TrajectoryPair thin = t;
  thin.underdamped.clear();
  thin.limit.clear();
  thin.dt = t.dt * static_cast<double>(o.every);
  for (std::size_t j = 0; j < t.underdamped.size(); j += o.every) {
    thin.underdamped.push_back(t.underdamped[j]);
    thin.limit.push_back(t.limit[j]);
  }

  std::ostringstream csv;
  write_trajectory_csv(csv, thin, r.model.n);
  json samples = json::array();
  for (std::size_t j = 0; j < thin.underdamped.size(); ++j) {
    const auto& u = thin.underdamped[j];
    const auto& l = thin.limit[j];
    samples.push_back({{"t", thin.dt * static_cast<double>(j)},
                       {"x", u.cemetery ? json(nullptr) : json(from_vector(u.x))},
                       {"v", u.cemetery ? json(nullptr) : json(from_vector(u.v))},
                       {"x_lim", l.cemetery ? json(nullptr) : json(from_vector(l.x))}});
  }
  const double sup = t.sup_distance;
  json result = {{"sup_distance", std::isinf(sup) ? json("inf") : json(sup)},
                 {"exit_time_m", optional_time(t.exit_time_m)},
                 {"exit_time_limit", optional_time(t.exit_time_limit)},
                 {"aborted", t.aborted},
                 {"diagnostic", t.diagnostic},
                 {"samples", samples}};
  const json h = header("simulate", r, {{"mass", *o.mass}, {"path", o.path_index}, {"every", o.every}});
  const std::string path = emit(o, "simulate", csv.str(), h, result);
  std::cout << "simulate " << r.model.name << " m=" << g(*o.mass) << ": sup distance " << g(sup)
            << (t.aborted ? " (aborted: " + t.diagnostic + ")" : "") << " -> " << path << '\n';
  return t.aborted ? kNumericalFailure : 0;
}

int run_converge(const Options& o, bool exits) {
  Resolved r = resolve(o);
  validate(r);
  for (const auto& w : r.model.warnings) std::cerr << "warning: " << w << '\n';
  const ExperimentResult result = run_experiment(r.model, r.plan, {.threads = o.threads});
  const double aborted = aborted_fraction(result);
  const std::string command = exits ? "exit-times" : "converge";
  const json h = header(command, r);

  std::ostringstream csv;
  json payload;
  if (exits) {
    const auto rows = tabulate_exit(r.plan, result);
    write_exit_csv(csv, rows);
    payload = to_json(rows);
  } else {
    const ConvergenceTable table = tabulate_exceedance(r.plan, result);
    write_table_csv(csv, table);
    payload = to_json(table);
    if (!o.gnuplot.empty()) {
      std::ostringstream gp;
      gp << csv_header(h);
      write_gnuplot(gp, table);
      write_atomically(o.gnuplot, gp.str());
    }
  }
  const std::string path = emit(o, command, csv.str(), h, payload);
  std::cout << command << ' ' << r.model.name << ": " << r.plan.n_paths << " paths x " << r.plan.masses.size()
            << " masses, aborted fraction " << g(aborted) << " -> " << path << '\n';
  if (aborted > kQuarantineLimit) {
    std::cerr << "error: aborted fraction " << g(aborted) << " exceeds " << g(kQuarantineLimit) << '\n';
    return kNumericalFailure;
  }
  return 0;
}

int run_lyapunov_check(const Options& o) {
  Resolved r = resolve(o);
  if (!r.model.lyapunov) throw ConfigError(r.model.name + " has no Lyapunov candidate");
  const LyapunovReport report = check_lyapunov(r.model, *r.model.lyapunov);
  std::ostringstream csv;
  csv << "quantity,k,value\n";
  for (const auto& s : report.p1.shells) csv << "p1_min_V," << s.k << ',' << format_double(s.min_value) << '\n';
  csv << "p1_pass,," << (report.p1.pass ? 1 : 0) << '\n';
  csv << "p2_C,," << format_double(report.p2.C) << '\n';
  csv << "p2_D,," << format_double(report.p2.D) << '\n';
  csv << "p2_max_violation,," << format_double(report.p2.max_violation) << '\n';
  csv << "p2_pass,," << (report.p2.pass ? 1 : 0) << '\n';
  json h = {{"command", "lyapunov-check"}, {"model", r.model_doc["model"]}, {"params", r.model_doc["params"]},
            {"experiment", {{"seed", 1}}}};
  const std::string path = emit(o, "lyapunov-check", csv.str(), h, to_json(report));
  std::cout << "lyapunov-check " << r.model.name << ": " << (report.pass() ? "PASS" : "FAIL") << " (p1 "
            << (report.p1.pass ? "PASS" : "FAIL") << ", p2 " << (report.p2.pass ? "PASS" : "FAIL")
            << ", C = " << g(report.p2.C) << ", D = " << g(report.p2.D) << ") -> " << path << '\n';
  return 0;
}

// Reference noise-induced drift: D'(q) grad q for fluctuation-dissipation
// models, zero for constant friction.
Vector reference_drift(const Model& model, const Vector& x) {
  if (model.profile && model.profile_coordinate) {
    const double q = model.profile_coordinate->value(x);
    return model.profile->derivative(q) * model.profile_coordinate->gradient(x);
  }
  return Vector::Zero(model.n);
}

int run_drift_check(const Options& o) {
  Resolved r = resolve(o);
  const Model& m = r.model;
  std::ostringstream csv;
  csv << "point";
  for (int i = 1; i <= m.n; ++i) csv << ",x_" << i;
  for (int i = 1; i <= m.n; ++i) csv << ",S_" << i;
  for (int i = 1; i <= m.n; ++i) csv << ",S_ref_" << i;
  csv << ",abs_error\n";
  double worst = 0.0;
  std::size_t index = 0;
  json rows = json::array();
  for (const Vector& x : m.domain.lattice(o.points)) {
    const Vector s = noise_induced_drift(m, x);
    const Vector ref = reference_drift(m, x);
    const double err = (s - ref).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    csv << index++;
    for (int i = 0; i < m.n; ++i) csv << ',' << format_double(x[i]);
    for (int i = 0; i < m.n; ++i) csv << ',' << format_double(s[i]);
    for (int i = 0; i < m.n; ++i) csv << ',' << format_double(ref[i]);
    csv << ',' << format_double(err) << '\n';
    rows.push_back({{"x", from_vector(x)}, {"S", from_vector(s)}, {"S_ref", from_vector(ref)}, {"abs_error", err}});
  }
  json h = {{"command", "drift-check"}, {"model", r.model_doc["model"]}, {"params", r.model_doc["params"]},
            {"experiment", {{"points", o.points}, {"seed", 0}}}};
  const bool pass = worst <= 1e-6;
  const std::string path =
      emit(o, "drift-check", csv.str(), h, {{"max_abs_error", worst}, {"pass", pass}, {"points", rows}});
  std::cout << "drift-check " << m.name << ": max abs error " << g(worst) << " over " << index << " points "
            << (pass ? "PASS" : "FAIL") << " -> " << path << '\n';
  return 0;
}

void add_model_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "built-in model name");
  cmd->add_option("--config", o.config_path, "JSON config {model, params, experiment}")->check(CLI::ExistingFile);
  cmd->add_option("--param", o.params, "model parameter override key=value (repeatable)");
  cmd->add_option("--out", o.out, "output file (default kramers-<command>.<format>)");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_plan_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--x0", o.x0, "initial position")->delimiter(',');
  cmd->add_option("--v0", o.v0, "initial velocity (default 0)")->delimiter(',');
  cmd->add_option("--T", o.T, "time horizon");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--seed", o.seed, "master seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-mass limit experiments for Langevin dynamics with state-dependent friction"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "one coupled trajectory pair");
  add_model_options(simulate, o);
  add_plan_options(simulate, o);
  simulate->add_option("--mass", o.mass, "particle mass")->required();
  simulate->add_option("--path", o.path_index, "path index within the seed");
  simulate->add_option("--every", o.every, "keep every n-th grid sample");

  auto* converge = app.add_subcommand("converge", "exceedance probabilities over a mass ladder");
  auto* exit_times = app.add_subcommand("exit-times", "exit probabilities over a mass ladder");
  for (auto* cmd : {converge, exit_times}) {
    add_model_options(cmd, o);
    add_plan_options(cmd, o);
    cmd->add_option("--masses", o.masses, "strictly decreasing masses")->delimiter(',');
    cmd->add_option("--paths", o.paths, "number of paths");
    cmd->add_option("--threads", o.threads, "worker threads (0: KRAMERS_THREADS or all cores)");
  }
  converge->add_option("--eps", o.eps, "exceedance thresholds")->delimiter(',');
  converge->add_option("--gnuplot", o.gnuplot, "also write a two-column m vs p_exceed file");

  auto* lyap = app.add_subcommand("lyapunov-check", "verify p1 and p2 for the model's candidate V");
  add_model_options(lyap, o);

  auto* drift = app.add_subcommand("drift-check", "noise-induced drift vs its closed form");
  add_model_options(drift, o);
  drift->add_option("--points", o.points, "number of lattice points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (simulate->parsed()) return run_simulate(o);
    if (converge->parsed()) return run_converge(o, false);
    if (exit_times->parsed()) return run_converge(o, true);
    if (lyap->parsed()) return run_lyapunov_check(o);
    if (drift->parsed()) return run_drift_check(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParameterDomain& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainMismatch& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return 0;
}
