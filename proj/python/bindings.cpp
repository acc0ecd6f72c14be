#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kramers/config.hpp"
#include "kramers/errors.hpp"
#include "kramers/integrators.hpp"
#include "kramers/linalg.hpp"
#include "kramers/lyapunov.hpp"
#include "kramers/lyapunov_check.hpp"
#include "kramers/models.hpp"
#include "kramers/montecarlo.hpp"

namespace py = pybind11;
using namespace kramers;

namespace {

Matrix to_matrix(const Eigen::MatrixXd& a) {
  if (a.rows() > kMaxDim || a.cols() > kMaxDim) throw DomainError("matrices are limited to 4 x 4");
  return a;
}

Vector to_vector(const Eigen::VectorXd& v) {
  if (v.size() > kMaxDim) throw DomainError("vectors are limited to 4 entries");
  return v;
}

Eigen::MatrixXd out(const Matrix& a) { return a; }
Eigen::VectorXd out(const Vector& v) { return v; }

ExperimentPlan make_plan(const Model& model, const Eigen::VectorXd& x0, std::vector<double> masses,
                         std::vector<double> epsilons, double T, double dt, std::size_t n_paths, std::uint64_t seed,
                         const std::optional<Eigen::VectorXd>& v0) {
  ExperimentPlan plan;
  plan.x0 = to_vector(x0);
  if (v0) plan.v0 = to_vector(*v0);
  plan.masses = std::move(masses);
  plan.epsilons = std::move(epsilons);
  plan.T = T;
  plan.dt = dt;
  plan.n_paths = n_paths;
  plan.master_seed = seed;
  validate_plan(model, plan);
  return plan;
}

py::dict row_dict(const ConvergenceRow& r) {
  py::dict d;
  d["m"] = r.m;
  d["epsilon"] = r.epsilon;
  d["p_exceed"] = r.p_exceed;
  d["ci_low"] = r.ci_low;
  d["ci_high"] = r.ci_high;
  d["p_exit"] = r.p_exit;
  d["exceed_count"] = r.exceed_count;
  d["exit_count"] = r.exit_count;
  d["completed"] = r.completed;
  d["aborted"] = r.aborted;
  d["limit_exits"] = r.limit_exits;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Small-mass limit of Langevin dynamics with state-dependent friction";

  static py::exception<Error> base(m, "KramersError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterDomain>(m, "ParameterDomain", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SingularSystem>(m, "SingularSystem", base.ptr());
  py::register_exception<HorizonTooShort>(m, "HorizonTooShort", base.ptr());

  m.def(
      "solve_lyapunov",
      [](const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& sigma_sq) {
        auto sol = solve_lyapunov(to_matrix(gamma), to_matrix(sigma_sq));
        return py::make_tuple(out(sol.J), sol.residual_norm);
      },
      py::arg("gamma"), py::arg("sigma_sq"), "J with gamma J + J gamma^T = sigma_sq, and the residual norm");
  m.def(
      "integral_lyapunov",
      [](const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& sigma_sq, double horizon, double step) {
        return out(integral_lyapunov(to_matrix(gamma), to_matrix(sigma_sq), horizon, step).J);
      },
      py::arg("gamma"), py::arg("sigma_sq"), py::arg("horizon"), py::arg("step"));
  m.def("expm", [](const Eigen::MatrixXd& a) { return out(expm(to_matrix(a))); }, py::arg("a"));
  m.def("wilson_interval", &wilson_interval, py::arg("successes"), py::arg("n"), py::arg("confidence") = 0.95);
  m.def("builtin_model_names", &builtin_model_names);

  py::class_<Model>(m, "Model")
      .def_readonly("name", &Model::name)
      .def_readonly("n", &Model::n)
      .def_readonly("k", &Model::k)
      .def_readonly("warnings", &Model::warnings)
      .def_property_readonly("params_json", [](const Model& self) { return self.params.dump(); })
      .def_property_readonly("domain", [](const Model& self) { return self.domain.describe(); })
      .def("contains", [](const Model& self, const Eigen::VectorXd& x) { return self.domain.contains(to_vector(x)); })
      .def("default_initial_position", [](const Model& self) { return out(default_initial_position(self)); })
      .def("force", [](const Model& self, const Eigen::VectorXd& x) { return out(self.force(to_vector(x))); })
      .def("friction", [](const Model& self, const Eigen::VectorXd& x) { return out(self.friction(to_vector(x))); })
      .def("diffusion", [](const Model& self, const Eigen::VectorXd& x) { return out(self.diffusion(to_vector(x))); })
      .def("noise_induced_drift",
           [](const Model& self, const Eigen::VectorXd& x) { return out(noise_induced_drift(self, to_vector(x))); })
      .def("limiting_drift",
           [](const Model& self, const Eigen::VectorXd& x) { return out(limiting_drift(self, to_vector(x))); })
      .def("limiting_diffusion",
           [](const Model& self, const Eigen::VectorXd& x) { return out(limiting_diffusion(self, to_vector(x))); })
      .def("potential",
           [](const Model& self, const Eigen::VectorXd& x) {
             if (!self.lyapunov) throw ConfigError(self.name + " has no Lyapunov candidate");
             return self.lyapunov->value(to_vector(x));
           })
      .def("generator",
           [](const Model& self, const Eigen::VectorXd& x) {
             if (!self.lyapunov) throw ConfigError(self.name + " has no Lyapunov candidate");
             return apply_generator(self, *self.lyapunov, to_vector(x));
           })
      .def("lyapunov_check_json", [](const Model& self) {
        if (!self.lyapunov) throw ConfigError(self.name + " has no Lyapunov candidate");
        LyapunovReport report;
        {
          py::gil_scoped_release release;
          report = check_lyapunov(self, *self.lyapunov);
        }
        return to_json(report).dump();
      });

  m.def(
      "make_model",
      [](const std::string& name, const std::string& params_json) {
        return make_model(name, nlohmann::json::parse(params_json));
      },
      py::arg("name"), py::arg("params_json") = "{}");

  m.def(
      "simulate_coupled",
      [](const Model& model, const Eigen::VectorXd& x0, double mass, double T, double dt, std::uint64_t seed,
         std::uint64_t path, const std::optional<Eigen::VectorXd>& v0) {
        TrajectoryPair t;
        {
          py::gil_scoped_release release;
          t = simulate_coupled(model, to_vector(x0), v0 ? to_vector(*v0) : Vector(), mass, T, dt, seed, path);
        }
        const auto rows = static_cast<Eigen::Index>(t.underdamped.size());
        const double nan = std::nan("");
        Eigen::VectorXd time(rows);
        Eigen::MatrixXd x(rows, model.n), v(rows, model.n), xl(rows, model.n);
        for (Eigen::Index j = 0; j < rows; ++j) {
          const auto& u = t.underdamped[j];
          const auto& l = t.limit[j];
          time[j] = t.dt * static_cast<double>(j);
          for (int i = 0; i < model.n; ++i) {
            x(j, i) = u.cemetery ? nan : u.x[i];
            v(j, i) = u.cemetery ? nan : u.v[i];
            xl(j, i) = l.cemetery ? nan : l.x[i];
          }
        }
        py::dict d;
        d["t"] = time;
        d["x"] = x;
        d["v"] = v;
        d["x_limit"] = xl;
        d["sup_distance"] = t.sup_distance;
        d["exit_time"] = t.exit_time_m;
        d["exit_time_limit"] = t.exit_time_limit;
        d["aborted"] = t.aborted;
        d["diagnostic"] = t.diagnostic;
        return d;
      },
      py::arg("model"), py::arg("x0"), py::arg("mass"), py::arg("T"), py::arg("dt"), py::arg("seed") = 7,
      py::arg("path") = 0, py::arg("v0") = std::nullopt);

  m.def(
      "estimate_exceedance",
      [](const Model& model, const Eigen::VectorXd& x0, std::vector<double> masses, std::vector<double> epsilons,
         double T, double dt, std::size_t n_paths, std::uint64_t seed, unsigned threads,
         const std::optional<Eigen::VectorXd>& v0) {
        const ExperimentPlan plan = make_plan(model, x0, std::move(masses), std::move(epsilons), T, dt, n_paths, seed, v0);
        ConvergenceTable table;
        {
          py::gil_scoped_release release;
          table = estimate_exceedance(model, plan, {.threads = threads});
        }
        py::list rows;
        for (const auto& r : table.rows) rows.append(row_dict(r));
        return rows;
      },
      py::arg("model"), py::arg("x0"), py::arg("masses"), py::arg("epsilons"), py::arg("T"), py::arg("dt"),
      py::arg("n_paths"), py::arg("seed") = 7, py::arg("threads") = 0, py::arg("v0") = std::nullopt);

  m.def(
      "estimate_exit_probability",
      [](const Model& model, const Eigen::VectorXd& x0, std::vector<double> masses, double T, double dt,
         std::size_t n_paths, std::uint64_t seed, unsigned threads, const std::optional<Eigen::VectorXd>& v0) {
        const ExperimentPlan plan = make_plan(model, x0, std::move(masses), {1.0}, T, dt, n_paths, seed, v0);
        std::vector<ExitRow> rows;
        {
          py::gil_scoped_release release;
          rows = estimate_exit_probability(model, plan, {.threads = threads});
        }
        py::list result;
        for (const auto& r : rows) {
          py::dict d;
          d["m"] = r.m;
          d["p_exit"] = r.p_exit;
          d["ci_low"] = r.ci_low;
          d["ci_high"] = r.ci_high;
          d["exit_count"] = r.exit_count;
          d["completed"] = r.completed;
          d["aborted"] = r.aborted;
          result.append(d);
        }
        return result;
      },
      py::arg("model"), py::arg("x0"), py::arg("masses"), py::arg("T"), py::arg("dt"), py::arg("n_paths"),
      py::arg("seed") = 7, py::arg("threads") = 0, py::arg("v0") = std::nullopt);
}
