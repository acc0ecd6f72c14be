#include "kramers/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "kramers/errors.hpp"

namespace kramers {

void validate_plan(const Model& model, const ExperimentPlan& plan) {
  if (plan.masses.empty()) throw DomainError("plan: mass list is empty");
  for (std::size_t i = 0; i < plan.masses.size(); ++i) {
    if (!(plan.masses[i] > 0.0)) throw DomainError("plan: masses must be positive");
    if (i > 0 && !(plan.masses[i] < plan.masses[i - 1])) throw DomainError("plan: masses must be strictly decreasing");
  }
  if (!(plan.dt > 0.0) || !(plan.T >= 0.0) || !std::isfinite(plan.T)) throw DomainError("plan: need dt > 0, T >= 0");
  if (plan.dt > plan.T && plan.T > 0.0) throw DomainError("plan: dt must not exceed T");
  if (plan.n_paths < 1) throw DomainError("plan: n_paths must be at least 1");
  for (double eps : plan.epsilons) {
    if (!(eps > 0.0)) throw DomainError("plan: epsilon must be positive");
  }
  if (plan.x0.size() != model.n || !model.domain.contains(plan.x0)) {
    throw DomainError("plan: x0 must be a point of the model domain");
  }
  if (plan.v0.size() != 0 && (plan.v0.size() != model.n || !plan.v0.allFinite())) {
    throw DomainError("plan: v0 must be a finite n-vector");
  }
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("KRAMERS_THREADS")) {
    const long value = std::strtol(env, nullptr, 10);
    if (value > 0) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const Model& model, const ExperimentPlan& plan, const RunOptions& options) {
  validate_plan(model, plan);
  ExperimentResult result;
  result.paths.resize(plan.n_paths);

  const unsigned workers = std::min<unsigned>(resolve_thread_count(options.threads),
                                              static_cast<unsigned>(std::min<std::size_t>(plan.n_paths, 1u << 16)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.n_paths) return;
      try {
        result.paths[i] =
            simulate_mass_ladder(model, plan.x0, plan.v0, plan.masses, plan.T, plan.dt, plan.master_seed, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(plan.n_paths);
        return;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double confidence) {
  if (n < 1 || successes > n) throw DomainError("wilson_interval: need 0 <= successes <= n, n >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("wilson_interval: confidence must lie in (0, 1)");
  double z = 1.959964;
  if (std::abs(confidence - 0.95) > 1e-12) {
    z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * confidence);
  }
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  double high = successes == n ? 1.0 : std::min(1.0, center + half);
  // Keep low <= p_hat <= high under rounding.
  low = std::min(low, p);
  high = std::max(high, p);
  return {low, high};
}

ConvergenceTable tabulate_exceedance(const ExperimentPlan& plan, const ExperimentResult& result) {
  ConvergenceTable table;
  for (std::size_t mi = 0; mi < plan.masses.size(); ++mi) {
    for (double eps : plan.epsilons) {
      ConvergenceRow row;
      row.m = plan.masses[mi];
      row.epsilon = eps;
      for (const LadderOutcome& path : result.paths) {
        const MassOutcome& mo = path.masses[mi];
        if (mo.aborted) {
          ++row.aborted;
          continue;
        }
        ++row.completed;
        if (mo.sup_distance > eps) ++row.exceed_count;
        if (mo.exit_time) ++row.exit_count;
        if (path.limit_exit_time) ++row.limit_exits;
      }
      if (row.completed > 0) {
        const double nn = static_cast<double>(row.completed);
        row.p_exceed = static_cast<double>(row.exceed_count) / nn;
        row.p_exit = static_cast<double>(row.exit_count) / nn;
        std::tie(row.ci_low, row.ci_high) = wilson_interval(row.exceed_count, row.completed);
      } else {
        row.ci_low = 0.0;
        row.ci_high = 1.0;
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

std::vector<ExitRow> tabulate_exit(const ExperimentPlan& plan, const ExperimentResult& result) {
  std::vector<ExitRow> rows;
  for (std::size_t mi = 0; mi < plan.masses.size(); ++mi) {
    ExitRow row;
    row.m = plan.masses[mi];
    for (const LadderOutcome& path : result.paths) {
      const MassOutcome& mo = path.masses[mi];
      if (mo.aborted) {
        ++row.aborted;
        continue;
      }
      ++row.completed;
      if (mo.exit_time && *mo.exit_time <= plan.T) ++row.exit_count;
    }
    if (row.completed > 0) {
      row.p_exit = static_cast<double>(row.exit_count) / static_cast<double>(row.completed);
      std::tie(row.ci_low, row.ci_high) = wilson_interval(row.exit_count, row.completed);
    } else {
      row.ci_high = 1.0;
    }
    rows.push_back(row);
  }
  return rows;
}

ConvergenceTable estimate_exceedance(const Model& model, const ExperimentPlan& plan, const RunOptions& options) {
  return tabulate_exceedance(plan, run_experiment(model, plan, options));
}

std::vector<ExitRow> estimate_exit_probability(const Model& model, const ExperimentPlan& plan,
                                               const RunOptions& options) {
  return tabulate_exit(plan, run_experiment(model, plan, options));
}

double aborted_fraction(const ExperimentResult& result) {
  std::size_t total = 0, aborted = 0;
  for (const LadderOutcome& path : result.paths) {
    for (const MassOutcome& mo : path.masses) {
      ++total;
      if (mo.aborted) ++aborted;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(aborted) / static_cast<double>(total);
}

void write_table_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "m,epsilon,p_exceed,ci_low,ci_high,p_exit,aborted\n";
  for (const ConvergenceRow& r : table.rows) {
    os << format_double(r.m) << ',' << format_double(r.epsilon) << ',' << format_double(r.p_exceed) << ','
       << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << format_double(r.p_exit) << ','
       << r.aborted << '\n';
  }
}

void write_exit_csv(std::ostream& os, const std::vector<ExitRow>& rows) {
  os << "m,p_exit,ci_low,ci_high,aborted\n";
  for (const ExitRow& r : rows) {
    os << format_double(r.m) << ',' << format_double(r.p_exit) << ',' << format_double(r.ci_low) << ','
       << format_double(r.ci_high) << ',' << r.aborted << '\n';
  }
}

void write_gnuplot(std::ostream& os, const ConvergenceTable& table) {
  os << "# m p_exceed  (plot with: set logscale x)\n";
  bool first = true;
  double current = 0.0;
  // Rows are ordered by mass then epsilon; regroup by epsilon.
  std::vector<double> eps_seen;
  for (const ConvergenceRow& r : table.rows) {
    if (std::find(eps_seen.begin(), eps_seen.end(), r.epsilon) == eps_seen.end()) eps_seen.push_back(r.epsilon);
  }
  for (double eps : eps_seen) {
    if (!first) os << "\n\n";
    first = false;
    current = eps;
    os << "# epsilon " << format_double(current) << '\n';
    for (const ConvergenceRow& r : table.rows) {
      if (r.epsilon == eps) os << format_double(r.m) << ' ' << format_double(r.p_exceed) << '\n';
    }
  }
}

nlohmann::json to_json(const ConvergenceTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ConvergenceRow& r : table.rows) {
    rows.push_back({{"m", r.m},
                    {"epsilon", r.epsilon},
                    {"p_exceed", r.p_exceed},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high},
                    {"p_exit", r.p_exit},
                    {"exceed_count", r.exceed_count},
                    {"exit_count", r.exit_count},
                    {"completed", r.completed},
                    {"aborted", r.aborted},
                    {"limit_exits", r.limit_exits}});
  }
  return rows;
}

nlohmann::json to_json(const std::vector<ExitRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const ExitRow& r : rows) {
    out.push_back({{"m", r.m},
                   {"p_exit", r.p_exit},
                   {"ci_low", r.ci_low},
                   {"ci_high", r.ci_high},
                   {"exit_count", r.exit_count},
                   {"completed", r.completed},
                   {"aborted", r.aborted}});
  }
  return out;
}

nlohmann::json to_json(const ExperimentPlan& plan) {
  auto vec = [](const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  return {{"x0", vec(plan.x0)},       {"v0", vec(plan.v0)},         {"T", plan.T},
          {"dt", plan.dt},            {"epsilon", plan.epsilons},   {"masses", plan.masses},
          {"paths", plan.n_paths},    {"seed", plan.master_seed}};
}

}  // namespace kramers
