#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kramers/integrators.hpp"
#include "kramers/model.hpp"

namespace kramers {

struct ExperimentPlan {
  Vector x0;
  Vector v0;  // empty means zero initial velocity
  double T = 1.0;
  double dt = 1e-5;
  std::vector<double> epsilons{0.05};
  std::vector<double> masses{1e-1, 1e-2, 1e-3, 1e-4};  // strictly decreasing
  std::size_t n_paths = 400;
  std::uint64_t master_seed = 7;
};

// Throws DomainError on non-positive or non-decreasing masses, dt > T,
// n_paths == 0, or an initial point outside the model domain.
void validate_plan(const Model& model, const ExperimentPlan& plan);

struct RunOptions {
  unsigned threads = 0;  // 0: KRAMERS_THREADS, else hardware concurrency
};

unsigned resolve_thread_count(unsigned requested);

// Raw per-path outcomes, indexed by path then by mass.
struct ExperimentResult {
  std::vector<LadderOutcome> paths;
};

ExperimentResult run_experiment(const Model& model, const ExperimentPlan& plan, const RunOptions& options = {});

struct ConvergenceRow {
  double m = 0.0;
  double epsilon = 0.0;
  double p_exceed = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_exit = 0.0;
  std::size_t exceed_count = 0;
  std::size_t exit_count = 0;
  std::size_t completed = 0;
  std::size_t aborted = 0;
  std::size_t limit_exits = 0;  // limiting path left X numerically
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
};

struct ExitRow {
  double m = 0.0;
  double p_exit = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t exit_count = 0;
  std::size_t completed = 0;
  std::size_t aborted = 0;
};

ConvergenceTable tabulate_exceedance(const ExperimentPlan& plan, const ExperimentResult& result);
std::vector<ExitRow> tabulate_exit(const ExperimentPlan& plan, const ExperimentResult& result);

// P{ sup_{[0,T]} d_inf(x^m, x) > eps } per (m, eps), over paths sharing
// seeds across masses.
ConvergenceTable estimate_exceedance(const Model& model, const ExperimentPlan& plan, const RunOptions& options = {});

// P{ tau^m <= T } per mass.
std::vector<ExitRow> estimate_exit_probability(const Model& model, const ExperimentPlan& plan,
                                               const RunOptions& options = {});

// Wilson score interval; z = 1.959964 at 95%. Throws DomainError unless
// 0 <= successes <= n and n >= 1.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double confidence = 0.95);

// Aborted fraction over all (path, mass) pairs.
double aborted_fraction(const ExperimentResult& result);

void write_table_csv(std::ostream& os, const ConvergenceTable& table);
void write_exit_csv(std::ostream& os, const std::vector<ExitRow>& rows);
// Two columns "m p_exceed", one block per epsilon.
void write_gnuplot(std::ostream& os, const ConvergenceTable& table);
nlohmann::json to_json(const ConvergenceTable& table);
nlohmann::json to_json(const std::vector<ExitRow>& rows);
nlohmann::json to_json(const ExperimentPlan& plan);

}  // namespace kramers
