#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kramers/model.hpp"
#include "kramers/types.hpp"

namespace kramers {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Point of the extended state space X u {cemetery}. Overdamped states carry
// an empty velocity.
struct ExtendedState {
  bool cemetery = false;
  Vector x;
  Vector v;

  static ExtendedState in_domain(Vector x, Vector v = Vector()) { return {false, std::move(x), std::move(v)}; }
  static ExtendedState dead() { return {true, Vector(), Vector()}; }
};

// |p - q| when both are alive, +inf when either one is the cemetery
// (including both).
double d_infinity(const ExtendedState& p, const ExtendedState& q);

// Reproducible k-dimensional Brownian increments N(0, dt I). The sequence
// depends only on (master_seed, path_index).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t path_index, int k, double dt);

  void next(Vector& dw);
  Vector next();
  // `count` standard normals from the same sequence.
  void next_standard(Vector& z, int count);

  int dim() const { return k_; }
  double dt() const { return dt_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  int k_;
  double dt_;
  double sqrt_dt_;
};

/// One step of the inertial system with coefficients frozen at the current
/// position, exact for the frozen linear system given the Brownian increment:
///   v <- e^{-gamma dt/m} v + M (F + sigma dW/dt) + R z,   M = gamma^{-1}(I - e^{-gamma dt/m}),
///   x <- x + gamma^{-1}(F dt + sigma dW - m (v_new - v)) + S[(dt I - m M) J],
/// where z ~ N(0, I_n) is independent of dW and R R^T = Cov(v | dW), the part
/// of the OU covariance (J - E J E^T)/m not carried by dW. The last term,
/// S[K]_i = sum d_l[gamma^{-1}]_ij K_jl, restores the share of the
/// noise-induced drift that frozen coefficients cannot resolve within a step;
/// it vanishes as m / (gamma dt) grows and tends to S dt as m -> 0. Leaving the
/// domain returns the cemetery state. Throws NonFinite if the new state is not
/// finite.
ExtendedState step_underdamped(const Model& model, const ExtendedState& state, double m, double dt, const Vector& dw,
                               const Vector& bridge);

/// Euler-Maruyama step of the limiting Ito equation
///   x <- x + (gamma^{-1} F + S) dt + gamma^{-1} sigma dW.
ExtendedState step_overdamped(const Model& model, const ExtendedState& state, double dt, const Vector& dw);

struct TrajectoryPair {
  double dt = 0.0;
  std::size_t steps = 0;  // grid is t_j = j dt, j = 0..steps
  std::vector<ExtendedState> underdamped;  // empty unless recorded
  std::vector<ExtendedState> limit;
  double sup_distance = 0.0;
  std::optional<double> exit_time_m;
  std::optional<double> exit_time_limit;
  bool aborted = false;
  std::string diagnostic;

  double horizon() const { return dt * static_cast<double>(steps); }
};

std::size_t grid_steps(double T, double dt);

// Integrates both systems from (x0, v0) and x0 on one grid with the same
// increments. `record` keeps every grid sample.
TrajectoryPair simulate_coupled(const Model& model, const Vector& x0, const Vector& v0, double m, double T, double dt,
                                std::uint64_t master_seed, std::uint64_t path_index, bool record = true);

struct MassOutcome {
  double sup_distance = 0.0;
  std::optional<double> exit_time;
  bool aborted = false;
  std::string diagnostic;
};

struct LadderOutcome {
  std::vector<MassOutcome> masses;
  std::optional<double> limit_exit_time;
  bool limit_aborted = false;
};

// simulate_coupled for several masses at once: the limiting path is computed
// once and shared. Per-mass results equal those of simulate_coupled.
LadderOutcome simulate_mass_ladder(const Model& model, const Vector& x0, const Vector& v0,
                                   std::span<const double> masses, double T, double dt, std::uint64_t master_seed,
                                   std::uint64_t path_index);

// Header t,x_1..x_n,v_1..v_n,x_lim_1..x_lim_n,exited_m,exited_lim; cemetery
// samples are written as empty fields.
void write_trajectory_csv(std::ostream& os, const TrajectoryPair& traj, int n);

std::string format_double(double value);

}  // namespace kramers
