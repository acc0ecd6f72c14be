#include "kramers/integrators.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/linalg.hpp"
#include "kramers/lyapunov.hpp"

namespace kramers {

namespace {

void require_finite_state(const Vector& x, const Vector& v, const char* where) {
  if (!x.allFinite() || (v.size() > 0 && !v.allFinite())) {
    std::ostringstream os;
    os << where << ": non-finite state";
    throw NonFinite(os.str());
  }
}

// Symmetric square root of a covariance, clipping round-off negatives.
Matrix covariance_root(const Matrix& cov) {
  Eigen::LLT<Matrix> chol(cov);
  if (chol.info() == Eigen::Success) return chol.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

// (1 - e^{-2r})/2 - (1 - e^{-r})^2 / r, accurate for small r.
double bridge_variance_factor(double r) {
  if (r < 0.1) {
    const double c[] = {1.0 / 12, -1.0 / 12, 17.0 / 360, -7.0 / 360, 43.0 / 6720, -107.0 / 60480, 769.0 / 1814400};
    double sum = 0.0;
    for (int i = 6; i >= 0; --i) sum = sum * r + c[i];
    return sum * r * r * r;
  }
  const double e1 = -std::expm1(-r);
  return std::max(0.0, -0.5 * std::expm1(-2.0 * r) - e1 * e1 / r);
}

// 1 - (1 - e^{-r}) / r
double unresolved_fraction(double r) {
  if (r < 1e-2) return r * (0.5 - r * (1.0 / 6 - r * (1.0 / 24 - r / 120)));
  return (r + std::expm1(-r)) / r;
}

struct LimitCoefficients {
  Vector drift;
  Matrix diffusion;
};

LimitCoefficients limit_coefficients(const Model& model, const Vector& x) {
  const Matrix gamma = model.friction(x);
  const Matrix sigma = model.diffusion(x);
  const Vector force = model.force(x);
  LimitCoefficients out;
  if (model.n == 1 && model.k == 1 && model.friction_gradient) {
    const double g = gamma(0, 0);
    if (!(std::abs(g) > 0.0) || !std::isfinite(1.0 / g)) throw SingularSystem("friction_inverse: singular friction");
    const double inv = 1.0 / g;
    const double dg = (*model.friction_gradient)(x).slices[0](0, 0);
    const double J = sigma(0, 0) * sigma(0, 0) / (2.0 * g);
    out.drift = Vector::Constant(1, inv * force[0] - inv * dg * inv * J);
    out.diffusion = Matrix::Constant(1, 1, inv * sigma(0, 0));
    return out;
  }
  const Matrix inv = friction_inverse(gamma);
  const LyapunovSolution lyap = solve_lyapunov(gamma, sigma * sigma.transpose());
  out.drift = inv * force + contract_drift(grad_friction_inverse(model, x), lyap.J);
  out.diffusion = inv * sigma;
  return out;
}

}  // namespace

double d_infinity(const ExtendedState& p, const ExtendedState& q) {
  if (p.cemetery || q.cemetery) return kInfinity;
  return (p.x - q.x).norm();
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t path_index, int k, double dt)
    : normal_(0.0, 1.0), k_(k), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32),
                    0x6b72616du};
  engine_.seed(seq);
}

void NoiseStream::next(Vector& dw) {
  dw.resize(k_);
  for (int i = 0; i < k_; ++i) dw[i] = sqrt_dt_ * normal_(engine_);
}

void NoiseStream::next_standard(Vector& z, int count) {
  z.resize(count);
  for (int i = 0; i < count; ++i) z[i] = normal_(engine_);
}

Vector NoiseStream::next() {
  Vector dw(k_);
  next(dw);
  return dw;
}

ExtendedState step_underdamped(const Model& model, const ExtendedState& state, double m, double dt, const Vector& dw,
                               const Vector& bridge) {
  if (state.cemetery) return ExtendedState::dead();
  const Vector& x = state.x;
  const Matrix gamma = model.friction(x);
  const Matrix sigma = model.diffusion(x);
  const Vector force = model.force(x);

  Vector v_new;
  Vector x_new;
  if (model.n == 1 && model.k == 1) {
    const double g = gamma(0, 0);
    const double s = sigma(0, 0);
    const double rate = g * dt / m;
    const double decay = std::exp(-rate);
    const double gain = -std::expm1(-rate) / g;
    const double bridge_sd = std::abs(s) * std::sqrt(bridge_variance_factor(rate) / (g * m));
    v_new = Vector::Constant(1, decay * state.v[0] + gain * (force[0] + s * dw[0] / dt) + bridge_sd * bridge[0]);
    x_new = Vector::Constant(1, x[0] + (force[0] * dt + s * dw[0] - m * (v_new[0] - state.v[0])) / g);
    const double dinv = model.friction_gradient ? -(*model.friction_gradient)(x).slices[0](0, 0) / (g * g)
                                                : grad_friction_inverse(model, x).slices[0](0, 0);
    x_new[0] += dinv * (s * s / (2.0 * g)) * dt * unresolved_fraction(rate);
  } else {
    const Eigen::Index n = model.n;
    const Matrix decay = expm(-(dt / m) * gamma);
    const Matrix inv = friction_inverse(gamma);
    const Matrix gain = inv * (Matrix::Identity(n, n) - decay);
    const Matrix sigma_sq = sigma * sigma.transpose();
    const LyapunovSolution lyap = solve_lyapunov(gamma, sigma_sq);
    const Matrix cov = symmetric_part(lyap.J - decay * lyap.J * decay.transpose()) / m;
    const Matrix explained = gain * sigma_sq * gain.transpose() / dt;
    const Matrix root = covariance_root(symmetric_part(cov - explained));
    v_new = decay * state.v + gain * (force + sigma * dw / dt) + root * bridge;
    x_new = x + inv * (force * dt + sigma * dw - m * (v_new - state.v));
    const Matrix unresolved = dt * Matrix::Identity(n, n) - m * gain;
    x_new += contract_drift(grad_friction_inverse(model, x), unresolved * lyap.J);
  }
  require_finite_state(x_new, v_new, "step_underdamped");
  if (!model.domain.contains(x_new)) return ExtendedState::dead();
  return ExtendedState::in_domain(std::move(x_new), std::move(v_new));
}

ExtendedState step_overdamped(const Model& model, const ExtendedState& state, double dt, const Vector& dw) {
  if (state.cemetery) return ExtendedState::dead();
  const LimitCoefficients c = limit_coefficients(model, state.x);
  Vector x_new = state.x + c.drift * dt + c.diffusion * dw;
  require_finite_state(x_new, Vector(), "step_overdamped");
  if (!model.domain.contains(x_new)) return ExtendedState::dead();
  return ExtendedState::in_domain(std::move(x_new));
}

std::size_t grid_steps(double T, double dt) {
  if (!(dt > 0.0) || !(T >= 0.0) || !std::isfinite(T)) throw DomainError("grid requires dt > 0 and finite T >= 0");
  return static_cast<std::size_t>(std::llround(T / dt));
}

TrajectoryPair simulate_coupled(const Model& model, const Vector& x0, const Vector& v0, double m, double T, double dt,
                                std::uint64_t master_seed, std::uint64_t path_index, bool record) {
  if (!(m > 0.0)) throw DomainError("mass must be positive");
  if (!model.domain.contains(x0)) throw DomainError("initial position is not in the domain");
  TrajectoryPair out;
  out.dt = dt;
  out.steps = grid_steps(T, dt);

  NoiseStream noise(master_seed, path_index, model.k, dt);
  ExtendedState under = ExtendedState::in_domain(x0, v0.size() ? v0 : Vector(Vector::Zero(model.n)));
  ExtendedState limit = ExtendedState::in_domain(x0);
  if (record) {
    out.underdamped.reserve(out.steps + 1);
    out.limit.reserve(out.steps + 1);
    out.underdamped.push_back(under);
    out.limit.push_back(limit);
  }

  Vector dw(model.k), bridge(model.n);
  for (std::size_t j = 1; j <= out.steps; ++j) {
    noise.next(dw);
    noise.next_standard(bridge, model.n);
    const double t = dt * static_cast<double>(j);
    try {
      if (!under.cemetery) {
        under = step_underdamped(model, under, m, dt, dw, bridge);
        if (under.cemetery) out.exit_time_m = t;
      }
      if (!limit.cemetery) {
        limit = step_overdamped(model, limit, dt, dw);
        if (limit.cemetery) out.exit_time_limit = t;
      }
    } catch (const Error& e) {
      out.aborted = true;
      out.diagnostic = e.what();
      break;
    }
    if (out.sup_distance < kInfinity) out.sup_distance = std::max(out.sup_distance, d_infinity(under, limit));
    if (record) {
      out.underdamped.push_back(under);
      out.limit.push_back(limit);
    }
  }
  return out;
}

LadderOutcome simulate_mass_ladder(const Model& model, const Vector& x0, const Vector& v0,
                                   std::span<const double> masses, double T, double dt, std::uint64_t master_seed,
                                   std::uint64_t path_index) {
  if (!model.domain.contains(x0)) throw DomainError("initial position is not in the domain");
  for (double m : masses) {
    if (!(m > 0.0)) throw DomainError("mass must be positive");
  }
  const std::size_t steps = grid_steps(T, dt);
  const std::size_t count = masses.size();

  LadderOutcome out;
  out.masses.resize(count);
  std::vector<ExtendedState> under(count, ExtendedState::in_domain(x0, v0.size() ? v0 : Vector(Vector::Zero(model.n))));
  ExtendedState limit = ExtendedState::in_domain(x0);

  NoiseStream noise(master_seed, path_index, model.k, dt);
  Vector dw(model.k), bridge(model.n);
  std::size_t active = count;
  for (std::size_t j = 1; j <= steps; ++j) {
    noise.next(dw);
    noise.next_standard(bridge, model.n);
    const double t = dt * static_cast<double>(j);
    if (!limit.cemetery && !out.limit_aborted) {
      try {
        limit = step_overdamped(model, limit, dt, dw);
        if (limit.cemetery) out.limit_exit_time = t;
      } catch (const Error& e) {
        out.limit_aborted = true;
        for (MassOutcome& mo : out.masses) {
          if (!mo.aborted) {
            mo.aborted = true;
            mo.diagnostic = std::string("limit: ") + e.what();
          }
        }
        break;
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      MassOutcome& mo = out.masses[i];
      if (mo.aborted) continue;
      if (!under[i].cemetery) {
        try {
          under[i] = step_underdamped(model, under[i], masses[i], dt, dw, bridge);
        } catch (const Error& e) {
          mo.aborted = true;
          mo.diagnostic = e.what();
          --active;
          continue;
        }
        if (under[i].cemetery) mo.exit_time = t;
      }
      if (mo.sup_distance < kInfinity) mo.sup_distance = std::max(mo.sup_distance, d_infinity(under[i], limit));
    }
    if (active == 0) break;
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const TrajectoryPair& traj, int n) {
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x_" << i;
  for (int i = 1; i <= n; ++i) os << ",v_" << i;
  for (int i = 1; i <= n; ++i) os << ",x_lim_" << i;
  os << ",exited_m,exited_lim\n";
  const std::size_t rows = std::min(traj.underdamped.size(), traj.limit.size());
  for (std::size_t j = 0; j < rows; ++j) {
    const ExtendedState& u = traj.underdamped[j];
    const ExtendedState& l = traj.limit[j];
    os << format_double(traj.dt * static_cast<double>(j));
    for (int i = 0; i < n; ++i) os << ',' << (u.cemetery ? "" : format_double(u.x[i]));
    for (int i = 0; i < n; ++i) os << ',' << (u.cemetery ? "" : format_double(u.v[i]));
    for (int i = 0; i < n; ++i) os << ',' << (l.cemetery ? "" : format_double(l.x[i]));
    os << ',' << (u.cemetery ? 1 : 0) << ',' << (l.cemetery ? 1 : 0) << '\n';
  }
}

}  // namespace kramers
