#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "kramers/config.hpp"
#include "kramers/errors.hpp"
#include "kramers/integrators.hpp"
#include "kramers/lyapunov.hpp"
#include "kramers/models.hpp"
#include "test_support.hpp"

using namespace kramers;
using kramers::testing::vec;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Model constant_coefficient_model(Matrix gamma, Matrix sigma, Vector force) {
  Model m;
  m.name = "fixed";
  m.n = static_cast<int>(gamma.rows());
  m.k = static_cast<int>(sigma.cols());
  m.force = [force](const Vector&) { return force; };
  m.friction = [gamma](const Vector&) { return gamma; };
  m.diffusion = [sigma](const Vector&) { return sigma; };
  m.domain = Domain::all_space(m.n);
  const int n = m.n;
  m.friction_gradient = [n](const Vector&) { return MatrixGradient::zero(n, n, n); };
  return m;
}

// Truncated Taylor series on a / 2^s with ||a / 2^s|| < 1/4, then squaring.
Matrix taylor_exp(const Matrix& a) {
  int squarings = 0;
  double norm = a.norm();
  while (norm > 0.25) {
    norm *= 0.5;
    ++squarings;
  }
  const Matrix b = a / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int j = 1; j < 20; ++j) {
    term = term * b / static_cast<double>(j);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Simpson rule for a matrix-valued integrand on [0, dt].
template <class F>
Matrix integrate(F f, double dt) {
  const int intervals = 2000;
  const double h = dt / intervals;
  Matrix sum = f(0.0) * 0.0;
  for (int j = 0; j <= intervals; ++j) {
    const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    sum += w * f(h * j);
  }
  return sum * (h / 3.0);
}

const Vector kNoBridge1 = Vector::Zero(1);
const Vector kNoBridge2 = Vector::Zero(2);

}  // namespace

TEST_CASE("extended metric") {
  auto a = ExtendedState::in_domain(vec({0.0, 0.0}));
  auto b = ExtendedState::in_domain(vec({3.0, 4.0}));
  CHECK(d_infinity(a, b) == doctest::Approx(5.0));
  CHECK(d_infinity(a, a) == 0.0);
  CHECK(d_infinity(a, ExtendedState::dead()) == kInfinity);
  CHECK(d_infinity(ExtendedState::dead(), b) == kInfinity);
  CHECK(d_infinity(ExtendedState::dead(), ExtendedState::dead()) == kInfinity);
}

TEST_CASE("noise stream is reproducible and path-specific") {
  NoiseStream a(7, 3, 2, 0.01), b(7, 3, 2, 0.01), c(7, 4, 2, 0.01), d(8, 3, 2, 0.01);
  for (int i = 0; i < 100; ++i) {
    Vector x = a.next(), y = b.next(), z = c.next(), w = d.next();
    CHECK(x == y);
    CHECK(x != z);
    CHECK(x != w);
  }
  NoiseStream e(1, 0, 1, 0.25);
  double sum = 0.0, sq = 0.0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double x = e.next()[0];
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / count) < 4.0 * 0.5 / std::sqrt(count));
  CHECK(sq / count == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("free velocity decays exactly") {
  Model m = constant_model({.n = 1, .gamma = 2.0, .sigma = 0.0, .stiffness = 0.0});
  auto s = ExtendedState::in_domain(vec({0.0}), vec({1.5}));
  auto next = step_underdamped(m, s, 0.1, 0.01, vec({0.3}), vec({-0.8}));
  CHECK(next.v[0] == doctest::Approx(1.5 * std::exp(-0.2)).epsilon(1e-15));
  CHECK(next.x[0] == doctest::Approx((1.5 - next.v[0]) * 0.1 / 2.0).epsilon(1e-13));

  Model m2 = constant_model({.n = 2, .gamma = 2.0, .sigma = 0.0, .stiffness = 0.0});
  auto s2 = ExtendedState::in_domain(vec({0.0, 1.0}), vec({1.5, -1.0}));
  auto next2 = step_underdamped(m2, s2, 0.1, 0.01, vec({0.3, -0.2}), vec({1.0, 1.0}));
  CHECK((next2.v - s2.v * std::exp(-0.2)).norm() < 1e-14);
}

TEST_CASE("underdamped step matches an independent frozen-coefficient solution") {
  const Matrix gamma = mat2(2.0, 0.5, -0.3, 1.5);
  const Matrix sigma = mat2(1.0, 0.2, 0.0, 0.8);
  const Vector force = vec({1.0, -2.0});
  Model model = constant_coefficient_model(gamma, sigma, force);
  const Matrix inv = gamma.inverse();
  const auto state = ExtendedState::in_domain(vec({0.2, -0.1}), vec({0.7, 0.4}));

  for (double m : {0.05, 1e-3}) {
    const double dt = 0.01;
    INFO("m = " << m);
    // Kernels of the stochastic integrals  v: int K_v(u) dB_u,  x: int K_x(u) dB_u.
    auto kv = [&](double u) { return Matrix(taylor_exp(-gamma * ((dt - u) / m)) * sigma / m); };
    auto kx = [&](double u) {
      return Matrix(inv * (Matrix::Identity(2, 2) - taylor_exp(-gamma * ((dt - u) / m))) * sigma);
    };
    const Matrix cov_vv = integrate([&](double u) { return Matrix(kv(u) * kv(u).transpose()); }, dt);
    const Matrix cov_xx = integrate([&](double u) { return Matrix(kx(u) * kx(u).transpose()); }, dt);
    const Matrix cov_xv = integrate([&](double u) { return Matrix(kx(u) * kv(u).transpose()); }, dt);
    const Matrix cov_vb = integrate(kv, dt);
    const Matrix cov_xb = integrate(kx, dt);

    const Matrix e = taylor_exp(-gamma * (dt / m));
    const Vector mean_v = e * state.v + inv * (Matrix::Identity(2, 2) - e) * force;
    const Vector mean_x = state.x + inv * (force * dt - m * (mean_v - state.v));
    const auto base = step_underdamped(model, state, m, dt, kNoBridge2, kNoBridge2);
    CHECK((base.v - mean_v).norm() < 1e-10 * (1.0 + mean_v.norm()));
    CHECK((base.x - mean_x).norm() < 1e-13);

    // Linear responses to dW and to the independent bridge normals.
    Matrix bv(2, 2), bx(2, 2), zv(2, 2), zx(2, 2);
    for (int j = 0; j < 2; ++j) {
      Vector unit = Vector::Zero(2);
      unit[j] = 1.0;
      const auto w = step_underdamped(model, state, m, dt, unit, kNoBridge2);
      bv.col(j) = w.v - base.v;
      bx.col(j) = w.x - base.x;
      const auto z = step_underdamped(model, state, m, dt, kNoBridge2, unit);
      zv.col(j) = z.v - base.v;
      zx.col(j) = z.x - base.x;
    }
    const double tol = 1e-8;
    CHECK((bv * dt - cov_vb).norm() <= tol * cov_vb.norm());
    CHECK((bx * dt - cov_xb).norm() <= tol * cov_xb.norm());
    CHECK((bv * bv.transpose() * dt + zv * zv.transpose() - cov_vv).norm() <= tol * cov_vv.norm());
    CHECK((bx * bx.transpose() * dt + zx * zx.transpose() - cov_xx).norm() <= tol * cov_xx.norm());
    CHECK((bx * bv.transpose() * dt + zx * zv.transpose() - cov_xv).norm() <= tol * cov_xv.norm());
  }
}

TEST_CASE("small mass step approaches the limiting Euler step") {
  const Matrix gamma = mat2(2.0, 0.5, -0.3, 1.5);
  const Matrix sigma = mat2(1.0, 0.2, 0.0, 0.8);
  Model model = constant_coefficient_model(gamma, sigma, vec({1.0, -2.0}));
  const Vector dw = vec({0.03, -0.05});
  const Vector bridge = vec({0.4, 1.2});
  const auto limit = step_overdamped(model, ExtendedState::in_domain(vec({0.2, -0.1})), 1e-3, dw);
  double previous = kInfinity;
  for (double m : {1e-4, 1e-6, 1e-8}) {
    const auto s = ExtendedState::in_domain(vec({0.2, -0.1}), vec({0.0, 0.0}));
    const double gap = (step_underdamped(model, s, m, 1e-3, dw, bridge).x - limit.x).norm();
    CHECK(gap < 0.2 * previous);
    previous = gap;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("small mass step keeps the noise-induced drift of varying friction") {
  for (const char* name : {"wall-gravity", "dlvo-pair"}) {
    Model model = make_model(name);
    const Vector x0 = default_initial_position(model) + Vector::Constant(model.n, 0.05 * (model.n == 1 ? -2.0 : 1.0));
    const Vector dw = Vector::Constant(model.k, 0.01);
    const Vector bridge = Vector::Constant(model.n, 0.3);
    const auto limit = step_overdamped(model, ExtendedState::in_domain(x0), 1e-3, dw);
    const Vector zero = Vector::Zero(model.n);
    const double no_noise_gap =
        (step_underdamped(model, ExtendedState::in_domain(x0, zero), 1e-12, 1e-3, dw, bridge).x - limit.x).norm();
    INFO(name);
    CHECK(no_noise_gap < 1e-5);
    // dropping S would leave a gap of order |S| dt
    CHECK(noise_induced_drift(model, x0).norm() * 1e-3 > 100.0 * no_noise_gap);
  }
}

TEST_CASE("scalar bridge variance is accurate across rates") {
  Model one = constant_model({.n = 1, .gamma = 2.0, .sigma = 1.0, .stiffness = 0.0});
  const auto s = ExtendedState::in_domain(vec({0.0}), vec({0.0}));
  for (double m : {10.0, 1.0, 0.2, 0.02, 1e-4}) {
    const double dt = 0.01;
    const double zr = step_underdamped(one, s, m, dt, vec({0.0}), vec({1.0})).v[0];
    const double br = step_underdamped(one, s, m, dt, vec({1.0}), vec({0.0})).v[0];
    const double cov_vv = 0.25 / m * -std::expm1(-4.0 * dt / m);
    INFO("m = " << m);
    CHECK(zr * zr + br * br * dt == doctest::Approx(cov_vv).epsilon(1e-9));
    CHECK(zr >= 0.0);
  }
}

TEST_CASE("one-dimensional fast path agrees with the matrix path") {
  Model one = constant_model({.n = 1, .gamma = 3.0, .sigma = 1.7, .stiffness = 2.0});
  Model two = constant_model({.n = 2, .gamma = 3.0, .sigma = 1.7, .stiffness = 2.0});
  for (double m : {1.0, 1e-2, 1e-4}) {
    auto a = step_underdamped(one, ExtendedState::in_domain(vec({0.4}), vec({-1.0})), m, 1e-3, vec({0.02}),
                              vec({0.7}));
    auto b = step_underdamped(two, ExtendedState::in_domain(vec({0.4, 0.4}), vec({-1.0, -1.0})), m, 1e-3,
                              vec({0.02, 0.02}), vec({0.7, 0.7}));
    CHECK(a.v[0] == doctest::Approx(b.v[0]).epsilon(1e-12));
    CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-12));
  }
}

TEST_CASE("stationary velocity variance is J / m") {
  Model model = constant_model({.n = 1, .gamma = 2.0, .sigma = 1.0, .stiffness = 0.0});
  const double m = 1.0, dt = 0.1;
  NoiseStream noise(11, 0, 1, dt);
  auto s = ExtendedState::in_domain(vec({0.0}), vec({0.0}));
  double sq = 0.0;
  const int burn = 1000, count = 400000;
  Vector dw, z;
  for (int i = 0; i < burn + count; ++i) {
    noise.next(dw);
    noise.next_standard(z, 1);
    s = step_underdamped(model, s, m, dt, dw, z);
    if (i >= burn) sq += s.v[0] * s.v[0];
  }
  CHECK(sq / count == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("zero noise and degenerate noise") {
  Model quiet = constant_coefficient_model(mat2(2.0, 0.1, 0.1, 1.0), Matrix::Zero(2, 2), vec({0.5, 0.5}));
  auto s = ExtendedState::in_domain(vec({0.0, 0.0}), vec({0.0, 0.0}));
  auto a = step_underdamped(quiet, s, 0.1, 0.01, vec({1.0, -1.0}), vec({2.0, 3.0}));
  auto b = step_underdamped(quiet, s, 0.1, 0.01, kNoBridge2, kNoBridge2);
  CHECK((a.v - b.v).norm() < 1e-15);
  CHECK((a.x - b.x).norm() < 1e-15);

  // rank-one sigma: only the first coordinate is forced
  Model degenerate = constant_coefficient_model(Matrix::Identity(2, 2), mat2(1.0, 0.0, 0.0, 0.0), vec({0.0, 0.0}));
  auto c = step_underdamped(degenerate, s, 0.1, 0.01, vec({0.1, 0.1}), vec({1.0, 1.0}));
  CHECK(c.v[0] != 0.0);
  CHECK(std::abs(c.v[1]) < 1e-12);
}

TEST_CASE("overdamped step without noise is the explicit Euler step") {
  Model m = constant_model({.n = 1, .gamma = 2.0, .sigma = 0.0, .stiffness = 4.0});
  auto next = step_overdamped(m, ExtendedState::in_domain(vec({1.0})), 0.01, vec({0.5}));
  CHECK(next.x[0] == doctest::Approx(1.0 - 2.0 * 0.01).epsilon(1e-15));
  CHECK(next.v.size() == 0);

  Model wall = wall_gravity_model({});
  const Vector mid = vec({0.5});
  auto w = step_overdamped(wall, ExtendedState::in_domain(mid), 1e-3, vec({0.0}));
  CHECK(w.x[0] == doctest::Approx(0.5 + wall.force(mid)[0] * 1e-3).epsilon(1e-15));
}

TEST_CASE("overdamped Euler-Maruyama reproduces the discrete OU moments") {
  // x_{j+1} = a x_j + b dW with a = 1 - (k/g) dt, b = s/g
  Model model = constant_model({.n = 1, .gamma = 1.0, .sigma = 1.0, .stiffness = 1.0});
  std::vector<double> bias;
  for (double dt : {0.1, 0.05}) {
    const std::size_t steps = grid_steps(1.0, dt);
    const double a = 1.0 - dt;
    const double mean = std::pow(a, static_cast<double>(steps));
    const double var = dt * (1.0 - std::pow(a, 2.0 * steps)) / (1.0 - a * a);
    const int paths = 20000;
    double s1 = 0.0, s2 = 0.0;
    for (int p = 0; p < paths; ++p) {
      NoiseStream noise(5, static_cast<std::uint64_t>(p), 1, dt);
      auto st = ExtendedState::in_domain(vec({1.0}));
      for (std::size_t j = 0; j < steps; ++j) st = step_overdamped(model, st, dt, noise.next());
      s1 += st.x[0];
      s2 += st.x[0] * st.x[0];
    }
    const double m1 = s1 / paths, m2 = s2 / paths;
    CHECK(std::abs(m1 - mean) < 4.0 * std::sqrt(var / paths));
    CHECK(std::abs(m2 - (mean * mean + var)) < 4.0 * std::sqrt(2.0 * var * var + 4.0 * mean * mean * var) / std::sqrt(paths));
    const double exact = std::exp(-2.0) + 0.5 * (1.0 - std::exp(-2.0));
    bias.push_back(std::abs(mean * mean + var - exact));
  }
  CHECK(bias[0] / bias[1] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("coupled simulation is deterministic and records the grid") {
  Model wall = wall_gravity_model({});
  auto a = simulate_coupled(wall, vec({0.5}), Vector(), 1e-2, 0.05, 1e-4, 7, 12);
  auto b = simulate_coupled(wall, vec({0.5}), Vector(), 1e-2, 0.05, 1e-4, 7, 12);
  CHECK(a.steps == 500);
  CHECK(a.underdamped.size() == 501);
  CHECK(a.limit.size() == 501);
  CHECK(a.horizon() == doctest::Approx(0.05));
  CHECK(a.sup_distance == b.sup_distance);
  for (std::size_t j = 0; j < a.underdamped.size(); ++j) {
    CHECK(a.underdamped[j].x == b.underdamped[j].x);
    CHECK(a.limit[j].x == b.limit[j].x);
  }
  auto c = simulate_coupled(wall, vec({0.5}), Vector(), 1e-2, 0.05, 1e-4, 7, 13);
  CHECK(c.sup_distance != a.sup_distance);

  auto zero = simulate_coupled(wall, vec({0.5}), Vector(), 1e-2, 0.0, 1e-4, 7, 12);
  CHECK(zero.steps == 0);
  CHECK(zero.sup_distance == 0.0);
  CHECK(!zero.exit_time_m);
}

TEST_CASE("grid uses the rounded step count") {
  CHECK(grid_steps(1.0, 1e-5) == 100000);
  CHECK(grid_steps(0.3, 0.1) == 3);
  CHECK_THROWS_AS(grid_steps(1.0, 0.0), DomainError);
}

TEST_CASE("noiseless coupling shrinks with the mass") {
  Model model = constant_model({.n = 1, .gamma = 1.0, .sigma = 0.0, .stiffness = 1.0});
  double previous = kInfinity;
  for (double m : {1e-1, 1e-2, 1e-3}) {
    auto t = simulate_coupled(model, vec({1.0}), Vector(), m, 1.0, 1e-4, 1, 0, false);
    CHECK(t.sup_distance < previous);
    previous = t.sup_distance;
  }
  CHECK(previous < 2e-3);
}

TEST_CASE("leaving the domain sends the state to the cemetery for good") {
  Model wall = wall_gravity_model({});
  auto t = simulate_coupled(wall, vec({0.5}), vec({-1e3}), 1.0, 0.01, 1e-3, 3, 0);
  REQUIRE(t.exit_time_m);
  CHECK(*t.exit_time_m == doctest::Approx(1e-3));
  CHECK(t.sup_distance == kInfinity);
  CHECK(!t.exit_time_limit);
  for (std::size_t j = 1; j < t.underdamped.size(); ++j) CHECK(t.underdamped[j].cemetery);

  std::ostringstream os;
  write_trajectory_csv(os, t, 1);
  std::istringstream is(os.str());
  std::string header, first, second;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, second);
  CHECK(header == "t,x_1,v_1,x_lim_1,exited_m,exited_lim");
  CHECK(first.rfind("0,0.5,-1000,0.5,0,0", 0) == 0);
  CHECK(second.rfind("0.001,,,", 0) == 0);
  CHECK(second.substr(second.size() - 4) == ",1,0");
}

TEST_CASE("mass ladder equals per-mass coupled simulation") {
  Model wall = wall_gravity_model({});
  const std::vector<double> masses{1e-1, 1e-2, 1e-3};
  for (std::uint64_t path : {0u, 1u, 2u}) {
    auto ladder = simulate_mass_ladder(wall, vec({0.3}), Vector(), masses, 0.02, 1e-5, 9, path);
    REQUIRE(ladder.masses.size() == masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) {
      auto single = simulate_coupled(wall, vec({0.3}), Vector(), masses[i], 0.02, 1e-5, 9, path, false);
      CHECK(ladder.masses[i].sup_distance == single.sup_distance);
      CHECK(ladder.masses[i].exit_time == single.exit_time_m);
      CHECK(ladder.limit_exit_time == single.exit_time_limit);
    }
  }
}

TEST_CASE("non-finite coefficients abort the path with a diagnostic") {
  Model model = constant_model({.n = 1, .gamma = 1.0, .sigma = 0.0, .stiffness = 0.0});
  model.force = [](const Vector& x) { return Vector(Vector::Constant(1, x[0] > 2.0 ? std::nan("") : 10.0)); };
  auto t = simulate_coupled(model, vec({1.9}), Vector(), 1e-2, 1.0, 1e-3, 1, 0, false);
  CHECK(t.aborted);
  CHECK(t.diagnostic.find("non-finite") != std::string::npos);

  const std::vector<double> masses{1e-1, 1e-2};
  auto ladder = simulate_mass_ladder(model, vec({1.9}), Vector(), masses, 1.0, 1e-3, 1, 0);
  CHECK(ladder.limit_aborted);
  for (const auto& mo : ladder.masses) CHECK(mo.aborted);

  auto s = ExtendedState::in_domain(vec({3.0}), vec({0.0}));
  CHECK_THROWS_AS(step_underdamped(model, s, 1.0, 1e-3, kNoBridge1, kNoBridge1), NonFinite);
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-5) == "1e-05");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
