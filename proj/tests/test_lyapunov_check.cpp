#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kramers/config.hpp"
#include "kramers/errors.hpp"
#include "kramers/integrators.hpp"
#include "kramers/lyapunov_check.hpp"
#include "kramers/models.hpp"
#include "test_support.hpp"

using namespace kramers;
using kramers::testing::vec;

namespace {

struct PairGenerator {
  double x1, x2, lu;
};

// L U for the default particle pair, exact to 20 digits.
constexpr PairGenerator kPairGenerator[] = {
    {-1.0, 1.0, 0.28646158627585352654},
    {0.3, 0.35, -14657.681774271337727},
    {0.0, 2.0, 0.26916829194058578038},
    {-2.5, -0.5, 0.24755167402150109768},
    {1.0, 4.0, 0.053066124061289646266},
};

LyapunovCandidate zero_candidate(int n) {
  return {[](const Vector&) { return 0.0; }, [n](const Vector&) { return Vector(Vector::Zero(n)); },
          [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); }};
}

// Mean one-step increment of V under the overdamped scheme, with antithetic
// noise so the O(sqrt(h)) term cancels.
double one_step_drift(const Model& model, const LyapunovCandidate& v, const Vector& x, double h, int pairs) {
  NoiseStream noise(21, 0, model.k, h);
  double sum = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vector dw = noise.next();
    const auto up = step_overdamped(model, ExtendedState::in_domain(x), h, dw);
    const auto down = step_overdamped(model, ExtendedState::in_domain(x), h, -dw);
    sum += 0.5 * (v.value(up.x) + v.value(down.x)) - v.value(x);
  }
  return sum / pairs / h;
}

}  // namespace

TEST_CASE("wall-gravity generator has the closed form (-U'^2/kT + U'') D + U' D'") {
  WallGravityParams p;
  p.kBT = 0.8;
  Model m = wall_gravity_model(p);
  auto d = builtin_diffusion_model1(p.a, p.b, p.D_max, p.kBT);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = vec({0.002 + 0.996 * unit(rng)});
    const double u1 = m.lyapunov->gradient(x)[0];
    const double u2 = m.lyapunov->hessian(x)(0, 0);
    const double dx = d.value(x[0]), ddx = d.derivative(x[0]);
    const double closed = (-u1 * u1 / p.kBT + u2) * dx + u1 * ddx;
    const double lu = apply_generator(m, *m.lyapunov, x);
    CHECK(lu == doctest::Approx(closed).epsilon(1e-8).scale(1.0));
    // the variant with 1/2 U'' differs by exactly U'' D / 2
    const double half = (-u1 * u1 / p.kBT + 0.5 * u2) * dx + u1 * ddx;
    CHECK(lu - half == doctest::Approx(0.5 * u2 * dx).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("particle-pair generator matches exact values") {
  Model m = dlvo_pair_model({});
  auto d = builtin_diffusion_pair();
  for (const auto& s : kPairGenerator) {
    const Vector x = vec({s.x1, s.x2});
    const double lu = apply_generator(m, *m.lyapunov, x);
    CHECK(lu == doctest::Approx(s.lu).epsilon(1e-11));

    // with (d1 + d2) U D' as the last term the result is off by -2 D' d1 U
    const Vector g = m.lyapunov->gradient(x);
    const Matrix h = m.lyapunov->hessian(x);
    const double dd = d.value(x[1] - x[0]), ddd = d.derivative(x[1] - x[0]);
    const double symmetric = -g.squaredNorm() * dd + h.trace() * dd + (g[0] + g[1]) * ddd;
    CHECK(lu - symmetric == doctest::Approx(-2.0 * ddd * g[0]).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("rotation drops out of the pore generator") {
  RotationalPoreParams spin;
  spin.Omega = 3.0;
  RotationalPoreParams still;
  still.Omega = 0.0;
  Model a = rotational_pore_model(spin), b = rotational_pore_model(still);
  for (const Vector& x : a.domain.lattice(200)) {
    CHECK(apply_generator(a, *a.lyapunov, x) ==
          doctest::Approx(apply_generator(b, *b.lyapunov, x)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("constant candidate is annihilated by the generator") {
  for (const auto& name : builtin_model_names()) {
    Model m = make_model(name);
    LyapunovCandidate one{[](const Vector&) { return 1.0; }, [n = m.n](const Vector&) { return Vector(Vector::Zero(n)); },
                          [n = m.n](const Vector&) { return Matrix(Matrix::Zero(n, n)); }};
    for (const Vector& x : m.domain.lattice(50)) CHECK(apply_generator(m, one, x) == 0.0);
  }
}

TEST_CASE("generator agrees with the one-step mean of the limiting scheme") {
  struct Case {
    const char* name;
    Vector x;
  };
  const std::vector<Case> cases{{"wall-gravity", vec({0.3})}, {"dlvo-pair", vec({-0.5, 0.8})},
                                {"rotational-pore", vec({0.3, -0.4})}, {"constant", vec({1.5})}};
  for (const auto& c : cases) {
    Model m = make_model(c.name);
    const double lu = apply_generator(m, *m.lyapunov, c.x);
    const double mc = one_step_drift(m, *m.lyapunov, c.x, 1e-6, 20000);
    INFO(c.name);
    CHECK(mc == doctest::Approx(lu).epsilon(0.02).scale(1.0));
  }
}

TEST_CASE("shell family is an increasing exhaustion") {
  for (const auto& name : builtin_model_names()) {
    Model m = make_model(name);
    ShellFamily shells(m.domain);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
      Vector x(m.n);
      for (int j = 0; j < m.n; ++j) x[j] = u(rng);
      if (!m.domain.contains(x)) continue;
      const long lvl = shells.level(x);
      CHECK(shells.contains(static_cast<int>(lvl), x));
      if (lvl > 1) CHECK(!shells.contains(static_cast<int>(lvl - 1), x));
      for (int k = 1; k < 64; k *= 2) {
        if (shells.contains(k, x)) CHECK(shells.contains(2 * k, x));
      }
    }
    for (int k : {2, 16, 256}) {
      for (const Vector& x : shells.sample_complement(k, 100)) {
        CHECK(m.domain.contains(x));
        CHECK(!shells.contains(k, x));
      }
    }
  }
}

TEST_CASE("sampling reports an unrepresentable complement") {
  ShellFamily far(Domain::interval(1e8, 1e8 + 1.0));
  CHECK_THROWS_AS(far.sample_complement(2000000000, 50), SamplingFailure);
  CHECK_THROWS_AS(far.sample_complement(0, 50), SamplingFailure);
}

TEST_CASE("built-in candidates satisfy both Lyapunov conditions") {
  for (const auto& name : builtin_model_names()) {
    Model m = make_model(name);
    auto report = check_lyapunov(m, *m.lyapunov);
    INFO(name);
    CHECK(report.p1.pass);
    CHECK(report.p2.pass);
    CHECK(report.p2.grid_points > 100);
    CHECK(report.p2.max_violation == 0.0);
    CHECK(report.p2.D >= 0.0);
    for (std::size_t i = 1; i < report.p1.shells.size(); ++i) {
      CHECK(report.p1.shells[i].min_value >= report.p1.shells[i - 1].min_value);
    }
  }
}

TEST_CASE("vanishing candidate fails the growth condition") {
  Model m = wall_gravity_model({});
  auto report = check_lyapunov(m, zero_candidate(1));
  CHECK(!report.p1.pass);
  CHECK(!report.pass());
}

TEST_CASE("explosive drift fails the generator bound") {
  // dx = x^2 dt with V = 1 + x^2
  Model m = constant_model({.n = 1, .gamma = 1.0, .sigma = 0.0, .stiffness = 0.0});
  m.force = [](const Vector& x) { return Vector(Vector::Constant(1, x[0] * x[0])); };
  LyapunovCandidate v{[](const Vector& x) { return 1.0 + x[0] * x[0]; },
                      [](const Vector& x) { return Vector(Vector::Constant(1, 2.0 * x[0])); },
                      [](const Vector&) { return Matrix(Matrix::Constant(1, 1, 2.0)); }};
  auto report = check_lyapunov(m, v);
  CHECK(report.p1.pass);
  CHECK(!report.p2.pass);
  CHECK(report.p2.max_violation > 0.0);
}

TEST_CASE("non-finite generator values fail the check") {
  Model m = constant_model({.n = 1});
  LyapunovCandidate v = *m.lyapunov;
  v.hessian = [](const Vector& x) { return Matrix(Matrix::Constant(1, 1, x[0] > 10.0 ? std::nan("") : 1.0)); };
  auto grid = default_p2_grid(m.domain);
  CHECK(!verify_p2(m, v, grid).pass);
}

TEST_CASE("report serialization") {
  Model m = make_model("constant");
  auto report = check_lyapunov(m, *m.lyapunov);
  auto j = to_json(report);
  CHECK(j["pass"].get<bool>());
  CHECK(j["p1"].size() == default_shells().size());
  CHECK(j["p1"][0]["k"] == 2);
  CHECK(j["p2"].contains("C"));
  CHECK(j["p2"].contains("D"));
  CHECK(j["p2"]["max_violation"] == 0.0);
}
