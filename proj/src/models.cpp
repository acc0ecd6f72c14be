#include "kramers/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "kramers/errors.hpp"
#include "kramers/lyapunov.hpp"

namespace kramers {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << name << " must be positive and finite (got " << value << ")";
    throw ParameterDomain(os.str());
  }
}

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << name << " must be finite";
    throw ParameterDomain(os.str());
  }
}

// e^{-lambda y} / y and its first two derivatives in y.
struct SoftWall {
  double lambda;
  double value(double y) const { return std::exp(-lambda * y) / y; }
  double d1(double y) const { return -std::exp(-lambda * y) * (lambda / y + 1.0 / (y * y)); }
  double d2(double y) const {
    return std::exp(-lambda * y) * (lambda * lambda / y + 2.0 * lambda / (y * y) + 2.0 / (y * y * y));
  }
};

}  // namespace

Model from_fluctuation_dissipation(const DiffusionProfile& profile, const ReducedCoordinate& coordinate,
                                   VectorField force, const Domain& domain, int n) {
  require_positive(profile.kBT, "kBT");
  if (n != domain.dim()) throw DomainMismatch("dimension of model and domain differ");
  for (const Vector& x : domain.lattice(200)) {
    const double q = coordinate.value(x);
    const double d = profile.value(q);
    if (!(d > 0.0) || !std::isfinite(d) || !std::isfinite(profile.derivative(q))) {
      std::ostringstream os;
      os << "diffusion profile is not positive and finite at an interior point (D = " << d << ")";
      throw DomainMismatch(os.str());
    }
  }

  const double kbt = profile.kBT;
  Model model;
  model.n = n;
  model.k = n;
  model.domain = domain;
  model.force = std::move(force);
  model.profile = profile;
  model.profile_coordinate = coordinate;

  auto value = profile.value;
  auto deriv = profile.derivative;
  auto q = coordinate.value;
  auto dq = coordinate.gradient;
  model.friction = [=](const Vector& x) -> Matrix {
    return Matrix::Identity(n, n) * (kbt / value(q(x)));
  };
  model.diffusion = [=](const Vector& x) -> Matrix {
    return Matrix::Identity(n, n) * std::sqrt(2.0 * kbt * kbt / value(q(x)));
  };
  model.friction_gradient = [=](const Vector& x) -> MatrixGradient {
    const double qx = q(x);
    const double d = value(qx);
    const double scale = -kbt * deriv(qx) / (d * d);
    const Vector grad = dq(x);
    MatrixGradient g;
    g.dim = n;
    for (int l = 0; l < n; ++l) g.slices[l] = Matrix::Identity(n, n) * (scale * grad[l]);
    return g;
  };
  return model;
}

DiffusionProfile builtin_diffusion_model1(double a, double b, double d_max, double kBT) {
  if (!(b > a)) throw ParameterDomain("diffusion profile requires a < b");
  require_positive(d_max, "D_max");
  const double w = std::numbers::pi / (b - a);
  DiffusionProfile p;
  p.kBT = kBT;
  p.value = [=](double x) {
    const double s = std::sin(w * (x - a));
    return d_max * s * s;
  };
  p.derivative = [=](double x) { return d_max * w * std::sin(2.0 * w * (x - a)); };
  return p;
}

DiffusionProfile builtin_diffusion_pair(double d_se, double alpha, double kBT) {
  require_positive(d_se, "D_SE");
  require_positive(alpha, "alpha");
  DiffusionProfile p;
  p.kBT = kBT;
  p.value = [=](double d) { return -d_se * std::expm1(-alpha * d); };
  p.derivative = [=](double d) { return d_se * alpha * std::exp(-alpha * d); };
  return p;
}

DiffusionProfile builtin_diffusion_pore(double c_radius, double d0, double beta, double kBT) {
  require_positive(c_radius, "C");
  require_positive(d0, "D0");
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterDomain("beta must lie in (0, 1)");
  const double c2 = c_radius * c_radius;
  DiffusionProfile p;
  p.kBT = kBT;
  p.value = [=](double s) { return d0 * (1.0 - s / c2) * (1.0 + beta * s / c2); };
  p.derivative = [=](double s) { return d0 / c2 * (beta - 1.0 - 2.0 * beta * s / c2); };
  return p;
}

Model wall_gravity_model(const WallGravityParams& p, std::optional<DiffusionProfile> profile) {
  if (!(p.a >= 0.0) || !(p.b > p.a) || !std::isfinite(p.b)) throw ParameterDomain("requires 0 <= a < b < inf");
  require_positive(p.B, "B");
  require_positive(p.kappa, "kappa");
  require_positive(p.lambda, "lambda");
  require_positive(p.kBT, "kBT");
  require_positive(p.D_max, "D_max");
  require_finite(p.G_eff, "G_eff");

  const double a = p.a, b = p.b, B = p.B, kappa = p.kappa, G = p.G_eff;
  const SoftWall wall{p.lambda};

  auto dU = [=](double x) {
    const double y1 = x - a, y2 = b - x;
    return -B * std::exp(-kappa * y1) + B * std::exp(-kappa * y2) + G + wall.d1(y1) - wall.d1(y2);
  };
  auto force = [=](const Vector& x) -> Vector { return Vector::Constant(1, -dU(x[0])); };

  DiffusionProfile prof = profile ? *profile : builtin_diffusion_model1(a, b, p.D_max, p.kBT);
  prof.kBT = p.kBT;
  Model model = from_fluctuation_dissipation(prof, ReducedCoordinate::identity1d(), force, Domain::interval(a, b), 1);
  model.name = "wall-gravity";

  LyapunovCandidate v;
  v.value = [=](const Vector& xv) {
    const double x = xv[0], y1 = x - a, y2 = b - x;
    return B / kappa * std::exp(-kappa * y1) + B / kappa * std::exp(-kappa * y2) + G * x + wall.value(y1) +
           wall.value(y2);
  };
  v.gradient = [=](const Vector& xv) -> Vector { return Vector::Constant(1, dU(xv[0])); };
  v.hessian = [=](const Vector& xv) -> Matrix {
    const double y1 = xv[0] - a, y2 = b - xv[0];
    return Matrix::Constant(1, 1,
                            B * kappa * std::exp(-kappa * y1) + B * kappa * std::exp(-kappa * y2) + wall.d2(y1) +
                                wall.d2(y2));
  };
  model.lyapunov = v;

  if (p.lambda < 10.0 * p.kappa) {
    model.warnings.push_back("lambda < 10 kappa: soft walls do not decay much faster than the double layer");
  }
  model.params = {{"a", p.a},         {"b", p.b},          {"B", p.B},     {"kappa", p.kappa},
                  {"lambda", p.lambda}, {"G_eff", p.G_eff}, {"kBT", p.kBT}, {"D_max", p.D_max}};
  return model;
}

Model dlvo_pair_model(const DlvoPairParams& p, std::optional<DiffusionProfile> profile) {
  require_positive(p.k_spring, "k_spring");
  require_positive(p.c, "c");
  require_positive(p.l, "l");
  require_positive(p.kBT, "kBT");
  const double k = p.k_spring, c = p.c, l = p.l;

  auto u_d = [=](double d) { return c * std::exp(-d / l) / d; };
  auto du_d = [=](double d) { return -c * std::exp(-d / l) * (1.0 / (l * d) + 1.0 / (d * d)); };
  auto d2u_d = [=](double d) {
    return c * std::exp(-d / l) * (1.0 / (l * l * d) + 2.0 / (l * d * d) + 2.0 / (d * d * d));
  };
  auto grad_u = [=](const Vector& x) -> Vector {
    const double dd = du_d(x[1] - x[0]);
    Vector g(2);
    g << k * x[0] - dd, k * x[1] + dd;
    return g;
  };

  ReducedCoordinate sep;
  sep.value = [](const Vector& x) { return x[1] - x[0]; };
  sep.gradient = [](const Vector&) -> Vector {
    Vector g(2);
    g << -1.0, 1.0;
    return g;
  };

  DiffusionProfile prof = profile ? *profile : builtin_diffusion_pair(p.D_SE, p.alpha, p.kBT);
  prof.kBT = p.kBT;
  Model model = from_fluctuation_dissipation(
      prof, sep, [=](const Vector& x) -> Vector { return -grad_u(x); }, Domain::half_plane_ordered(), 2);
  model.name = "dlvo-pair";

  LyapunovCandidate v;
  v.value = [=](const Vector& x) { return 0.5 * k * x.squaredNorm() + u_d(x[1] - x[0]); };
  v.gradient = grad_u;
  v.hessian = [=](const Vector& x) -> Matrix {
    const double h = d2u_d(x[1] - x[0]);
    Matrix m(2, 2);
    m << k + h, -h, -h, k + h;
    return m;
  };
  model.lyapunov = v;
  model.params = {{"k_spring", p.k_spring}, {"c", p.c},       {"l", p.l},
                  {"kBT", p.kBT},           {"D_SE", p.D_SE}, {"alpha", p.alpha}};
  return model;
}

Model rotational_pore_model(const RotationalPoreParams& p, std::optional<DiffusionProfile> profile) {
  require_positive(p.C, "C");
  require_positive(p.B, "B");
  require_positive(p.kappa, "kappa");
  require_positive(p.kBT, "kBT");
  require_finite(p.Omega, "Omega");
  const double c2 = p.C * p.C, B = p.B, kappa = p.kappa, omega = p.Omega, kbt = p.kBT;

  // Radial potential as a function of s = r^2, written in u = C^2 - s.
  auto pot = [=](double s) {
    const double u = c2 - s;
    return B / (kappa * u) * std::exp(-kappa * u);
  };
  auto dpot = [=](double s) {
    const double u = c2 - s;
    return B / kappa * std::exp(-kappa * u) * (kappa / u + 1.0 / (u * u));
  };
  auto d2pot = [=](double s) {
    const double u = c2 - s;
    return B / kappa * std::exp(-kappa * u) * (kappa * kappa / u + 2.0 * kappa / (u * u) + 2.0 / (u * u * u));
  };

  DiffusionProfile prof = profile ? *profile : builtin_diffusion_pore(p.C, p.D0, p.beta, p.kBT);
  prof.kBT = kbt;
  auto dval = prof.value;
  auto force = [=](const Vector& x) -> Vector {
    const double s = x.squaredNorm();
    const double g = kbt / dval(s);
    Vector f = -2.0 * dpot(s) * x;
    f[0] += -g * omega * x[1];
    f[1] += g * omega * x[0];
    return f;
  };

  ReducedCoordinate r2;
  r2.value = [](const Vector& x) { return x.squaredNorm(); };
  r2.gradient = [](const Vector& x) -> Vector { return 2.0 * x; };

  Model model = from_fluctuation_dissipation(prof, r2, force, Domain::disk(p.C), 2);
  model.name = "rotational-pore";

  LyapunovCandidate v;
  v.value = [=](const Vector& x) { return pot(x.squaredNorm()); };
  v.gradient = [=](const Vector& x) -> Vector { return 2.0 * dpot(x.squaredNorm()) * x; };
  v.hessian = [=](const Vector& x) -> Matrix {
    const double s = x.squaredNorm();
    return 2.0 * dpot(s) * Matrix::Identity(2, 2) + 4.0 * d2pot(s) * (x * x.transpose());
  };
  model.lyapunov = v;
  model.params = {{"C", p.C},     {"B", p.B},   {"kappa", p.kappa}, {"Omega", p.Omega},
                  {"kBT", p.kBT}, {"D0", p.D0}, {"beta", p.beta}};
  return model;
}

Model constant_model(const ConstantParams& p) {
  if (p.n < 1 || p.n > kMaxDim) throw ParameterDomain("n must lie in [1, 4]");
  require_positive(p.gamma, "gamma");
  if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) throw ParameterDomain("sigma must be nonnegative");
  require_finite(p.stiffness, "stiffness");
  const int n = p.n;
  const double g = p.gamma, s = p.sigma, k = p.stiffness;

  Model model;
  model.name = "constant";
  model.n = n;
  model.k = n;
  model.domain = Domain::all_space(n);
  model.force = [=](const Vector& x) -> Vector { return -k * x; };
  model.friction = [=](const Vector&) -> Matrix { return Matrix::Identity(n, n) * g; };
  model.diffusion = [=](const Vector&) -> Matrix { return Matrix::Identity(n, n) * s; };
  model.friction_gradient = [=](const Vector&) { return MatrixGradient::zero(n, n, n); };

  LyapunovCandidate v;
  v.value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  v.gradient = [](const Vector& x) -> Vector { return x; };
  v.hessian = [=](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  model.lyapunov = v;
  model.params = {{"n", p.n}, {"gamma", p.gamma}, {"sigma", p.sigma}, {"stiffness", p.stiffness}};
  return model;
}

Vector limiting_drift(const Model& model, const Vector& x) {
  const Matrix gamma = model.friction(x);
  const Matrix inv = friction_inverse(gamma);
  const Matrix sigma = model.diffusion(x);
  const LyapunovSolution lyap = solve_lyapunov(gamma, sigma * sigma.transpose());
  return inv * model.force(x) + contract_drift(grad_friction_inverse(model, x), lyap.J);
}

Matrix limiting_diffusion(const Model& model, const Vector& x) {
  return friction_inverse(model.friction(x)) * model.diffusion(x);
}

}  // namespace kramers
