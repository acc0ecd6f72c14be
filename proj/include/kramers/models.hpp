#pragma once

#include <optional>

#include "kramers/model.hpp"

namespace kramers {

/// Builds gamma(x) = kBT / D(q(x)) I_n and sigma(x) = sqrt(2 kBT^2 / D(q(x))) I_n,
/// so sigma sigma^T = 2 kBT gamma. The closed-form d gamma/dx comes from D'.
/// Throws DomainMismatch if D is not positive and finite on sampled points.
Model from_fluctuation_dissipation(const DiffusionProfile& profile, const ReducedCoordinate& coordinate,
                                   VectorField force, const Domain& domain, int n);

// D(x) = D_max sin^2(pi (x - a) / (b - a)); vanishes at both walls with its
// only critical point at the midpoint.
DiffusionProfile builtin_diffusion_model1(double a, double b, double d_max = 1.0, double kBT = 1.0);

// D(d) = D_SE (1 - exp(-alpha d)): D(0) = 0, D' > 0, D'' < 0, D -> D_SE.
DiffusionProfile builtin_diffusion_pair(double d_se = 1.0, double alpha = 1.0, double kBT = 1.0);

// D(s) = D0 (1 - s/C^2)(1 + beta s/C^2) in s = r^2; decreasing and concave
// on [0, C^2] for 0 < beta < 1, zero at s = C^2.
DiffusionProfile builtin_diffusion_pore(double c_radius, double d0 = 1.0, double beta = 0.5, double kBT = 1.0);

struct WallGravityParams {
  double a = 0.0;
  double b = 1.0;
  double B = 5.0;
  double kappa = 10.0;
  double lambda = 100.0;
  double G_eff = 1.0;
  double kBT = 1.0;
  double D_max = 1.0;
};

// Particle in a vertical cylinder: double-layer repulsion from both walls,
// effective gravity and soft walls,
//   U(x) = B/kappa e^{-kappa(x-a)} + B/kappa e^{-kappa(b-x)} + G_eff x
//        + e^{-lambda(x-a)}/(x-a) + e^{-lambda(b-x)}/(b-x).
Model wall_gravity_model(const WallGravityParams& p, std::optional<DiffusionProfile> profile = std::nullopt);

struct DlvoPairParams {
  double k_spring = 0.1;
  double c = 1.0;
  double l = 0.5;
  double kBT = 1.0;
  double D_SE = 1.0;
  double alpha = 1.0;
};

// Two particles on a line, x1 < x2, in a shallow common trap with a
// screened-Coulomb interaction:
//   U = k/2 (x1^2 + x2^2) + c e^{-d/l} / d,  d = x2 - x1.
Model dlvo_pair_model(const DlvoPairParams& p, std::optional<DiffusionProfile> profile = std::nullopt);

struct RotationalPoreParams {
  double C = 1.0;
  double B = 5.0;
  double kappa = 10.0;
  double Omega = 1.0;
  double kBT = 1.0;
  double D0 = 1.0;
  double beta = 0.5;
};

// Particle in a circular pore of radius C with radial potential
// U = B / (kappa (C^2 - r^2)) e^{-kappa (C^2 - r^2)} and the non-conservative
// rotational force gamma(x) Omega (-x2, x1).
Model rotational_pore_model(const RotationalPoreParams& p, std::optional<DiffusionProfile> profile = std::nullopt);

struct ConstantParams {
  int n = 1;
  double gamma = 1.0;
  double sigma = 1.0;
  double stiffness = 1.0;
};

// gamma = g I, sigma = s I, F = -k x on all of R^n.
Model constant_model(const ConstantParams& p);

// gamma^{-1} F + S
Vector limiting_drift(const Model& model, const Vector& x);
// gamma^{-1} sigma
Matrix limiting_diffusion(const Model& model, const Vector& x);

}  // namespace kramers
