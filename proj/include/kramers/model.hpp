#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kramers/domain.hpp"
#include "kramers/types.hpp"

namespace kramers {

// Scalar diffusion coefficient D(q) of a reduced coordinate q (the position
// itself in 1D, a separation, or a squared radius) at temperature kBT.
struct DiffusionProfile {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double kBT = 1.0;
};

// q(x) together with its gradient; feeds a DiffusionProfile.
struct ReducedCoordinate {
  ScalarField value;
  VectorField gradient;

  static ReducedCoordinate identity1d();
};

struct LyapunovCandidate {
  ScalarField value;
  VectorField gradient;
  MatrixField hessian;
};

// Coefficient bundle for  dx = v dt,  m dv = [F - gamma v] dt + sigma dB
// on an open domain.
struct Model {
  std::string name;
  int n = 1;  // position dimension
  int k = 1;  // noise dimension

  VectorField force;
  MatrixField friction;   // n x n, positive definite on the domain
  MatrixField diffusion;  // n x k
  Domain domain = Domain::all_space(1);

  // d gamma / d x_l, if known in closed form.
  std::optional<MatrixGradientField> friction_gradient;
  std::optional<LyapunovCandidate> lyapunov;

  // Present for models built from a fluctuation-dissipation relation.
  std::optional<DiffusionProfile> profile;
  std::optional<ReducedCoordinate> profile_coordinate;

  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> warnings;
};

struct ModelCheck {
  std::size_t points = 0;
  std::size_t friction_failures = 0;
  std::size_t nonfinite_failures = 0;
  double min_friction_eigenvalue = 0.0;
  bool ok() const { return friction_failures == 0 && nonfinite_failures == 0; }
};

// Spot-checks positive-definite friction and finite coefficients on a
// lattice of `points` domain points.
ModelCheck check_model(const Model& model, std::size_t points = 1000);

}  // namespace kramers
