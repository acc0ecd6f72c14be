#include "kramers/model.hpp"

#include <algorithm>
#include <limits>

#include "kramers/linalg.hpp"

namespace kramers {

ReducedCoordinate ReducedCoordinate::identity1d() {
  return {[](const Vector& x) { return x[0]; }, [](const Vector&) { return Vector::Ones(1); }};
}

ModelCheck check_model(const Model& model, std::size_t points) {
  ModelCheck check;
  check.min_friction_eigenvalue = std::numeric_limits<double>::infinity();
  for (const Vector& x : model.domain.lattice(points)) {
    ++check.points;
    const Matrix gamma = model.friction(x);
    const Matrix sigma = model.diffusion(x);
    const Vector force = model.force(x);
    if (!all_finite(gamma) || !all_finite(sigma) || !all_finite(force)) {
      ++check.nonfinite_failures;
      continue;
    }
    const double lam = min_symmetric_eigenvalue(gamma);
    check.min_friction_eigenvalue = std::min(check.min_friction_eigenvalue, lam);
    if (!(lam > 0.0)) ++check.friction_failures;
  }
  return check;
}

}  // namespace kramers
