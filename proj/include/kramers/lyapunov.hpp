#pragma once

#include "kramers/model.hpp"
#include "kramers/types.hpp"

namespace kramers {

// J solving  gamma J + J gamma^T = sigma_sq, plus the Frobenius residual of
// that equation.
struct LyapunovSolution {
  Matrix J;
  double residual_norm = 0.0;
};

/// Solves the Lyapunov equation through its Kronecker vectorization
/// (I (x) gamma + gamma (x) I) vec(J) = vec(sigma_sq).
///
/// Throws SingularSystem when the n^2 x n^2 system is numerically singular,
/// which happens when gamma has eigenvalues summing to zero (in particular
/// when gamma is not positive definite).
LyapunovSolution solve_lyapunov(const Matrix& gamma, const Matrix& sigma_sq);

/// Quadrature of  J = int_0^inf exp(-t gamma) sigma_sq exp(-t gamma^T) dt
/// truncated at `horizon` with composite Simpson steps of size `step`.
/// Cross-check oracle for solve_lyapunov; throws HorizonTooShort unless
/// ||exp(-horizon gamma)|| < 1e-12.
LyapunovSolution integral_lyapunov(const Matrix& gamma, const Matrix& sigma_sq, double horizon, double step);

// Throws SingularSystem when the 1-norm condition number exceeds 1e14.
Matrix friction_inverse(const Matrix& gamma);

enum class GradientMode {
  Auto,              // closed form if the model provides d gamma / dx
  FiniteDifference,  // always central differences of gamma^{-1}
};

double default_fd_step(const Vector& x);

// slices[l] = d/dx_l gamma^{-1}(x). The closed-form path uses
// -gamma^{-1} (d gamma/dx_l) gamma^{-1}; the finite-difference path requires
// the boundary to be farther than h and throws BoundaryTooClose otherwise.
MatrixGradient grad_friction_inverse(const Model& model, const Vector& x, double h,
                                     GradientMode mode = GradientMode::Auto);
MatrixGradient grad_friction_inverse(const Model& model, const Vector& x);

// S_i(x) = sum_{j,l} d_l [gamma^{-1}]_ij J_jl  (Ito noise-induced drift).
Vector noise_induced_drift(const Model& model, const Vector& x);

// Same contraction with caller-supplied pieces; used by the integrators to
// avoid re-evaluating coefficients.
Vector contract_drift(const MatrixGradient& grad_inverse, const Matrix& J);

}  // namespace kramers
