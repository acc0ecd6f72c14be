#include "kramers/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/linalg.hpp"

namespace kramers {

namespace {

constexpr int kMaxKron = kMaxDim * kMaxDim;
using KronMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxKron, kMaxKron>;
using KronVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxKron, 1>;

double lyapunov_residual(const Matrix& gamma, const Matrix& J, const Matrix& rhs) {
  return (gamma * J + J * gamma.transpose() - rhs).norm();
}

}  // namespace

LyapunovSolution solve_lyapunov(const Matrix& gamma, const Matrix& sigma_sq) {
  const Eigen::Index n = gamma.rows();
  if (gamma.cols() != n || sigma_sq.rows() != n || sigma_sq.cols() != n) {
    throw DomainError("solve_lyapunov: dimension mismatch");
  }
  if (!all_finite(gamma) || !all_finite(sigma_sq)) throw SingularSystem("solve_lyapunov: non-finite input");

  LyapunovSolution out;
  if (n == 1) {
    const double g = gamma(0, 0);
    if (!(std::abs(g) > 0.0) || !std::isfinite(sigma_sq(0, 0) / (2.0 * g))) {
      throw SingularSystem("solve_lyapunov: gamma = 0");
    }
    out.J = Matrix::Constant(1, 1, sigma_sq(0, 0) / (2.0 * g));
    out.residual_norm = std::abs(2.0 * g * out.J(0, 0) - sigma_sq(0, 0));
    return out;
  }

  // vec is column-major: entry (i, j) sits at i + n j.
  const Eigen::Index nn = n * n;
  KronMatrix kron = KronMatrix::Zero(nn, nn);
  KronVector rhs(nn);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = i + n * j;
      rhs[row] = sigma_sq(i, j);
      for (Eigen::Index p = 0; p < n; ++p) {
        kron(row, p + n * j) += gamma(i, p);
        kron(row, i + n * p) += gamma(j, p);
      }
    }
  }
  Eigen::PartialPivLU<KronMatrix> lu(kron);
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double rcond = std::min(lu.rcond(), pivots.minCoeff() / pivots.maxCoeff());
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "solve_lyapunov: Kronecker system singular (rcond " << rcond << ")";
    throw SingularSystem(os.str());
  }
  KronVector sol = lu.solve(rhs);
  // One step of iterative refinement keeps the residual at roundoff level
  // for badly scaled gamma.
  sol += lu.solve(rhs - kron * sol);

  out.J = Eigen::Map<const Matrix>(sol.data(), n, n);
  out.J = symmetric_part(out.J);
  out.residual_norm = lyapunov_residual(gamma, out.J, sigma_sq);
  return out;
}

LyapunovSolution integral_lyapunov(const Matrix& gamma, const Matrix& sigma_sq, double horizon, double step) {
  const Eigen::Index n = gamma.rows();
  if (!(step > 0.0) || !(horizon > 0.0)) throw DomainError("integral_lyapunov: horizon and step must be positive");
  const double tail = expm(-horizon * gamma).norm();
  if (!(tail < 1e-12)) {
    std::ostringstream os;
    os << "integral_lyapunov: ||exp(-T gamma)|| = " << tail << " at T = " << horizon;
    throw HorizonTooShort(os.str());
  }
  auto intervals = static_cast<long>(std::ceil(horizon / step));
  if (intervals % 2 != 0) ++intervals;
  const double h = horizon / static_cast<double>(intervals);

  // exp(-t gamma) on the grid by repeated multiplication with exp(-h gamma).
  const Matrix prop = expm(-h * gamma);
  Matrix e = Matrix::Identity(n, n);
  Matrix sum = Matrix::Zero(n, n);
  for (long j = 0; j <= intervals; ++j) {
    const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    sum.noalias() += w * (e * sigma_sq * e.transpose());
    e = prop * e;
  }
  LyapunovSolution out;
  out.J = symmetric_part(sum * (h / 3.0));
  out.residual_norm = lyapunov_residual(gamma, out.J, sigma_sq);
  return out;
}

Matrix friction_inverse(const Matrix& gamma) {
  const Eigen::Index n = gamma.rows();
  if (gamma.cols() != n) throw DomainError("friction_inverse: gamma must be square");
  if (n == 1) {
    const double g = gamma(0, 0);
    if (!(std::abs(g) > 0.0) || !std::isfinite(g) || !std::isfinite(1.0 / g)) {
      throw SingularSystem("friction_inverse: singular friction");
    }
    return Matrix::Constant(1, 1, 1.0 / g);
  }
  if (!all_finite(gamma)) throw SingularSystem("friction_inverse: non-finite friction");
  Eigen::PartialPivLU<Matrix> lu(gamma);
  Matrix inv = lu.inverse();
  const double cond = gamma.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(cond) || cond > 1e14) {
    std::ostringstream os;
    os << "friction_inverse: condition number " << cond << " exceeds 1e14";
    throw SingularSystem(os.str());
  }
  return inv;
}

double default_fd_step(const Vector& x) { return 1e-5 * (1.0 + x.norm()); }

MatrixGradient grad_friction_inverse(const Model& model, const Vector& x, double h, GradientMode mode) {
  const int n = model.n;
  MatrixGradient out;
  out.dim = n;
  if (mode == GradientMode::Auto && model.friction_gradient) {
    const Matrix inv = friction_inverse(model.friction(x));
    const MatrixGradient dgamma = (*model.friction_gradient)(x);
    for (int l = 0; l < n; ++l) out.slices[l] = -inv * dgamma.slices[l] * inv;
    return out;
  }

  if (!(h > 0.0)) throw DomainError("grad_friction_inverse: step must be positive");
  if (model.domain.has_boundary() && !(model.domain.boundary_distance(x) > h)) {
    std::ostringstream os;
    os << "grad_friction_inverse: boundary distance " << model.domain.boundary_distance(x)
       << " does not exceed step " << h;
    throw BoundaryTooClose(os.str());
  }
  for (int l = 0; l < n; ++l) {
    Vector xp = x;
    Vector xm = x;
    xp[l] += h;
    xm[l] -= h;
    out.slices[l] = (friction_inverse(model.friction(xp)) - friction_inverse(model.friction(xm))) / (2.0 * h);
  }
  return out;
}

MatrixGradient grad_friction_inverse(const Model& model, const Vector& x) {
  return grad_friction_inverse(model, x, default_fd_step(x));
}

Vector contract_drift(const MatrixGradient& grad_inverse, const Matrix& J) {
  const int n = grad_inverse.dim;
  Vector s = Vector::Zero(n);
  for (int l = 0; l < n; ++l) s.noalias() += grad_inverse.slices[l] * J.col(l);
  return s;
}

Vector noise_induced_drift(const Model& model, const Vector& x) {
  const Matrix sigma = model.diffusion(x);
  const LyapunovSolution lyap = solve_lyapunov(model.friction(x), sigma * sigma.transpose());
  return contract_drift(grad_friction_inverse(model, x), lyap.J);
}

}  // namespace kramers
