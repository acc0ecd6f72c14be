#include "kramers/linalg.hpp"

#include <array>
#include <cmath>

namespace kramers {

namespace {

// c_j = (2q - j)! q! / ((2q)! j! (q - j)!) for q = 6.
constexpr std::array<double, 7> kPade6 = {
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
};

}  // namespace

Matrix expm(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n == 1) {
    Matrix out(1, 1);
    out(0, 0) = std::exp(a(0, 0));
    return out;
  }
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = a / std::ldexp(1.0, squarings);

  const Matrix ident = Matrix::Identity(n, n);
  Matrix power = ident;
  Matrix numer = Matrix::Zero(n, n);
  Matrix denom = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < kPade6.size(); ++j) {
    numer += kPade6[j] * power;
    denom += ((j % 2 == 0) ? 1.0 : -1.0) * kPade6[j] * power;
    power = power * scaled;
  }
  Matrix result = denom.partialPivLu().solve(numer);
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Matrix symmetric_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_symmetric_eigenvalue(const Matrix& a) {
  if (a.rows() == 1) return a(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric_part(a), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_positive_definite(const Matrix& a) {
  return a.rows() == a.cols() && all_finite(a) && min_symmetric_eigenvalue(a) > 0.0;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace kramers
