#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

namespace kramers {

// Spatial dimension n and noise dimension k are both capped at this value.
inline constexpr int kMaxDim = 4;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Derivative of a matrix-valued field: slices[l](i, j) = d/dx_l M_ij(x).
struct MatrixGradient {
  int dim = 0;
  std::array<Matrix, kMaxDim> slices;

  static MatrixGradient zero(int n, int rows, int cols) {
    MatrixGradient g;
    g.dim = n;
    for (int l = 0; l < n; ++l) g.slices[l] = Matrix::Zero(rows, cols);
    return g;
  }
};

using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;
using MatrixGradientField = std::function<MatrixGradient(const Vector&)>;

}  // namespace kramers
