#pragma once

#include "kramers/types.hpp"

namespace kramers {

// Matrix exponential by scaling and squaring with a diagonal (6,6) Pade
// approximant. Intended for the small matrices used here (n <= 4).
Matrix expm(const Matrix& a);

Matrix symmetric_part(const Matrix& a);

// Smallest eigenvalue of (a + a^T) / 2.
double min_symmetric_eigenvalue(const Matrix& a);

bool is_positive_definite(const Matrix& a);

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

}  // namespace kramers
