#pragma once

#include <vector>

#include "mrisk/scalar.hpp"

namespace mrisk {

template <class Scalar>
using Matrix = std::vector<std::vector<Scalar>>;

/// Minimum-norm solution of A x = b for a small symmetric positive
/// semidefinite A.  Free directions of a singular A are removed by projecting
/// the particular solution onto the orthogonal complement of ker A.
/// Returns the rank through `rank` when non-null.
template <class Scalar>
std::vector<Scalar> min_norm_solve(const Matrix<Scalar>& a, const std::vector<Scalar>& b,
                                   int* rank = nullptr);

}  // namespace mrisk
