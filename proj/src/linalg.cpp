#include "mrisk/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace mrisk {

namespace {

template <class Scalar>
bool negligible(const Scalar& x, const Scalar& scale) {
  if constexpr (ScalarTraits<Scalar>::exact) {
    return sgn(x) == 0;
  } else {
    return std::abs(x) <= 1e-12 * std::max(1.0, scale);
  }
}

// Reduced row echelon form in place; returns pivot column per pivot row.
template <class Scalar>
std::vector<int> rref(Matrix<Scalar>& m, std::vector<Scalar>& rhs, const Scalar& scale) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(m[0].size());
  std::vector<int> pivots;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int best = -1;
    for (int i = r; i < rows; ++i) {
      if (negligible(m[i][c], scale)) continue;
      if (best < 0 || abs_value(m[i][c]) > abs_value(m[best][c])) best = i;
    }
    if (best < 0) continue;
    std::swap(m[r], m[best]);
    std::swap(rhs[r], rhs[best]);
    Scalar inv = Scalar(1) / m[r][c];
    for (int j = c; j < cols; ++j) m[r][j] *= inv;
    rhs[r] *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || negligible(m[i][c], scale)) continue;
      Scalar f = m[i][c];
      for (int j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
      rhs[i] -= f * rhs[r];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace

template <class Scalar>
std::vector<Scalar> min_norm_solve(const Matrix<Scalar>& a, const std::vector<Scalar>& b,
                                   int* rank) {
  const int n = static_cast<int>(b.size());
  Scalar scale(0);
  for (const auto& row : a)
    for (const auto& v : row) scale = std::max<Scalar>(scale, abs_value(v));
  Matrix<Scalar> m = a;
  std::vector<Scalar> rhs = b;
  auto pivots = rref(m, rhs, scale);
  if (rank) *rank = static_cast<int>(pivots.size());

  std::vector<Scalar> x(n, Scalar(0));
  std::vector<bool> is_pivot(n, false);
  for (size_t r = 0; r < pivots.size(); ++r) {
    x[pivots[r]] = rhs[r];
    is_pivot[pivots[r]] = true;
  }
  if (static_cast<int>(pivots.size()) == n) return x;

  // Kernel basis: one vector per free column.
  Matrix<Scalar> kernel;
  for (int f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Scalar> z(n, Scalar(0));
    z[f] = 1;
    for (size_t r = 0; r < pivots.size(); ++r) z[pivots[r]] = -m[r][f];
    kernel.push_back(std::move(z));
  }
  const int k = static_cast<int>(kernel.size());
  Matrix<Scalar> gram(k, std::vector<Scalar>(k, Scalar(0)));
  std::vector<Scalar> proj(k, Scalar(0));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < n; ++l) gram[i][j] += kernel[i][l] * kernel[j][l];
    for (int l = 0; l < n; ++l) proj[i] += kernel[i][l] * x[l];
  }
  Scalar gscale(1);
  auto gp = rref(gram, proj, gscale);
  (void)gp;  // kernel vectors are independent, so gram is invertible
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < n; ++l) x[l] -= proj[i] * kernel[i][l];
  return x;
}

template std::vector<Rational> min_norm_solve(const Matrix<Rational>&, const std::vector<Rational>&,
                                              int*);
template std::vector<double> min_norm_solve(const Matrix<double>&, const std::vector<double>&, int*);

}  // namespace mrisk
