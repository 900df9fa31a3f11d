#pragma once

#include <vector>

#include "mrisk/space.hpp"

namespace mrisk {

/// (H.X)_t = sum_{s<=t} H_s (X_s - X_{s-1}), zero at t = 0.  The filtration
/// overload checks that H is predictable and X adapted.
template <class Scalar>
Process<Scalar> integrate(const Process<Scalar>& h, const Process<Scalar>& x);
template <class Scalar>
Process<Scalar> integrate(const Process<Scalar>& h, const Process<Scalar>& x,
                          const Filtration& filtration);

/// Inner-product integral over several integrators.
template <class Scalar>
Process<Scalar> integrate(const std::vector<Process<Scalar>>& h,
                          const std::vector<Process<Scalar>>& x);

/// [X,Y]_t = sum_{s<=t} dX_s dY_s.
template <class Scalar>
Process<Scalar> bracket(const Process<Scalar>& x, const Process<Scalar>& y);

/// Dual projection of a process with V_0 = 0: increments are conditioned on
/// the atoms at s (optional) or s-1 (predictable).
template <class Scalar>
Process<Scalar> dual_projection(const FilteredSpace<Scalar>& space, const Process<Scalar>& v,
                                Projection mode, const Filtration& filtration);

/// Compensator of [X,Y].
template <class Scalar>
Process<Scalar> angle_bracket(const FilteredSpace<Scalar>& space, const Process<Scalar>& x,
                              const Process<Scalar>& y, const Filtration& filtration);

struct MartingaleDiagnostic {
  bool ok = true;
  double worst = 0.0;  // largest |E[dX_t | atom at t-1]|
  int t = -1;
  int atom = -1;
};

template <class Scalar>
MartingaleDiagnostic is_martingale(const FilteredSpace<Scalar>& space, const Process<Scalar>& x,
                                   const Filtration& filtration);

/// Orthogonality of two martingales: [M,N] is a martingale.
template <class Scalar>
MartingaleDiagnostic are_orthogonal(const FilteredSpace<Scalar>& space, const Process<Scalar>& m,
                                    const Process<Scalar>& n, const Filtration& filtration);

/// d<A,B>/d<B> as the atomwise ratio E[dA dB | atom]/E[dB^2 | atom], with
/// 0/0 read as 0.  Predictable; zero at t = 0.
template <class Scalar>
Process<Scalar> density_ratio(const FilteredSpace<Scalar>& space, const Process<Scalar>& a,
                              const Process<Scalar>& b, const Filtration& filtration);

template <class Scalar>
struct GkwParts {
  std::vector<Process<Scalar>> integrand;  // one predictable process per integrator
  Process<Scalar> residual;                // starts at 0
};

struct GkwOptions {
  bool check_martingales = true;
  int last_step = -1;  // integrand vanishes after this step; -1 means N
};

/// M = M_0 + theta.X + L with <X_i, L> = 0, solving the conditional normal
/// equations on every (step, atom) and taking the minimum-norm solution when
/// the conditional Gram matrix is singular.
template <class Scalar>
GkwParts<Scalar> gkw(const FilteredSpace<Scalar>& space, const Process<Scalar>& m,
                     const std::vector<Process<Scalar>>& x, const Filtration& filtration,
                     GkwOptions options = {});

}  // namespace mrisk
