#include "mrisk/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "mrisk/error.hpp"
#include "mrisk/linalg.hpp"

namespace mrisk {

template <class Scalar>
Process<Scalar> integrate(const Process<Scalar>& h, const Process<Scalar>& x) {
  Process<Scalar> out(x.horizon(), x.outcomes(), Tag::Adapted);
  for (int t = 1; t <= x.horizon(); ++t)
    for (int w = 0; w < x.outcomes(); ++w) out.at(t, w) = out(t - 1, w) + h(t, w) * x.delta(t, w);
  return out;
}

template <class Scalar>
Process<Scalar> integrate(const Process<Scalar>& h, const Process<Scalar>& x,
                          const Filtration& filtration) {
  if (h.horizon() != x.horizon() || h.outcomes() != x.outcomes()) {
    throw InputError("integrate: integrand and integrator have different shapes");
  }
  auto hv = find_measurability_violation(h, Tag::Predictable, filtration);
  if (hv.found) {
    throw InputError("integrate: integrand is not predictable (t=" + std::to_string(hv.t) + ")");
  }
  auto xv = find_measurability_violation(x, Tag::Adapted, filtration);
  if (xv.found) {
    throw InputError("integrate: integrator is not adapted (t=" + std::to_string(xv.t) + ")");
  }
  return integrate(h, x);
}

template <class Scalar>
Process<Scalar> integrate(const std::vector<Process<Scalar>>& h,
                          const std::vector<Process<Scalar>>& x) {
  if (h.size() != x.size() || x.empty()) throw InputError("integrate: dimension mismatch");
  Process<Scalar> out = integrate(h[0], x[0]);
  for (size_t i = 1; i < x.size(); ++i) out = out + integrate(h[i], x[i]);
  out.set_tag(Tag::Adapted);
  return out;
}

template <class Scalar>
Process<Scalar> bracket(const Process<Scalar>& x, const Process<Scalar>& y) {
  Process<Scalar> out(x.horizon(), x.outcomes(), Tag::Adapted);
  for (int t = 1; t <= x.horizon(); ++t)
    for (int w = 0; w < x.outcomes(); ++w)
      out.at(t, w) = out(t - 1, w) + x.delta(t, w) * y.delta(t, w);
  return out;
}

template <class Scalar>
Process<Scalar> dual_projection(const FilteredSpace<Scalar>& space, const Process<Scalar>& v,
                                Projection mode, const Filtration& filtration) {
  Process<Scalar> out(v.horizon(), v.outcomes(),
                      mode == Projection::Optional ? Tag::Adapted : Tag::Predictable);
  for (int t = 1; t <= v.horizon(); ++t) {
    int s = mode == Projection::Optional ? t : t - 1;
    auto inc = conditional_expectation(space, filtration, v.delta(t), s);
    for (int w = 0; w < v.outcomes(); ++w) out.at(t, w) = out(t - 1, w) + inc[w];
  }
  return out;
}

template <class Scalar>
Process<Scalar> angle_bracket(const FilteredSpace<Scalar>& space, const Process<Scalar>& x,
                              const Process<Scalar>& y, const Filtration& filtration) {
  return dual_projection(space, bracket(x, y), Projection::Predictable, filtration);
}

template <class Scalar>
MartingaleDiagnostic is_martingale(const FilteredSpace<Scalar>& space, const Process<Scalar>& x,
                                   const Filtration& filtration) {
  MartingaleDiagnostic d;
  Scalar scale(0);
  for (const auto& v : x.values()) scale = std::max<Scalar>(scale, abs_value(v));
  for (int t = 1; t <= x.horizon(); ++t) {
    const Partition& part = filtration[t - 1];
    auto means = atom_means(space, part, x.delta(t));
    for (int a = 0; a < part.size(); ++a) {
      double dev = ScalarTraits<Scalar>::to_double(abs_value(means[a]));
      if (!is_zero(means[a], scale)) {
        d.ok = false;
      }
      if (dev > d.worst || (d.t < 0 && !is_zero(means[a], scale))) {
        d.worst = dev;
        d.t = t;
        d.atom = a;
      }
    }
  }
  return d;
}

template <class Scalar>
MartingaleDiagnostic are_orthogonal(const FilteredSpace<Scalar>& space, const Process<Scalar>& m,
                                    const Process<Scalar>& n, const Filtration& filtration) {
  return is_martingale(space, bracket(m, n), filtration);
}

template <class Scalar>
Process<Scalar> density_ratio(const FilteredSpace<Scalar>& space, const Process<Scalar>& a,
                              const Process<Scalar>& b, const Filtration& filtration) {
  const int n = a.horizon();
  const int outcomes = a.outcomes();
  Process<Scalar> out(n, outcomes, Tag::Predictable);
  Slice<Scalar> cross(outcomes), square(outcomes);
  for (int t = 1; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) {
      Scalar db = b.delta(t, w);
      cross[w] = a.delta(t, w) * db;
      square[w] = db * db;
    }
    const Partition& part = filtration[t - 1];
    auto num = atom_means(space, part, cross);
    auto den = atom_means(space, part, square);
    for (int at = 0; at < part.size(); ++at) {
      Scalar ratio(0);
      if (!ScalarTraits<Scalar>::is_zero_prob(den[at])) ratio = num[at] / den[at];
      for (int w : part.atoms[at]) out.at(t, w) = ratio;
    }
  }
  return out;
}

template <class Scalar>
GkwParts<Scalar> gkw(const FilteredSpace<Scalar>& space, const Process<Scalar>& m,
                     const std::vector<Process<Scalar>>& x, const Filtration& filtration,
                     GkwOptions options) {
  const int n = m.horizon();
  const int outcomes = m.outcomes();
  const int d = static_cast<int>(x.size());
  if (d == 0) throw InputError("gkw: no integrators");
  if (options.check_martingales) {
    auto dm = is_martingale(space, m, filtration);
    if (!dm.ok) {
      throw ValidationError("gkw: claim process is not a martingale (t=" + std::to_string(dm.t) +
                            ", atom=" + std::to_string(dm.atom) + ")");
    }
    for (int i = 0; i < d; ++i) {
      auto dx = is_martingale(space, x[i], filtration);
      if (!dx.ok) {
        throw ValidationError("gkw: integrator " + std::to_string(i) +
                              " is not a martingale (t=" + std::to_string(dx.t) + ")");
      }
    }
  }
  const int last = options.last_step < 0 ? n : std::min(options.last_step, n);

  GkwParts<Scalar> parts;
  parts.integrand.assign(d, Process<Scalar>(n, outcomes, Tag::Predictable));
  parts.residual = Process<Scalar>(n, outcomes, Tag::Adapted);

  std::vector<Slice<Scalar>> dx(d, Slice<Scalar>(outcomes));
  Slice<Scalar> dm(outcomes), prod(outcomes);
  for (int t = 1; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) dm[w] = m.delta(t, w);
    for (int i = 0; i < d; ++i)
      for (int w = 0; w < outcomes; ++w) dx[i][w] = x[i].delta(t, w);

    if (t <= last) {
      const Partition& part = filtration[t - 1];
      // Conditional Gram matrix and right-hand side per atom.
      std::vector<Matrix<Scalar>> gram(part.size(), Matrix<Scalar>(d, std::vector<Scalar>(d)));
      std::vector<std::vector<Scalar>> rhs(part.size(), std::vector<Scalar>(d));
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
          for (int w = 0; w < outcomes; ++w) prod[w] = dx[i][w] * dx[j][w];
          auto means = atom_means(space, part, prod);
          for (int a = 0; a < part.size(); ++a) {
            gram[a][i][j] = means[a];
            gram[a][j][i] = means[a];
          }
        }
        for (int w = 0; w < outcomes; ++w) prod[w] = dx[i][w] * dm[w];
        auto means = atom_means(space, part, prod);
        for (int a = 0; a < part.size(); ++a) rhs[a][i] = means[a];
      }
      for (int a = 0; a < part.size(); ++a) {
        std::vector<Scalar> theta;
        if (d == 1) {
          theta.assign(1, Scalar(0));
          if (!ScalarTraits<Scalar>::is_zero_prob(gram[a][0][0])) theta[0] = rhs[a][0] / gram[a][0][0];
        } else {
          theta = min_norm_solve(gram[a], rhs[a]);
        }
        for (int w : part.atoms[a])
          for (int i = 0; i < d; ++i) parts.integrand[i].at(t, w) = theta[i];
      }
    }
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc = dm[w];
      for (int i = 0; i < d; ++i) inc -= parts.integrand[i](t, w) * dx[i][w];
      parts.residual.at(t, w) = parts.residual(t - 1, w) + inc;
    }
  }
  return parts;
}

#define MRISK_INSTANTIATE_CALCULUS(S)                                                            \
  template Process<S> integrate(const Process<S>&, const Process<S>&);                           \
  template Process<S> integrate(const Process<S>&, const Process<S>&, const Filtration&);        \
  template Process<S> integrate(const std::vector<Process<S>>&, const std::vector<Process<S>>&); \
  template Process<S> bracket(const Process<S>&, const Process<S>&);                             \
  template Process<S> dual_projection(const FilteredSpace<S>&, const Process<S>&, Projection,    \
                                      const Filtration&);                                        \
  template Process<S> angle_bracket(const FilteredSpace<S>&, const Process<S>&,                  \
                                    const Process<S>&, const Filtration&);                       \
  template MartingaleDiagnostic is_martingale(const FilteredSpace<S>&, const Process<S>&,        \
                                              const Filtration&);                                \
  template MartingaleDiagnostic are_orthogonal(const FilteredSpace<S>&, const Process<S>&,       \
                                               const Process<S>&, const Filtration&);            \
  template Process<S> density_ratio(const FilteredSpace<S>&, const Process<S>&,                  \
                                    const Process<S>&, const Filtration&);                       \
  template GkwParts<S> gkw(const FilteredSpace<S>&, const Process<S>&,                           \
                           const std::vector<Process<S>>&, const Filtration&, GkwOptions);

MRISK_INSTANTIATE_CALCULUS(Rational)
MRISK_INSTANTIATE_CALCULUS(double)

}  // namespace mrisk
