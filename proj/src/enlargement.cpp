#include "mrisk/enlargement.hpp"

#include <algorithm>
#include <utility>

#include "mrisk/error.hpp"

namespace mrisk {

std::string time_label(int t, int horizon) {
  return t > horizon ? std::string("beyond") : std::to_string(t);
}

bool AssumptionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

template <class Scalar>
Filtration enlarge_filtration(const FilteredSpace<Scalar>& space, const RandomTime& tau) {
  Filtration g;
  g.reserve(space.horizon() + 1);
  for (int t = 0; t <= space.horizon(); ++t) {
    const Partition& f = space.partition(t);
    g.push_back(Partition::from_keys(space.size(), [&](int w) {
      return std::pair<int, int>(f.atom_of[w], tau.tau[w] <= t ? tau.tau[w] : -1);
    }));
  }
  return g;
}

template <class Scalar>
EnlargementBundle<Scalar> azema_bundle(std::shared_ptr<const FilteredSpace<Scalar>> space,
                                       const RandomTime& tau) {
  const int n = space->horizon();
  const int outcomes = space->size();
  if (tau.size() != outcomes || tau.horizon != n) {
    throw InputError("random time does not match the space");
  }
  for (int w = 0; w < outcomes; ++w) {
    if (tau.tau[w] < 1 || tau.tau[w] > n + 1) {
      throw InputError("random time out of range at outcome " + std::to_string(w));
    }
  }
  EnlargementBundle<Scalar> b;
  b.space = space;
  b.tau = tau;
  b.g_filtration = enlarge_filtration(*space, tau);

  Process<Scalar> survive(n, outcomes), at_risk(n, outcomes);
  b.D = Process<Scalar>(n, outcomes, Tag::Raw);
  for (int t = 0; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) {
      survive.at(t, w) = tau.tau[w] > t ? 1 : 0;
      at_risk.at(t, w) = tau.tau[w] >= t ? 1 : 0;
      b.D.at(t, w) = tau.tau[w] <= t ? 1 : 0;
    }
  const Filtration& f = space->filtration();
  b.G = project(*space, survive, Projection::Optional, f);
  b.Gtilde = project(*space, at_risk, Projection::Optional, f);
  b.DoF = dual_projection(*space, b.D, Projection::Optional, f);
  b.m = b.G + b.DoF;
  b.m.set_tag(Tag::Adapted);

  b.NG = Process<Scalar>(n, outcomes, Tag::Adapted);
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc = tau.tau[w] == t ? Scalar(1) : Scalar(0);
      if (t <= tau.tau[w]) {
        if (ScalarTraits<Scalar>::is_zero_prob(b.Gtilde(t, w))) {
          throw InvariantError("G~ vanishes on an outcome that is still at risk");
        }
        inc -= b.DoF.delta(t, w) / b.Gtilde(t, w);
      }
      b.NG.at(t, w) = b.NG(t - 1, w) + inc;
    }

  b.R.assign(outcomes, n + 1);
  b.Rtilde.assign(outcomes, n + 1);
  for (int w = 0; w < outcomes; ++w) {
    for (int t = 0; t <= n; ++t) {
      if (ScalarTraits<Scalar>::is_zero_prob(b.G(t, w))) {
        b.R[w] = t;
        break;
      }
    }
    int r = b.R[w];
    if (r >= 1 && r <= n && ScalarTraits<Scalar>::is_zero_prob(b.Gtilde(r, w)) &&
        !ScalarTraits<Scalar>::is_zero_prob(b.G(r - 1, w))) {
      b.Rtilde[w] = r;
    }
  }
  return b;
}

template <class Scalar>
Process<Scalar> hat_transform(const Process<Scalar>& m, const EnlargementBundle<Scalar>& bundle,
                              bool check) {
  const auto& space = bundle.sp();
  const int n = bundle.horizon();
  const int outcomes = bundle.outcomes();
  if (check) {
    auto d = is_martingale(space, m, bundle.f_filtration());
    if (!d.ok) {
      throw ValidationError("hat_transform: input is not an F-martingale (t=" +
                            std::to_string(d.t) + ", atom=" + std::to_string(d.atom) + ")");
    }
  }
  Process<Scalar> out(n, outcomes, Tag::Adapted);
  out.set_slice(0, m.slice(0));
  Slice<Scalar> jump(outcomes);
  for (int t = 1; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) jump[w] = bundle.Rtilde[w] == t ? m.delta(t, w) : Scalar(0);
    auto correction = conditional_expectation(space, bundle.f_filtration(), jump, t - 1);
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc(0);
      if (bundle.at_risk(t, w)) {
        Scalar dm = m.delta(t, w);
        inc = dm - dm * bundle.m.delta(t, w) / bundle.Gtilde(t, w) + correction[w];
      }
      out.at(t, w) = out(t - 1, w) + inc;
    }
  }
  return out;
}

template <class Scalar>
AssumptionReport validate_model(const std::vector<Process<Scalar>>& assets,
                                const EnlargementBundle<Scalar>& bundle) {
  const auto& space = bundle.sp();
  const auto& f = bundle.f_filtration();
  const int n = bundle.horizon();
  const int outcomes = bundle.outcomes();
  AssumptionReport report;
  for (size_t i = 0; i < assets.size(); ++i) {
    const std::string suffix = assets.size() > 1 ? "[" + std::to_string(i) + "]" : "";
    AssumptionCheck mart;
    mart.name = "martingale" + suffix;
    auto d = is_martingale(space, assets[i], f);
    mart.pass = d.ok;
    mart.worst = d.worst;
    mart.t = d.t;
    mart.atom = d.atom;
    mart.detail = "E[dS | F_{t-1}] = 0";
    report.checks.push_back(mart);

    AssumptionCheck orth;
    orth.name = "orthogonal_to_m" + suffix;
    orth.detail = "<S, m>^F = 0";
    auto ab = angle_bracket(space, assets[i], bundle.m, f);
    Scalar scale(0);
    for (const auto& v : assets[i].values()) scale = std::max<Scalar>(scale, abs_value(v));
    for (int t = 1; t <= n; ++t) {
      for (int a = 0; a < f[t - 1].size(); ++a) {
        int w = f[t - 1].atoms[a].front();
        Scalar inc = ab.delta(t, w);
        double dev = ScalarTraits<Scalar>::to_double(abs_value(inc));
        if (!is_zero(inc, scale)) orth.pass = false;
        if (dev > orth.worst) {
          orth.worst = dev;
          orth.t = t;
          orth.atom = a;
        }
      }
    }
    report.checks.push_back(orth);

    AssumptionCheck jump;
    jump.name = "no_jump_on_Gtilde_zero" + suffix;
    jump.detail = "{dS != 0} and {G~ = 0 < G_-} are disjoint";
    for (int t = 1; t <= n && jump.pass; ++t) {
      for (int w = 0; w < outcomes; ++w) {
        Scalar ds = assets[i].delta(t, w);
        if (!is_zero(ds) && ScalarTraits<Scalar>::is_zero_prob(bundle.Gtilde(t, w)) &&
            !ScalarTraits<Scalar>::is_zero_prob(bundle.G(t - 1, w))) {
          jump.pass = false;
          jump.worst = ScalarTraits<Scalar>::to_double(abs_value(ds));
          jump.t = t;
          jump.atom = f[t].atom_of[w];
          break;
        }
      }
    }
    report.checks.push_back(jump);
  }
  return report;
}

template <class Scalar>
bool is_pseudo_stopping(const EnlargementBundle<Scalar>& bundle) {
  const Scalar& m0 = bundle.m(0, 0);
  for (const auto& v : bundle.m.values()) {
    Scalar d = v - m0;
    if (!is_zero(d, m0)) return false;
  }
  return true;
}

template <class Scalar>
bool is_independent(const EnlargementBundle<Scalar>& bundle) {
  const auto& space = bundle.sp();
  const int n = bundle.horizon();
  const Partition& last = space.partition(n);
  std::vector<Scalar> reference;
  for (int a = 0; a < last.size(); ++a) {
    std::vector<Scalar> law(n + 1, Scalar(0));
    Scalar mass(0);
    for (int w : last.atoms[a]) {
      law[bundle.tau.tau[w] - 1] += space.weight(w);
      mass += space.weight(w);
    }
    for (auto& v : law) v /= mass;
    if (a == 0) {
      reference = law;
      continue;
    }
    for (int k = 0; k <= n; ++k) {
      Scalar d = law[k] - reference[k];
      if (!is_zero(d)) return false;
    }
  }
  return true;
}

template <class Scalar>
Process<Scalar> survival_surface(const EnlargementBundle<Scalar>& bundle, int s) {
  const int n = bundle.horizon();
  if (s < 0 || s > n) throw InputError("survival_surface: s outside 0..N");
  Slice<Scalar> survive(bundle.outcomes());
  for (int w = 0; w < bundle.outcomes(); ++w) survive[w] = bundle.tau.tau[w] > s ? 1 : 0;
  return martingale_of(bundle.sp(), bundle.f_filtration(), survive);
}

template <class Scalar>
Process<Scalar> compensator_identity_check(const Process<Scalar>& v,
                                           const EnlargementBundle<Scalar>& bundle) {
  const auto& space = bundle.sp();
  const int n = bundle.horizon();
  const int outcomes = bundle.outcomes();
  Process<Scalar> residual(n, outcomes, Tag::Adapted);
  Slice<Scalar> lhs_inc(outcomes), rhs_inc(outcomes);
  for (int t = 1; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) {
      Scalar dv = v.delta(t, w);
      lhs_inc[w] = bundle.at_risk(t, w) ? dv : Scalar(0);
      rhs_inc[w] = bundle.Gtilde(t, w) * dv;
    }
    auto lhs = conditional_expectation(space, bundle.g_filtration, lhs_inc, t - 1);
    auto rhs = conditional_expectation(space, bundle.f_filtration(), rhs_inc, t - 1);
    for (int w = 0; w < outcomes; ++w) {
      Scalar diff(0);
      if (!ScalarTraits<Scalar>::is_zero_prob(bundle.G(t - 1, w))) {
        diff = lhs[w];
        if (bundle.at_risk(t, w)) diff -= rhs[w] / bundle.G(t - 1, w);
      }
      residual.at(t, w) = residual(t - 1, w) + diff;
    }
  }
  return residual;
}

#define MRISK_INSTANTIATE_ENLARGEMENT(S)                                                        \
  template Filtration enlarge_filtration(const FilteredSpace<S>&, const RandomTime&);           \
  template EnlargementBundle<S> azema_bundle(std::shared_ptr<const FilteredSpace<S>>,           \
                                             const RandomTime&);                                \
  template Process<S> hat_transform(const Process<S>&, const EnlargementBundle<S>&, bool);      \
  template AssumptionReport validate_model(const std::vector<Process<S>>&,                      \
                                           const EnlargementBundle<S>&);                        \
  template bool is_pseudo_stopping(const EnlargementBundle<S>&);                                \
  template bool is_independent(const EnlargementBundle<S>&);                                    \
  template Process<S> survival_surface(const EnlargementBundle<S>&, int);                       \
  template Process<S> compensator_identity_check(const Process<S>&, const EnlargementBundle<S>&);

MRISK_INSTANTIATE_ENLARGEMENT(Rational)
MRISK_INSTANTIATE_ENLARGEMENT(double)

}  // namespace mrisk
