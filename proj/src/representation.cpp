#include "mrisk/representation.hpp"

#include "mrisk/error.hpp"

namespace mrisk {

namespace {

int resolve_term(int term, int horizon) {
  if (term < 0) return horizon;
  if (term < 1 || term > horizon) {
    throw InputError("term " + std::to_string(term) + " outside 1.." + std::to_string(horizon));
  }
  return term;
}

}  // namespace

template <class Scalar>
Process<Scalar> death_leg_integral(const Process<Scalar>& h, const EnlargementBundle<Scalar>& bundle,
                                   int term) {
  const int n = bundle.horizon();
  term = resolve_term(term, n);
  Process<Scalar> out(n, bundle.outcomes(), Tag::Adapted);
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < bundle.outcomes(); ++w) {
      out.at(t, w) = out(t - 1, w);
      if (t <= term) out.at(t, w) += h(t, w) * bundle.DoF.delta(t, w);
    }
  return out;
}

template <class Scalar>
Process<Scalar> death_claim_martingale(const Process<Scalar>& h,
                                       const EnlargementBundle<Scalar>& bundle, int term) {
  require_measurable(h, Tag::Adapted, bundle.f_filtration(), "death benefit h");
  term = resolve_term(term, bundle.horizon());
  auto hd = death_leg_integral(h, bundle, term);
  return martingale_of(bundle.sp(), bundle.f_filtration(), hd.slice(bundle.horizon()));
}

template <class Scalar>
Process<Scalar> predictable_claim_martingale(const Process<Scalar>& h,
                                             const EnlargementBundle<Scalar>& bundle, int term) {
  require_measurable(h, Tag::Predictable, bundle.f_filtration(), "payoff process h");
  const int n = bundle.horizon();
  term = resolve_term(term, n);
  Slice<Scalar> total(bundle.outcomes(), Scalar(0));
  for (int t = 1; t <= term; ++t)
    for (int w = 0; w < bundle.outcomes(); ++w) total[w] -= h(t, w) * bundle.G.delta(t, w);
  return martingale_of(bundle.sp(), bundle.f_filtration(), total);
}

template <class Scalar>
Slice<Scalar> claim_payoff(const Process<Scalar>& h, const Slice<Scalar>& g,
                           const EnlargementBundle<Scalar>& bundle, int term) {
  Slice<Scalar> pay(bundle.outcomes(), Scalar(0));
  for (int w = 0; w < bundle.outcomes(); ++w) {
    int tau = bundle.tau.tau[w];
    if (tau <= term) {
      pay[w] = h(tau, w);
    } else if (!g.empty()) {
      pay[w] = g[w];
    }
  }
  return pay;
}

template <class Scalar>
Representation<Scalar> optional_representation(const Process<Scalar>& h,
                                               const EnlargementBundle<Scalar>& bundle, int term,
                                               const Slice<Scalar>& g) {
  const int n = bundle.horizon();
  const int outcomes = bundle.outcomes();
  term = resolve_term(term, n);
  const auto& space = bundle.sp();
  const auto& f = bundle.f_filtration();
  require_measurable(h, Tag::Adapted, f, "death benefit h");
  if (!g.empty()) {
    const Partition& part = f[term];
    for (const auto& atom : part.atoms)
      for (int w : atom)
        if (!is_zero(Scalar(g[w] - g[atom.front()]), g[atom.front()])) {
          throw ValidationError("survival benefit g is not F_T-measurable");
        }
  }

  Representation<Scalar> r;
  r.term = term;
  r.hD = death_leg_integral(h, bundle, term);
  Slice<Scalar> terminal = r.hD.slice(n);
  if (!g.empty()) {
    for (int w = 0; w < outcomes; ++w) terminal[w] += g[w] * bundle.G(term, w);
  }
  r.Mh = martingale_of(space, f, terminal);
  r.H = martingale_of(space, bundle.g_filtration, claim_payoff(h, g, bundle, term));

  auto mh_hat = hat_transform(r.Mh, bundle, false);
  auto m_hat = hat_transform(bundle.m, bundle, false);
  r.pure_financial = Process<Scalar>(n, outcomes, Tag::Adapted);
  r.correlation = Process<Scalar>(n, outcomes, Tag::Adapted);
  r.pure_mortality = Process<Scalar>(n, outcomes, Tag::Adapted);
  for (int t = 1; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) {
      Scalar a(0), b(0), c(0);
      if (t <= term) {
        if (bundle.at_risk(t, w)) {
          const Scalar& gm = bundle.G(t - 1, w);
          a = mh_hat.delta(t, w) / gm;
          b = -(r.Mh(t - 1, w) - r.hD(t - 1, w)) / (gm * gm) * m_hat.delta(t, w);
        }
        if (t < bundle.R[w]) {
          const Scalar& gt = bundle.G(t, w);
          c = (h(t, w) * gt - r.Mh(t, w) + r.hD(t, w)) / gt * bundle.NG.delta(t, w);
        }
      }
      r.pure_financial.at(t, w) = r.pure_financial(t - 1, w) + a;
      r.correlation.at(t, w) = r.correlation(t - 1, w) + b;
      r.pure_mortality.at(t, w) = r.pure_mortality(t - 1, w) + c;
    }
  }

  Process<Scalar> rebuilt = r.pure_financial + r.correlation + r.pure_mortality;
  Process<Scalar> target(n, outcomes);
  for (int t = 0; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) target.at(t, w) = r.H(t, w) - r.H(0, w);
  if (!equal_within(rebuilt, target)) {
    throw InvariantError("representation does not reconstruct H (max deviation " +
                         std::to_string(max_abs_difference(rebuilt, target)) + ")");
  }
  auto orth = are_orthogonal(space, r.pure_mortality, r.pure_financial + r.correlation,
                             bundle.g_filtration);
  if (!orth.ok) {
    throw InvariantError("pure mortality component is not orthogonal to the rest (t=" +
                         std::to_string(orth.t) + ")");
  }
  return r;
}

#define MRISK_INSTANTIATE_REPRESENTATION(S)                                                    \
  template Process<S> death_leg_integral(const Process<S>&, const EnlargementBundle<S>&, int); \
  template Process<S> death_claim_martingale(const Process<S>&, const EnlargementBundle<S>&,   \
                                             int);                                             \
  template Process<S> predictable_claim_martingale(const Process<S>&,                          \
                                                   const EnlargementBundle<S>&, int);          \
  template Slice<S> claim_payoff(const Process<S>&, const Slice<S>&,                           \
                                 const EnlargementBundle<S>&, int);                            \
  template Representation<S> optional_representation(const Process<S>&,                       \
                                                     const EnlargementBundle<S>&, int,         \
                                                     const Slice<S>&);

MRISK_INSTANTIATE_REPRESENTATION(Rational)
MRISK_INSTANTIATE_REPRESENTATION(double)

}  // namespace mrisk
