#include "mrisk/hedging.hpp"

#include <algorithm>

#include "mrisk/calculus.hpp"
#include "mrisk/error.hpp"

namespace mrisk {

namespace {

template <class Scalar>
Process<Scalar> zeros(const EnlargementBundle<Scalar>& b, Tag tag = Tag::Adapted) {
  return Process<Scalar>(b.horizon(), b.outcomes(), tag);
}

// X frozen after `term`.
template <class Scalar>
Process<Scalar> stop_at(const Process<Scalar>& x, int term) {
  Process<Scalar> out = x;
  for (int t = term + 1; t <= x.horizon(); ++t) out.set_slice(t, x.slice(term));
  return out;
}

// t -> X_{t-1}, with X_0 kept at t = 0.
template <class Scalar>
Process<Scalar> lagged(const Process<Scalar>& x) {
  Process<Scalar> out(x.horizon(), x.outcomes(), Tag::Predictable);
  out.set_slice(0, x.slice(0));
  for (int t = 1; t <= x.horizon(); ++t) out.set_slice(t, x.slice(t - 1));
  return out;
}

template <class Scalar>
bool slice_measurable(const Slice<Scalar>& x, const Partition& part) {
  for (const auto& atom : part.atoms)
    for (int w : atom)
      if (!is_zero(Scalar(x[w] - x[atom.front()]), x[atom.front()])) return false;
  return true;
}

template <class Scalar>
void require_equal(const Process<Scalar>& a, const Process<Scalar>& b, const std::string& what) {
  if (!equal_within(a, b)) {
    throw InvariantError(what + " (max deviation " + std::to_string(max_abs_difference(a, b)) +
                         ")");
  }
}

template <class Scalar>
void require_model(const Process<Scalar>& asset, const EnlargementBundle<Scalar>& b) {
  auto report = validate_model(std::vector<Process<Scalar>>{asset}, b);
  if (report.all_pass()) return;
  std::string failed;
  for (const auto& c : report.checks) {
    if (c.pass) continue;
    if (!failed.empty()) failed += ", ";
    failed += c.name;
  }
  throw ValidationError("model assumptions fail: " + failed);
}

template <class Scalar>
Scalar probability(const EnlargementBundle<Scalar>& b, bool (*pred)(int, int), int t) {
  Scalar p(0);
  for (int w = 0; w < b.outcomes(); ++w)
    if (pred(b.tau.tau[w], t)) p += b.sp().weight(w);
  return p;
}

bool alive_after(int tau, int t) { return tau > t; }
bool alive_at(int tau, int t) { return tau >= t; }

// Coefficients of the M^h route: -(M_- - hD_-)/G_-^2 and (K G - M + hD)/G.
template <class Scalar>
std::pair<Process<Scalar>, Process<Scalar>> claim_coefficients(
    const Process<Scalar>& K, const Process<Scalar>& Mh, const Process<Scalar>& hD,
    const EnlargementBundle<Scalar>& b, int term) {
  Process<Scalar> mc = zeros(b, Tag::Predictable), nc = zeros(b);
  for (int t = 1; t <= std::min(term, b.horizon()); ++t)
    for (int w = 0; w < b.outcomes(); ++w) {
      const Scalar& gm = b.G(t - 1, w);
      if (!ScalarTraits<Scalar>::is_zero_prob(gm)) mc.at(t, w) = -(Mh(t - 1, w) - hD(t - 1, w)) / (gm * gm);
      const Scalar& g = b.G(t, w);
      if (!ScalarTraits<Scalar>::is_zero_prob(g)) nc.at(t, w) = (K(t, w) * g - Mh(t, w) + hD(t, w)) / g;
    }
  return {mc, nc};
}

template <class Scalar>
HedgeReport<Scalar> base_report(const Claim<Scalar>& claim, const Process<Scalar>& asset,
                                const EnlargementBundle<Scalar>& b) {
  HedgeReport<Scalar> r;
  r.asset_names = {"S"};
  r.assets = {stopped(asset, b.tau.tau)};
  r.H = martingale_of(b.sp(), b.g_filtration, claim.payoff(b));
  r.initial_capital = r.H(0, 0);
  return r;
}

// Death leg K.D^o and survival leg g G_T hedged separately and added.
template <class Scalar>
struct ClaimLegs {
  Process<Scalar> hD;
  FHedge<Scalar> death;
  FHedge<Scalar> survival;
  Process<Scalar> Mh, xiF, LF;
};

template <class Scalar>
ClaimLegs<Scalar> claim_legs(const Claim<Scalar>& claim, const Process<Scalar>& asset,
                             const EnlargementBundle<Scalar>& b) {
  const int n = b.horizon();
  const int term = claim.term;
  ClaimLegs<Scalar> legs;
  legs.hD = death_leg_integral(claim.death, b, term);
  legs.death = hedge_F(legs.hD.slice(n), asset, b.sp(), term);
  Slice<Scalar> gg(b.outcomes());
  for (int w = 0; w < b.outcomes(); ++w) gg[w] = claim.survival[w] * b.G(term, w);
  legs.survival = hedge_F(gg, asset, b.sp(), term);
  legs.Mh = legs.death.M + legs.survival.M;
  legs.xiF = legs.death.xi + legs.survival.xi;
  legs.LF = legs.death.L + legs.survival.L;
  return legs;
}

}  // namespace

template <class Scalar>
std::pair<Process<Scalar>, Process<Scalar>> transfer_to_G(
    const Process<Scalar>& xiF, const Process<Scalar>& LF, const Process<Scalar>& mhat_coef,
    const Process<Scalar>& ng_coef, const MortalityDrivers<Scalar>& drivers,
    const EnlargementBundle<Scalar>& b, int term) {
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  auto lf_hat = hat_transform(LF, b, false);
  Process<Scalar> xi = zeros(b, Tag::Predictable);
  Process<Scalar> L = zeros(b);
  for (int t = 1; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc(0);
      if (t <= term) {
        if (b.at_risk(t, w)) {
          const Scalar& gm = b.G(t - 1, w);
          Scalar denom = gm + drivers.phi(t, w);
          xi.at(t, w) = xiF(t, w) / denom;
          inc -= xiF(t, w) / gm / denom * drivers.L_hat.delta(t, w);
          inc += lf_hat.delta(t, w) / gm;
          inc += mhat_coef(t, w) * drivers.m_hat.delta(t, w);
        }
        if (t < b.R[w]) inc += ng_coef(t, w) * b.NG.delta(t, w);
      }
      L.at(t, w) = L(t - 1, w) + inc;
    }
  }
  return {xi, L};
}

// ---- claims ---------------------------------------------------------------

template <class Scalar>
Claim<Scalar> Claim<Scalar>::pure_endowment(int term, Slice<Scalar> g,
                                            const EnlargementBundle<Scalar>& b) {
  Claim c;
  c.term = term;
  c.survival = std::move(g);
  c.death = zeros(b);
  c.validate(b);
  return c;
}

template <class Scalar>
Claim<Scalar> Claim<Scalar>::term_insurance(int term, Process<Scalar> k,
                                            const EnlargementBundle<Scalar>& b) {
  return endowment(term, Slice<Scalar>(b.outcomes(), Scalar(0)), std::move(k), b);
}

template <class Scalar>
Claim<Scalar> Claim<Scalar>::endowment(int term, Slice<Scalar> g, Process<Scalar> k,
                                       const EnlargementBundle<Scalar>& b) {
  Claim c;
  c.term = term;
  c.survival = std::move(g);
  c.death = std::move(k);
  if (c.death.horizon() == b.horizon() && c.death.outcomes() == b.outcomes()) {
    for (int t = 0; t <= b.horizon(); ++t)
      if (t == 0 || t > term)
        for (int w = 0; w < b.outcomes(); ++w) c.death.at(t, w) = 0;
    c.death.set_tag(Tag::Adapted);
  }
  c.validate(b);
  return c;
}

template <class Scalar>
Claim<Scalar> Claim<Scalar>::annuity(int term, Process<Scalar> cp,
                                     const EnlargementBundle<Scalar>& b) {
  if (cp.horizon() != b.horizon() || cp.outcomes() != b.outcomes()) {
    throw InputError("annuity accumulator has the wrong shape");
  }
  if (term < 1 || term > b.horizon()) throw InputError("claim term outside 1..N");
  Claim c = endowment(term, cp.slice(term), cp, b);
  c.accumulator = std::move(cp);
  c.validate(b);
  return c;
}

template <class Scalar>
void Claim<Scalar>::validate(const EnlargementBundle<Scalar>& b) const {
  const int n = b.horizon();
  if (term < 1 || term > n) {
    throw InputError("claim term " + std::to_string(term) + " outside 1.." + std::to_string(n));
  }
  if (static_cast<int>(survival.size()) != b.outcomes()) {
    throw InputError("survival benefit has the wrong number of outcomes");
  }
  if (death.horizon() != n || death.outcomes() != b.outcomes()) {
    throw InputError("death benefit has the wrong shape");
  }
  if (!slice_measurable(survival, b.sp().partition(term))) {
    throw ValidationError("survival benefit is not F_T-measurable");
  }
  require_measurable(death, Tag::Adapted, b.f_filtration(), "death benefit");
  if (accumulator) {
    const auto& c = *accumulator;
    require_measurable(c, Tag::Adapted, b.f_filtration(), "annuity accumulator");
    for (int w = 0; w < b.outcomes(); ++w) {
      if (!is_zero(c(0, w))) throw InputError("annuity accumulator must start at 0");
      for (int t = 1; t <= n; ++t) {
        if (ScalarTraits<Scalar>::sign(Scalar(c(t, w) - c(t - 1, w)), c(t, w)) < 0) {
          throw InputError("annuity accumulator decreases at t=" + std::to_string(t));
        }
      }
    }
  }
}

template <class Scalar>
Slice<Scalar> Claim<Scalar>::payoff(const EnlargementBundle<Scalar>& b) const {
  return claim_payoff(death, survival, b, term);
}

template <class Scalar>
bool Claim<Scalar>::has_death_leg() const {
  for (int t = 1; t <= term; ++t)
    for (int w = 0; w < death.outcomes(); ++w)
      if (!is_zero(death(t, w))) return true;
  return false;
}

template <class Scalar>
bool Claim<Scalar>::has_survival_leg() const {
  return std::any_of(survival.begin(), survival.end(), [](const Scalar& x) { return !is_zero(x); });
}

// ---- F side ---------------------------------------------------------------

template <class Scalar>
FHedge<Scalar> hedge_F_martingale(const Process<Scalar>& m, const Process<Scalar>& asset,
                                  const FilteredSpace<Scalar>& space, int term) {
  FHedge<Scalar> out;
  out.M = stop_at(m, term);
  out.M.set_tag(Tag::Adapted);
  GkwOptions opts;
  opts.last_step = term;
  auto parts = gkw(space, out.M, std::vector<Process<Scalar>>{asset}, space.filtration(), opts);
  out.xi = parts.integrand[0];
  out.L = parts.residual;
  return out;
}

template <class Scalar>
FHedge<Scalar> hedge_F(const Slice<Scalar>& value, const Process<Scalar>& asset,
                       const FilteredSpace<Scalar>& space, int term) {
  if (term < 0 || term > space.horizon()) throw InputError("hedge_F: term outside 0..N");
  if (!slice_measurable(value, space.partition(term))) {
    throw ValidationError("hedge_F: claim value is not F_T-measurable");
  }
  return hedge_F_martingale(martingale_of(space, space.filtration(), value), asset, space, term);
}

template <class Scalar>
MortalityDrivers<Scalar> phi_m(const Process<Scalar>& asset, const EnlargementBundle<Scalar>& b) {
  require_model(asset, b);
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  const auto& f = b.f_filtration();
  MortalityDrivers<Scalar> d;
  d.U = zeros(b);
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc(0);
      if (!ScalarTraits<Scalar>::is_zero_prob(b.G(t - 1, w))) {
        inc = asset.delta(t, w) * b.m.delta(t, w);
      }
      d.U.at(t, w) = d.U(t - 1, w) + inc;
    }
  auto mart = is_martingale(b.sp(), d.U, f);
  if (!mart.ok) {
    throw InvariantError("U = [S, m] is not an F-martingale (t=" + std::to_string(mart.t) + ")");
  }
  auto parts = gkw(b.sp(), d.U, std::vector<Process<Scalar>>{asset}, f, {false, -1});
  d.phi = parts.integrand[0];
  d.L = parts.residual;
  d.S_hat = hat_transform(asset, b, false);
  d.L_hat = hat_transform(d.L, b, false);
  d.m_hat = hat_transform(b.m, b, false);

  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) {
      const Scalar& gm = b.G(t - 1, w);
      Scalar denom = gm + d.phi(t, w);
      if (b.at_risk(t, w) && ScalarTraits<Scalar>::sign(denom, gm) <= 0) {
        throw InvariantError("G_- + phi^(m) is not positive on t <= tau (t=" + std::to_string(t) +
                             ")");
      }
      Scalar ds_tau = b.at_risk(t, w) ? Scalar(asset.delta(t, w)) : Scalar(0);
      Scalar diff = denom * d.S_hat.delta(t, w) - (gm * ds_tau - d.L_hat.delta(t, w));
      if (!is_zero(diff, Scalar(abs_value(Scalar(gm * ds_tau)) + 1))) {
        throw InvariantError("(G_- + phi) dS^ != G_- dS^tau - dL^(m)^ at t=" + std::to_string(t));
      }
    }
  return d;
}

// ---- evaluation -------------------------------------------------------------

template <class Scalar>
Process<Scalar> payment_process(const Claim<Scalar>& claim, const EnlargementBundle<Scalar>& b,
                                PaymentTiming timing) {
  Process<Scalar> a(b.horizon(), b.outcomes(), Tag::Raw);
  const Slice<Scalar> pay = claim.payoff(b);
  for (int t = 0; t <= b.horizon(); ++t)
    for (int w = 0; w < b.outcomes(); ++w) {
      const int tau = b.tau.tau[w];
      if (timing == PaymentTiming::AtTerm) {
        if (t >= claim.term) a.at(t, w) = pay[w];
      } else if (tau <= claim.term) {
        if (t >= tau) a.at(t, w) = pay[w];
      } else if (t >= claim.term) {
        a.at(t, w) = pay[w];
      }
    }
  return a;
}

template <class Scalar>
StrategyEvaluation<Scalar> evaluate_strategy(const std::vector<Process<Scalar>>& xi,
                                             const Claim<Scalar>& claim,
                                             const std::vector<Process<Scalar>>& assets,
                                             const EnlargementBundle<Scalar>& b,
                                             PaymentTiming timing) {
  if (xi.size() != assets.size()) throw InputError("evaluate_strategy: dimension mismatch");
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  const auto& gf = b.g_filtration;
  StrategyEvaluation<Scalar> e;
  e.payments = payment_process(claim, b, timing);
  e.value = zeros(b);
  for (int t = 0; t <= n; ++t) {
    Slice<Scalar> rest(outcomes);
    for (int w = 0; w < outcomes; ++w) rest[w] = e.payments(n, w) - e.payments(t, w);
    e.value.set_slice(t, conditional_expectation(b.sp(), gf, rest, t));
  }
  Process<Scalar> gains = xi.empty() ? zeros(b) : integrate(xi, assets);
  e.cost = e.value - gains + e.payments;
  e.cost.set_tag(Tag::Adapted);
  e.risk = zeros(b);
  for (int t = 0; t <= n; ++t) {
    Slice<Scalar> sq(outcomes);
    for (int w = 0; w < outcomes; ++w) {
      Scalar d = e.cost(n, w) - e.cost(t, w);
      sq[w] = d * d;
    }
    e.risk.set_slice(t, conditional_expectation(b.sp(), gf, sq, t));
  }
  e.risk0 = expectation(b.sp(), e.risk.slice(0));
  return e;
}

template <class Scalar>
Process<Scalar> value_formula(const Claim<Scalar>& claim, const EnlargementBundle<Scalar>& b,
                              PaymentTiming timing) {
  const int outcomes = b.outcomes();
  const int term = claim.term;
  const Slice<Scalar> pay = claim.payoff(b);
  Process<Scalar> v = zeros(b);
  for (int t = 0; t <= term; ++t) {
    Slice<Scalar> later(outcomes);
    for (int w = 0; w < outcomes; ++w) later[w] = b.tau.tau[w] > t ? pay[w] : Scalar(0);
    Slice<Scalar> proj = conditional_expectation(b.sp(), b.f_filtration(), later, t);
    for (int w = 0; w < outcomes; ++w) {
      const int tau = b.tau.tau[w];
      Scalar x(0);
      if (t < tau) x = proj[w] / b.G(t, w);
      if (timing == PaymentTiming::AtTerm) {
        if (tau <= t) x += pay[w];
        if (t == term) x -= pay[w];
      } else if (t == term && tau > term) {
        x -= claim.survival[w];
      }
      v.at(t, w) = x;
    }
  }
  return v;
}

template <class Scalar>
void finalize_report(HedgeReport<Scalar>& r, const Claim<Scalar>& claim,
                     const EnlargementBundle<Scalar>& b, HedgeOptions options) {
  if (b.sp().partition(0).size() != 1) {
    throw InputError("hedging needs a trivial initial sigma-field");
  }
  auto eval = evaluate_strategy(r.strategy, claim, r.assets, b, options.timing);
  r.value = eval.value;
  r.cost = eval.cost;
  r.risk = eval.risk;
  r.risk0 = eval.risk0;
  if (!options.check) return;
  const auto& gf = b.g_filtration;
  Process<Scalar> gains = integrate(r.strategy, r.assets);
  Process<Scalar> rebuilt = gains + r.residual;
  Process<Scalar> target(b.horizon(), b.outcomes());
  for (int t = 0; t <= b.horizon(); ++t)
    for (int w = 0; w < b.outcomes(); ++w) target.at(t, w) = r.H(t, w) - r.initial_capital;
  require_equal(rebuilt, target, "H - H_0 != xi.X + L");
  auto mart = is_martingale(b.sp(), r.residual, gf);
  if (!mart.ok) throw InvariantError("remaining risk is not a G-martingale");
  for (size_t i = 0; i < r.assets.size(); ++i) {
    auto orth = are_orthogonal(b.sp(), r.residual, r.assets[i], gf);
    if (!orth.ok) {
      throw InvariantError("remaining risk is not orthogonal to asset " + r.asset_names[i] +
                           " (t=" + std::to_string(orth.t) + ")");
    }
  }
  Process<Scalar> cost_target = scaled(r.residual, Scalar(1));
  for (int t = 0; t <= b.horizon(); ++t)
    for (int w = 0; w < b.outcomes(); ++w) cost_target.at(t, w) += r.initial_capital;
  require_equal(r.cost, cost_target, "cost process != H_0 + L");
  require_equal(r.value, value_formula(claim, b, options.timing), "value process != value formula");
}

// ---- G side -----------------------------------------------------------------

template <class Scalar>
HedgeReport<Scalar> hedge_G(const Claim<Scalar>& claim, const Process<Scalar>& asset,
                            const EnlargementBundle<Scalar>& b, HedgeOptions options) {
  claim.validate(b);
  auto drivers = phi_m(asset, b);
  const int term = claim.term;
  auto legs = claim_legs(claim, asset, b);
  auto [mc, nc] = claim_coefficients(claim.death, legs.Mh, legs.hD, b, term);
  auto [xi, L] = transfer_to_G(legs.xiF, legs.LF, mc, nc, drivers, b, term);

  HedgeReport<Scalar> r = base_report(claim, asset, b);
  r.strategy = {xi};
  r.residual = L;
  r.attribution["xi_F"] = legs.xiF;
  r.attribution["L_F"] = legs.LF;
  r.attribution["M_h"] = legs.Mh;
  r.attribution["xi_F_death"] = legs.death.xi;
  r.attribution["xi_F_survival"] = legs.survival.xi;
  r.attribution["phi_m"] = drivers.phi;
  r.attribution["L_m"] = drivers.L;
  auto rep = optional_representation(claim.death, b, term, claim.survival);
  r.attribution["pure_financial"] = rep.pure_financial;
  r.attribution["correlation"] = rep.correlation;
  r.attribution["pure_mortality"] = rep.pure_mortality;
  if (options.check) require_equal(rep.H, r.H, "representation H differs from the claim martingale");
  finalize_report(r, claim, b, options);
  return r;
}

template <class Scalar>
HedgeReport<Scalar> hedge_G_direct(const Claim<Scalar>& claim,
                                   const std::vector<Process<Scalar>>& assets,
                                   const EnlargementBundle<Scalar>& b, HedgeOptions options,
                                   const std::vector<std::string>& names) {
  claim.validate(b);
  if (assets.empty()) throw InputError("hedge_G_direct: no assets");
  HedgeReport<Scalar> r;
  for (size_t i = 0; i < assets.size(); ++i) {
    r.assets.push_back(stopped(assets[i], b.tau.tau));
    r.asset_names.push_back(i < names.size() ? names[i]
                                             : (assets.size() == 1 ? std::string("S")
                                                                   : "X" + std::to_string(i + 1)));
  }
  r.H = martingale_of(b.sp(), b.g_filtration, claim.payoff(b));
  r.initial_capital = r.H(0, 0);
  GkwOptions opts;
  opts.last_step = claim.term;
  auto parts = gkw(b.sp(), r.H, r.assets, b.g_filtration, opts);
  r.strategy = parts.integrand;
  r.residual = parts.residual;
  finalize_report(r, claim, b, options);
  return r;
}

template <class Scalar>
HedgeReport<Scalar> hedge_G_predictable(const Claim<Scalar>& claim, const Process<Scalar>& asset,
                                        const EnlargementBundle<Scalar>& b, HedgeOptions options) {
  claim.validate(b);
  if (claim.has_survival_leg() || claim.accumulator) {
    throw InputError("the predictable route covers pure death claims only");
  }
  const int n = b.horizon();
  const int term = claim.term;
  Process<Scalar> h = claim.death;
  // K vanishes at t = 0 by construction; F_0-measurability is all that is asked there.
  require_measurable(h, Tag::Predictable, b.f_filtration(), "predictable death benefit");
  auto drivers = phi_m(asset, b);
  Process<Scalar> hF = zeros(b);
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < b.outcomes(); ++w)
      hF.at(t, w) = hF(t - 1, w) - (t <= term ? Scalar(h(t, w) * b.G.delta(t, w)) : Scalar(0));
  auto mh = predictable_claim_martingale(h, b, term);
  auto fh = hedge_F_martingale(mh, asset, b.sp(), term);
  Process<Scalar> mc = zeros(b, Tag::Predictable), nc = zeros(b);
  for (int t = 1; t <= term; ++t)
    for (int w = 0; w < b.outcomes(); ++w) {
      const Scalar& gm = b.G(t - 1, w);
      if (!ScalarTraits<Scalar>::is_zero_prob(gm)) {
        mc.at(t, w) = (h(t, w) * gm - fh.M(t - 1, w) + hF(t - 1, w)) / (gm * gm);
      }
      const Scalar& g = b.G(t, w);
      if (!ScalarTraits<Scalar>::is_zero_prob(g)) {
        nc.at(t, w) = (h(t, w) * g - fh.M(t, w) + hF(t, w)) / g;
      }
    }
  auto [xi, L] = transfer_to_G(fh.xi, fh.L, mc, nc, drivers, b, term);
  HedgeReport<Scalar> r = base_report(claim, asset, b);
  r.strategy = {xi};
  r.residual = L;
  r.attribution["m_h"] = fh.M;
  r.attribution["xi_F"] = fh.xi;
  r.attribution["L_F"] = fh.L;
  finalize_report(r, claim, b, options);
  return r;
}

// ---- decompositions ---------------------------------------------------------

template <class Scalar>
EndowmentSplit<Scalar> endowment_split(const Slice<Scalar>& g, int term,
                                       const Process<Scalar>& asset,
                                       const EnlargementBundle<Scalar>& b, HedgeOptions options) {
  auto claim = Claim<Scalar>::pure_endowment(term, g, b);
  auto drivers = phi_m(asset, b);
  const auto& space = b.sp();
  const auto& f = b.f_filtration();
  const int n = b.horizon();
  const int outcomes = b.outcomes();

  EndowmentSplit<Scalar> s;
  s.U = stop_at(martingale_of(space, f, g), term);
  s.GT = stop_at(survival_surface(b, term), term);
  Slice<Scalar> gg(outcomes);
  for (int w = 0; w < outcomes; ++w) gg[w] = g[w] * b.G(term, w);
  s.Mg = martingale_of(space, f, gg);
  s.Cov = s.Mg - product(s.GT, s.U);
  s.Cor = bracket(s.GT, s.U) + s.Cov;
  s.U.set_tag(Tag::Adapted);
  s.GT.set_tag(Tag::Adapted);
  s.Cov.set_tag(Tag::Adapted);
  s.Cor.set_tag(Tag::Adapted);

  Process<Scalar> lag_gt = lagged(s.GT), lag_u = lagged(s.U);
  {
    Process<Scalar> parts = integrate(lag_gt, s.U) + integrate(lag_u, s.GT) + s.Cor;
    for (int t = 0; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w) parts.at(t, w) += s.GT(0, w) * s.U(0, w);
    require_equal(parts, s.Mg, "integration by parts for M^(g)");
  }

  s.legs["g"] = hedge_F_martingale(s.U, asset, space, term);
  s.legs["G_T"] = hedge_F_martingale(s.GT, asset, space, term);
  s.legs["Cor"] = hedge_F_martingale(s.Cor, asset, space, term);
  const auto& lg = s.legs["g"];
  const auto& lt = s.legs["G_T"];
  const auto& lc = s.legs["Cor"];
  s.xi_F = product(lag_gt, lg.xi) + product(lag_u, lt.xi) + lc.xi;
  s.xi_F.set_tag(Tag::Predictable);
  s.L_F = integrate(lag_gt, lg.L) + integrate(lag_u, lt.L) + lc.L;
  s.L_F.set_tag(Tag::Adapted);

  auto direct = hedge_F(gg, asset, space, term);
  require_equal(s.xi_F, direct.xi, "endowment split strategy differs from the direct F-hedge");
  require_equal(s.L_F, direct.L, "endowment split residual differs from the direct F-hedge");

  Process<Scalar> hD = zeros(b);
  auto [mc, nc] = claim_coefficients(claim.death, s.Mg, hD, b, term);
  auto [xi, L] = transfer_to_G(s.xi_F, s.L_F, mc, nc, drivers, b, term);
  s.report = base_report(claim, asset, b);
  s.report.strategy = {xi};
  s.report.residual = L;
  s.report.attribution["xi_F_g"] = lg.xi;
  s.report.attribution["xi_F_G_T"] = lt.xi;
  s.report.attribution["xi_F_Cor"] = lc.xi;
  s.report.attribution["Cor"] = s.Cor;
  s.report.attribution["M_g"] = s.Mg;
  finalize_report(s.report, claim, b, options);
  return s;
}

template <class Scalar>
AnnuitySplit<Scalar> annuity_split(const Process<Scalar>& c, int term,
                                   const Process<Scalar>& asset,
                                   const EnlargementBundle<Scalar>& b, HedgeOptions options) {
  auto claim = Claim<Scalar>::annuity(term, c, b);
  auto drivers = phi_m(asset, b);
  const int n = b.horizon();
  AnnuitySplit<Scalar> a;
  a.endowment = endowment_split(claim.survival, term, asset, b, options);
  a.Ctilde = death_leg_integral(c, b, term);
  a.ctilde_leg = hedge_F(a.Ctilde.slice(n), asset, b.sp(), term);
  a.xi_F = a.endowment.xi_F + a.ctilde_leg.xi;
  a.xi_F.set_tag(Tag::Predictable);
  a.L_F = a.endowment.L_F + a.ctilde_leg.L;
  a.L_F.set_tag(Tag::Adapted);

  auto legs = claim_legs(claim, asset, b);
  require_equal(a.xi_F, legs.xiF, "annuity split strategy differs from the direct F-hedge");
  require_equal(a.L_F, legs.LF, "annuity split residual differs from the direct F-hedge");

  Process<Scalar> Mh = a.endowment.Mg + a.ctilde_leg.M;
  auto [mc, nc] = claim_coefficients(c, Mh, a.Ctilde, b, term);
  auto [xi, L] = transfer_to_G(a.xi_F, a.L_F, mc, nc, drivers, b, term);
  a.report = base_report(claim, asset, b);
  a.report.strategy = {xi};
  a.report.residual = L;
  for (const auto& [k, v] : a.endowment.report.attribution) a.report.attribution[k] = v;
  a.report.attribution["xi_F_Ctilde"] = a.ctilde_leg.xi;
  a.report.attribution["Ctilde"] = a.Ctilde;
  finalize_report(a.report, claim, b, options);
  return a;
}

// ---- corollaries --------------------------------------------------------------

const char* special_case_name(SpecialCase which) {
  switch (which) {
    case SpecialCase::Auto: return "auto";
    case SpecialCase::PseudoStopping: return "pseudo-stopping";
    case SpecialCase::Independent: return "independent";
  }
  return "?";
}

template <class Scalar>
HedgeReport<Scalar> special_case_formulas(const Claim<Scalar>& claim,
                                          const Process<Scalar>& asset,
                                          const EnlargementBundle<Scalar>& b, SpecialCase which,
                                          HedgeOptions options) {
  claim.validate(b);
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  const int term = claim.term;
  const Scalar p_survive = probability(b, alive_after, term);
  const bool pseudo = is_pseudo_stopping(b);
  const bool indep = is_independent(b) && !ScalarTraits<Scalar>::is_zero_prob(p_survive);
  const bool endowment_shape = !claim.has_death_leg() || claim.accumulator.has_value();

  if (which == SpecialCase::Auto) {
    if (indep && endowment_shape) {
      which = SpecialCase::Independent;
    } else if (pseudo) {
      which = SpecialCase::PseudoStopping;
    } else {
      throw ValidationError("predicate not satisfied: tau is neither pseudo-stopping nor independent");
    }
  }
  if (which == SpecialCase::Independent && !indep) {
    throw ValidationError("predicate not satisfied: tau is not independent of F with P(tau > T) > 0");
  }
  if (which == SpecialCase::PseudoStopping && !pseudo) {
    throw ValidationError("predicate not satisfied: m is not constant");
  }
  if (which == SpecialCase::Independent && !endowment_shape) {
    throw InputError("the independence closed forms cover pure endowments and annuities");
  }
  require_model(asset, b);

  HedgeReport<Scalar> r = base_report(claim, asset, b);
  Process<Scalar> xi = zeros(b, Tag::Predictable);
  Process<Scalar> L = zeros(b);

  if (which == SpecialCase::PseudoStopping) {
    auto legs = claim_legs(claim, asset, b);
    auto [mc, nc] = claim_coefficients(claim.death, legs.Mh, legs.hD, b, term);
    for (int t = 1; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w) {
        Scalar inc(0);
        if (t <= term) {
          if (b.at_risk(t, w)) {
            xi.at(t, w) = legs.xiF(t, w) / b.G(t - 1, w);
            inc += legs.LF.delta(t, w) / b.G(t - 1, w);
          }
          if (t < b.R[w]) inc += nc(t, w) * b.NG.delta(t, w);
        }
        L.at(t, w) = L(t - 1, w) + inc;
      }
    r.attribution["xi_F"] = legs.xiF;
    r.attribution["L_F"] = legs.LF;
  } else {
    // Under independence G_- = P(tau >= t) and G = P(tau > t) are deterministic.
    auto fg = hedge_F(claim.survival, asset, b.sp(), term);
    FHedge<Scalar> fc;
    Process<Scalar> ctilde = zeros(b);
    if (claim.accumulator) {
      ctilde = death_leg_integral(claim.death, b, term);
      fc = hedge_F(ctilde.slice(n), asset, b.sp(), term);
    } else {
      fc.M = fc.xi = fc.L = zeros(b);
    }
    for (int t = 1; t <= n; ++t) {
      const Scalar p_at_risk = probability(b, alive_at, t);
      const Scalar p_alive = probability(b, alive_after, t);
      for (int w = 0; w < outcomes; ++w) {
        Scalar inc(0);
        if (t <= term) {
          if (b.at_risk(t, w)) {
            xi.at(t, w) = (p_survive * fg.xi(t, w) + fc.xi(t, w)) / p_at_risk;
            inc += (p_survive * fg.L.delta(t, w) + fc.L.delta(t, w)) / p_at_risk;
          }
          if (!ScalarTraits<Scalar>::is_zero_prob(p_alive)) {
            Scalar mh = p_survive * fg.M(t, w) + fc.M(t, w);
            Scalar coef = (claim.death(t, w) * p_alive - mh + ctilde(t, w)) / p_alive;
            inc += coef * b.NG.delta(t, w);
          }
        }
        L.at(t, w) = L(t - 1, w) + inc;
      }
    }
    r.attribution["xi_F_g"] = fg.xi;
    if (claim.accumulator) r.attribution["xi_F_Ctilde"] = fc.xi;
  }
  r.strategy = {xi};
  r.residual = L;
  r.warnings.push_back(std::string("closed form: ") + special_case_name(which));
  finalize_report(r, claim, b, options);
  return r;
}

#define MRISK_INSTANTIATE_HEDGING(S)                                                             \
  template struct Claim<S>;                                                                      \
  template FHedge<S> hedge_F(const Slice<S>&, const Process<S>&, const FilteredSpace<S>&, int);  \
  template FHedge<S> hedge_F_martingale(const Process<S>&, const Process<S>&,                   \
                                        const FilteredSpace<S>&, int);                           \
  template MortalityDrivers<S> phi_m(const Process<S>&, const EnlargementBundle<S>&);            \
  template std::pair<Process<S>, Process<S>> transfer_to_G(                                      \
      const Process<S>&, const Process<S>&, const Process<S>&, const Process<S>&,                \
      const MortalityDrivers<S>&, const EnlargementBundle<S>&, int);                             \
  template Process<S> payment_process(const Claim<S>&, const EnlargementBundle<S>&,              \
                                      PaymentTiming);                                            \
  template StrategyEvaluation<S> evaluate_strategy(const std::vector<Process<S>>&,               \
                                                   const Claim<S>&,                              \
                                                   const std::vector<Process<S>>&,               \
                                                   const EnlargementBundle<S>&, PaymentTiming);  \
  template Process<S> value_formula(const Claim<S>&, const EnlargementBundle<S>&, PaymentTiming); \
  template void finalize_report(HedgeReport<S>&, const Claim<S>&, const EnlargementBundle<S>&,   \
                                HedgeOptions);                                                   \
  template HedgeReport<S> hedge_G(const Claim<S>&, const Process<S>&,                            \
                                  const EnlargementBundle<S>&, HedgeOptions);                    \
  template HedgeReport<S> hedge_G_direct(const Claim<S>&, const std::vector<Process<S>>&,        \
                                         const EnlargementBundle<S>&, HedgeOptions,              \
                                         const std::vector<std::string>&);                       \
  template HedgeReport<S> hedge_G_predictable(const Claim<S>&, const Process<S>&,                \
                                              const EnlargementBundle<S>&, HedgeOptions);        \
  template EndowmentSplit<S> endowment_split(const Slice<S>&, int, const Process<S>&,            \
                                             const EnlargementBundle<S>&, HedgeOptions);         \
  template AnnuitySplit<S> annuity_split(const Process<S>&, int, const Process<S>&,              \
                                         const EnlargementBundle<S>&, HedgeOptions);             \
  template HedgeReport<S> special_case_formulas(const Claim<S>&, const Process<S>&,              \
                                                const EnlargementBundle<S>&, SpecialCase,        \
                                                HedgeOptions);

MRISK_INSTANTIATE_HEDGING(Rational)
MRISK_INSTANTIATE_HEDGING(double)

}  // namespace mrisk
