#include "mrisk/securitization.hpp"

#include <algorithm>

#include "mrisk/calculus.hpp"
#include "mrisk/error.hpp"
#include "mrisk/oracle.hpp"

namespace mrisk {

namespace {

template <class Scalar>
Process<Scalar> zeros(const EnlargementBundle<Scalar>& b, Tag tag = Tag::Adapted) {
  return Process<Scalar>(b.horizon(), b.outcomes(), tag);
}

template <class Scalar>
Process<Scalar> stop_at(const Process<Scalar>& x, int term) {
  Process<Scalar> out = x;
  for (int t = term + 1; t <= x.horizon(); ++t) out.set_slice(t, x.slice(term));
  return out;
}

template <class Scalar>
bool positive(const Scalar& x) {
  return !ScalarTraits<Scalar>::is_zero_prob(x);
}

template <class Scalar>
void require_equal(const Process<Scalar>& a, const Process<Scalar>& b, const std::string& what) {
  if (!equal_within(a, b)) {
    throw InvariantError(what + " (max deviation " + std::to_string(max_abs_difference(a, b)) +
                         ")");
  }
}

int resolve(const Instrument& in, int fallback, int horizon) {
  int term = in.term < 0 ? fallback : in.term;
  if (term < 1 || term > horizon) {
    throw InputError(std::string(security_name(in.kind)) + " term outside 1..N");
  }
  return term;
}

template <class Scalar>
Slice<Scalar> ones(const EnlargementBundle<Scalar>& b) {
  return Slice<Scalar>(b.outcomes(), Scalar(1));
}

// Traded price: P^(1) dies with the insured anyway, the bond is stopped at tau.
template <class Scalar>
Process<Scalar> traded_price(const Instrument& in, int term, const EnlargementBundle<Scalar>& b) {
  if (in.kind == SecurityKind::Endowment) return price_endowment(ones(b), term, b).price;
  return stopped(price_bond(term, b).price, b.tau.tau);
}

}  // namespace

const char* security_name(SecurityKind kind) {
  return kind == SecurityKind::Endowment ? "endowment" : "bond";
}

SecurityKind parse_security(const std::string& s) {
  if (s == "endowment" || s == "E" || s == "P1") return SecurityKind::Endowment;
  if (s == "bond" || s == "B") return SecurityKind::Bond;
  throw InputError("unknown instrument '" + s + "' (expected endowment or bond)");
}

template <class Scalar>
SecurityPrice<Scalar> price_endowment(const Slice<Scalar>& g, int term,
                                      const EnlargementBundle<Scalar>& b) {
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  if (term < 1 || term > n) throw InputError("endowment term outside 1..N");
  if (static_cast<int>(g.size()) != outcomes) throw InputError("benefit has the wrong size");

  SecurityPrice<Scalar> out;
  Slice<Scalar> pay(outcomes), ggt(outcomes);
  for (int w = 0; w < outcomes; ++w) {
    pay[w] = b.tau.tau[w] > term ? g[w] : Scalar(0);
    ggt[w] = g[w] * b.G(term, w);
  }
  out.price = martingale_of(b.sp(), b.g_filtration, pay);
  out.M = stop_at(martingale_of(b.sp(), b.f_filtration(), ggt), term);
  auto m_hat = hat_transform(out.M, b, false);
  auto mm_hat = hat_transform(b.m, b, false);

  out.formula = zeros(b);
  for (int w = 0; w < outcomes; ++w) out.formula.at(0, w) = out.price(0, w);
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc(0);
      if (t <= term) {
        if (b.at_risk(t, w)) {
          const Scalar& gm = b.G(t - 1, w);
          inc += m_hat.delta(t, w) / gm;
          inc -= out.M(t - 1, w) / (gm * gm) * mm_hat.delta(t, w);
        }
        if (t < b.R[w]) inc -= out.M(t, w) / b.G(t, w) * b.NG.delta(t, w);
      }
      out.formula.at(t, w) = out.formula(t - 1, w) + inc;
    }
  out.residual = out.price - out.formula;
  return out;
}

template <class Scalar>
SecurityPrice<Scalar> price_bond(int term, const EnlargementBundle<Scalar>& b) {
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  if (term < 1 || term > n) throw InputError("bond term outside 1..N");
  const auto& f = b.f_filtration();

  SecurityPrice<Scalar> out;
  Slice<Scalar> gt = b.G.slice(term);
  out.price = martingale_of(b.sp(), b.g_filtration, gt);

  out.Dbar = zeros(b);
  out.xi_G = zeros(b);
  for (int t = 1; t <= n; ++t) {
    Slice<Scalar> dies(outcomes);
    for (int w = 0; w < outcomes; ++w) dies[w] = b.tau.tau[w] == t ? gt[w] : Scalar(0);
    Slice<Scalar> inc = conditional_expectation(b.sp(), f, dies, t);
    for (int w = 0; w < outcomes; ++w) {
      out.Dbar.at(t, w) = out.Dbar(t - 1, w) + inc[w];
      const Scalar d = b.DoF.delta(t, w);
      if (positive(d)) out.xi_G.at(t, w) = inc[w] / d;
    }
  }
  // Survivors past T carry G_T with conditional probability G_T.
  Slice<Scalar> total(outcomes);
  for (int w = 0; w < outcomes; ++w) total[w] = out.Dbar(term, w) + gt[w] * gt[w];
  out.M = stop_at(martingale_of(b.sp(), f, total), term);
  auto mb_hat = hat_transform(out.M, b, false);
  auto mm_hat = hat_transform(b.m, b, false);

  out.formula = zeros(b);
  for (int w = 0; w < outcomes; ++w) out.formula.at(0, w) = out.price(0, w);
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < outcomes; ++w) {
      Scalar inc(0);
      const int tau = b.tau.tau[w];
      if (t <= term) {
        if (b.at_risk(t, w)) {
          const Scalar& gm = b.G(t - 1, w);
          inc += mb_hat.delta(t, w) / gm;
          inc -= (out.M(t - 1, w) - out.Dbar(t - 1, w)) / (gm * gm) * mm_hat.delta(t, w);
        }
        if (t < b.R[w]) {
          const Scalar& g = b.G(t, w);
          inc += (out.xi_G(t, w) * g - out.M(t, w) + out.Dbar(t, w)) / g * b.NG.delta(t, w);
        }
        if (t == tau) inc += out.price(t, w) - out.xi_G(t, w);
      }
      out.formula.at(t, w) = out.formula(t - 1, w) + inc;
    }
  out.residual = stopped(out.price, b.tau.tau) - out.formula;
  return out;
}

template <class Scalar>
Process<Scalar> independent_endowment_price(const Scalar& g, int term,
                                            const EnlargementBundle<Scalar>& b) {
  if (!is_independent(b)) throw ValidationError("predicate not satisfied: tau is not independent of F");
  const int n = b.horizon();
  if (term < 1 || term > n) throw InputError("endowment term outside 1..N");
  std::vector<Scalar> survival(n + 1, Scalar(0));
  for (int t = 0; t <= n; ++t)
    for (int w = 0; w < b.outcomes(); ++w)
      if (b.tau.tau[w] > t) survival[t] += b.sp().weight(w);
  Process<Scalar> p = zeros(b);
  for (int w = 0; w < b.outcomes(); ++w) p.at(0, w) = g * survival[term];
  for (int t = 1; t <= n; ++t)
    for (int w = 0; w < b.outcomes(); ++w) {
      Scalar inc(0);
      if (t <= term && positive(survival[t])) {
        inc = -g * survival[term] / survival[t] * b.NG.delta(t, w);
      }
      p.at(t, w) = p(t - 1, w) + inc;
    }
  return p;
}

template <class Scalar>
SecurityDecomposition<Scalar> security_gkw(Instrument instrument, const Process<Scalar>& asset,
                                           const EnlargementBundle<Scalar>& b,
                                           const MortalityDrivers<Scalar>& drivers, bool check) {
  const int n = b.horizon();
  const int term = resolve(instrument, n, n);
  instrument.term = term;
  SecurityDecomposition<Scalar> out;
  out.instrument = instrument;

  Process<Scalar> mc = zeros(b, Tag::Predictable), nc = zeros(b);
  Process<Scalar> lump = zeros(b);
  FHedge<Scalar> fh;
  if (instrument.kind == SecurityKind::Endowment) {
    auto gt = survival_surface(b, term);
    fh = hedge_F_martingale(gt, asset, b.sp(), term);
    for (int t = 1; t <= term; ++t)
      for (int w = 0; w < b.outcomes(); ++w) {
        const Scalar& gm = b.G(t - 1, w);
        if (positive(gm)) mc.at(t, w) = -gt(t - 1, w) / (gm * gm);
        const Scalar& g = b.G(t, w);
        if (positive(g)) nc.at(t, w) = -gt(t, w) / g;
      }
    out.price = price_endowment(ones(b), term, b).price;
  } else {
    auto bond = price_bond(term, b);
    fh = hedge_F_martingale(bond.M, asset, b.sp(), term);
    for (int t = 1; t <= term; ++t)
      for (int w = 0; w < b.outcomes(); ++w) {
        const Scalar& gm = b.G(t - 1, w);
        if (positive(gm)) mc.at(t, w) = -(bond.M(t - 1, w) - bond.Dbar(t - 1, w)) / (gm * gm);
        const Scalar& g = b.G(t, w);
        if (positive(g)) {
          nc.at(t, w) = (bond.xi_G(t, w) * g - bond.M(t, w) + bond.Dbar(t, w)) / g;
        }
      }
    out.price = stopped(bond.price, b.tau.tau);
    for (int t = 1; t <= n; ++t)
      for (int w = 0; w < b.outcomes(); ++w) {
        const int tau = b.tau.tau[w];
        Scalar jump = (t == tau && t <= term) ? Scalar(bond.price(t, w) - bond.xi_G(t, w))
                                              : Scalar(0);
        lump.at(t, w) = lump(t - 1, w) + jump;
      }
  }
  out.phi_F = fh.xi;
  out.L_F = fh.L;
  auto [phi, L] = transfer_to_G(fh.xi, fh.L, mc, nc, drivers, b, term);
  out.phi = phi;
  out.residual = L + lump;
  out.residual.set_tag(Tag::Adapted);

  if (check) {
    const auto& gf = b.g_filtration;
    Process<Scalar> stock = stopped(asset, b.tau.tau);
    GkwOptions opts;
    opts.last_step = term;
    auto direct = gkw(b.sp(), out.price, std::vector<Process<Scalar>>{stock}, gf, opts);
    const std::string name = security_name(instrument.kind);
    require_equal(out.phi, direct.integrand[0], name + ": formula strategy differs from G-level GKW");
    require_equal(out.residual, direct.residual, name + ": formula residual differs from G-level GKW");
  }
  return out;
}

template <class Scalar>
SecurityDecomposition<Scalar> security_gkw(Instrument instrument, const Process<Scalar>& asset,
                                           const EnlargementBundle<Scalar>& b, bool check) {
  return security_gkw(instrument, asset, b, phi_m(asset, b), check);
}

template <class Scalar>
SecuritizationReport<Scalar> hedge_with_securities(const Claim<Scalar>& claim,
                                                   const std::vector<Instrument>& instruments,
                                                   const Process<Scalar>& asset,
                                                   const EnlargementBundle<Scalar>& b,
                                                   SecuritizationOptions options) {
  if (instruments.empty()) throw InputError("no securitisation instruments given");
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  const auto& gf = b.g_filtration;

  std::optional<Instrument> endow, bond;
  for (const auto& in : instruments) {
    auto& slot = in.kind == SecurityKind::Endowment ? endow : bond;
    if (slot) throw InputError(std::string("instrument listed twice: ") + security_name(in.kind));
    slot = in;
    slot->term = resolve(in, claim.term, n);
  }

  HedgeOptions hopts{options.timing, options.check};
  SecuritizationReport<Scalar> out;
  out.base = hedge_G(claim, asset, b, hopts);
  auto drivers = phi_m(asset, b);
  const Process<Scalar>& xi_h = out.base.strategy[0];
  const Process<Scalar>& L_h = out.base.residual;

  HedgeReport<Scalar> r;
  r.asset_names = {"S"};
  r.assets = {stopped(asset, b.tau.tau)};
  r.H = out.base.H;
  r.initial_capital = out.base.initial_capital;
  r.attribution = out.base.attribution;
  r.warnings = out.base.warnings;

  const SecurityDecomposition<Scalar>* E = nullptr;
  const SecurityDecomposition<Scalar>* B = nullptr;
  if (endow) out.securities.push_back(security_gkw(*endow, asset, b, drivers, options.check));
  if (bond) out.securities.push_back(security_gkw(*bond, asset, b, drivers, options.check));
  for (const auto& s : out.securities) {
    (s.instrument.kind == SecurityKind::Endowment ? E : B) = &s;
    r.asset_names.push_back(s.instrument.kind == SecurityKind::Endowment ? "P1" : "B");
    r.assets.push_back(s.price);
  }

  Process<Scalar> xi1 = xi_h;
  Process<Scalar> L = L_h;
  bool exact_optimum = true;
  if (E && B) {
    out.model = "c";
    auto x2t = density_ratio(b.sp(), L_h, E->residual, gf);
    auto x2 = density_ratio(b.sp(), L_h, B->residual, gf);
    auto theta = density_ratio(b.sp(), E->residual, B->residual, gf);
    auto psi = density_ratio(b.sp(), B->residual, E->residual, gf);
    Process<Scalar> y2 = zeros(b, Tag::Predictable), y3 = zeros(b, Tag::Predictable);
    for (int t = 1; t <= n; ++t) {
      const Partition& part = gf[t - 1];
      for (const auto& atom : part.atoms) {
        const int w0 = atom.front();
        Scalar det = Scalar(1) - psi(t, w0) * theta(t, w0);
        Scalar a(0), c(0);
        bool collinear = ScalarTraits<Scalar>::exact
                             ? is_zero(det)
                             : std::abs(ScalarTraits<Scalar>::to_double(det)) <= 1e-9;
        if (!collinear) {
          a = (x2t(t, w0) - psi(t, w0) * x2(t, w0)) / det;
          c = (x2(t, w0) - theta(t, w0) * x2t(t, w0)) / det;
        } else {
          ++out.collinear_atoms;
          if (options.policy == CollinearPolicy::Fallback) {
            c = x2(t, w0);
          } else {
            bool needed = !is_zero(x2(t, w0)) || !is_zero(x2t(t, w0));
            if (needed) exact_optimum = false;
          }
        }
        for (int w : atom) {
          y2.at(t, w) = a;
          y3.at(t, w) = c;
        }
      }
    }
    if (out.collinear_atoms > 0) {
      r.warnings.push_back("instrument residuals collinear on " +
                           std::to_string(out.collinear_atoms) + " atom(s); policy " +
                           (options.policy == CollinearPolicy::Fallback ? "fallback" : "literal"));
    }
    for (int t = 0; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w)
        xi1.at(t, w) = xi_h(t, w) - E->phi(t, w) * y2(t, w) - B->phi(t, w) * y3(t, w);
    L = L_h - integrate(y2, E->residual) - integrate(y3, B->residual);
    r.strategy = {xi1, y2, y3};
    out.ratios["xi2_endowment"] = x2t;
    out.ratios["xi2_bond"] = x2;
    out.ratios["theta"] = theta;
    out.ratios["psi"] = psi;
  } else {
    const auto* sec = E ? E : B;
    out.model = E ? "b" : "a";
    auto x2 = density_ratio(b.sp(), L_h, sec->residual, gf);
    for (int t = 0; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w) xi1.at(t, w) = xi_h(t, w) - sec->phi(t, w) * x2(t, w);
    L = L_h - integrate(x2, sec->residual);
    r.strategy = {xi1, x2};
    out.ratios[E ? "xi2_endowment" : "xi2_bond"] = x2;
  }
  xi1.set_tag(Tag::Predictable);
  r.strategy[0] = xi1;
  L.set_tag(Tag::Adapted);
  r.residual = L;

  HedgeOptions fopts = hopts;
  if (!exact_optimum) {
    fopts.check = false;
    r.warnings.push_back("literal collinearity rule leaves hedgeable risk on some atoms");
  }
  finalize_report(r, claim, b, fopts);
  if (options.check && !exact_optimum) {
    Process<Scalar> rebuilt = integrate(r.strategy, r.assets) + r.residual;
    Process<Scalar> target = r.H;
    for (int t = 0; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w) target.at(t, w) -= r.initial_capital;
    require_equal(rebuilt, target, "H - H_0 != xi.X + L");
  }

  if (options.verify_with_oracle) {
    auto sol = brute_force_hedge(b.sp(), claim.payoff(b), r.assets, gf);
    out.oracle_R0 = sol.R0;
    if (exact_optimum && !is_zero(Scalar(sol.R0 - r.risk0), Scalar(abs_value(sol.R0) + 1))) {
      throw InvariantError("securitised R_0 " + ScalarTraits<Scalar>::to_string(r.risk0) +
                           " differs from the oracle minimum " +
                           ScalarTraits<Scalar>::to_string(sol.R0));
    }
  }
  out.report = std::move(r);
  return out;
}

#define MRISK_INSTANTIATE_SECURITIZATION(S)                                                      \
  template SecurityPrice<S> price_endowment(const Slice<S>&, int, const EnlargementBundle<S>&);  \
  template SecurityPrice<S> price_bond(int, const EnlargementBundle<S>&);                        \
  template Process<S> independent_endowment_price(const S&, int, const EnlargementBundle<S>&);   \
  template SecurityDecomposition<S> security_gkw(Instrument, const Process<S>&,                  \
                                                 const EnlargementBundle<S>&, bool);             \
  template SecurityDecomposition<S> security_gkw(Instrument, const Process<S>&,                  \
                                                 const EnlargementBundle<S>&,                    \
                                                 const MortalityDrivers<S>&, bool);              \
  template SecuritizationReport<S> hedge_with_securities(                                        \
      const Claim<S>&, const std::vector<Instrument>&, const Process<S>&,                        \
      const EnlargementBundle<S>&, SecuritizationOptions);

MRISK_INSTANTIATE_SECURITIZATION(Rational)
MRISK_INSTANTIATE_SECURITIZATION(double)

}  // namespace mrisk
