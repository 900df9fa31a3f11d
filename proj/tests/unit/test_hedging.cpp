#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrisk/calculus.hpp"
#include "mrisk/error.hpp"
#include "mrisk/hedging.hpp"
#include "mrisk/oracle.hpp"

using namespace mrisk;
using fixtures::q;

namespace {

Slice<Rational> up_payoff(const Model<Rational>& m) {
  return fixtures::slice_of<Rational>(m.space->size(),
                                      [&](int w) { return Rational(fixtures::went_up(m, w)); });
}

Model<Rational> correlated_two_driver() {
  TwoDriverMarket two;
  two.horizon = 2;
  two.s = fixtures::coin_market(2);
  two.y = fixtures::coin_market(2);
  two.y.s0 = 0;
  HazardModulatedDeath h;
  h.hazard = [](const PathView& v) { return v.value(1) > 0 ? q(2, 5) : q(1, 10); };
  h.text = "if(Y > 0, 2/5, 1/10)";
  return build_space<Rational>(two, h);
}

}  // namespace

TEST_SUITE("hedging") {

TEST_CASE("F-side hedges") {
  auto m = fixtures::cb1();
  const auto& S = m.coordinates[0];
  int n = m.space->size();
  auto st = hedge_F(S.slice(1), S, *m.space, 1);
  CHECK(fixtures::all_zero(st.L));
  for (int w = 0; w < n; ++w) CHECK(st.xi(1, w) == 1);
  auto c = hedge_F(fixtures::slice_of<Rational>(n, [](int) { return Rational(4); }), S, *m.space, 1);
  CHECK(fixtures::all_zero(c.xi));
  auto d = hedge_F(up_payoff(m), S, *m.space, 1);
  for (int w = 0; w < n; ++w) CHECK(d.xi(1, w) == q(1, 2));
}

TEST_CASE("digital pure endowment on the coin") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  const auto& S = m.coordinates[0];
  auto claim = Claim<Rational>::pure_endowment(1, up_payoff(m), b);
  auto r = hedge_G(claim, S, b);
  CHECK(r.initial_capital == q(1, 4));
  for (int w = 0; w < 4; ++w) CHECK(r.strategy[0](1, w) == q(1, 4));
  auto direct = hedge_G_direct(claim, {S}, b);
  CHECK(direct.initial_capital == q(1, 4));
  CHECK(equal_within(direct.strategy[0], r.strategy[0]));
  CHECK(equal_within(direct.residual, r.residual));
  auto oracle = brute_force_hedge(b.sp(), claim.payoff(b), r.assets, b.g_filtration);
  CHECK(oracle.R0 == r.risk0);
  CHECK(r.risk0 == q(1, 8));
}

TEST_CASE("zero claim") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  auto claim = Claim<Rational>::pure_endowment(1, Slice<Rational>(4, Rational(0)), b);
  auto r = hedge_G(claim, m.coordinates[0], b);
  CHECK(r.initial_capital == 0);
  CHECK(fixtures::all_zero(r.strategy[0]));
  CHECK(fixtures::all_zero(r.residual));
}

TEST_CASE("stock claim without death is replicated") {
  auto m = build_space<Rational>(fixtures::coin_market(2), IndependentDeath{{0, 0}, Rational(1)});
  auto b = azema_bundle(m.space, m.tau);
  const auto& S = m.coordinates[0];
  auto claim = Claim<Rational>::pure_endowment(2, S.slice(2), b);
  for (const auto& r : {hedge_G(claim, S, b), hedge_G_direct(claim, {S}, b)}) {
    for (int t = 1; t <= 2; ++t)
      for (int w = 0; w < m.space->size(); ++w) CHECK(r.strategy[0](t, w) == 1);
    CHECK(fixtures::all_zero(r.residual));
    CHECK(r.risk0 == 0);
  }
}

TEST_CASE("independent death scales the F-hedge by survival odds") {
  for (std::uint64_t seed = 3; seed <= 6; ++seed) {
    auto model = instantiate<Rational>(random_scenario(seed, Family::Independent));
    auto b = azema_bundle(model.space, model.tau);
    const auto& S = model.coordinates[0];
    std::mt19937_64 rng(seed);
    auto claim = random_claim(rng, model, b, ClaimShape::PureEndowment);
    int T = claim.term;
    auto r = hedge_G(claim, S, b);
    auto f = hedge_F(claim.survival, S, b.sp(), T);
    Rational pT = b.G(T, 0);
    for (int t = 1; t <= T; ++t)
      for (int w = 0; w < b.outcomes(); ++w)
        if (b.at_risk(t, w) && sgn(b.G(t - 1, w)) > 0)
          CHECK(r.strategy[0](t, w) == pT / b.G(t - 1, w) * f.xi(t, w));
  }
}

TEST_CASE("transfer route equals the direct G-level GKW") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Family fam = all_families()[seed % 4];
    auto model = instantiate<Rational>(random_scenario(seed, fam));
    auto b = azema_bundle(model.space, model.tau);
    const auto& S = model.coordinates[0];
    std::mt19937_64 rng(seed);
    auto shape = static_cast<ClaimShape>(seed % 4);
    auto claim = random_claim(rng, model, b, shape);
    auto r = hedge_G(claim, S, b);
    auto d = hedge_G_direct(claim, {S}, b);
    CHECK(equal_within(r.strategy[0], d.strategy[0]));
    CHECK(equal_within(r.residual, d.residual));
    CHECK(r.risk0 == d.risk0);
  }
}

TEST_CASE("cost and risk of the optimal strategy") {
  auto model = correlated_two_driver();
  auto b = azema_bundle(model.space, model.tau);
  const auto& S = model.coordinates[0];
  std::mt19937_64 rng(21);
  auto claim = random_claim(rng, model, b, ClaimShape::Endowment);
  auto r = hedge_G(claim, S, b);
  auto cost = r.cost - constant_process<Rational>(b.horizon(), b.outcomes(), r.cost(0, 0));
  CHECK(equal_within(cost, r.residual));
  Slice<Rational> sq(b.outcomes());
  for (int t = 0; t <= b.horizon(); ++t) {
    for (int w = 0; w < b.outcomes(); ++w) {
      Rational d = r.residual(b.horizon(), w) - r.residual(t, w);
      sq[w] = d * d;
    }
    auto e = conditional_expectation(b.sp(), b.g_filtration, sq, t);
    for (int w = 0; w < b.outcomes(); ++w) CHECK(r.risk(t, w) == e[w]);
  }

  auto idle = evaluate_strategy<Rational>({Process<Rational>(b.horizon(), b.outcomes(), Tag::Predictable)},
                                          claim, r.assets, b, PaymentTiming::AtTerm);
  auto pay = claim.payoff(b);
  Rational mean = expectation(b.sp(), pay);
  Slice<Rational> dev(b.outcomes());
  for (int w = 0; w < b.outcomes(); ++w) dev[w] = (pay[w] - mean) * (pay[w] - mean);
  CHECK(idle.risk0 == expectation(b.sp(), dev));

  for (int k = 0; k < 5; ++k) {
    auto bump = random_process<Rational>(rng, b.g_filtration, b.horizon(), Tag::Predictable);
    auto ev = evaluate_strategy<Rational>({r.strategy[0] + bump}, claim, r.assets, b,
                                          PaymentTiming::AtTerm);
    CHECK(r.risk0 <= ev.risk0);
  }
}

TEST_CASE("endowment split") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  const auto& S = m.coordinates[0];
  auto s = endowment_split(up_payoff(m), 1, S, b);
  CHECK(fixtures::all_equal(s.GT, q(1, 2)));
  CHECK(fixtures::all_zero(s.Cor));
  CHECK(fixtures::all_zero(s.legs.at("G_T").xi));
  for (int w = 0; w < 4; ++w) CHECK(s.xi_F(1, w) == q(1, 4));

  auto model = correlated_two_driver();
  auto bb = azema_bundle(model.space, model.tau);
  auto det = endowment_split(Slice<Rational>(bb.outcomes(), Rational(3)), 2, model.coordinates[0], bb);
  CHECK(fixtures::all_zero(det.legs.at("g").xi));
  CHECK(fixtures::all_zero(det.Cor));

  auto im = instantiate<Rational>(random_scenario(2, Family::Independent));
  auto ib = azema_bundle(im.space, im.tau);
  std::mt19937_64 rng(2);
  auto g = random_claim(rng, im, ib, ClaimShape::PureEndowment).survival;
  auto is = endowment_split(g, ib.horizon(), im.coordinates[0], ib);
  CHECK(fixtures::all_zero(is.Cor));
  CHECK(fixtures::all_zero(is.legs.at("G_T").xi));
}

TEST_CASE("annuity split") {
  auto model = correlated_two_driver();
  auto b = azema_bundle(model.space, model.tau);
  const auto& S = model.coordinates[0];
  int N = b.horizon();
  auto zero = annuity_split(Process<Rational>(N, b.outcomes(), Tag::Adapted), N, S, b);
  CHECK(fixtures::all_zero(zero.report.strategy[0]));
  CHECK(fixtures::all_zero(zero.report.residual));
  auto linear = fixtures::process_of<Rational>(N, b.outcomes(), Tag::Adapted,
                                               [](int t, int) { return q(3 * t, 2); });
  auto a = annuity_split(linear, N, S, b);
  CHECK(fixtures::all_zero(a.endowment.legs.at("g").xi));
  CHECK(fixtures::all_zero(a.endowment.Cor));

  auto im = instantiate<Rational>(random_scenario(5, Family::Independent));
  auto ib = azema_bundle(im.space, im.tau);
  std::mt19937_64 rng(5);
  auto claim = random_claim(rng, im, ib, ClaimShape::Annuity);
  int T = claim.term;
  auto ia = annuity_split(*claim.accumulator, T, im.coordinates[0], ib);
  auto cT = hedge_F(claim.survival, im.coordinates[0], ib.sp(), T);
  Rational pT = ib.G(T, 0);
  for (int t = 1; t <= T; ++t)
    for (int w = 0; w < ib.outcomes(); ++w)
      if (ib.at_risk(t, w) && sgn(ib.G(t - 1, w)) > 0)
        CHECK(ia.report.strategy[0](t, w) ==
              (pT * cT.xi(t, w) + ia.ctilde_leg.xi(t, w)) / ib.G(t - 1, w));
}

TEST_CASE("closed forms for special death times") {
  auto a = fixtures::cb1();
  auto ba = azema_bundle(a.space, a.tau);
  auto ca = Claim<Rational>::pure_endowment(1, up_payoff(a), ba);
  auto ra = special_case_formulas(ca, a.coordinates[0], ba, SpecialCase::Independent);
  CHECK(equal_within(ra.strategy[0], hedge_G(ca, a.coordinates[0], ba).strategy[0]));

  auto c = fixtures::cs1();
  auto bc = azema_bundle(c.space, c.tau);
  auto cc = Claim<Rational>::pure_endowment(1, up_payoff(c), bc);
  auto rc = special_case_formulas(cc, c.coordinates[0], bc, SpecialCase::PseudoStopping);
  auto hc = hedge_G(cc, c.coordinates[0], bc);
  CHECK(equal_within(rc.strategy[0], hc.strategy[0]));
  CHECK(equal_within(rc.residual, hc.residual));
  CHECK_THROWS_AS(special_case_formulas(cc, c.coordinates[0], bc, SpecialCase::Independent),
                  ValidationError);

  auto model = correlated_two_driver();
  auto b = azema_bundle(model.space, model.tau);
  auto claim = Claim<Rational>::pure_endowment(2, Slice<Rational>(b.outcomes(), Rational(1)), b);
  try {
    special_case_formulas(claim, model.coordinates[0], b, SpecialCase::Auto);
    FAIL("expected a predicate failure");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("predicate not satisfied") != std::string::npos);
  }
}

TEST_CASE("mortality drivers") {
  for (bool stopping : {false, true}) {
    auto m = stopping ? fixtures::cs1() : fixtures::cb1();
    auto b = azema_bundle(m.space, m.tau);
    auto d = phi_m(m.coordinates[0], b);
    CHECK(fixtures::all_zero(d.U));
    CHECK(fixtures::all_zero(d.phi));
    CHECK(fixtures::all_zero(d.L));
  }
  auto flat = build_space<Rational>(fixtures::coin_market(2), IndependentDeath{{q(1, 3), q(1, 3)}, q(1, 3)});
  auto fb = azema_bundle(flat.space, flat.tau);
  auto cd = phi_m(constant_process<Rational>(2, flat.space->size(), Rational(1)), fb);
  CHECK(fixtures::all_zero(cd.U));

  auto model = correlated_two_driver();
  auto b = azema_bundle(model.space, model.tau);
  auto d = phi_m(model.coordinates[0], b);
  CHECK_FALSE(fixtures::all_zero(d.U));
  CHECK(is_martingale(b.sp(), d.U, b.f_filtration()).ok);
}

TEST_CASE("predictable death benefit route") {
  auto model = correlated_two_driver();
  auto b = azema_bundle(model.space, model.tau);
  auto k = fixtures::process_of<Rational>(2, b.outcomes(), Tag::Predictable, [&](int t, int w) {
    return t == 0 ? Rational(0) : Rational(1 + t) + model.coordinates[0](t - 1, w);
  });
  auto claim = Claim<Rational>::term_insurance(2, k, b);
  auto p = hedge_G_predictable(claim, model.coordinates[0], b);
  auto d = hedge_G_direct(claim, {model.coordinates[0]}, b);
  CHECK(equal_within(p.strategy[0], d.strategy[0]));
  CHECK(equal_within(p.residual, d.residual));
}

TEST_CASE("claims are validated") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  CHECK_THROWS_AS(Claim<Rational>::pure_endowment(3, up_payoff(m), b), InputError);
  auto raw = fixtures::slice_of<Rational>(4, [&](int w) { return Rational(m.tau[w]); });
  CHECK_THROWS(Claim<Rational>::pure_endowment(1, raw, b));
}

}
