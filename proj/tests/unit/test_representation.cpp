#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrisk/calculus.hpp"
#include "mrisk/oracle.hpp"
#include "mrisk/representation.hpp"

using namespace mrisk;
using fixtures::q;

namespace {

Process<Rational> up_indicator(const Model<Rational>& m) {
  return fixtures::process_of<Rational>(1, m.space->size(), Tag::Adapted, [&](int t, int w) {
    return Rational(t == 1 && fixtures::went_up(m, w));
  });
}

}  // namespace

TEST_SUITE("representation") {

TEST_CASE("death-claim martingale") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  int n = m.space->size();
  CHECK(fixtures::all_zero(death_claim_martingale(Process<Rational>(1, n, Tag::Adapted), b)));
  auto one = constant_process<Rational>(1, n, Rational(1));
  auto total = death_claim_martingale(one, b);
  auto died = fixtures::slice_of<Rational>(n, [&](int w) { return Rational(!m.tau.is_beyond(w)); });
  auto want = martingale_of(*m.space, m.space->filtration(),
                            fixtures::slice_of<Rational>(n, [&](int w) { return b.DoF(1, w); }));
  CHECK(equal_within(total, want));
  CHECK(total(0, 0) == expectation(*m.space, died));
  CHECK(death_claim_martingale(up_indicator(m), b)(0, 0) == q(1, 4));
}

TEST_CASE("predictable-claim martingale") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  int n = m.space->size();
  CHECK(fixtures::all_zero(predictable_claim_martingale(Process<Rational>(1, n, Tag::Predictable), b)));
  auto c = constant_process<Rational>(1, n, q(6, 5), Tag::Predictable);
  CHECK(fixtures::all_equal(predictable_claim_martingale(c, b), q(3, 5)));
  auto one = constant_process<Rational>(1, n, Rational(1), Tag::Predictable);
  CHECK(fixtures::all_equal(predictable_claim_martingale(one, b), q(1, 2)));
}

TEST_CASE("sure death within the horizon makes H constant") {
  auto m = build_space<Rational>(fixtures::coin_market(), IndependentDeath{{Rational(1)}, Rational(0)});
  auto b = azema_bundle(m.space, m.tau);
  auto c = constant_process<Rational>(1, m.space->size(), q(5, 2));
  auto rep = optional_representation(c, b);
  CHECK(fixtures::all_equal(rep.H, q(5, 2)));
  CHECK(fixtures::all_zero(rep.pure_financial));
  CHECK(fixtures::all_zero(rep.correlation));
  CHECK(fixtures::all_zero(rep.pure_mortality));
}

TEST_CASE("digital death benefit on the coin") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  auto rep = optional_representation(up_indicator(m), b);
  for (int w = 0; w < 4; ++w)
    CHECK(rep.H(1, w) == Rational(fixtures::went_up(m, w) && m.tau[w] == 1));
  CHECK(rep.H(0, 0) == q(1, 4));
  auto sum = rep.pure_financial + rep.correlation + rep.pure_mortality;
  auto shifted = rep.H - constant_process<Rational>(1, 4, rep.H(0, 0));
  CHECK(equal_within(sum, shifted));
}

TEST_CASE("stopping-time death carries no pure mortality risk") {
  auto m = fixtures::cs1();
  auto b = azema_bundle(m.space, m.tau);
  auto rep = optional_representation(up_indicator(m), b, 1,
                                     fixtures::slice_of<Rational>(m.space->size(), [](int) {
                                       return Rational(2);
                                     }));
  CHECK(fixtures::all_zero(rep.pure_mortality));
  auto shifted = rep.H - constant_process<Rational>(1, m.space->size(), rep.H(0, 0));
  CHECK(equal_within(rep.pure_financial + rep.correlation, shifted));
}

TEST_CASE("representation reconstructs H on random scenarios") {
  for (std::uint64_t seed = 11; seed <= 18; ++seed) {
    Family fam = all_families()[seed % 4];
    auto model = instantiate<Rational>(random_scenario(seed, fam));
    auto b = azema_bundle(model.space, model.tau);
    std::mt19937_64 rng(seed);
    auto h = random_process<Rational>(rng, model.space->filtration(), b.horizon(), Tag::Adapted);
    Slice<Rational> g(b.outcomes());
    for (auto& x : g) x = random_rational(rng);
    auto gT = conditional_expectation(*model.space, g, b.horizon());
    auto rep = optional_representation(h, b, -1, gT);
    auto payoff = claim_payoff(h, gT, b, b.horizon());
    auto H = martingale_of(b.sp(), b.g_filtration, payoff);
    CHECK(equal_within(rep.H, H));
    CHECK(is_martingale(b.sp(), rep.pure_mortality, b.g_filtration).ok);
  }
}

}
