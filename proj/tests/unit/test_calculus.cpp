#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrisk/calculus.hpp"
#include "mrisk/oracle.hpp"

using namespace mrisk;
using fixtures::q;

namespace {

// Two outcomes, +1 with probability 3/5 and -1 otherwise.
std::pair<std::shared_ptr<const FilteredSpace<Rational>>, Process<Rational>> tilted_coin() {
  Filtration f{Partition::trivial(2), Partition::from_keys(2, [](int w) { return w; })};
  auto sp = FilteredSpace<Rational>::create(1, {q(3, 5), q(2, 5)}, f);
  auto s = fixtures::process_of<Rational>(1, 2, Tag::Adapted, [](int t, int w) {
    return t == 0 ? Rational(0) : Rational(w == 0 ? 1 : -1);
  });
  return {sp, s};
}

}  // namespace

TEST_SUITE("calculus") {

TEST_CASE("stochastic integral basics") {
  auto m = fixtures::cb1();
  const auto& S = m.coordinates[0];
  int n = m.space->size();
  auto one = constant_process<Rational>(1, n, Rational(1), Tag::Predictable);
  auto zero = constant_process<Rational>(1, n, Rational(0), Tag::Predictable);
  auto quarter = constant_process<Rational>(1, n, q(1, 4), Tag::Predictable);
  auto inc = integrate(one, S);
  auto flat = integrate(zero, S);
  auto h = integrate(quarter, S, m.space->filtration());
  for (int w = 0; w < n; ++w) {
    CHECK(inc(1, w) == S(1, w) - S(0, w));
    CHECK(flat(1, w) == 0);
    CHECK(h(0, w) == 0);
    CHECK(h(1, w) == (fixtures::went_up(m, w) ? q(1, 4) : q(-1, 4)));
  }
}

TEST_CASE("quadratic covariation") {
  auto m = fixtures::cb1();
  const auto& S = m.coordinates[0];
  int n = m.space->size();
  auto c = constant_process<Rational>(1, n, Rational(5));
  CHECK(fixtures::all_zero(bracket(S, c)));
  auto ss = bracket(S, S);
  for (int w = 0; w < n; ++w) CHECK(ss(1, w) == 1);
  CHECK(fixtures::all_zero(angle_bracket(*m.space, S, c, m.space->filtration())));
  auto ab = angle_bracket(*m.space, S, S, m.space->filtration());
  for (int w = 0; w < n; ++w) CHECK(ab(1, w) == 1);
}

TEST_CASE("bracket is bilinear on random scenarios") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto model = instantiate<Rational>(random_scenario(seed, Family::Independent));
    std::mt19937_64 rng(seed);
    const auto& f = model.space->filtration();
    int N = model.space->horizon();
    auto x = random_process<Rational>(rng, f, N, Tag::Adapted);
    auto y = random_process<Rational>(rng, f, N, Tag::Adapted);
    auto z = random_process<Rational>(rng, f, N, Tag::Adapted);
    CHECK(equal_within(bracket(x + y, z), bracket(x, z) + bracket(y, z)));
  }
}

TEST_CASE("dual projections of the death indicator") {
  {
    auto m = fixtures::cb1();
    auto b = azema_bundle(m.space, m.tau);
    auto d = dual_projection(*m.space, b.D, Projection::Optional, m.space->filtration());
    for (int w = 0; w < m.space->size(); ++w) CHECK(d.delta(1, w) == q(1, 2));
    const auto& S = m.coordinates[0];
    CHECK(equal_within(dual_projection(*m.space, S - constant_process<Rational>(1, 4, Rational(1)),
                                       Projection::Optional, m.space->filtration()),
                       S - constant_process<Rational>(1, 4, Rational(1))));
  }
  {
    auto m = fixtures::cs1();
    auto b = azema_bundle(m.space, m.tau);
    auto d = dual_projection(*m.space, b.D, Projection::Predictable, m.space->filtration());
    for (int w = 0; w < m.space->size(); ++w) CHECK(d.delta(1, w) == q(1, 2));
  }
}

TEST_CASE("martingale diagnostics") {
  auto m = fixtures::cb1();
  const auto& f = m.space->filtration();
  CHECK(is_martingale(*m.space, constant_process<Rational>(1, 4, Rational(3)), f).ok);
  CHECK(is_martingale(*m.space, m.coordinates[0], f).ok);
  auto [sp, s] = tilted_coin();
  auto d = is_martingale(*sp, s, sp->filtration());
  CHECK_FALSE(d.ok);
  CHECK(d.t == 1);
  CHECK(d.worst == doctest::Approx(0.2));
}

TEST_CASE("orthogonality") {
  auto m = fixtures::cb1();
  const auto& f = m.space->filtration();
  const auto& S = m.coordinates[0];
  CHECK(are_orthogonal(*m.space, S, constant_process<Rational>(1, 4, Rational(2)), f).ok);
  CHECK_FALSE(are_orthogonal(*m.space, S, S, f).ok);
  auto model = instantiate<Rational>(random_scenario(4, Family::HazardModulated));
  std::mt19937_64 rng(4);
  auto mart = random_f_martingale(rng, model);
  auto parts = gkw(*model.space, mart, {model.coordinates[0]}, model.space->filtration());
  CHECK(are_orthogonal(*model.space, parts.residual, model.coordinates[0],
                       model.space->filtration()).ok);
}

TEST_CASE("GKW decomposition") {
  auto m = fixtures::cb1();
  const auto& f = m.space->filtration();
  const auto& S = m.coordinates[0];
  int n = m.space->size();
  auto self = gkw(*m.space, S, {S}, f);
  for (int w = 0; w < n; ++w) CHECK(self.integrand[0](1, w) == 1);
  CHECK(fixtures::all_zero(self.residual));

  auto up = fixtures::slice_of<Rational>(n, [&](int w) { return Rational(fixtures::went_up(m, w)); });
  auto digital = gkw(*m.space, martingale_of(*m.space, f, up), {S}, f);
  for (int w = 0; w < n; ++w) CHECK(digital.integrand[0](1, w) == q(1, 2));
  CHECK(fixtures::all_zero(digital.residual));

  TwoDriverMarket two;
  two.horizon = 2;
  two.s = fixtures::coin_market(2);
  two.y = fixtures::coin_market(2);
  auto tm = build_space<Rational>(two, IndependentDeath{{q(1, 4), q(1, 4)}, q(1, 2)});
  const auto& Y = tm.coordinates[1];
  auto indep = gkw(*tm.space, Y, {tm.coordinates[0]}, tm.space->filtration());
  CHECK(fixtures::all_zero(indep.integrand[0]));
  auto shifted = Y - constant_process<Rational>(2, tm.space->size(), Y(0, 0));
  CHECK(equal_within(indep.residual, shifted));
}

TEST_CASE("GKW rejects a non-martingale") {
  auto [sp, s] = tilted_coin();
  CHECK_THROWS(gkw(*sp, s, {s}, sp->filtration()));
}

}
