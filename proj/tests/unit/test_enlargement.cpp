#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrisk/oracle.hpp"

using namespace mrisk;
using fixtures::q;

namespace {

// Death at t = 1 is more likely when the second move is up: the death law
// looks ahead of F_1, so <S, m> picks up the step-2 correlation.
Model<Rational> move_correlated() {
  MatrixDeath d;
  // leaves in canonical order d.d, d.u, u.d, u.u
  for (int leaf = 0; leaf < 4; ++leaf) {
    bool last_up = leaf % 2 == 1;
    d.rows.push_back(last_up ? std::vector<Rational>{q(3, 4), 0, q(1, 4)}
                             : std::vector<Rational>{q(1, 4), 0, q(3, 4)});
  }
  return build_space<Rational>(fixtures::coin_market(2), d);
}

Model<Rational> hazard_model() {
  HazardModulatedDeath h;
  h.hazard = [](const PathView& v) { return v.value(0) < 1 ? q(3, 10) : q(1, 10); };
  h.text = "if(S < 1, 3/10, 1/10)";
  return build_space<Rational>(fixtures::coin_market(2), h);
}

}  // namespace

TEST_SUITE("enlargement") {

TEST_CASE("G atoms split F atoms by the death state") {
  auto a = fixtures::cb1();
  auto ba = azema_bundle(a.space, a.tau);
  CHECK(ba.g_filtration[0].size() == 1);
  CHECK(ba.g_filtration[1].size() == 4);
  auto c = fixtures::cs1();
  auto bc = azema_bundle(c.space, c.tau);
  CHECK(bc.g_filtration[1].size() == c.space->partition(1).size());
}

TEST_CASE("Azema bundle on the independent coin") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  for (int w = 0; w < 4; ++w) {
    CHECK(b.G(1, w) == q(1, 2));
    CHECK(b.Gtilde(1, w) == 1);
    CHECK(b.DoF(1, w) == q(1, 2));
    CHECK(b.NG.delta(1, w) == Rational(m.tau[w] == 1) - q(1, 2));
  }
  CHECK(fixtures::all_equal(b.m, Rational(1)));
}

TEST_CASE("Azema bundle when death is a stopping time") {
  auto m = fixtures::cs1();
  auto b = azema_bundle(m.space, m.tau);
  for (int w = 0; w < m.space->size(); ++w) {
    bool up = fixtures::went_up(m, w);
    CHECK(b.G(1, w) == Rational(up));
    CHECK(b.DoF(1, w) == Rational(!up));
    CHECK(b.R[w] == (up ? m.tau.beyond() : 1));
    CHECK(b.Rtilde[w] == m.tau.beyond());
  }
  CHECK(fixtures::all_equal(b.m, Rational(1)));
  CHECK(fixtures::all_zero(b.NG));
}

TEST_CASE("hat transform") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  const auto& S = m.coordinates[0];
  CHECK(equal_within(hat_transform(S, b), S));
  auto c = constant_process<Rational>(1, 4, q(2, 3));
  CHECK(equal_within(hat_transform(c, b), c));

  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto model = instantiate<Rational>(random_scenario(seed, Family::PseudoStopping));
    auto bundle = azema_bundle(model.space, model.tau);
    REQUIRE(is_pseudo_stopping(bundle));
    std::mt19937_64 rng(seed);
    auto mart = random_f_martingale(rng, model);
    CHECK(equal_within(hat_transform(mart, bundle), stopped(mart, model.tau.tau)));
  }
}

TEST_CASE("hat transform of an F-martingale is a G-martingale") {
  auto model = hazard_model();
  auto b = azema_bundle(model.space, model.tau);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 3; ++k) {
    auto mart = random_f_martingale(rng, model);
    CHECK(is_martingale(b.sp(), hat_transform(mart, b), b.g_filtration).ok);
  }
}

TEST_CASE("structure conditions") {
  for (bool stopping : {false, true}) {
    auto m = stopping ? fixtures::cs1() : fixtures::cb1();
    auto b = azema_bundle(m.space, m.tau);
    CHECK(validate_model(m.assets(), b).all_pass());
    CHECK(is_pseudo_stopping(b));
    CHECK(is_independent(b) == !stopping);
  }
  auto bad = move_correlated();
  auto bb = azema_bundle(bad.space, bad.tau);
  auto report = validate_model(bad.assets(), bb);
  CHECK_FALSE(report.all_pass());
  bool orth_failed = false;
  for (const auto& c : report.checks)
    if (!c.pass && c.name.rfind("orthogonal_to_m", 0) == 0) orth_failed = true;
  CHECK(orth_failed);
  CHECK_FALSE(is_pseudo_stopping(bb));
}

TEST_CASE("hazard-modulated death keeps <S, m> = 0 with m moving") {
  auto model = hazard_model();
  auto b = azema_bundle(model.space, model.tau);
  CHECK(validate_model(model.assets(), b).all_pass());
  CHECK_FALSE(is_pseudo_stopping(b));
  CHECK_FALSE(is_independent(b));
}

TEST_CASE("survival surface") {
  auto a = fixtures::cb1();
  auto ba = azema_bundle(a.space, a.tau);
  CHECK(fixtures::all_equal(survival_surface(ba, 0), Rational(1)));
  CHECK(survival_surface(ba, 1)(0, 0) == q(1, 2));
  auto c = fixtures::cs1();
  auto bc = azema_bundle(c.space, c.tau);
  auto g = survival_surface(bc, 1);
  for (int w = 0; w < c.space->size(); ++w) CHECK(g(1, w) == Rational(fixtures::went_up(c, w)));
}

TEST_CASE("compensator identity") {
  auto m = fixtures::cb1();
  auto b = azema_bundle(m.space, m.tau);
  CHECK(fixtures::all_zero(compensator_identity_check(Process<Rational>(1, 4, Tag::Adapted), b)));
  CHECK(fixtures::all_zero(compensator_identity_check(b.DoF, b)));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Family fam = all_families()[seed % 4];
    auto model = instantiate<Rational>(random_scenario(seed, fam));
    auto bundle = azema_bundle(model.space, model.tau);
    std::mt19937_64 rng(seed);
    auto v = random_increasing<Rational>(rng, model.space->filtration(), bundle.horizon());
    CHECK(fixtures::all_zero(compensator_identity_check(v, bundle)));
  }
}

}
