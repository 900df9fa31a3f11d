#include "doctest.h"
#include "fixtures.hpp"
#include "mrisk/error.hpp"

using namespace mrisk;
using fixtures::q;

TEST_SUITE("space") {

TEST_CASE("coin-with-death space has four equally likely outcomes") {
  auto m = fixtures::cb1();
  REQUIRE(m.space->size() == 4);
  for (const auto& w : m.space->weights()) CHECK(w == q(1, 4));
  CHECK(validate_space(*m.space).empty());
}

TEST_CASE("death on the down move is read off the path") {
  auto m = fixtures::cs1();
  for (int w = 0; w < m.space->size(); ++w) {
    CHECK(m.tau[w] == (fixtures::went_up(m, w) ? m.tau.beyond() : 1));
  }
}

TEST_CASE("validator flags a non-refining filtration") {
  Partition split = Partition::from_keys(4, [](int w) { return w / 2; });
  Partition other = Partition::from_keys(4, [](int w) { return w % 2; });
  Filtration f{Partition::trivial(4), split, other};
  std::vector<Rational> w(4, q(1, 4));
  auto v = validate_space(2, w, f);
  REQUIRE_FALSE(v.empty());
  CHECK(v.front().kind == "refinement");
  CHECK(v.front().t == 2);
  CHECK_THROWS_AS(FilteredSpace<Rational>::create(2, w, f), InputError);
}

TEST_CASE("float weights summing to 0.999 fail the normalisation check") {
  Filtration f{Partition::trivial(2), Partition::from_keys(2, [](int w) { return w; })};
  auto v = validate_space<double>(1, {0.5, 0.499}, f);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == "sum");
}

TEST_CASE("negative weight is rejected") {
  Filtration f{Partition::trivial(2), Partition::from_keys(2, [](int w) { return w; })};
  auto v = validate_space<Rational>(1, {q(3, 2), q(-1, 2)}, f);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].kind == "weight");
}

TEST_CASE("conditional expectations on the coin") {
  auto m = fixtures::cb1();
  const auto& sp = *m.space;
  int n = sp.size();
  auto up = fixtures::slice_of<Rational>(n, [&](int w) { return Rational(fixtures::went_up(m, w)); });
  auto up_alive = fixtures::slice_of<Rational>(
      n, [&](int w) { return Rational(fixtures::went_up(m, w) && m.tau[w] > 1); });
  auto c = fixtures::slice_of<Rational>(n, [](int) { return q(7, 3); });
  for (int w = 0; w < n; ++w) {
    CHECK(conditional_expectation(sp, up, 0)[w] == q(1, 2));
    CHECK(conditional_expectation(sp, up_alive, 0)[w] == q(1, 4));
    CHECK(conditional_expectation(sp, c, 0)[w] == q(7, 3));
    CHECK(conditional_expectation(sp, c, 1)[w] == q(7, 3));
  }
  CHECK(expectation(sp, up_alive) == q(1, 4));
}

TEST_CASE("optional projection of an adapted process is the identity") {
  auto m = fixtures::cb1();
  const auto& S = m.coordinates[0];
  CHECK(equal_within(project(*m.space, S, Projection::Optional, m.space->filtration()), S));
}

TEST_CASE("survival indicator projected on F") {
  for (bool stopping : {false, true}) {
    auto m = stopping ? fixtures::cs1() : fixtures::cb1();
    int n = m.space->size();
    auto x = fixtures::process_of<Rational>(1, n, Tag::Raw, [&](int t, int w) {
      return Rational(t == 1 && m.tau[w] > 1);
    });
    auto p = project(*m.space, x, Projection::Optional, m.space->filtration());
    for (int w = 0; w < n; ++w) {
      Rational want = stopping ? Rational(fixtures::went_up(m, w)) : q(1, 2);
      CHECK(p(1, w) == want);
    }
  }
}

TEST_CASE("tagged process rejects values that are not adapted") {
  auto m = fixtures::cb1();
  int n = m.space->size();
  std::vector<Rational> vals(2 * n, Rational(0));
  for (int w = 0; w < n; ++w) vals[n + w] = m.tau[w];
  CHECK_THROWS(Process<Rational>::tagged(1, n, vals, Tag::Adapted, m.space->filtration()));
}

}
