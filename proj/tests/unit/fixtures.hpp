#pragma once

#include <functional>
#include <string>

#include "mrisk/enlargement.hpp"
#include "mrisk/model.hpp"
#include "mrisk/space.hpp"

namespace fixtures {

using mrisk::Rational;

inline Rational q(long p, long d = 1) {
  Rational r(p, d);
  r.canonicalize();
  return r;
}

// One fair +-1 step from S_0 = 1.
inline mrisk::BinomialMarket coin_market(int horizon = 1) {
  mrisk::BinomialMarket m;
  m.horizon = horizon;
  m.s0 = 1;
  m.up = 1;
  m.down = -1;
  m.p = q(1, 2);
  return m;
}

// Fair death coin at t = 1, independent of the market.
template <class Scalar = Rational>
mrisk::Model<Scalar> cb1() {
  return mrisk::build_space<Scalar>(coin_market(), mrisk::IndependentDeath{{q(1, 2)}, q(1, 2)});
}

// Death exactly on the down move.
template <class Scalar = Rational>
mrisk::Model<Scalar> cs1() {
  mrisk::StoppingRuleDeath rule;
  rule.predicate = [](const mrisk::PathView& v) { return v.value(0) < 1; };
  rule.text = "S < 1";
  return mrisk::build_space<Scalar>(coin_market(), rule);
}

template <class Scalar>
bool went_up(const mrisk::Model<Scalar>& m, int w, int t = 1) {
  return m.tree.nodes[m.node[t][w]].label == "u";
}

template <class Scalar>
mrisk::Slice<Scalar> slice_of(int n, const std::function<Scalar(int)>& f) {
  mrisk::Slice<Scalar> s(n);
  for (int w = 0; w < n; ++w) s[w] = f(w);
  return s;
}

template <class Scalar>
mrisk::Process<Scalar> process_of(int horizon, int n, mrisk::Tag tag,
                                  const std::function<Scalar(int, int)>& f) {
  mrisk::Process<Scalar> x(horizon, n, tag);
  for (int t = 0; t <= horizon; ++t)
    for (int w = 0; w < n; ++w) x.at(t, w) = f(t, w);
  return x;
}

template <class Scalar>
bool all_zero(const mrisk::Process<Scalar>& x) {
  for (const auto& v : x.values())
    if (!mrisk::is_zero(v)) return false;
  return true;
}

template <class Scalar>
bool all_equal(const mrisk::Process<Scalar>& x, const Scalar& c) {
  for (const auto& v : x.values())
    if (!mrisk::is_zero(Scalar(v - c))) return false;
  return true;
}

}  // namespace fixtures
