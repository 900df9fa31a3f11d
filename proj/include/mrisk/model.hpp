#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mrisk/enlargement.hpp"
#include "mrisk/space.hpp"

namespace mrisk {

/// A node of the market tree.  `prob` is the transition probability from
/// the parent (1 for the root); `coords` holds one value per coordinate.
struct TreeNode {
  std::string label;  // branch label, unique among siblings
  int parent = -1;
  int time = 0;
  Rational prob = 1;
  std::vector<Rational> coords;
};

/// Breadth-first market tree.  Children of a node are contiguous and sorted by
/// label, which makes node indices canonical.
struct MarketTree {
  int horizon = 0;
  std::vector<std::string> coordinates;
  std::vector<std::string> traded;
  std::vector<TreeNode> nodes;

  std::vector<int> children(int node) const;
  std::vector<int> leaves() const;
  int ancestor(int node, int time) const;
  int coordinate_index(const std::string& name) const;
  /// Path identifier: branch labels joined by '.'; the root is "root".
  std::string path_id(int node) const;
};

/// Read access to a node's history for rule and hazard expressions.
struct PathView {
  const MarketTree* tree = nullptr;
  int node = 0;

  int time() const { return tree->nodes[node].time; }
  const Rational& value(int coord, int at_time) const;
  const Rational& value(int coord) const { return value(coord, time()); }
};

struct ExplicitTreeMarket {
  MarketTree tree;  // nodes in any order; children are sorted on build
};

/// Additive binomial model; increments are recentred so S is a martingale.
struct BinomialMarket {
  int horizon = 1;
  Rational s0 = 0;
  Rational up = 1;
  Rational down = -1;
  Rational p = Rational(1, 2);
};

/// Traded S and non-traded Y moving as independent additive binomials.
struct TwoDriverMarket {
  int horizon = 1;
  BinomialMarket s;
  BinomialMarket y;
};

using MarketSpec = std::variant<ExplicitTreeMarket, BinomialMarket, TwoDriverMarket>;

/// q[k] = P(tau = k + 1) for k < N; q_beyond = P(tau > N).
struct IndependentDeath {
  std::vector<Rational> q;
  Rational q_beyond = 0;
};

/// tau = first t >= 1 whose node satisfies the predicate, beyond otherwise.
struct StoppingRuleDeath {
  std::function<bool(const PathView&)> predicate;
  std::string text;
};

/// Death at t has probability hazard(node at t-1) given survival to t-1.  A
/// signal coin Z_t, observed in F, equals 1 with probability `signal_death`
/// when tau = t and `signal_other` otherwise.
struct HazardModulatedDeath {
  std::function<Rational(const PathView&)> hazard;
  std::string text;
  Rational signal_death = Rational(3, 4);
  Rational signal_other = Rational(1, 4);
};

/// rows[leaf] = law of tau over {1..N, beyond} given the terminal market
/// node; leaves in canonical order.
struct MatrixDeath {
  std::vector<std::vector<Rational>> rows;
};

using DeathLaw = std::variant<IndependentDeath, StoppingRuleDeath, HazardModulatedDeath, MatrixDeath>;

/// Canonical explicit form: a market tree with marginal transition
/// probabilities and the conditional law of tau per leaf.
struct ExplicitScenario {
  MarketTree tree;
  std::vector<std::vector<Rational>> tau_rows;  // per leaf, N + 1 columns
};

ExplicitScenario to_explicit(const MarketSpec& market, const DeathLaw& death);

/// Finite model: space, death time and F-adapted coordinate processes.
template <class Scalar>
struct Model {
  std::shared_ptr<const FilteredSpace<Scalar>> space;
  RandomTime tau;
  MarketTree tree;
  std::vector<Process<Scalar>> coordinates;
  std::vector<int> traded;             // indices into coordinates
  std::vector<std::vector<int>> node;  // node[t][w]: market node of outcome w at t

  std::vector<Process<Scalar>> assets() const;
  const Process<Scalar>& coordinate(const std::string& name) const;
};

template <class Scalar>
Model<Scalar> instantiate(const ExplicitScenario& scenario);

template <class Scalar>
Model<Scalar> build_space(const MarketSpec& market, const DeathLaw& death) {
  return instantiate<Scalar>(to_explicit(market, death));
}

}  // namespace mrisk
