#include "mrisk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "mrisk/calculus.hpp"
#include "mrisk/error.hpp"
#include "mrisk/linalg.hpp"

namespace mrisk {

// ---- least squares ------------------------------------------------------------

namespace {

struct Column {
  int asset;
  int step;
  int atom;  // atom index at step - 1; -1 for the constant column
};

template <class Scalar>
bool negligible(const Scalar& x, const Scalar& scale) {
  if constexpr (ScalarTraits<Scalar>::exact) {
    return sgn(x) == 0;
  } else {
    return std::abs(x) <= 1e-14 * std::max(1.0, std::abs(scale));
  }
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

template <class Scalar>
OracleSolution<Scalar> brute_force_hedge(const FilteredSpace<Scalar>& space,
                                         const Slice<Scalar>& payoff,
                                         const std::vector<Process<Scalar>>& assets,
                                         const Filtration& filtration, OracleOptions options) {
  const int n = space.horizon();
  const int outcomes = space.size();
  if (static_cast<int>(payoff.size()) != outcomes) throw InputError("oracle: payoff size mismatch");
  if (options.check_martingales) {
    for (size_t i = 0; i < assets.size(); ++i) {
      auto diag = is_martingale(space, assets[i], filtration);
      if (!diag.ok) {
        throw ValidationError("oracle: asset " + std::to_string(i) + " is not a martingale (t=" +
                              std::to_string(diag.t) + ")");
      }
    }
  }

  // Design columns: terminal values of 1_A dX_{i,s}.  Zero columns are dropped.
  std::vector<Column> cols{{-1, 0, -1}};
  std::vector<std::vector<std::pair<int, Scalar>>> entries(outcomes);  // per outcome: (col, value)
  for (int w = 0; w < outcomes; ++w) entries[w].push_back({0, Scalar(1)});
  for (size_t i = 0; i < assets.size(); ++i) {
    for (int s = 1; s <= n; ++s) {
      const Partition& part = filtration[s - 1];
      for (int a = 0; a < part.size(); ++a) {
        bool any = false;
        for (int w : part.atoms[a])
          if (!is_zero(assets[i].delta(s, w))) any = true;
        if (!any) continue;
        const int c = static_cast<int>(cols.size());
        cols.push_back({static_cast<int>(i), s, a});
        for (int w : part.atoms[a]) {
          Scalar v = assets[i].delta(s, w);
          if (!is_zero(v)) entries[w].push_back({c, v});
        }
        if (static_cast<int>(cols.size()) > options.max_unknowns) {
          throw InputError("oracle: more than " + std::to_string(options.max_unknowns) +
                           " unknowns");
        }
      }
    }
  }
  const int k = static_cast<int>(cols.size());

  // Sparse normal equations E[col_a col_b] x = E[col_a payoff].
  std::vector<std::map<int, Scalar>> gram(k);
  std::vector<Scalar> rhs(k, Scalar(0));
  Scalar scale(0);
  for (int w = 0; w < outcomes; ++w) {
    const Scalar& p = space.weight(w);
    for (const auto& [a, va] : entries[w]) {
      rhs[a] += p * va * payoff[w];
      for (const auto& [c, vc] : entries[w]) gram[a][c] += p * va * vc;
    }
  }
  for (int a = 0; a < k; ++a) scale = std::max<Scalar>(scale, abs_value(gram[a][a]));

  // Connected blocks of the sparsity graph, each solved densely.
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  for (int a = 0; a < k; ++a)
    for (const auto& [c, v] : gram[a])
      if (c != a && !negligible(v, scale)) parent[find_root(parent, a)] = find_root(parent, c);
  std::map<int, std::vector<int>> blocks;
  for (int a = 0; a < k; ++a) blocks[find_root(parent, a)].push_back(a);

  OracleSolution<Scalar> sol;
  sol.unknowns = k;
  std::vector<Scalar> x(k, Scalar(0));
  for (const auto& [root, members] : blocks) {
    const int m = static_cast<int>(members.size());
    Matrix<Scalar> a(m, std::vector<Scalar>(m, Scalar(0)));
    std::vector<Scalar> bvec(m);
    for (int i = 0; i < m; ++i) {
      bvec[i] = rhs[members[i]];
      for (int j = 0; j < m; ++j) {
        auto it = gram[members[i]].find(members[j]);
        if (it != gram[members[i]].end()) a[i][j] = it->second;
      }
    }
    int r = 0;
    auto xs = min_norm_solve(a, bvec, &r);
    sol.rank += r;
    for (int i = 0; i < m; ++i) x[members[i]] = xs[i];
    sol.largest_block = std::max(sol.largest_block, m);
  }
  sol.blocks = static_cast<int>(blocks.size());

  sol.c = x[0];
  sol.strategy.assign(assets.size(), Process<Scalar>(n, outcomes, Tag::Predictable));
  for (int c = 1; c < k; ++c) {
    const Column& col = cols[c];
    for (int w : filtration[col.step - 1].atoms[col.atom])
      sol.strategy[col.asset].at(col.step, w) = x[c];
  }
  Scalar risk(0);
  for (int w = 0; w < outcomes; ++w) {
    Scalar e = payoff[w];
    for (const auto& [c, v] : entries[w]) e -= x[c] * v;
    risk += space.weight(w) * e * e;
  }
  sol.R0 = risk;
  return sol;
}

template <class Scalar>
Scalar terminal_risk(const FilteredSpace<Scalar>& space, const Slice<Scalar>& payoff,
                     const Scalar& c, const std::vector<Process<Scalar>>& strategy,
                     const std::vector<Process<Scalar>>& assets) {
  Process<Scalar> gains = integrate(strategy, assets);
  const int n = space.horizon();
  Scalar risk(0);
  for (int w = 0; w < space.size(); ++w) {
    Scalar e = payoff[w] - c - gains(n, w);
    risk += space.weight(w) * e * e;
  }
  return risk;
}

// ---- random scenarios -----------------------------------------------------------

const char* family_name(Family f) {
  switch (f) {
    case Family::PseudoStopping: return "pseudo-stopping";
    case Family::Independent: return "independent";
    case Family::FStopping: return "f-stopping";
    case Family::HazardModulated: return "hazard-modulated";
    case Family::Unconstrained: return "unconstrained";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  for (Family f : all_families())
    if (name == family_name(f)) return f;
  throw InputError("unknown scenario family '" + name + "'");
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> v{Family::PseudoStopping, Family::Independent,
                                     Family::FStopping, Family::HazardModulated,
                                     Family::Unconstrained};
  return v;
}

const char* claim_shape_name(ClaimShape s) {
  switch (s) {
    case ClaimShape::PureEndowment: return "pure-endowment";
    case ClaimShape::TermInsurance: return "term-insurance";
    case ClaimShape::Endowment: return "endowment";
    case ClaimShape::Annuity: return "annuity";
    case ClaimShape::PredictableTerm: return "predictable-term";
  }
  return "?";
}

Rational random_rational(std::mt19937_64& rng, int range) {
  std::uniform_int_distribution<int> num(-range, range), den(1, 4);
  const int p = num(rng);
  const int q = den(rng);
  Rational r(p, q);
  r.canonicalize();
  return r;
}

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Probability in (0, 1) with small denominators.
Rational open_unit(std::mt19937_64& rng) {
  int den = uniform(rng, 2, 6);
  Rational r(uniform(rng, 1, den - 1), den);
  r.canonicalize();
  return r;
}

std::vector<Rational> random_simplex(std::mt19937_64& rng, int k) {
  std::vector<Rational> w(k);
  Rational total = 0;
  for (auto& x : w) {
    x = uniform(rng, 1, 4);
    total += x;
  }
  for (auto& x : w) {
    x /= total;
    x.canonicalize();
  }
  return w;
}

struct Builder {
  MarketTree tree;
  std::vector<std::vector<int>> level;  // node indices per time

  int add(int parent, const std::string& label, const Rational& prob, const Rational& s) {
    TreeNode node;
    node.label = label;
    node.parent = parent;
    node.time = parent < 0 ? 0 : tree.nodes[parent].time + 1;
    node.prob = prob;
    node.coords = {s};
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size()) - 1;
  }
};

std::string branch_label(int j) { return std::string(1, static_cast<char>('a' + j)); }

// Generic recombination-free tree with martingale increments.
Builder random_tree(std::mt19937_64& rng, int steps, int max_branching, int max_leaves) {
  Builder b;
  b.tree.horizon = steps;
  b.tree.coordinates = {"S"};
  b.tree.traded = {"S"};
  b.level.assign(steps + 1, {});
  b.level[0].push_back(b.add(-1, "", Rational(1), Rational(uniform(rng, 0, 4))));
  for (int t = 0; t < steps; ++t) {
    const int parents = static_cast<int>(b.level[t].size());
    for (int idx = 0; idx < parents; ++idx) {
      const int v = b.level[t][idx];
      const long scale = 1L << (steps - t - 1);
      int branching = uniform(rng, 2, max_branching);
      // Keep the final leaf count within budget, assuming binary splits later.
      while (branching > 2 &&
             (static_cast<long>(b.level[t + 1].size()) + branching + 2L * (parents - idx - 1)) *
                     scale > max_leaves)
        --branching;
      auto probs = random_simplex(rng, branching);
      std::vector<Rational> inc(branching);
      Rational drift = 0;
      for (int j = 0; j < branching; ++j) {
        inc[j] = uniform(rng, -3, 3);
        drift += probs[j] * inc[j];
      }
      const Rational s = b.tree.nodes[v].coords[0];
      for (int j = 0; j < branching; ++j) {
        Rational value = s + inc[j] - drift;
        value.canonicalize();
        b.level[t + 1].push_back(b.add(v, branch_label(j), probs[j], value));
      }
    }
  }
  return b;
}

// Joint weights over (leaf, tau) -> marginal transition probabilities and
// conditional rows.
ExplicitScenario from_joint(Builder& b, const std::vector<std::vector<Rational>>& joint) {
  const int n = b.tree.horizon;
  const auto& leaves = b.level[n];
  std::vector<Rational> mass(b.tree.nodes.size(), Rational(0));
  ExplicitScenario out;
  for (size_t i = 0; i < leaves.size(); ++i) {
    Rational total = 0;
    for (const auto& x : joint[i]) total += x;
    for (int v = leaves[i]; v >= 0; v = b.tree.nodes[v].parent) mass[v] += total;
    std::vector<Rational> row(n + 1);
    for (int k = 0; k <= n; ++k) {
      row[k] = joint[i][k] / total;
      row[k].canonicalize();
    }
    out.tau_rows.push_back(row);
  }
  for (size_t v = 1; v < b.tree.nodes.size(); ++v) {
    Rational p = mass[v] / mass[b.tree.nodes[v].parent];
    p.canonicalize();
    b.tree.nodes[v].prob = p;
  }
  out.tree = b.tree;
  return out;
}

std::vector<int> path_of(const Builder& b, int leaf) {
  std::vector<int> path(b.tree.horizon + 1);
  for (int v = leaf; v >= 0; v = b.tree.nodes[v].parent) path[b.tree.nodes[v].time] = v;
  return path;
}

ExplicitScenario hazard_modulated(std::mt19937_64& rng, int steps, int max_leaves) {
  // Children: size class k in {1, 2} times a fair sign.  Size-class odds depend
  // on whether the insured died at or before the parent's time.
  Builder b;
  b.tree.horizon = steps;
  b.tree.coordinates = {"S"};
  b.tree.traded = {"S"};
  b.level.assign(steps + 1, {});
  b.level[0].push_back(b.add(-1, "", Rational(1), Rational(0)));
  const Rational a1 = uniform(rng, 1, 2), a2 = a1 + uniform(rng, 1, 2);
  std::map<int, Rational> hazard, odds_alive, odds_dead;
  for (int t = 0; t < steps; ++t) {
    const bool split = static_cast<long>(b.level[t].size()) * 4 *
                           static_cast<long>(std::pow(2, steps - t - 1)) <=
                       max_leaves;
    for (int v : b.level[t]) {
      hazard[v] = open_unit(rng);
      odds_alive[v] = open_unit(rng);
      odds_dead[v] = open_unit(rng);
      if (odds_dead[v] == odds_alive[v]) odds_dead[v] = 1 - odds_alive[v];
      const Rational s = b.tree.nodes[v].coords[0];
      if (split) {
        // Labels sort as "1+" < "1-" < "2+" < "2-".
        b.level[t + 1].push_back(b.add(v, "1+", Rational(1, 4), s + a1));
        b.level[t + 1].push_back(b.add(v, "1-", Rational(1, 4), s - a1));
        b.level[t + 1].push_back(b.add(v, "2+", Rational(1, 4), s + a2));
        b.level[t + 1].push_back(b.add(v, "2-", Rational(1, 4), s - a2));
      } else {
        b.level[t + 1].push_back(b.add(v, "1+", Rational(1, 2), s + a1));
        b.level[t + 1].push_back(b.add(v, "1-", Rational(1, 2), s - a1));
      }
    }
  }
  const auto& leaves = b.level[steps];
  std::vector<std::vector<Rational>> joint(leaves.size(), std::vector<Rational>(steps + 1));
  for (size_t i = 0; i < leaves.size(); ++i) {
    auto path = path_of(b, leaves[i]);
    // Walk forward over death times: tau = s for s = 1..N, or beyond.
    for (int tau = 1; tau <= steps + 1; ++tau) {
      Rational p = 1;
      for (int t = 0; t < steps; ++t) {
        const int v = path[t];
        const int child = path[t + 1];
        const bool dead = tau <= t;
        const std::string& label = b.tree.nodes[child].label;
        const bool two_classes = b.tree.children(v).size() == 4;
        Rational pk = 1;
        if (two_classes) pk = label[0] == '1' ? (dead ? odds_dead[v] : odds_alive[v])
                                              : 1 - (dead ? odds_dead[v] : odds_alive[v]);
        p *= pk * Rational(1, 2);
        if (!dead) p *= (tau == t + 1) ? hazard[v] : (tau > t + 1 ? 1 - hazard[v] : Rational(1));
      }
      p.canonicalize();
      joint[i][tau - 1] = p;
    }
  }
  return from_joint(b, joint);
}

}  // namespace

ExplicitScenario random_scenario(std::uint64_t seed, Family family, ScenarioSize size) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(family) + 1);
  const int steps_cap = std::clamp(size.steps, 1, 3);
  const int branching = std::clamp(size.branching, 2, 4);
  int steps = uniform(rng, family == Family::HazardModulated ? std::min(2, steps_cap) : 1, steps_cap);
  const int max_leaves = std::max(2, size.max_outcomes / (steps + 1));

  if (family == Family::HazardModulated) return hazard_modulated(rng, steps, max_leaves);

  Builder b = random_tree(rng, steps, branching, max_leaves);
  const auto& leaves = b.level[steps];
  std::vector<std::vector<Rational>> joint(leaves.size(), std::vector<Rational>(steps + 1));
  // Leaf probability is the product of the (already martingale-adjusted)
  // transition probabilities; rows below are conditional laws.
  auto leaf_prob = [&](int leaf) {
    Rational p = 1;
    for (int v = leaf; b.tree.nodes[v].parent >= 0; v = b.tree.nodes[v].parent) p *= b.tree.nodes[v].prob;
    return p;
  };

  switch (family) {
    case Family::Independent: {
      auto law = random_simplex(rng, steps + 1);
      for (size_t i = 0; i < leaves.size(); ++i)
        for (int k = 0; k <= steps; ++k) joint[i][k] = leaf_prob(leaves[i]) * law[k];
      break;
    }
    case Family::FStopping: {
      std::map<int, bool> stop;
      for (int t = 1; t <= steps; ++t)
        for (int v : b.level[t]) stop[v] = uniform(rng, 0, 2) == 0;
      for (size_t i = 0; i < leaves.size(); ++i) {
        auto path = path_of(b, leaves[i]);
        int tau = steps + 1;
        for (int t = 1; t <= steps && tau > steps; ++t)
          if (stop[path[t]]) tau = t;
        joint[i][tau - 1] = leaf_prob(leaves[i]);
      }
      break;
    }
    case Family::PseudoStopping: {
      std::map<int, Rational> hazard;
      for (int t = 1; t <= steps; ++t)
        for (int v : b.level[t]) hazard[v] = open_unit(rng);
      for (size_t i = 0; i < leaves.size(); ++i) {
        auto path = path_of(b, leaves[i]);
        Rational alive = 1;
        for (int t = 1; t <= steps; ++t) {
          joint[i][t - 1] = leaf_prob(leaves[i]) * alive * hazard[path[t]];
          alive *= 1 - hazard[path[t]];
        }
        joint[i][steps] = leaf_prob(leaves[i]) * alive;
      }
      break;
    }
    case Family::Unconstrained:
    default: {
      for (size_t i = 0; i < leaves.size(); ++i) {
        auto law = random_simplex(rng, steps + 1);
        for (int k = 0; k <= steps; ++k) {
          if (uniform(rng, 0, 3) == 0 && k < steps) law[k] = 0;
          joint[i][k] = leaf_prob(leaves[i]) * law[k];
        }
        Rational total = 0;
        for (const auto& x : joint[i]) total += x;
        if (sgn(total) == 0) joint[i][steps] = leaf_prob(leaves[i]);
      }
      break;
    }
  }
  for (auto& row : joint)
    for (auto& x : row) x.canonicalize();
  return from_joint(b, joint);
}

// ---- random processes and claims ------------------------------------------------

template <class Scalar>
Process<Scalar> random_process(std::mt19937_64& rng, const Filtration& filtration, int horizon,
                               Tag tag) {
  const int outcomes = static_cast<int>(filtration[0].atom_of.size());
  Process<Scalar> x(horizon, outcomes, tag);
  for (int t = 1; t <= horizon; ++t) {
    const Partition& part = filtration[tag == Tag::Predictable ? t - 1 : t];
    for (const auto& atom : part.atoms) {
      Scalar v = ScalarTraits<Scalar>::from_rational(random_rational(rng));
      for (int w : atom) x.at(t, w) = v;
    }
  }
  return x;
}

template <class Scalar>
Process<Scalar> random_increasing(std::mt19937_64& rng, const Filtration& filtration, int horizon) {
  const int outcomes = static_cast<int>(filtration[0].atom_of.size());
  Process<Scalar> x(horizon, outcomes, Tag::Adapted);
  for (int t = 1; t <= horizon; ++t) {
    for (const auto& atom : filtration[t].atoms) {
      Rational r = random_rational(rng);
      Scalar inc = ScalarTraits<Scalar>::from_rational(r < 0 ? Rational(-r) : r);
      for (int w : atom) x.at(t, w) = x(t - 1, w) + inc;
    }
  }
  return x;
}

template <class Scalar>
Process<Scalar> random_f_martingale(std::mt19937_64& rng, const Model<Scalar>& model) {
  const auto& space = *model.space;
  const int n = space.horizon();
  Slice<Scalar> terminal(space.size());
  std::map<int, Scalar> by_node;
  for (int w = 0; w < space.size(); ++w) {
    int node = model.node[n][w];
    auto it = by_node.find(node);
    if (it == by_node.end())
      it = by_node.emplace(node, ScalarTraits<Scalar>::from_rational(random_rational(rng))).first;
    terminal[w] = it->second;
  }
  return martingale_of(space, space.filtration(), terminal);
}

template <class Scalar>
Claim<Scalar> random_claim(std::mt19937_64& rng, const Model<Scalar>& model,
                           const EnlargementBundle<Scalar>& b, ClaimShape shape, int term) {
  const int n = b.horizon();
  if (term < 0) term = uniform(rng, 1, n);
  const auto& f = b.f_filtration();
  auto node_values = [&](int t, bool nonnegative) {
    std::map<int, Scalar> by_node;
    Slice<Scalar> out(b.outcomes());
    for (int w = 0; w < b.outcomes(); ++w) {
      int node = model.node[t][w];
      auto it = by_node.find(node);
      if (it == by_node.end()) {
        Rational r = random_rational(rng);
        if (nonnegative && r < 0) r = -r;
        it = by_node.emplace(node, ScalarTraits<Scalar>::from_rational(r)).first;
      }
      out[w] = it->second;
    }
    return out;
  };
  auto death_process = [&](bool predictable) {
    Process<Scalar> k(n, b.outcomes(), Tag::Adapted);
    for (int t = 1; t <= term; ++t) k.set_slice(t, node_values(predictable ? t - 1 : t, false));
    return k;
  };
  (void)f;
  switch (shape) {
    case ClaimShape::PureEndowment:
      return Claim<Scalar>::pure_endowment(term, node_values(term, false), b);
    case ClaimShape::TermInsurance:
      return Claim<Scalar>::term_insurance(term, death_process(false), b);
    case ClaimShape::PredictableTerm:
      return Claim<Scalar>::term_insurance(term, death_process(true), b);
    case ClaimShape::Endowment:
      return Claim<Scalar>::endowment(term, node_values(term, false), death_process(false), b);
    case ClaimShape::Annuity: {
      Process<Scalar> c(n, b.outcomes(), Tag::Adapted);
      for (int t = 1; t <= n; ++t) {
        auto inc = node_values(t, true);
        for (int w = 0; w < b.outcomes(); ++w) c.at(t, w) = c(t - 1, w) + inc[w];
      }
      return Claim<Scalar>::annuity(term, c, b);
    }
  }
  throw InputError("unknown claim shape");
}

#define MRISK_INSTANTIATE_ORACLE(S)                                                            \
  template OracleSolution<S> brute_force_hedge(const FilteredSpace<S>&, const Slice<S>&,      \
                                               const std::vector<Process<S>>&,                \
                                               const Filtration&, OracleOptions);             \
  template S terminal_risk(const FilteredSpace<S>&, const Slice<S>&, const S&,                \
                           const std::vector<Process<S>>&, const std::vector<Process<S>>&);   \
  template Process<S> random_process(std::mt19937_64&, const Filtration&, int, Tag);          \
  template Process<S> random_increasing(std::mt19937_64&, const Filtration&, int);            \
  template Process<S> random_f_martingale(std::mt19937_64&, const Model<S>&);                 \
  template Claim<S> random_claim(std::mt19937_64&, const Model<S>&, const EnlargementBundle<S>&, \
                                 ClaimShape, int);

MRISK_INSTANTIATE_ORACLE(Rational)
MRISK_INSTANTIATE_ORACLE(double)

}  // namespace mrisk
