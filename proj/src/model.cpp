#include "mrisk/model.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mrisk/error.hpp"

namespace mrisk {

std::vector<int> MarketTree::children(int node) const {
  std::vector<int> out;
  for (int i = node + 1; i < static_cast<int>(nodes.size()); ++i) {
    if (nodes[i].parent == node) out.push_back(i);
  }
  return out;
}

std::vector<int> MarketTree::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    if (nodes[i].time == horizon) out.push_back(i);
  }
  return out;
}

int MarketTree::ancestor(int node, int time) const {
  while (nodes[node].time > time) node = nodes[node].parent;
  return node;
}

int MarketTree::coordinate_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(coordinates.size()); ++i) {
    if (coordinates[i] == name) return i;
  }
  return -1;
}

std::string MarketTree::path_id(int node) const {
  if (nodes[node].parent < 0) return "root";
  std::vector<std::string> parts;
  for (int v = node; nodes[v].parent >= 0; v = nodes[v].parent) parts.push_back(nodes[v].label);
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out += '.';
    out += *it;
  }
  return out;
}

const Rational& PathView::value(int coord, int at_time) const {
  if (at_time < 0 || at_time > time()) {
    throw InputError("path value requested at time " + std::to_string(at_time) +
                     " from a node at time " + std::to_string(time()));
  }
  return tree->nodes[tree->ancestor(node, at_time)].coords[coord];
}

namespace {

// Rebuilds a tree breadth-first with children sorted by label and checks
// every structural requirement.
MarketTree canonicalize(const MarketTree& in) {
  const int count = static_cast<int>(in.nodes.size());
  if (in.horizon < 1) throw InputError("market horizon must be at least 1");
  if (count == 0) throw InputError("market tree has no nodes");
  if (in.coordinates.empty()) throw InputError("market tree has no coordinates");
  std::vector<std::vector<int>> kids(count);
  int root = -1;
  for (int i = 0; i < count; ++i) {
    const auto& n = in.nodes[i];
    if (n.coords.size() != in.coordinates.size()) {
      throw InputError("node " + std::to_string(i) + " has " + std::to_string(n.coords.size()) +
                       " coordinate values, expected " + std::to_string(in.coordinates.size()));
    }
    if (n.parent < 0) {
      if (root >= 0) throw InputError("market tree has more than one root");
      root = i;
    } else if (n.parent >= count) {
      throw InputError("node " + std::to_string(i) + " has an unknown parent");
    } else {
      kids[n.parent].push_back(i);
    }
  }
  if (root < 0) throw InputError("market tree has no root");
  for (const auto& name : in.traded) {
    if (std::find(in.coordinates.begin(), in.coordinates.end(), name) == in.coordinates.end()) {
      throw InputError("traded asset '" + name + "' is not a coordinate");
    }
  }

  MarketTree out;
  out.horizon = in.horizon;
  out.coordinates = in.coordinates;
  out.traded = in.traded;
  std::vector<int> queue{root};
  std::vector<int> new_index(count, -1);
  for (size_t head = 0; head < queue.size(); ++head) {
    int old = queue[head];
    TreeNode node = in.nodes[old];
    node.parent = node.parent < 0 ? -1 : new_index[node.parent];
    node.time = node.parent < 0 ? 0 : out.nodes[node.parent].time + 1;
    if (node.parent < 0) node.prob = 1;
    new_index[old] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(node);

    auto& ch = kids[old];
    std::sort(ch.begin(), ch.end(),
              [&](int a, int b) { return in.nodes[a].label < in.nodes[b].label; });
    std::set<std::string> labels;
    Rational total(0);
    for (int c : ch) {
      if (!labels.insert(in.nodes[c].label).second) {
        throw InputError("duplicate branch label '" + in.nodes[c].label + "' under node " +
                         out.path_id(new_index[old]));
      }
      if (sgn(in.nodes[c].prob) <= 0 || in.nodes[c].prob > 1) {
        throw InputError("transition probability " + in.nodes[c].prob.get_str() + " at branch '" +
                         in.nodes[c].label + "' must lie in (0, 1]");
      }
      total += in.nodes[c].prob;
      queue.push_back(c);
    }
    if (node.time < in.horizon) {
      if (ch.empty()) {
        throw InputError("node " + out.path_id(new_index[old]) + " at time " +
                         std::to_string(node.time) + " has no successors");
      }
      if (total != 1) {
        throw InputError("successor probabilities of node " + out.path_id(new_index[old]) +
                         " sum to " + total.get_str());
      }
    } else if (!ch.empty()) {
      throw InputError("node " + out.path_id(new_index[old]) + " lies beyond the horizon");
    }
  }
  if (static_cast<int>(out.nodes.size()) != count) {
    throw InputError("market tree is not connected");
  }
  return out;
}

MarketTree binomial_tree(const BinomialMarket& b) {
  if (b.horizon < 1) throw InputError("binomial horizon must be at least 1");
  if (!(sgn(b.p) > 0 && b.p < 1)) throw InputError("binomial p must lie strictly between 0 and 1");
  Rational drift = b.p * b.up + (1 - b.p) * b.down;
  MarketTree t;
  t.horizon = b.horizon;
  t.coordinates = {"S"};
  t.traded = {"S"};
  t.nodes.push_back({"", -1, 0, Rational(1), {b.s0}});
  for (size_t head = 0; head < t.nodes.size(); ++head) {
    if (t.nodes[head].time == b.horizon) continue;
    Rational s = t.nodes[head].coords[0];
    int time = t.nodes[head].time + 1;
    t.nodes.push_back({"d", static_cast<int>(head), time, 1 - b.p, {Rational(s + b.down - drift)}});
    t.nodes.push_back({"u", static_cast<int>(head), time, b.p, {Rational(s + b.up - drift)}});
  }
  return t;
}

MarketTree two_driver_tree(const TwoDriverMarket& m) {
  if (m.horizon < 1) throw InputError("two-driver horizon must be at least 1");
  for (const auto* b : {&m.s, &m.y}) {
    if (!(sgn(b->p) > 0 && b->p < 1)) {
      throw InputError("two-driver p must lie strictly between 0 and 1");
    }
  }
  Rational drift = m.s.p * m.s.up + (1 - m.s.p) * m.s.down;
  MarketTree t;
  t.horizon = m.horizon;
  t.coordinates = {"S", "Y"};
  t.traded = {"S"};
  t.nodes.push_back({"", -1, 0, Rational(1), {m.s.s0, m.y.s0}});
  for (size_t head = 0; head < t.nodes.size(); ++head) {
    if (t.nodes[head].time == m.horizon) continue;
    Rational s = t.nodes[head].coords[0];
    Rational y = t.nodes[head].coords[1];
    int time = t.nodes[head].time + 1;
    for (char sm : {'d', 'u'}) {
      for (char ym : {'d', 'u'}) {
        Rational ps = sm == 'u' ? m.s.p : Rational(1 - m.s.p);
        Rational py = ym == 'u' ? m.y.p : Rational(1 - m.y.p);
        Rational ds = (sm == 'u' ? m.s.up : m.s.down) - drift;
        Rational dy = ym == 'u' ? m.y.up : m.y.down;
        t.nodes.push_back({std::string{sm, ym}, static_cast<int>(head), time, ps * py,
                           {Rational(s + ds), Rational(y + dy)}});
      }
    }
  }
  return t;
}

MarketTree market_tree(const MarketSpec& market) {
  if (auto e = std::get_if<ExplicitTreeMarket>(&market)) return canonicalize(e->tree);
  if (auto b = std::get_if<BinomialMarket>(&market)) return canonicalize(binomial_tree(*b));
  return canonicalize(two_driver_tree(std::get<TwoDriverMarket>(market)));
}

std::vector<Rational> node_probabilities(const MarketTree& tree) {
  std::vector<Rational> p(tree.nodes.size());
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    p[i] = tree.nodes[i].parent < 0 ? Rational(1) : Rational(p[tree.nodes[i].parent] * tree.nodes[i].prob);
  }
  return p;
}

void check_probability(const Rational& x, const std::string& what) {
  if (sgn(x) < 0 || x > 1) throw InputError(what + " " + x.get_str() + " lies outside [0, 1]");
}

// Joint law over (leaf, tau) for laws defined on the plain market tree.
std::vector<std::vector<Rational>> rows_for(const MarketTree& tree, const DeathLaw& death) {
  const int n = tree.horizon;
  auto leaves = tree.leaves();
  std::vector<std::vector<Rational>> rows;
  if (auto ind = std::get_if<IndependentDeath>(&death)) {
    if (static_cast<int>(ind->q.size()) != n) {
      throw InputError("independent death table needs " + std::to_string(n) + " entries, got " +
                       std::to_string(ind->q.size()));
    }
    std::vector<Rational> row = ind->q;
    row.push_back(ind->q_beyond);
    Rational total(0);
    for (const auto& v : row) {
      check_probability(v, "death probability");
      total += v;
    }
    if (total != 1) throw InputError("independent death table sums to " + total.get_str());
    rows.assign(leaves.size(), row);
  } else if (auto rule = std::get_if<StoppingRuleDeath>(&death)) {
    for (int leaf : leaves) {
      std::vector<Rational> row(n + 1, Rational(0));
      int hit = n + 1;
      for (int t = 1; t <= n; ++t) {
        if (rule->predicate(PathView{&tree, tree.ancestor(leaf, t)})) {
          hit = t;
          break;
        }
      }
      row[hit - 1] = 1;
      rows.push_back(row);
    }
  } else if (auto mat = std::get_if<MatrixDeath>(&death)) {
    if (mat->rows.size() != leaves.size()) {
      throw InputError("death matrix has " + std::to_string(mat->rows.size()) +
                       " rows for " + std::to_string(leaves.size()) + " terminal market nodes");
    }
    for (size_t i = 0; i < mat->rows.size(); ++i) {
      const auto& row = mat->rows[i];
      if (static_cast<int>(row.size()) != n + 1) {
        throw InputError("death matrix row " + std::to_string(i) + " needs " +
                         std::to_string(n + 1) + " entries");
      }
      Rational total(0);
      for (const auto& v : row) {
        check_probability(v, "death matrix entry");
        total += v;
      }
      if (total != 1) {
        throw InputError("death matrix row " + std::to_string(i) + " sums to " + total.get_str());
      }
    }
    rows = mat->rows;
  }
  return rows;
}

// Hazard-modulated law: extends the tree with the signal coordinate Z and
// returns the explicit scenario directly.
ExplicitScenario hazard_scenario(const MarketTree& market, const HazardModulatedDeath& law) {
  check_probability(law.signal_death, "signal probability");
  check_probability(law.signal_other, "signal probability");
  if (sgn(law.signal_death) == 0 || law.signal_death == 1 || sgn(law.signal_other) == 0 ||
      law.signal_other == 1) {
    throw InputError("signal probabilities must lie strictly between 0 and 1");
  }
  const int n = market.horizon;
  MarketTree ext;
  ext.horizon = n;
  ext.coordinates = market.coordinates;
  ext.coordinates.push_back("Z");
  ext.traded = market.traded;
  std::vector<int> base;  // market node behind each extended node
  // mass[v][k]: P(node v, status k); k < t means tau = k + 1, k = n means alive.
  std::vector<std::vector<Rational>> mass;

  TreeNode root = market.nodes[0];
  root.coords.push_back(0);
  ext.nodes.push_back(root);
  base.push_back(0);
  mass.push_back(std::vector<Rational>(n + 1, Rational(0)));
  mass[0][n] = 1;

  for (size_t head = 0; head < ext.nodes.size(); ++head) {
    int t = ext.nodes[head].time;
    if (t == n) continue;
    Rational hazard = law.hazard(PathView{&market, base[head]});
    check_probability(hazard, "hazard at node " + market.path_id(base[head]));
    for (int c : market.children(base[head])) {
      for (int z = 0; z <= 1; ++z) {
        TreeNode node = market.nodes[c];
        node.label = market.nodes[c].label + "/" + std::to_string(z);
        node.parent = static_cast<int>(head);
        node.coords.push_back(z);
        std::vector<Rational> m(n + 1, Rational(0));
        Rational other = z ? law.signal_other : Rational(1 - law.signal_other);
        Rational flagged = z ? law.signal_death : Rational(1 - law.signal_death);
        const Rational& pc = market.nodes[c].prob;
        for (int k = 0; k < t; ++k) m[k] = mass[head][k] * pc * other;
        const Rational& alive = mass[head][n];
        m[t] = alive * pc * hazard * flagged;
        m[n] = alive * pc * (1 - hazard) * other;
        ext.nodes.push_back(node);
        base.push_back(c);
        mass.push_back(std::move(m));
      }
    }
  }
  // Marginal transition probabilities.
  std::vector<Rational> total(ext.nodes.size(), Rational(0));
  for (size_t v = 0; v < ext.nodes.size(); ++v)
    for (const auto& x : mass[v]) total[v] += x;
  for (size_t v = 1; v < ext.nodes.size(); ++v) {
    if (sgn(total[v]) == 0) {
      throw InputError("hazard law gives zero probability to node " + ext.path_id(static_cast<int>(v)));
    }
    ext.nodes[v].prob = total[v] / total[ext.nodes[v].parent];
  }
  ExplicitScenario out;
  out.tree = canonicalize(ext);
  for (size_t v = 0; v < ext.nodes.size(); ++v) {
    if (out.tree.nodes[v].label != ext.nodes[v].label) {
      throw InputError("branch labels of the signal tree do not sort canonically");
    }
  }
  for (int leaf : ext.leaves()) {
    std::vector<Rational> row(n + 1);
    for (int k = 0; k <= n; ++k) row[k] = mass[leaf][k] / total[leaf];
    out.tau_rows.push_back(row);
  }
  return out;
}

}  // namespace

ExplicitScenario to_explicit(const MarketSpec& market, const DeathLaw& death) {
  MarketTree tree = market_tree(market);
  if (auto hz = std::get_if<HazardModulatedDeath>(&death)) return hazard_scenario(tree, *hz);
  ExplicitScenario out;
  out.tau_rows = rows_for(tree, death);
  out.tree = std::move(tree);
  return out;
}

template <class Scalar>
std::vector<Process<Scalar>> Model<Scalar>::assets() const {
  std::vector<Process<Scalar>> out;
  for (int i : traded) out.push_back(coordinates[i]);
  return out;
}

template <class Scalar>
const Process<Scalar>& Model<Scalar>::coordinate(const std::string& name) const {
  int i = tree.coordinate_index(name);
  if (i < 0) throw InputError("unknown coordinate '" + name + "'");
  return coordinates[i];
}

template <class Scalar>
Model<Scalar> instantiate(const ExplicitScenario& scenario) {
  MarketTree tree = canonicalize(scenario.tree);
  const int n = tree.horizon;
  auto leaves = tree.leaves();
  if (scenario.tau_rows.size() != leaves.size()) {
    throw InputError("death law has " + std::to_string(scenario.tau_rows.size()) +
                     " rows for " + std::to_string(leaves.size()) + " terminal market nodes");
  }
  MatrixDeath check{scenario.tau_rows};
  rows_for(tree, check);

  auto prob = node_probabilities(tree);
  std::vector<int> leaf_of;
  std::vector<int> tau;
  std::vector<Scalar> weights;
  for (size_t i = 0; i < leaves.size(); ++i) {
    for (int k = 0; k <= n; ++k) {
      Rational joint = prob[leaves[i]] * scenario.tau_rows[i][k];
      if (sgn(joint) == 0) continue;
      leaf_of.push_back(leaves[i]);
      tau.push_back(k + 1);
      weights.push_back(ScalarTraits<Scalar>::from_rational(joint));
    }
  }
  const int outcomes = static_cast<int>(weights.size());

  Model<Scalar> model;
  model.tree = tree;
  model.node.assign(n + 1, std::vector<int>(outcomes));
  Filtration f;
  for (int t = 0; t <= n; ++t) {
    for (int w = 0; w < outcomes; ++w) model.node[t][w] = tree.ancestor(leaf_of[w], t);
    f.push_back(Partition::from_keys(outcomes, [&](int w) { return model.node[t][w]; }));
  }
  model.space = FilteredSpace<Scalar>::create(n, std::move(weights), std::move(f));
  model.tau = RandomTime{n, tau};
  for (size_t c = 0; c < tree.coordinates.size(); ++c) {
    Process<Scalar> x(n, outcomes, Tag::Adapted);
    for (int t = 0; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w)
        x.at(t, w) = ScalarTraits<Scalar>::from_rational(tree.nodes[model.node[t][w]].coords[c]);
    model.coordinates.push_back(std::move(x));
  }
  for (const auto& name : tree.traded) model.traded.push_back(tree.coordinate_index(name));
  return model;
}

template struct Model<Rational>;
template struct Model<double>;
template Model<Rational> instantiate(const ExplicitScenario&);
template Model<double> instantiate(const ExplicitScenario&);

}  // namespace mrisk
