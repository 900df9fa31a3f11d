#include "mrisk/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mrisk/error.hpp"

namespace mrisk {

namespace {

using json = nlohmann::ordered_json;

// Walks the document with a dotted path for error messages.
class Field {
 public:
  Field(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("field '" + path_ + "': " + what);
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Field at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) {
      throw InputError("field '" + child(key) + "': missing");
    }
    return Field(j_.at(key), child(key));
  }

  Field at(size_t i) const { return Field(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) throw InputError("field '" + child(k) + "': unknown key");
    }
  }

  std::string str() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
  }

  // Numbers are read from their decimal text, so 0.1 stays 1/10.
  Rational number() const {
    try {
      if (j_.is_string()) return parse_rational(j_.get<std::string>());
      if (j_.is_number()) return parse_rational(j_.dump());
    } catch (const InputError& e) {
      fail(e.what());
    }
    fail("expected a number or a \"p/q\" string");
  }

  std::vector<Rational> numbers() const {
    std::vector<Rational> out;
    for (size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  const json& j_;
  std::string path_;

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
};

std::string rational_text(const Rational& x) { return x.get_str(); }

BinomialMarket parse_binomial(const Field& f, int horizon) {
  BinomialMarket b;
  b.horizon = horizon;
  if (f.has("s0")) b.s0 = f.at("s0").number();
  if (f.has("up")) b.up = f.at("up").number();
  if (f.has("down")) b.down = f.at("down").number();
  if (f.has("p")) b.p = f.at("p").number();
  return b;
}

MarketSpec parse_market(const Field& f) {
  const std::string type = f.at("type").str();
  if (type == "binomial") {
    f.allow({"type", "horizon", "s0", "up", "down", "p"});
    return parse_binomial(f, f.at("horizon").integer());
  }
  if (type == "two-driver") {
    f.allow({"type", "horizon", "s", "y"});
    TwoDriverMarket m;
    m.horizon = f.at("horizon").integer();
    for (const char* k : {"s", "y"}) {
      Field sub = f.at(k);
      sub.allow({"s0", "up", "down", "p"});
      (k[0] == 's' ? m.s : m.y) = parse_binomial(sub, m.horizon);
    }
    return m;
  }
  if (type == "explicit-tree") {
    f.allow({"type", "horizon", "coordinates", "traded", "nodes"});
    ExplicitTreeMarket e;
    e.tree.horizon = f.at("horizon").integer();
    Field coords = f.at("coordinates");
    for (size_t i = 0; i < coords.size(); ++i) e.tree.coordinates.push_back(coords.at(i).str());
    if (f.has("traded")) {
      Field tr = f.at("traded");
      for (size_t i = 0; i < tr.size(); ++i) e.tree.traded.push_back(tr.at(i).str());
    } else {
      e.tree.traded = {e.tree.coordinates.front()};
    }
    Field nodes = f.at("nodes");
    std::map<std::string, int> index;
    std::vector<std::string> parents;
    for (size_t i = 0; i < nodes.size(); ++i) {
      Field n = nodes.at(i);
      n.allow({"path", "prob", "values"});
      std::string path = n.at("path").str();
      if (index.count(path)) n.at("path").fail("duplicate node '" + path + "'");
      TreeNode node;
      std::string parent;
      if (path == "root") {
        node.label = "";
      } else {
        auto dot = path.rfind('.');
        parent = dot == std::string::npos ? "root" : path.substr(0, dot);
        node.label = dot == std::string::npos ? path : path.substr(dot + 1);
        if (node.label.empty()) n.at("path").fail("empty branch label");
        node.prob = n.at("prob").number();
      }
      Field vals = n.at("values");
      if (vals.size() != e.tree.coordinates.size()) {
        vals.fail("expected " + std::to_string(e.tree.coordinates.size()) + " values");
      }
      node.coords = vals.numbers();
      index[path] = static_cast<int>(e.tree.nodes.size());
      e.tree.nodes.push_back(node);
      parents.push_back(path == "root" ? std::string() : parent);
    }
    for (size_t i = 0; i < parents.size(); ++i) {
      if (parents[i].empty()) continue;
      auto it = index.find(parents[i]);
      if (it == index.end()) {
        nodes.at(i).at("path").fail("parent node '" + parents[i] + "' is not listed");
      }
      e.tree.nodes[i].parent = it->second;
    }
    return e;
  }
  f.at("type").fail("unknown market type '" + type + "' (binomial, two-driver, explicit-tree)");
}

DeathLaw parse_death(const Field& f, const std::vector<std::string>& symbols) {
  const std::string type = f.at("type").str();
  if (type == "independent") {
    f.allow({"type", "q", "beyond"});
    IndependentDeath d;
    d.q = f.at("q").numbers();
    if (f.has("beyond")) {
      d.q_beyond = f.at("beyond").number();
    } else {
      d.q_beyond = 1;
      for (const auto& q : d.q) d.q_beyond -= q;
    }
    return d;
  }
  if (type == "stopping-rule") {
    f.allow({"type", "rule"});
    Field rule = f.at("rule");
    Expression e;
    try {
      e = Expression::parse(rule.str(), symbols);
    } catch (const InputError& err) {
      rule.fail(err.what());
    }
    StoppingRuleDeath d;
    d.text = e.text();
    d.predicate = [e](const PathView& p) { return sgn(e.evaluate(p)) != 0; };
    return d;
  }
  if (type == "hazard-modulated") {
    f.allow({"type", "hazard", "signal"});
    Field hz = f.at("hazard");
    Expression e;
    try {
      e = Expression::parse(hz.str(), symbols);
    } catch (const InputError& err) {
      hz.fail(err.what());
    }
    HazardModulatedDeath d;
    d.text = e.text();
    d.hazard = [e](const PathView& p) { return e.evaluate(p); };
    if (f.has("signal")) {
      Field s = f.at("signal");
      s.allow({"death", "other"});
      if (s.has("death")) d.signal_death = s.at("death").number();
      if (s.has("other")) d.signal_other = s.at("other").number();
    }
    return d;
  }
  if (type == "matrix") {
    f.allow({"type", "rows"});
    MatrixDeath d;
    Field rows = f.at("rows");
    for (size_t i = 0; i < rows.size(); ++i) d.rows.push_back(rows.at(i).numbers());
    return d;
  }
  f.at("type").fail("unknown death type '" + type +
                    "' (independent, stopping-rule, hazard-modulated, matrix)");
}

std::vector<std::string> market_symbols(const MarketSpec& m) {
  if (std::holds_alternative<BinomialMarket>(m)) return {"S"};
  if (std::holds_alternative<TwoDriverMarket>(m)) return {"S", "Y"};
  return std::get<ExplicitTreeMarket>(m).tree.coordinates;
}

ValueSpec parse_value(const Field& f, const std::vector<std::string>& symbols) {
  ValueSpec v;
  if (f.raw().is_string()) {
    try {
      v.expression = Expression::parse(f.str(), symbols);
    } catch (const InputError& err) {
      f.fail(err.what());
    }
    return v;
  }
  if (f.raw().is_number()) {
    v.expression = Expression::parse(f.raw().dump(), symbols);
    return v;
  }
  if (f.raw().is_object()) {
    f.allow({"values"});
    Field vals = f.at("values");
    if (!vals.raw().is_object()) vals.fail("expected an object keyed by node path");
    for (const auto& [k, x] : vals.raw().items()) v.values[k] = Field(x, vals.path() + "." + k).number();
    return v;
  }
  f.fail("expected an expression string or {\"values\": {...}}");
}

ClaimSpec parse_claim(const Field& f, const std::vector<std::string>& symbols, int horizon) {
  f.allow({"term", "survival", "death", "annuity"});
  ClaimSpec c;
  c.term = f.at("term").integer();
  if (c.term < 1 || c.term > horizon) {
    f.at("term").fail("term " + std::to_string(c.term) + " outside 1.." + std::to_string(horizon));
  }
  if (f.has("survival")) c.survival = parse_value(f.at("survival"), symbols);
  if (f.has("death")) c.death = parse_value(f.at("death"), symbols);
  if (f.has("annuity")) c.annuity = parse_value(f.at("annuity"), symbols);
  if (c.annuity && (c.survival || c.death)) {
    f.fail("an annuity cannot be combined with survival or death benefits");
  }
  if (!c.annuity && !c.survival && !c.death) f.fail("claim has no benefit");
  return c;
}

Instrument parse_instrument(const Field& f) {
  Instrument in;
  try {
    if (f.raw().is_string()) {
      in.kind = parse_security(f.str());
      return in;
    }
    f.allow({"kind", "term"});
    in.kind = parse_security(f.at("kind").str());
    if (f.has("term")) in.term = f.at("term").integer();
  } catch (const InputError& e) {
    if (std::string(e.what()).rfind("field", 0) == 0) throw;
    f.fail(e.what());
  }
  return in;
}

std::string line_column(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

json number_json(const Rational& x) { return rational_text(x); }

}  // namespace

ScenarioFile parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    auto pos = msg.find("]: ");
    throw InputError(origin + ":" + line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                     (pos == std::string::npos ? msg : msg.substr(pos + 3)));
  }
  try {
    Field root(doc, "");
    root.allow({"schema", "mode", "market", "death", "claim", "securitization", "hedge", "output",
                "description"});
    ScenarioFile s;
    s.origin = origin;
    if (root.has("schema")) {
      s.schema = root.at("schema").integer();
      if (s.schema != 1) root.at("schema").fail("unsupported schema version");
    }
    if (root.has("mode")) {
      s.mode = root.at("mode").str();
      if (s.mode != "rational" && s.mode != "float") root.at("mode").fail("expected rational or float");
    }
    s.market = parse_market(root.at("market"));
    auto symbols = market_symbols(s.market);
    Field death = root.at("death");
    s.death = parse_death(death, symbols);
    try {
      s.explicit_form = to_explicit(s.market, s.death);
    } catch (const InputError& e) {
      throw InputError(std::string("market/death: ") + e.what());
    }
    // Claims may read the signal coordinate of a hazard-modulated law.
    std::vector<std::string> claim_symbols = s.explicit_form.tree.coordinates;
    if (root.has("claim")) {
      s.claim = parse_claim(root.at("claim"), claim_symbols, s.explicit_form.tree.horizon);
    }
    if (root.has("securitization")) {
      Field sec = root.at("securitization");
      sec.allow({"instruments", "policy"});
      if (sec.has("instruments")) {
        Field ins = sec.at("instruments");
        for (size_t i = 0; i < ins.size(); ++i) s.instruments.push_back(parse_instrument(ins.at(i)));
      }
      if (sec.has("policy")) {
        std::string p = sec.at("policy").str();
        if (p == "fallback") s.policy = CollinearPolicy::Fallback;
        else if (p == "literal") s.policy = CollinearPolicy::Literal;
        else sec.at("policy").fail("expected fallback or literal");
      }
    }
    if (root.has("hedge")) {
      Field h = root.at("hedge");
      h.allow({"timing", "special_case"});
      if (h.has("timing")) {
        std::string t = h.at("timing").str();
        if (t == "at-death") s.timing = PaymentTiming::AtDeath;
        else if (t == "at-term") s.timing = PaymentTiming::AtTerm;
        else h.at("timing").fail("expected at-death or at-term");
      }
      if (h.has("special_case")) {
        std::string c = h.at("special_case").str();
        if (c == "auto") s.special = SpecialCase::Auto;
        else if (c == "pseudo-stopping") s.special = SpecialCase::PseudoStopping;
        else if (c == "independent") s.special = SpecialCase::Independent;
        else h.at("special_case").fail("expected auto, pseudo-stopping or independent");
      }
    }
    if (root.has("output")) {
      Field o = root.at("output");
      o.allow({"format", "path", "emit"});
      if (o.has("format")) {
        s.output.format = o.at("format").str();
        if (s.output.format != "csv" && s.output.format != "json") {
          o.at("format").fail("expected csv or json");
        }
      }
      if (o.has("path")) s.output.path = o.at("path").str();
      if (o.has("emit")) {
        Field e = o.at("emit");
        for (size_t i = 0; i < e.size(); ++i) s.output.emit.push_back(e.at(i).str());
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(origin + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(origin + ": " + e.what());
  }
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

namespace {

// Nodes the claim reads: times in [lo, hi].
json explicit_values(const ValueSpec& v, const MarketTree& tree, int lo, int hi) {
  json values = json::object();
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const int t = tree.nodes[i].time;
    if (t < lo || t > hi) continue;
    const std::string id = tree.path_id(static_cast<int>(i));
    Rational x;
    if (v.expression) {
      x = v.expression->evaluate(PathView{&tree, static_cast<int>(i)});
    } else {
      auto it = v.values.find(id);
      if (it == v.values.end()) continue;
      x = it->second;
    }
    values[id] = number_json(x);
  }
  return json{{"values", values}};
}

}  // namespace

std::string export_explicit(const ScenarioFile& s, int indent) {
  const auto& tree = s.explicit_form.tree;
  json doc;
  doc["schema"] = s.schema;
  doc["mode"] = s.mode;
  json market;
  market["type"] = "explicit-tree";
  market["horizon"] = tree.horizon;
  market["coordinates"] = tree.coordinates;
  market["traded"] = tree.traded;
  json nodes = json::array();
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    json n;
    n["path"] = tree.path_id(static_cast<int>(i));
    if (tree.nodes[i].parent >= 0) n["prob"] = number_json(tree.nodes[i].prob);
    json vals = json::array();
    for (const auto& c : tree.nodes[i].coords) vals.push_back(number_json(c));
    n["values"] = vals;
    nodes.push_back(n);
  }
  market["nodes"] = nodes;
  doc["market"] = market;
  json rows = json::array();
  for (const auto& row : s.explicit_form.tau_rows) {
    json r = json::array();
    for (const auto& x : row) r.push_back(number_json(x));
    rows.push_back(r);
  }
  doc["death"] = json{{"type", "matrix"}, {"rows", rows}};
  if (s.claim) {
    json c;
    c["term"] = s.claim->term;
    if (s.claim->survival) c["survival"] = explicit_values(*s.claim->survival, tree, s.claim->term, s.claim->term);
    if (s.claim->death) c["death"] = explicit_values(*s.claim->death, tree, 1, s.claim->term);
    if (s.claim->annuity) c["annuity"] = explicit_values(*s.claim->annuity, tree, 0, s.claim->term);
    doc["claim"] = c;
  }
  if (!s.instruments.empty()) {
    json ins = json::array();
    for (const auto& in : s.instruments) {
      if (in.term < 0) ins.push_back(security_name(in.kind));
      else ins.push_back(json{{"kind", security_name(in.kind)}, {"term", in.term}});
    }
    doc["securitization"] = json{
        {"instruments", ins},
        {"policy", s.policy == CollinearPolicy::Fallback ? "fallback" : "literal"}};
  }
  doc["hedge"] = json{{"timing", s.timing == PaymentTiming::AtDeath ? "at-death" : "at-term"},
                      {"special_case", s.special == SpecialCase::Auto
                                           ? "auto"
                                           : special_case_name(s.special)}};
  json out;
  out["format"] = s.output.format;
  if (!s.output.path.empty()) out["path"] = s.output.path;
  if (!s.output.emit.empty()) out["emit"] = s.output.emit;
  doc["output"] = out;
  return doc.dump(indent) + "\n";
}

namespace {

template <class Scalar>
Rational value_at(const ValueSpec& v, const MarketTree& tree, int node, const std::string& what) {
  if (v.expression) return v.expression->evaluate(PathView{&tree, node});
  auto it = v.values.find(tree.path_id(node));
  if (it == v.values.end()) {
    throw InputError("claim." + what + ": no value for node '" + tree.path_id(node) + "'");
  }
  return it->second;
}

}  // namespace

template <class Scalar>
Claim<Scalar> build_claim(const ScenarioFile& s, const Model<Scalar>& model,
                          const EnlargementBundle<Scalar>& b) {
  if (!s.claim) throw InputError("scenario has no claim section");
  const ClaimSpec& c = *s.claim;
  const int n = b.horizon();
  const int outcomes = b.outcomes();
  const int term = c.term;
  auto conv = [](const Rational& x) { return ScalarTraits<Scalar>::from_rational(x); };

  if (c.annuity) {
    Process<Scalar> acc(n, outcomes, Tag::Adapted);
    for (int t = 0; t <= n; ++t)
      for (int w = 0; w < outcomes; ++w) {
        int node = model.node[std::min(t, term)][w];
        acc.at(t, w) = conv(value_at<Scalar>(*c.annuity, model.tree, node, "annuity"));
      }
    return Claim<Scalar>::annuity(term, std::move(acc), b);
  }
  Slice<Scalar> g(outcomes, Scalar(0));
  if (c.survival) {
    for (int w = 0; w < outcomes; ++w) {
      g[w] = conv(value_at<Scalar>(*c.survival, model.tree, model.node[term][w], "survival"));
    }
  }
  Process<Scalar> k(n, outcomes, Tag::Adapted);
  if (c.death) {
    for (int t = 1; t <= term; ++t)
      for (int w = 0; w < outcomes; ++w)
        k.at(t, w) = conv(value_at<Scalar>(*c.death, model.tree, model.node[t][w], "death"));
  }
  if (!c.death) return Claim<Scalar>::pure_endowment(term, std::move(g), b);
  if (!c.survival) return Claim<Scalar>::term_insurance(term, std::move(k), b);
  return Claim<Scalar>::endowment(term, std::move(g), std::move(k), b);
}

template Claim<Rational> build_claim(const ScenarioFile&, const Model<Rational>&,
                                     const EnlargementBundle<Rational>&);
template Claim<double> build_claim(const ScenarioFile&, const Model<double>&,
                                   const EnlargementBundle<double>&);

}  // namespace mrisk
