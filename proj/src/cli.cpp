#include "mrisk/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mrisk/calculus.hpp"
#include "mrisk/error.hpp"
#include "mrisk/oracle.hpp"
#include "mrisk/report.hpp"
#include "mrisk/representation.hpp"
#include "mrisk/scenario.hpp"
#include "mrisk/securitization.hpp"

namespace mrisk {

namespace {

struct Flags {
  std::string command;
  std::string scenario;
  std::string mode;
  std::string out;
  std::string format;
  std::string emit;
  std::string instruments;
  std::string policy;
  std::string families;
  std::uint64_t seed = 1;
  int random = 0;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <class Scalar>
double tolerance() {
  return ScalarTraits<Scalar>::exact ? 0.0 : 1e-9;
}

std::string num(double x) {
  std::ostringstream o;
  o << x;
  return o.str();
}

template <class Scalar>
std::string show(const Scalar& x) {
  return ScalarTraits<Scalar>::to_string(x);
}

// Writes the report where the scenario or the flags say; the human summary
// goes to `out` unless the report itself does.
template <class Scalar>
void emit(const ReportBuilder<Scalar>& rep, const ScenarioFile* s, const Flags& f,
          std::ostream& out, std::ostream& err) {
  std::string format = !f.format.empty() ? f.format : (s ? s->output.format : "csv");
  std::string path = !f.out.empty() ? f.out : (s ? s->output.path : "");
  if (format != "csv" && format != "json") throw InputError("--format must be csv or json");
  const std::string body = format == "json" ? rep.json() : rep.csv();
  std::ostream& summary = (path.empty() || path == "-") ? err : out;
  for (const auto& [k, v] : rep.notes()) summary << k << ": " << v << "\n";
  if (path.empty() || path == "-") {
    out << body;
  } else {
    std::ofstream file(path);
    if (!file) throw InputError("cannot write '" + path + "'");
    file << body;
    summary << "report: " << path << " (" << rep.rows().size() << " rows)\n";
  }
}

template <class Scalar>
void set_filter(ReportBuilder<Scalar>& rep, const ScenarioFile* s, const Flags& f,
                std::vector<std::string> fallback) {
  if (!f.emit.empty()) rep.set_filter(split(f.emit, ','));
  else if (s && !s->output.emit.empty()) rep.set_filter(s->output.emit);
  else rep.set_filter(std::move(fallback));
}

template <class Scalar>
void add_bundle(ReportBuilder<Scalar>& rep, const EnlargementBundle<Scalar>& b) {
  rep.add("G", b.G);
  rep.add("Gtilde", b.Gtilde);
  rep.add("DoF", b.DoF);
  rep.add("m", b.m);
  rep.add("NG", b.NG);
}

template <class Scalar>
void add_hedge(ReportBuilder<Scalar>& rep, const HedgeReport<Scalar>& r, const std::string& prefix) {
  for (size_t i = 0; i < r.strategy.size(); ++i) {
    rep.add(prefix + "xi[" + r.asset_names[i] + "]", r.strategy[i]);
  }
  rep.add(prefix + "L", r.residual);
  rep.add(prefix + "V", r.value);
  rep.add(prefix + "C", r.cost);
  rep.add(prefix + "R", r.risk);
  rep.add_scalar(prefix + "R0", r.risk0);
}

const std::vector<std::string> kHedgeDefault = {"xi", "L", "V", "C", "R", "R0", "H", "G",
                                                "Gtilde", "m", "NG", "pure_financial",
                                                "correlation", "pure_mortality"};

template <class Scalar>
struct Loaded {
  ScenarioFile scenario;
  Model<Scalar> model;
  EnlargementBundle<Scalar> bundle;
};

template <class Scalar>
Loaded<Scalar> load(const ScenarioFile& s) {
  Loaded<Scalar> l{s, build_model<Scalar>(s), {}};
  auto defects = validate_space(*l.model.space);
  if (!defects.empty()) {
    throw InputError("scenario space is invalid: " + defects.front().kind + " " +
                     defects.front().detail);
  }
  l.bundle = azema_bundle(l.model.space, l.model.tau);
  return l;
}

template <class Scalar>
const Process<Scalar>& single_asset(const Model<Scalar>& m) {
  if (m.traded.empty()) throw InputError("the market has no traded asset");
  return m.coordinates[m.traded.front()];
}

template <class Scalar>
int cmd_validate(const ScenarioFile& s, const Flags& f, std::ostream& out, std::ostream& err) {
  auto l = load<Scalar>(s);
  const auto& b = l.bundle;
  auto report = validate_model(l.model.assets(), b);
  ReportBuilder<Scalar> rep(l.model, b, "validate");
  set_filter(rep, &s, f, {"G", "Gtilde", "DoF", "m", "NG"});
  for (const auto& c : report.checks) {
    std::string line = c.pass ? "pass" : "FAIL";
    if (!c.pass) {
      line += " (t=" + std::to_string(c.t) + ", worst " + std::to_string(c.worst) + ")";
      if (!c.detail.empty()) line += " " + c.detail;
    }
    rep.note("check " + c.name, line);
  }
  rep.note("pseudo_stopping", is_pseudo_stopping(b) ? "yes" : "no");
  rep.note("independent", is_independent(b) ? "yes" : "no");
  rep.note("outcomes", std::to_string(b.outcomes()));
  if (s.claim) {
    build_claim(s, l.model, b);
    rep.note("claim", "ok");
  }
  add_bundle(rep, b);
  emit(rep, &s, f, out, err);
  return report.all_pass() ? kExitOk : kExitValidation;
}

template <class Scalar>
int cmd_hedge(const ScenarioFile& s, const Flags& f, std::ostream& out, std::ostream& err) {
  auto l = load<Scalar>(s);
  const auto& b = l.bundle;
  auto claim = build_claim(s, l.model, b);
  HedgeOptions opts;
  opts.timing = s.timing;
  ReportBuilder<Scalar> rep(l.model, b, "hedge");
  set_filter(rep, &s, f, kHedgeDefault);

  if (l.model.traded.size() != 1) {
    auto r = hedge_G_direct(claim, l.model.assets(), b, opts, l.model.tree.traded);
    rep.note("route", "direct G-level GKW (formula route needs one traded asset)");
    rep.note("H0", show(r.initial_capital));
    rep.note("R0", show(r.risk0));
    rep.add("H", r.H);
    add_hedge(rep, r, "");
    add_bundle(rep, b);
    emit(rep, &s, f, out, err);
    return kExitOk;
  }
  const auto& S = single_asset(l.model);
  auto r = hedge_G(claim, S, b, opts);
  auto direct = hedge_G_direct(claim, {S}, b, opts);
  double dev = std::max({max_abs_difference(r.strategy[0], direct.strategy[0]),
                         max_abs_difference(r.residual, direct.residual),
                         max_abs_difference(r.value, direct.value)});
  rep.note("route", "transfer formulas");
  rep.note("H0", show(r.initial_capital));
  rep.note("R0", show(r.risk0));
  rep.note("max deviation vs direct GKW", num(dev));

  std::string special = "not applicable";
  try {
    auto sc = special_case_formulas(claim, S, b, s.special, opts);
    double d = std::max(max_abs_difference(sc.strategy[0], r.strategy[0]),
                        max_abs_difference(sc.residual, r.residual));
    special = sc.warnings.empty() ? "applied" : sc.warnings.back();
    special += ", max deviation " + num(d);
    if (d > tolerance<Scalar>()) throw InvariantError("closed form differs from the transfer route");
    rep.add("special:xi[S]", sc.strategy[0]);
    rep.add("special:L", sc.residual);
  } catch (const ValidationError& e) {
    if (s.special != SpecialCase::Auto) throw;
    special = std::string("not applicable (") + e.what() + ")";
  }
  rep.note("special case", special);
  for (const auto& w : r.warnings) rep.note("warning", w);

  rep.add("H", r.H);
  add_hedge(rep, r, "");
  for (const char* k : {"pure_financial", "correlation", "pure_mortality", "phi_m", "xi_F", "L_F",
                        "M_h"}) {
    auto it = r.attribution.find(k);
    if (it != r.attribution.end()) rep.add(k, it->second);
  }
  add_bundle(rep, b);
  emit(rep, &s, f, out, err);
  if (dev > tolerance<Scalar>()) return kExitInvariant;
  return kExitOk;
}

std::vector<std::vector<Instrument>> instrument_sets(const ScenarioFile& s, const Flags& f) {
  std::vector<std::vector<Instrument>> sets;
  if (!f.instruments.empty()) {
    for (const auto& group : split(f.instruments, ';')) {
      std::vector<Instrument> set;
      for (const auto& name : split(group, ',')) set.push_back({parse_security(name), -1});
      sets.push_back(set);
    }
  } else if (!s.instruments.empty()) {
    sets.push_back(s.instruments);
  }
  if (sets.empty()) throw InputError("no instruments: use --instruments or securitization.instruments");
  return sets;
}

template <class Scalar>
int cmd_securitize(const ScenarioFile& s, const Flags& f, std::ostream& out, std::ostream& err) {
  auto l = load<Scalar>(s);
  const auto& b = l.bundle;
  auto claim = build_claim(s, l.model, b);
  const auto& S = single_asset(l.model);
  SecuritizationOptions opts;
  opts.timing = s.timing;
  opts.policy = s.policy;
  if (!f.policy.empty()) {
    if (f.policy == "fallback") opts.policy = CollinearPolicy::Fallback;
    else if (f.policy == "literal") opts.policy = CollinearPolicy::Literal;
    else throw InputError("--policy must be fallback or literal");
  }
  opts.verify_with_oracle = true;
  ReportBuilder<Scalar> rep(l.model, b, "securitize");
  set_filter(rep, &s, f, {"xi", "L", "R0", "price"});

  bool priced_endowment = false, priced_bond = false;
  int worst = kExitOk;
  for (const auto& set : instrument_sets(s, f)) {
    auto r = hedge_with_securities(claim, set, S, b, opts);
    const std::string p = r.model + ":";
    rep.note("model " + r.model + " R0", show(r.report.risk0));
    if (r.oracle_R0) rep.note("model " + r.model + " oracle R0", show(*r.oracle_R0));
    rep.note("model " + r.model + " collinear atoms", std::to_string(r.collinear_atoms));
    for (const auto& w : r.report.warnings) rep.note("model " + r.model + " warning", w);
    add_hedge(rep, r.report, p);
    for (const auto& sec : r.securities) {
      const bool endow = sec.instrument.kind == SecurityKind::Endowment;
      const std::string name = endow ? "P1" : "B";
      if (endow ? priced_endowment : priced_bond) continue;
      (endow ? priced_endowment : priced_bond) = true;
      rep.add("price[" + name + "]", sec.price);
      rep.add("phi[" + name + "]", sec.phi);
      rep.add("L[" + name + "]", sec.residual);
      auto formula = endow ? price_endowment(Slice<Scalar>(b.outcomes(), Scalar(1)),
                                             sec.instrument.term, b)
                           : price_bond(sec.instrument.term, b);
      Process<Scalar> zero(b.horizon(), b.outcomes());
      double dev = max_abs_difference(formula.residual, zero);
      rep.note("price formula deviation " + name, num(dev));
      if (dev > tolerance<Scalar>()) worst = kExitInvariant;
    }
    if (r.oracle_R0) {
      double gap = std::abs(ScalarTraits<Scalar>::to_double(r.report.risk0) -
                            ScalarTraits<Scalar>::to_double(*r.oracle_R0));
      if (gap > tolerance<Scalar>() && r.report.warnings.empty()) worst = kExitInvariant;
    }
  }
  rep.note("stock-only R0", show(hedge_G(claim, S, b, HedgeOptions{s.timing, false}).risk0));
  emit(rep, &s, f, out, err);
  return worst;
}

template <class Scalar>
int cmd_represent(const ScenarioFile& s, const Flags& f, std::ostream& out, std::ostream& err) {
  auto l = load<Scalar>(s);
  const auto& b = l.bundle;
  auto claim = build_claim(s, l.model, b);
  auto rep_parts = optional_representation(claim.death, b, claim.term, claim.survival);
  ReportBuilder<Scalar> rep(l.model, b, "represent");
  set_filter(rep, &s, f, {"H", "pure_financial", "correlation", "pure_mortality", "M_h", "hD"});
  rep.note("H0", show(rep_parts.H(0, 0)));
  rep.note("reconstruction", "exact");
  rep.add("H", rep_parts.H);
  rep.add("pure_financial", rep_parts.pure_financial);
  rep.add("correlation", rep_parts.correlation);
  rep.add("pure_mortality", rep_parts.pure_mortality);
  rep.add("M_h", rep_parts.Mh);
  rep.add("hD", rep_parts.hD);
  emit(rep, &s, f, out, err);
  return kExitOk;
}

struct CheckOutcome {
  double route = 0.0;  // hedge_G vs hedge_G_direct
  double risk = 0.0;   // R_0 vs oracle
};

template <class Scalar>
CheckOutcome compare(const Claim<Scalar>& claim, const Process<Scalar>& S,
                     const EnlargementBundle<Scalar>& b, PaymentTiming timing,
                     HedgeReport<Scalar>* keep = nullptr, OracleSolution<Scalar>* sol = nullptr) {
  HedgeOptions opts{timing, true};
  auto r = hedge_G(claim, S, b, opts);
  auto d = hedge_G_direct(claim, {S}, b, opts);
  auto o = brute_force_hedge(b.sp(), claim.payoff(b), r.assets, b.g_filtration);
  CheckOutcome c;
  c.route = std::max({max_abs_difference(r.strategy[0], d.strategy[0]),
                      max_abs_difference(r.residual, d.residual),
                      max_abs_difference(r.value, d.value)});
  c.risk = std::abs(ScalarTraits<Scalar>::to_double(r.risk0) - ScalarTraits<Scalar>::to_double(o.R0));
  if constexpr (ScalarTraits<Scalar>::exact) {
    if (r.risk0 != o.R0 && c.risk == 0.0) c.risk = 1e-300;
  }
  if (keep) *keep = std::move(r);
  if (sol) *sol = std::move(o);
  return c;
}

template <class Scalar>
int cmd_oracle_random(const Flags& f, std::ostream& out) {
  std::vector<Family> families;
  if (f.families.empty()) {
    for (Family fam : all_families())
      if (fam != Family::Unconstrained) families.push_back(fam);
  } else {
    for (const auto& name : split(f.families, ',')) families.push_back(parse_family(name));
  }
  const ClaimShape shapes[] = {ClaimShape::PureEndowment, ClaimShape::TermInsurance,
                               ClaimShape::Endowment, ClaimShape::Annuity};
  double worst = 0.0;
  for (Family fam : families) {
    double route = 0.0, risk = 0.0;
    int checked = 0;
    for (int i = 0; i < f.random; ++i) {
      const std::uint64_t seed = f.seed + static_cast<std::uint64_t>(i);
      auto model = instantiate<Scalar>(random_scenario(seed, fam));
      auto b = azema_bundle(model.space, model.tau);
      std::mt19937_64 rng(seed);
      auto claim = random_claim(rng, model, b, shapes[i % 4]);
      auto c = compare(claim, model.coordinates[model.traded.front()], b, PaymentTiming::AtDeath);
      route = std::max(route, c.route);
      risk = std::max(risk, c.risk);
      ++checked;
    }
    out << family_name(fam) << ": " << checked << " scenarios, max route deviation " << route
        << ", max R0 gap vs oracle " << risk << "\n";
    worst = std::max({worst, route, risk});
  }
  out << "max deviation " << worst << "\n";
  return worst > tolerance<Scalar>() ? kExitInvariant : kExitOk;
}

template <class Scalar>
int cmd_oracle(const ScenarioFile* s, const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.random > 0) return cmd_oracle_random<Scalar>(f, out);
  if (!s) throw InputError("oracle-check needs a scenario file or --random N");
  auto l = load<Scalar>(*s);
  const auto& b = l.bundle;
  auto claim = build_claim(*s, l.model, b);
  HedgeReport<Scalar> r;
  OracleSolution<Scalar> sol;
  auto c = compare(claim, single_asset(l.model), b, s->timing, &r, &sol);
  ReportBuilder<Scalar> rep(l.model, b, "oracle-check");
  set_filter(rep, s, f, {"xi", "oracle:xi", "R0", "oracle:R0"});
  rep.note("R0 formula", show(r.risk0));
  rep.note("R0 oracle", show(sol.R0));
  rep.note("oracle unknowns", std::to_string(sol.unknowns));
  rep.note("oracle blocks", std::to_string(sol.blocks));
  rep.note("max route deviation", num(c.route));
  rep.note("R0 gap", num(c.risk));
  rep.add("xi[S]", r.strategy[0]);
  rep.add_scalar("R0", r.risk0);
  rep.add("oracle:xi[S]", sol.strategy[0]);
  rep.add_scalar("oracle:R0", sol.R0);
  emit(rep, s, f, out, err);
  return std::max(c.route, c.risk) > tolerance<Scalar>() ? kExitInvariant : kExitOk;
}

int cmd_export(const ScenarioFile& s, const Flags& f, std::ostream& out) {
  std::string text = export_explicit(s);
  if (f.out.empty() || f.out == "-") {
    out << text;
  } else {
    std::ofstream file(f.out);
    if (!file) throw InputError("cannot write '" + f.out + "'");
    file << text;
  }
  return kExitOk;
}

template <class Scalar>
int dispatch(const Flags& f, const ScenarioFile* s, std::ostream& out, std::ostream& err) {
  if (f.command == "validate") return cmd_validate<Scalar>(*s, f, out, err);
  if (f.command == "hedge") return cmd_hedge<Scalar>(*s, f, out, err);
  if (f.command == "securitize") return cmd_securitize<Scalar>(*s, f, out, err);
  if (f.command == "represent") return cmd_represent<Scalar>(*s, f, out, err);
  if (f.command == "oracle-check") return cmd_oracle<Scalar>(s, f, out, err);
  throw InputError("unknown command " + f.command);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadratic hedging of life-insurance liabilities on finite trees", "mrisk"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&f](CLI::App* sub, bool needs_file) {
    auto* opt = sub->add_option("scenario", f.scenario, "scenario file (JSON)");
    if (needs_file) opt->required();
    sub->add_option("--mode", f.mode, "rational or float (overrides the scenario)")
        ->check(CLI::IsMember({"rational", "float"}));
    sub->add_option("--out", f.out, "report path, '-' for stdout");
    sub->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--emit", f.emit, "comma-separated processes to emit");
    sub->add_option("--seed", f.seed, "base seed for random scenarios");
  };
  auto* v = app.add_subcommand("validate", "check the structure assumptions");
  common(v, true);
  auto* h = app.add_subcommand("hedge", "risk-minimising hedge of the claim");
  common(h, true);
  auto* sz = app.add_subcommand("securitize", "hedge with mortality-linked securities");
  common(sz, true);
  sz->add_option("--instruments", f.instruments,
                 "instrument sets, e.g. 'bond;endowment;endowment,bond'");
  sz->add_option("--policy", f.policy, "fallback or literal")
      ->check(CLI::IsMember({"fallback", "literal"}));
  auto* rp = app.add_subcommand("represent", "three-part martingale decomposition");
  common(rp, true);
  auto* oc = app.add_subcommand("oracle-check", "formula route against least squares");
  common(oc, false);
  oc->add_option("--random", f.random, "check N seeded random scenarios per family");
  oc->add_option("--family", f.families, "comma-separated families for --random");
  auto* ex = app.add_subcommand("export", "print the explicit-tree form of a scenario");
  common(ex, true);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  for (auto* sub : app.get_subcommands()) f.command = sub->get_name();

  try {
    std::optional<ScenarioFile> scenario;
    if (!f.scenario.empty()) scenario = load_scenario(f.scenario);
    if (f.command == "export") return cmd_export(*scenario, f, out);
    std::string mode = !f.mode.empty() ? f.mode : (scenario ? scenario->mode : "rational");
    const ScenarioFile* s = scenario ? &*scenario : nullptr;
    if (mode == "float") return dispatch<double>(f, s, out, err);
    return dispatch<Rational>(f, s, out, err);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    err << "validation failure: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvariantError& e) {
    err << "invariant breach: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace mrisk
