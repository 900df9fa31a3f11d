#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <sstream>

#include "mrisk/cli.hpp"
#include "mrisk/error.hpp"
#include "mrisk/hedging.hpp"
#include "mrisk/oracle.hpp"
#include "mrisk/scenario.hpp"
#include "mrisk/securitization.hpp"

namespace py = pybind11;
using namespace mrisk;

namespace {

// Rationals cross the boundary as "p/q" strings; the Python side wraps them
// in fractions.Fraction.
std::string str(const Rational& x) { return x.get_str(); }

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

py::dict hedge(const std::string& text, const std::string& origin) {
  auto s = parse_scenario(text, origin);
  auto model = build_model<Rational>(s);
  auto b = azema_bundle(model.space, model.tau);
  auto claim = build_claim(s, model, b);
  HedgeOptions opt;
  opt.timing = s.timing;
  auto r = hedge_G(claim, model.coordinates[model.traded.at(0)], b, opt);
  auto oracle = brute_force_hedge(b.sp(), claim.payoff(b), r.assets, b.g_filtration);
  py::list xi;
  for (int t = 1; t <= claim.term; ++t) {
    py::list row;
    for (int w = 0; w < b.outcomes(); ++w) row.append(str(r.strategy[0](t, w)));
    xi.append(row);
  }
  py::dict d;
  d["initial_capital"] = str(r.initial_capital);
  d["risk0"] = str(r.risk0);
  d["oracle_risk0"] = str(oracle.R0);
  d["strategy"] = xi;
  d["outcomes"] = b.outcomes();
  return d;
}

py::dict securitize(const std::string& text, const std::vector<std::string>& names,
                    const std::string& origin) {
  auto s = parse_scenario(text, origin);
  auto model = build_model<Rational>(s);
  auto b = azema_bundle(model.space, model.tau);
  auto claim = build_claim(s, model, b);
  std::vector<Instrument> instruments;
  for (const auto& n : names) instruments.push_back({parse_security(n), -1});
  if (instruments.empty()) instruments = s.instruments;
  SecuritizationOptions opt;
  opt.policy = s.policy;
  opt.timing = s.timing;
  opt.verify_with_oracle = true;
  auto r = hedge_with_securities(claim, instruments, model.coordinates[model.traded.at(0)], b, opt);
  py::dict d;
  d["model"] = r.model;
  d["risk0"] = str(r.report.risk0);
  d["base_risk0"] = str(r.base.risk0);
  d["oracle_risk0"] = r.oracle_R0 ? py::object(py::str(str(*r.oracle_R0))) : py::none();
  d["collinear_atoms"] = r.collinear_atoms;
  return d;
}

py::dict random_check(std::uint64_t seed, const std::string& family, const std::string& shape) {
  auto model = instantiate<Rational>(random_scenario(seed, parse_family(family)));
  auto b = azema_bundle(model.space, model.tau);
  std::mt19937_64 rng(seed);
  ClaimShape cs = ClaimShape::PureEndowment;
  if (shape == "term-insurance") cs = ClaimShape::TermInsurance;
  else if (shape == "endowment") cs = ClaimShape::Endowment;
  else if (shape == "annuity") cs = ClaimShape::Annuity;
  else if (shape != "pure-endowment") throw InputError("unknown claim shape '" + shape + "'");
  auto claim = random_claim(rng, model, b, cs);
  const auto& S = model.coordinates[0];
  auto r = hedge_G(claim, S, b);
  auto d = hedge_G_direct(claim, {S}, b);
  auto oracle = brute_force_hedge(b.sp(), claim.payoff(b), r.assets, b.g_filtration);
  py::dict out;
  out["outcomes"] = b.outcomes();
  out["risk0"] = str(r.risk0);
  out["direct_risk0"] = str(d.risk0);
  out["oracle_risk0"] = str(oracle.R0);
  out["routes_agree"] = equal_within(r.strategy[0], d.strategy[0]) && equal_within(r.residual, d.residual);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "exact quadratic hedging on finite trees with a random death time";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_RuntimeError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_AssertionError);

  m.def("cli", &cli, py::arg("args"), "Run the command-line tool; returns (code, stdout, stderr).");
  m.def("hedge", &hedge, py::arg("text"), py::arg("origin") = "<string>",
        "Risk-minimising hedge of a scenario document's claim.");
  m.def("securitize", &securitize, py::arg("text"), py::arg("instruments") = std::vector<std::string>{},
        py::arg("origin") = "<string>", "Hedge with mortality-linked securities.");
  m.def("random_check", &random_check, py::arg("seed"), py::arg("family"),
        py::arg("shape") = "pure-endowment", "Formula route against direct GKW and least squares.");
}
