#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrisk/expression.hpp"
#include "mrisk/hedging.hpp"
#include "mrisk/model.hpp"
#include "mrisk/securitization.hpp"

namespace mrisk {

/// A benefit given either as an expression over the market path or as
/// explicit values keyed by node path id ("root", "u", "u.d", ...).
struct ValueSpec {
  std::optional<Expression> expression;
  std::map<std::string, Rational> values;
};

struct ClaimSpec {
  int term = 0;
  std::optional<ValueSpec> survival;  // g, read at the node at T
  std::optional<ValueSpec> death;     // K_t, read at the node at t in 1..T
  std::optional<ValueSpec> annuity;   // C_t, read at the node at t in 0..T
};

struct OutputSpec {
  std::string format = "csv";
  std::string path;  // empty: stdout
  std::vector<std::string> emit;
};

/// Parsed scenario document (JSON).  The market and death sections are kept
/// both as specs and in canonical explicit form.
struct ScenarioFile {
  int schema = 1;
  std::string mode = "rational";
  std::string origin;
  MarketSpec market;
  DeathLaw death;
  ExplicitScenario explicit_form;
  std::optional<ClaimSpec> claim;
  std::vector<Instrument> instruments;
  CollinearPolicy policy = CollinearPolicy::Fallback;
  PaymentTiming timing = PaymentTiming::AtDeath;
  SpecialCase special = SpecialCase::Auto;
  OutputSpec output;
};

/// InputError with "origin:line:column" for syntax errors and the dotted
/// field path ("death.q[1]") for content errors.
ScenarioFile parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
ScenarioFile load_scenario(const std::string& path);

/// The same scenario with an explicit-tree market, a matrix death law and
/// explicit claim values.  Re-parsing the result gives an identical model.
std::string export_explicit(const ScenarioFile& scenario, int indent = 2);

template <class Scalar>
Model<Scalar> build_model(const ScenarioFile& scenario) {
  return instantiate<Scalar>(scenario.explicit_form);
}

/// The claim section evaluated on the model's tree.  InputError when the
/// scenario has no claim or a value is missing.
template <class Scalar>
Claim<Scalar> build_claim(const ScenarioFile& scenario, const Model<Scalar>& model,
                          const EnlargementBundle<Scalar>& bundle);

}  // namespace mrisk
