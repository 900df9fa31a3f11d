#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mrisk/hedging.hpp"
#include "mrisk/model.hpp"

namespace mrisk {

struct OracleOptions {
  int max_unknowns = 5000;
  bool check_martingales = true;
};

/// Global least-squares hedge: one free scalar per (asset, step, atom at
/// step - 1) plus the initial capital.
template <class Scalar>
struct OracleSolution {
  Scalar c{};
  std::vector<Process<Scalar>> strategy;
  Scalar R0{};
  int unknowns = 0;    // columns kept after dropping zero columns
  int rank = 0;
  int blocks = 0;      // independent blocks found in the normal equations
  int largest_block = 0;
};

/// Minimises E[(payoff - c - sum_i xi_i.X_i at N)^2].  The normal equations
/// are assembled sparsely and split into connected blocks, each solved
/// exactly with the minimum-norm rule.
template <class Scalar>
OracleSolution<Scalar> brute_force_hedge(const FilteredSpace<Scalar>& space,
                                         const Slice<Scalar>& payoff,
                                         const std::vector<Process<Scalar>>& assets,
                                         const Filtration& filtration, OracleOptions options = {});

/// E[(payoff - c - xi.X_N)^2] for a given strategy.
template <class Scalar>
Scalar terminal_risk(const FilteredSpace<Scalar>& space, const Slice<Scalar>& payoff,
                     const Scalar& c, const std::vector<Process<Scalar>>& strategy,
                     const std::vector<Process<Scalar>>& assets);

enum class Family { PseudoStopping, Independent, FStopping, HazardModulated, Unconstrained };

const char* family_name(Family f);
Family parse_family(const std::string& name);  // InputError on unknown names
const std::vector<Family>& all_families();

struct ScenarioSize {
  int steps = 3;
  int branching = 4;
  int death_states = 3;
  int max_outcomes = 260;
};

/// Reproducible random scenario.  Every family except `Unconstrained` keeps
/// S an F-martingale with <S, m> = 0 by construction:
///   independent      one law of tau for every path;
///   f-stopping       tau is a path functional;
///   pseudo-stopping  hazards read off the current node (immersion);
///   hazard-modulated moves are (size class, fair sign) and the size-class law
///                    depends on whether death already happened.
ExplicitScenario random_scenario(std::uint64_t seed, Family family, ScenarioSize size = {});

enum class ClaimShape { PureEndowment, TermInsurance, Endowment, Annuity, PredictableTerm };

const char* claim_shape_name(ClaimShape s);

/// Small random rational: p/q with |p| <= range, q in {1, 2, 3, 4}.
Rational random_rational(std::mt19937_64& rng, int range = 4);

/// Random claim of the given shape with benefits keyed by the market node.
template <class Scalar>
Claim<Scalar> random_claim(std::mt19937_64& rng, const Model<Scalar>& model,
                           const EnlargementBundle<Scalar>& b, ClaimShape shape, int term = -1);

/// E[X | F_t] for a random terminal X keyed by the terminal market node.
template <class Scalar>
Process<Scalar> random_f_martingale(std::mt19937_64& rng, const Model<Scalar>& model);

/// Random process measurable for `filtration` in the sense of `tag`,
/// zero at t = 0.
template <class Scalar>
Process<Scalar> random_process(std::mt19937_64& rng, const Filtration& filtration, int horizon,
                               Tag tag);

/// Random adapted finite-variation process with V_0 = 0.
template <class Scalar>
Process<Scalar> random_increasing(std::mt19937_64& rng, const Filtration& filtration, int horizon);

}  // namespace mrisk
