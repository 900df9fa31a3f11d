#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrisk/enlargement.hpp"
#include "mrisk/representation.hpp"

namespace mrisk {

/// payoff = g 1{tau > T} + K_tau 1{tau <= T}.  An annuity keeps its
/// accumulator C and is encoded as g = C_T, K = C.
template <class Scalar>
struct Claim {
  int term = 0;
  Slice<Scalar> survival;                      // g
  Process<Scalar> death;                       // K, zero outside 1..T
  std::optional<Process<Scalar>> accumulator;  // C

  static Claim pure_endowment(int term, Slice<Scalar> g, const EnlargementBundle<Scalar>& b);
  static Claim term_insurance(int term, Process<Scalar> k, const EnlargementBundle<Scalar>& b);
  static Claim endowment(int term, Slice<Scalar> g, Process<Scalar> k,
                         const EnlargementBundle<Scalar>& b);
  static Claim annuity(int term, Process<Scalar> c, const EnlargementBundle<Scalar>& b);

  /// Throws InputError / ValidationError on shape, term or measurability
  /// problems, and on a decreasing accumulator.
  void validate(const EnlargementBundle<Scalar>& b) const;
  Slice<Scalar> payoff(const EnlargementBundle<Scalar>& b) const;
  bool has_death_leg() const;
  bool has_survival_leg() const;
};

/// Death benefits paid at tau (survival at T), or everything paid at T.
enum class PaymentTiming { AtDeath, AtTerm };

/// F-side hedge of one F-martingale against a single asset on [0, T].
template <class Scalar>
struct FHedge {
  Process<Scalar> M;
  Process<Scalar> xi;
  Process<Scalar> L;
};

/// GKW of t -> E[value | F_{t∧T}] against `asset`.
template <class Scalar>
FHedge<Scalar> hedge_F(const Slice<Scalar>& value, const Process<Scalar>& asset,
                       const FilteredSpace<Scalar>& space, int term);

/// Same, for a given F-martingale (stopped at T first).
template <class Scalar>
FHedge<Scalar> hedge_F_martingale(const Process<Scalar>& m, const Process<Scalar>& asset,
                                  const FilteredSpace<Scalar>& space, int term);

/// U = 1{G_- > 0}.[S, m] and its GKW pair against S, with the hatted
/// versions of S and L^(m) used by the transfer formulas.
template <class Scalar>
struct MortalityDrivers {
  Process<Scalar> U;
  Process<Scalar> phi;
  Process<Scalar> L;
  Process<Scalar> S_hat;
  Process<Scalar> L_hat;
  Process<Scalar> m_hat;
};

/// Requires validate_model to pass (ValidationError otherwise) and asserts
/// that U is an F-martingale, that G_- + phi > 0 on t <= tau, and that
/// (G_- + phi).S^ = G_-.S^tau - L^(m)^ holds step by step (InvariantError).
template <class Scalar>
MortalityDrivers<Scalar> phi_m(const Process<Scalar>& asset, const EnlargementBundle<Scalar>& b);

/// Maps an F-hedge (xi^F, L^F) to G: the strategy xi^F/(G_- + phi) on
/// t <= tau, t <= T and the residual built from the hatted L^F and L^(m),
/// plus `mhat_coef` dm^ on t <= tau and `ng_coef` dN^G on t < R.
template <class Scalar>
std::pair<Process<Scalar>, Process<Scalar>> transfer_to_G(
    const Process<Scalar>& xiF, const Process<Scalar>& LF, const Process<Scalar>& mhat_coef,
    const Process<Scalar>& ng_coef, const MortalityDrivers<Scalar>& drivers,
    const EnlargementBundle<Scalar>& b, int term);

template <class Scalar>
struct HedgeReport {
  std::vector<std::string> asset_names;
  std::vector<Process<Scalar>> assets;  // as traded under G
  Process<Scalar> H;
  Scalar initial_capital{};
  std::vector<Process<Scalar>> strategy;
  Process<Scalar> residual;
  Process<Scalar> value;
  Process<Scalar> cost;
  Process<Scalar> risk;
  Scalar risk0{};
  std::map<std::string, Process<Scalar>> attribution;
  std::vector<std::string> warnings;
};

struct HedgeOptions {
  PaymentTiming timing = PaymentTiming::AtDeath;
  bool check = true;  // assert the report invariants
};

/// The transfer-formula route: F-hedge of M^h, then xi^G = xi^F/(G_- + phi)
/// on t <= tau, t <= T, with the four-term remaining risk.
template <class Scalar>
HedgeReport<Scalar> hedge_G(const Claim<Scalar>& claim, const Process<Scalar>& asset,
                            const EnlargementBundle<Scalar>& b, HedgeOptions options = {});

/// GKW of H = E[payoff | G] against the stopped assets, no F-side formulas.
template <class Scalar>
HedgeReport<Scalar> hedge_G_direct(const Claim<Scalar>& claim,
                                   const std::vector<Process<Scalar>>& assets,
                                   const EnlargementBundle<Scalar>& b, HedgeOptions options = {},
                                   const std::vector<std::string>& names = {});

/// The m^h route for a pure death claim with predictable K.
template <class Scalar>
HedgeReport<Scalar> hedge_G_predictable(const Claim<Scalar>& claim, const Process<Scalar>& asset,
                                        const EnlargementBundle<Scalar>& b,
                                        HedgeOptions options = {});

/// A_t: cumulative benefits paid up to t under the given timing.
template <class Scalar>
Process<Scalar> payment_process(const Claim<Scalar>& claim, const EnlargementBundle<Scalar>& b,
                                PaymentTiming timing);

template <class Scalar>
struct StrategyEvaluation {
  Process<Scalar> payments;
  Process<Scalar> value;
  Process<Scalar> cost;
  Process<Scalar> risk;
  Scalar risk0{};
};

/// V_t = E[A_N - A_t | G_t], C = V - xi.X + A, R_t = E[(C_N - C_t)^2 | G_t].
template <class Scalar>
StrategyEvaluation<Scalar> evaluate_strategy(const std::vector<Process<Scalar>>& xi,
                                             const Claim<Scalar>& claim,
                                             const std::vector<Process<Scalar>>& assets,
                                             const EnlargementBundle<Scalar>& b,
                                             PaymentTiming timing);

/// Closed-form portfolio value computed from F-side projections; meaningful
/// on [0, T].
template <class Scalar>
Process<Scalar> value_formula(const Claim<Scalar>& claim, const EnlargementBundle<Scalar>& b,
                              PaymentTiming timing);

/// Pure endowment split into the g, G(T) and correlation legs.
template <class Scalar>
struct EndowmentSplit {
  Process<Scalar> U;    // E[g | F_t]
  Process<Scalar> GT;   // G_t(T)
  Process<Scalar> Mg;   // E[g G_T | F_t]
  Process<Scalar> Cov;  // Mg - G(T) U
  Process<Scalar> Cor;  // [G(T), U] + Cov
  std::map<std::string, FHedge<Scalar>> legs;
  Process<Scalar> xi_F;
  Process<Scalar> L_F;
  HedgeReport<Scalar> report;
};

template <class Scalar>
EndowmentSplit<Scalar> endowment_split(const Slice<Scalar>& g, int term,
                                       const Process<Scalar>& asset,
                                       const EnlargementBundle<Scalar>& b,
                                       HedgeOptions options = {});

/// Annuity split: the endowment legs for g = C_T plus the C~_T leg.
template <class Scalar>
struct AnnuitySplit {
  EndowmentSplit<Scalar> endowment;
  Process<Scalar> Ctilde;  // sum_{u <= t∧T} C_u dD^o_u
  FHedge<Scalar> ctilde_leg;
  Process<Scalar> xi_F;
  Process<Scalar> L_F;
  HedgeReport<Scalar> report;
};

template <class Scalar>
AnnuitySplit<Scalar> annuity_split(const Process<Scalar>& c, int term,
                                   const Process<Scalar>& asset,
                                   const EnlargementBundle<Scalar>& b,
                                   HedgeOptions options = {});

enum class SpecialCase { Auto, PseudoStopping, Independent };

const char* special_case_name(SpecialCase which);

/// Closed forms for pseudo-stopping and independent death times.  Throws
/// ValidationError("predicate not satisfied ...") when the requested case
/// does not apply.
template <class Scalar>
HedgeReport<Scalar> special_case_formulas(const Claim<Scalar>& claim,
                                          const Process<Scalar>& asset,
                                          const EnlargementBundle<Scalar>& b,
                                          SpecialCase which = SpecialCase::Auto,
                                          HedgeOptions options = {});

/// Fills value, cost and risk, and with `check` asserts H = H_0 + xi.X + L,
/// orthogonality of L to every asset and the value formula.
template <class Scalar>
void finalize_report(HedgeReport<Scalar>& report, const Claim<Scalar>& claim,
                     const EnlargementBundle<Scalar>& b, HedgeOptions options);

}  // namespace mrisk
