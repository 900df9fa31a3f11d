#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrisk/hedging.hpp"

namespace mrisk {

enum class SecurityKind { Endowment, Bond };

const char* security_name(SecurityKind kind);       // "endowment" / "bond"
SecurityKind parse_security(const std::string& s);  // InputError on unknown names

/// A mortality-linked security.  The endowment pays 1{tau > T}, the bond
/// pays G_T.  A term of -1 means "the claim's term".
struct Instrument {
  SecurityKind kind = SecurityKind::Endowment;
  int term = -1;
};

/// Price computed twice: as a G-conditional expectation and term by term
/// from F-side objects.  `residual` = price - formula and must vanish.
template <class Scalar>
struct SecurityPrice {
  Process<Scalar> price;
  Process<Scalar> formula;
  Process<Scalar> residual;
  Process<Scalar> M;       // M^(g) or M^(B)
  Process<Scalar> Dbar;    // bond only: optional dual projection of G_T 1{tau <= t}
  Process<Scalar> xi_G;    // bond only: dDbar / dD^o, 0 where dD^o = 0
};

/// P^(g)_t = E[g 1{tau > T} | G_t].
template <class Scalar>
SecurityPrice<Scalar> price_endowment(const Slice<Scalar>& g, int term,
                                      const EnlargementBundle<Scalar>& b);

/// B_t = E[G_T | G_t]; `price` is the unstopped B, `formula` reproduces B^tau.
template <class Scalar>
SecurityPrice<Scalar> price_bond(int term, const EnlargementBundle<Scalar>& b);

/// Endowment price for a constant benefit when tau is independent of F:
/// P_0 - g P(tau > T)/P(tau > t) dN^G on t <= T.  ValidationError if tau is
/// not independent.
template <class Scalar>
Process<Scalar> independent_endowment_price(const Scalar& g, int term,
                                            const EnlargementBundle<Scalar>& b);

/// price - price_0 = phi.S^tau + residual with the residual orthogonal to S^tau.
template <class Scalar>
struct SecurityDecomposition {
  Instrument instrument;
  Process<Scalar> price;     // as traded: P^(1), or B^tau
  Process<Scalar> phi;       // G-strategy on S^tau
  Process<Scalar> residual;  // L^(E,G) or L^(B,G)
  Process<Scalar> phi_F;     // F-side GKW pair of G(T) or M^(B)
  Process<Scalar> L_F;
};

/// Formula route through the F-side GKW of G(T) or M^(B); with `check` the
/// result is compared with the direct G-level GKW of the price (InvariantError).
template <class Scalar>
SecurityDecomposition<Scalar> security_gkw(Instrument instrument, const Process<Scalar>& asset,
                                           const EnlargementBundle<Scalar>& b, bool check = true);

template <class Scalar>
SecurityDecomposition<Scalar> security_gkw(Instrument instrument, const Process<Scalar>& asset,
                                           const EnlargementBundle<Scalar>& b,
                                           const MortalityDrivers<Scalar>& drivers, bool check);

/// Where the two security residuals are conditionally collinear (psi theta = 1)
/// the three-asset formula divides by zero.  `Literal` zeroes both security
/// positions there; `Fallback` keeps the bond-only hedge, which stays optimal.
enum class CollinearPolicy { Fallback, Literal };

struct SecuritizationOptions {
  CollinearPolicy policy = CollinearPolicy::Fallback;
  PaymentTiming timing = PaymentTiming::AtDeath;
  bool check = true;
  bool verify_with_oracle = false;
};

template <class Scalar>
struct SecuritizationReport {
  std::string model;               // "a" (S, B), "b" (S, P1) or "c" (S, P1, B)
  HedgeReport<Scalar> report;      // assets S^tau, then the instruments
  HedgeReport<Scalar> base;        // stock only
  std::vector<SecurityDecomposition<Scalar>> securities;
  std::map<std::string, Process<Scalar>> ratios;  // xi2 / xi2~ / theta / psi
  int collinear_atoms = 0;
  std::optional<Scalar> oracle_R0;
};

/// Sequential orthogonalisation of the stock-only hedge against the security
/// residuals.  InputError for an empty or repeated instrument list.
template <class Scalar>
SecuritizationReport<Scalar> hedge_with_securities(const Claim<Scalar>& claim,
                                                   const std::vector<Instrument>& instruments,
                                                   const Process<Scalar>& asset,
                                                   const EnlargementBundle<Scalar>& b,
                                                   SecuritizationOptions options = {});

}  // namespace mrisk
