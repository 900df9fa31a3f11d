#pragma once

#include "mrisk/enlargement.hpp"

namespace mrisk {

/// The three-part decomposition of H_t = E[payoff | G_t] on [0, T].
template <class Scalar>
struct Representation {
  int term = 0;
  Process<Scalar> H;
  Process<Scalar> pure_financial;  // G_-^{-1} 1{t<=tau} . M^h hat
  Process<Scalar> correlation;     // -(M^h_- - (h.D^o)_-) G_-^{-2} 1{t<=tau} . m hat
  Process<Scalar> pure_mortality;  // (hG - M^h + h.D^o) G^{-1} 1{t<R} . N^G
  Process<Scalar> Mh;              // F-martingale E[(h.D^o)_T + g G_T | F_t]
  Process<Scalar> hD;              // (h.D^o) on [0, T]
};

/// (h.D^o)_t = sum_{u <= t and u <= T} h_u dD^o_u.
template <class Scalar>
Process<Scalar> death_leg_integral(const Process<Scalar>& h, const EnlargementBundle<Scalar>& bundle,
                                   int term);

/// M^h_t = E[sum_{u <= T} h_u dD^o_u | F_t]; T = -1 means N.
template <class Scalar>
Process<Scalar> death_claim_martingale(const Process<Scalar>& h,
                                       const EnlargementBundle<Scalar>& bundle, int term = -1);

/// m^h_t = E[sum_{u <= T} h_u dF_u | F_t] with F = 1 - G, for predictable h.
template <class Scalar>
Process<Scalar> predictable_claim_martingale(const Process<Scalar>& h,
                                             const EnlargementBundle<Scalar>& bundle,
                                             int term = -1);

/// Decomposes the G-martingale of h_tau 1{tau <= T} + g 1{tau > T}.  `g` may
/// be empty (no survival benefit).  Throws InvariantError if the pieces do not
/// reconstruct H or the mortality part is not orthogonal to the rest.
template <class Scalar>
Representation<Scalar> optional_representation(const Process<Scalar>& h,
                                               const EnlargementBundle<Scalar>& bundle,
                                               int term = -1, const Slice<Scalar>& g = {});

/// payoff(w) = h_tau 1{tau <= T} + g 1{tau > T}.
template <class Scalar>
Slice<Scalar> claim_payoff(const Process<Scalar>& h, const Slice<Scalar>& g,
                           const EnlargementBundle<Scalar>& bundle, int term);

}  // namespace mrisk
