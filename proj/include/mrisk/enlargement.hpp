#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mrisk/calculus.hpp"
#include "mrisk/space.hpp"

namespace mrisk {

/// Death time with values in {1..N} or "beyond" (stored as N + 1).
struct RandomTime {
  int horizon = 0;
  std::vector<int> tau;

  int beyond() const { return horizon + 1; }
  bool is_beyond(int w) const { return tau[w] > horizon; }
  int operator[](int w) const { return tau[w]; }
  int size() const { return static_cast<int>(tau.size()); }
};

std::string time_label(int t, int horizon);

/// Everything derived from (F, tau): the G-filtration, the Azema
/// supermartingales G and G~, the optional dual projection of D, the
/// martingale m = G + D^o, the pure-default martingale N^G and the times R, R~.
template <class Scalar>
struct EnlargementBundle {
  std::shared_ptr<const FilteredSpace<Scalar>> space;
  RandomTime tau;
  Filtration g_filtration;
  Process<Scalar> G;
  Process<Scalar> Gtilde;
  Process<Scalar> D;
  Process<Scalar> DoF;
  Process<Scalar> m;
  Process<Scalar> NG;
  std::vector<int> R;
  std::vector<int> Rtilde;

  int horizon() const { return space->horizon(); }
  int outcomes() const { return space->size(); }
  const FilteredSpace<Scalar>& sp() const { return *space; }
  const Filtration& f_filtration() const { return space->filtration(); }
  /// 1{t <= tau}: the outcome is alive just before t.
  bool at_risk(int t, int w) const { return t <= tau.tau[w]; }
};

/// Atoms of G_t: each F_t-atom split by {tau = s} (s <= t) and {tau > t}.
template <class Scalar>
Filtration enlarge_filtration(const FilteredSpace<Scalar>& space, const RandomTime& tau);

template <class Scalar>
EnlargementBundle<Scalar> azema_bundle(std::shared_ptr<const FilteredSpace<Scalar>> space,
                                       const RandomTime& tau);

/// M^ = M^tau - sum dM dm / G~ + sum E[dM 1{R~ = s} | F_{s-1}], summed over
/// s <= t and tau.  The result is a G-martingale for every F-martingale M.
template <class Scalar>
Process<Scalar> hat_transform(const Process<Scalar>& m, const EnlargementBundle<Scalar>& bundle,
                              bool check = true);

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  double worst = 0.0;
  int t = -1;
  int atom = -1;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_pass() const;
};

/// The three structure conditions: each asset is an F-martingale, <S,m> = 0,
/// and S does not jump on {G~ = 0 < G_-}.
template <class Scalar>
AssumptionReport validate_model(const std::vector<Process<Scalar>>& assets,
                                const EnlargementBundle<Scalar>& bundle);

/// m constant on every (t, outcome).
template <class Scalar>
bool is_pseudo_stopping(const EnlargementBundle<Scalar>& bundle);

/// The law of tau given the terminal F-atom does not depend on the atom.
template <class Scalar>
bool is_independent(const EnlargementBundle<Scalar>& bundle);

/// t -> G_t(s) = P(tau > s | F_t).
template <class Scalar>
Process<Scalar> survival_surface(const EnlargementBundle<Scalar>& bundle, int s);

/// Cumulative difference (V^tau)^{p,G} - G_-^{-1} 1{t<=tau} (G~ dV)^{p,F},
/// accumulated on {G_- > 0} only.
template <class Scalar>
Process<Scalar> compensator_identity_check(const Process<Scalar>& v,
                                           const EnlargementBundle<Scalar>& bundle);

}  // namespace mrisk
