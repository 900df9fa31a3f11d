#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mrisk/scalar.hpp"

namespace mrisk {

/// One partition of the outcome set.  Atoms are listed in order of their
/// smallest member, so the numbering is canonical for a given outcome order.
struct Partition {
  std::vector<std::vector<int>> atoms;
  std::vector<int> atom_of;

  int size() const { return static_cast<int>(atoms.size()); }

  /// Groups outcomes 0..n-1 by an ordered key.
  template <class KeyFn>
  static Partition from_keys(int n, KeyFn key);
  static Partition trivial(int n);

  bool refines(const Partition& coarser) const;
};

/// Partitions indexed by time 0..N.
using Filtration = std::vector<Partition>;

template <class Scalar>
using Slice = std::vector<Scalar>;

/// Finite outcome set with weights and the market filtration F.
template <class Scalar>
class FilteredSpace {
 public:
  /// Unchecked constructor; use create() for untrusted input.
  FilteredSpace(int horizon, std::vector<Scalar> weights, Filtration filtration);

  /// Validating constructor; throws InputError listing every violation.
  static std::shared_ptr<const FilteredSpace> create(int horizon, std::vector<Scalar> weights,
                                                     Filtration filtration);

  int horizon() const { return horizon_; }
  int size() const { return static_cast<int>(weights_.size()); }
  const std::vector<Scalar>& weights() const { return weights_; }
  const Scalar& weight(int w) const { return weights_[w]; }
  const Filtration& filtration() const { return filtration_; }
  const Partition& partition(int t) const { return filtration_[t]; }

 private:
  int horizon_;
  std::vector<Scalar> weights_;
  Filtration filtration_;
};

enum class Tag { Adapted, Predictable, Raw };

const char* tag_name(Tag tag);

/// Values indexed by (t, outcome), t = 0..N.
template <class Scalar>
class Process {
 public:
  Process() = default;
  Process(int horizon, int outcomes, Tag tag = Tag::Raw)
      : horizon_(horizon), outcomes_(outcomes), tag_(tag),
        values_(static_cast<size_t>(horizon + 1) * outcomes, Scalar(0)) {}

  /// Builds a tagged process and rejects values that violate the tag.
  static Process tagged(int horizon, int outcomes, std::vector<Scalar> values, Tag tag,
                        const Filtration& filtration);

  int horizon() const { return horizon_; }
  int outcomes() const { return outcomes_; }
  Tag tag() const { return tag_; }
  void set_tag(Tag tag) { tag_ = tag; }

  Scalar& at(int t, int w) { return values_[static_cast<size_t>(t) * outcomes_ + w]; }
  const Scalar& operator()(int t, int w) const {
    return values_[static_cast<size_t>(t) * outcomes_ + w];
  }
  Slice<Scalar> slice(int t) const;
  void set_slice(int t, const Slice<Scalar>& values);
  Scalar delta(int t, int w) const { return (*this)(t, w) - (*this)(t - 1, w); }
  Slice<Scalar> delta(int t) const;
  const std::vector<Scalar>& values() const { return values_; }

 private:
  int horizon_ = 0;
  int outcomes_ = 0;
  Tag tag_ = Tag::Raw;
  std::vector<Scalar> values_;
};

/// First (t, atom) where the process is not constant on the atom, if any.
struct MeasurabilityViolation {
  bool found = false;
  int t = -1;
  int atom = -1;
};

template <class Scalar>
MeasurabilityViolation find_measurability_violation(const Process<Scalar>& x, Tag tag,
                                                    const Filtration& filtration);

/// Throws ValidationError when `x` is not measurable in the sense of `tag`.
template <class Scalar>
void require_measurable(const Process<Scalar>& x, Tag tag, const Filtration& filtration,
                        const std::string& what);

/// Per-atom conditional means of `x` over partition `part`.
template <class Scalar>
std::vector<Scalar> atom_means(const FilteredSpace<Scalar>& space, const Partition& part,
                               const Slice<Scalar>& x);

/// E[X | atom of `filtration` at t], returned per outcome.
template <class Scalar>
Slice<Scalar> conditional_expectation(const FilteredSpace<Scalar>& space,
                                      const Filtration& filtration, const Slice<Scalar>& x,
                                      int t);

template <class Scalar>
Slice<Scalar> conditional_expectation(const FilteredSpace<Scalar>& space, const Slice<Scalar>& x,
                                      int t) {
  return conditional_expectation(space, space.filtration(), x, t);
}

enum class Projection { Optional, Predictable };

/// Optional projection conditions X_t on atoms at t; predictable on atoms at
/// t-1 (atoms at 0 for t = 0).
template <class Scalar>
Process<Scalar> project(const FilteredSpace<Scalar>& space, const Process<Scalar>& x,
                        Projection mode, const Filtration& filtration);

/// The martingale t -> E[X | filtration_t].
template <class Scalar>
Process<Scalar> martingale_of(const FilteredSpace<Scalar>& space, const Filtration& filtration,
                              const Slice<Scalar>& terminal);

/// Expectation under the space's weights.
template <class Scalar>
Scalar expectation(const FilteredSpace<Scalar>& space, const Slice<Scalar>& x);

struct SpaceViolation {
  std::string kind;  // "weight", "sum", "cover", "refinement", "horizon"
  int t = -1;
  int index = -1;  // outcome or atom
  std::string detail;
};

template <class Scalar>
std::vector<SpaceViolation> validate_space(int horizon, const std::vector<Scalar>& weights,
                                           const Filtration& filtration);

template <class Scalar>
std::vector<SpaceViolation> validate_space(const FilteredSpace<Scalar>& space) {
  return validate_space(space.horizon(), space.weights(), space.filtration());
}

// ---- pointwise algebra --------------------------------------------------

template <class Scalar>
Process<Scalar> operator+(const Process<Scalar>& a, const Process<Scalar>& b);
template <class Scalar>
Process<Scalar> operator-(const Process<Scalar>& a, const Process<Scalar>& b);
template <class Scalar>
Process<Scalar> scaled(const Process<Scalar>& a, const Scalar& c);
template <class Scalar>
Process<Scalar> product(const Process<Scalar>& a, const Process<Scalar>& b);

/// Process with X_0 = start and X_t = X_{t-1} + inc_t (inc_0 ignored).
template <class Scalar>
Process<Scalar> accumulate(const Process<Scalar>& increments, const Slice<Scalar>& start);

template <class Scalar>
Process<Scalar> accumulate(const Process<Scalar>& increments) {
  return accumulate(increments, Slice<Scalar>(increments.outcomes(), Scalar(0)));
}

/// X stopped at a per-outcome time (values > N mean never stopped).
template <class Scalar>
Process<Scalar> stopped(const Process<Scalar>& x, const std::vector<int>& time);

template <class Scalar>
Process<Scalar> constant_process(int horizon, int outcomes, const Scalar& c, Tag tag = Tag::Adapted);

/// Largest |a - b| over all entries, as a double.
template <class Scalar>
double max_abs_difference(const Process<Scalar>& a, const Process<Scalar>& b);

template <class Scalar>
bool equal_within(const Process<Scalar>& a, const Process<Scalar>& b);

// ---- template definitions ----------------------------------------------

template <class KeyFn>
Partition Partition::from_keys(int n, KeyFn key) {
  Partition p;
  p.atom_of.assign(n, -1);
  std::map<decltype(key(0)), int> index;
  for (int w = 0; w < n; ++w) {
    auto [it, inserted] = index.emplace(key(w), static_cast<int>(p.atoms.size()));
    if (inserted) p.atoms.emplace_back();
    p.atoms[it->second].push_back(w);
    p.atom_of[w] = it->second;
  }
  return p;
}

}  // namespace mrisk
