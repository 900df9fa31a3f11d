#include "mrisk/space.hpp"

#include <algorithm>
#include <sstream>

#include "mrisk/error.hpp"

namespace mrisk {

Partition Partition::trivial(int n) {
  Partition p;
  p.atom_of.assign(n, 0);
  p.atoms.emplace_back();
  for (int w = 0; w < n; ++w) p.atoms[0].push_back(w);
  return p;
}

bool Partition::refines(const Partition& coarser) const {
  if (atom_of.size() != coarser.atom_of.size()) return false;
  for (const auto& atom : atoms) {
    int parent = coarser.atom_of[atom.front()];
    for (int w : atom) {
      if (coarser.atom_of[w] != parent) return false;
    }
  }
  return true;
}

const char* tag_name(Tag tag) {
  switch (tag) {
    case Tag::Adapted:
      return "adapted";
    case Tag::Predictable:
      return "predictable";
    case Tag::Raw:
      return "raw";
  }
  return "?";
}

template <class Scalar>
FilteredSpace<Scalar>::FilteredSpace(int horizon, std::vector<Scalar> weights,
                                     Filtration filtration)
    : horizon_(horizon), weights_(std::move(weights)), filtration_(std::move(filtration)) {}

template <class Scalar>
std::shared_ptr<const FilteredSpace<Scalar>> FilteredSpace<Scalar>::create(
    int horizon, std::vector<Scalar> weights, Filtration filtration) {
  auto violations = validate_space(horizon, weights, filtration);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "invalid filtered space:";
    for (const auto& v : violations) {
      os << "\n  " << v.kind << " (t=" << v.t << ", index=" << v.index << "): " << v.detail;
    }
    throw InputError(os.str());
  }
  return std::make_shared<const FilteredSpace>(horizon, std::move(weights), std::move(filtration));
}

template <class Scalar>
std::vector<SpaceViolation> validate_space(int horizon, const std::vector<Scalar>& weights,
                                           const Filtration& filtration) {
  using Traits = ScalarTraits<Scalar>;
  std::vector<SpaceViolation> out;
  const int n = static_cast<int>(weights.size());
  if (horizon < 1) out.push_back({"horizon", -1, -1, "horizon must be at least 1"});
  if (static_cast<int>(filtration.size()) != horizon + 1) {
    out.push_back({"horizon", -1, -1,
                   "expected " + std::to_string(horizon + 1) + " partitions, got " +
                       std::to_string(filtration.size())});
    return out;
  }
  Scalar total(0);
  for (int w = 0; w < n; ++w) {
    if (!(weights[w] > Scalar(0))) {
      out.push_back({"weight", -1, w, "weight " + Traits::to_string(weights[w]) + " is not positive"});
    }
    total += weights[w];
  }
  if (!Traits::is_zero_prob(Scalar(total - Scalar(1)))) {
    out.push_back({"sum", -1, -1, "weights sum to " + Traits::to_string(total)});
  }
  for (int t = 0; t <= horizon; ++t) {
    const Partition& p = filtration[t];
    std::vector<int> hits(n, 0);
    bool shape_ok = static_cast<int>(p.atom_of.size()) == n;
    for (int a = 0; a < p.size(); ++a) {
      if (p.atoms[a].empty()) out.push_back({"cover", t, a, "empty atom"});
      for (int w : p.atoms[a]) {
        if (w < 0 || w >= n) {
          out.push_back({"cover", t, a, "outcome index out of range"});
          shape_ok = false;
          continue;
        }
        ++hits[w];
        if (shape_ok && p.atom_of[w] != a) {
          out.push_back({"cover", t, a, "atom_of disagrees with atom listing"});
        }
      }
    }
    for (int w = 0; w < n; ++w) {
      if (hits[w] != 1) {
        out.push_back({"cover", t, w,
                       "outcome belongs to " + std::to_string(hits[w]) + " atoms"});
      }
    }
    if (t >= 1 && shape_ok && static_cast<int>(filtration[t - 1].atom_of.size()) == n) {
      for (int a = 0; a < p.size(); ++a) {
        const auto& atom = p.atoms[a];
        if (atom.empty()) continue;
        int parent = filtration[t - 1].atom_of[atom.front()];
        for (int w : atom) {
          if (w >= 0 && w < n && filtration[t - 1].atom_of[w] != parent) {
            out.push_back({"refinement", t, a, "atom straddles atoms of the previous partition"});
            break;
          }
        }
      }
    }
  }
  return out;
}

template <class Scalar>
Process<Scalar> Process<Scalar>::tagged(int horizon, int outcomes, std::vector<Scalar> values,
                                        Tag tag, const Filtration& filtration) {
  if (values.size() != static_cast<size_t>(horizon + 1) * outcomes) {
    throw InputError("process value count does not match (N+1) x outcomes");
  }
  Process p(horizon, outcomes, Tag::Raw);
  p.values_ = std::move(values);
  require_measurable(p, tag, filtration, "process");
  p.tag_ = tag;
  return p;
}

template <class Scalar>
Slice<Scalar> Process<Scalar>::slice(int t) const {
  auto first = values_.begin() + static_cast<std::ptrdiff_t>(t) * outcomes_;
  return Slice<Scalar>(first, first + outcomes_);
}

template <class Scalar>
void Process<Scalar>::set_slice(int t, const Slice<Scalar>& values) {
  std::copy(values.begin(), values.end(),
            values_.begin() + static_cast<std::ptrdiff_t>(t) * outcomes_);
}

template <class Scalar>
Slice<Scalar> Process<Scalar>::delta(int t) const {
  Slice<Scalar> d(outcomes_);
  for (int w = 0; w < outcomes_; ++w) d[w] = (*this)(t, w) - (*this)(t - 1, w);
  return d;
}

template <class Scalar>
MeasurabilityViolation find_measurability_violation(const Process<Scalar>& x, Tag tag,
                                                    const Filtration& filtration) {
  MeasurabilityViolation v;
  if (tag == Tag::Raw) return v;
  for (int t = 0; t <= x.horizon(); ++t) {
    int s = (tag == Tag::Predictable && t > 0) ? t - 1 : t;
    const Partition& p = filtration[s];
    for (int a = 0; a < p.size(); ++a) {
      const auto& atom = p.atoms[a];
      const Scalar& ref = x(t, atom.front());
      for (int w : atom) {
        Scalar diff = x(t, w) - ref;
        if (!is_zero(diff, ref)) {
          v.found = true;
          v.t = t;
          v.atom = a;
          return v;
        }
      }
    }
  }
  return v;
}

template <class Scalar>
void require_measurable(const Process<Scalar>& x, Tag tag, const Filtration& filtration,
                        const std::string& what) {
  auto v = find_measurability_violation(x, tag, filtration);
  if (v.found) {
    throw ValidationError(what + " is not " + tag_name(tag) + ": varies on atom " +
                          std::to_string(v.atom) + " at t=" + std::to_string(v.t));
  }
}

template <class Scalar>
std::vector<Scalar> atom_means(const FilteredSpace<Scalar>& space, const Partition& part,
                               const Slice<Scalar>& x) {
  std::vector<Scalar> out(part.size());
  Scalar mass;
  Scalar acc;
  for (int a = 0; a < part.size(); ++a) {
    mass = 0;
    acc = 0;
    for (int w : part.atoms[a]) {
      mass += space.weight(w);
      if (!is_zero(x[w])) acc += space.weight(w) * x[w];
    }
    out[a] = acc / mass;
  }
  return out;
}

template <class Scalar>
Slice<Scalar> conditional_expectation(const FilteredSpace<Scalar>& space,
                                      const Filtration& filtration, const Slice<Scalar>& x,
                                      int t) {
  const Partition& part = filtration[t];
  auto means = atom_means(space, part, x);
  Slice<Scalar> out(x.size());
  for (size_t w = 0; w < x.size(); ++w) out[w] = means[part.atom_of[w]];
  return out;
}

template <class Scalar>
Process<Scalar> project(const FilteredSpace<Scalar>& space, const Process<Scalar>& x,
                        Projection mode, const Filtration& filtration) {
  Process<Scalar> out(x.horizon(), x.outcomes(),
                      mode == Projection::Optional ? Tag::Adapted : Tag::Predictable);
  for (int t = 0; t <= x.horizon(); ++t) {
    int s = (mode == Projection::Predictable && t > 0) ? t - 1 : t;
    out.set_slice(t, conditional_expectation(space, filtration, x.slice(t), s));
  }
  return out;
}

template <class Scalar>
Process<Scalar> martingale_of(const FilteredSpace<Scalar>& space, const Filtration& filtration,
                              const Slice<Scalar>& terminal) {
  const int n = space.horizon();
  Process<Scalar> out(n, space.size(), Tag::Adapted);
  for (int t = 0; t <= n; ++t) out.set_slice(t, conditional_expectation(space, filtration, terminal, t));
  return out;
}

template <class Scalar>
Scalar expectation(const FilteredSpace<Scalar>& space, const Slice<Scalar>& x) {
  Scalar acc(0);
  for (int w = 0; w < space.size(); ++w) acc += space.weight(w) * x[w];
  return acc;
}

template <class Scalar>
Process<Scalar> operator+(const Process<Scalar>& a, const Process<Scalar>& b) {
  Process<Scalar> out(a.horizon(), a.outcomes(), a.tag() == b.tag() ? a.tag() : Tag::Raw);
  for (int t = 0; t <= a.horizon(); ++t)
    for (int w = 0; w < a.outcomes(); ++w) out.at(t, w) = a(t, w) + b(t, w);
  return out;
}

template <class Scalar>
Process<Scalar> operator-(const Process<Scalar>& a, const Process<Scalar>& b) {
  Process<Scalar> out(a.horizon(), a.outcomes(), a.tag() == b.tag() ? a.tag() : Tag::Raw);
  for (int t = 0; t <= a.horizon(); ++t)
    for (int w = 0; w < a.outcomes(); ++w) out.at(t, w) = a(t, w) - b(t, w);
  return out;
}

template <class Scalar>
Process<Scalar> scaled(const Process<Scalar>& a, const Scalar& c) {
  Process<Scalar> out(a.horizon(), a.outcomes(), a.tag());
  for (int t = 0; t <= a.horizon(); ++t)
    for (int w = 0; w < a.outcomes(); ++w) out.at(t, w) = a(t, w) * c;
  return out;
}

template <class Scalar>
Process<Scalar> product(const Process<Scalar>& a, const Process<Scalar>& b) {
  Process<Scalar> out(a.horizon(), a.outcomes(), a.tag() == b.tag() ? a.tag() : Tag::Raw);
  for (int t = 0; t <= a.horizon(); ++t)
    for (int w = 0; w < a.outcomes(); ++w) out.at(t, w) = a(t, w) * b(t, w);
  return out;
}

template <class Scalar>
Process<Scalar> accumulate(const Process<Scalar>& increments, const Slice<Scalar>& start) {
  Process<Scalar> out(increments.horizon(), increments.outcomes(), Tag::Raw);
  out.set_slice(0, start);
  for (int t = 1; t <= increments.horizon(); ++t)
    for (int w = 0; w < increments.outcomes(); ++w)
      out.at(t, w) = out(t - 1, w) + increments(t, w);
  return out;
}

template <class Scalar>
Process<Scalar> stopped(const Process<Scalar>& x, const std::vector<int>& time) {
  Process<Scalar> out(x.horizon(), x.outcomes(), x.tag());
  for (int t = 0; t <= x.horizon(); ++t)
    for (int w = 0; w < x.outcomes(); ++w) out.at(t, w) = x(std::min(t, time[w]), w);
  return out;
}

template <class Scalar>
Process<Scalar> constant_process(int horizon, int outcomes, const Scalar& c, Tag tag) {
  Process<Scalar> out(horizon, outcomes, tag);
  for (int t = 0; t <= horizon; ++t)
    for (int w = 0; w < outcomes; ++w) out.at(t, w) = c;
  return out;
}

template <class Scalar>
double max_abs_difference(const Process<Scalar>& a, const Process<Scalar>& b) {
  double worst = 0.0;
  for (int t = 0; t <= a.horizon(); ++t)
    for (int w = 0; w < a.outcomes(); ++w) {
      Scalar d = a(t, w) - b(t, w);
      worst = std::max(worst, ScalarTraits<Scalar>::to_double(abs_value(d)));
    }
  return worst;
}

template <class Scalar>
bool equal_within(const Process<Scalar>& a, const Process<Scalar>& b) {
  if (a.horizon() != b.horizon() || a.outcomes() != b.outcomes()) return false;
  for (int t = 0; t <= a.horizon(); ++t)
    for (int w = 0; w < a.outcomes(); ++w) {
      Scalar d = a(t, w) - b(t, w);
      Scalar scale = abs_value(a(t, w)) + abs_value(b(t, w));
      if (!is_zero(d, scale)) return false;
    }
  return true;
}

#define MRISK_INSTANTIATE_SPACE(S)                                                               \
  template class FilteredSpace<S>;                                                               \
  template class Process<S>;                                                                     \
  template std::vector<SpaceViolation> validate_space(int, const std::vector<S>&,                \
                                                      const Filtration&);                        \
  template MeasurabilityViolation find_measurability_violation(const Process<S>&, Tag,           \
                                                               const Filtration&);               \
  template void require_measurable(const Process<S>&, Tag, const Filtration&,                    \
                                   const std::string&);                                          \
  template std::vector<S> atom_means(const FilteredSpace<S>&, const Partition&, const Slice<S>&); \
  template Slice<S> conditional_expectation(const FilteredSpace<S>&, const Filtration&,          \
                                            const Slice<S>&, int);                               \
  template Process<S> project(const FilteredSpace<S>&, const Process<S>&, Projection,            \
                              const Filtration&);                                                \
  template Process<S> martingale_of(const FilteredSpace<S>&, const Filtration&, const Slice<S>&); \
  template S expectation(const FilteredSpace<S>&, const Slice<S>&);                              \
  template Process<S> operator+(const Process<S>&, const Process<S>&);                           \
  template Process<S> operator-(const Process<S>&, const Process<S>&);                           \
  template Process<S> scaled(const Process<S>&, const S&);                                       \
  template Process<S> product(const Process<S>&, const Process<S>&);                             \
  template Process<S> accumulate(const Process<S>&, const Slice<S>&);                            \
  template Process<S> stopped(const Process<S>&, const std::vector<int>&);                       \
  template Process<S> constant_process(int, int, const S&, Tag);                                 \
  template double max_abs_difference(const Process<S>&, const Process<S>&);                      \
  template bool equal_within(const Process<S>&, const Process<S>&);

MRISK_INSTANTIATE_SPACE(Rational)
MRISK_INSTANTIATE_SPACE(double)

}  // namespace mrisk
