#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace mrisk {

using Rational = mpq_class;

/// Numeric policy for the two supported scalar types.
///
/// Rational mode is the reference mode: every identity is checked as an exact
/// equality.  Float mode replaces equality by a tolerance relative to a
/// caller-supplied magnitude.
template <class Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static constexpr const char* name = "rational";

  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  static bool is_zero(const Rational& x, const Rational& /*scale*/) { return sgn(x) == 0; }
  static bool is_zero_prob(const Rational& x) { return sgn(x) == 0; }
  static int sign(const Rational& x, const Rational& /*scale*/ = Rational(0)) { return sgn(x); }
  static Rational abs(const Rational& x) { return ::abs(x); }
  static double to_double(const Rational& x) { return x.get_d(); }
  static std::string to_string(const Rational& x) { return x.get_str(); }
  static Rational from_ratio(std::int64_t num, std::int64_t den) {
    Rational r(static_cast<long>(num), static_cast<unsigned long>(den));
    r.canonicalize();
    return r;
  }
  static Rational from_rational(const Rational& x) { return x; }
};

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static constexpr const char* name = "float";
  // Martingale / identity tolerance relative to the magnitude of the inputs.
  static constexpr double kRelTol = 1e-10;
  // Probability normalisation tolerance.
  static constexpr double kProbTol = 1e-12;

  static bool is_zero(double x) { return std::abs(x) <= kRelTol; }
  static bool is_zero(double x, double scale) {
    return std::abs(x) <= kRelTol * std::max(1.0, std::abs(scale));
  }
  static bool is_zero_prob(double x) { return std::abs(x) <= kProbTol; }
  static int sign(double x, double scale = 0.0) {
    if (is_zero(x, scale)) return 0;
    return x > 0 ? 1 : -1;
  }
  static double abs(double x) { return std::abs(x); }
  static double to_double(double x) { return x; }
  static std::string to_string(double x);
  static double from_ratio(std::int64_t num, std::int64_t den) {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  static double from_rational(const Rational& x) { return x.get_d(); }
};

template <class Scalar>
inline bool is_zero(const Scalar& x) {
  return ScalarTraits<Scalar>::is_zero(x);
}

template <class Scalar>
inline bool is_zero(const Scalar& x, const Scalar& scale) {
  return ScalarTraits<Scalar>::is_zero(x, scale);
}

template <class Scalar>
inline Scalar abs_value(const Scalar& x) {
  return ScalarTraits<Scalar>::abs(x);
}

/// Parses "p/q", an integer, or a finite decimal ("0.25", "-1.5e-2") into an
/// exact rational.  Throws InputError on malformed text.
Rational parse_rational(std::string_view text);

/// 17 significant digits, the CSV representation of any scalar.
std::string to_decimal17(double x);

}  // namespace mrisk
