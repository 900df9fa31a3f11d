#include "mrisk/scalar.hpp"

#include <cctype>
#include <cstdio>
#include <string>

#include "mrisk/error.hpp"

namespace mrisk {

std::string ScalarTraits<double>::to_string(double x) { return to_decimal17(x); }

std::string to_decimal17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

Rational parse_integer(std::string_view s) {
  std::string_view body = s;
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) body.remove_prefix(1);
  if (!all_digits(body)) throw InputError("malformed number '" + std::string(s) + "'");
  Rational r;
  r.get_num().set_str(std::string(s.front() == '+' ? s.substr(1) : s), 10);
  r.get_den() = 1;
  return r;
}

Rational pow10(long e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
  Rational r;
  if (e >= 0) {
    r = Rational(p);
  } else {
    r = Rational(mpz_class(1), p);
  }
  r.canonicalize();
  return r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) throw InputError("empty number");

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    Rational num = parse_integer(s.substr(0, slash));
    Rational den = parse_integer(s.substr(slash + 1));
    if (sgn(den) == 0) throw InputError("zero denominator in '" + std::string(s) + "'");
    Rational r = num / den;
    r.canonicalize();
    return r;
  }

  std::string_view mant = s;
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mant = s.substr(0, e);
    std::string_view ex = s.substr(e + 1);
    Rational er = parse_integer(ex);
    exponent = er.get_num().get_si();
  }
  bool negative = false;
  if (!mant.empty() && (mant.front() == '-' || mant.front() == '+')) {
    negative = mant.front() == '-';
    mant.remove_prefix(1);
  }
  std::string digits;
  long frac_len = 0;
  if (auto dot = mant.find('.'); dot != std::string_view::npos) {
    std::string_view ip = mant.substr(0, dot);
    std::string_view fp = mant.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) ||
        (!fp.empty() && !all_digits(fp))) {
      throw InputError("malformed number '" + std::string(text) + "'");
    }
    digits = std::string(ip) + std::string(fp);
    frac_len = static_cast<long>(fp.size());
  } else {
    if (!all_digits(mant)) throw InputError("malformed number '" + std::string(text) + "'");
    digits = std::string(mant);
  }
  Rational r;
  r.get_num().set_str(digits.empty() ? "0" : digits, 10);
  r.get_den() = 1;
  r *= pow10(exponent - frac_len);
  r.canonicalize();
  if (negative) r = -r;
  return r;
}

}  // namespace mrisk
