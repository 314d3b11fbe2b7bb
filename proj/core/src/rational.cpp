#include "mpcjoin/rational.hpp"

#include <cmath>
#include <limits>

#include "mpcjoin/error.hpp"

namespace mpcjoin {

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw PreconditionError("non-finite value cannot be made exact");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(x, &exp);  // x = mant * 2^exp, 0.5 <= |mant| < 1
  // 53 bits of mantissa as an integer.
  auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  BigInt num(scaled);
  if (exp >= 0) return Rational(num << exp);
  return Rational(num, BigInt(1) << (-exp));
}

namespace {

// Decimal digits with optional sign; cpp_int's own parser reads a leading 0
// as an octal prefix.
BigInt parse_decimal_integer(const std::string& s) {
  std::size_t i = 0;
  bool negative = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) negative = s[i++] == '-';
  if (i == s.size()) throw std::runtime_error("no digits");
  BigInt v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::runtime_error("bad digit");
    v = v * 10 + (s[i] - '0');
  }
  return negative ? BigInt(-v) : v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  auto bad = [&]() { return PreconditionError("not a number: '" + text + "'"); };
  if (text.empty()) throw bad();
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    try {
      BigInt num = parse_decimal_integer(text.substr(0, slash));
      BigInt den = parse_decimal_integer(text.substr(slash + 1));
      if (den == 0) throw bad();
      return Rational(num, den);
    } catch (const std::runtime_error&) {
      throw bad();
    }
  }
  // Plain integer stays exact.
  bool integral = text.find_first_of(".eE") == std::string::npos;
  if (integral) {
    try {
      return Rational(parse_decimal_integer(text));
    } catch (const std::runtime_error&) {
      throw bad();
    }
  }
  // Plain decimals ("0.1") are read exactly as 1/10.
  if (text.find_first_of("eE") == std::string::npos) {
    auto dot = text.find('.');
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    try {
      BigInt num = parse_decimal_integer(digits);
      BigInt den = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(text.size() - dot - 1));
      return Rational(num, den);
    } catch (const std::runtime_error&) {
      throw bad();
    }
  }
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(text, &used);
  } catch (const std::exception&) {
    throw bad();
  }
  if (used != text.size()) throw bad();
  // Exponent notation: exact value of the nearest double.
  return rational_from_double(d);
}

std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

BigInt floor_of(const Rational& r) {
  BigInt q = numerator(r) / denominator(r);  // truncates toward zero
  if (r < 0 && q * denominator(r) != numerator(r)) q -= 1;
  return q;
}

BigInt ceil_of(const Rational& r) {
  BigInt f = floor_of(r);
  return f * denominator(r) == numerator(r) ? f : f + 1;
}

std::uint64_t floor_power(std::uint64_t base, const Rational& e) {
  if (e < 0) throw PreconditionError("negative exponent");
  if (base <= 1 || e == 0) return e == 0 ? 1 : base;
  const BigInt& a = numerator(e);
  const BigInt& b = denominator(e);
  if (a <= 64 && b <= 64) {
    auto ua = a.convert_to<unsigned>();
    auto ub = b.convert_to<unsigned>();
    BigInt target = boost::multiprecision::pow(BigInt(base), ua);
    // Largest x with x^b <= base^a, seeded from the floating estimate.
    long double est = std::pow(static_cast<long double>(base), to_double(e));
    auto x = static_cast<std::uint64_t>(est);
    auto fits = [&](std::uint64_t v) { return boost::multiprecision::pow(BigInt(v), ub) <= target; };
    while (x > 0 && !fits(x)) --x;
    while (fits(x + 1)) ++x;
    return x;
  }
  long double v = std::pow(static_cast<long double>(base), static_cast<long double>(to_double(e)));
  return static_cast<std::uint64_t>(std::floor(v * (1 + 1e-15L)));
}

int ceil_log(std::uint64_t base, const Rational& x) {
  if (base < 2 || x <= 0) throw PreconditionError("ceil_log needs base >= 2 and x > 0");
  int t = 0;
  Rational power(1);
  while (power < x) {
    power *= base;
    ++t;
  }
  return t;
}

int floor_log(std::uint64_t base, const Rational& x) {
  if (base < 2 || x <= 0) throw PreconditionError("floor_log needs base >= 2 and x > 0");
  int t = 0;
  Rational power(1);
  if (x >= 1) {
    while (power * base <= x) {
      power *= base;
      ++t;
    }
    return t;
  }
  while (power > x) {
    power /= base;
    --t;
  }
  return t;
}

std::string join_rationals(const std::vector<Rational>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += to_string(v[i]);
  }
  return out;
}

}  // namespace mpcjoin
