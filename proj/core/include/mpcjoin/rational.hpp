#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mpcjoin {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Exact value of a finite double (every double is a dyadic rational).
Rational rational_from_double(double x);

// Accepts "3", "-1/2", "0.25", "1e-3".
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& r);
double to_double(const Rational& r);

BigInt floor_of(const Rational& r);
BigInt ceil_of(const Rational& r);

// floor(base^e) for 0 <= e. Exact when e has a small denominator, otherwise
// computed in long double.
std::uint64_t floor_power(std::uint64_t base, const Rational& e);

// Smallest t >= 0 with base^t >= x (x > 0), i.e. ceil(log_base x) clamped at 0.
int ceil_log(std::uint64_t base, const Rational& x);
// Largest t with base^t <= x (x > 0); may be negative.
int floor_log(std::uint64_t base, const Rational& x);

std::string join_rationals(const std::vector<Rational>& v, const std::string& sep = ",");

}  // namespace mpcjoin
