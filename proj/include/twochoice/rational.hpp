#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstdint>

namespace twochoice {

using Rational = boost::multiprecision::mpq_rational;

/// Exact value of a finite double as a rational (every double is dyadic).
inline Rational exact_rational(double value) { return Rational(value); }

inline Rational ratio(std::int64_t num, std::int64_t den) { return Rational(num, den); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace twochoice
