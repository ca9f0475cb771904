#ifndef CARNOT_RATIONAL_HPP
#define CARNOT_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace carnot {

/// Exact rational scalar. All algebraic identity checks run on this type;
/// the float backend is used only by estimators.
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.template convert_to<double>(); }
inline double to_double(double x) { return x; }

/// Exact conversion: every finite double is a dyadic rational.
Rat rat_from_double(double x);

/// Parses "p", "-p/q" or a plain integer string. Throws std::invalid_argument
/// on malformed input or zero denominator.
Rat parse_rational(const std::string& s);

/// Canonical "p/q" form ("p" when q == 1). Round-trips bit-exactly.
std::string format_rational(const Rat& r);

}  // namespace carnot

#endif
