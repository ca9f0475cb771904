#include "carnot/rational.hpp"

#include <cctype>
#include <cmath>

namespace carnot {

Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("rat_from_double: non-finite value");
  if (x == 0.0) return Rat(0);
  int exp = 0;
  double m = std::frexp(x, &exp);  // x = m * 2^exp, |m| in [0.5, 1)
  // 53 doublings make the mantissa integral.
  m = std::ldexp(m, 53);
  exp -= 53;
  boost::multiprecision::cpp_int num(static_cast<long long>(m));
  Rat r(num);
  if (exp >= 0) {
    r *= Rat(boost::multiprecision::cpp_int(1) << exp);
  } else {
    r /= Rat(boost::multiprecision::cpp_int(1) << (-exp));
  }
  return r;
}

Rat parse_rational(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("parse_rational: empty string");
  const auto slash = s.find('/');
  auto check_int = [&](const std::string& t) {
    if (t.empty()) throw std::invalid_argument("parse_rational: bad integer in '" + s + "'");
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) throw std::invalid_argument("parse_rational: bad integer in '" + s + "'");
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i])))
        throw std::invalid_argument("parse_rational: bad character in '" + s + "'");
  };
  try {
    if (slash == std::string::npos) {
      check_int(s);
      return Rat(boost::multiprecision::cpp_int(s));
    }
    const std::string p = s.substr(0, slash);
    const std::string q = s.substr(slash + 1);
    check_int(p);
    check_int(q);
    boost::multiprecision::cpp_int den(q);
    if (den == 0) throw std::invalid_argument("parse_rational: zero denominator in '" + s + "'");
    return Rat(boost::multiprecision::cpp_int(p), den);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("parse_rational: cannot parse '" + s + "'");
  }
}

std::string format_rational(const Rat& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace carnot
