#pragma once

#include <cmath>
#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

namespace asadg::detail {

/// Exact rational value of a finite double.
inline boost::multiprecision::cpp_rational to_rational(double v) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  if (v == 0.0) return cpp_rational(0);
  int e = 0;
  const double m = std::frexp(v, &e);
  const auto mantissa = static_cast<std::int64_t>(std::ldexp(m, 53));
  const int shift = e - 53;
  cpp_int num(mantissa);
  if (shift >= 0) return cpp_rational(num << shift);
  return cpp_rational(num, cpp_int(1) << -shift);
}

}  // namespace asadg::detail
