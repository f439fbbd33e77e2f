#pragma once

#include <complex>

namespace onebit {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace onebit
