#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace chebprop {

using Complex = std::complex<double>;

inline constexpr Complex kImag{0.0, 1.0};

// Unit conversions. Internally everything is in atomic units.
inline constexpr double kAuPerPs = 41341.373;                // a.u. of time per picosecond
inline constexpr double kWavenumbersPerHartree = 219474.6313632;  // cm^-1 per E_h

inline double cm1_to_au(double wavenumber) { return wavenumber / kWavenumbersPerHartree; }
inline double au_to_cm1(double energy) { return energy * kWavenumbersPerHartree; }
inline double ps_to_au(double t) { return t * kAuPerPs; }
inline double au_to_ps(double t) { return t / kAuPerPs; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape/size mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid argument value (non-finite field, bad order, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Operation not supported on this time-grid kind / derivative order.
class GridError : public Error {
 public:
  using Error::Error;
};

// Chebyshev expansion did not reach the requested tolerance.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double last_coeff)
      : Error(what), last_coefficient(last_coeff) {}
  double last_coefficient = 0.0;
};

// Malformed configuration / model file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Runtime numerical failure (non-convergent quadrature, degenerate spectrum, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace chebprop
