#pragma once

#include <complex>
#include <vector>

namespace rcl::specfun {

/// Largest order accepted by the sequence routines.
inline constexpr int kMaxOrder = 2000;

/// Magnitudes below this are flushed to zero and flagged.
inline constexpr double kUnderflowThreshold = 1e-300;

/// Values of a Bessel function of orders 0..n_max at one argument.
struct Sequence {
  std::vector<double> values;
  bool underflow = false;  // some |value| < 1e-300 was flushed to 0
  bool overflow = false;   // forward recurrence left the double range
};

/// J_0(x)..J_{n_max}(x) for x > 0.
///
/// Miller backward recurrence normalised by J_0 + 2 sum J_2k = 1 for
/// moderate x; for x > 1e4 the Hankel asymptotic seeds and an upward
/// recurrence are used instead (n_max < x there, so it is stable).
Sequence bessel_j_sequence(int n_max, double x);

/// Y_0(x)..Y_{n_max}(x) for x > 0 by upward recurrence from Y_0, Y_1.
Sequence bessel_y_sequence(int n_max, double x);

/// H_n^{(1)}(x) = J_n(x) + i Y_n(x).
std::complex<double> hankel1(int n, double x);

/// H_0^{(1)}(x)..H_{n_max}^{(1)}(x). Throws NumericalError on overflow.
std::vector<std::complex<double>> hankel1_sequence(int n_max, double x);

/// e^{-ix} H_n^{(1)}(x) for n = 0..n_max.
///
/// Removes the carrier phase analytically, so it stays meaningful for
/// arguments far beyond the range where e^{ix} can be resolved in double
/// precision (x up to ~1e300).
std::vector<std::complex<double>> hankel1_scaled_sequence(int n_max, double x);

/// Single-order convenience wrapper around hankel1_scaled_sequence.
std::complex<double> hankel1_scaled(int n, double x);

}  // namespace rcl::specfun
