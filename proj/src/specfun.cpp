#include "rcl/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rcl/errors.hpp"

namespace rcl::specfun {
namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;

// Below this argument Y_0, Y_1 come from Neumann series in J_n; above it
// the Hankel asymptotic expansion is accurate to full double precision.
constexpr double kAsymptoticSeed = 20.0;
// Above this argument J_n is produced by upward recurrence of H_n.
constexpr double kLargeArgument = 1e4;

void check_arguments(int n_max, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("Bessel argument must be positive and finite, got " + std::to_string(x));
  }
  if (n_max < 0 || n_max > kMaxOrder) {
    throw CapacityError("Bessel order " + std::to_string(n_max) + " outside [0, " +
                        std::to_string(kMaxOrder) + "]");
  }
}

// Hankel asymptotic expansion for order nu: returns P + iQ such that
// H_nu(x) = sqrt(2/(pi x)) (P + iQ) e^{i(x - (nu/2 + 1/4) pi)}.
cplx asymptotic_pq(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k * x);
    const double mag = std::abs(term);
    if (mag > prev) break;  // asymptotic series started to diverge
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      p += sign * term;
    } else {
      q += sign * term;
    }
    if (mag < 1e-18) break;
    prev = mag;
  }
  return {p, q};
}

// e^{-ix} H_nu(x) from the asymptotic expansion, nu in {0, 1}.
cplx scaled_hankel_asymptotic(int nu, double x) {
  const double amp = std::sqrt(2.0 / (kPi * x));
  const double phase = -(0.5 * nu + 0.25) * kPi;
  return amp * asymptotic_pq(nu, x) * std::polar(1.0, phase);
}

// H_nu(x) for nu in {0, 1} from the asymptotic expansion (x >= 20).
cplx hankel_asymptotic(int nu, double x) {
  const double amp = std::sqrt(2.0 / (kPi * x));
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  return amp * asymptotic_pq(nu, x) * cplx(std::cos(chi), std::sin(chi));
}

// Unnormalised Miller sequence from `start` down to 0, with running
// rescaling; returns normalised J_0..J_start.
std::vector<double> miller_raw(int start, double x) {
  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  j[start + 1] = 0.0;
  j[start] = 1e-300;
  for (int n = start; n >= 1; --n) {
    j[n - 1] = (2.0 * n / x) * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > 1e250) {
      for (int m = n - 1; m <= start + 1; ++m) j[m] *= 1e-250;
    }
  }
  double norm = j[0];
  for (int n = 2; n <= start; n += 2) norm += 2.0 * j[n];
  for (double& v : j) v /= norm;
  j.pop_back();
  return j;
}

int miller_start(int n_max, double x) {
  const double m = std::max(static_cast<double>(n_max), std::ceil(x));
  int start = static_cast<int>(m + std::ceil(10.0 + 2.0 * std::sqrt(m * x)));
  return start + (start % 2);
}

// Miller sequence up to at least `n_need`, with the starting order raised
// until the values up to n_need stop changing.
std::vector<double> miller_converged(int n_need, double x) {
  int start = miller_start(n_need, x);
  std::vector<double> current = miller_raw(start, x);
  for (int iter = 0; iter < 8; ++iter) {
    int next_start = start + std::max(20, start / 4);
    next_start += next_start % 2;
    std::vector<double> next = miller_raw(next_start, x);
    bool converged = true;
    for (int n = 0; n <= n_need && converged; ++n) {
      const double ref = std::abs(next[n]);
      if (ref < kUnderflowThreshold) continue;
      converged = std::abs(next[n] - current[n]) <= 1e-14 * ref;
    }
    current = std::move(next);
    start = next_start;
    if (converged) break;
  }
  return current;
}

void flush_underflow(Sequence& seq) {
  for (double& v : seq.values) {
    if (std::abs(v) < kUnderflowThreshold) {
      v = 0.0;
      seq.underflow = true;
    }
  }
}

// Y_0 and Y_1 for x < kAsymptoticSeed via Neumann series over a Miller
// J-sequence.
std::pair<double, double> y01_series(double x) {
  const std::vector<double> j = miller_converged(2, x);
  const double log_term = std::log(0.5 * x) + kEulerGamma;
  double s0 = 0.0;
  double s1 = 0.0;
  const int top = static_cast<int>(j.size()) - 1;
  for (int k = 1; 2 * k + 1 <= top; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s0 += sign * j[2 * k] / k;
    s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k;
  }
  const double y0 = (2.0 / kPi) * log_term * j[0] - (4.0 / kPi) * s0;
  const double y1 = -(2.0 / kPi) * j[0] / x + (2.0 / kPi) * log_term * j[1] + (2.0 / kPi) * s1;
  return {y0, y1};
}

std::pair<double, double> y01(double x) {
  if (x < kAsymptoticSeed) return y01_series(x);
  return {hankel_asymptotic(0, x).imag(), hankel_asymptotic(1, x).imag()};
}

// Upward recurrence of H_n (or of any scaled multiple) from H_0, H_1.
std::vector<cplx> upward(int n_max, double x, cplx h0, cplx h1) {
  std::vector<cplx> h(static_cast<std::size_t>(n_max) + 1);
  h[0] = h0;
  if (n_max >= 1) h[1] = h1;
  for (int n = 1; n < n_max; ++n) {
    h[n + 1] = (2.0 * n / x) * h[n] - h[n - 1];
  }
  return h;
}

}  // namespace

Sequence bessel_j_sequence(int n_max, double x) {
  check_arguments(n_max, x);
  Sequence seq;
  if (x > kLargeArgument) {
    // n_max <= 2000 < x: upward recurrence is stable.
    const auto h = upward(n_max, x, hankel_asymptotic(0, x), hankel_asymptotic(1, x));
    seq.values.resize(h.size());
    for (std::size_t n = 0; n < h.size(); ++n) seq.values[n] = h[n].real();
  } else {
    std::vector<double> j = miller_converged(n_max, x);
    j.resize(static_cast<std::size_t>(n_max) + 1);
    seq.values = std::move(j);
  }
  flush_underflow(seq);
  return seq;
}

Sequence bessel_y_sequence(int n_max, double x) {
  check_arguments(n_max, x);
  Sequence seq;
  seq.values.resize(static_cast<std::size_t>(n_max) + 1);
  const auto [y0, y1] = y01(x);
  seq.values[0] = y0;
  if (n_max >= 1) seq.values[1] = y1;
  for (int n = 1; n < n_max; ++n) {
    const double next = (2.0 * n / x) * seq.values[n] - seq.values[n - 1];
    if (!std::isfinite(next) || std::abs(next) > 1e300) {
      seq.overflow = true;
      for (int m = n + 1; m <= n_max; ++m) seq.values[m] = -HUGE_VAL;
      break;
    }
    seq.values[n + 1] = next;
  }
  return seq;
}

std::vector<cplx> hankel1_sequence(int n_max, double x) {
  check_arguments(n_max, x);
  if (x > kLargeArgument) {
    return upward(n_max, x, hankel_asymptotic(0, x), hankel_asymptotic(1, x));
  }
  const Sequence j = bessel_j_sequence(n_max, x);
  const Sequence y = bessel_y_sequence(n_max, x);
  if (y.overflow) {
    throw NumericalError("Y_n overflow for n_max=" + std::to_string(n_max) +
                         ", x=" + std::to_string(x));
  }
  std::vector<cplx> h(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) h[n] = {j.values[n], y.values[n]};
  return h;
}

std::complex<double> hankel1(int n, double x) {
  if (n < 0) {
    throw DomainError("hankel1 expects a non-negative order");
  }
  if (n <= 1 && x >= kAsymptoticSeed && std::isfinite(x)) return hankel_asymptotic(n, x);
  return hankel1_sequence(n, x)[n];
}

std::vector<cplx> hankel1_scaled_sequence(int n_max, double x) {
  check_arguments(n_max, x);
  if (x > kLargeArgument) {
    return upward(n_max, x, scaled_hankel_asymptotic(0, x), scaled_hankel_asymptotic(1, x));
  }
  std::vector<cplx> h = hankel1_sequence(n_max, x);
  const cplx carrier = std::polar(1.0, -x);
  for (cplx& v : h) v *= carrier;
  return h;
}

std::complex<double> hankel1_scaled(int n, double x) {
  if (n < 0) {
    throw DomainError("hankel1_scaled expects a non-negative order");
  }
  if (n <= 1 && x >= kAsymptoticSeed && std::isfinite(x)) return scaled_hankel_asymptotic(n, x);
  return hankel1_scaled_sequence(n, x)[n];
}

}  // namespace rcl::specfun
