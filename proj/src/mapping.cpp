#include "rcl/mapping.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rcl/errors.hpp"

namespace rcl {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// R P R^T for symmetric P, returned exactly symmetric.
Eigen::Matrix2d rotate_symmetric(const Eigen::Matrix2d& polar, double theta);

Eigen::Matrix2d rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  return rot;
}

Eigen::Matrix2d rotate_symmetric(const Eigen::Matrix2d& polar, double theta) {
  const Eigen::Matrix2d rot = rotation(theta);
  Eigen::Matrix2d out = rot * polar * rot.transpose();
  out(0, 1) = out(1, 0) = 0.5 * (out(0, 1) + out(1, 0));
  return out;
}

double reduce_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

bool in_layer(double r, double a, Region side) {
  switch (side) {
    case Region::inner:
      return false;
    case Region::layer:
      return true;
    case Region::automatic:
      break;
  }
  return r > a;
}

// Boundary of [-h1, h1] x [-h2, h2] in polar form.
AOfTheta rectangle_radius(double h1, double h2, double theta) {
  const double t = reduce_angle(theta);
  const double t0 = std::atan2(h2, h1);
  const double pi = std::numbers::pi;
  const double c = std::cos(t);
  const double s = std::sin(t);
  if (t < t0 || t >= kTwoPi - t0) {
    return {h1 / c, h1 * s / (c * c)};
  }
  if (t < pi - t0) {
    return {h2 / s, -h2 * c / (s * s)};
  }
  if (t < pi + t0) {
    return {-h1 / c, -h1 * s / (c * c)};
  }
  return {-h2 / s, h2 * c / (s * s)};
}

}  // namespace

CircularMap CircularMap::from_threshold(double a, double b, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("threshold eps must lie in (0, 1)");
  }
  CircularMap map{a, b, std::log(1.0 / (eps * eps)) / (b - a)};
  map.validate();
  return map;
}

void CircularMap::validate() const {
  if (!(a > 0.0 && b > a && tau0 > 0.0) || !std::isfinite(b) || !std::isfinite(tau0)) {
    throw DomainError("circular map needs 0 < a < b and tau0 > 0");
  }
}

RectangularMap RectangularMap::from_threshold(double L1, double L2, double d1, double d2,
                                              double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("threshold eps must lie in (0, 1)");
  }
  RectangularMap map{L1, L2, d1, d2, 2.0 * std::log(1.0 / eps) / std::min(d1, d2)};
  map.validate();
  return map;
}

void RectangularMap::validate() const {
  if (!(L1 > 0.0 && L2 > 0.0 && d1 > 0.0 && d2 > 0.0 && tau0 > 0.0)) {
    throw DomainError("rectangular map needs positive L1, L2, d1, d2, tau0");
  }
}

double RectangularMap::theta0() const { return std::atan2(L2, L1); }

bool RectangularMap::contains(double x, double y) const {
  return std::abs(x) <= L1 + d1 && std::abs(y) <= L2 + d2;
}

double tau_circular(const CircularMap& map, double r) {
  if (r < 0.0) throw DomainError("tau_circular expects r >= 0");
  if (r <= map.a) return r;
  return map.a * std::exp(map.tau0 * (r - map.a));
}

double tau_circular_derivative(const CircularMap& map, double r, Region side) {
  if (!in_layer(r, map.a, side)) return 1.0;
  return map.tau0 * map.a * std::exp(map.tau0 * (r - map.a));
}

double tau_circular_inverse(const CircularMap& map, double rho) {
  if (!(rho >= map.a)) {
    throw DomainError("tau_circular_inverse expects rho >= a, got rho=" + std::to_string(rho));
  }
  return map.a + std::log(rho / map.a) / map.tau0;
}

AOfTheta a_of_theta(const RectangularMap& map, double theta) {
  return rectangle_radius(map.L1, map.L2, theta);
}

double b_of_theta(const RectangularMap& map, double theta) {
  return rectangle_radius(map.L1 + map.d1, map.L2 + map.d2, theta).a;
}

TauRectangular tau_rectangular(const RectangularMap& map, double r, double theta, Region side) {
  const AOfTheta at = a_of_theta(map, theta);
  if (!in_layer(r, at.a, side)) return {r, 1.0, 0.0};
  const double growth = std::exp(map.tau0 * (r - at.a));
  const double tau = at.a * growth;
  return {tau, map.tau0 * tau, at.a_prime * growth * (1.0 - map.tau0 * at.a)};
}

LayerCoefficients layer_coefficients_circular(const CircularMap& map, double r, double theta,
                                              Region side) {
  LayerCoefficients out;
  if (!in_layer(r, map.a, side)) return out;
  // τ/(r τ') = 1/(r τ0) exactly in the layer; no exponentials are formed.
  const double radial = 1.0 / (r * map.tau0);
  out.c_matrix = rotate_symmetric(Eigen::Vector2d(radial, 1.0 / radial).asDiagonal(), theta);
  const double tau = tau_circular(map, r);
  out.dr_tau = map.tau0 * tau;
  out.jacobian = tau * out.dr_tau / r;
  out.dtheta_tau = 0.0;
  return out;
}

LayerCoefficients layer_coefficients_rectangular(const RectangularMap& map, double r, double theta,
                                                 Region side) {
  LayerCoefficients out;
  const AOfTheta at = a_of_theta(map, theta);
  if (!in_layer(r, at.a, side)) return out;
  const double p = 1.0 / (r * map.tau0);                             // τ/(r ∂_r τ)
  const double q = at.a_prime * (1.0 - map.tau0 * at.a) / at.a;      // ∂_θ τ / τ
  Eigen::Matrix2d polar;
  polar << p * (1.0 + q * q), -q, -q, 1.0 / p;
  out.c_matrix = rotate_symmetric(polar, theta);
  const TauRectangular t = tau_rectangular(map, r, theta, Region::layer);
  out.dr_tau = t.dr_tau;
  out.dtheta_tau = t.dtheta_tau;
  out.jacobian = t.tau * t.dr_tau / r;
  return out;
}

std::complex<double> substitution_factor(double tau_value, double a_value, double k,
                                         bool layer) {
  if (!layer) return 1.0;
  return std::polar(1.0, k * (tau_value - a_value));
}

double polar_angle(double x, double y) { return reduce_angle(std::atan2(y, x)); }

FemCoefficients fem_alpha_coefficients(const RectangularMap& map, double k, double x, double y,
                                       Region side) {
  if (!map.contains(x, y) || (x == 0.0 && y == 0.0)) {
    throw DomainError("fem_alpha_coefficients: point outside the computational domain");
  }
  FemCoefficients out;
  const double r = std::hypot(x, y);
  const double theta = polar_angle(x, y);
  const AOfTheta at = a_of_theta(map, theta);
  out.in_layer = in_layer(r, at.a, side);
  if (!out.in_layer) {
    out.alpha4 = -k * k;
    return out;
  }
  using cplx = std::complex<double>;
  const cplx ik(0.0, k);
  const double tau0 = map.tau0;
  const double ap = at.a_prime;
  const double p = 1.0 / (r * tau0);
  const double q = ap * (1.0 - tau0 * at.a) / at.a;
  const double inv_tau = std::exp(-tau0 * (r - at.a)) / at.a;  // underflows gracefully

  Eigen::Matrix2d c_polar;
  c_polar << p * (1.0 + q * q), -q, -q, 1.0 / p;

  // Polar (e_r, e_θ) components; the e^{ikτ} and k² τ0 τ terms cancel
  // analytically between the gradient and mass parts.
  const double shift_r = 1.0 + q * ap * inv_tau;
  const double shift_t = -tau0 * r * ap * inv_tau;
  Eigen::Vector2cd a2;
  a2 << inv_tau * (p * (1.0 + q * q) - 1.0) - ik * shift_r, -inv_tau * q - ik * shift_t;
  Eigen::Vector2cd a3;
  a3 << ik * shift_r, ik * shift_t;

  const Eigen::Matrix2d rot = rotation(theta);
  out.alpha1 = (r * inv_tau) * rotate_symmetric(c_polar, theta);
  out.alpha2 = rot.cast<cplx>() * a2;
  out.alpha3 = rot.cast<cplx>() * a3;
  out.alpha4 = k * k * tau0 * ap * ap * inv_tau + ik * ((1.0 - tau0 * r) / r + q * ap * inv_tau / r);
  return out;
}

}  // namespace rcl
