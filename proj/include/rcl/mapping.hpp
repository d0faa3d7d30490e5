#pragma once

#include <Eigen/Dense>
#include <complex>

namespace rcl {

/// Which side of the interface r = a(θ) a coefficient is evaluated on.
///
/// `automatic` picks the inner region for r <= a(θ). Element assembly passes
/// the element's own tag so that values at r = a are one-sided.
enum class Region { automatic, inner, layer };

/// Exponential radial compression r -> a e^{τ0 (r - a)} outside r = a.
struct CircularMap {
  double a = 1.0;     // interface radius
  double b = 2.0;     // truncation radius
  double tau0 = 1.0;  // compression rate

  /// τ0 = ln(1/ε²)/(b - a): the field at r = b is damped by about ε².
  static CircularMap from_threshold(double a, double b, double eps);

  void validate() const;
};

/// Rectangular variant: a(θ) traces the boundary of [-L1, L1] x [-L2, L2].
struct RectangularMap {
  double L1 = 1.0;
  double L2 = 1.0;
  double d1 = 0.3;
  double d2 = 0.3;
  double tau0 = 1.0;

  /// τ0 with e^{-τ0 min(d1, d2) / 2} = ε.
  static RectangularMap from_threshold(double L1, double L2, double d1, double d2, double eps);

  void validate() const;
  double theta0() const;
  /// True for points in the closed outer rectangle [-L1-d1, L1+d1] x [-L2-d2, L2+d2].
  bool contains(double x, double y) const;
};

double tau_circular(const CircularMap& map, double r);
/// dτ/dr; at r = a the `side` decides between 1 and a τ0.
double tau_circular_derivative(const CircularMap& map, double r, Region side = Region::automatic);
double tau_circular_inverse(const CircularMap& map, double rho);

struct AOfTheta {
  double a;
  double a_prime;
};

/// Boundary of the inner rectangle in polar form, with its one-sided
/// derivative. Angles are reduced to [0, 2π).
AOfTheta a_of_theta(const RectangularMap& map, double theta);
/// Same for the outer rectangle (L + d in place of L).
double b_of_theta(const RectangularMap& map, double theta);

struct TauRectangular {
  double tau;
  double dr_tau;
  double dtheta_tau;
};

TauRectangular tau_rectangular(const RectangularMap& map, double r, double theta,
                               Region side = Region::automatic);

/// C = J^{-1} J^{-T} 𝕁 and 𝕁 = τ ∂_r τ / r at one point.
struct LayerCoefficients {
  Eigen::Matrix2d c_matrix = Eigen::Matrix2d::Identity();
  double jacobian = 1.0;
  double dr_tau = 1.0;
  double dtheta_tau = 0.0;
};

LayerCoefficients layer_coefficients_circular(const CircularMap& map, double r, double theta,
                                              Region side = Region::automatic);
LayerCoefficients layer_coefficients_rectangular(const RectangularMap& map, double r, double theta,
                                                 Region side = Region::automatic);

/// ω = e^{ik(τ - a)} in the layer, exactly 1 in the inner region.
std::complex<double> substitution_factor(double tau_value, double a_value, double k, bool in_layer);

/// Coefficients of the substituted weak form
///   (α1 ∇v, ∇φ) + (α2·∇v, φ) + (v, α3·∇φ) + (α4 v, φ)
/// at a Cartesian point, all vectors in Cartesian components.
struct FemCoefficients {
  Eigen::Matrix2d alpha1 = Eigen::Matrix2d::Identity();
  Eigen::Vector2cd alpha2 = Eigen::Vector2cd::Zero();
  Eigen::Vector2cd alpha3 = Eigen::Vector2cd::Zero();
  std::complex<double> alpha4 = 0.0;
  bool in_layer = false;
};

FemCoefficients fem_alpha_coefficients(const RectangularMap& map, double k, double x, double y,
                                       Region side = Region::automatic);

/// Polar angle in [0, 2π).
double polar_angle(double x, double y);

}  // namespace rcl
