#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "rcl/mapping.hpp"
#include "rcl/spectral1d.hpp"

namespace rcl::circular {

/// Plane-wave scattering by a sound-soft disc of radius R, truncated by a
/// compressed layer on a < r < b.
struct CircularProblem {
  double R = 0.5;
  double a = 1.0;
  double b = 2.0;
  double tau0 = 0.0;  // 0 selects ln(1/eps²)/(b - a)
  double k = 50.0;
  double eps = 1e-12;
  double eps1 = 1e-12;
  int N1 = 100;
  int N2 = 100;  // total layer degree, shared by the layer sub-elements
  int M = -1;  // -1 selects mode_cutoff(k, R, eps1)
  int quadrature_order = 0;
  /// Layer sub-element breakpoints as values of τ0 (r - a); those at or past
  /// τ0 (b - a) are dropped. Each sub-element gets degree ceil(N2 / parts).
  std::vector<double> layer_splits = {7.0};

  /// Copy with tau0 and M resolved; throws on invalid parameters.
  CircularProblem resolved() const;
  CircularMap map() const;
  spectral1d::RadialMesh mesh() const;
};

/// Smallest M with |J_n(kR)| <= eps1 for every n >= M.
int mode_cutoff(double k, double R, double eps1);

/// ĝₙ = -iⁿ Jₙ(kR) for n = -M..M (index n + M): the trace of minus the
/// incident plane wave e^{ikx} on r = R.
std::vector<std::complex<double>> plane_wave_data(double k, double R, int M);

/// Truncated exact scattered field Σ ĝₙ Hₙ(kρ)/Hₙ(kR) e^{inθ}, |n| <= M.
std::complex<double> exact_scattering_series(double k, double R, double rho, double theta, int M);

/// Exact modal coefficients of the reference solution at radius r of the
/// computational domain: û at r <= a, v̂ = û(τ(r)) e^{-ik(τ(r)-a)} beyond.
/// Index n + M.
std::vector<std::complex<double>> exact_modes(const CircularProblem& problem, double r);

/// Reference v (= u for r <= a) at (r, θ) for a resolved problem.
std::complex<double> exact_reference(const CircularProblem& problem, double r, double theta);

struct CircularSolution {
  CircularProblem problem;                     // resolved
  std::vector<spectral1d::ModeSolution> modes;  // index n + M
  double max_residual = 0.0;
};

CircularSolution solve(const CircularProblem& problem);
/// Solve with explicit Dirichlet data at r = R (index n + M).
CircularSolution solve(const CircularProblem& problem,
                       const std::vector<std::complex<double>>& data);

/// Nodal values of v(·, θ) on the radial mesh.
Eigen::VectorXcd nodal_field(const CircularSolution& solution, double theta);

enum class Representation { u, v };

std::complex<double> synthesize(const CircularSolution& solution, double r, double theta,
                                Representation rep);

/// U_N(ρ, θ) = e^{ik(ρ - a)} v(τ^{-1}(ρ), θ) for a <= ρ <= τ(b).
std::complex<double> far_field_recover(const CircularSolution& solution, double rho, double theta);
std::vector<std::complex<double>> far_field_recover(const CircularSolution& solution,
                                                    const std::vector<double>& rho, double theta);

/// Least-squares slope of log E against log ρ, where E is the monotone
/// (right-to-left running maximum) envelope of |values|.
double decay_exponent(const std::vector<double>& rho,
                      const std::vector<std::complex<double>>& values);

struct SliceErrors {
  double theta = 0.0;
  double u_re = 0.0;  // sup |Re(u - u_N)| on (R, a)
  double u_im = 0.0;
  double v_re = 0.0;  // sup |Re(v - v_N)| on (a, b)
  double v_im = 0.0;
};

struct ErrorReport {
  std::vector<SliceErrors> slices;
  std::optional<double> l2_u;  // L² over the annulus R < r < a
  std::optional<double> l2_v;  // L² over the layer a < r < b
  int M = 0;
  double tau0 = 0.0;
  double max_residual = 0.0;
};

struct ErrorOptions {
  int samples = 20000;
  std::vector<double> thetas = {0.0, 0.7853981633974483};
  bool l2 = false;
};

ErrorReport error_report(const CircularSolution& solution, const ErrorOptions& options = {});

}  // namespace rcl::circular
