#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "rcl/mapping.hpp"

namespace rcl::spectral1d {

inline constexpr int kMaxGaussPoints = 2048;

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
Quadrature gauss_legendre(int n);

/// Gauss-Lobatto-Legendre rule with n + 1 points (degree-n nodal basis).
Quadrature gauss_lobatto(int n);

/// Barycentric weights for arbitrary distinct nodes.
std::vector<double> barycentric_weights(const std::vector<double>& nodes);

/// Values of every Lagrange basis polynomial at x (rows: points, cols: basis).
Eigen::MatrixXd lagrange_table(const std::vector<double>& nodes, const std::vector<double>& x);

/// D(i, j) = l_j'(x_i) for the Lagrange basis on `nodes`.
Eigen::MatrixXd differentiation_matrix(const std::vector<double>& nodes);

struct ElementSpan {
  double lo;
  double hi;
  int degree;
  int offset;  // global index of the left node
  bool layer;
};

/// Spectral elements I1 = (R, a) and I2 = (a, b) sharing the node r = a.
/// I2 may be split at `layer_breaks`; every layer sub-element has degree N2.
struct RadialMesh {
  double R = 0.5;
  double a = 1.0;
  double b = 2.0;
  int N1 = 50;
  int N2 = 50;
  int quadrature_order = 0;  // points per element; 0 selects 2 max(N1, N2) + 16
  std::vector<double> layer_breaks;  // ascending, strictly inside (a, b)

  static int default_quadrature(int N1, int N2);

  void validate() const;
  int effective_quadrature() const;
  int size() const { return N1 + N2 * static_cast<int>(layer_breaks.size() + 1) + 1; }
  std::vector<ElementSpan> elements() const;
  /// Global node positions, ascending; index N1 is r = a.
  std::vector<double> nodes() const;
};

/// Full per-mode system before the Dirichlet rows at r = R and r = b are
/// eliminated. Row i is the test function, column j the trial function.
struct ModeSystem {
  int mode = 0;
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd rhs;
  std::complex<double> value_at_R = 0.0;
  std::complex<double> value_at_b = 0.0;
};

struct ModeSolution {
  int mode = 0;
  RadialMesh mesh;
  Eigen::VectorXcd coefficients;  // nodal values of v̂ₙ
  double residual = 0.0;          // ‖A v - f‖ / ‖f‖ of the constrained system
};

/// Precomputes the n-independent parts of the per-mode operator so each mode
/// costs one matrix sum: A(n) = A0 + n² An.
class ModeAssembler {
 public:
  ModeAssembler(const RadialMesh& mesh, const CircularMap& map, double k);

  ModeSystem system(int n, std::complex<double> value_at_R) const;

  const RadialMesh& mesh() const { return mesh_; }
  const Eigen::MatrixXcd& base_matrix() const { return a0_; }
  const Eigen::MatrixXd& mode_matrix() const { return an_; }

 private:
  RadialMesh mesh_;
  CircularMap map_;
  double k_;
  Eigen::MatrixXcd a0_;
  Eigen::MatrixXd an_;
};

ModeSystem assemble_mode(const RadialMesh& mesh, const CircularMap& map, double k, int n,
                         std::complex<double> value_at_R = 1.0);

/// Dense LU with partial pivoting plus iterative refinement. Throws
/// NumericalError when the constrained matrix is singular or the relative
/// residual stays above 1e-12.
ModeSolution solve_mode(const ModeSystem& system, const RadialMesh& mesh);

inline constexpr double kResidualContract = 1e-12;

std::complex<double> evaluate(const ModeSolution& solution, double r);

/// Interpolates a nodal vector on `mesh` at r in [R, b].
std::complex<double> interpolate(const RadialMesh& mesh, const Eigen::VectorXcd& nodal, double r);

/// Batched interpolation; `r` need not be sorted.
Eigen::VectorXcd interpolate(const RadialMesh& mesh, const Eigen::VectorXcd& nodal,
                             const std::vector<double>& r);

}  // namespace rcl::spectral1d
