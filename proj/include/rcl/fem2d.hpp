#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <variant>
#include <vector>

#include "rcl/mapping.hpp"

namespace rcl::fem {

using cplx = std::complex<double>;
using PointFunction = std::function<cplx(double x, double y)>;

enum class RegionTag : unsigned char { inner = 0, layer = 1 };
enum class BoundaryTag : unsigned char { scatterer = 0, outer = 1 };

/// Axis-aligned square [-w/2, w/2]^2 centred at the origin.
struct SquareScatterer {
  double width = 0.8;
};

/// The open square (-w/2, w/2)^2 minus the closed block [cut_x, w/2] x [cut_y, w/2].
/// cut_x = cut_y = w/2 removes nothing.
struct LShapeScatterer {
  double width = 0.8;
  double cut_x = 0.0;
  double cut_y = 0.0;
};

using Scatterer = std::variant<SquareScatterer, LShapeScatterer>;

bool scatterer_contains(const Scatterer& s, double x, double y);

struct MeshSpec {
  double L1 = 1.0;
  double L2 = 1.0;
  double d1 = 0.3;
  double d2 = 0.3;
  Scatterer scatterer = SquareScatterer{};
  int m = 32;
  /// Strength G of the radial grading in the layer: ring i sits at depth
  /// fraction -ln(1 - t (1 - e^{-G})) / G with t = i / layer_cells. G = 0 is
  /// uniform; G = ln(1/ε)/(N+1) equidistributes the Q_N interpolation error
  /// of a profile decaying like e^{-τ0 s / 2}.
  double layer_grading = 0.0;
  /// Length the layer band counts as when the m cells of an axis are shared
  /// between bands; 0 means d1. The inner rectangle counts as 2 L1.
  double layer_length = 0.0;
};

/// Layer length that gives every cell the same budget: phase k h in the
/// inner rectangle, decay τ0 h / 2 in the layer. Equals ln(1/ε) / k.
double balanced_layer_length(const RectangularMap& map, double k);

/// Grading strength matched to a layer field decaying like e^{-τ0 s / 2}.
double equidistributed_grading(const RectangularMap& map, int degree);

/// Quadrilateral with counter-clockwise corners.
struct Cell {
  std::array<int, 4> v;
  RegionTag region;
};

struct BoundaryEdge {
  std::array<int, 2> v;
  BoundaryTag tag;
  int cell;
  int local_edge;  // 0: v0v1, 1: v1v2, 2: v3v2, 3: v0v3
};

/// Tensor grid over the inner rectangle plus a ring of cells in the layer
/// whose radial edges are rays through the origin. Grid lines contain the
/// scatterer boundary, the interface and the outer boundary; the four
/// corner rays are cell edges.
struct Mesh {
  MeshSpec spec;
  std::vector<Eigen::Vector2d> vertices;
  std::vector<Cell> cells;
  std::vector<BoundaryEdge> boundary;
  std::vector<double> x_lines;  // inner-rectangle grid lines
  std::vector<double> y_lines;
  int layer_cells = 0;  // cells across the layer along every ray

  double cell_area(int c) const;
  double region_area(RegionTag t) const;
};

/// Throws GeometryError when the scatterer is not strictly inside the inner
/// rectangle, when d1/L1 != d2/L2, or when a band gets fewer than 2 cells.
Mesh build_mesh(const MeshSpec& spec);

/// Number of cells `build_mesh` produces, from its layout rules alone.
long expected_cell_count(const MeshSpec& spec);

/// Continuous Q_N space on Gauss–Lobatto nodes.
///
/// Numbering: vertices, then edge-interior nodes, then cell-interior nodes.
/// Vertex and edge nodes form the skeleton; only they enter the global
/// system after static condensation.
class Space {
 public:
  Space(std::shared_ptr<const Mesh> mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int skeleton_size() const { return skeleton_size_; }
  const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
  /// Global node of local tensor node (i, j), i along ξ and j along η.
  int dof(int cell, int i, int j) const { return cell_dofs_[cell][i + (degree_ + 1) * j]; }
  const std::vector<int>& cell_dofs(int cell) const { return cell_dofs_[cell]; }
  /// Boundary tag per node; -1 for nodes off the boundary.
  const std::vector<signed char>& node_boundary() const { return node_boundary_; }
  const std::vector<RegionTag>& node_region() const { return node_region_; }
  const Eigen::VectorXd& reference_nodes() const { return gll_; }

  /// Value of a nodal field at reference coordinates inside a cell.
  cplx evaluate(const Eigen::VectorXcd& nodal, int cell, double xi, double eta) const;
  Eigen::Vector2d map_point(int cell, double xi, double eta) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  int skeleton_size_ = 0;
  Eigen::VectorXd gll_;
  Eigen::VectorXd bary_;
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<std::vector<int>> cell_dofs_;
  std::vector<signed char> node_boundary_;
  std::vector<RegionTag> node_region_;
};

/// Condensed, constrained system on the free skeleton nodes.
struct System {
  std::shared_ptr<const Space> space;
  Eigen::SparseMatrix<cplx> matrix;  // free skeleton x free skeleton
  Eigen::VectorXcd rhs;
  std::vector<int> free_index;       // skeleton node -> row, or -1 if prescribed
  std::vector<int> free_nodes;       // row -> skeleton node
  Eigen::VectorXcd prescribed;       // skeleton values; nonzero only on constrained nodes
  /// Per cell: interior = -recovery * skeleton-local values. Shared across
  /// congruent cells. Empty for N = 1.
  std::vector<std::shared_ptr<const Eigen::MatrixXcd>> recovery;
};

struct AssemblyOptions {
  int quadrature_points = 0;  // per direction; 0 means N + 6
};

/// Galerkin system for v with v = g on the scatterer and v = 0 on the outer
/// boundary. Rejects a map whose rectangle disagrees with the mesh and
/// reports the cell of any non-finite coefficient.
System assemble(std::shared_ptr<const Space> space, const RectangularMap& map, double k,
                const PointFunction& g, const AssemblyOptions& options = {});

struct Solution {
  Eigen::VectorXcd nodal;
  double residual = 0.0;  // relative, on the condensed free rows
};

inline constexpr double kResidualContract = 1e-10;

struct SparseSolve {
  Eigen::VectorXcd x;
  double residual = 0.0;  // ‖b - A x‖ / ‖b‖, 0 for b = 0
};

/// Sparse LU (UMFPACK) of a square system with up to three refinement steps.
/// Throws NumericalError on a failed factorization or a residual above the
/// contract, CapacityError when memory runs out.
SparseSolve solve_sparse(const Eigen::SparseMatrix<cplx>& A, const Eigen::VectorXcd& b);

/// Condensed solve followed by local recovery of cell-interior nodes.
Solution solve(const System& system);

/// Cell matrix in tensor-local order (row: test node, column: trial node),
/// evaluated with the general mapped-coefficient quadrature.
Eigen::MatrixXcd cell_matrix(const Space& space, const RectangularMap& map, double k, int cell,
                             const AssemblyOptions& options = {});

/// Applies the unconstrained operator to a nodal field; rows of constrained
/// nodes are zeroed. Recomputes cell matrices, so it is meant for checks.
Eigen::VectorXcd apply_operator(const Space& space, const RectangularMap& map, double k,
                                const Eigen::VectorXcd& nodal, const AssemblyOptions& options = {});

Eigen::VectorXcd interpolate(const Space& space, const PointFunction& f);

enum class ErrorRegion { inner, layer, all };
enum class Part { real, imag };

/// L2 norm of part(v_h - oracle) over the selected cells by Gauss quadrature.
double l2_error(const Space& space, const Eigen::VectorXcd& nodal, const PointFunction& oracle,
                ErrorRegion region, Part part, int quadrature_points = 0);

/// {points, re, im, region} at the nodes.
nlohmann::json export_field(const Space& space, const Eigen::VectorXcd& nodal);

}  // namespace rcl::fem
