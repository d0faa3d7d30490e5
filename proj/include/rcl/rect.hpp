#pragma once

#include <array>
#include <complex>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rcl/fem2d.hpp"
#include "rcl/mapping.hpp"

namespace rcl::rect {

using cplx = std::complex<double>;

/// Scattering of the cylindrical wave H0(k|x - s|) by a polygonal scatterer in
/// [-L1, L1] x [-L2, L2], truncated by a compressed layer of widths d1, d2.
struct RectProblem {
  double L1 = 1.0;
  double L2 = 1.0;
  double d1 = 0.3;
  double d2 = 0.3;
  double eps = 1e-12;
  double tau0 = 0.0;  // 0 selects the value with e^{-τ0 min(d) / 2} = eps
  double k = 10.0;
  int N = 1;
  int m = 32;
  fem::Scatterer scatterer = fem::SquareScatterer{};
  /// Source point s of the boundary data; must lie strictly inside the scatterer.
  double source_x = 0.0;
  double source_y = 0.0;
  /// Negative values select equidistributed_grading and default_layer_length.
  double layer_grading = -1.0;
  double layer_length = -1.0;

  RectangularMap map() const;
  fem::MeshSpec mesh_spec() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Layer length used when sharing the m cells of an axis between bands.
/// Linear elements: d1, so cells are spread in proportion to length; their
/// error is dominated by the inner phase error. Higher degrees:
/// balanced_layer_length, which keeps the layer's boundary layer resolved so
/// that the layer error converges at the full rate.
double default_layer_length(const RectangularMap& map, double k, int N);

/// H0(k|x|); DomainError at the origin.
cplx oracle_u(double k, double x, double y);

/// H0(k τ(r, θ)) e^{-ik(τ - a(θ))}; DomainError outside the closed layer.
cplx oracle_v(double k, const RectangularMap& map, double x, double y);

/// oracle_u in the inner rectangle, oracle_v in the layer: the field the
/// discrete v approximates.
cplx reference_field(double k, const RectangularMap& map, double x, double y);

struct RectErrors {
  double u_re = 0.0;  // L2 of Re(u - u_h) over the inner region
  double u_im = 0.0;
  double v_re = 0.0;  // L2 of Re(v - v_h) over the layer
  double v_im = 0.0;
};

struct RectRun {
  RectProblem problem;
  std::shared_ptr<const fem::Space> space;
  Eigen::VectorXcd nodal;
  double residual = 0.0;
};

/// Solves with g = H0(k|x - s|) on the scatterer boundary and 0 on the outer one.
RectRun run(const RectProblem& problem);

/// Errors against the exact field; requires the source at the origin.
RectErrors errors(const RectRun& run);

/// Conservative peak-memory estimate in bytes for solving `problem`.
double estimated_memory(const RectProblem& problem);

struct StudyRow {
  int m = 0;
  std::string status;  // "ok", "skipped: memory" or "failed: <stage>: <message>"
  std::optional<RectErrors> errors;
  long cells = 0;
  long dofs = 0;
  double residual = 0.0;
};

struct ErrorReport {
  std::vector<StudyRow> rows;
  /// log2(e_prev / e_curr) for column 0..3 (u_re, u_im, v_re, v_im); empty for
  /// the first row and when either row has no errors.
  std::optional<double> order(std::size_t row, int column) const;
};

struct StudyOptions {
  double memory_budget = 0.0;  // bytes; 0 means unlimited
};

/// One solve per m with the remaining parameters taken from `base`.
/// Solver failures and over-budget rows are recorded in the row status.
ErrorReport convergence_study(const RectProblem& base, const std::vector<int>& ms,
                              const StudyOptions& options = {});

/// The square [-0.4, 0.4]^2 minus its upper-right quadrant.
fem::LShapeScatterer default_lshape();

/// Source point used for an L-shape: the centre of the box spanned by the
/// lower-left corner and the cut corner. The origin for the full square.
std::array<double, 2> lshape_source(const fem::LShapeScatterer& shape);

/// Field export of the L-shape scattering run, with a "meta" object holding
/// the geometry, source, k, N, m and the solver residual.
nlohmann::json lshape_demo(double k, int N, int m, const fem::LShapeScatterer& shape = default_lshape());
/// Same, with the layer, mesh and wave parameters taken from `base`.
nlohmann::json lshape_demo(RectProblem base, const fem::LShapeScatterer& shape);

}  // namespace rcl::rect
