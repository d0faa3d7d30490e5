#include "rcl/rect.hpp"

#include <cmath>
#include <exception>
#include <variant>

#include "rcl/errors.hpp"
#include "rcl/specfun.hpp"

namespace rcl::rect {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(std::string(field) + ": " + what);
}

}  // namespace

RectangularMap RectProblem::map() const {
  RectangularMap m = RectangularMap::from_threshold(L1, L2, d1, d2, eps);
  if (tau0 > 0.0) m.tau0 = tau0;
  return m;
}

fem::MeshSpec RectProblem::mesh_spec() const {
  const RectangularMap mp = map();
  fem::MeshSpec s;
  s.L1 = L1;
  s.L2 = L2;
  s.d1 = d1;
  s.d2 = d2;
  s.scatterer = scatterer;
  s.m = m;
  s.layer_grading = layer_grading < 0.0 ? fem::equidistributed_grading(mp, N) : layer_grading;
  s.layer_length = layer_length < 0.0 ? default_layer_length(mp, k, N) : layer_length;
  return s;
}

void RectProblem::validate() const {
  require(std::isfinite(L1) && L1 > 0.0, "L1", "must be positive");
  require(std::isfinite(L2) && L2 > 0.0, "L2", "must be positive");
  require(std::isfinite(d1) && d1 > 0.0, "d1", "must be positive");
  require(std::isfinite(d2) && d2 > 0.0, "d2", "must be positive");
  require(std::isfinite(eps) && eps > 0.0 && eps < 1.0, "eps", "must lie in (0, 1)");
  require(std::isfinite(tau0) && tau0 >= 0.0, "tau0", "must be non-negative");
  require(std::isfinite(k) && k > 0.0, "k", "must be positive");
  require(N >= 1 && N <= 16, "N", "must lie in 1..16");
  require(m >= 2, "mesh", "must be at least 2");
  require(std::isfinite(layer_grading), "layer_grading", "must be finite");
  require(std::isfinite(layer_length), "layer_length", "must be finite");
  require(std::isfinite(source_x) && std::isfinite(source_y), "source", "must be finite");
  const double h = 1e-9;
  bool inside = true;
  for (double dx : {-h, 0.0, h}) {
    for (double dy : {-h, 0.0, h}) inside = inside && fem::scatterer_contains(scatterer, source_x + dx, source_y + dy);
  }
  require(inside, "source", "must lie strictly inside the scatterer");
}

double default_layer_length(const RectangularMap& map, double k, int N) {
  return N == 1 ? map.d1 : fem::balanced_layer_length(map, k);
}

cplx oracle_u(double k, double x, double y) {
  const double r = std::hypot(x, y);
  if (!(r > 0.0)) throw DomainError("oracle_u: point at the origin");
  return specfun::hankel1(0, k * r);
}

cplx oracle_v(double k, const RectangularMap& map, double x, double y) {
  const double r = std::hypot(x, y), th = polar_angle(x, y);
  const AOfTheta a = a_of_theta(map, th);
  // Points on the interface may round to just inside it.
  if (!map.contains(x, y) || r < a.a * (1.0 - 1e-14)) throw DomainError("oracle_v: point outside the layer");
  const double t = tau_rectangular(map, r, th, Region::layer).tau;
  // H0(kτ) e^{-ikτ} is evaluated as one factor so large τ does not overflow.
  return specfun::hankel1_scaled(0, k * t) * std::polar(1.0, k * a.a);
}

cplx reference_field(double k, const RectangularMap& map, double x, double y) {
  const double r = std::hypot(x, y);
  if (r <= a_of_theta(map, polar_angle(x, y)).a) return oracle_u(k, x, y);
  return oracle_v(k, map, x, y);
}

RectRun run(const RectProblem& problem) {
  problem.validate();
  const RectangularMap map = problem.map();
  auto mesh = std::make_shared<fem::Mesh>(fem::build_mesh(problem.mesh_spec()));
  auto space = std::make_shared<fem::Space>(mesh, problem.N);
  const double k = problem.k, sx = problem.source_x, sy = problem.source_y;
  const auto system =
      fem::assemble(space, map, k, [k, sx, sy](double x, double y) { return oracle_u(k, x - sx, y - sy); });
  fem::Solution sol = fem::solve(system);
  return {problem, space, std::move(sol.nodal), sol.residual};
}

RectErrors errors(const RectRun& run) {
  if (run.problem.source_x != 0.0 || run.problem.source_y != 0.0) {
    throw DomainError("errors: the exact field is known only for a source at the origin");
  }
  const double k = run.problem.k;
  const RectangularMap map = run.problem.map();
  const fem::PointFunction u = [k](double x, double y) { return oracle_u(k, x, y); };
  const fem::PointFunction v = [k, &map](double x, double y) { return oracle_v(k, map, x, y); };
  using fem::ErrorRegion;
  using fem::Part;
  const auto& s = *run.space;
  return {fem::l2_error(s, run.nodal, u, ErrorRegion::inner, Part::real),
          fem::l2_error(s, run.nodal, u, ErrorRegion::inner, Part::imag),
          fem::l2_error(s, run.nodal, v, ErrorRegion::layer, Part::real),
          fem::l2_error(s, run.nodal, v, ErrorRegion::layer, Part::imag)};
}

double estimated_memory(const RectProblem& problem) {
  problem.validate();
  const fem::Mesh mesh = fem::build_mesh(problem.mesh_spec());
  const double V = static_cast<double>(mesh.vertices.size());
  const double C = static_cast<double>(mesh.cells.size());
  // Edges of a mesh with one hole: E = V + C.
  const double skeleton = V + (V + C) * (problem.N - 1);
  return skeleton * 2048.0 * (problem.N + 1);
}

std::optional<double> ErrorReport::order(std::size_t row, int column) const {
  if (row == 0 || row >= rows.size() || column < 0 || column > 3) return std::nullopt;
  const auto& a = rows[row - 1].errors;
  const auto& b = rows[row].errors;
  if (!a || !b) return std::nullopt;
  auto pick = [column](const RectErrors& e) {
    switch (column) {
      case 0: return e.u_re;
      case 1: return e.u_im;
      case 2: return e.v_re;
      default: return e.v_im;
    }
  };
  return std::log2(pick(*a) / pick(*b));
}

ErrorReport convergence_study(const RectProblem& base, const std::vector<int>& ms,
                              const StudyOptions& options) {
  base.validate();
  ErrorReport report;
  for (int m : ms) {
    StudyRow row;
    row.m = m;
    RectProblem p = base;
    p.m = m;
    const char* stage = "mesh";
    try {
      const double need = estimated_memory(p);
      if (options.memory_budget > 0.0 && need > options.memory_budget) {
        row.status = "skipped: memory";
        report.rows.push_back(row);
        continue;
      }
      stage = "solve";
      const RectRun r = run(p);
      row.cells = static_cast<long>(r.space->mesh().cells.size());
      row.dofs = r.space->size();
      row.residual = r.residual;
      stage = "errors";
      row.errors = errors(r);
      row.status = "ok";
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + stage + ": " + e.what();
    }
    report.rows.push_back(row);
  }
  return report;
}

fem::LShapeScatterer default_lshape() { return {0.8, 0.0, 0.0}; }

std::array<double, 2> lshape_source(const fem::LShapeScatterer& shape) {
  return {0.5 * (shape.cut_x - 0.5 * shape.width), 0.5 * (shape.cut_y - 0.5 * shape.width)};
}

nlohmann::json lshape_demo(double k, int N, int m, const fem::LShapeScatterer& shape) {
  RectProblem p;
  p.k = k;
  p.N = N;
  p.m = m;
  return lshape_demo(p, shape);
}

nlohmann::json lshape_demo(RectProblem p, const fem::LShapeScatterer& shape) {
  p.scatterer = shape;
  const auto src = lshape_source(shape);
  p.source_x = src[0];
  p.source_y = src[1];
  const RectRun r = run(p);
  nlohmann::json out = fem::export_field(*r.space, r.nodal);
  out["meta"] = {{"k", p.k},
                 {"N", p.N},
                 {"mesh", p.m},
                 {"L1", p.L1},
                 {"L2", p.L2},
                 {"d1", p.d1},
                 {"d2", p.d2},
                 {"eps", p.eps},
                 {"tau0", p.map().tau0},
                 {"scatterer", {{"shape", "lshape"}, {"width", shape.width}, {"cut_x", shape.cut_x},
                                {"cut_y", shape.cut_y}}},
                 {"source", {src[0], src[1]}},
                 {"cells", r.space->mesh().cells.size()},
                 {"dofs", r.space->size()},
                 {"residual", r.residual}};
  return out;
}

}  // namespace rcl::rect
