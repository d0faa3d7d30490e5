#include "rcl/spectral1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rcl/errors.hpp"

namespace rcl::spectral1d {
namespace {

using cplx = std::complex<double>;

struct Legendre {
  double p;       // P_n(x)
  double p_prev;  // P_{n-1}(x)
};

Legendre legendre(int n, double x) {
  double p_prev = 1.0;
  double p = x;
  if (n == 0) return {1.0, 0.0};
  for (int j = 2; j <= n; ++j) {
    const double next = ((2.0 * j - 1.0) * x * p - (j - 1.0) * p_prev) / j;
    p_prev = p;
    p = next;
  }
  return {p, p_prev};
}

// Barycentric evaluation of the nodal polynomial with values f at xi.
template <class Vec>
cplx barycentric(const std::vector<double>& nodes, const std::vector<double>& w, const Vec& f,
                 int offset, double xi) {
  cplx num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double diff = xi - nodes[j];
    if (diff == 0.0) return f[offset + static_cast<int>(j)];
    const double t = w[j] / diff;
    num += t * f[offset + static_cast<int>(j)];
    den += t;
  }
  return num / den;
}

}  // namespace

Quadrature gauss_legendre(int n) {
  if (n < 1 || n > kMaxGaussPoints) {
    throw CapacityError("gauss_legendre supports 1 to 2048 points, got " + std::to_string(n));
  }
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const Legendre l = legendre(n, x);
      dp = n * (x * l.p - l.p_prev) / (x * x - 1.0);
      const double dx = l.p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const Legendre l = legendre(n, x);
    dp = n * (x * l.p - l.p_prev) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    q.weights[i] = q.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  return q;
}

Quadrature gauss_lobatto(int n) {
  if (n < 1 || n > kMaxGaussPoints) {
    throw CapacityError("gauss_lobatto supports degree 1 to 2048, got " + std::to_string(n));
  }
  Quadrature q;
  q.nodes.resize(n + 1);
  q.weights.resize(n + 1);
  const double pi = std::numbers::pi;
  for (int i = 0; i <= n; ++i) {
    double x = -std::cos(pi * i / n);
    if (i > 0 && i < n) {
      // Newton on (1 - x²) P_n'(x), written through P_n and P_{n-1}.
      for (int it = 0; it < 100; ++it) {
        const Legendre l = legendre(n, x);
        const double dx = (x * l.p - l.p_prev) / ((n + 1) * l.p);
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
    }
    const Legendre l = legendre(n, x);
    q.nodes[i] = x;
    q.weights[i] = 2.0 / (n * (n + 1.0) * l.p * l.p);
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    const double x = 0.5 * (q.nodes[n - i] - q.nodes[i]);
    q.nodes[i] = -x;
    q.nodes[n - i] = x;
    q.weights[i] = q.weights[n - i] = 0.5 * (q.weights[i] + q.weights[n - i]);
  }
  if (n % 2 == 0) q.nodes[n / 2] = 0.0;
  return q;
}

std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> w(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) w[j] /= (nodes[j] - nodes[k]);
    }
  }
  const double scale = *std::max_element(w.begin(), w.end(),
                                         [](double x, double y) { return std::abs(x) < std::abs(y); });
  for (double& v : w) v /= std::abs(scale);
  return w;
}

Eigen::MatrixXd lagrange_table(const std::vector<double>& nodes, const std::vector<double>& x) {
  const std::vector<double> w = barycentric_weights(nodes);
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), n);
  for (std::size_t q = 0; q < x.size(); ++q) {
    double den = 0.0;
    int hit = -1;
    for (int j = 0; j < n; ++j) {
      const double diff = x[q] - nodes[j];
      if (diff == 0.0) {
        hit = j;
        break;
      }
      out(q, j) = w[j] / diff;
      den += out(q, j);
    }
    if (hit >= 0) {
      out.row(q).setZero();
      out(q, hit) = 1.0;
    } else {
      out.row(q) /= den;
    }
  }
  return out;
}

Eigen::MatrixXd differentiation_matrix(const std::vector<double>& nodes) {
  const std::vector<double> w = barycentric_weights(nodes);
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      d(i, j) = (w[j] / w[i]) / (nodes[i] - nodes[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

int RadialMesh::default_quadrature(int N1, int N2) { return 2 * std::max(N1, N2) + 16; }

int RadialMesh::effective_quadrature() const {
  return quadrature_order > 0 ? quadrature_order : default_quadrature(N1, N2);
}

std::vector<ElementSpan> RadialMesh::elements() const {
  std::vector<ElementSpan> out{{R, a, N1, 0, false}};
  double lo = a;
  int offset = N1;
  for (std::size_t i = 0; i <= layer_breaks.size(); ++i) {
    const double hi = i < layer_breaks.size() ? layer_breaks[i] : b;
    out.push_back({lo, hi, N2, offset, true});
    lo = hi;
    offset += N2;
  }
  return out;
}

void RadialMesh::validate() const {
  if (!(R > 0.0 && R < a && a < b) || !std::isfinite(b)) {
    throw DomainError("radial mesh needs 0 < R < a < b");
  }
  if (N1 < 1 || N2 < 1 || N1 > kMaxGaussPoints || N2 > kMaxGaussPoints) {
    throw CapacityError("element degrees must lie in [1, 2048]");
  }
  double prev = a;
  for (double r : layer_breaks) {
    if (!(r > prev && r < b)) throw DomainError("layer breakpoints must increase strictly inside (a, b)");
    prev = r;
  }
  const int q = effective_quadrature();
  if (q < default_quadrature(N1, N2) || q > kMaxGaussPoints) {
    throw DomainError("quadrature order must lie in [2 max(N1, N2) + 16, 2048], got " +
                      std::to_string(q));
  }
}

std::vector<double> RadialMesh::nodes() const {
  std::vector<double> out(size());
  for (const ElementSpan& e : elements()) {
    const Quadrature gll = gauss_lobatto(e.degree);
    for (int j = 0; j <= e.degree; ++j) {
      out[e.offset + j] = 0.5 * (e.lo + e.hi) + 0.5 * (e.hi - e.lo) * gll.nodes[j];
    }
    out[e.offset] = e.lo;
  }
  out[N1] = a;
  out.front() = R;
  out.back() = b;
  return out;
}

ModeAssembler::ModeAssembler(const RadialMesh& mesh, const CircularMap& map, double k)
    : mesh_(mesh), map_(map), k_(k) {
  mesh_.validate();
  map_.validate();
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("wavenumber must be positive");
  if (map_.a != mesh_.a || map_.b != mesh_.b) {
    throw DomainError("mesh and map disagree on the interface or outer radius");
  }
  const int dim = mesh_.size();
  a0_ = Eigen::MatrixXcd::Zero(dim, dim);
  an_ = Eigen::MatrixXd::Zero(dim, dim);
  const Quadrature gauss = gauss_legendre(mesh_.effective_quadrature());
  const cplx ik(0.0, k);

  const Quadrature gll1 = gauss_lobatto(mesh_.N1);
  const Quadrature gll2 = gauss_lobatto(mesh_.N2);
  const Eigen::MatrixXd table1 = lagrange_table(gll1.nodes, gauss.nodes);
  const Eigen::MatrixXd table2 = lagrange_table(gll2.nodes, gauss.nodes);
  const Eigen::MatrixXd deriv1 = table1 * differentiation_matrix(gll1.nodes);
  const Eigen::MatrixXd deriv2 = table2 * differentiation_matrix(gll2.nodes);
  for (const ElementSpan& e : mesh_.elements()) {
    const bool layer = e.layer;
    const Eigen::MatrixXd& b = layer ? table2 : table1;
    const Eigen::MatrixXd db = (layer ? deriv2 : deriv1) * (2.0 / (e.hi - e.lo));

    const Eigen::Index nq = static_cast<Eigen::Index>(gauss.nodes.size());
    Eigen::VectorXd c11(nq), cn(nq);
    Eigen::VectorXcd c10(nq), c01(nq), c00(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
      // Offset from the element start keeps r - a accurate in thin layers.
      const double from_lo = 0.5 * (e.hi - e.lo) * (1.0 + gauss.nodes[q]);
      const double r = e.lo + from_lo;
      const double jw = 0.5 * (e.hi - e.lo) * gauss.weights[q];
      if (!layer) {
        c11[q] = jw;
        c10[q] = -jw / r;
        c01[q] = 0.0;
        c00[q] = -k * k * jw;
        cn[q] = jw / (r * r);
      } else {
        // 1/τ without forming τ, which overflows for large τ0 (b - a).
        const double inv_tau = std::exp(-map_.tau0 * ((e.lo - map_.a) + from_lo)) / map_.a;
        c11[q] = jw * inv_tau / map_.tau0;
        c10[q] = jw * (-inv_tau - ik);
        c01[q] = jw * ik;
        c00[q] = -jw * ik * map_.tau0;
        cn[q] = jw * map_.tau0 * inv_tau;
      }
      if (!std::isfinite(c11[q]) || !std::isfinite(cn[q]) || !std::isfinite(std::abs(c10[q]))) {
        throw NumericalError("non-finite radial coefficient at r = " + std::to_string(r));
      }
    }
    const Eigen::MatrixXcd bc = b.cast<cplx>();
    const Eigen::MatrixXcd dbc = db.cast<cplx>();
    const Eigen::MatrixXcd block = (db.transpose() * c11.asDiagonal() * db).cast<cplx>() +
                                   bc.transpose() * c10.asDiagonal() * dbc +
                                   dbc.transpose() * c01.asDiagonal() * bc +
                                   bc.transpose() * c00.asDiagonal() * bc;
    const Eigen::MatrixXd nblock = b.transpose() * cn.asDiagonal() * b;
    const int m = e.degree + 1;
    a0_.block(e.offset, e.offset, m, m) += block;
    an_.block(e.offset, e.offset, m, m) += nblock;
  }
}

ModeSystem ModeAssembler::system(int n, cplx value_at_R) const {
  ModeSystem s;
  s.mode = n;
  s.matrix = a0_;
  s.matrix += (static_cast<double>(n) * n) * an_.cast<cplx>();
  s.rhs = Eigen::VectorXcd::Zero(mesh_.size());
  s.value_at_R = value_at_R;
  s.value_at_b = 0.0;
  return s;
}

ModeSystem assemble_mode(const RadialMesh& mesh, const CircularMap& map, double k, int n,
                         cplx value_at_R) {
  return ModeAssembler(mesh, map, k).system(n, value_at_R);
}

ModeSolution solve_mode(const ModeSystem& system, const RadialMesh& mesh) {
  const Eigen::Index dim = system.matrix.rows();
  if (dim != mesh.size() || system.matrix.cols() != dim || system.rhs.size() != dim) {
    throw DomainError("mode system does not match the mesh");
  }
  const Eigen::Index m = dim - 2;
  const Eigen::MatrixXcd a = system.matrix.block(1, 1, m, m);
  const Eigen::VectorXcd f = system.rhs.segment(1, m) -
                             system.matrix.block(1, 0, m, 1) * system.value_at_R -
                             system.matrix.block(1, dim - 1, m, 1) * system.value_at_b;

  ModeSolution out;
  out.mode = system.mode;
  out.mesh = mesh;
  out.coefficients = Eigen::VectorXcd::Zero(dim);
  out.coefficients[0] = system.value_at_R;
  out.coefficients[dim - 1] = system.value_at_b;

  const double fnorm = f.norm();
  if (fnorm == 0.0) return out;

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  Eigen::VectorXcd v = lu.solve(f);
  double residual = (f - a * v).norm() / fnorm;
  for (int it = 0; it < 4 && std::isfinite(residual) && residual > 0.1 * kResidualContract; ++it) {
    v += lu.solve(f - a * v);
    residual = (f - a * v).norm() / fnorm;
  }
  if (!std::isfinite(residual) || !v.allFinite() || residual > kResidualContract) {
    throw NumericalError("mode " + std::to_string(system.mode) +
                         ": singular or ill-conditioned system, relative residual " +
                         std::to_string(residual));
  }
  out.coefficients.segment(1, m) = v;
  out.residual = residual;
  return out;
}

std::complex<double> interpolate(const RadialMesh& mesh, const Eigen::VectorXcd& nodal, double r) {
  return interpolate(mesh, nodal, std::vector<double>{r})[0];
}

Eigen::VectorXcd interpolate(const RadialMesh& mesh, const Eigen::VectorXcd& nodal,
                             const std::vector<double>& r) {
  if (nodal.size() != mesh.size()) throw DomainError("nodal vector does not match the mesh");
  const std::vector<ElementSpan> els = mesh.elements();
  const std::vector<double> ref1 = gauss_lobatto(mesh.N1).nodes;
  const std::vector<double> ref2 = gauss_lobatto(mesh.N2).nodes;
  const std::vector<double> bw1 = barycentric_weights(ref1);
  const std::vector<double> bw2 = barycentric_weights(ref2);
  Eigen::VectorXcd out(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = r[i];
    if (!(x >= mesh.R && x <= mesh.b)) {
      throw DomainError("radial evaluation outside [R, b] at r = " + std::to_string(x));
    }
    std::size_t e = 0;
    while (e + 1 < els.size() && x > els[e].hi) ++e;
    const ElementSpan& el = els[e];
    double xi = 2.0 * (x - el.lo) / (el.hi - el.lo) - 1.0;
    xi = std::clamp(xi, -1.0, 1.0);
    if (x == el.lo) xi = -1.0;
    if (x == el.hi) xi = 1.0;
    out[static_cast<Eigen::Index>(i)] = el.layer ? barycentric(ref2, bw2, nodal, el.offset, xi)
                                                 : barycentric(ref1, bw1, nodal, el.offset, xi);
  }
  return out;
}

std::complex<double> evaluate(const ModeSolution& solution, double r) {
  return interpolate(solution.mesh, solution.coefficients, r);
}

}  // namespace rcl::spectral1d
