#include "rcl/fem2d.hpp"

#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <cmath>
#include <map>
#include <new>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>

#include "rcl/errors.hpp"
#include "rcl/spectral1d.hpp"

namespace rcl::fem {

namespace {

struct SquareBox {
  double half;
  double cut_x;
  double cut_y;
};

SquareBox box_of(const Scatterer& s) {
  if (const auto* sq = std::get_if<SquareScatterer>(&s)) {
    return {0.5 * sq->width, 0.5 * sq->width, 0.5 * sq->width};
  }
  const auto& l = std::get<LShapeScatterer>(s);
  return {0.5 * l.width, l.cut_x, l.cut_y};
}

void dedupe(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

/// Largest-remainder split of `cells` over the segments between breakpoints;
/// ties go to the lower index.
std::vector<int> allocate(const std::vector<double>& breaks, int cells) {
  const std::size_t n = breaks.size() - 1;
  const double total = breaks.back() - breaks.front();
  std::vector<int> out(n);
  std::vector<std::pair<double, std::size_t>> rem(n);
  int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ideal = cells * (breaks[i + 1] - breaks[i]) / total;
    out[i] = static_cast<int>(std::floor(ideal));
    used += out[i];
    rem[i] = {ideal - out[i], i};
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (int i = 0; used < cells; ++i, ++used) {
    ++out[rem[i].second];
  }
  return out;
}

struct Layout {
  int layer = 0;
  std::vector<double> x_breaks, y_breaks;
  std::vector<int> x_cells, y_cells;
};

Layout layout(const MeshSpec& s) {
  if (!(s.L1 > 0 && s.L2 > 0 && s.d1 > 0 && s.d2 > 0) || s.m < 1) {
    throw GeometryError("build_mesh: L1, L2, d1, d2 and m must be positive");
  }
  if (!(s.layer_grading >= 0.0) || !std::isfinite(s.layer_grading)) {
    throw GeometryError("build_mesh: layer grading must be finite and non-negative");
  }
  const double t1 = s.d1 / s.L1, t2 = s.d2 / s.L2;
  if (std::abs(t1 - t2) > 1e-12 * std::max(t1, t2)) {
    throw GeometryError("build_mesh: the ray-aligned layer requires d1/L1 == d2/L2");
  }
  const SquareBox b = box_of(s.scatterer);
  if (!(b.half > 0) || !(b.half < s.L1) || !(b.half < s.L2)) {
    throw GeometryError("build_mesh: scatterer must lie strictly inside the inner rectangle");
  }
  if (!(b.cut_x > -b.half && b.cut_x <= b.half && b.cut_y > -b.half && b.cut_y <= b.half)) {
    throw GeometryError("build_mesh: L-shape cut must lie in (-w/2, w/2]");
  }
  Layout out;
  if (!(s.layer_length >= 0.0) || !std::isfinite(s.layer_length)) {
    throw GeometryError("build_mesh: layer length must be finite and non-negative");
  }
  const double band = s.layer_length > 0.0 ? s.layer_length : s.d1;
  out.layer = static_cast<int>(std::lround(s.m * band / (2.0 * (s.L1 + band))));
  if (out.layer < 2) {
    throw GeometryError("build_mesh: m = " + std::to_string(s.m) + " gives fewer than 2 cells across the layer");
  }
  const int inner = s.m - 2 * out.layer;
  out.x_breaks = {-s.L1, -b.half, 0.0, b.cut_x, b.half, s.L1};
  out.y_breaks = {-s.L2, -b.half, 0.0, b.cut_y, b.half, s.L2};
  dedupe(out.x_breaks);
  dedupe(out.y_breaks);
  out.x_cells = allocate(out.x_breaks, inner);
  out.y_cells = allocate(out.y_breaks, inner);
  for (int c : out.x_cells) {
    if (c < 2) throw GeometryError("build_mesh: m = " + std::to_string(s.m) + " gives a band with fewer than 2 cells");
  }
  for (int c : out.y_cells) {
    if (c < 2) throw GeometryError("build_mesh: m = " + std::to_string(s.m) + " gives a band with fewer than 2 cells");
  }
  return out;
}

std::vector<double> grid_lines(const std::vector<double>& breaks, const std::vector<int>& cells) {
  std::vector<double> lines{breaks.front()};
  for (std::size_t s = 0; s < cells.size(); ++s) {
    const double lo = breaks[s], hi = breaks[s + 1];
    for (int i = 1; i < cells[s]; ++i) {
      lines.push_back(lo + (hi - lo) * i / cells[s]);
    }
    lines.push_back(hi);
  }
  return lines;
}

long cells_between(const std::vector<double>& breaks, const std::vector<int>& cells, double lo, double hi) {
  long n = 0;
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (breaks[s] >= lo && breaks[s + 1] <= hi) n += cells[s];
  }
  return n;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

constexpr int kEdgeCorners[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};

double shoelace(const Mesh& m, const std::array<int, 4>& v) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& p = m.vertices[v[i]];
    const auto& q = m.vertices[v[(i + 1) % 4]];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

double depth_fraction(double G, double t) {
  if (G == 0.0 || t >= 1.0) return std::min(t, 1.0);
  return -std::log1p(-t * -std::expm1(-G)) / G;
}

}  // namespace

double balanced_layer_length(const RectangularMap& map, double k) {
  if (!(k > 0.0)) throw DomainError("balanced_layer_length: k must be positive");
  return 0.5 * map.tau0 * std::min(map.d1, map.d2) / k;
}

double equidistributed_grading(const RectangularMap& map, int degree) {
  if (degree < 1) throw DomainError("equidistributed_grading: degree must be positive");
  return 0.5 * map.tau0 * std::min(map.d1, map.d2) / (degree + 1);
}

bool scatterer_contains(const Scatterer& s, double x, double y) {
  const SquareBox b = box_of(s);
  if (!(std::abs(x) < b.half && std::abs(y) < b.half)) return false;
  return !(x >= b.cut_x && y >= b.cut_y);
}

double Mesh::cell_area(int c) const { return shoelace(*this, cells[c].v); }

double Mesh::region_area(RegionTag t) const {
  double s = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].region == t) s += cell_area(static_cast<int>(c));
  }
  return s;
}

long expected_cell_count(const MeshSpec& spec) {
  const Layout l = layout(spec);
  const SquareBox b = box_of(spec.scatterer);
  const long nx = spec.m - 2 * l.layer, ny = nx;
  long hole = cells_between(l.x_breaks, l.x_cells, -b.half, b.half) *
              cells_between(l.y_breaks, l.y_cells, -b.half, b.half);
  hole -= cells_between(l.x_breaks, l.x_cells, b.cut_x, b.half) *
          cells_between(l.y_breaks, l.y_cells, b.cut_y, b.half);
  return nx * ny - hole + 2L * l.layer * (nx + ny);
}

Mesh build_mesh(const MeshSpec& spec) {
  const Layout l = layout(spec);
  Mesh mesh;
  mesh.spec = spec;
  mesh.layer_cells = l.layer;
  mesh.x_lines = grid_lines(l.x_breaks, l.x_cells);
  mesh.y_lines = grid_lines(l.y_breaks, l.y_cells);
  const int nx = static_cast<int>(mesh.x_lines.size()) - 1;
  const int ny = static_cast<int>(mesh.y_lines.size()) - 1;

  std::vector<int> grid(static_cast<std::size_t>(nx + 1) * (ny + 1), -1);
  auto vertex = [&](int i, int j) {
    int& id = grid[i + (nx + 1) * j];
    if (id < 0) {
      id = static_cast<int>(mesh.vertices.size());
      mesh.vertices.emplace_back(mesh.x_lines[i], mesh.y_lines[j]);
    }
    return id;
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = 0.5 * (mesh.x_lines[i] + mesh.x_lines[i + 1]);
      const double cy = 0.5 * (mesh.y_lines[j] + mesh.y_lines[j + 1]);
      if (scatterer_contains(spec.scatterer, cx, cy)) continue;
      mesh.cells.push_back({{vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)},
                            RegionTag::inner});
    }
  }

  // Counter-clockwise loop over the inner rectangle's boundary vertices.
  std::vector<int> loop;
  for (int i = 0; i < nx; ++i) loop.push_back(vertex(i, 0));
  for (int j = 0; j < ny; ++j) loop.push_back(vertex(nx, j));
  for (int i = nx; i > 0; --i) loop.push_back(vertex(i, ny));
  for (int j = ny; j > 0; --j) loop.push_back(vertex(0, j));
  const std::size_t B = loop.size();

  std::vector<std::vector<int>> ring(l.layer + 1);
  ring[0] = loop;
  std::vector<char> outer(mesh.vertices.size(), 0);
  for (int r = 1; r <= l.layer; ++r) {
    const double f = depth_fraction(spec.layer_grading, static_cast<double>(r) / l.layer);
    const double s1 = 1.0 + spec.d1 / spec.L1 * f;
    const double s2 = 1.0 + spec.d2 / spec.L2 * f;
    for (std::size_t p = 0; p < B; ++p) {
      const Eigen::Vector2d P = mesh.vertices[loop[p]];
      Eigen::Vector2d q(P.x() * s1, P.y() * s2);
      if (r == l.layer) {
        if (std::abs(P.x()) == spec.L1) q.x() = std::copysign(spec.L1 + spec.d1, P.x());
        if (std::abs(P.y()) == spec.L2) q.y() = std::copysign(spec.L2 + spec.d2, P.y());
      }
      ring[r].push_back(static_cast<int>(mesh.vertices.size()));
      mesh.vertices.push_back(q);
      outer.push_back(r == l.layer);
    }
  }
  for (int r = 0; r < l.layer; ++r) {
    for (std::size_t p = 0; p < B; ++p) {
      const std::size_t q = (p + 1) % B;
      mesh.cells.push_back({{ring[r][p], ring[r + 1][p], ring[r + 1][q], ring[r][q]}, RegionTag::layer});
    }
  }

  struct EdgeUse {
    int count = 0;
    int cell = -1;
    int local = -1;
  };
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(mesh.cells.size() * 2);
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    if (!(shoelace(mesh, mesh.cells[c].v) > 0.0)) {
      throw GeometryError("build_mesh: cell " + std::to_string(c) + " is not counter-clockwise");
    }
    for (int e = 0; e < 4; ++e) {
      auto& u = edges[edge_key(mesh.cells[c].v[kEdgeCorners[e][0]], mesh.cells[c].v[kEdgeCorners[e][1]])];
      ++u.count;
      u.cell = static_cast<int>(c);
      u.local = e;
    }
  }
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (int e = 0; e < 4; ++e) {
      const int a = mesh.cells[c].v[kEdgeCorners[e][0]], b = mesh.cells[c].v[kEdgeCorners[e][1]];
      const auto& u = edges.at(edge_key(a, b));
      if (u.count != 1) continue;
      const BoundaryTag tag = outer[a] && outer[b] ? BoundaryTag::outer : BoundaryTag::scatterer;
      mesh.boundary.push_back({{a, b}, tag, static_cast<int>(c), e});
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------

Space::Space(std::shared_ptr<const Mesh> mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
  if (!mesh_) throw DomainError("Space: null mesh");
  if (degree < 1 || degree > 16) throw DomainError("Space: degree must be in [1, 16]");
  const int N = degree;
  const auto gll = spectral1d::gauss_lobatto(N);
  gll_ = Eigen::Map<const Eigen::VectorXd>(gll.nodes.data(), N + 1);
  const auto bw = spectral1d::barycentric_weights(gll.nodes);
  bary_ = Eigen::Map<const Eigen::VectorXd>(bw.data(), N + 1);

  const Mesh& m = *mesh_;
  const int nv = static_cast<int>(m.vertices.size());
  nodes_ = m.vertices;

  std::unordered_map<std::uint64_t, int> edge_id;
  edge_id.reserve(m.cells.size() * 2);
  std::vector<std::array<int, 4>> cell_edges(m.cells.size());
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    for (int e = 0; e < 4; ++e) {
      const auto key = edge_key(m.cells[c].v[kEdgeCorners[e][0]], m.cells[c].v[kEdgeCorners[e][1]]);
      auto [it, fresh] = edge_id.try_emplace(key, static_cast<int>(edge_id.size()));
      cell_edges[c][e] = it->second;
      (void)fresh;
    }
  }
  const int ne = static_cast<int>(edge_id.size());
  const int per_edge = N - 1, per_cell = (N - 1) * (N - 1);
  skeleton_size_ = nv + ne * per_edge;
  const int total = skeleton_size_ + static_cast<int>(m.cells.size()) * per_cell;
  nodes_.resize(total);
  std::vector<char> placed(total, 0);
  std::fill(placed.begin(), placed.begin() + nv, 1);

  const int n1 = N + 1;
  cell_dofs_.assign(m.cells.size(), std::vector<int>(n1 * n1, -1));
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    auto& d = cell_dofs_[c];
    const auto& v = m.cells[c].v;
    d[0] = v[0];
    d[N] = v[1];
    d[N + n1 * N] = v[2];
    d[n1 * N] = v[3];
    for (int e = 0; e < 4; ++e) {
      const int a = v[kEdgeCorners[e][0]], b = v[kEdgeCorners[e][1]];
      const int base = nv + cell_edges[c][e] * per_edge;
      for (int t = 1; t < N; ++t) {
        const int g = base + (a < b ? t - 1 : N - 1 - t);
        int i = 0, j = 0;
        switch (e) {
          case 0: i = t; j = 0; break;
          case 1: i = N; j = t; break;
          case 2: i = t; j = N; break;
          default: i = 0; j = t; break;
        }
        d[i + n1 * j] = g;
      }
    }
    const int base = skeleton_size_ + static_cast<int>(c) * per_cell;
    for (int j = 1; j < N; ++j) {
      for (int i = 1; i < N; ++i) d[i + n1 * j] = base + (i - 1) + (N - 1) * (j - 1);
    }
    for (int j = 0; j <= N; ++j) {
      for (int i = 0; i <= N; ++i) {
        const int g = d[i + n1 * j];
        if (!placed[g]) {
          nodes_[g] = map_point(static_cast<int>(c), gll_(i), gll_(j));
          placed[g] = 1;
        }
      }
    }
  }

  node_region_.assign(total, RegionTag::layer);
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    if (m.cells[c].region != RegionTag::inner) continue;
    for (int g : cell_dofs_[c]) node_region_[g] = RegionTag::inner;
  }
  node_boundary_.assign(total, -1);
  for (const auto& be : m.boundary) {
    const auto& d = cell_dofs_[be.cell];
    for (int t = 0; t <= N; ++t) {
      int i = 0, j = 0;
      switch (be.local_edge) {
        case 0: i = t; j = 0; break;
        case 1: i = N; j = t; break;
        case 2: i = t; j = N; break;
        default: i = 0; j = t; break;
      }
      node_boundary_[d[i + n1 * j]] = static_cast<signed char>(be.tag);
    }
  }
}

Eigen::Vector2d Space::map_point(int cell, double xi, double eta) const {
  const auto& v = mesh_->cells[cell].v;
  const auto& P = mesh_->vertices;
  return 0.25 * ((1 - xi) * (1 - eta) * P[v[0]] + (1 + xi) * (1 - eta) * P[v[1]] +
                 (1 + xi) * (1 + eta) * P[v[2]] + (1 - xi) * (1 + eta) * P[v[3]]);
}

namespace {

Eigen::VectorXd lagrange_values(const Eigen::VectorXd& nodes, const Eigen::VectorXd& bary, double x) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (x == nodes(i)) {
      out(i) = 1.0;
      return out;
    }
  }
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    out(i) = bary(i) / (x - nodes(i));
    denom += out(i);
  }
  return out / denom;
}

}  // namespace

cplx Space::evaluate(const Eigen::VectorXcd& nodal, int cell, double xi, double eta) const {
  const Eigen::VectorXd lx = lagrange_values(gll_, bary_, xi);
  const Eigen::VectorXd ly = lagrange_values(gll_, bary_, eta);
  const int n1 = degree_ + 1;
  const auto& d = cell_dofs_[cell];
  cplx s = 0.0;
  for (int j = 0; j < n1; ++j) {
    cplx row = 0.0;
    for (int i = 0; i < n1; ++i) row += lx(i) * nodal(d[i + n1 * j]);
    s += ly(j) * row;
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

/// Tensor tables at Gauss points; row q = a + Q b, column n = i + (N+1) j.
struct Reference {
  int N = 1;
  int Q = 1;
  Eigen::VectorXd xi, eta, weight;
  Eigen::MatrixXd phi, dxi, deta;
  Eigen::MatrixXd kxx, kyy, mass;  // reference stiffness pieces and mass

  Reference(int degree, int points) : N(degree), Q(points) {
    const auto gll = spectral1d::gauss_lobatto(N);
    const auto gl = spectral1d::gauss_legendre(Q);
    const Eigen::MatrixXd B = spectral1d::lagrange_table(gll.nodes, gl.nodes);
    const Eigen::MatrixXd dB = B * spectral1d::differentiation_matrix(gll.nodes);
    const int n1 = N + 1, nq = Q * Q, nb = n1 * n1;
    xi.resize(nq);
    eta.resize(nq);
    weight.resize(nq);
    phi.resize(nq, nb);
    dxi.resize(nq, nb);
    deta.resize(nq, nb);
    for (int b = 0; b < Q; ++b) {
      for (int a = 0; a < Q; ++a) {
        const int q = a + Q * b;
        xi(q) = gl.nodes[a];
        eta(q) = gl.nodes[b];
        weight(q) = gl.weights[a] * gl.weights[b];
        for (int j = 0; j < n1; ++j) {
          for (int i = 0; i < n1; ++i) {
            const int n = i + n1 * j;
            phi(q, n) = B(a, i) * B(b, j);
            dxi(q, n) = dB(a, i) * B(b, j);
            deta(q, n) = B(a, i) * dB(b, j);
          }
        }
      }
    }
    kxx = dxi.transpose() * weight.asDiagonal() * dxi;
    kyy = deta.transpose() * weight.asDiagonal() * deta;
    mass = phi.transpose() * weight.asDiagonal() * phi;
  }
};

int quadrature_points(const Space& space, const AssemblyOptions& o) {
  const int q = o.quadrature_points > 0 ? o.quadrature_points : space.degree() + 6;
  if (q > spectral1d::kMaxGaussPoints) throw CapacityError("fem: too many quadrature points");
  return q;
}

void check_map(const Mesh& mesh, const RectangularMap& map) {
  map.validate();
  const auto& s = mesh.spec;
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)); };
  if (!same(s.L1, map.L1) || !same(s.L2, map.L2) || !same(s.d1, map.d1) || !same(s.d2, map.d2)) {
    throw GeometryError("fem: map rectangle does not match the mesh");
  }
}

bool axis_rectangle(const Mesh& mesh, const Cell& c, double& hx, double& hy) {
  const auto& P = mesh.vertices;
  const auto &p0 = P[c.v[0]], &p1 = P[c.v[1]], &p2 = P[c.v[2]], &p3 = P[c.v[3]];
  if (p0.y() != p1.y() || p3.y() != p2.y() || p0.x() != p3.x() || p1.x() != p2.x()) return false;
  hx = p1.x() - p0.x();
  hy = p3.y() - p0.y();
  return true;
}

struct Bilinear {
  Eigen::Vector2d x;
  Eigen::Matrix2d jac;  // columns: d/dxi, d/deta
};

Bilinear bilinear(const Mesh& mesh, const Cell& c, double xi, double eta) {
  const auto& P = mesh.vertices;
  const Eigen::Vector2d &p0 = P[c.v[0]], &p1 = P[c.v[1]], &p2 = P[c.v[2]], &p3 = P[c.v[3]];
  Bilinear out;
  out.x = 0.25 * ((1 - xi) * (1 - eta) * p0 + (1 + xi) * (1 - eta) * p1 + (1 + xi) * (1 + eta) * p2 +
                  (1 - xi) * (1 + eta) * p3);
  out.jac.col(0) = 0.25 * ((1 - eta) * (p1 - p0) + (1 + eta) * (p2 - p3));
  out.jac.col(1) = 0.25 * ((1 - xi) * (p3 - p0) + (1 + xi) * (p2 - p1));
  return out;
}

Eigen::MatrixXcd general_cell_matrix(const Mesh& mesh, const Reference& ref, const RectangularMap& map,
                                     double k, int cell) {
  const Cell& c = mesh.cells[cell];
  const int nq = static_cast<int>(ref.weight.size());
  const int nb = static_cast<int>(ref.phi.cols());
  Eigen::MatrixXd L(3 * nq, nb);
  Eigen::MatrixXcd T(3 * nq, nb);
  const Region side = c.region == RegionTag::layer ? Region::layer : Region::inner;
  for (int q = 0; q < nq; ++q) {
    const Bilinear g = bilinear(mesh, c, ref.xi(q), ref.eta(q));
    const double det = g.jac.determinant();
    const Eigen::Matrix2d jinv = g.jac.inverse();
    const auto gx = jinv(0, 0) * ref.dxi.row(q) + jinv(1, 0) * ref.deta.row(q);
    const auto gy = jinv(0, 1) * ref.dxi.row(q) + jinv(1, 1) * ref.deta.row(q);
    L.row(q) = gx;
    L.row(nq + q) = gy;
    L.row(2 * nq + q) = ref.phi.row(q);

    FemCoefficients a;
    if (c.region == RegionTag::layer) {
      a = fem_alpha_coefficients(map, k, g.x.x(), g.x.y(), side);
    } else {
      a.alpha4 = -k * k;
    }
    const bool finite = a.alpha1.allFinite() && a.alpha2.allFinite() && a.alpha3.allFinite() &&
                        std::isfinite(a.alpha4.real()) && std::isfinite(a.alpha4.imag());
    if (!finite) {
      throw NumericalError("fem: non-finite coefficient in cell " + std::to_string(cell));
    }
    const double w = ref.weight(q) * det;
    T.row(q) = w * (a.alpha1(0, 0) * L.row(q) + a.alpha1(0, 1) * L.row(nq + q)).cast<cplx>() +
               (w * a.alpha3(0)) * L.row(2 * nq + q).cast<cplx>();
    T.row(nq + q) = w * (a.alpha1(1, 0) * L.row(q) + a.alpha1(1, 1) * L.row(nq + q)).cast<cplx>() +
                    (w * a.alpha3(1)) * L.row(2 * nq + q).cast<cplx>();
    T.row(2 * nq + q) = (w * a.alpha2(0)) * L.row(q).cast<cplx>() + (w * a.alpha2(1)) * L.row(nq + q).cast<cplx>() +
                        (w * a.alpha4) * L.row(2 * nq + q).cast<cplx>();
  }
  return L.transpose().cast<cplx>() * T;
}

Eigen::MatrixXcd rectangle_matrix(const Reference& ref, double k, double hx, double hy) {
  const Eigen::MatrixXd A = (hy / hx) * ref.kxx + (hx / hy) * ref.kyy - (k * k * hx * hy / 4.0) * ref.mass;
  return A.cast<cplx>();
}

/// Local indices split into skeleton (edges and corners) and interior.
struct Partition {
  std::vector<int> skeleton, interior;
  explicit Partition(int N) {
    const int n1 = N + 1;
    for (int j = 0; j <= N; ++j) {
      for (int i = 0; i <= N; ++i) {
        const bool edge = i == 0 || j == 0 || i == N || j == N;
        (edge ? skeleton : interior).push_back(i + n1 * j);
      }
    }
  }
};

struct Condensed {
  Eigen::MatrixXcd schur;
  std::shared_ptr<const Eigen::MatrixXcd> recovery;
};

Condensed condense(const Eigen::MatrixXcd& A, const Partition& p, int cell) {
  const int ns = static_cast<int>(p.skeleton.size()), ni = static_cast<int>(p.interior.size());
  Condensed out;
  out.schur.resize(ns, ns);
  for (int b = 0; b < ns; ++b) {
    for (int a = 0; a < ns; ++a) out.schur(a, b) = A(p.skeleton[a], p.skeleton[b]);
  }
  if (ni == 0) return out;
  Eigen::MatrixXcd Aii(ni, ni), Ais(ni, ns), Asi(ns, ni);
  for (int b = 0; b < ni; ++b) {
    for (int a = 0; a < ni; ++a) Aii(a, b) = A(p.interior[a], p.interior[b]);
    for (int a = 0; a < ns; ++a) Asi(a, b) = A(p.skeleton[a], p.interior[b]);
  }
  for (int b = 0; b < ns; ++b) {
    for (int a = 0; a < ni; ++a) Ais(a, b) = A(p.interior[a], p.skeleton[b]);
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(Aii);
  if (!lu.isInvertible() || lu.rcond() < 1e-13) {
    throw NumericalError("fem: singular interior block in cell " + std::to_string(cell));
  }
  auto X = std::make_shared<Eigen::MatrixXcd>(lu.solve(Ais));
  out.schur.noalias() -= Asi * (*X);
  out.recovery = std::move(X);
  return out;
}

struct BitsKey {
  std::uint64_t a, b;
  bool operator<(const BitsKey& o) const { return a < o.a || (a == o.a && b < o.b); }
};

BitsKey bits(double x, double y) {
  BitsKey k{};
  std::memcpy(&k.a, &x, sizeof x);
  std::memcpy(&k.b, &y, sizeof y);
  return k;
}

}  // namespace

Eigen::MatrixXcd cell_matrix(const Space& space, const RectangularMap& map, double k, int cell,
                             const AssemblyOptions& options) {
  check_map(space.mesh(), map);
  const Reference ref(space.degree(), quadrature_points(space, options));
  return general_cell_matrix(space.mesh(), ref, map, k, cell);
}

System assemble(std::shared_ptr<const Space> space_ptr, const RectangularMap& map, double k,
                const PointFunction& g, const AssemblyOptions& options) {
  if (!space_ptr) throw DomainError("assemble: null space");
  const Space& space = *space_ptr;
  const Mesh& mesh = space.mesh();
  check_map(mesh, map);
  if (!(k > 0) || !std::isfinite(k)) throw DomainError("assemble: k must be positive");
  const int N = space.degree();
  const Reference ref(N, quadrature_points(space, options));
  const Partition part(N);
  const int ns = static_cast<int>(part.skeleton.size());
  const int nsk = space.skeleton_size();

  System sys;
  sys.space = space_ptr;
  sys.prescribed = Eigen::VectorXcd::Zero(nsk);
  sys.free_index.assign(nsk, -1);
  const auto& tags = space.node_boundary();
  for (int i = 0; i < nsk; ++i) {
    if (tags[i] < 0) {
      sys.free_index[i] = static_cast<int>(sys.free_nodes.size());
      sys.free_nodes.push_back(i);
    } else if (tags[i] == static_cast<signed char>(BoundaryTag::scatterer)) {
      const auto& p = space.nodes()[i];
      sys.prescribed(i) = g(p.x(), p.y());
    }
  }
  const int nf = static_cast<int>(sys.free_nodes.size());
  sys.rhs = Eigen::VectorXcd::Zero(nf);

  try {
    // Column-compressed pattern over free skeleton nodes.
    std::vector<std::vector<int>> columns(nf);
    std::vector<int> loc(ns);
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      const auto& d = space.cell_dofs(static_cast<int>(c));
      for (int a = 0; a < ns; ++a) loc[a] = sys.free_index[d[part.skeleton[a]]];
      for (int b = 0; b < ns; ++b) {
        if (loc[b] < 0) continue;
        for (int a = 0; a < ns; ++a) {
          if (loc[a] >= 0) columns[loc[b]].push_back(loc[a]);
        }
      }
    }
    std::vector<int> outer(nf + 1, 0);
    for (int j = 0; j < nf; ++j) {
      auto& col = columns[j];
      std::sort(col.begin(), col.end());
      col.erase(std::unique(col.begin(), col.end()), col.end());
      outer[j + 1] = outer[j] + static_cast<int>(col.size());
    }
    std::vector<int> inner(outer[nf]);
    for (int j = 0; j < nf; ++j) {
      std::copy(columns[j].begin(), columns[j].end(), inner.begin() + outer[j]);
      std::vector<int>().swap(columns[j]);
    }
    std::vector<cplx> values(inner.size(), cplx(0.0));

    std::map<BitsKey, Condensed> cache;
    sys.recovery.resize(mesh.cells.size());
    for (std::size_t ci = 0; ci < mesh.cells.size(); ++ci) {
      const int c = static_cast<int>(ci);
      const Cell& cell = mesh.cells[ci];
      double hx = 0, hy = 0;
      Condensed local;
      const Condensed* use = nullptr;
      if (cell.region == RegionTag::inner && axis_rectangle(mesh, cell, hx, hy)) {
        const BitsKey key = bits(hx, hy);
        auto it = cache.find(key);
        if (it == cache.end()) {
          it = cache.emplace(key, condense(rectangle_matrix(ref, k, hx, hy), part, c)).first;
        }
        use = &it->second;
      } else {
        local = condense(general_cell_matrix(mesh, ref, map, k, c), part, c);
        use = &local;
      }
      sys.recovery[ci] = use->recovery;
      const auto& d = space.cell_dofs(c);
      for (int a = 0; a < ns; ++a) loc[a] = d[part.skeleton[a]];
      for (int b = 0; b < ns; ++b) {
        const int gb = loc[b];
        const int fb = sys.free_index[gb];
        if (fb < 0) {
          const cplx val = sys.prescribed(gb);
          if (val == cplx(0.0)) continue;
          for (int a = 0; a < ns; ++a) {
            const int fa = sys.free_index[loc[a]];
            if (fa >= 0) sys.rhs(fa) -= use->schur(a, b) * val;
          }
          continue;
        }
        const int* first = inner.data() + outer[fb];
        const int* last = inner.data() + outer[fb + 1];
        for (int a = 0; a < ns; ++a) {
          const int fa = sys.free_index[loc[a]];
          if (fa < 0) continue;
          const int* pos = std::lower_bound(first, last, fa);
          values[pos - inner.data()] += use->schur(a, b);
        }
      }
    }
    sys.matrix = Eigen::Map<const Eigen::SparseMatrix<cplx>>(nf, nf, static_cast<Eigen::Index>(inner.size()),
                                                             outer.data(), inner.data(), values.data());
  } catch (const std::bad_alloc&) {
    throw CapacityError("assemble: out of memory for " + std::to_string(nf) + " unknowns");
  }
  return sys;
}

SparseSolve solve_sparse(const Eigen::SparseMatrix<cplx>& A, const Eigen::VectorXcd& b) {
  const auto n = A.rows();
  if (A.cols() != n || b.size() != n) throw DomainError("solve_sparse: dimension mismatch");
  SparseSolve out;
  out.x = Eigen::VectorXcd::Zero(n);
  const double bnorm = b.norm();
  if (n == 0 || bnorm == 0.0) return out;
  try {
    Eigen::UmfPackLU<Eigen::SparseMatrix<cplx>> lu;
    lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      throw NumericalError("solve_sparse: factorization failed for " + std::to_string(n) + " unknowns");
    }
    Eigen::VectorXcd x = lu.solve(b);
    Eigen::VectorXcd r = b - A * x;
    double rel = r.norm() / bnorm;
    for (int it = 0; it < 3 && x.allFinite() && !(rel <= 1e-14); ++it) {
      const Eigen::VectorXcd y = x + lu.solve(r);
      const Eigen::VectorXcd ry = b - A * y;
      const double next = ry.norm() / bnorm;
      if (!(next < rel)) break;
      x = y;
      r = ry;
      rel = next;
    }
    if (!x.allFinite() || !(rel <= kResidualContract)) {
      throw NumericalError("solve_sparse: relative residual " + std::to_string(rel) + " for " +
                           std::to_string(n) + " unknowns exceeds the contract");
    }
    out.x = std::move(x);
    out.residual = rel;
  } catch (const std::bad_alloc&) {
    throw CapacityError("solve_sparse: out of memory for " + std::to_string(n) + " unknowns");
  }
  return out;
}

Solution solve(const System& sys) {
  if (!sys.space) throw DomainError("solve: system has no space");
  const Space& space = *sys.space;
  const int N = space.degree();
  const int nsk = space.skeleton_size();
  Solution out;
  out.nodal = Eigen::VectorXcd::Zero(space.size());
  out.nodal.head(nsk) = sys.prescribed;
  const SparseSolve s = solve_sparse(sys.matrix, sys.rhs);
  out.residual = s.residual;
  for (std::size_t i = 0; i < sys.free_nodes.size(); ++i) out.nodal(sys.free_nodes[i]) = s.x(static_cast<Eigen::Index>(i));
  if (N > 1) {
    const Partition part(N);
    const int ns = static_cast<int>(part.skeleton.size());
    Eigen::VectorXcd sk(ns);
    for (std::size_t c = 0; c < sys.recovery.size(); ++c) {
      const auto& d = space.cell_dofs(static_cast<int>(c));
      for (int a = 0; a < ns; ++a) sk(a) = out.nodal(d[part.skeleton[a]]);
      const Eigen::VectorXcd in = -(*sys.recovery[c]) * sk;
      for (std::size_t a = 0; a < part.interior.size(); ++a) out.nodal(d[part.interior[a]]) = in(a);
    }
  }
  return out;
}

Eigen::VectorXcd apply_operator(const Space& space, const RectangularMap& map, double k,
                                const Eigen::VectorXcd& nodal, const AssemblyOptions& options) {
  check_map(space.mesh(), map);
  if (nodal.size() != space.size()) throw DomainError("apply_operator: size mismatch");
  const Reference ref(space.degree(), quadrature_points(space, options));
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(space.size());
  const int nb = static_cast<int>(ref.phi.cols());
  Eigen::VectorXcd xe(nb);
  for (std::size_t c = 0; c < space.mesh().cells.size(); ++c) {
    const auto& d = space.cell_dofs(static_cast<int>(c));
    const Eigen::MatrixXcd A = general_cell_matrix(space.mesh(), ref, map, k, static_cast<int>(c));
    for (int n = 0; n < nb; ++n) xe(n) = nodal(d[n]);
    const Eigen::VectorXcd ye = A * xe;
    for (int n = 0; n < nb; ++n) y(d[n]) += ye(n);
  }
  for (int i = 0; i < space.size(); ++i) {
    if (space.node_boundary()[i] >= 0) y(i) = 0.0;
  }
  return y;
}

Eigen::VectorXcd interpolate(const Space& space, const PointFunction& f) {
  Eigen::VectorXcd out(space.size());
  for (int i = 0; i < space.size(); ++i) out(i) = f(space.nodes()[i].x(), space.nodes()[i].y());
  return out;
}

double l2_error(const Space& space, const Eigen::VectorXcd& nodal, const PointFunction& oracle,
                ErrorRegion region, Part part, int quadrature_points_per_dir) {
  if (nodal.size() != space.size()) throw DomainError("l2_error: size mismatch");
  AssemblyOptions o;
  o.quadrature_points = quadrature_points_per_dir;
  const Reference ref(space.degree(), quadrature_points(space, o));
  const Mesh& mesh = space.mesh();
  const int nq = static_cast<int>(ref.weight.size());
  const int nb = static_cast<int>(ref.phi.cols());
  Eigen::VectorXcd xe(nb);
  double sum = 0.0;
  for (std::size_t ci = 0; ci < mesh.cells.size(); ++ci) {
    const Cell& c = mesh.cells[ci];
    if (region == ErrorRegion::inner && c.region != RegionTag::inner) continue;
    if (region == ErrorRegion::layer && c.region != RegionTag::layer) continue;
    const auto& d = space.cell_dofs(static_cast<int>(ci));
    for (int n = 0; n < nb; ++n) xe(n) = nodal(d[n]);
    const Eigen::VectorXcd vh = ref.phi.cast<cplx>() * xe;
    for (int q = 0; q < nq; ++q) {
      const Bilinear g = bilinear(mesh, c, ref.xi(q), ref.eta(q));
      const cplx diff = vh(q) - oracle(g.x.x(), g.x.y());
      const double p = part == Part::real ? diff.real() : diff.imag();
      sum += ref.weight(q) * g.jac.determinant() * p * p;
    }
  }
  return std::sqrt(sum);
}

nlohmann::json export_field(const Space& space, const Eigen::VectorXcd& nodal) {
  if (nodal.size() != space.size()) throw DomainError("export_field: size mismatch");
  nlohmann::json points = nlohmann::json::array(), re = nlohmann::json::array(), im = nlohmann::json::array(),
                 region = nlohmann::json::array();
  for (int i = 0; i < space.size(); ++i) {
    points.push_back({space.nodes()[i].x(), space.nodes()[i].y()});
    re.push_back(nodal(i).real());
    im.push_back(nodal(i).imag());
    region.push_back(space.node_region()[i] == RegionTag::inner ? "inner" : "layer");
  }
  return {{"points", points}, {"re", re}, {"im", im}, {"region", region}};
}

}  // namespace rcl::fem
