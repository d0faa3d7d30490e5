#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rcl/errors.hpp"
#include "rcl/rect.hpp"
#include "rcl/specfun.hpp"

using namespace rcl;
using namespace rcl::rect;

namespace {

cplx omega(double k, const RectangularMap& map, double x, double y) {
  const double r = std::hypot(x, y), th = polar_angle(x, y);
  const double t = tau_rectangular(map, r, th, Region::layer).tau;
  return substitution_factor(t, a_of_theta(map, th).a, k, true);
}

cplx mapped_u(double k, const RectangularMap& map, double x, double y) {
  const double r = std::hypot(x, y), th = polar_angle(x, y);
  return specfun::hankel1(0, k * tau_rectangular(map, r, th, Region::layer).tau);
}

}  // namespace

TEST(Problem, ValidationNamesTheField) {
  RectProblem p;
  p.k = -1.0;
  try {
    p.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("k"), std::string::npos);
  }
  p = RectProblem{};
  p.N = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = RectProblem{};
  p.eps = 2.0;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_NO_THROW(RectProblem{}.validate());
}

TEST(Problem, DefaultMeshUsesTunedLayer) {
  RectProblem p;
  const auto s = p.mesh_spec();
  EXPECT_NEAR(p.map().tau0, 2.0 * std::log(1e12) / 0.3, 1e-10);
  EXPECT_NEAR(s.layer_grading, std::log(1e12) / 2.0, 1e-12);
  EXPECT_EQ(s.layer_length, 0.3);
  p.N = 2;
  EXPECT_NEAR(p.mesh_spec().layer_length, std::log(1e12) / 10.0, 1e-12);
  EXPECT_NEAR(p.mesh_spec().layer_grading, std::log(1e12) / 3.0, 1e-12);
}

TEST(Oracle, UIsTheHankelTrace) {
  EXPECT_THROW(oracle_u(10.0, 0.0, 0.0), DomainError);
  const cplx h = specfun::hankel1(0, 10.0 * 0.5);
  EXPECT_EQ(oracle_u(10.0, 0.3, 0.4), h);
  EXPECT_EQ(oracle_u(10.0, -0.4, 0.3), h);
}

TEST(Oracle, MappedValueOnTheAxis) {
  RectangularMap map{1.0, 1.0, 0.3, 0.3, 10.0};
  // τ(1.1, 0) = e, so u = H0(10 e).
  const cplx expected(0.04678477806657140439826, 0.1456954501941765991791524);
  const cplx u = oracle_v(10.0, map, 1.1, 0.0) * omega(10.0, map, 1.1, 0.0);
  EXPECT_NEAR(std::abs(u - expected), 0.0, 1e-14);
}

TEST(Oracle, VTimesOmegaIsUInTheLayer) {
  const RectangularMap map = RectProblem{}.map();
  const double k = 10.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-1.3, 1.3);
  int n = 0, resolved = 0;
  while (n < 1000) {
    const double x = pos(rng), y = pos(rng);
    if (std::max(std::abs(x), std::abs(y)) <= 1.0) continue;
    const cplx u = mapped_u(k, map, x, y);
    const cplx v = oracle_v(k, map, x, y);
    EXPECT_NEAR(std::abs(v), std::abs(u), 1e-13 * std::abs(u));
    // The phase k τ carries an absolute rounding error of a few ulps of k τ.
    const double kt = k * tau_rectangular(map, std::hypot(x, y), polar_angle(x, y), Region::layer).tau;
    const double phase_noise = 8.0 * kt * std::numeric_limits<double>::epsilon();
    if (phase_noise < 1e-13) ++resolved;
    EXPECT_LE(std::abs(v * omega(k, map, x, y) - u), (1e-13 + phase_noise) * std::abs(u));
    ++n;
  }
  EXPECT_GT(resolved, 0);
}

TEST(Oracle, VTimesOmegaIsUNearTheInterface) {
  const RectangularMap map = RectProblem{}.map();
  const double k = 10.0;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> side(-1.0, 1.0), depth(0.0, 0.01);
  for (int n = 0; n < 1000; ++n) {
    const double s = side(rng), t = 1.0 + depth(rng);
    double x = t, y = s;
    if (n % 4 == 1) std::swap(x, y);
    if (n % 4 == 2) x = -x;
    if (n % 4 == 3) (std::swap(x, y), y = -y);
    const cplx u = mapped_u(k, map, x, y);
    EXPECT_LE(std::abs(oracle_v(k, map, x, y) * omega(k, map, x, y) - u), 1e-13 * std::abs(u));
  }
}

TEST(Oracle, VEqualsUOnTheInterface) {
  const RectangularMap map = RectProblem{}.map();
  for (double s : {-1.0, -0.7, -0.2, 0.0, 0.35, 0.9, 1.0}) {
    for (auto [x, y] : {std::pair{1.0, s}, std::pair{s, 1.0}, std::pair{-1.0, s}, std::pair{s, -1.0}}) {
      const cplx u = oracle_u(25.0, x, y);
      EXPECT_NEAR(std::abs(oracle_v(25.0, map, x, y) - u), 0.0, 1e-13) << x << "," << y;
      EXPECT_NEAR(std::abs(reference_field(25.0, map, x, y) - u), 0.0, 1e-13);
    }
  }
}

TEST(Oracle, VRejectsPointsOutsideTheLayer) {
  const RectangularMap map = RectProblem{}.map();
  EXPECT_THROW(oracle_v(10.0, map, 0.5, 0.5), DomainError);
  EXPECT_THROW(oracle_v(10.0, map, 1.31, 0.0), DomainError);
  EXPECT_NO_THROW(oracle_v(10.0, map, 1.3, 1.3));
}

TEST(Oracle, VEnvelopeDecaysLikeInverseSquareRoot) {
  const RectangularMap map = RectProblem{}.map();
  const double k = 10.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double r = 1.0; r <= 1.3; r += 0.01) {
    const double t = tau_rectangular(map, r, 0.0, Region::layer).tau;
    const double lx = std::log(k * t), ly = std::log(std::abs(oracle_v(k, map, r, 0.0)));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -0.5, 1e-3);
}

TEST(Study, OrdersAreLogRatiosOfConsecutiveRows) {
  RectProblem p;
  p.N = 1;
  p.k = 10.0;
  const ErrorReport rep = convergence_study(p, {64, 128});
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& row : rep.rows) {
    ASSERT_EQ(row.status, "ok");
    EXPECT_LE(row.residual, fem::kResidualContract);
    EXPECT_GT(row.dofs, row.cells);
  }
  EXPECT_FALSE(rep.order(0, 0).has_value());
  EXPECT_DOUBLE_EQ(*rep.order(1, 2), std::log2(rep.rows[0].errors->v_re / rep.rows[1].errors->v_re));
  for (int c = 0; c < 4; ++c) EXPECT_GT(*rep.order(1, c), 1.5);
}

TEST(Study, QuadraticElementsGainMoreThanThreeOrders) {
  RectProblem p;
  p.N = 2;
  p.k = 10.0;
  const ErrorReport rep = convergence_study(p, {32, 64});
  for (int c = 0; c < 4; ++c) EXPECT_GT(*rep.order(1, c), 3.0);
}

TEST(Study, RowFailuresAreRecorded) {
  RectProblem p;
  StudyOptions opt;
  opt.memory_budget = estimated_memory(p) * 1.5;
  const ErrorReport rep = convergence_study(p, {4, 32, 64}, opt);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].status.rfind("failed: mesh: ", 0), 0u) << rep.rows[0].status;
  EXPECT_EQ(rep.rows[1].status, "ok");
  EXPECT_EQ(rep.rows[2].status, "skipped: memory");
  EXPECT_FALSE(rep.order(1, 0).has_value());
  EXPECT_FALSE(rep.order(2, 0).has_value());
  EXPECT_TRUE(convergence_study(p, {}).rows.empty());
}

TEST(Study, MemoryEstimateGrowsWithDegreeAndMesh) {
  RectProblem p;
  const double base = estimated_memory(p);
  p.m = 64;
  EXPECT_GT(estimated_memory(p), 3.0 * base);
  p.N = 4;
  EXPECT_GT(estimated_memory(p), 10.0 * base);
}

TEST(LShape, ExportSchemaAndOuterBoundary) {
  const nlohmann::json j = lshape_demo(10.0, 2, 32);
  for (const char* key : {"points", "re", "im", "region", "meta"}) ASSERT_TRUE(j.contains(key)) << key;
  const std::size_t n = j["points"].size();
  EXPECT_EQ(j["re"].size(), n);
  EXPECT_EQ(j["im"].size(), n);
  EXPECT_EQ(j["meta"]["scatterer"]["shape"], "lshape");
  EXPECT_LE(j["meta"]["residual"].get<double>(), fem::kResidualContract);
  int outer = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = j["points"][i][0], y = j["points"][i][1];
    if (std::abs(std::max(std::abs(x), std::abs(y)) - 1.3) < 1e-12) {
      ++outer;
      EXPECT_EQ(j["re"][i].get<double>(), 0.0);
      EXPECT_EQ(j["im"][i].get<double>(), 0.0);
    }
  }
  RectProblem p;
  p.N = 2;
  p.scatterer = default_lshape();
  long edges = 0;
  for (const auto& e : fem::build_mesh(p.mesh_spec()).boundary) edges += e.tag == fem::BoundaryTag::outer;
  EXPECT_EQ(outer, 2 * edges);  // Q2: one vertex and one edge node per outer edge
}

TEST(LShape, ReentrantCornerCarriesTheTrace) {
  RectProblem p;
  p.N = 2;
  p.scatterer = default_lshape();
  p.source_x = p.source_y = -0.2;
  const RectRun r = run(p);
  EXPECT_THROW(errors(r), DomainError);
  const auto& nodes = r.space->nodes();
  bool found = false;
  for (int i = 0; i < r.space->size(); ++i) {
    if (nodes[i].x() == 0.2 && nodes[i].y() == 0.0) {
      found = true;
      EXPECT_NEAR(std::abs(r.nodal(i) - oracle_u(p.k, 0.4, 0.2)), 0.0, 1e-15);
    }
  }
  EXPECT_TRUE(found);
}

TEST(LShape, FullCutMatchesTheSquare) {
  fem::LShapeScatterer full{0.8, 0.4, 0.4};
  const nlohmann::json l = lshape_demo(10.0, 2, 32, full);
  RectProblem p;
  p.N = 2;
  const RectRun sq = run(p);
  ASSERT_EQ(l["re"].size(), static_cast<std::size_t>(sq.space->size()));
  double diff = 0.0, norm = 0.0;
  for (int i = 0; i < sq.space->size(); ++i) {
    const cplx a(l["re"][i].get<double>(), l["im"][i].get<double>());
    diff = std::max(diff, std::abs(a - sq.nodal(i)));
    norm = std::max(norm, std::abs(sq.nodal(i)));
  }
  EXPECT_LE(diff, 1e-10 * norm);
}

TEST(LShape, SourceSitsInsideTheScatterer) {
  const auto s = lshape_source(default_lshape());
  EXPECT_DOUBLE_EQ(s[0], -0.2);
  EXPECT_DOUBLE_EQ(s[1], -0.2);
  const auto full = lshape_source({0.8, 0.4, 0.4});
  EXPECT_EQ(full[0], 0.0);
  EXPECT_EQ(full[1], 0.0);
  RectProblem p;
  p.scatterer = default_lshape();
  EXPECT_THROW(p.validate(), ConfigError);  // origin is the re-entrant corner
  p.source_x = p.source_y = -0.2;
  EXPECT_NO_THROW(p.validate());
  p.source_x = 0.2;
  p.source_y = 0.2;
  EXPECT_THROW(p.validate(), ConfigError);
}
