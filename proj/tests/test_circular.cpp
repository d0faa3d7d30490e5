#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rcl/circular.hpp"
#include "rcl/errors.hpp"
#include "rcl/specfun.hpp"
#include "series_oracle.hpp"

namespace rcl::circular {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

CircularProblem table_one(double k, int N) {
  CircularProblem p;
  p.k = k;
  p.N1 = p.N2 = N;
  return p;
}

// One k = 50, N = 100 solve shared by the tests below.
const CircularSolution& reference_solution() {
  static const CircularSolution s = solve(table_one(50.0, 100));
  return s;
}

TEST(ModeCutoff, LooseThreshold) { EXPECT_LE(mode_cutoff(50.0, 0.5, 1.0), 1); }

TEST(ModeCutoff, FrozenValuesAgreeWithSeriesOracle) {
  // Frozen from a 40-digit scan of |J_n(kR)|.
  EXPECT_EQ(mode_cutoff(50.0, 0.5, 1e-12), 52);
  EXPECT_EQ(mode_cutoff(50.0, 0.5, 1e-13), 54);
  EXPECT_EQ(mode_cutoff(200.0, 0.5, 1e-13), 144);
  EXPECT_EQ(mode_cutoff(300.0, 0.5, 1e-12), 197);
  // Same definition evaluated with the 50-digit power series.
  int last = -1;
  for (int n = 0; n < 90; ++n) {
    if (std::abs(testing::series_j(n, 25.0)) > 1e-12) last = n;
  }
  EXPECT_EQ(mode_cutoff(50.0, 0.5, 1e-12), last + 1);
}

TEST(ModeCutoff, MonotoneInThreshold) {
  for (double kr : {0.7, 5.0, 25.0, 150.0}) {
    EXPECT_GE(mode_cutoff(kr, 1.0, 1e-13), mode_cutoff(kr, 1.0, 1e-12));
  }
}

TEST(ModeCutoff, Errors) {
  EXPECT_THROW(mode_cutoff(0.0, 0.5, 1e-12), DomainError);
  EXPECT_THROW(mode_cutoff(1e5, 1.0, 1e-12), CapacityError);
}

TEST(PlaneWave, DataIsMinusIncidentTrace) {
  const double k = 50.0, R = 0.5;
  const int M = mode_cutoff(k, R, 1e-14);
  const auto g = plane_wave_data(k, R, M);
  for (double theta : {0.0, 0.4, 2.0, kPi}) {
    cplx sum = 0.0;
    for (int n = -M; n <= M; ++n) sum += g[n + M] * std::polar(1.0, n * theta);
    EXPECT_LE(std::abs(sum + std::polar(1.0, k * R * std::cos(theta))), 1e-12) << theta;
  }
}

TEST(ExactSeries, TailConvergence) {
  const double k = 50.0, R = 0.5;
  const int M = mode_cutoff(k, R, 1e-12);
  for (double rho : {0.5, 0.8, 1.0, 3.0}) {
    const cplx a = exact_scattering_series(k, R, rho, 0.3, M);
    const cplx b = exact_scattering_series(k, R, rho, 0.3, 2 * M);
    EXPECT_LE(std::abs(a - b), 1e-11) << rho;
  }
}

TEST(ExactSeries, ReproducesDirichletDataOnScatterer) {
  const double k = 20.0, R = 0.5;
  const int M = mode_cutoff(k, R, 1e-12);
  const auto g = plane_wave_data(k, R, M);
  for (double theta : {0.0, 1.0, 2.5}) {
    cplx sum = 0.0;
    for (int n = -M; n <= M; ++n) sum += g[n + M] * std::polar(1.0, n * theta);
    EXPECT_LE(std::abs(exact_scattering_series(k, R, R, theta, M) - sum), 1e-13);
  }
}

TEST(ExactSeries, AgreesWithDirectHankelSum) {
  // Unscaled Hankel functions, no carrier cancellation.
  const double k = 10.0, R = 0.5, rho = 1.7, theta = 0.9;
  const int M = mode_cutoff(k, R, 1e-12);
  const auto g = plane_wave_data(k, R, M);
  cplx sum = 0.0;
  for (int n = -M; n <= M; ++n) {
    const int m = std::abs(n);
    sum += g[n + M] * specfun::hankel1(m, k * rho) / specfun::hankel1(m, k * R) *
           std::polar(1.0, n * theta);
  }
  EXPECT_LE(std::abs(exact_scattering_series(k, R, rho, theta, M) - sum), 1e-13);
}

TEST(ExactSeries, MappedReferenceRemovesCarrier) {
  CircularProblem p = table_one(30.0, 40);
  p = p.resolved();
  for (double r : {1.05, 1.2, 1.5}) {
    const double tau = tau_circular(p.map(), r);
    const cplx u = exact_scattering_series(p.k, p.R, tau, 0.6, p.M);
    const cplx v = exact_reference(p, r, 0.6);
    EXPECT_LE(std::abs(u * std::polar(1.0, -p.k * (tau - p.a)) - v), 1e-11 * (1.0 + std::abs(v)));
  }
  // Inner region: v is u itself.
  EXPECT_LE(std::abs(exact_reference(p, 0.8, 0.6) -
                     exact_scattering_series(p.k, p.R, 0.8, 0.6, p.M)),
            1e-13);
}

TEST(Problem, ResolvesParameterRules) {
  const CircularProblem p = table_one(50.0, 100).resolved();
  EXPECT_NEAR(p.tau0, std::log(1e24), 1e-12);
  EXPECT_EQ(p.M, 52);
  const spectral1d::RadialMesh mesh = p.mesh();
  ASSERT_EQ(mesh.layer_breaks.size(), 1u);
  EXPECT_NEAR(p.tau0 * (mesh.layer_breaks[0] - p.a), 7.0, 1e-12);
  EXPECT_EQ(mesh.size(), 100 + 2 * 50 + 1);
  CircularProblem bad = p;
  bad.b = 0.9;
  EXPECT_THROW(bad.resolved(), DomainError);
}

TEST(Solve, ZeroDataGivesZeroSolution) {
  const CircularProblem p = table_one(10.0, 20).resolved();
  const CircularSolution s = solve(p, std::vector<cplx>(2 * p.M + 1, 0.0));
  for (const auto& m : s.modes) EXPECT_EQ(m.coefficients.norm(), 0.0);
}

TEST(Solve, ResidualsAndNegativeModes) {
  const CircularSolution& s = reference_solution();
  EXPECT_LE(s.max_residual, spectral1d::kResidualContract);
  const int M = s.problem.M;
  for (int n = 1; n <= M; ++n) {
    // Plane-wave data and operator are even in n; the two solves agree.
    EXPECT_LE((s.modes[M + n].coefficients - s.modes[M - n].coefficients).norm(),
              1e-12 * (1e-300 + s.modes[M + n].coefficients.norm()))
        << n;
  }
}

// Interpolant of the exact v̂₀ nearly satisfies the discrete equations.
TEST(Solve, ExactModeResidual) {
  const CircularProblem p = table_one(50.0, 100).resolved();
  const spectral1d::RadialMesh mesh = p.mesh();
  const spectral1d::ModeSystem sys = spectral1d::assemble_mode(mesh, p.map(), p.k, 0);
  const std::vector<double> nodes = mesh.nodes();
  Eigen::VectorXcd v(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) v[i] = exact_modes(p, nodes[i])[p.M];
  const Eigen::Index m = mesh.size() - 2;
  const Eigen::VectorXcd r = (sys.matrix * v).segment(1, m);
  EXPECT_LE(r.norm(), 1e-8 * sys.matrix.norm() * v.norm());
}

TEST(Synthesize, RepresentationsAndReferencePoint) {
  const CircularSolution& s = reference_solution();
  for (double r : {0.6, 0.95}) {
    EXPECT_EQ(synthesize(s, r, 0.4, Representation::u), synthesize(s, r, 0.4, Representation::v));
  }
  for (double r : {1.01, 1.3, 1.8}) {
    const cplx u = synthesize(s, r, 0.4, Representation::u);
    const cplx v = synthesize(s, r, 0.4, Representation::v);
    EXPECT_NEAR(std::abs(u), std::abs(v), 1e-15);
  }
  const cplx v = synthesize(s, 1.3, 0.0, Representation::v);
  EXPECT_LE(std::abs(v - exact_reference(s.problem, 1.3, 0.0)), 1e-9);
  EXPECT_THROW(synthesize(s, 0.4, 0.0, Representation::v), DomainError);
}

TEST(FarField, InterfaceValueAndExactSeries) {
  const CircularSolution& s = reference_solution();
  const CircularProblem& p = s.problem;
  EXPECT_LE(std::abs(far_field_recover(s, p.a, 0.3) - synthesize(s, p.a, 0.3, Representation::v)),
            1e-15);
  std::vector<double> rho;
  for (int i = 0; i < 50; ++i) rho.push_back(1.0 + 2.0 * i / 49.0);
  const auto u = far_field_recover(s, rho, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    worst = std::max(worst, std::abs(u[i] - exact_scattering_series(p.k, p.R, rho[i], 0.0, p.M)));
  }
  EXPECT_LE(worst, 1e-6);
  EXPECT_THROW(far_field_recover(s, 0.99, 0.0), DomainError);
}

TEST(FarField, DecayExponentOfExactAndRecoveredField) {
  const CircularSolution& s = reference_solution();
  const CircularProblem& p = s.problem;
  std::vector<double> rho;
  for (int i = 0; i < 200; ++i) rho.push_back(p.a * std::pow(10.0, i / 199.0));
  const double theta = kPi / 4.0;
  const auto u = far_field_recover(s, rho, theta);
  std::vector<cplx> exact;
  for (double r : rho) exact.push_back(exact_scattering_series(p.k, p.R, r, theta, p.M));
  EXPECT_NEAR(decay_exponent(rho, u), -0.5, 0.1);
  EXPECT_NEAR(decay_exponent(rho, u), decay_exponent(rho, exact), 1e-6);
}

TEST(DecayExponent, PowerLaw) {
  std::vector<double> rho;
  std::vector<cplx> v;
  for (int i = 1; i <= 30; ++i) {
    rho.push_back(i);
    v.push_back(std::polar(std::pow(i, -0.5), 3.0 * i));
  }
  EXPECT_NEAR(decay_exponent(rho, v), -0.5, 1e-12);
}

TEST(ErrorReport, SelfComparisonAndOrdering) {
  CircularProblem coarse = table_one(10.0, 12);
  CircularProblem fine = table_one(10.0, 30);
  ErrorOptions opt;
  opt.samples = 2000;
  opt.l2 = true;
  const ErrorReport rc = error_report(solve(coarse), opt);
  const ErrorReport rf = error_report(solve(fine), opt);
  ASSERT_EQ(rc.slices.size(), 2u);
  EXPECT_LT(rf.slices[0].u_re, rc.slices[0].u_re);
  EXPECT_LT(*rf.l2_u, *rc.l2_u);
  EXPECT_LT(*rf.l2_v, *rc.l2_v);

  // A solution carrying the exact nodal values has only interpolation error.
  CircularSolution exact = solve(fine);
  const std::vector<double> nodes = exact.problem.mesh().nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto modes = exact_modes(exact.problem, nodes[i]);
    for (std::size_t n = 0; n < modes.size(); ++n) exact.modes[n].coefficients[i] = modes[n];
  }
  const ErrorReport self = error_report(exact, opt);
  EXPECT_LE(self.slices[0].u_re, 1e-10);
}

// Total variation of v(·, 0) on the layer tracks that of the exact reference.
TEST(Layer, NoSpuriousOscillation) {
  const CircularSolution& s = reference_solution();
  const CircularProblem& p = s.problem;
  double tv_num = 0.0, tv_exact = 0.0;
  cplx prev_num = 0.0, prev_exact = 0.0;
  const Eigen::VectorXcd nodal = nodal_field(s, 0.0);
  for (int i = 0; i <= 4000; ++i) {
    const double r = p.a + (p.b - p.a) * i / 4000.0;
    const cplx num = spectral1d::interpolate(p.mesh(), nodal, r);
    const cplx ex = exact_reference(p, r, 0.0);
    if (i > 0) {
      tv_num += std::abs(num - prev_num);
      tv_exact += std::abs(ex - prev_exact);
    }
    prev_num = num;
    prev_exact = ex;
  }
  EXPECT_LE(tv_num, 3.0 * tv_exact);
  EXPECT_GE(tv_num, tv_exact / 3.0);
}

}  // namespace
}  // namespace rcl::circular
