#include "rcl/circular.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rcl/errors.hpp"
#include "rcl/specfun.hpp"

namespace rcl::circular {
namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// e^{inθ} for n = -M..M.
std::vector<cplx> fourier_row(int M, double theta) {
  std::vector<cplx> row(2 * M + 1);
  for (int n = -M; n <= M; ++n) row[n + M] = std::polar(1.0, n * theta);
  return row;
}

// Hₙ(kρ)/Hₙ(kR) e^{-ik(ρ - R)} for n = 0..M, free of the carrier phase.
std::vector<cplx> scaled_ratio(int M, double k, double R, double rho) {
  const auto num = specfun::hankel1_scaled_sequence(M, k * rho);
  const auto den = specfun::hankel1_scaled_sequence(M, k * R);
  std::vector<cplx> out(M + 1);
  for (int n = 0; n <= M; ++n) out[n] = num[n] / den[n];
  return out;
}

std::vector<double> uniform(double lo, double hi, int count) {
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = lo + (hi - lo) * i / (count - 1.0);
  r.back() = hi;
  return r;
}

}  // namespace

CircularProblem CircularProblem::resolved() const {
  CircularProblem p = *this;
  if (!(R > 0.0 && R < a && a < b)) throw DomainError("circular problem needs 0 < R < a < b");
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("wavenumber must be positive");
  if (p.tau0 <= 0.0) p.tau0 = CircularMap::from_threshold(a, b, eps).tau0;
  if (p.M < 0) p.M = mode_cutoff(k, R, eps1);
  p.map().validate();
  p.mesh().validate();
  return p;
}

CircularMap CircularProblem::map() const { return {a, b, tau0}; }

spectral1d::RadialMesh CircularProblem::mesh() const {
  spectral1d::RadialMesh m{R, a, b, N1, N2, quadrature_order, {}};
  for (double s : layer_splits) {
    const double r = a + s / tau0;
    if (s > 0.0 && r < b && (m.layer_breaks.empty() || r > m.layer_breaks.back())) {
      m.layer_breaks.push_back(r);
    }
  }
  const int parts = static_cast<int>(m.layer_breaks.size()) + 1;
  m.N2 = (N2 + parts - 1) / parts;
  return m;
}

int mode_cutoff(double k, double R, double eps1) {
  const double x = k * R;
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("mode_cutoff needs kR > 0");
  if (!(eps1 > 0.0)) throw DomainError("mode_cutoff needs eps1 > 0");
  int n_max = static_cast<int>(std::ceil(x)) + 40;
  for (;;) {
    n_max = std::min(n_max, specfun::kMaxOrder);
    const auto j = specfun::bessel_j_sequence(n_max, x);
    int last = -1;
    for (int n = 0; n <= n_max; ++n) {
      if (std::abs(j.values[n]) > eps1) last = n;
    }
    // The tail beyond kR decays monotonically; require a margin past the last hit.
    if (last + 10 < n_max && n_max > x) return last + 1;
    if (n_max == specfun::kMaxOrder) {
      throw CapacityError("mode cutoff exceeds the supported Bessel order");
    }
    n_max *= 2;
  }
}

std::vector<cplx> plane_wave_data(double k, double R, int M) {
  const auto j = specfun::bessel_j_sequence(M, k * R);
  std::vector<cplx> g(2 * M + 1);
  const cplx i(0.0, 1.0);
  for (int n = 0; n <= M; ++n) {
    // ĝ₋ₙ = ĝₙ since J₋ₙ = (-1)ⁿ Jₙ and i⁻ⁿ = (-1)ⁿ iⁿ.
    const cplx value = -std::pow(i, n) * j.values[n];
    g[M + n] = value;
    g[M - n] = value;
  }
  return g;
}

cplx exact_scattering_series(double k, double R, double rho, double theta, int M) {
  if (!(rho >= R)) throw DomainError("exact series needs rho >= R");
  const auto g = plane_wave_data(k, R, M);
  const auto ratio = scaled_ratio(M, k, R, rho);
  cplx sum = 0.0;
  for (int n = -M; n <= M; ++n) sum += g[n + M] * ratio[std::abs(n)] * std::polar(1.0, n * theta);
  return sum * std::polar(1.0, k * (rho - R));
}

std::vector<cplx> exact_modes(const CircularProblem& problem, double r) {
  const int M = problem.M;
  const double k = problem.k;
  if (!(r >= problem.R && r <= problem.b)) {
    throw DomainError("exact_modes: r outside [R, b]");
  }
  const auto g = plane_wave_data(k, problem.R, M);
  double rho = r;
  double phase = k * (r - problem.R);
  if (r > problem.a) {
    rho = tau_circular(problem.map(), r);
    // e^{ik(ρ - R)} e^{-ik(ρ - a)}: the carrier cancels exactly.
    phase = k * (problem.a - problem.R);
  }
  const auto ratio = scaled_ratio(M, k, problem.R, rho);
  const cplx carrier = std::polar(1.0, phase);
  std::vector<cplx> out(2 * M + 1);
  for (int n = -M; n <= M; ++n) out[n + M] = g[n + M] * ratio[std::abs(n)] * carrier;
  return out;
}

cplx exact_reference(const CircularProblem& problem, double r, double theta) {
  const auto modes = exact_modes(problem, r);
  const auto row = fourier_row(problem.M, theta);
  cplx sum = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) sum += modes[i] * row[i];
  return sum;
}

CircularSolution solve(const CircularProblem& problem) {
  const CircularProblem p = problem.resolved();
  return solve(p, plane_wave_data(p.k, p.R, p.M));
}

CircularSolution solve(const CircularProblem& problem, const std::vector<cplx>& data) {
  CircularSolution out;
  out.problem = problem.resolved();
  const int M = out.problem.M;
  if (data.size() != static_cast<std::size_t>(2 * M + 1)) {
    throw DomainError("boundary data must hold 2M + 1 modes");
  }
  const spectral1d::RadialMesh mesh = out.problem.mesh();
  const spectral1d::ModeAssembler assembler(mesh, out.problem.map(), out.problem.k);
  out.modes.reserve(data.size());
  for (int n = -M; n <= M; ++n) {
    out.modes.push_back(spectral1d::solve_mode(assembler.system(n, data[n + M]), mesh));
    out.max_residual = std::max(out.max_residual, out.modes.back().residual);
  }
  return out;
}

Eigen::VectorXcd nodal_field(const CircularSolution& solution, double theta) {
  const int M = solution.problem.M;
  const auto row = fourier_row(M, theta);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(solution.problem.mesh().size());
  for (int i = 0; i <= 2 * M; ++i) v += row[i] * solution.modes[i].coefficients;
  return v;
}

cplx synthesize(const CircularSolution& solution, double r, double theta, Representation rep) {
  const CircularProblem& p = solution.problem;
  const cplx v = spectral1d::interpolate(p.mesh(), nodal_field(solution, theta), r);
  if (rep == Representation::v || r <= p.a) return v;
  return substitution_factor(tau_circular(p.map(), r), p.a, p.k, true) * v;
}

cplx far_field_recover(const CircularSolution& solution, double rho, double theta) {
  return far_field_recover(solution, std::vector<double>{rho}, theta)[0];
}

std::vector<cplx> far_field_recover(const CircularSolution& solution,
                                    const std::vector<double>& rho, double theta) {
  const CircularProblem& p = solution.problem;
  const CircularMap map = p.map();
  const double rho_max = tau_circular(map, p.b);
  std::vector<double> r(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] >= p.a && rho[i] <= rho_max * (1.0 + 1e-14))) {
      throw DomainError("far-field radius outside [a, tau(b)]: " + std::to_string(rho[i]));
    }
    r[i] = std::min(p.b, tau_circular_inverse(map, rho[i]));
  }
  const Eigen::VectorXcd v = spectral1d::interpolate(p.mesh(), nodal_field(solution, theta), r);
  std::vector<cplx> out(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out[i] = std::polar(1.0, p.k * (rho[i] - p.a)) * v[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double decay_exponent(const std::vector<double>& rho, const std::vector<cplx>& values) {
  if (rho.size() != values.size() || rho.size() < 2) {
    throw DomainError("decay_exponent needs matching samples, at least two");
  }
  const std::size_t n = rho.size();
  std::vector<double> env(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    running = std::max(running, std::abs(values[i]));
    env[i] = running;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rho[i] > 0.0) || !(env[i] > 0.0)) throw DomainError("decay_exponent needs positive data");
    const double x = std::log(rho[i]);
    const double y = std::log(env[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(n);
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

ErrorReport error_report(const CircularSolution& solution, const ErrorOptions& options) {
  const CircularProblem& p = solution.problem;
  if (options.samples < 2) throw DomainError("error_report needs at least two samples");
  const int M = p.M;
  const spectral1d::RadialMesh mesh = p.mesh();

  ErrorReport report;
  report.M = M;
  report.tau0 = p.tau0;
  report.max_residual = solution.max_residual;

  std::vector<Eigen::VectorXcd> nodal;
  std::vector<std::vector<cplx>> rows;
  for (double theta : options.thetas) {
    nodal.push_back(nodal_field(solution, theta));
    rows.push_back(fourier_row(M, theta));
    report.slices.push_back({theta, 0.0, 0.0, 0.0, 0.0});
  }

  for (int part = 0; part < 2; ++part) {
    const std::vector<double> r =
        part == 0 ? uniform(p.R, p.a, options.samples) : uniform(p.a, p.b, options.samples);
    std::vector<Eigen::VectorXcd> numeric;
    for (const auto& v : nodal) numeric.push_back(spectral1d::interpolate(mesh, v, r));
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto modes = exact_modes(p, r[i]);
      for (std::size_t s = 0; s < options.thetas.size(); ++s) {
        cplx exact = 0.0;
        for (int j = 0; j <= 2 * M; ++j) exact += modes[j] * rows[s][j];
        const cplx e = exact - numeric[s][static_cast<Eigen::Index>(i)];
        SliceErrors& out = report.slices[s];
        double& re = part == 0 ? out.u_re : out.v_re;
        double& im = part == 0 ? out.u_im : out.v_im;
        re = std::max(re, std::abs(e.real()));
        im = std::max(im, std::abs(e.imag()));
      }
    }
  }

  if (options.l2) {
    // Trapezoid in θ is exact for the trigonometric error, so the angular
    // integral reduces to 2π Σ |eₙ(r)|² by Parseval.
    const spectral1d::Quadrature gauss = spectral1d::gauss_legendre(mesh.effective_quadrature());
    double sums[2] = {0.0, 0.0};
    const double bounds[3] = {p.R, p.a, p.b};
    for (int part = 0; part < 2; ++part) {
      const double lo = bounds[part], hi = bounds[part + 1];
      std::vector<double> r(gauss.nodes.size());
      for (std::size_t q = 0; q < r.size(); ++q) r[q] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gauss.nodes[q];
      std::vector<Eigen::VectorXcd> numeric;
      for (const auto& mode : solution.modes) {
        numeric.push_back(spectral1d::interpolate(mesh, mode.coefficients, r));
      }
      for (std::size_t q = 0; q < r.size(); ++q) {
        const auto modes = exact_modes(p, r[q]);
        double e2 = 0.0;
        for (int j = 0; j <= 2 * M; ++j) {
          e2 += std::norm(modes[j] - numeric[j][static_cast<Eigen::Index>(q)]);
        }
        sums[part] += 0.5 * (hi - lo) * gauss.weights[q] * r[q] * kTwoPi * e2;
      }
    }
    report.l2_u = std::sqrt(sums[0]);
    report.l2_v = std::sqrt(sums[1]);
  }
  return report;
}

}  // namespace rcl::circular
