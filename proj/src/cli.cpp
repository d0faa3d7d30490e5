#include "rcl/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "rcl/circular.hpp"
#include "rcl/rect.hpp"

namespace rcl::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(int v) { return std::to_string(v); }

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": cannot parse '" + text + "'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_number<T>(key, text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Field {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define RCL_SCALAR(member, type)                                                 \
  Field {                                                                        \
    #member, [](const RunConfig& c) { return fmt(c.member); },                   \
        [](RunConfig& c, const std::string& s) { c.member = parse_number<type>(#member, s); } \
  }
#define RCL_LIST(member, type)                                                   \
  Field {                                                                        \
    #member, [](const RunConfig& c) { return join(c.member); },                  \
        [](RunConfig& c, const std::string& s) { c.member = parse_list<type>(#member, s); } \
  }
#define RCL_STRING(member)                                                       \
  Field {                                                                        \
    #member, [](const RunConfig& c) { return c.member; },                        \
        [](RunConfig& c, const std::string& s) { c.member = s; }                 \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      RCL_STRING(experiment), RCL_LIST(k, double),       RCL_LIST(N, int),
      RCL_SCALAR(N1, int),    RCL_SCALAR(N2, int),       RCL_SCALAR(R, double),
      RCL_SCALAR(a, double),  RCL_SCALAR(b, double),     RCL_LIST(d, double),
      RCL_SCALAR(eps, double), RCL_SCALAR(eps1, double), RCL_SCALAR(M, int),
      RCL_SCALAR(theta, double), RCL_SCALAR(samples, int), RCL_SCALAR(rho_min, double),
      RCL_SCALAR(rho_max, double), RCL_SCALAR(rho_samples, int), RCL_SCALAR(decay_theta, double),
      RCL_SCALAR(L1, double), RCL_SCALAR(L2, double),    RCL_SCALAR(d1, double),
      RCL_SCALAR(d2, double), RCL_LIST(mesh, int),       RCL_SCALAR(memory_mb, double),
      RCL_SCALAR(field_mesh, int), RCL_SCALAR(width, double), RCL_SCALAR(cut_x, double),
      RCL_SCALAR(cut_y, double), RCL_STRING(out),        RCL_STRING(field_out),
  };
  return f;
}

#undef RCL_SCALAR
#undef RCL_LIST
#undef RCL_STRING

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

/// Runs f, turning failures other than configuration errors into a StageError.
template <class F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const GeometryError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string csv_header(const RunConfig& c, const std::vector<std::string>& columns) {
  std::string s = std::string("# rcl version ") + RCL_VERSION + "\n";
  for (const auto& [key, value] : c.to_kv()) s += "# " + key + "=" + value + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + quote(columns[i]);
  return s + "\n";
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + quote(cells[i]);
  return s + "\n";
}

nlohmann::json metadata(const RunConfig& c) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : c.to_kv()) cfg[key] = value;
  return {{"version", RCL_VERSION}, {"config", cfg}};
}

circular::CircularProblem circular_problem(const RunConfig& c, double k, int N) {
  circular::CircularProblem p;
  p.R = c.R;
  p.a = c.a;
  p.b = c.b;
  p.k = k;
  p.eps = c.eps;
  p.eps1 = c.eps1;
  p.M = c.M;
  p.N1 = c.N1 > 0 ? c.N1 : N;
  p.N2 = c.N2 > 0 ? c.N2 : N;
  return p;
}

const std::vector<std::string> kErrorColumns = {"e_u^R", "e_u^I", "e_v^R", "e_v^I"};

std::vector<std::string> slice_cells(const circular::ErrorReport& r) {
  const auto& s = r.slices.front();
  return {format_sci(s.u_re), format_sci(s.u_im), format_sci(s.v_re), format_sci(s.v_im)};
}

circular::ErrorReport circular_errors(const circular::CircularProblem& p, const RunConfig& c) {
  const auto sol = staged("circular solve", [&] { return circular::solve(p); });
  circular::ErrorOptions opt;
  opt.samples = c.samples;
  opt.thetas = {c.theta};
  return staged("circular errors", [&] { return circular::error_report(sol, opt); });
}

void require_experiment(const RunConfig& c, const char* name) {
  c.validate();
  require(c.experiment == name, "experiment", std::string("expected ") + name);
}

rect::RectProblem rect_problem(const RunConfig& c) {
  require(c.k.size() == 1, "k", "takes a single value for this experiment");
  require(c.N.size() == 1, "N", "takes a single value for this experiment");
  rect::RectProblem p;
  p.L1 = c.L1;
  p.L2 = c.L2;
  p.d1 = c.d1;
  p.d2 = c.d2;
  p.eps = c.eps;
  p.k = c.k.front();
  p.N = c.N.front();
  return p;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::to_kv() const {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const Field& f : fields()) kv.emplace_back(f.name, f.get(*this));
  return kv;
}

void RunConfig::validate() const {
  require(std::find(std::begin(kExperiments), std::end(kExperiments), experiment) != std::end(kExperiments),
          "experiment", "unknown experiment '" + experiment + "'");
  for (double v : k) require(finite_positive(v), "k", "must be positive");
  for (int v : N) require(v >= 1, "N", "must be at least 1");
  require(N1 >= 0, "N1", "must be non-negative");
  require(N2 >= 0, "N2", "must be non-negative");
  require(finite_positive(R), "R", "must be positive");
  require(std::isfinite(a) && a > R, "a", "must exceed R");
  require(std::isfinite(b) && b > a, "b", "must exceed a");
  for (double v : d) require(finite_positive(v), "d", "must be positive");
  require(eps > 0.0 && eps < 1.0, "eps", "must lie in (0, 1)");
  require(eps1 > 0.0 && eps1 < 1.0, "eps1", "must lie in (0, 1)");
  require(M >= -1, "M", "must be -1 (automatic) or non-negative");
  require(std::isfinite(theta), "theta", "must be finite");
  require(samples >= 2, "samples", "must be at least 2");
  require(std::isfinite(rho_min) && std::isfinite(rho_max) && rho_min < rho_max, "rho_min",
          "must be below rho_max");
  require(rho_samples >= 2, "rho_samples", "must be at least 2");
  require(std::isfinite(decay_theta), "decay_theta", "must be finite");
  require(finite_positive(L1), "L1", "must be positive");
  require(finite_positive(L2), "L2", "must be positive");
  require(finite_positive(d1), "d1", "must be positive");
  require(finite_positive(d2), "d2", "must be positive");
  for (int v : mesh) require(v >= 2, "mesh", "must be at least 2");
  require(std::isfinite(memory_mb) && memory_mb >= 0.0, "memory_mb", "must be non-negative");
  require(field_mesh >= 0, "field_mesh", "must be non-negative");
  require(finite_positive(width), "width", "must be positive");
  require(std::isfinite(cut_x) && std::abs(cut_x) < width / 2 + 1e-15 && cut_x > -width / 2, "cut_x",
          "must lie in (-width/2, width/2]");
  require(std::isfinite(cut_y) && std::abs(cut_y) < width / 2 + 1e-15 && cut_y > -width / 2, "cut_y",
          "must lie in (-width/2, width/2]");
}

RunConfig defaults_for(const std::string& experiment) {
  RunConfig c;
  c.experiment = experiment;
  if (experiment == "circular") {
    c.k = {50.0};
    c.N = {50, 80, 100};
  } else if (experiment == "thickness") {
    c.k = {50.0, 200.0};
    c.N1 = c.N2 = 200;
    c.d = {1.0, 0.1, 0.001};
    c.eps = c.eps1 = 1e-13;
  } else if (experiment == "farfield") {
    c.k = {50.0};
    c.N = {150};
  } else if (experiment == "rect") {
    c.k = {10.0};
    c.N = {1};
    c.mesh = {32, 64, 128, 256, 512};
  } else if (experiment == "lshape") {
    c.k = {10.0};
    c.N = {2};
    c.mesh = {64};
  } else {
    throw ConfigError("experiment: unknown experiment '" + experiment + "'");
  }
  return c;
}

RunConfig from_kv(const std::string& experiment, const std::map<std::string, std::string>& kv) {
  RunConfig c = defaults_for(experiment);
  for (const auto& [key, value] : kv) {
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return key == f.name; });
    if (it == fields().end()) throw ConfigError(key + ": unknown key");
    if (key == "experiment") {
      require(value == experiment, "experiment", "'" + value + "' does not match '" + experiment + "'");
      continue;
    }
    it->set(c, value);
  }
  c.validate();
  return c;
}

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

std::map<std::string, std::string> read_csv_metadata(const std::string& csv) {
  std::string config;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    if (line.find('=') != std::string::npos) config += line.substr(1) + "\n";
  }
  return parse_kv_text(config);
}

CommandOutput cmd_circular(const RunConfig& c) {
  require_experiment(c, "circular");
  std::string csv = csv_header(c, {"k", "N", "M", "e_u^R", "e_u^I", "e_v^R", "e_v^I"});
  for (double k : c.k) {
    for (int N : c.N) {
      const auto p = circular_problem(c, k, N);
      const auto report = circular_errors(p, c);
      std::vector<std::string> cells = {fmt(k), fmt(N), fmt(report.M)};
      for (auto& e : slice_cells(report)) cells.push_back(e);
      csv += csv_row(cells);
    }
  }
  return {csv, std::nullopt};
}

CommandOutput cmd_thickness(const RunConfig& c) {
  require_experiment(c, "thickness");
  require(c.N1 > 0, "N1", "must be set for the thickness study");
  require(c.N2 > 0, "N2", "must be set for the thickness study");
  std::string csv = csv_header(c, {"k", "d", "tau0", "N1", "N2", "M", "e_u^R", "e_u^I", "e_v^R", "e_v^I"});
  for (double k : c.k) {
    for (double d : c.d) {
      RunConfig row = c;
      row.b = c.a + d;
      const auto p = circular_problem(row, k, 0);
      const auto report = circular_errors(p, row);
      std::vector<std::string> cells = {fmt(k), fmt(d), format_sci(report.tau0), fmt(p.N1), fmt(p.N2),
                                        fmt(report.M)};
      for (auto& e : slice_cells(report)) cells.push_back(e);
      csv += csv_row(cells);
    }
  }
  return {csv, std::nullopt};
}

CommandOutput cmd_farfield(const RunConfig& c) {
  require_experiment(c, "farfield");
  require(c.k.size() == 1, "k", "takes a single value for this experiment");
  require(c.N.size() == 1 || (c.N1 > 0 && c.N2 > 0), "N", "takes a single value for this experiment");
  const double k = c.k.front();
  const auto p = circular_problem(c, k, c.N.empty() ? 0 : c.N.front());
  const auto sol = staged("circular solve", [&] { return circular::solve(p); });
  const auto& rp = sol.problem;
  const double far = tau_circular(rp.map(), rp.b);
  require(c.rho_min >= rp.a, "rho_min", "must be at least a");
  require(c.rho_max <= far, "rho_max", "must not exceed the image of b");

  std::vector<double> rho(c.rho_samples);
  for (int i = 0; i < c.rho_samples; ++i) {
    rho[i] = c.rho_min + (c.rho_max - c.rho_min) * i / (c.rho_samples - 1);
  }
  const auto un = staged("far-field recovery", [&] { return circular::far_field_recover(sol, rho, c.theta); });
  nlohmann::json j = metadata(c);
  std::vector<double> re_n, im_n, re_e, im_e;
  double sup = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const auto ex = staged("exact series", [&] { return circular::exact_scattering_series(k, rp.R, rho[i], c.theta, rp.M); });
    re_n.push_back(un[i].real());
    im_n.push_back(un[i].imag());
    re_e.push_back(ex.real());
    im_e.push_back(ex.imag());
    sup = std::max(sup, std::abs(un[i] - ex));
  }
  // Decay fit over [a, 10 a] on a logarithmic grid.
  const double top = std::min(10.0 * rp.a, far);
  std::vector<double> fit_rho(200);
  for (int i = 0; i < 200; ++i) fit_rho[i] = rp.a * std::pow(top / rp.a, i / 199.0);
  const auto fit = staged("far-field recovery", [&] { return circular::far_field_recover(sol, fit_rho, c.decay_theta); });
  j["rho"] = rho;
  j["re_U_N"] = re_n;
  j["im_U_N"] = im_n;
  j["re_U_exact"] = re_e;
  j["im_U_exact"] = im_e;
  j["sup_error"] = sup;
  j["decay_exponent"] = circular::decay_exponent(fit_rho, fit);
  j["decay_range"] = {rp.a, top};
  j["M"] = rp.M;
  j["tau0"] = rp.tau0;
  return {j.dump(1), std::nullopt};
}

CommandOutput cmd_rect(const RunConfig& c) {
  require_experiment(c, "rect");
  const rect::RectProblem base = rect_problem(c);
  staged("rect setup", [&] {
    base.validate();
    return 0;
  });
  std::vector<std::string> columns = {"m"};
  for (const auto& e : kErrorColumns) {
    columns.push_back(e);
    columns.push_back("order");
  }
  columns.push_back("status");
  std::string csv = csv_header(c, columns);
  rect::StudyOptions opt;
  opt.memory_budget = c.memory_mb * 1024.0 * 1024.0;
  const rect::ErrorReport report = rect::convergence_study(base, c.mesh, opt);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    std::vector<std::string> cells = {fmt(row.m)};
    const double values[4] = {row.errors ? row.errors->u_re : 0.0, row.errors ? row.errors->u_im : 0.0,
                              row.errors ? row.errors->v_re : 0.0, row.errors ? row.errors->v_im : 0.0};
    for (int col = 0; col < 4; ++col) {
      cells.push_back(row.errors ? format_sci(values[col]) : "");
      const auto order = report.order(i, col);
      char buf[32] = "";
      if (order) std::snprintf(buf, sizeof buf, "%.4f", *order);
      cells.push_back(buf);
    }
    cells.push_back(row.status);
    csv += csv_row(cells);
  }

  std::optional<nlohmann::json> field;
  if (c.field_mesh > 0) {
    rect::RectProblem p = base;
    p.m = c.field_mesh;
    const auto run = staged("rect field solve", [&] { return rect::run(p); });
    nlohmann::json j = fem::export_field(*run.space, run.nodal);
    const RectangularMap map = p.map();
    std::vector<double> re, im;
    for (const auto& x : run.space->nodes()) {
      const auto v = rect::reference_field(p.k, map, x.x(), x.y());
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    j["exact_re"] = re;
    j["exact_im"] = im;
    j["meta"] = metadata(c);
    j["meta"]["mesh"] = p.m;
    j["meta"]["residual"] = run.residual;
    field = std::move(j);
  }
  return {csv, field};
}

CommandOutput cmd_lshape(const RunConfig& c) {
  require_experiment(c, "lshape");
  require(c.mesh.size() == 1, "mesh", "takes a single value for this experiment");
  rect::RectProblem base = rect_problem(c);
  base.m = c.mesh.front();
  const fem::LShapeScatterer shape{c.width, c.cut_x, c.cut_y};
  nlohmann::json j = staged("lshape solve", [&] { return rect::lshape_demo(base, shape); });
  const nlohmann::json meta = metadata(c);
  for (const auto& [key, value] : meta.items()) j["meta"][key] = value;
  return {j.dump(), std::nullopt};
}

CommandOutput run_command(const RunConfig& c) {
  if (c.experiment == "circular") return cmd_circular(c);
  if (c.experiment == "thickness") return cmd_thickness(c);
  if (c.experiment == "farfield") return cmd_farfield(c);
  if (c.experiment == "rect") return cmd_rect(c);
  if (c.experiment == "lshape") return cmd_lshape(c);
  throw ConfigError("experiment: unknown experiment '" + c.experiment + "'");
}

}  // namespace rcl::cli
