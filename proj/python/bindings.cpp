#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rcl/circular.hpp"
#include "rcl/cli.hpp"
#include "rcl/rect.hpp"
#include "rcl/specfun.hpp"

namespace py = pybind11;
using namespace rcl;

namespace {

py::dict errors_dict(const rect::RectErrors& e) {
  py::dict d;
  d["u_re"] = e.u_re;
  d["u_im"] = e.u_im;
  d["v_re"] = e.v_re;
  d["v_im"] = e.v_im;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compressed-layer Helmholtz scattering solvers";
  m.attr("__version__") = RCL_VERSION;

  m.def("hankel1", &specfun::hankel1, py::arg("n"), py::arg("x"));
  m.def("hankel1_scaled", &specfun::hankel1_scaled, py::arg("n"), py::arg("x"));
  m.def("hankel1_sequence", &specfun::hankel1_sequence, py::arg("n_max"), py::arg("x"));

  py::class_<circular::CircularProblem>(m, "CircularProblem")
      .def(py::init<>())
      .def_readwrite("R", &circular::CircularProblem::R)
      .def_readwrite("a", &circular::CircularProblem::a)
      .def_readwrite("b", &circular::CircularProblem::b)
      .def_readwrite("tau0", &circular::CircularProblem::tau0)
      .def_readwrite("k", &circular::CircularProblem::k)
      .def_readwrite("eps", &circular::CircularProblem::eps)
      .def_readwrite("eps1", &circular::CircularProblem::eps1)
      .def_readwrite("N1", &circular::CircularProblem::N1)
      .def_readwrite("N2", &circular::CircularProblem::N2)
      .def_readwrite("M", &circular::CircularProblem::M)
      .def("resolved", &circular::CircularProblem::resolved);

  py::class_<circular::CircularSolution>(m, "CircularSolution")
      .def_readonly("problem", &circular::CircularSolution::problem)
      .def_readonly("max_residual", &circular::CircularSolution::max_residual)
      .def("u", [](const circular::CircularSolution& s, double r, double theta) {
        return circular::synthesize(s, r, theta, circular::Representation::u);
      })
      .def("v", [](const circular::CircularSolution& s, double r, double theta) {
        return circular::synthesize(s, r, theta, circular::Representation::v);
      })
      .def("far_field", py::overload_cast<const circular::CircularSolution&, const std::vector<double>&, double>(
                            &circular::far_field_recover),
           py::arg("rho"), py::arg("theta") = 0.0)
      .def(
          "errors",
          [](const circular::CircularSolution& s, int samples, std::vector<double> thetas) {
            const auto r = circular::error_report(s, {samples, std::move(thetas), false});
            py::list out;
            for (const auto& e : r.slices) {
              py::dict d;
              d["theta"] = e.theta;
              d["u_re"] = e.u_re;
              d["u_im"] = e.u_im;
              d["v_re"] = e.v_re;
              d["v_im"] = e.v_im;
              out.append(d);
            }
            return out;
          },
          py::arg("samples") = 20000, py::arg("thetas") = std::vector<double>{0.0});

  m.def("solve_circular", py::overload_cast<const circular::CircularProblem&>(&circular::solve),
        py::arg("problem"), py::call_guard<py::gil_scoped_release>());
  m.def("exact_scattering_series", &circular::exact_scattering_series, py::arg("k"), py::arg("R"),
        py::arg("rho"), py::arg("theta"), py::arg("M"));

  py::class_<rect::RectProblem>(m, "RectProblem")
      .def(py::init<>())
      .def_readwrite("L1", &rect::RectProblem::L1)
      .def_readwrite("L2", &rect::RectProblem::L2)
      .def_readwrite("d1", &rect::RectProblem::d1)
      .def_readwrite("d2", &rect::RectProblem::d2)
      .def_readwrite("eps", &rect::RectProblem::eps)
      .def_readwrite("tau0", &rect::RectProblem::tau0)
      .def_readwrite("k", &rect::RectProblem::k)
      .def_readwrite("N", &rect::RectProblem::N)
      .def_readwrite("m", &rect::RectProblem::m)
      .def("validate", &rect::RectProblem::validate)
      .def("estimated_memory", [](const rect::RectProblem& p) { return rect::estimated_memory(p); });

  m.def(
      "rect_errors", [](const rect::RectProblem& p) { return errors_dict(rect::errors(rect::run(p))); },
      py::arg("problem"));

  m.def(
      "rect_study",
      [](const rect::RectProblem& base, const std::vector<int>& ms, double memory_budget) {
        rect::ErrorReport rep;
        {
          py::gil_scoped_release release;
          rep = rect::convergence_study(base, ms, {memory_budget});
        }
        py::list out;
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
          const auto& row = rep.rows[i];
          py::dict d;
          d["m"] = row.m;
          d["status"] = row.status;
          d["cells"] = row.cells;
          d["dofs"] = row.dofs;
          d["errors"] = row.errors ? py::object(errors_dict(*row.errors)) : py::object(py::none());
          py::list orders;
          for (int c = 0; c < 4; ++c) {
            const auto o = rep.order(i, c);
            orders.append(o ? py::object(py::float_(*o)) : py::object(py::none()));
          }
          d["orders"] = orders;
          out.append(d);
        }
        return out;
      },
      py::arg("base"), py::arg("ms"), py::arg("memory_budget") = 0.0);

  m.def(
      "lshape_json",
      [](double k, int N, int mesh, double width, double cut_x, double cut_y) {
        return rect::lshape_demo(k, N, mesh, {width, cut_x, cut_y}).dump();
      },
      py::arg("k") = 10.0, py::arg("N") = 2, py::arg("mesh") = 64, py::arg("width") = 0.8,
      py::arg("cut_x") = 0.0, py::arg("cut_y") = 0.0);

  m.def(
      "run_text",
      [](const std::string& experiment, const std::map<std::string, std::string>& kv) {
        const cli::RunConfig config = cli::from_kv(experiment, kv);
        py::gil_scoped_release release;
        return cli::run_command(config).text;
      },
      py::arg("experiment"), py::arg("options") = std::map<std::string, std::string>{});
}
