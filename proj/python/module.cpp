#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <string>
#include <variant>

#include "anderson/anderson_operator.hpp"
#include "anderson/builtins.hpp"
#include "anderson/errors.hpp"
#include "anderson/harness.hpp"
#include "anderson/noise.hpp"
#include "anderson/schrodinger_spectral.hpp"
#include "anderson/selfdual_choquard.hpp"
#include "anderson/variational_solver.hpp"

namespace py = pybind11;
using namespace anderson;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FieldSpec = std::variant<Array, std::string>;

GridField to_field(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw ShapeError("expected a square (n, n) array");
  const TorusGrid grid(static_cast<std::size_t>(a.shape(0)));
  GridField u(grid);
  std::copy(a.data(), a.data() + a.size(), u.values().data());
  return u;
}

Array to_array(const GridField& u) {
  const auto n = static_cast<py::ssize_t>(u.grid().n());
  Array out({n, n});
  std::copy(u.values().data(), u.values().data() + u.size(), out.mutable_data());
  return out;
}

Potential to_potential(const FieldSpec& a, const TorusGrid& grid, double declared_p) {
  if (const auto* s = std::get_if<std::string>(&a)) return make_potential(*s, grid);
  GridField f = to_field(std::get<Array>(a));
  if (!(f.grid() == grid)) throw ShapeError("potential grid does not match the operator");
  return Potential(std::move(f), declared_p);
}

GridField to_kernel(const FieldSpec& w, const TorusGrid& grid) {
  if (const auto* s = std::get_if<std::string>(&w)) return make_kernel(*s, grid);
  GridField f = to_field(std::get<Array>(w));
  if (!(f.grid() == grid)) throw ShapeError("kernel grid does not match the operator");
  return f;
}

py::dict result_dict(const SolveResult& r) {
  py::list trace;
  for (const auto& e : r.trace) trace.append(py::make_tuple(e.phi, e.grad_norm));
  py::dict d;
  d["u"] = to_array(r.u);
  d["phi"] = r.phi;
  d["residual_l2"] = r.residual_l2;
  d["grad_e_norm"] = r.grad_e_norm;
  d["iterations"] = r.iterations;
  d["method"] = r.method;
  d["converged"] = r.converged;
  d["trace"] = trace;
  return d;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Anderson operator toolkit";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<InconsistencyError>(m, "InconsistencyError", PyExc_ArithmeticError);

  m.def(
      "sample_white_noise",
      [](std::size_t n, std::uint64_t seed) { return to_array(sample_white_noise(TorusGrid(n), seed).field); },
      py::arg("n"), py::arg("seed"));

  py::class_<AndersonOperator>(m, "Operator")
      .def(py::init([](const Array& xi, bool renormalize, std::size_t dense_max_n) {
             OperatorOptions opt;
             opt.renormalize = renormalize;
             opt.dense_max_n = dense_max_n;
             return AndersonOperator(NoiseSample{to_field(xi), 0, std::nullopt}, opt);
           }),
           py::arg("xi"), py::arg("renormalize") = false, py::arg("dense_max_n") = 48)
      .def_property_readonly("n", [](const AndersonOperator& op) { return op.grid().n(); })
      .def_property_readonly("c", &AndersonOperator::c)
      .def_property_readonly("lambda_max_h", &AndersonOperator::lambda_max_h)
      .def("apply_h", [](const AndersonOperator& op, const Array& u) { return to_array(op.apply_h(to_field(u))); })
      .def("apply_neg_hc",
           [](const AndersonOperator& op, const Array& u) { return to_array(op.apply_neg_hc(to_field(u))); })
      .def("energy_norm", [](const AndersonOperator& op, const Array& u) { return op.energy_norm(to_field(u)); })
      .def("resolvent_solve",
           [](const AndersonOperator& op, double lambda, const Array& rhs) {
             return to_array(op.resolvent_solve(lambda, to_field(rhs)));
           },
           py::arg("lam"), py::arg("rhs"))
      .def("heat_apply",
           [](const AndersonOperator& op, double t, const Array& u) { return to_array(op.heat_apply(t, to_field(u))); },
           py::arg("t"), py::arg("u"))
      .def("green_function",
           [](const AndersonOperator& op, std::size_t i, std::size_t j) {
             return to_array(op.green_function({i, j}));
           },
           py::arg("i"), py::arg("j"));

  m.def(
      "eigendecompose",
      [](const AndersonOperator& op, const FieldSpec& a, std::size_t count, double declared_p) {
        const Spectrum s = eigendecompose(op, to_potential(a, op.grid(), declared_p), count);
        py::list fields;
        for (const auto& e : s.eigenfields) fields.append(to_array(e));
        py::dict d;
        d["eigenvalues"] = s.eigenvalues;
        d["eigenfields"] = fields;
        d["residuals"] = s.residuals;
        d["m"] = s.m;
        d["m_resolved"] = s.m_resolved;
        d["delta"] = s.delta;
        return d;
      },
      py::arg("op"), py::arg("a"), py::arg("count"), py::arg("declared_p") = kInf);

  m.def(
      "kato_modulus_log",
      [](const FieldSpec& a, double r, double declared_p) {
        if (const auto* s = std::get_if<std::string>(&a)) {
          throw ConfigError("kato_modulus_log needs an array potential, got '" + *s + "'");
        }
        GridField f = to_field(std::get<Array>(a));
        return kato_modulus_log(Potential(std::move(f), declared_p), r);
      },
      py::arg("a"), py::arg("r"), py::arg("declared_p") = kInf);

  m.def(
      "resolvent_sup_norm",
      [](const AndersonOperator& op, const FieldSpec& a, double lambda) {
        return resolvent_sup_norm(op, to_potential(a, op.grid(), kInf), lambda);
      },
      py::arg("op"), py::arg("a"), py::arg("lam"));

  m.def(
      "heat_diagnostics",
      [](const AndersonOperator& op, const std::vector<double>& times) {
        const HeatReport r = heat_kernel_diagnostics(op, times);
        py::dict d;
        d["a1"] = r.a1;
        d["a2"] = r.a2;
        d["epsilon"] = r.epsilon;
        d["min_kernel"] = r.min_kernel;
        d["green_ratio_low"] = r.green_ratio_low;
        d["green_ratio_high"] = r.green_ratio_high;
        return d;
      },
      py::arg("op"), py::arg("times"));

  m.def(
      "energy",
      [](const AndersonOperator& op, const FieldSpec& a, const std::string& nl, const Array& u) {
        const Problem pb(op, to_potential(a, op.grid(), kInf), make_nonlinearity(nl));
        return energy(pb, to_field(u));
      },
      py::arg("op"), py::arg("a"), py::arg("nonlinearity"), py::arg("u"));

  m.def(
      "mountain_pass_solve",
      [](const AndersonOperator& op, const FieldSpec& a, const std::string& nl, double tol,
         std::size_t max_iter, std::uint64_t seed) {
        const Problem pb(op, to_potential(a, op.grid(), kInf), make_nonlinearity(nl));
        SolverParams params;
        params.tol = tol;
        params.max_iter = max_iter;
        params.seed = seed;
        const Spectrum s = eigendecompose(op, pb.a, std::min<std::size_t>(8, op.grid().size()));
        return result_dict(mountain_pass_solve(pb, s, params));
      },
      py::arg("op"), py::arg("a"), py::arg("nonlinearity") = "pow3", py::arg("tol") = 1e-6,
      py::arg("max_iter") = 5000, py::arg("seed") = 0);

  m.def(
      "fountain_solve",
      [](const AndersonOperator& op, const FieldSpec& a, std::size_t count, const std::string& nl,
         double tol, std::uint64_t seed) {
        const Problem pb(op, to_potential(a, op.grid(), kInf), make_nonlinearity(nl));
        SolverParams params;
        params.tol = tol;
        params.seed = seed;
        const Spectrum s =
            eigendecompose(op, pb.a, std::min<std::size_t>(2 * count + 10, op.grid().size()));
        const FountainResult fr = fountain_solve(pb, s, count, params);
        py::list out;
        for (const auto& r : fr.solutions) out.append(result_dict(r));
        return out;
      },
      py::arg("op"), py::arg("a"), py::arg("count") = 3, py::arg("nonlinearity") = "pow3",
      py::arg("tol") = 1e-6, py::arg("seed") = 0);

  m.def(
      "selfdual_value",
      [](const AndersonOperator& op, const FieldSpec& a, const FieldSpec& w, double p, double q,
         const Array& u) {
        const ChoquardProblem prob(op, to_potential(a, op.grid(), kInf), to_kernel(w, op.grid()), p, q);
        return selfdual_value(prob, to_field(u));
      },
      py::arg("op"), py::arg("a"), py::arg("w"), py::arg("p"), py::arg("q"), py::arg("u"));

  m.def(
      "selfdual_minimize",
      [](const AndersonOperator& op, const FieldSpec& a, const FieldSpec& w, double p, double q,
         const Array& init, double tol, std::size_t max_iter) {
        const ChoquardProblem prob(op, to_potential(a, op.grid(), kInf), to_kernel(w, op.grid()), p, q);
        const ChoquardResult r = selfdual_minimize(prob, to_field(init), {tol, max_iter});
        py::dict d;
        d["u"] = to_array(r.u);
        d["selfdual_value"] = r.selfdual_value;
        d["residual_l2"] = r.residual_l2;
        d["trivial"] = r.trivial;
        d["iterations"] = r.iterations;
        d["trace"] = r.trace;
        return d;
      },
      py::arg("op"), py::arg("a"), py::arg("w"), py::arg("p") = 2.0, py::arg("q") = 3.0,
      py::arg("init"), py::arg("tol") = 1e-6, py::arg("max_iter") = 5000);

  m.def(
      "run",
      [](const py::dict& config) {
        const std::string text = py::str(py::module_::import("json").attr("dumps")(config));
        const RunManifest manifest = run(RunConfig::from_json(nlohmann::json::parse(text)));
        return json_to_py(manifest.to_json());
      },
      py::arg("config"), "Runs a pipeline from a config dict and returns the manifest.");
}
