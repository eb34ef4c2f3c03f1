#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnls/config.hpp"
#include "mnls/evolve.hpp"
#include "mnls/groundstate.hpp"
#include "mnls/verify.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace mnls {
namespace {

using ComplexArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using GridHandle = std::shared_ptr<Grid>;

GridHandle handle(const GridPtr& g) { return std::const_pointer_cast<Grid>(g); }

std::vector<py::ssize_t> grid_shape(const Grid& g) {
  return std::vector<py::ssize_t>(g.dim(), g.n_axis());
}

py::array_t<double> real_array(const Grid& g, std::span<const double> v) {
  py::array_t<double> out(grid_shape(g));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> flat_real(const Grid& g, const RealArray& a, const char* what) {
  if (static_cast<std::size_t>(a.size()) != g.size()) {
    throw ValidationError(what, std::string(what) + ": expected " + std::to_string(g.size()) +
                                    " samples");
  }
  return {a.data(), a.data() + a.size()};
}

py::array_t<cplx> to_numpy(const Field& f) {
  auto shape = grid_shape(*f.grid());
  shape.insert(shape.begin(), f.components());
  py::array_t<cplx> out(shape);
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

Field to_field(const GridPtr& g, const ComplexArray& a) {
  const auto expected = grid_shape(*g);
  const bool ok = a.ndim() == g->dim() + 1 &&
                  std::equal(expected.begin(), expected.end(), a.shape() + 1);
  if (!ok) throw ValidationError("field.shape", "field must have shape (m, n, ..., n)");
  Field f(g, static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), f.data().begin());
  return f;
}

py::dict to_dict(const Diagnostics& d) {
  return py::dict("t"_a = d.t, "charge"_a = d.charge, "E_kin"_a = d.E_kin, "E_V"_a = d.E_V,
                  "E_loc"_a = d.E_loc, "E_nonloc"_a = d.E_nonloc, "F_A"_a = d.F_A,
                  "H1A_norm"_a = d.H1A_norm);
}

py::dict to_dict(const CheckReport& r) {
  return py::dict("check"_a = r.name, "samples"_a = r.samples, "worst_margin"_a = r.worst_margin,
                  "witness_seed"_a = r.witness_seed, "pass"_a = r.pass, "details"_a = r.details,
                  "note"_a = r.note);
}

Integrator parse_integrator(const std::string& s) {
  if (s == "strang") return Integrator::strang;
  if (s == "picard") return Integrator::picard;
  throw ValidationError("evolve.integrator", "expected strang or picard");
}

System make_system(const GridHandle& grid, const LocalSpec& local,
                   const std::optional<NonlocalSpec>& nonlocal,
                   const std::optional<std::vector<RealArray>>& A,
                   const std::optional<RealArray>& V) {
  std::vector<std::vector<double>> a;
  if (A) {
    if (static_cast<int>(A->size()) != grid->dim()) {
      throw ValidationError("A", "A needs one array per axis");
    }
    for (const auto& comp : *A) a.push_back(flat_real(*grid, comp, "A"));
  }
  std::vector<double> v;
  if (V) v = flat_real(*grid, *V, "V");
  return System(make_potentials(grid, std::move(a), std::move(v)), local, nonlocal);
}

}  // namespace
}  // namespace mnls

PYBIND11_MODULE(_core, mod) {
  using namespace mnls;
  mod.doc() = "Magnetic coupled NLS: evolution, ground states and verification";

  auto validation = py::register_exception<ValidationError>(mod, "ValidationError", PyExc_ValueError);
  py::register_exception<SolverError>(mod, "SolverError", PyExc_RuntimeError);
  (void)validation;

  py::class_<Grid, GridHandle>(mod, "Grid")
      .def(py::init([](int dim, int n_axis, double L) { return handle(make_grid({dim, n_axis, L})); }),
           "dim"_a, "n_axis"_a, "L"_a)
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("n_axis", &Grid::n_axis)
      .def_property_readonly("L", &Grid::half_width)
      .def_property_readonly("dx", &Grid::dx)
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def_property_readonly("size", &Grid::size)
      .def_property_readonly("shape", [](const Grid& g) { return py::tuple(py::cast(grid_shape(g))); })
      .def("coordinate", [](const Grid& g, int d) {
        if (d < 0 || d >= g.dim()) throw py::index_error("axis out of range");
        return real_array(g, g.x(d));
      }, "axis"_a, "Coordinate along an axis at every grid point.")
      .def("axis_coordinates", &Grid::axis_coordinates)
      .def("periodic_radius", [](const Grid& g) { return real_array(g, g.periodic_radius()); });

  py::class_<LocalSpec>(mod, "LocalSpec")
      .def(py::init([](std::vector<double> a, std::vector<double> l,
                       std::optional<std::vector<std::vector<double>>> beta, int sign) {
             LocalSpec s;
             const std::size_t m = a.size();
             s.a = std::move(a);
             s.l = std::move(l);
             s.beta = beta ? *beta : std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0));
             s.sign = sign;
             return s;
           }),
           "a"_a, "l"_a, "beta"_a = py::none(), "sign"_a = 1)
      .def_static("none", &LocalSpec::none, "m"_a)
      .def_readwrite("a", &LocalSpec::a)
      .def_readwrite("l", &LocalSpec::l)
      .def_readwrite("beta", &LocalSpec::beta)
      .def_readwrite("sign", &LocalSpec::sign)
      .def_property_readonly("m", &LocalSpec::components)
      .def_property_readonly("alpha", &LocalSpec::alpha)
      .def_property_readonly("K", &LocalSpec::K)
      .def("validate", [](const LocalSpec& s, int dim) { validate(s, dim); }, "dim"_a);

  py::class_<NonlocalSpec>(mod, "NonlocalSpec")
      .def(py::init([](std::vector<std::vector<double>> w, double gamma, double r0, double mu) {
             return NonlocalSpec{std::move(w), gamma, r0, mu};
           }),
           "w"_a, "gamma"_a = 1.0, "r0"_a = 0.0, "mu"_a = 2.0)
      .def_readwrite("w", &NonlocalSpec::w)
      .def_readwrite("gamma", &NonlocalSpec::gamma)
      .def_readwrite("r0", &NonlocalSpec::r0)
      .def_readwrite("mu", &NonlocalSpec::mu)
      .def("q", &NonlocalSpec::q, "dim"_a)
      .def("mu_max", &NonlocalSpec::mu_max, "dim"_a)
      .def("validate", [](const NonlocalSpec& s, int dim) { validate(s, dim); }, "dim"_a);

  py::class_<System>(mod, "System")
      .def(py::init(&make_system), "grid"_a, "local"_a, "nonlocal_spec"_a = py::none(),
           "A"_a = py::none(), "V"_a = py::none())
      .def_property_readonly("grid", [](const System& s) { return handle(s.grid()); })
      .def_property_readonly("m", &System::components)
      .def_property_readonly("inf_V", [](const System& s) { return s.potentials().infV; })
      .def("diagnostics", [](const System& s, const ComplexArray& phi, double t) {
        return to_dict(s.diagnostics(to_field(s.grid(), phi), t));
      }, "phi"_a, "t"_a = 0.0)
      .def("energy_gradient", [](const System& s, const ComplexArray& phi) {
        return to_numpy(s.energy_gradient(to_field(s.grid(), phi)));
      }, "phi"_a)
      .def("g_tilde", [](const System& s, const ComplexArray& phi) {
        return to_numpy(s.g_tilde(to_field(s.grid(), phi)));
      }, "phi"_a)
      .def("apply_LA", [](const System& s, const ComplexArray& phi) {
        return to_numpy(apply_LA(to_field(s.grid(), phi), s.potentials()));
      }, "phi"_a)
      .def("propagate_free", [](const System& s, const ComplexArray& phi, double t) {
        return to_numpy(propagate_free(to_field(s.grid(), phi), t, s.potentials()));
      }, "phi"_a, "t"_a, "T(t) = exp(-i t L_A) applied to phi.")
      .def("yosida", [](const System& s, const ComplexArray& phi, int n) {
        return to_numpy(yosida_apply(to_field(s.grid(), phi), n, s.potentials()));
      }, "phi"_a, "n"_a, "(I + L_A / n)^{-1} applied to phi.");

  py::class_<EvolveConfig>(mod, "EvolveConfig")
      .def(py::init<>())
      .def_readwrite("dt", &EvolveConfig::dt)
      .def_readwrite("t_end", &EvolveConfig::t_end)
      .def_property("integrator",
                    [](const EvolveConfig& c) {
                      return std::string(c.integrator == Integrator::strang ? "strang" : "picard");
                    },
                    [](EvolveConfig& c, const std::string& s) { c.integrator = parse_integrator(s); })
      .def_readwrite("blowup_threshold", &EvolveConfig::blowup_threshold)
      .def_readwrite("snapshot_stride", &EvolveConfig::snapshot_stride)
      .def_readwrite("diagnostics_stride", &EvolveConfig::diagnostics_stride)
      .def_property("n", [](const EvolveConfig& c) { return c.picard.n; },
                    [](EvolveConfig& c, int n) { c.picard.n = n; })
      .def_property("slab_steps", [](const EvolveConfig& c) { return c.picard.slab_steps; },
                    [](EvolveConfig& c, int k) { c.picard.slab_steps = k; })
      .def_property("picard_tol", [](const EvolveConfig& c) { return c.picard.tol; },
                    [](EvolveConfig& c, double t) { c.picard.tol = t; });

  py::class_<GroundStateConfig>(mod, "GroundStateConfig")
      .def(py::init<>())
      .def_readwrite("masses", &GroundStateConfig::masses)
      .def_readwrite("tau", &GroundStateConfig::tau)
      .def_readwrite("tol", &GroundStateConfig::tol)
      .def_readwrite("max_iter", &GroundStateConfig::max_iter);

  mod.def("evolve", [](const System& sys, const ComplexArray& phi0, const EvolveConfig& cfg) {
    TrajectoryRecord rec;
    {
      const Field f = to_field(sys.grid(), phi0);
      py::gil_scoped_release release;
      rec = evolve(f, sys, cfg);
    }
    py::list diags;
    for (const auto& d : rec.diagnostics) diags.append(to_dict(d));
    py::list snaps;
    for (const auto& s : rec.snapshots) snaps.append(to_numpy(s));
    return py::dict("status"_a = to_string(rec.status), "times"_a = rec.times,
                    "diagnostics"_a = diags, "regularized_energy"_a = rec.regularized_energy,
                    "snapshot_times"_a = rec.snapshot_times, "snapshots"_a = snaps,
                    "final"_a = to_numpy(rec.final_field), "t_star"_a = rec.t_star,
                    "failure_time"_a = rec.failure_time, "message"_a = rec.message,
                    "slab_halvings"_a = rec.slab_halvings);
  }, "system"_a, "phi0"_a, "config"_a);

  mod.def("solve_groundstate", [](const System& sys, const ComplexArray& U0,
                                  const GroundStateConfig& cfg) {
    GroundStateResult res;
    {
      const Field f = to_field(sys.grid(), U0);
      py::gil_scoped_release release;
      res = solve_groundstate(f, sys, cfg);
    }
    return py::dict("U"_a = to_numpy(res.U), "lambda"_a = res.lambda, "residual"_a = res.residual,
                    "F_A"_a = res.energy, "iterations"_a = res.iterations,
                    "status"_a = to_string(res.status), "label"_a = res.label);
  }, "system"_a, "U0"_a, "config"_a);

  mod.def("global_existence_gate", [](int dim, const LocalSpec& local,
                                      const std::optional<NonlocalSpec>& nonlocal, double inf_V) {
    const auto rep = global_existence_gate(dim, local, nonlocal ? &*nonlocal : nullptr, inf_V);
    py::list conds;
    for (const auto& c : rep.conditions) {
      conds.append(py::dict("name"_a = c.name, "holds"_a = c.holds, "value"_a = c.value,
                            "bound"_a = c.bound));
    }
    return py::dict("global"_a = rep.global, "conditions"_a = conds, "verdict"_a = rep.verdict);
  }, "dim"_a, "local"_a, "nonlocal_spec"_a = py::none(), "inf_V"_a = 0.0);

  mod.def("verify", [](int n_axis, std::uint64_t seed, unsigned threads) {
    std::vector<CheckReport> reports;
    {
      py::gil_scoped_release release;
      reports = run_checks(default_suite({n_axis, seed, threads}), threads);
    }
    py::list out;
    for (const auto& r : reports) out.append(to_dict(r));
    return out;
  }, "n_axis"_a = 32, "seed"_a = 1, "threads"_a = 0);

  mod.def("measure_dispersive_decay", [](int dim, int n_axis, double L, double p, double t_min,
                                         double t_max, int samples, double width) {
    DecayOptions o;
    o.grid = {dim, n_axis, L};
    o.p = p;
    o.t_min = t_min;
    o.t_max = t_max;
    o.samples = samples;
    o.width = width;
    const auto res = measure_dispersive_decay(o);
    return py::dict("t"_a = res.t, "norm"_a = res.norm, "slope"_a = res.slope,
                    "expected"_a = res.expected, "boundary_mass"_a = res.boundary_mass);
  }, "dim"_a = 1, "n_axis"_a = 4096, "L"_a = 400.0, "p"_a = kInf, "t_min"_a = 5.0,
     "t_max"_a = 50.0, "samples"_a = 10, "width"_a = 2.0);

  py::class_<RunConfig>(mod, "RunConfig")
      .def_property_readonly("dim", [](const RunConfig& c) { return c.grid.dim; })
      .def_property_readonly("m", [](const RunConfig& c) { return c.m; })
      .def_readonly("seed", &RunConfig::seed)
      .def_readonly("local", &RunConfig::local)
      .def_readonly("nonlocal_spec", &RunConfig::nonlocal)
      .def_readonly("evolve", &RunConfig::evolve)
      .def_readonly("groundstate", &RunConfig::groundstate)
      .def("grid", [](const RunConfig& c) { return handle(make_grid(c.grid)); })
      .def("system", [](const RunConfig& c, const GridHandle& g) { return build_system(c, g); },
           "grid"_a)
      .def("initial", [](const RunConfig& c, const GridHandle& g) {
        return to_numpy(build_initial(c.initial, c.m, g, c.seed));
      }, "grid"_a)
      .def("groundstate_initial", [](const RunConfig& c, const GridHandle& g) {
        return to_numpy(build_initial(c.groundstate_initial, c.m, g, c.seed));
      }, "grid"_a);

  mod.def("load_config", &load_config, "path"_a);
}
