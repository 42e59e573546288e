#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qdyn/doublewell.hpp"
#include "qdyn/gaussian.hpp"
#include "qdyn/kerr.hpp"
#include "qdyn/lattice.hpp"
#include "qdyn/scenario.hpp"
#include "qdyn/variational.hpp"

namespace py = pybind11;
using namespace qdyn;

namespace {

Statistics statistics_from(const std::string& name) {
  if (name == "boson") return Statistics::boson;
  if (name == "fermion") return Statistics::fermion;
  throw InvalidInput("unknown statistics '" + name + "' (expected boson|fermion)");
}

// Scenario documents cross the boundary as JSON text; the Python side wraps them with json.
py::dict run_report(const RunReport& r) {
  py::dict d;
  d["exit_code"] = r.exit_code;
  std::vector<std::string> files;
  for (const auto& f : r.files) files.push_back(f.string());
  d["files"] = files;
  d["summary"] = r.summary.dump();
  d["manifest"] = r.manifest.dump();
  d["message"] = r.message;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qdyn, m) {
  m.doc() = "qdyn core bindings";
  m.attr("__version__") = QDYN_VERSION;

  static py::exception<InvalidInput> invalid(m, "InvalidInput", PyExc_ValueError);
  static py::exception<ScenarioInvalid> scenario_invalid(m, "ScenarioInvalid", invalid.ptr());
  static py::exception<CapacityError> capacity(m, "CapacityError", PyExc_MemoryError);
  static py::exception<SingularMatrix> singular(m, "SingularMatrix", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ScenarioInvalid& e) {
      // errors as a list of (path, message) on the exception object
      py::list errors;
      for (const auto& err : e.errors()) errors.append(py::make_tuple(err.path, err.message));
      py::object exc = py::handle(scenario_invalid)(e.what());
      exc.attr("errors") = errors;
      py::set_error(scenario_invalid, exc);
    } catch (const InvalidInput& e) {
      py::set_error(invalid, e.what());
    } catch (const CapacityError& e) {
      py::set_error(capacity, e.what());
    } catch (const SingularMatrix& e) {
      py::set_error(singular, e.what());
    }
  });

  m.def(
      "hilbert_dimension",
      [](std::int64_t particles, std::int64_t modes, const std::string& statistics) {
        const auto c = hilbert_dimension(particles, modes, statistics_from(statistics));
        py::object exact = py::none();
        if (c.exact) exact = py::reinterpret_steal<py::object>(PyLong_FromString(c.exact->str().c_str(), nullptr, 10));
        return py::make_tuple(exact, c.log10);
      },
      py::arg("particles"), py::arg("modes"), py::arg("statistics") = "boson",
      "(exact count or None, log10 count). Fermions are summed over all fillings.");

  m.def("kerr_single_mode_mean", &kerr_single_mode_mean, py::arg("alpha"), py::arg("chi"), py::arg("t"),
        "<a(t)> for H = (chi/2) a^dag^2 a^2 from a coherent state.");

  m.def(
      "renyi_entropy",
      [](const std::vector<CMatrix>& n, const std::string& species, const std::string& pairing,
         std::optional<std::vector<double>> weights) {
        const Statistics s = statistics_from(species);
        std::vector<GaussianPoint> points;
        for (std::size_t i = 0; i < n.size(); ++i) {
          GaussianPoint p;
          p.species = s;
          p.n = n[i];
          if (weights) p.weight = weights->at(i);
          points.push_back(std::move(p));
        }
        const auto e = renyi_entropy(points, parse_pairing(pairing));
        py::dict d;
        d["s2"] = e.s2;
        d["error"] = e.error;
        d["purity"] = e.purity;
        d["purity_error"] = e.purity_error;
        d["pair_count"] = e.pair_count;
        d["defined"] = e.defined;
        d["sign_problem"] = e.sign_problem;
        return d;
      },
      py::arg("n"), py::arg("species") = "boson", py::arg("pairing") = "disjoint", py::arg("weights") = py::none(),
      "Renyi entropy S2 of an ensemble of Gaussian points given by their correlation matrices n.");

  m.def(
      "run_variational",
      [](const CVector& target, const CMatrix& omega, const RMatrix& chi, int components, double radius, double dt,
         double lambda, int iterations, double t_max, int record_every, int mode) {
        PolynomialHamiltonian h;
        h.omega = omega;
        h.chi = chi;
        h.validate();
        PropagationOptions o;
        o.dt = dt;
        o.lambda = lambda;
        o.iterations = iterations;
        const auto trace = run_variational(coherent_ring(target, components, radius), h, o, t_max, record_every, mode);
        py::dict d;
        d["t"] = trace.t;
        d["x"] = trace.x;
        d["y"] = trace.y;
        d["log_norm"] = trace.log_norm;
        d["energy"] = trace.energy;
        d["substeps"] = trace.substeps;
        return d;
      },
      py::arg("target"), py::arg("omega"), py::arg("chi"), py::arg("components") = 16, py::arg("radius") = 1e-3,
      py::arg("dt") = 2 * kPi / 2000, py::arg("lam") = 1e-4, py::arg("iterations") = 4, py::arg("t_max") = 2 * kPi,
      py::arg("record_every") = 10, py::arg("mode") = 0,
      "Coherent-state superposition run from a ring around `target`; returns the <a_mode> trace.");

  m.def(
      "run_double_well",
      [](std::vector<double> atoms, std::vector<double> tau, double a11, double a22, double a12) {
        DoubleWellParams p;
        p.atoms = std::move(atoms);
        p.tau = std::move(tau);
        p.a11 = a11;
        p.a22 = a22;
        p.a12 = a12;
        py::list rows;
        for (const auto& r : run_double_well(p)) {
          py::dict d;
          d["atoms"] = r.atoms;
          d["tau"] = r.tau;
          d["S_dB"] = r.local.s_db;
          d["S_perp_dB"] = r.local.s_perp_db;
          d["theta"] = r.local.theta;
          d["uncertainty_slack"] = r.local.uncertainty_slack;
          d["E_product"] = r.after.e_product;
          d["E_sum"] = r.after.e_sum;
          d["S_plus_dB"] = r.after.s_plus_db;
          d["S_minus_dB"] = r.after.s_minus_db;
          rows.append(d);
        }
        return rows;
      },
      py::arg("atoms"), py::arg("tau"), py::arg("a11") = 100.4, py::arg("a22") = 95.5, py::arg("a12") = 80.8,
      "Exact double-well squeezing and entanglement rows, one per (atoms, tau).");

  m.def(
      "parse_scenario", [](const std::string& text) { return serialize(parse_scenario(text)).dump(); },
      py::arg("text"), "Validates a scenario and returns its canonical JSON with every default filled in.");
  m.def(
      "parameter_hash", [](const std::string& text) { return parameter_hash(parse_scenario(text)); },
      py::arg("text"));
  m.def(
      "run_scenario",
      [](const std::string& text, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
         std::optional<int> threads, bool deterministic) {
        const auto s = parse_scenario(text);
        RunOptions o;
        o.out_dir = out_dir;
        o.seed = seed;
        o.threads = threads;
        o.deterministic = deterministic;
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_scenario(s, o);
        }
        return run_report(r);
      },
      py::arg("text"), py::arg("out_dir"), py::arg("seed") = py::none(), py::arg("threads") = py::none(),
      py::arg("deterministic") = false);
  m.def("scenario_kinds", [] {
    std::vector<std::string> out;
    for (auto k : all_scenario_kinds()) out.push_back(to_string(k));
    return out;
  });
}
