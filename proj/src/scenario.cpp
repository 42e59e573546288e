#include "qdyn/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "qdyn/doublewell.hpp"
#include "qdyn/gaussian.hpp"
#include "qdyn/kerr.hpp"
#include "qdyn/lattice.hpp"
#include "qdyn/plusp.hpp"
#include "qdyn/variational.hpp"
#include "qdyn/wigner.hpp"

#ifndef QDYN_VERSION
#define QDYN_VERSION "0.0.0"
#endif

namespace qdyn {

using json = nlohmann::json;

namespace {

struct KindInfo {
  ScenarioKind kind;
  const char* name;
  const char* summary;
};

constexpr KindInfo kKinds[] = {
    {ScenarioKind::exact_doublewell, "exact-doublewell", "exact Fock evolution of two wells, squeezing and entanglement"},
    {ScenarioKind::wigner, "wigner", "truncated Wigner ensemble on a lattice"},
    {ScenarioKind::plusp, "plusp", "positive-P ensemble on a lattice"},
    {ScenarioKind::plusp_reverse, "plusp-reverse", "positive-P run with Hamiltonian reversal at tau_r"},
    {ScenarioKind::entropy, "entropy", "Renyi entropy S2 of a Gaussian phase-space ensemble"},
    {ScenarioKind::variational, "variational", "coherent-state superposition with Tikhonov midpoint steps"},
    {ScenarioKind::dimension_count, "dimension-count", "number of Fock states for N particles in M modes"},
};

}  // namespace

ScenarioKind parse_scenario_kind(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw InvalidInput("unknown scenario kind '" + name + "'");
}

std::string to_string(ScenarioKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "?";
}

const std::vector<ScenarioKind>& all_scenario_kinds() {
  static const std::vector<ScenarioKind> kinds = [] {
    std::vector<ScenarioKind> v;
    for (const auto& k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

std::string describe(ScenarioKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.summary;
  return "";
}

namespace {

std::string join_errors(const std::vector<ScenarioError>& errors) {
  std::string s = "invalid scenario:";
  for (const auto& e : errors) s += "\n  " + (e.path.empty() ? std::string("/") : e.path) + ": " + e.message;
  return s;
}

}  // namespace

ScenarioInvalid::ScenarioInvalid(std::vector<ScenarioError> errors)
    : InvalidInput(join_errors(errors)), errors_(std::move(errors)) {}

namespace {

// ---- decoding with error collection ----

struct Errors {
  std::vector<ScenarioError> list;
  void add(std::string path, std::string message) { list.push_back({std::move(path), std::move(message)}); }
};

bool decode(const json& j, double& out) {
  if (!j.is_number()) return false;
  out = j.get<double>();
  return true;
}
bool decode(const json& j, int& out) {
  if (!j.is_number_integer()) return false;
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) return false;
  out = static_cast<int>(v);
  return true;
}
bool decode(const json& j, std::int64_t& out) {
  if (!j.is_number_integer()) return false;
  out = j.get<std::int64_t>();
  return true;
}
bool decode(const json& j, std::uint64_t& out) {
  if (!j.is_number_unsigned()) return false;
  out = j.get<std::uint64_t>();
  return true;
}
bool decode(const json& j, bool& out) {
  if (!j.is_boolean()) return false;
  out = j.get<bool>();
  return true;
}
bool decode(const json& j, std::string& out) {
  if (!j.is_string()) return false;
  out = j.get<std::string>();
  return true;
}
// a number, or [re, im]
bool decode(const json& j, cplx& out) {
  if (j.is_number()) {
    out = j.get<double>();
    return true;
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    out = cplx(j[0].get<double>(), j[1].get<double>());
    return true;
  }
  return false;
}
template <class T>
bool decode(const json& j, std::vector<T>& out) {
  if (!j.is_array()) return false;
  std::vector<T> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    if (!decode(j[i], v[i])) return false;
  out = std::move(v);
  return true;
}
// a single complex value or a list of them
bool decode(const json& j, CVector& out) {
  cplx c;
  if (decode(j, c)) {
    out = CVector::Constant(1, c);
    return true;
  }
  std::vector<cplx> v;
  if (!j.is_array() || j.empty() || !decode(j, v)) return false;
  out = Eigen::Map<const CVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  return true;
}
template <class Scalar, class Matrix>
bool decode_matrix(const json& j, Matrix& out) {
  Scalar c;
  if (decode(j, c)) {
    out = Matrix::Constant(1, 1, c);
    return true;
  }
  std::vector<std::vector<Scalar>> rows;
  if (!j.is_array() || j.empty() || !j[0].is_array() || !decode(j, rows)) return false;
  const std::size_t cols = rows[0].size();
  if (cols == 0) return false;
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) return false;
    for (std::size_t c2 = 0; c2 < cols; ++c2) m(r, c2) = rows[r][c2];
  }
  out = std::move(m);
  return true;
}
bool decode(const json& j, CMatrix& out) { return decode_matrix<cplx>(j, out); }
bool decode(const json& j, RMatrix& out) { return decode_matrix<double>(j, out); }

const char* expected(const double*) { return "a number"; }
const char* expected(const int*) { return "an integer"; }
const char* expected(const std::int64_t*) { return "an integer"; }
const char* expected(const std::uint64_t*) { return "a non-negative integer"; }
const char* expected(const bool*) { return "true or false"; }
const char* expected(const std::string*) { return "a string"; }
const char* expected(const CVector*) { return "a complex number or a list of them"; }
const char* expected(const CMatrix*) { return "a rectangular list of rows of complex numbers"; }
const char* expected(const RMatrix*) { return "a rectangular list of rows of numbers"; }
const char* expected(const std::vector<int>*) { return "a list of integers"; }
const char* expected(const std::vector<double>*) { return "a list of numbers"; }
const char* expected(const std::vector<std::string>*) { return "a list of strings"; }
const char* expected(const std::vector<std::vector<double>>*) { return "a list of lists of numbers"; }

/// One JSON object being read; remembers which keys were consumed so the rest can be
/// reported as unknown.
class Section {
 public:
  Section(const json* node, std::string path, Errors& errors) : node_(node), path_(std::move(path)), errors_(&errors) {}

  bool present() const { return node_ != nullptr; }
  bool has(const char* key) const { return node_ && node_->contains(key); }
  std::string path(const std::string& key) const { return path_ + "/" + key; }
  const std::string& path() const { return path_; }
  Errors& errors() const { return *errors_; }

  template <class T>
  void get(const char* key, T& out, bool required = false) {
    seen_.insert(key);
    if (!has(key)) {
      if (required) errors_->add(path(key), "required field is missing");
      return;
    }
    T value{};
    if (decode((*node_)[key], value))
      out = std::move(value);
    else
      errors_->add(path(key), std::string("expected ") + expected(&value));
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!has(key) || (*node_)[key].is_null()) return;
    T value{};
    if (decode((*node_)[key], value))
      out = std::move(value);
    else
      errors_->add(path(key), std::string("expected ") + expected(&value));
  }

  Section child(const char* key, bool required = false) {
    seen_.insert(key);
    if (!has(key)) {
      if (required) errors_->add(path(key), "required section is missing");
      return Section(nullptr, path(key), *errors_);
    }
    const json& j = (*node_)[key];
    if (!j.is_object()) {
      errors_->add(path(key), "expected an object");
      return Section(nullptr, path(key), *errors_);
    }
    return Section(&j, path(key), *errors_);
  }

  std::vector<Section> children(const char* key) {
    seen_.insert(key);
    std::vector<Section> out;
    if (!has(key)) return out;
    const json& j = (*node_)[key];
    if (!j.is_array()) {
      errors_->add(path(key), "expected a list of objects");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path(key) + "/" + std::to_string(i);
      if (!j[i].is_object())
        errors_->add(p, "expected an object");
      else
        out.emplace_back(&j[i], p, *errors_);
    }
    return out;
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    return has(key) ? &(*node_)[key] : nullptr;
  }

  void finish() const {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!seen_.count(it.key())) errors_->add(path(it.key()), "unknown key");
  }

 private:
  const json* node_;
  std::string path_;
  Errors* errors_;
  std::set<std::string> seen_;
};

void check(Errors& e, bool ok, const std::string& path, const std::string& message) {
  if (!ok) e.add(path, message);
}

template <class F>
void check_parse(Errors& e, const std::string& path, F&& parse) {
  try {
    parse();
  } catch (const InvalidInput& ex) {
    e.add(path, ex.what());
  }
}

bool multiple_of(double t, double dt) {
  const double k = std::round(t / dt);
  return std::fabs(k * dt - t) <= 1e-9 * std::max(1.0, std::fabs(t));
}

// ---- per-block readers ----

void read_lattice(Section s, LatticeConfig& l) {
  s.get("dims", l.dims, true);
  s.get("box_length", l.box_length, true);
  s.get("spin_count", l.spin_count);
  if (s.has("mass"))
    s.get("mass", l.mass);
  else
    l.mass.assign(std::max(l.spin_count, 1), 1.0);
  s.get("units", l.units);
  if (s.has("chi"))
    s.get("chi", l.chi);
  else
    l.chi = RMatrix::Zero(std::max(l.spin_count, 1), std::max(l.spin_count, 1));
  s.get("trap", l.trap);
  s.get("internal_energy", l.internal_energy);
  s.finish();
  check(s.errors(), l.units == "dimensionless" || l.units == "si", s.path("units"), "expected dimensionless or si");
}

void read_ensemble(Section& s, EnsembleSettings& m) {
  s.get("trajectories", m.trajectories);
  s.get("dt", m.dt);
  s.get("t_max", m.t_max);
  s.get("samples", m.samples);
  s.get("threads", m.threads);
  s.get("reduction", m.reduction);
  s.get("groups", m.groups);
  s.get("scheme", m.scheme);
  s.get("midpoint_iterations", m.midpoint_iterations);
  s.get("interpretation", m.interpretation);
  s.get("divergence_ceiling", m.divergence_ceiling);
  s.get("unreliable_fraction", m.unreliable_fraction);
}

void validate_ensemble(const Section& s, const EnsembleSettings& m, bool needs_t_max) {
  Errors& e = s.errors();
  const bool trajectories_ok = m.trajectories >= 2;
  check(e, trajectories_ok, s.path("trajectories"), "must be at least 2");
  check(e, m.dt > 0.0, s.path("dt"), "must be positive");
  check(e, m.samples >= 1, s.path("samples"), "must be at least 1");
  if (needs_t_max) {
    check(e, m.t_max > 0.0, s.path("t_max"), "must be positive");
    if (m.t_max > 0.0 && m.dt > 0.0 && m.samples >= 1)
      check(e, multiple_of(m.t_max / m.samples, m.dt), s.path("t_max"), "t_max / samples must be a multiple of dt");
  }
  check(e, m.threads >= 1, s.path("threads"), "must be at least 1");
  check_parse(e, s.path("reduction"), [&] { parse_reduction(m.reduction); });
  if (trajectories_ok)
    check(e, m.groups >= 1 && m.groups <= m.trajectories, s.path("groups"), "must lie in [1, trajectories]");
  check_parse(e, s.path("scheme"), [&] { parse_scheme_kind(m.scheme); });
  check(e, m.midpoint_iterations >= 1, s.path("midpoint_iterations"), "must be at least 1");
  check_parse(e, s.path("interpretation"), [&] { parse_interpretation(m.interpretation); });
  check(e, m.divergence_ceiling > 0.0, s.path("divergence_ceiling"), "must be positive");
  check(e, m.unreliable_fraction >= 0.0 && m.unreliable_fraction <= 1.0, s.path("unreliable_fraction"),
        "must lie in [0, 1]");
}

std::vector<double> read_tau(Section& s, Errors& e) {
  const json* raw = s.raw("tau");
  if (!raw) {
    e.add(s.path("tau"), "required field is missing");
    return {};
  }
  std::vector<double> tau;
  if (decode(*raw, tau)) return tau;
  if (raw->is_object()) {
    Section grid(raw, s.path("tau"), e);
    double start = 0.0, stop = 0.0;
    int count = 0;
    grid.get("start", start, true);
    grid.get("stop", stop, true);
    grid.get("count", count, true);
    grid.finish();
    if (count < 2 || !(stop > start)) {
      e.add(s.path("tau"), "grid needs count >= 2 and stop > start");
      return {};
    }
    for (int i = 0; i < count; ++i) tau.push_back(start + (stop - start) * i / (count - 1));
    return tau;
  }
  e.add(s.path("tau"), "expected a list of numbers or {start, stop, count}");
  return {};
}

CriterionTheta parse_criterion(const std::string& name) {
  if (name == "minimize_product") return CriterionTheta::minimize_product;
  if (name == "local_optimal") return CriterionTheta::local_optimal;
  throw InvalidInput("unknown criterion_theta '" + name + "' (expected minimize_product|local_optimal)");
}

Statistics parse_statistics(const std::string& name) {
  if (name == "boson") return Statistics::boson;
  if (name == "fermion") return Statistics::fermion;
  throw InvalidInput("unknown statistics '" + name + "' (expected boson|fermion)");
}

// ---- engine builders, shared by validation and run ----

std::shared_ptr<const HubbardModel> build_model(const LatticeConfig& c) {
  LatticeSpec l;
  l.dims = c.dims;
  l.box_length = c.box_length;
  l.spin_count = c.spin_count;
  l.mass = c.mass;
  l.units = c.units == "si" ? Units::si : Units::dimensionless;
  l.validate();
  std::vector<double> potential(l.mode_count(), 0.0);
  if (!c.trap.empty()) {
    require(static_cast<int>(c.trap.size()) == l.spin_count, "trap needs one frequency list per spin");
    potential = harmonic_potential(l, c.trap);
  }
  return std::make_shared<const HubbardModel>(l, std::move(potential), c.chi, c.internal_energy);
}

CVector expand_amplitude(const CVector& a, int modes) {
  require(a.size() == 1 || a.size() == modes,
          "amplitude needs 1 or " + std::to_string(modes) + " entries, got " + std::to_string(a.size()));
  return a.size() == 1 ? CVector::Constant(modes, a[0]) : a;
}

SdeScheme build_scheme(const EnsembleSettings& m) {
  SdeScheme s;
  s.kind = parse_scheme_kind(m.scheme);
  s.dt = m.dt;
  s.midpoint_iterations = m.midpoint_iterations;
  s.interpretation = parse_interpretation(m.interpretation);
  s.divergence_ceiling = m.divergence_ceiling;
  return s;
}

EnsembleConfig build_ensemble(const EnsembleSettings& m, std::uint64_t seed) {
  EnsembleConfig c;
  c.seed = seed;
  c.trajectories = m.trajectories;
  c.dt = m.dt;
  c.threads = m.threads;
  c.reduction = parse_reduction(m.reduction);
  c.groups = m.groups;
  c.unreliable_fraction = m.unreliable_fraction;
  for (int i = 0; i <= m.samples; ++i) c.times.push_back(m.t_max * i / m.samples);
  return c;
}

WignerProblemSpec build_wigner(const WignerScenario& w, const std::vector<std::string>& observables) {
  WignerProblemSpec spec;
  spec.model = build_model(w.lattice);
  spec.initial = expand_amplitude(w.amplitude, spec.model->mode_count());
  spec.options.symmetric_correction = w.symmetric_correction;
  spec.options.scheme = build_scheme(w.ensemble);
  for (const auto& l : w.losses) spec.options.losses.push_back({l.multiplicity, l.rate});
  if (!observables.empty()) spec.observables = observables;
  return spec;
}

PlusPProblemSpec build_plusp(const PlusPScenario& p, const std::vector<std::string>& observables) {
  PlusPProblemSpec spec;
  spec.model = build_model(p.lattice);
  const int modes = spec.model->mode_count();
  switch (parse_state_family(p.family)) {
    case StateFamily::coherent:
      spec.initial = InitialState::coherent(expand_amplitude(p.amplitude, modes));
      break;
    case StateFamily::thermal: {
      auto occ = p.occupation;
      if (occ.size() == 1) occ.assign(modes, occ[0]);
      spec.initial = InitialState::thermal(occ);
      break;
    }
    case StateFamily::fock: {
      std::vector<int> occ;
      for (double n : p.occupation) {
        require(n >= 0.0 && n == std::floor(n), "Fock occupations must be non-negative integers");
        occ.push_back(static_cast<int>(n));
      }
      if (occ.size() == 1) occ.assign(modes, occ[0]);
      spec.initial = InitialState::fock(occ);
      break;
    }
  }
  require(spec.initial.mode_count() == modes, "initial state has " + std::to_string(spec.initial.mode_count()) +
                                                  " modes, the lattice has " + std::to_string(modes));
  spec.sampling = parse_plusp_sampling(p.sampling);
  spec.options.scheme = build_scheme(p.ensemble);
  spec.options.reversal_time = p.reversal_time;
  if (!observables.empty()) spec.observables = observables;
  return spec;
}

DoubleWellParams build_doublewell(const DoubleWellScenario& d) {
  DoubleWellParams p;
  p.atoms = d.atoms;
  p.alpha_squared = d.alpha_squared;
  p.a11 = d.a11;
  p.a22 = d.a22;
  p.a12 = d.a12;
  p.tau = d.tau;
  p.delta_theta = d.delta_theta;
  p.mixing_angle = d.mixing_angle;
  p.splitter_phase = d.splitter_phase;
  p.criterion_theta = parse_criterion(d.criterion_theta);
  p.truncation_tolerance = d.truncation_tolerance;
  return p;
}

std::vector<GaussianPoint> build_entropy(const EntropyScenario& s) {
  const Statistics species = parse_statistics(s.species);
  std::vector<GaussianPoint> points;
  for (const auto& p : s.points) {
    GaussianPoint g;
    g.species = species;
    g.n = p.n;
    g.weight = p.weight;
    points.push_back(std::move(g));
  }
  return points;
}

PolynomialHamiltonian build_hamiltonian(const VariationalScenario& v) {
  PolynomialHamiltonian h;
  h.omega = v.omega;
  h.chi = v.chi;
  h.validate();
  return h;
}

PropagationOptions build_propagation(const VariationalScenario& v) {
  PropagationOptions o;
  o.dt = v.dt;
  o.lambda = v.lambda;
  o.iterations = v.iterations;
  o.max_halvings = v.max_halvings;
  return o;
}

// ---- per-kind parsing ----

void parse_body(ScenarioKind kind, Section& model, Section& method, Scenario& s, Errors& e) {
  switch (kind) {
    case ScenarioKind::dimension_count: {
      DimensionScenario d;
      model.get("particles", d.particles, true);
      model.get("modes", d.modes, true);
      model.get("statistics", d.statistics);
      check(e, d.particles >= 0, model.path("particles"), "must be non-negative");
      check(e, d.modes >= 1, model.path("modes"), "must be at least 1");
      check_parse(e, model.path("statistics"), [&] { parse_statistics(d.statistics); });
      s.body = d;
      break;
    }
    case ScenarioKind::exact_doublewell: {
      DoubleWellScenario d;
      model.get("atoms", d.atoms);
      model.get("alpha_squared", d.alpha_squared);
      model.get("a11", d.a11);
      model.get("a22", d.a22);
      model.get("a12", d.a12);
      d.tau = read_tau(method, e);
      method.get("delta_theta", d.delta_theta);
      method.get("mixing_angle", d.mixing_angle);
      method.get("splitter_phase", d.splitter_phase);
      method.get("criterion_theta", d.criterion_theta);
      method.get("truncation_tolerance", d.truncation_tolerance);
      check(e, !d.atoms.empty(), model.path("atoms"), "needs at least one atom number");
      for (double n : d.atoms) check(e, n > 0.0, model.path("atoms"), "atom numbers must be positive");
      if (d.alpha_squared) check(e, *d.alpha_squared > 0.0, model.path("alpha_squared"), "must be positive");
      for (double t : d.tau) check(e, t >= 0.0, method.path("tau"), "tau values must be non-negative");
      check(e, d.truncation_tolerance > 0.0 && d.truncation_tolerance < 1.0, method.path("truncation_tolerance"),
            "must lie in (0, 1)");
      check_parse(e, method.path("criterion_theta"), [&] { parse_criterion(d.criterion_theta); });
      s.body = d;
      break;
    }
    case ScenarioKind::wigner: {
      WignerScenario w;
      read_lattice(model.child("lattice", true), w.lattice);
      Section initial = model.child("initial", true);
      initial.get("amplitude", w.amplitude, true);
      initial.finish();
      for (auto& loss : model.children("losses")) {
        LossConfig l;
        loss.get("multiplicity", l.multiplicity, true);
        loss.get("rate", l.rate, true);
        loss.finish();
        check(e, l.rate >= 0.0, loss.path("rate"), "must be non-negative");
        w.losses.push_back(l);
      }
      method.get("symmetric_correction", w.symmetric_correction);
      read_ensemble(method, w.ensemble);
      validate_ensemble(method, w.ensemble, true);
      s.body = w;
      break;
    }
    case ScenarioKind::plusp:
    case ScenarioKind::plusp_reverse: {
      const bool reverse = kind == ScenarioKind::plusp_reverse;
      PlusPScenario p;
      read_lattice(model.child("lattice", true), p.lattice);
      Section initial = model.child("initial", true);
      initial.get("family", p.family);
      initial.get("amplitude", p.amplitude);
      initial.get("occupation", p.occupation);
      initial.finish();
      check_parse(e, initial.path("family"), [&] {
        const auto f = parse_state_family(p.family);
        if (f == StateFamily::coherent)
          require(p.amplitude.size() > 0, "coherent states need an amplitude");
        else
          require(!p.occupation.empty(), "thermal and Fock states need an occupation");
      });
      method.get("sampling", p.sampling);
      check_parse(e, method.path("sampling"), [&] { parse_plusp_sampling(p.sampling); });
      if (reverse) {
        double tr = 0.0;
        method.get("reversal_time", tr, true);
        p.reversal_time = tr;
        method.get("mode", p.mode);
        method.get("error_ceiling", p.error_ceiling);
        check(e, p.mode >= 0, method.path("mode"), "must be non-negative");
        check(e, p.error_ceiling > 0.0, method.path("error_ceiling"), "must be positive");
      } else {
        method.get("reversal_time", p.reversal_time);
      }
      read_ensemble(method, p.ensemble);
      validate_ensemble(method, p.ensemble, !reverse);
      if (reverse)
        check(e, p.ensemble.samples >= 2 && p.ensemble.samples % 2 == 0, method.path("samples"),
              "must be even so the grid hits the reversal time");
      if (p.reversal_time) {
        check(e, *p.reversal_time > 0.0, method.path("reversal_time"), "must be positive");
        if (*p.reversal_time > 0.0 && p.ensemble.dt > 0.0)
          check(e, multiple_of(*p.reversal_time, p.ensemble.dt), method.path("reversal_time"),
                "must be a multiple of dt");
        if (reverse && *p.reversal_time > 0.0 && p.ensemble.dt > 0.0 && p.ensemble.samples >= 1)
          check(e, multiple_of(2.0 * *p.reversal_time / p.ensemble.samples, p.ensemble.dt), method.path("samples"),
                "2 reversal_time / samples must be a multiple of dt");
      }
      s.body = p;
      break;
    }
    case ScenarioKind::entropy: {
      EntropyScenario en;
      model.get("species", en.species);
      for (auto& point : model.children("points")) {
        EntropyPoint p;
        point.get("n", p.n, true);
        point.get("weight", p.weight);
        point.finish();
        check(e, p.n.rows() == p.n.cols(), point.path("n"), "must be square");
        check(e, p.weight >= 0.0, point.path("weight"), "must be non-negative");
        en.points.push_back(p);
      }
      if (!model.has("points")) e.add(model.path("points"), "required field is missing");
      method.get("pairing", en.pairing);
      check(e, en.points.size() >= 2 || !model.has("points"), model.path("points"), "needs at least 2 points");
      check_parse(e, model.path("species"), [&] { parse_statistics(en.species); });
      check_parse(e, method.path("pairing"), [&] { parse_pairing(en.pairing); });
      s.body = en;
      break;
    }
    case ScenarioKind::variational: {
      VariationalScenario v;
      model.get("omega", v.omega);
      if (model.has("chi")) model.get("chi", v.chi);
      else v.chi = RMatrix::Zero(v.omega.rows(), v.omega.cols());
      model.get("target", v.target, true);
      model.get("components", v.components);
      model.get("radius", v.radius);
      method.get("dt", v.dt);
      method.get("lambda", v.lambda);
      method.get("iterations", v.iterations);
      method.get("max_halvings", v.max_halvings);
      method.get("t_max", v.t_max);
      method.get("record_every", v.record_every);
      method.get("mode", v.mode);
      method.get("compare_exact", v.compare_exact);
      check(e, v.components >= 1, model.path("components"), "must be at least 1");
      check(e, v.radius >= 0.0, model.path("radius"), "must be non-negative");
      check(e, v.target.size() == 0 || v.target.size() == v.omega.rows(), model.path("target"),
            "needs one amplitude per mode of omega");
      check(e, v.dt > 0.0, method.path("dt"), "must be positive");
      check(e, v.lambda > 0.0, method.path("lambda"), "must be positive");
      check(e, v.iterations >= 1, method.path("iterations"), "must be at least 1");
      check(e, v.max_halvings >= 0, method.path("max_halvings"), "must be non-negative");
      check(e, v.t_max >= 0.0, method.path("t_max"), "must be non-negative");
      if (v.t_max > 0.0 && v.dt > 0.0) check(e, multiple_of(v.t_max, v.dt), method.path("t_max"), "must be a multiple of dt");
      check(e, v.record_every >= 1, method.path("record_every"), "must be at least 1");
      check(e, v.mode >= 0 && v.mode < v.omega.rows(), method.path("mode"), "out of range");
      if (v.compare_exact)
        check(e, v.omega.rows() == 1 && std::fabs(v.omega(0, 0).imag()) == 0.0, method.path("compare_exact"),
              "the exact oracle covers one mode with real omega only");
      s.body = v;
      break;
    }
  }
}

// Builds the engine objects once so model-level inconsistencies surface at validation time.
void dry_build(const Scenario& s, Errors& e) {
  try {
    std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, WignerScenario>) {
            validate_problem(build_wigner(b, s.observables));
          } else if constexpr (std::is_same_v<T, PlusPScenario>) {
            const auto spec = build_plusp(b, s.observables);
            validate_problem(spec);
            if (s.kind == ScenarioKind::plusp_reverse)
              require(b.mode < spec.model->mode_count(), "method.mode is out of range");
          } else if constexpr (std::is_same_v<T, DoubleWellScenario>) {
            build_doublewell(b);
          } else if constexpr (std::is_same_v<T, EntropyScenario>) {
            const auto points = build_entropy(b);
            for (const auto& p : points)
              require(p.n.rows() == points.front().n.rows(), "all points need the same dimension");
          } else if constexpr (std::is_same_v<T, VariationalScenario>) {
            build_hamiltonian(b);
          }
        },
        s.body);
  } catch (const InvalidInput& ex) {
    e.add("/model", ex.what());
  } catch (const std::exception& ex) {
    e.add("/model", ex.what());
  }
}

// ---- encoding ----

json encode(cplx c) {
  if (c.imag() == 0.0) return c.real();
  return json::array({c.real(), c.imag()});
}
json encode(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(encode(v[i]));
  return a;
}
json encode(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(encode(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}
json encode(const RMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json encode(const LatticeConfig& l) {
  json j = {{"dims", l.dims}, {"box_length", l.box_length}, {"spin_count", l.spin_count}, {"mass", l.mass},
            {"units", l.units}, {"chi", encode(l.chi)}};
  if (!l.trap.empty()) j["trap"] = l.trap;
  if (!l.internal_energy.empty()) j["internal_energy"] = l.internal_energy;
  return j;
}

void encode(const EnsembleSettings& m, json& j, bool with_t_max) {
  j["trajectories"] = m.trajectories;
  j["dt"] = m.dt;
  if (with_t_max) j["t_max"] = m.t_max;
  j["samples"] = m.samples;
  j["threads"] = m.threads;
  j["reduction"] = m.reduction;
  j["groups"] = m.groups;
  j["scheme"] = m.scheme;
  j["midpoint_iterations"] = m.midpoint_iterations;
  j["interpretation"] = m.interpretation;
  j["divergence_ceiling"] = m.divergence_ceiling;
  j["unreliable_fraction"] = m.unreliable_fraction;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ScenarioInvalid(std::vector<ScenarioError>{{"", "a scenario must be a JSON object"}});
  Errors e;
  Section root(&doc, "", e);
  Scenario s;
  std::string kind;
  root.get("kind", kind, true);
  std::optional<ScenarioKind> parsed;
  if (!kind.empty()) check_parse(e, "/kind", [&] { parsed = parse_scenario_kind(kind); });
  root.get("name", s.name);
  root.get("description", s.description);
  root.get("seed", s.seed);
  root.get("observables", s.observables);
  Section output = root.child("output");
  output.get("stem", s.output_stem);
  output.finish();
  if (const json* meta = root.raw("metadata")) {
    if (meta->is_object())
      s.metadata = *meta;
    else
      e.add("/metadata", "expected an object");
  }
  check(e, !s.name.empty() && s.name.find('/') == std::string::npos, "/name", "must be a non-empty file-name stem");

  Section model = root.child("model", parsed.has_value());
  Section method = root.child("method");
  if (parsed) {
    s.kind = *parsed;
    parse_body(*parsed, model, method, s, e);
    const bool takes_observables = s.kind == ScenarioKind::wigner || s.kind == ScenarioKind::plusp;
    if (!takes_observables) check(e, s.observables.empty(), "/observables", "not used by " + kind + " scenarios");
  }
  model.finish();
  method.finish();
  root.finish();
  if (e.list.empty()) dry_build(s, e);
  if (!e.list.empty()) throw ScenarioInvalid(std::move(e.list));
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ScenarioInvalid(std::vector<ScenarioError>{{"", std::string("not valid JSON: ") + ex.what()}});
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioInvalid(std::vector<ScenarioError>{{"", "cannot read " + file.string()}});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

json serialize(const Scenario& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["seed"] = s.seed;
  if (!s.observables.empty()) j["observables"] = s.observables;
  if (!s.output_stem.empty()) j["output"] = {{"stem", s.output_stem}};
  if (!s.metadata.empty()) j["metadata"] = s.metadata;
  json model = json::object(), method = json::object();
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, DimensionScenario>) {
          model = {{"particles", b.particles}, {"modes", b.modes}, {"statistics", b.statistics}};
        } else if constexpr (std::is_same_v<T, DoubleWellScenario>) {
          model = {{"atoms", b.atoms}, {"a11", b.a11}, {"a22", b.a22}, {"a12", b.a12}};
          if (b.alpha_squared) model["alpha_squared"] = *b.alpha_squared;
          method = {{"tau", b.tau},
                    {"mixing_angle", b.mixing_angle},
                    {"splitter_phase", b.splitter_phase},
                    {"criterion_theta", b.criterion_theta},
                    {"truncation_tolerance", b.truncation_tolerance}};
          if (b.delta_theta) method["delta_theta"] = *b.delta_theta;
        } else if constexpr (std::is_same_v<T, WignerScenario>) {
          model["lattice"] = encode(b.lattice);
          model["initial"] = {{"amplitude", encode(b.amplitude)}};
          if (!b.losses.empty()) {
            json losses = json::array();
            for (const auto& l : b.losses) losses.push_back({{"multiplicity", l.multiplicity}, {"rate", l.rate}});
            model["losses"] = losses;
          }
          method["symmetric_correction"] = b.symmetric_correction;
          encode(b.ensemble, method, true);
        } else if constexpr (std::is_same_v<T, PlusPScenario>) {
          const bool reverse = s.kind == ScenarioKind::plusp_reverse;
          model["lattice"] = encode(b.lattice);
          json initial = {{"family", b.family}};
          if (b.amplitude.size() > 0) initial["amplitude"] = encode(b.amplitude);
          if (!b.occupation.empty()) initial["occupation"] = b.occupation;
          model["initial"] = initial;
          method["sampling"] = b.sampling;
          if (b.reversal_time) method["reversal_time"] = *b.reversal_time;
          if (reverse) {
            method["mode"] = b.mode;
            method["error_ceiling"] = b.error_ceiling;
          }
          encode(b.ensemble, method, !reverse);
        } else if constexpr (std::is_same_v<T, EntropyScenario>) {
          json points = json::array();
          for (const auto& p : b.points) points.push_back({{"n", encode(p.n)}, {"weight", p.weight}});
          model = {{"species", b.species}, {"points", points}};
          method = {{"pairing", b.pairing}};
        } else if constexpr (std::is_same_v<T, VariationalScenario>) {
          model = {{"omega", encode(b.omega)},   {"chi", encode(b.chi)},         {"target", encode(b.target)},
                   {"components", b.components}, {"radius", b.radius}};
          method = {{"dt", b.dt},
                    {"lambda", b.lambda},
                    {"iterations", b.iterations},
                    {"max_halvings", b.max_halvings},
                    {"t_max", b.t_max},
                    {"record_every", b.record_every},
                    {"mode", b.mode},
                    {"compare_exact", b.compare_exact}};
        }
      },
      s.body);
  j["model"] = model;
  if (!method.empty()) j["method"] = method;
  return j;
}

std::string parameter_hash(const Scenario& scenario) {
  const std::string text = serialize(scenario).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- running ----

namespace {

std::string csv_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << csv_field(header[i]);
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << csv_number(values[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// scalar summaries keep NaN out of JSON as null
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Outcome {
  json summary;
  std::string message;
  int exit_code = kExitOk;
  std::vector<std::uint64_t> diverged;
  bool has_csv = false;
};

Outcome run_dimension(const DimensionScenario& d) {
  const auto count = hilbert_dimension(d.particles, d.modes, parse_statistics(d.statistics));
  Outcome o;
  o.summary = {{"particles", d.particles}, {"modes", d.modes}, {"statistics", d.statistics}, {"log10", count.log10}};
  if (count.exact) {
    o.summary["exact"] = count.exact->str();
    o.message = count.exact->str();
  } else {
    o.summary["exact"] = nullptr;
    char buf[64];
    std::snprintf(buf, sizeof buf, "10^%.6f", count.log10);
    o.message = buf;
  }
  return o;
}

Outcome run_doublewell_scenario(const DoubleWellScenario& d, const std::filesystem::path& csv) {
  const auto rows = run_double_well(build_doublewell(d));
  CsvWriter w(csv, {"atoms", "tau", "theta", "variance", "variance_perp", "n0", "S_dB", "S_perp_dB",
                    "uncertainty_slack", "ent_theta", "v_minus", "v_plus", "S_plus_dB", "S_minus_dB", "E_product",
                    "E_sum", "truncation_loss"});
  double min_s = std::numeric_limits<double>::infinity(), min_e = min_s, max_loss = 0.0;
  for (const auto& r : rows) {
    w.row({r.atoms, r.tau, r.local.theta, r.local.variance, r.local.variance_perp, r.local.n0, r.local.s_db,
           r.local.s_perp_db, r.local.uncertainty_slack, r.after.theta, r.after.v_minus, r.after.v_plus,
           r.after.s_plus_db, r.after.s_minus_db, r.after.e_product, r.after.e_sum, r.truncation_loss});
    min_s = std::min(min_s, r.local.s_db);
    if (r.after.defined) min_e = std::min(min_e, r.after.e_product);
    max_loss = std::max(max_loss, r.truncation_loss);
  }
  Outcome o;
  o.has_csv = true;
  o.summary = {{"rows", rows.size()},
               {"min_S_dB", number_or_null(min_s)},
               {"min_E_product", number_or_null(min_e)},
               {"squeezed", min_s < 0.0},
               {"entangled", min_e < 1.0},
               {"max_truncation_loss", max_loss}};
  char buf[128];
  std::snprintf(buf, sizeof buf, "min S_dB %.4g, min E_product %.4g", min_s, min_e);
  o.message = buf;
  return o;
}

Outcome write_ensemble(const EnsembleResult& r, const std::filesystem::path& csv) {
  std::vector<std::string> header{"t"};
  for (const auto& name : r.observables)
    for (const char* suffix : {"_re", "_im", "_err_re", "_err_im"}) header.push_back(name + suffix);
  header.push_back("diverged");
  CsvWriter w(csv, header);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    std::vector<double> row{r.times[k]};
    for (std::size_t i = 0; i < r.observables.size(); ++i) {
      const cplx m = r.mean(i, k), e = r.error(i, k);
      row.insert(row.end(), {m.real(), m.imag(), e.real(), e.imag()});
    }
    row.push_back(static_cast<double>(r.diverged[k]));
    w.row(row);
  }
  Outcome o;
  o.has_csv = true;
  o.diverged = r.diverged;
  o.summary = {{"trajectories", r.trajectories},
               {"diverged", r.diverged.empty() ? 0 : r.diverged.back()},
               {"unreliable", r.unreliable}};
  o.exit_code = r.unreliable ? kExitInconclusive : kExitOk;
  o.message = std::to_string(r.trajectories) + " trajectories, " + std::to_string(r.diverged.back()) + " diverged" +
              (r.unreliable ? " (unreliable)" : "");
  return o;
}

bool has_spin_moments(const EnsembleResult& r) {
  for (const auto& name : wigner_spin_moment_names())
    if (std::find(r.observables.begin(), r.observables.end(), name) == r.observables.end()) return false;
  return true;
}

// xi^2 per output time, with its minimum, for runs that recorded the spin moments
void add_xi2(const EnsembleResult& r, int cells, Outcome& o) {
  json xi2 = json::array(), err = json::array();
  double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const auto x = wigner_xi2(r, k, cells);
    xi2.push_back(number_or_null(x.defined ? x.xi2 : std::nan("")));
    err.push_back(number_or_null(x.defined ? x.error : std::nan("")));
    if (x.defined && x.xi2 < best) best = x.xi2, best_t = r.times[k];
  }
  o.summary["xi2"] = xi2;
  o.summary["xi2_error"] = err;
  if (std::isfinite(best)) {
    o.summary["xi2_min"] = best;
    o.summary["xi2_min_time"] = best_t;
    char buf[96];
    std::snprintf(buf, sizeof buf, "; min xi2 %.4g (%.2f dB) at t = %.4g", best, 10 * std::log10(best), best_t);
    o.message += buf;
  }
}

Outcome run_reverse(const PlusPScenario& p, std::uint64_t seed, const std::filesystem::path& csv) {
  auto spec = build_plusp(p, {});
  spec.options.reversal_time.reset();  // the reversal helper sets it
  auto config = build_ensemble(p.ensemble, seed);
  const auto rep = time_reversal_test(spec, config, *p.reversal_time, p.ensemble.samples, p.mode, p.error_ceiling);
  CsvWriter w(csv, {"t", "X", "X_err"});
  for (std::size_t k = 0; k < rep.times.size(); ++k) w.row({rep.times[k], rep.x_mean[k], rep.x_error[k]});
  Outcome o;
  o.has_csv = true;
  o.summary = {{"reversal_time", *p.reversal_time},
               {"initial_x", rep.initial_x},
               {"final_x", rep.x_mean.back()},
               {"residual", rep.residual},
               {"final_error", rep.final_error},
               {"initial_spread", rep.initial_spread},
               {"final_spread", rep.final_spread},
               {"recovered", rep.recovered},
               {"inconclusive", rep.inconclusive}};
  o.exit_code = rep.inconclusive ? kExitInconclusive : kExitOk;
  char buf[160];
  std::snprintf(buf, sizeof buf, "|X(2tau) - X(0)| = %.4g, error bar %.4g: %s", rep.residual, rep.final_error,
                rep.inconclusive ? "inconclusive" : (rep.recovered ? "recovered" : "not recovered"));
  o.message = buf;
  return o;
}

Outcome run_entropy_scenario(const EntropyScenario& s) {
  const auto points = build_entropy(s);
  const auto est = renyi_entropy(points, parse_pairing(s.pairing));
  Outcome o;
  o.summary = {{"s2", number_or_null(est.s2)},
               {"error", number_or_null(est.error)},
               {"purity", {est.purity.real(), est.purity.imag()}},
               {"purity_error", est.purity_error},
               {"pair_count", est.pair_count},
               {"defined", est.defined},
               {"sign_problem", est.sign_problem}};
  char buf[96];
  if (est.defined)
    std::snprintf(buf, sizeof buf, "S2 = %.10g +- %.3g", est.s2, est.error);
  else
    std::snprintf(buf, sizeof buf, "S2 undefined (purity estimate %.3g is not positive)", est.purity.real());
  o.message = buf;
  return o;
}

Outcome run_variational_scenario(const VariationalScenario& v, const std::filesystem::path& csv) {
  const auto h = build_hamiltonian(v);
  const auto trace =
      run_variational(coherent_ring(v.target, v.components, v.radius), h, build_propagation(v), v.t_max,
                      v.record_every, v.mode);
  std::vector<std::string> header{"t", "X", "Y", "log_norm", "norm", "energy"};
  if (v.compare_exact) header.insert(header.end(), {"X_exact", "Y_exact"});
  CsvWriter w(csv, header);
  double norm_drift = 0.0, energy_drift = 0.0, err_x = 0.0, err_y = 0.0;
  const double e0 = trace.energy.front();
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    const double ratio = std::exp(trace.log_norm[i] - trace.log_norm.front());
    std::vector<double> row{trace.t[i], trace.x[i], trace.y[i], trace.log_norm[i], ratio, trace.energy[i]};
    norm_drift = std::max(norm_drift, std::fabs(ratio - 1.0));
    energy_drift = std::max(energy_drift, std::fabs(trace.energy[i] - e0) / std::max(std::fabs(e0), 1e-300));
    if (v.compare_exact) {
      const cplx exact =
          std::exp(-kI * v.omega(0, 0).real() * trace.t[i]) * kerr_single_mode_mean(v.target[0], v.chi(0, 0), trace.t[i]);
      row.push_back(exact.real());
      row.push_back(exact.imag());
      err_x = std::max(err_x, std::fabs(trace.x[i] - exact.real()));
      err_y = std::max(err_y, std::fabs(trace.y[i] - exact.imag()));
    }
    w.row(row);
  }
  Outcome o;
  o.has_csv = true;
  o.summary = {{"components", v.components},
               {"steps", trace.t.empty() ? 0 : static_cast<long>(std::llround(v.t_max / v.dt))},
               {"substeps", trace.substeps},
               {"norm_drift", norm_drift},
               {"energy_drift", energy_drift}};
  char buf[160];
  if (v.compare_exact) {
    o.summary["max_error_x"] = err_x;
    o.summary["max_error_y"] = err_y;
    std::snprintf(buf, sizeof buf, "max |X - X_exact| %.4g, max |Y - Y_exact| %.4g", err_x, err_y);
  } else {
    std::snprintf(buf, sizeof buf, "norm drift %.3g, energy drift %.3g", norm_drift, energy_drift);
  }
  o.message = buf;
  return o;
}

}  // namespace

RunReport run_scenario(Scenario s, const RunOptions& options) {
  if (options.seed) s.seed = *options.seed;
  auto apply_overrides = [&](EnsembleSettings& m) {
    if (options.threads) m.threads = *options.threads;
    if (options.deterministic) m.reduction = "deterministic";
  };
  if (auto* w = std::get_if<WignerScenario>(&s.body)) apply_overrides(w->ensemble);
  if (auto* p = std::get_if<PlusPScenario>(&s.body)) apply_overrides(p->ensemble);
  // re-validate after overrides
  s = parse_scenario(serialize(s));

  std::filesystem::create_directories(options.out_dir);
  const auto csv = options.out_dir / (s.stem() + ".csv");
  const auto report_json = options.out_dir / (s.stem() + ".json");
  const auto manifest_json = options.out_dir / (s.stem() + ".manifest.json");

  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  switch (s.kind) {
    case ScenarioKind::dimension_count:
      out = run_dimension(std::get<DimensionScenario>(s.body));
      break;
    case ScenarioKind::exact_doublewell:
      out = run_doublewell_scenario(std::get<DoubleWellScenario>(s.body), csv);
      break;
    case ScenarioKind::wigner: {
      const auto& w = std::get<WignerScenario>(s.body);
      const auto r = run_wigner(build_wigner(w, s.observables), build_ensemble(w.ensemble, s.seed));
      out = write_ensemble(r, csv);
      if (has_spin_moments(r)) add_xi2(r, build_model(w.lattice)->lattice().cells(), out);
      break;
    }
    case ScenarioKind::plusp: {
      const auto& p = std::get<PlusPScenario>(s.body);
      out = write_ensemble(run_plusp(build_plusp(p, s.observables), build_ensemble(p.ensemble, s.seed)), csv);
      break;
    }
    case ScenarioKind::plusp_reverse:
      out = run_reverse(std::get<PlusPScenario>(s.body), s.seed, csv);
      break;
    case ScenarioKind::entropy:
      out = run_entropy_scenario(std::get<EntropyScenario>(s.body));
      break;
    case ScenarioKind::variational:
      out = run_variational_scenario(std::get<VariationalScenario>(s.body), csv);
      break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunReport report;
  report.exit_code = out.exit_code;
  report.summary = out.summary;
  report.message = out.message;
  if (out.has_csv) report.files.push_back(csv);
  write_json(report_json, out.summary);
  report.files.push_back(report_json);

  json outputs = json::array();
  for (const auto& f : report.files) outputs.push_back(f.filename().string());
  report.manifest = {{"tool", "qdyn"},
                     {"version", QDYN_VERSION},
                     {"kind", to_string(s.kind)},
                     {"seed", s.seed},
                     {"parameter_hash", parameter_hash(s)},
                     {"diverged", out.diverged},
                     {"wall_time_s", wall},
                     {"exit_code", out.exit_code},
                     {"outputs", outputs},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"scenario", serialize(s)}};
  write_json(manifest_json, report.manifest);
  report.files.push_back(manifest_json);
  return report;
}

}  // namespace qdyn
