#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "levi/expr.hpp"
#include "levi/kernel_io.hpp"
#include "levi/mc.hpp"
#include "levi/model.hpp"
#include "levi/parametrix.hpp"
#include "levi/resolvent.hpp"
#include "levi/sde.hpp"
#include "levi/verifiers.hpp"

namespace levi {

inline const std::vector<std::string>& experiment_order() {
  static const std::vector<std::string> v{"assemble", "verify", "simulate", "compare", "zvonkin", "uniqueness"};
  return v;
}

struct SimulateSection {
  EnsembleConfig ensemble;
};

struct CompareSection {
  double time = 0.5;
};

struct ZvonkinSection {
  double x0 = 0.0;
  double horizon = 1.0;
  double dt = 1.0 / 512;
  double record_dt = 1.0 / 64;
  int paths = 0;  ///< 0 skips the coupled simulation
};

struct UniquenessSection {
  double x0 = 0.0;
  double horizon = 1.0;
  std::vector<double> dts{1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  int paths = 2000;
};

struct VerifySection {
  std::vector<std::string> bounds;  ///< empty selects every bound the model supports
  std::vector<double> times{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2};
  int pairs = 100;
  double threshold = 0.25;
};

struct ExperimentConfig {
  std::string preset;  ///< empty for inline coefficients
  std::map<std::string, std::string> expressions;
  ModelSpec model;
  ParametrixConfig grid;
  double epsilon = 1e-3;
  SimulateSection simulate;
  CompareSection compare;
  ResolventConfig resolvent;
  ZvonkinSection zvonkin;
  UniquenessSection uniqueness;
  VerifySection verify;
  std::vector<std::string> experiments;  ///< in dependency order, dependencies included
  std::vector<std::string> requested;
  std::uint64_t seed = 0;
  std::string out = "out";
  int workers = 1;
  std::string canonical;  ///< effective configuration as INI text, without run.out and run.workers

  bool has(const std::string& e) const { return std::find(experiments.begin(), experiments.end(), e) != experiments.end(); }
  std::uint64_t hash() const { return fnv1a(canonical); }

  static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
  }
};

//! Overrides applied after parsing, as from the command line.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<double> tolerance;
};

struct KatoCheck {
  bool declared = false;
  KatoNorm norm;
};

//! Runs kato_norm on the declared h of a model, with T = 1.
inline KatoCheck kato_check(const ModelSpec& m) {
  KatoCheck k;
  if (!m.kato_h) return k;
  k.declared = true;
  KatoFunction f{m.kato_h, KatoFunction::Class::bounded, {}};
  std::vector<double> probes;
  for (int i = 0; i <= 16; ++i) probes.push_back(-4.0 + 0.5 * i);
  k.norm = kato_norm(f, 1.0, probes);
  return k;
}

namespace config_detail {

using boost::property_tree::ptree;

[[noreturn]] inline void invalid(const std::string& field, const std::string& what) {
  fail(ErrorKind::validation, field + " " + what);
}

inline std::string reason(const Error& e) {
  const std::string w = e.what();
  const auto k = w.find(": ");
  return k == std::string::npos ? w : w.substr(k + 2);
}

inline std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && sp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && sp(s[i])) ++i;
  return s.substr(i);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

//! Numbers accept the expression grammar, so "1/64" and "2*pi" are valid.
inline double number(const std::string& field, const std::string& text) {
  Expression e;
  try {
    e = Expression::parse(text);
  } catch (const Error& err) {
    invalid(field, "is not a number: " + reason(err));
  }
  if (e.uses('x') || e.uses('z')) invalid(field, "must be a constant");
  const double v = e(0.0, 0.0);
  if (!std::isfinite(v)) invalid(field, "must be finite");
  return v;
}

inline long integer(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  invalid(field, "must be an integer");
}

class Reader {
 public:
  explicit Reader(ptree& t) : t_(t) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
    auto s = t_.get_child_optional(section);
    if (!s) return std::nullopt;
    auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }
  void real(const std::string& section, const std::string& key, double& v) {
    if (auto s = get(section, key)) v = number(section + "." + key, *s);
  }
  void whole(const std::string& section, const std::string& key, int& v) {
    if (auto s = get(section, key)) v = static_cast<int>(integer(section + "." + key, *s));
  }
  void reals(const std::string& section, const std::string& key, std::vector<double>& v) {
    if (auto s = get(section, key)) {
      v.clear();
      for (const auto& item : split_list(*s)) v.push_back(number(section + "." + key, item));
    }
  }

  //! Rejects sections and keys that were never queried.
  void check_unknown() const {
    for (const auto& [section, body] : t_) {
      if (body.empty()) invalid(section, "is not inside a section");
      for (const auto& [key, value] : body)
        if (!seen_.count(section + "." + key)) invalid(section + "." + key, "is not a recognized field");
    }
  }

 private:
  ptree& t_;
  std::set<std::string> seen_;
};

inline void positive(const std::string& field, double v) {
  if (!(v > 0)) invalid(field, "must be positive");
}
inline void unit_interval(const std::string& field, double v) {
  if (!(v > 0 && v <= 1)) invalid(field, "must lie in (0, 1]");
}

inline ModelSpec inline_model(Reader& r, std::map<std::string, std::string>& exprs) {
  ModelSpec m;
  m.name = "custom";
  if (auto n = r.get("model", "name")) m.name = *n;
  auto expression = [&](const std::string& key, bool required, bool allow_z) -> std::optional<Expression> {
    auto s = r.get("model", key);
    if (!s) {
      if (required) invalid("model." + key, "is required when no preset is given");
      return std::nullopt;
    }
    Expression e;
    try {
      e = Expression::parse(*s);
    } catch (const Error& err) {
      invalid("model." + key, "does not parse: " + reason(err));
    }
    if (!allow_z && e.uses('z')) invalid("model." + key, "may depend on x only");
    exprs[key] = *s;
    return e;
  };
  const auto kappa = *expression("kappa", true, true);
  m.kappa = [kappa](double x, double z) { return kappa(x, z); };
  if (auto b = expression("b", false, false)) m.b = [b = *b](double x) { return b(x); };
  if (auto h = expression("kato_h", false, false)) m.kato_h = [h = *h](double x) { return h(x); };
  r.real("model", "kappa0", m.kappa0);
  r.real("model", "kappa1", m.kappa1);
  r.real("model", "kappa2", m.kappa2);
  r.real("model", "beta", m.beta);
  r.real("model", "b_sup", m.b_sup);
  r.real("model", "b_holder", m.b_holder);
  r.real("model", "theta", m.theta);
  r.real("model", "period", m.period);
  double kbar = 1.0;
  r.real("noise", "kbar", kbar);
  positive("noise.kbar", kbar);
  m.noise = IsotropicKernelSpec<1>::constant(kbar);
  m.sigma_max = m.kappa1 / kbar;
  r.real("model", "sigma_max", m.sigma_max);

  positive("model.kappa0", m.kappa0);
  if (!(m.kappa1 >= m.kappa0)) invalid("model.kappa1", "must be at least model.kappa0");
  if (!(m.kappa2 >= 0)) invalid("model.kappa2", "must be nonnegative");
  unit_interval("model.beta", m.beta);
  unit_interval("model.theta", m.theta);
  if (!(m.b_sup >= 0)) invalid("model.b_sup", "must be nonnegative");
  if (!(m.b_holder >= 0)) invalid("model.b_holder", "must be nonnegative");
  if (!(m.period >= 0)) invalid("model.period", "must be nonnegative");
  return m;
}

inline std::string render(const ptree& t) {
  std::ostringstream os;
  boost::property_tree::write_ini(os, t);
  return os.str();
}

}  // namespace config_detail

//! Parses and validates an INI configuration; every error names the offending field.
inline ExperimentConfig parse_config(std::istream& is, const ConfigOverrides& o = {}) {
  using namespace config_detail;
  ptree t;
  try {
    boost::property_tree::read_ini(is, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorKind::validation, std::string("config does not parse: ") + e.message() + " at line " +
                                    std::to_string(e.line()));
  }
  if (o.seed) t.put("run.seed", std::to_string(*o.seed));
  if (o.out) t.put("run.out", *o.out);
  if (o.workers) t.put("run.workers", std::to_string(*o.workers));
  if (o.tolerance) t.put("grid.tolerance", io::full(*o.tolerance));

  ExperimentConfig c;
  Reader r(t);

  if (auto p = r.get("model", "preset")) {
    const auto names = presets::names();
    if (std::find(names.begin(), names.end(), *p) == names.end()) invalid("model.preset", "names no preset: '" + *p + "'");
    c.preset = *p;
    c.model = presets::by_name(*p);
    auto mt = t.get_child_optional("model");
    for (const auto& [key, value] : *mt)
      if (key != "preset") invalid("model." + key, "cannot be combined with model.preset");
    if (auto nt = t.get_child_optional("noise"))
      if (nt->get_child_optional("kbar")) invalid("noise.kbar", "cannot be combined with model.preset");
  } else {
    c.model = inline_model(r, c.expressions);
  }
  try {
    c.model.validate();
  } catch (const Error& e) {
    fail(ErrorKind::validation, "model " + reason(e));
  }

  auto& g = c.grid;
  g.core = 4.0;
  g.outer = 100.0;
  r.real("grid", "horizon", g.horizon);
  r.whole("grid", "steps", g.steps);
  r.real("grid", "core", g.core);
  r.real("grid", "step", g.step);
  r.real("grid", "outer", g.outer);
  r.real("grid", "growth", g.growth);
  r.whole("grid", "gauss_nodes", g.gauss_nodes);
  r.whole("grid", "max_order", g.max_order);
  r.real("grid", "tolerance", g.tolerance);
  positive("grid.horizon", g.horizon);
  if (g.steps < 2) invalid("grid.steps", "must be at least 2");
  positive("grid.step", g.step);
  if (!(g.core >= g.step)) invalid("grid.core", "must be at least grid.step");
  if (!(g.outer >= g.core)) invalid("grid.outer", "must be at least grid.core");
  if (!(g.growth > 1)) invalid("grid.growth", "must exceed 1");
  if (g.gauss_nodes < 1) invalid("grid.gauss_nodes", "must be positive");
  if (g.max_order < 1) invalid("grid.max_order", "must be positive");
  if (!(g.tolerance > 0 && g.tolerance < 1)) invalid("grid.tolerance", "must lie in (0, 1)");

  r.real("noise", "epsilon", c.epsilon);
  if (!(c.epsilon > 0 && c.epsilon < 1)) invalid("noise.epsilon", "must lie in (0, 1)");

  auto& e = c.simulate.ensemble;
  r.real("simulate", "x0", e.x0);
  r.real("simulate", "horizon", e.horizon);
  r.real("simulate", "dt", e.dt);
  r.real("simulate", "record_dt", e.record_dt);
  r.whole("simulate", "paths", e.paths);
  positive("simulate.horizon", e.horizon);
  positive("simulate.dt", e.dt);
  positive("simulate.record_dt", e.record_dt);
  if (e.paths < 1) invalid("simulate.paths", "must be positive");
  e.epsilon = c.epsilon;

  r.real("compare", "time", c.compare.time);
  positive("compare.time", c.compare.time);

  r.real("resolvent", "lambda", c.resolvent.lambda);
  r.real("resolvent", "tolerance", c.resolvent.tolerance);
  r.whole("resolvent", "singular_nodes", c.resolvent.singular_nodes);
  if (!(c.resolvent.lambda >= 0)) invalid("resolvent.lambda", "must be nonnegative (0 selects it automatically)");
  positive("resolvent.tolerance", c.resolvent.tolerance);
  if (c.resolvent.singular_nodes < 1) invalid("resolvent.singular_nodes", "must be positive");

  auto& z = c.zvonkin;
  r.real("zvonkin", "x0", z.x0);
  r.real("zvonkin", "horizon", z.horizon);
  r.real("zvonkin", "dt", z.dt);
  r.real("zvonkin", "record_dt", z.record_dt);
  r.whole("zvonkin", "paths", z.paths);
  positive("zvonkin.horizon", z.horizon);
  positive("zvonkin.dt", z.dt);
  positive("zvonkin.record_dt", z.record_dt);
  if (z.paths < 0) invalid("zvonkin.paths", "must be nonnegative");

  auto& u = c.uniqueness;
  r.real("uniqueness", "x0", u.x0);
  r.real("uniqueness", "horizon", u.horizon);
  r.reals("uniqueness", "dts", u.dts);
  r.whole("uniqueness", "paths", u.paths);
  positive("uniqueness.horizon", u.horizon);
  if (u.dts.size() < 2) invalid("uniqueness.dts", "needs at least two entries");
  for (std::size_t i = 0; i < u.dts.size(); ++i) {
    positive("uniqueness.dts", u.dts[i]);
    if (i > 0 && !(u.dts[i] < u.dts[i - 1])) invalid("uniqueness.dts", "must be strictly decreasing");
  }
  if (u.paths < 2) invalid("uniqueness.paths", "must be at least 2");

  auto& v = c.verify;
  if (auto s = r.get("verify", "bounds")) {
    if (*s != "all") {
      v.bounds = split_list(*s);
      const auto& ids = bound_ids();
      for (const auto& id : v.bounds)
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) invalid("verify.bounds", "names an unknown bound '" + id + "'");
    }
  }
  r.reals("verify", "times", v.times);
  r.whole("verify", "pairs", v.pairs);
  r.real("verify", "threshold", v.threshold);
  if (v.times.size() < 2) invalid("verify.times", "needs at least two entries");
  for (double tt : v.times) positive("verify.times", tt);
  if (v.pairs < 1) invalid("verify.pairs", "must be positive");
  positive("verify.threshold", v.threshold);

  auto seed = r.get("run", "seed");
  if (!seed) invalid("run.seed", "is required");
  const long sv = integer("run.seed", *seed);
  if (sv < 0) invalid("run.seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(sv);
  e.seed = c.seed;
  if (auto out = r.get("run", "out")) c.out = *out;
  if (c.out.empty()) invalid("run.out", "must not be empty");
  r.whole("run", "workers", c.workers);
  if (c.workers < 1) invalid("run.workers", "must be positive");
  auto ex = r.get("run", "experiments");
  if (!ex) invalid("run.experiments", "is required");
  c.requested = split_list(*ex);
  if (c.requested.empty()) invalid("run.experiments", "must list at least one experiment");
  std::set<std::string> want;
  for (const auto& name : c.requested) {
    const auto& all = experiment_order();
    if (std::find(all.begin(), all.end(), name) == all.end()) invalid("run.experiments", "names an unknown experiment '" + name + "'");
    want.insert(name);
  }
  if (want.count("verify") || want.count("compare")) want.insert("assemble");
  if (want.count("compare")) want.insert("simulate");
  for (const auto& name : experiment_order())
    if (want.count(name)) c.experiments.push_back(name);

  if (c.has("zvonkin") && !(c.model.period > 0)) invalid("run.experiments", "zvonkin needs a model with model.period > 0");
  if (c.has("compare")) {
    const TimeGrid tg{g.horizon / g.steps, g.steps};
    if (tg.index_of(c.compare.time) < 0) invalid("compare.time", "must be a node of the grid time mesh");
    const double k = c.compare.time / e.record_dt;
    if (std::abs(k - std::round(k)) > 1e-9 || c.compare.time > e.horizon + 1e-12)
      invalid("compare.time", "must be a recorded simulation time");
  }
  if (c.has("verify")) {
    const TimeGrid tg{g.horizon / g.steps, g.steps};
    for (double tt : v.times)
      if (tg.index_of(tt) < 0) invalid("verify.times", "must be nodes of the grid time mesh");
  }

  r.check_unknown();
  // Output location and thread count do not change any emitted number.
  ptree canon = t;
  if (auto run = canon.get_child_optional("run")) {
    run->erase("out");
    run->erase("workers");
  }
  c.canonical = render(canon);
  return c;
}

inline ExperimentConfig load_config(const std::string& path, const ConfigOverrides& o = {}) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::validation, "config file '" + path + "' cannot be opened");
  return parse_config(is, o);
}

}  // namespace levi
