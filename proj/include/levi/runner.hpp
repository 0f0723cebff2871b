#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "levi/config.hpp"
#include "levi/kernel_io.hpp"
#include "levi/mc.hpp"
#include "levi/verifiers.hpp"

namespace levi {

inline constexpr const char* version = "1.0.0";

//! Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kernel = "kernel.levi";
inline constexpr const char* bounds = "bounds.json";
inline constexpr const char* summary = "bounds.txt";
inline constexpr const char* paths = "paths.csv";
inline constexpr const char* compare = "compare.json";
inline constexpr const char* zvonkin_map = "zvonkin.levi";
inline constexpr const char* zvonkin = "zvonkin.json";
inline constexpr const char* uniqueness = "uniqueness.json";
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* config = "config.ini";
inline constexpr const char* failed = "FAILED";
}  // namespace artifact

struct RunResult {
  std::vector<std::pair<std::string, double>> wall;  ///< seconds per experiment
  int bounds_total = 0, bounds_passed = 0;
};

namespace run_detail {

using nlohmann::json;

//! Non-finite numbers become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const ExponentFit& f) {
  return {{"name", f.name},
          {"slope", number(f.slope)},
          {"intercept", number(f.intercept)},
          {"standard_error", number(f.standard_error)},
          {"half_width", number(f.half_width)},
          {"points", f.points}};
}

inline json to_json(const BoundReport& r) {
  json j{{"id", r.id},
         {"constant", number(r.constant)},
         {"coarse_constant", number(r.coarse_constant)},
         {"lower", number(r.lower)},
         {"drift", number(r.drift)},
         {"threshold", r.threshold},
         {"finite", r.finite()},
         {"passed", r.passed},
         {"probes", r.probes}};
  j["exponents"] = json::array();
  for (const auto& e : r.exponents) j["exponents"].push_back(to_json(e));
  j["details"] = json::object();
  for (const auto& [k, v] : r.details) j["details"][k] = number(v);
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot write " + p.string());
  os << s;
  if (!os) fail(ErrorKind::io, "write failed for " + p.string());
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::vector<std::string> default_bounds(const ModelSpec& m) {
  std::vector<std::string> ids;
  for (const auto& id : bound_ids()) {
    const bool needs_resolvent = id == "es2" || id == "upd" || id == "b" || id == "g";
    if (!needs_resolvent || m.period > 0) ids.push_back(id);
  }
  return ids;
}

inline std::string summary_line(const BoundReport& r) {
  char b[160];
  std::snprintf(b, sizeof b, "%-5s %-4s C=%.6g coarse=%.6g drift=%.4g", r.id.c_str(), r.passed ? "pass" : "FAIL",
                r.constant, r.coarse_constant, r.drift);
  std::string s = b;
  for (const auto& e : r.exponents) {
    std::snprintf(b, sizeof b, " %s-slope=%.4f+-%.4f", e.name.c_str(), e.slope, e.half_width);
    s += b;
  }
  return s;
}

}  // namespace run_detail

//! Executes the experiments of a validated configuration in dependency order.
//! A runtime failure leaves the artifacts written so far, a FAILED marker and the manifest, then rethrows.
inline RunResult run_experiments(const ExperimentConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  using run_detail::json;
  using run_detail::number;
  const fs::path out = cfg.out;
  fs::create_directories(out);
  fs::remove(out / artifact::failed);
  run_detail::write_text(out / artifact::config, cfg.canonical);
  set_workers(cfg.workers);

  const ModelSpec& m = cfg.model;
  const std::uint64_t model_hash = m.hash();
  RunResult res;
  json manifest{{"version", version},
                {"config_hash", io::hex(cfg.hash())},
                {"model", m.name},
                {"model_hash", io::hex(model_hash)},
                {"seed", cfg.seed},
                {"workers", cfg.workers},
                {"experiments", cfg.experiments},
                {"started", run_detail::utc_now()},
                {"compiler", __VERSION__},
                {"cplusplus", __cplusplus}};
  json artifacts = json::array();
  json wall = json::object();

  std::shared_ptr<const KernelArtifacts> coarse;
  std::shared_ptr<const ResolventRun> resolvent;
  std::optional<PathEnsemble> ensemble;
  auto resolvent_run = [&] {
    if (!resolvent) {
      ResolventConfig rc = cfg.resolvent;
      rc.kernel = cfg.grid;
      resolvent = std::make_shared<const ResolventRun>(solve_resolvent(m, rc));
    }
    return resolvent;
  };

  const std::map<std::string, std::function<void()>> steps{
      {"assemble",
       [&] {
         coarse = build_kernel(m, cfg.grid);
         write_kernel_table((out / artifact::kernel).string(), coarse->table);
         artifacts.push_back(artifact::kernel);
         log << "assemble: order " << coarse->state.order << ", fitted C_d " << io::full(coarse->state.fitted_cd)
             << ", tail bound " << io::full(coarse->state.tail_bound) << "\n";
       }},
      {"verify",
       [&] {
         VerifyContext ctx;
         ctx.model = m;
         ctx.coarse = coarse;
         ctx.fine = build_kernel(m, cfg.grid.refined());
         ctx.times = cfg.verify.times;
         ctx.pairs = cfg.verify.pairs;
         ctx.threshold = cfg.verify.threshold;
         ctx.seed = cfg.seed;
         const auto ids = cfg.verify.bounds.empty() ? run_detail::default_bounds(m) : cfg.verify.bounds;
         json reports = json::array();
         std::string summary;
         for (const auto& id : ids) {
           const bool needs_resolvent = id == "es2" || id == "upd" || id == "b" || id == "g";
           json j;
           try {
             if (needs_resolvent && m.period > 0) ctx.resolvent = resolvent_run();
             const auto r = verify_bound(id, ctx);
             j = run_detail::to_json(r);
             summary += run_detail::summary_line(r) + "\n";
             res.bounds_passed += r.passed;
           } catch (const Error& e) {
             j = {{"id", id}, {"passed", false}, {"error", e.what()}};
             summary += id + " error " + e.what() + "\n";
           }
           ++res.bounds_total;
           reports.push_back(j);
           log << "verify: " << summary.substr(summary.rfind('\n', summary.size() - 2) + 1);
         }
         run_detail::write_json(out / artifact::bounds, {{"model_hash", io::hex(model_hash)}, {"bounds", reports}});
         run_detail::write_text(out / artifact::summary, summary);
         artifacts.push_back(artifact::bounds);
         artifacts.push_back(artifact::summary);
       }},
      {"simulate",
       [&] {
         ensemble = simulate_ensemble(m, cfg.simulate.ensemble);
         std::ofstream os(out / artifact::paths, std::ios::binary);
         if (!os) fail(ErrorKind::io, "cannot write paths.csv");
         os << "path_id,t,x_1\n";
         for (int i = 0; i < ensemble->count(); ++i)
           for (std::size_t k = 0; k < ensemble->times.size(); ++k)
             os << i << ',' << io::full(ensemble->times[k]) << ',' << io::full(ensemble->paths(i, k)) << '\n';
         if (!os) fail(ErrorKind::io, "write failed for paths.csv");
         artifacts.push_back(artifact::paths);
         log << "simulate: " << ensemble->count() << " paths, " << ensemble->times.size() << " records\n";
       }},
      {"compare",
       [&] {
         const auto d = compare_density(*ensemble, coarse->table, cfg.compare.time);
         run_detail::write_json(out / artifact::compare, {{"model_hash", io::hex(model_hash)},
                                                          {"time", cfg.compare.time},
                                                          {"paths", ensemble->count()},
                                                          {"x0", ensemble->x0},
                                                          {"l1", number(d.l1)},
                                                          {"ks", number(d.ks)}});
         artifacts.push_back(artifact::compare);
         log << "compare: L1 " << io::full(d.l1) << ", KS " << io::full(d.ks) << "\n";
       }},
      {"zvonkin",
       [&] {
         const auto run = resolvent_run();
         const ZvonkinMap map(run->solution);
         write_zvonkin_map((out / artifact::zvonkin_map).string(), map, model_hash);
         artifacts.push_back(artifact::zvonkin_map);
         double pide = 0.0, trip = 0.0, lo = INFINITY, hi = 0.0;
         const int n = 64;
         for (int i = 0; i < n; ++i) {
           const double x = m.period * i / n;
           pide = std::max(pide, pide_residual(map, m, x).residual);
           trip = std::max(trip, std::abs(map.inverse(map(x)) - x));
         }
         for (auto [x, y] : detail::random_pairs(cfg.verify.pairs, m.period, cfg.seed)) {
           if (x == y) continue;
           const double q = std::abs(map(x) - map(y)) / std::abs(x - y);
           lo = std::min(lo, q);
           hi = std::max(hi, q);
         }
         json j{{"model_hash", io::hex(model_hash)},
                {"lambda", map.lambda()},
                {"u_sup", run->solution.u_sup},
                {"grad_sup", run->solution.grad_sup},
                {"truncation_budget", run->solution.truncation_budget},
                {"pide_residual", number(pide)},
                {"pide_relative", number(m.b_norm() > 0 ? pide / m.b_norm() : pide)},
                {"round_trip", number(trip)},
                {"lipschitz_lower", number(lo)},
                {"lipschitz_upper", number(hi)}};
         log << "zvonkin: lambda " << io::full(map.lambda()) << ", PIDE residual " << io::full(pide) << "\n";
         if (cfg.zvonkin.paths > 0) {
           const TransformedCoefficients tc(map, m);
           const auto& z = cfg.zvonkin;
           const auto c = zvonkin_coupled_run(m, tc, cfg.epsilon, z.x0, z.horizon, z.dt, z.record_dt, z.paths, cfg.seed);
           j["coupled"] = {{"paths", z.paths},
                           {"dt", z.dt},
                           {"distance", c.distance},
                           {"distance_error", c.distance_error},
                           {"baseline", c.baseline},
                           {"baseline_error", c.baseline_error},
                           {"ratio", number(c.ratio())}};
           log << "zvonkin: coupled distance " << io::full(c.distance) << ", baseline " << io::full(c.baseline) << "\n";
         }
         run_detail::write_json(out / artifact::zvonkin, j);
         artifacts.push_back(artifact::zvonkin);
       }},
      {"uniqueness",
       [&] {
         const auto& u = cfg.uniqueness;
         const auto rep = pathwise_uniqueness_experiment(model_dynamics(m), LevyNoiseSpec::for_model(m, cfg.epsilon), u.x0,
                                                         u.horizon, u.dts, u.paths, cfg.seed);
         run_detail::write_json(out / artifact::uniqueness, {{"model_hash", io::hex(model_hash)},
                                                             {"dts", rep.dts},
                                                             {"errors", rep.errors},
                                                             {"standard_errors", rep.standard_errors},
                                                             {"strictly_decreasing", rep.strictly_decreasing()}});
         artifacts.push_back(artifact::uniqueness);
         log << "uniqueness: strictly decreasing " << (rep.strictly_decreasing() ? "yes" : "no") << "\n";
       }},
  };

  auto finish = [&](const std::string& status) {
    manifest["finished"] = run_detail::utc_now();
    manifest["status"] = status;
    manifest["wall_seconds"] = wall;
    manifest["artifacts"] = artifacts;
    run_detail::write_json(out / artifact::manifest, manifest);
  };
  for (const auto& name : cfg.experiments) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      steps.at(name)();
    } catch (const std::exception& e) {
      run_detail::write_text(out / artifact::failed, name + ": " + e.what() + "\n");
      wall[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      finish("failed");
      throw;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    wall[name] = s;
    res.wall.emplace_back(name, s);
  }
  finish("ok");
  return res;
}

}  // namespace levi
