// levi_lab: experiment runner for the stable-like jump diffusion toolkit.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "levi/config.hpp"
#include "levi/runner.hpp"

namespace {

constexpr int exit_validation = 2;
constexpr int exit_runtime = 3;

const char* preset_summary(const std::string& n) {
  if (n == "cauchy-constant") return "kappa = 1, b = 0; the Cauchy process";
  if (n == "default-test") return "kappa = 1 + 0.5 sin^2(x) e^{-|z|}, b = 0.5 cos x; period 2pi";
  if (n == "holder-drift") return "kato-sigma jumps with b = |sin x|^0.6 (theta = 0.6)";
  if (n == "kato-sigma") return "sigma(x,z) = 1 + (1 + cos x)/4 (|z| ^ 1)^{1/2}, b = sin(x)/4; declares h";
  return "";
}

int list_presets() {
  for (const auto& n : levi::presets::names()) {
    const auto m = levi::presets::by_name(n);
    std::string status = "valid";
    try {
      m.validate();
    } catch (const levi::Error& e) {
      status = e.what();
    }
    std::printf("%-16s %s\n", n.c_str(), preset_summary(n));
    std::printf("  kappa in [%g, %g], beta %g, |b| <= %g, theta %g, period %g, %s\n", m.kappa0, m.kappa1, m.beta,
                m.b_sup, m.theta, m.period, status.c_str());
    const auto k = levi::kato_check(m);
    if (k.declared)
      std::printf("  declared h: Kato norm at T = 1 is %s (%.6g)\n", k.norm.finite ? "finite" : "infinite",
                  k.norm.value);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametrix kernels, verifiers and simulation for stable-like jump diffusions"};
  app.require_subcommand(1);

  std::string config;
  levi::ConfigOverrides over;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
  double tolerance = 0.0;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", config, "configuration file (INI)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", out, "output directory, overrides run.out");
    s->add_option("--seed", seed, "base seed, overrides run.seed");
    s->add_option("--workers", workers, "worker threads, overrides run.workers")->check(CLI::PositiveNumber);
    s->add_option("--tolerance", tolerance, "series tolerance, overrides grid.tolerance");
  };
  auto* run = app.add_subcommand("run", "run the experiments of a configuration");
  add_common(run);
  auto* validate = app.add_subcommand("validate", "parse and validate a configuration");
  add_common(validate);
  app.add_subcommand("list-presets", "list the built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_validation;
  }

  if (app.got_subcommand("list-presets")) return list_presets();

  auto* sub = app.got_subcommand("run") ? run : validate;
  if (sub->count("--out")) over.out = out;
  if (sub->count("--seed")) over.seed = seed;
  if (sub->count("--workers")) over.workers = workers;
  if (sub->count("--tolerance")) over.tolerance = tolerance;

  levi::ExperimentConfig cfg;
  try {
    cfg = levi::load_config(config, over);
  } catch (const levi::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_validation;
  }
  if (sub == validate) {
    std::cout << "valid: model " << cfg.model.name << ", experiments";
    for (const auto& e : cfg.experiments) std::cout << ' ' << e;
    std::cout << ", config hash " << levi::io::hex(cfg.hash()) << "\n";
    return 0;
  }
  try {
    const auto r = levi::run_experiments(cfg, std::cout);
    for (const auto& [name, s] : r.wall) std::printf("%-10s %.2f s\n", name.c_str(), s);
    if (r.bounds_total > 0) std::printf("bounds passed: %d of %d\n", r.bounds_passed, r.bounds_total);
    std::cout << "artifacts in " << cfg.out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return exit_runtime;
  }
  return 0;
}
