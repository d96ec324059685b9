// ssep: command-line driver for the channel/reservoir experiments.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssep/ssep.hpp"

namespace {

struct Flag {
  std::string key;
  CLI::Option* option = nullptr;
  std::string value;
  std::vector<std::string> values;  // repeatable flags
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exclusion process with finite reservoirs: simulations and scaling-limit checks"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value file; flags override it")->check(CLI::ExistingFile);

  const std::vector<std::string> keys{"n",      "alpha",  "alpha-prime",   "t",       "k",   "seed",
                                      "engine", "u0",     "v-minus",       "v-plus",  "out", "format",
                                      "budget-events", "threads", "pair"};
  const std::vector<std::string> help{
      "channel size N",
      "reservoir exponent: M = N^(1+alpha)",
      "time-scale exponent: t_micro = N^(2+alpha') t",
      "macroscopic time; repeat or comma-separate",
      "KMC replicates",
      "base seed",
      "ode, kmc or both",
      "initial profile: const:c, linear, sine, step:a,b",
      "initial left reservoir density",
      "initial right reservoir density",
      "output path (default stdout)",
      "csv or json",
      "abort when the estimated KMC event count exceeds this",
      "worker threads (0 = hardware, capped by SSEP_THREADS)",
      "macroscopic site pair r1,r2 for chaos; repeatable"};
  std::vector<Flag> flags(keys.size());
  for (std::size_t i = 0; i < flags.size(); ++i) {
    auto& f = flags[i];
    f.key = keys[i];
    if (f.key == "t" || f.key == "pair")
      f.option = app.add_option("--" + f.key, f.values, help[i])->type_size(1)->allow_extra_args(false);
    else
      f.option = app.add_option("--" + f.key, f.value, help[i]);
  }

  bool acceptance = false;
  auto* ideal = app.add_subcommand("ideal", "alpha' < alpha: heat equation (alpha'=0) or stationary line");
  auto* adiabatic = app.add_subcommand("adiabatic", "alpha' = alpha: linear profile between relaxing reservoirs");
  auto* global = app.add_subcommand("global", "alpha' > alpha: global equilibrium");
  auto* chaos = app.add_subcommand("chaos", "two-point covariances by KMC");
  auto* verify = app.add_subcommand("verify", "run the invariant checks");
  verify->add_flag("--acceptance", acceptance, "run the full acceptance gate instead");
  for (auto* sub : {ideal, adiabatic, global, chaos, verify}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  ssep::ExperimentSpec spec;
  try {
    if (!config_path.empty()) ssep::apply_config(spec, ssep::parse_config(read_file(config_path)));
    for (const auto& f : flags) {
      if (f.option->count() == 0) continue;
      if (f.key == "t") ssep::apply_setting(spec, f.key, join(f.values, ','));
      else if (f.key == "pair") ssep::apply_setting(spec, f.key, join(f.values, ';'));
      else ssep::apply_setting(spec, f.key, f.value);
    }
    auto given = [&](const std::string& key) {
      for (const auto& f : flags)
        if (f.key == key) return f.option->count() > 0;
      return false;
    };

    if (verify->parsed()) {
      const auto checks = acceptance ? ssep::verify::acceptance_checks() : ssep::verify::invariant_checks();
      const int failures = ssep::verify::run_checks(checks, std::cout);
      std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
      return failures == 0 ? 0 : 1;
    }

    ssep::ExperimentResult result;
    if (chaos->parsed()) {
      if (!given("engine")) spec.engine = ssep::Engine::kmc;
      spec.regime = ssep::LimitRegime::classify(spec.alpha_prime, spec.alpha).kind;
      result = ssep::run_chaos_experiment(spec);
    } else {
      if (ideal->parsed()) {
        if (spec.alpha_prime >= spec.alpha) throw std::invalid_argument("ideal needs alpha' < alpha");
        spec.regime = ssep::LimitRegime::classify(spec.alpha_prime, spec.alpha).kind;
      } else if (adiabatic->parsed()) {
        if (given("alpha-prime") && spec.alpha_prime != spec.alpha)
          throw std::invalid_argument("adiabatic fixes alpha' = alpha");
        spec.alpha_prime = spec.alpha;
        spec.regime = ssep::RegimeKind::adiabatic;
      } else if (global->parsed()) {
        if (!(spec.alpha_prime > spec.alpha)) throw std::invalid_argument("global needs --alpha-prime > alpha");
        spec.regime = ssep::RegimeKind::global;
      }
      result = ssep::run_experiment(spec);
    }
    ssep::emit(result, spec.format, spec.out);
    std::cerr << "wall clock " << result.wall_clock_seconds << " s\n";
  } catch (const ssep::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
