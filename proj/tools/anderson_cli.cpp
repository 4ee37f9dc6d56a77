// Command line front end. Each subcommand fills a RunConfig from its flags,
// optionally overridden by --config, then runs the pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
// 4 internal inconsistency, 1 anything else.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "anderson/errors.hpp"
#include "anderson/harness.hpp"

namespace {

using anderson::RunConfig;

struct Subcommand {
  CLI::App* app = nullptr;
  RunConfig config;
  std::string config_file;
  int cutoff = -1;
};

void add_common(Subcommand& s) {
  auto& c = s.config;
  s.app->add_option("--n", c.n, "grid points per side (even)")->capture_default_str();
  s.app->add_option("--seed", c.seed, "noise seed")->capture_default_str();
  s.app->add_option("--noise", c.noise, "white | zero")->capture_default_str();
  s.app->add_option("--cutoff", s.cutoff, "keep Fourier modes |k|_inf <= cutoff");
  s.app->add_flag("--renormalize", c.renormalize, "subtract (1/2pi) ln n from the noise");
  s.app->add_option("--out", c.out, "output directory");
  s.app->add_option("--config", s.config_file, "JSON config; its fields override flags");
}

void add_potential(Subcommand& s, const char* flag = "--potential") {
  s.app->add_option(flag, s.config.potential, "potential specification")->capture_default_str();
}

void add_solver(Subcommand& s) {
  auto& c = s.config;
  s.app->add_option("--nonlinearity", c.nonlinearity, "pow3 | pow:<ell> | table:<csv>")
      ->capture_default_str();
  s.app->add_option("--tol", c.tol, "relative residual tolerance")->capture_default_str();
  s.app->add_option("--max-iter", c.max_iter, "iteration budget")->capture_default_str();
}

RunConfig finalize(const std::string& command, Subcommand& s) {
  RunConfig c = s.config;
  c.command = command;
  if (s.cutoff >= 0) c.cutoff = s.cutoff;
  if (s.config_file.empty()) return c;
  std::ifstream in(s.config_file);
  if (!in) throw anderson::ConfigError("cannot open config file " + s.config_file);
  nlohmann::json file;
  try {
    in >> file;
  } catch (const nlohmann::json::exception& e) {
    throw anderson::ConfigError("config file " + s.config_file + ": " + e.what());
  }
  if (!file.is_object()) throw anderson::ConfigError("config: expected a JSON object");
  if (file.contains("command") && file["command"] != command) {
    throw anderson::ConfigError("config.command: '" + file["command"].dump() +
                                "' does not match subcommand '" + command + "'");
  }
  nlohmann::json merged = c.to_json();
  merged.update(file);
  return RunConfig::from_json(merged);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anderson operator toolkit"};
  app.set_version_flag("--version", std::string(anderson::kVersion));
  app.require_subcommand(1);

  std::map<std::string, Subcommand> subs;
  auto make = [&](const std::string& name, const std::string& help) -> Subcommand& {
    Subcommand& s = subs[name];
    s.app = app.add_subcommand(name, help);
    add_common(s);
    return s;
  };

  make("sample-noise", "sample spatial white noise on the grid");

  auto& spectrum = make("spectrum", "lowest eigenpairs of -H_c + a");
  add_potential(spectrum);
  spectrum.app->add_option("--count", spectrum.config.count, "number of eigenpairs")
      ->capture_default_str();

  auto& kato = make("kato-check", "Kato moduli, resolvent and form-bound sweeps");
  add_potential(kato);
  kato.app->add_option("--lambda", kato.config.sweep, "resolvent sweep values");

  auto& heat = make("diagnose-heat", "heat kernel and Green function diagnostics");
  heat.app->add_option("--times", heat.config.sweep, "times in (0, 1]");

  auto& mp = make("solve-mp", "mountain-pass critical point");
  add_potential(mp);
  add_solver(mp);

  auto& fountain = make("solve-fountain", "several distinct critical points");
  add_potential(fountain);
  add_solver(fountain);
  fountain.config.count = 3;
  fountain.app->add_option("--count", fountain.config.count, "solutions requested")
      ->capture_default_str();

  auto& choquard = make("solve-choquard", "self-dual minimisation for the Choquard equation");
  choquard.config.potential = "builtin:const:1";
  add_potential(choquard, "--a");
  choquard.app->add_option("--w", choquard.config.kernel, "interaction kernel")->capture_default_str();
  choquard.app->add_option("--p", choquard.config.p)->capture_default_str();
  choquard.app->add_option("--q", choquard.config.q)->capture_default_str();
  choquard.app->add_option("--init", choquard.config.init, "zero | one | const:<v> | random:<seed>")
      ->capture_default_str();
  choquard.app->add_option("--tol", choquard.config.tol)->capture_default_str();
  choquard.app->add_option("--max-iter", choquard.config.max_iter)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      const RunConfig config = finalize(name, s);
      const anderson::RunManifest m = anderson::run(config);
      nlohmann::json report{{"out", anderson::resolve_output_dir(config).string()},
                            {"summary", m.summary}};
      std::cout << report.dump(2) << '\n';
    }
  } catch (const anderson::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const anderson::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return 2;
  } catch (const anderson::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const anderson::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return 3;
  } catch (const anderson::InconsistencyError& e) {
    std::cerr << "inconsistency: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
