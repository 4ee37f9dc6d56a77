#include "anderson/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

#include "anderson/anderson_operator.hpp"
#include "anderson/builtins.hpp"
#include "anderson/errors.hpp"
#include "anderson/field_io.hpp"
#include "anderson/noise.hpp"
#include "anderson/schrodinger_spectral.hpp"
#include "anderson/selfdual_choquard.hpp"
#include "anderson/variational_solver.hpp"

namespace anderson {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::array<const char*, 7> kCommands = {"sample-noise", "spectrum",       "kato-check",
                                              "diagnose-heat", "solve-mp",      "solve-fountain",
                                              "solve-choquard"};

[[noreturn]] void field_error(const std::string& key, const std::string& what) {
  throw ConfigError("config." + key + ": " + what);
}

void validate(const RunConfig& c) {
  if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end()) {
    field_error("command", "unknown command '" + c.command + "'");
  }
  if (c.n < 4 || c.n % 2 != 0) field_error("n", "must be an even integer >= 4");
  if (c.noise != "white" && c.noise != "zero") field_error("noise", "must be 'white' or 'zero'");
  if (c.cutoff && (*c.cutoff < 0 || *c.cutoff > static_cast<int>(c.n / 2))) {
    field_error("cutoff", "must lie in [0, n/2]");
  }
  if (!(c.tol > 0.0)) field_error("tol", "must be positive");
  if (c.max_iter == 0) field_error("max_iter", "must be positive");
  if (c.count == 0) field_error("count", "must be positive");
  if (!(c.p >= 1.0)) field_error("p", "must be >= 1");
  if (!(c.q > 1.0)) field_error("q", "must be > 1");
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects artifacts and timings for one run.
class Recorder {
 public:
  Recorder(fs::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  const fs::path& dir() const { return dir_; }

  template <class F>
  auto timed(const std::string& label, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      stop(label, start);
    } else {
      auto value = fn();
      stop(label, start);
      return value;
    }
  }

  void field(const std::string& name, const GridField& u) {
    write_field(u, dir_ / name);
    record(name, {});
  }
  void series(const std::string& name, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows) {
    emit_plotdata(header, rows, dir_ / name);
    record(name, header);
  }
  void document(const std::string& name, const json& j) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << j.dump(2) << '\n';
    out.close();
    record(name, {});
  }

 private:
  void stop(const std::string& label, std::chrono::steady_clock::time_point start) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest_.timings.emplace_back(label, secs);
  }
  void record(const std::string& name, std::vector<std::string> columns) {
    const fs::path p = dir_ / name;
    manifest_.artifacts.push_back({name, sha256_file(p), fs::file_size(p), std::move(columns)});
  }

  fs::path dir_;
  RunManifest& manifest_;
};

NoiseSample make_noise(const RunConfig& c, const TorusGrid& grid) {
  NoiseSample xi = c.noise == "zero" ? NoiseSample{GridField(grid), c.seed, std::nullopt}
                                     : sample_white_noise(grid, c.seed);
  if (c.cutoff) xi = mollify(xi, *c.cutoff);
  return xi;
}

AndersonOperator make_operator(const RunConfig& c, const TorusGrid& grid) {
  OperatorOptions opt;
  opt.renormalize = c.renormalize;
  return AndersonOperator(make_noise(c, grid), opt);
}

// Eigenpairs covering e_0 .. e_{m + 1 + extra}.
Spectrum spectrum_with_margin(const AndersonOperator& op, const Potential& a, std::size_t extra) {
  const std::size_t total = op.grid().size();
  std::size_t count = std::min(total, std::max<std::size_t>(extra + 2, 8));
  for (;;) {
    Spectrum s = eigendecompose(op, a, count);
    const bool enough = s.m_resolved && static_cast<std::size_t>(s.m + 2) + extra <= count;
    if (enough || count == total) return s;
    count = std::min(total, 2 * count);
  }
}

json result_json(const SolveResult& r) {
  const double un = norm_lp(r.u, 2.0);
  const PSReport ps = ps_diagnostics(r.trace);
  return json{{"phi", r.phi},
              {"residual_l2", r.residual_l2},
              {"grad_e_norm", r.grad_e_norm},
              {"iterations", r.iterations},
              {"method", r.method},
              {"seed", r.seed},
              {"converged", r.converged},
              {"l2_norm", un},
              {"relative_residual", r.residual_l2 / std::max(un, 1e-300)},
              {"geometry",
               {{"r1", r.geometry.r1},
                {"min_phi_sphere", r.geometry.min_phi_sphere},
                {"r2", r.geometry.r2},
                {"phi_r2", r.geometry.phi_r2},
                {"samples", r.geometry.samples}}},
              {"palais_smale",
               {{"phi_converged", ps.phi_converged},
                {"gradient_vanishing", ps.gradient_vanishing},
                {"bounded", ps.bounded},
                {"unbounded_with_vanishing_gradient", ps.unbounded_with_vanishing_gradient}}}};
}

std::vector<std::vector<double>> trace_rows(const std::vector<TraceEntry>& trace) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    rows.push_back({static_cast<double>(i), trace[i].phi, trace[i].grad_norm});
  }
  return rows;
}

void emit_solution(Recorder& rec, std::size_t i, const SolveResult& r) {
  const std::string s = std::to_string(i);
  rec.field("solution_" + s + ".f64", r.u);
  rec.document("result_" + s + ".json", result_json(r));
  if (!r.trace.empty()) rec.series("trace_" + s + ".csv", {"iter", "phi", "grad_norm"}, trace_rows(r.trace));
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

SolverParams solver_params(const RunConfig& c) {
  SolverParams p;
  p.tol = c.tol;
  p.max_iter = c.max_iter;
  p.seed = c.seed;
  return p;
}

void run_sample_noise(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const NoiseSample xi = rec.timed("sample_white_noise", [&] { return make_noise(c, grid); });
  rec.field("xi.f64", xi.field);
  const double mean = xi.field.values().mean();
  const double var = (xi.field.values().array() - mean).square().sum() /
                     static_cast<double>(grid.size() - 1);
  m.summary = {{"n", c.n},
               {"seed", c.seed},
               {"h", grid.spacing()},
               {"mean", mean},
               {"variance", var},
               {"expected_variance", 1.0 / grid.cell_measure()}};
  if (xi.cutoff) m.summary["cutoff"] = *xi.cutoff;
  rec.document("noise.json", m.summary);
}

void run_spectrum(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const AndersonOperator op = rec.timed("operator", [&] { return make_operator(c, grid); });
  const Potential a = make_potential(c.potential, grid);
  const std::size_t count = std::min(c.count, grid.size());
  const Spectrum s = rec.timed("eigendecompose", [&] { return eigendecompose(op, a, count); });
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    rows.push_back({static_cast<double>(i), s.eigenvalues[i], s.residuals[i]});
    rec.field("eigenfield_" + std::to_string(i) + ".f64", s.eigenfields[i]);
  }
  rec.series("eigenvalues.csv", {"index", "eigenvalue", "residual"}, rows);
  m.summary = {{"c", op.c()},
               {"lambda_max_h", op.lambda_max_h()},
               {"m", s.m},
               {"m_resolved", s.m_resolved},
               {"delta", std::isnan(s.delta) ? json(nullptr) : json(s.delta)},
               {"eigenvalues", s.eigenvalues}};
  rec.document("spectrum.json", m.summary);
}

void run_kato_check(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const AndersonOperator op = rec.timed("operator", [&] { return make_operator(c, grid); });
  const Potential a = make_potential(c.potential, grid);

  std::vector<std::vector<double>> log_rows, heat_rows, res_rows, form_rows;
  std::vector<double> log_vals, heat_vals, res_vals, form_vals;
  rec.timed("kato_modulus_log", [&] {
    for (double r = 0.8; r > grid.spacing() && log_rows.size() < 6; r *= 0.5) {
      const double v = kato_modulus_log(a, r);
      log_rows.push_back({r, v});
      log_vals.push_back(v);
    }
  });
  rec.timed("kato_modulus_heat", [&] {
    for (double T = 1.0; T >= 1.0 / 16.0; T *= 0.5) {
      const double v = kato_modulus_heat(op, a, T);
      heat_rows.push_back({T, v});
      heat_vals.push_back(v);
    }
  });
  const std::vector<double> lambdas =
      c.sweep.empty() ? std::vector<double>{1.0, 10.0, 100.0, 1000.0} : c.sweep;
  rec.timed("resolvent_sup_norm", [&] {
    for (double lam : lambdas) {
      const double v = resolvent_sup_norm(op, a, lam);
      res_rows.push_back({lam, v});
      res_vals.push_back(v);
    }
  });
  rec.timed("form_bound_constant", [&] {
    for (double eta : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const double v = form_bound_constant(op, a, eta);
      form_rows.push_back({eta, v});
      form_vals.push_back(v);
    }
  });
  if (!log_rows.empty()) rec.series("kato_log.csv", {"r", "modulus"}, log_rows);
  rec.series("kato_heat.csv", {"T", "modulus"}, heat_rows);
  rec.series("resolvent.csv", {"lambda", "sup_norm"}, res_rows);
  rec.series("form_bound.csv", {"eta", "m_eta"}, form_rows);
  m.summary = {{"declared_p", a.declared_p},
               {"kato_log_decreasing", non_increasing(log_vals)},
               {"kato_heat_decreasing", non_increasing(heat_vals)},
               {"resolvent_decreasing", non_increasing(res_vals)},
               {"form_bound_decreasing", non_increasing(form_vals)}};
  rec.document("kato.json", m.summary);
}

void run_diagnose_heat(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const AndersonOperator op = rec.timed("operator", [&] { return make_operator(c, grid); });
  const std::vector<double> times =
      c.sweep.empty() ? std::vector<double>{0.05, 0.1, 0.2, 0.4, 0.8} : c.sweep;
  const HeatReport r = rec.timed("heat_kernel_diagnostics", [&] {
    return heat_kernel_diagnostics(op, times);
  });
  m.summary = {{"a1", r.a1},
               {"a2", r.a2},
               {"epsilon", r.epsilon},
               {"min_kernel", r.min_kernel},
               {"green_ratio_low", r.green_ratio_low},
               {"green_ratio_high", r.green_ratio_high},
               {"fitted_slope", r.fitted_slope},
               {"fitted_intercept", r.fitted_intercept},
               {"samples", r.samples},
               {"negative_values", r.negative_values.size()},
               {"c", op.c()}};
  rec.document("heat_report.json", m.summary);
  if (!r.negative_values.empty()) {
    std::vector<std::vector<double>> rows;
    for (const auto& nv : r.negative_values) {
      rows.push_back({static_cast<double>(nv.x.i), static_cast<double>(nv.x.j),
                      static_cast<double>(nv.y.i), static_cast<double>(nv.y.j), nv.t, nv.value});
    }
    rec.series("heat_negative.csv", {"xi", "xj", "yi", "yj", "t", "value"}, rows);
  }
}

void run_solve_mp(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const AndersonOperator op = rec.timed("operator", [&] { return make_operator(c, grid); });
  const Problem pb(op, make_potential(c.potential, grid), make_nonlinearity(c.nonlinearity));
  const Spectrum s = rec.timed("eigendecompose", [&] { return spectrum_with_margin(op, pb.a, 1); });
  const SolveResult r = rec.timed("mountain_pass_solve", [&] {
    return mountain_pass_solve(pb, s, solver_params(c));
  });
  emit_solution(rec, 0, r);
  m.summary = {{"m", s.m}, {"c", op.c()}, {"solutions", 1}, {"result_0", result_json(r)}};
}

void run_solve_fountain(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const AndersonOperator op = rec.timed("operator", [&] { return make_operator(c, grid); });
  const Problem pb(op, make_potential(c.potential, grid), make_nonlinearity(c.nonlinearity));
  const Spectrum s =
      rec.timed("eigendecompose", [&] { return spectrum_with_margin(op, pb.a, 2 * c.count + 4); });
  const FountainResult fr = rec.timed("fountain_solve", [&] {
    return fountain_solve(pb, s, c.count, solver_params(c));
  });
  json phis = json::array();
  for (std::size_t i = 0; i < fr.solutions.size(); ++i) {
    emit_solution(rec, i, fr.solutions[i]);
    phis.push_back(fr.solutions[i].phi);
  }
  m.summary = {{"m", s.m},
               {"c", op.c()},
               {"requested", c.count},
               {"found", fr.solutions.size()},
               {"complete", fr.complete},
               {"phi", phis}};
  if (!fr.complete) m.summary["warning"] = "fewer solutions than requested";
  rec.document("fountain.json", m.summary);
}

void run_solve_choquard(const RunConfig& c, Recorder& rec, RunManifest& m) {
  const TorusGrid grid(c.n);
  const AndersonOperator op = rec.timed("operator", [&] { return make_operator(c, grid); });
  const ChoquardProblem prob(op, make_potential(c.potential, grid), make_kernel(c.kernel, grid), c.p,
                             c.q);
  ChoquardParams params;
  params.tol = c.tol;
  params.max_iter = c.max_iter;
  const ChoquardResult r = rec.timed("selfdual_minimize", [&] {
    return selfdual_minimize(prob, make_init(c.init, grid), params);
  });
  rec.field("solution.f64", r.u);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.trace.size(); ++i) rows.push_back({static_cast<double>(i), r.trace[i]});
  rec.series("trace.csv", {"iter", "selfdual_value"}, rows);
  m.summary = {{"selfdual_value", r.selfdual_value},
               {"residual_l2", r.residual_l2},
               {"trivial", r.trivial},
               {"iterations", r.iterations},
               {"method", r.method},
               {"l2_norm", norm_lp(r.u, 2.0)}};
  rec.document("result.json", m.summary);
}

}  // namespace

json RunConfig::to_json() const {
  json j{{"command", command},   {"n", n},
         {"seed", seed},         {"noise", noise},
         {"renormalize", renormalize}, {"potential", potential},
         {"nonlinearity", nonlinearity}, {"kernel", kernel},
         {"p", p},               {"q", q},
         {"init", init},         {"tol", tol},
         {"max_iter", max_iter}, {"count", count},
         {"sweep", sweep},       {"out", out}};
  if (cutoff) j["cutoff"] = *cutoff;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    auto str = [&]() -> std::string {
      if (!v.is_string()) field_error(key, "expected a string");
      return v.get<std::string>();
    };
    auto uint = [&]() -> std::uint64_t {
      if (!v.is_number_unsigned()) field_error(key, "expected a non-negative integer");
      return v.get<std::uint64_t>();
    };
    auto real = [&]() -> double {
      if (!v.is_number()) field_error(key, "expected a number");
      return v.get<double>();
    };
    if (key == "command") c.command = str();
    else if (key == "n") c.n = uint();
    else if (key == "seed") c.seed = uint();
    else if (key == "noise") c.noise = str();
    else if (key == "cutoff") {
      if (v.is_null()) c.cutoff.reset();
      else if (v.is_number_integer()) c.cutoff = v.get<int>();
      else field_error(key, "expected an integer");
    } else if (key == "renormalize") {
      if (!v.is_boolean()) field_error(key, "expected a boolean");
      c.renormalize = v.get<bool>();
    } else if (key == "potential") c.potential = str();
    else if (key == "nonlinearity") c.nonlinearity = str();
    else if (key == "kernel") c.kernel = str();
    else if (key == "p") c.p = real();
    else if (key == "q") c.q = real();
    else if (key == "init") c.init = str();
    else if (key == "tol") c.tol = real();
    else if (key == "max_iter") c.max_iter = uint();
    else if (key == "count") c.count = uint();
    else if (key == "sweep") {
      if (!v.is_array()) field_error(key, "expected an array of numbers");
      c.sweep.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) field_error(key + "[" + std::to_string(i) + "]", "expected a number");
        c.sweep.push_back(v[i].get<double>());
      }
    } else if (key == "out") c.out = str();
    else field_error(key, "unknown field");
  }
  return c;
}

json RunManifest::to_json() const {
  json files = json::array();
  for (const auto& a : artifacts) {
    json f{{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}};
    if (!a.columns.empty()) f["columns"] = a.columns;
    files.push_back(f);
  }
  json t = json::object();
  for (const auto& [k, v] : timings) t[k] = v;
  return json{{"config", config.to_json()},
              {"version", version},
              {"rng_algorithm", rng_algorithm},
              {"wall_clock", wall_clock},
              {"timings", t},
              {"artifacts", files},
              {"summary", summary}};
}

fs::path resolve_output_dir(const RunConfig& config) {
  if (!config.out.empty()) return config.out;
  const char* root = std::getenv("ANDERSON_OUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
  return base / (config.command + "-n" + std::to_string(config.n) + "-s" + std::to_string(config.seed));
}

RunManifest run(const RunConfig& config) {
  validate(config);
  RunManifest m;
  m.config = config;
  m.rng_algorithm = kRngAlgorithm;
  m.wall_clock = utc_now();
  const fs::path dir = resolve_output_dir(config);
  fs::create_directories(dir);
  Recorder rec(dir, m);
  static const std::map<std::string, std::function<void(const RunConfig&, Recorder&, RunManifest&)>>
      pipelines = {{"sample-noise", run_sample_noise},     {"spectrum", run_spectrum},
                   {"kato-check", run_kato_check},         {"diagnose-heat", run_diagnose_heat},
                   {"solve-mp", run_solve_mp},             {"solve-fountain", run_solve_fountain},
                   {"solve-choquard", run_solve_choquard}};
  pipelines.at(config.command)(config, rec, m);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << m.to_json().dump(2) << '\n';
  if (!out) throw Error("cannot write manifest in " + dir.string());
  return m;
}

bool verify_manifest(const RunManifest& manifest, const fs::path& dir) {
  for (const auto& a : manifest.artifacts) {
    const fs::path p = dir / a.path;
    if (!fs::exists(p) || sha256_file(p) != a.sha256) return false;
  }
  return true;
}

void emit_plotdata(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows, const fs::path& path) {
  if (header.empty() || rows.empty()) throw DomainError("emit_plotdata: empty series");
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw DomainError("emit_plotdata: ragged row");
  }
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) text += (i ? "," : "") + format17(r[i]);
    text += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

}  // namespace anderson
