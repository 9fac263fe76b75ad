// cflin command-line driver.
//
// Every subcommand first resolves its flags (and an optional TOML config
// file) into a canonical JSON config, then runs from that config alone.
// Sidecars store the config, so `--replay sidecar.json` reruns an experiment.

#include <openssl/sha.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cflin/cflin.hpp"
#include "cflin/io.hpp"

namespace {

using nlohmann::json;
using namespace cflin;

/// Bad flags, inconsistent config or unreadable inputs: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) throw UsageError("grid needs at least one point");
  if (n == 1) return {a};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed JSON in " + path + ": " + e.what());
  }
}

/// Git blob id of the canonical config (keys sorted, no whitespace).
std::string content_hash(const json& config) {
  json inputs = config;
  inputs.erase("output");
  inputs.erase("layout");
  inputs.erase("meta");
  const std::string body = inputs.dump();
  const std::string blob = "blob " + std::to_string(body.size()) + '\0' + body;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::string hex;
  char buf[3];
  for (unsigned char c : digest) {
    std::snprintf(buf, sizeof buf, "%02x", c);
    hex += buf;
  }
  return hex;
}

/// Writes to a file, or to stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path_ == "-") return;
    if (auto dir = std::filesystem::path(path_).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
    file_.open(path_, std::ios::binary);
    if (!file_) throw std::runtime_error("cannot write " + path_);
  }
  std::ostream& stream() { return path_ == "-" ? std::cout : file_; }

 private:
  std::string path_;
  std::ofstream file_;
};

void write_json(const std::string& path, const json& j) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

std::string sidecar_path(const json& config) {
  if (config.contains("meta") && !config["meta"].is_null()) return config["meta"].get<std::string>();
  const std::string out = config.value("output", "-");
  return out == "-" ? std::string() : out + ".json";
}

// ---------------------------------------------------------------------------
// Model sources

struct SourceFlags {
  bool kuramoto2 = false;
  double omega1 = 0.0;
  double ktilde = 1.0;
  double theta0 = 0.0;
  std::string field_path;
  std::string model_path;
  std::vector<double> x0;
  std::optional<double> r;
  std::optional<double> D;
};

void add_source_options(CLI::App& sub, SourceFlags& f) {
  auto* k2 = sub.add_flag("--kuramoto2", f.kuramoto2, "reduced two-oscillator Kuramoto model");
  sub.add_option("--omega1", f.omega1, "normalised frequency of the reduced model");
  sub.add_option("--ktilde", f.ktilde, "normalised coupling of the reduced model (+-1)");
  sub.add_option("--theta0", f.theta0, "initial phase of the reduced model");
  auto* fp = sub.add_option("--field", f.field_path, "field description (JSON)");
  auto* mp = sub.add_option("--model", f.model_path, "Kuramoto model description (JSON)");
  sub.add_option("--x0", f.x0, "initial state for --field")->delimiter(',');
  sub.add_option("--r", f.r, "envelope rate r in (0,1)");
  sub.add_option("--D", f.D, "envelope constant D (fitted when omitted)");
  k2->excludes(fp)->excludes(mp);
  fp->excludes(mp);
}

json source_config(const SourceFlags& f) {
  const int chosen = int(f.kuramoto2) + int(!f.field_path.empty()) + int(!f.model_path.empty());
  if (chosen != 1) throw UsageError("exactly one of --kuramoto2, --field, --model is required");
  // Flags win over an envelope stored in the field file; r defaults to 1/2 with D fitted.
  json env{{"r", f.r.value_or(0.5)}, {"D", f.D ? json(*f.D) : json(nullptr)}};
  if (f.kuramoto2)
    return {{"kind", "kuramoto2"}, {"omega1", f.omega1}, {"ktilde", f.ktilde}, {"theta0", f.theta0}, {"envelope", env}};
  if (!f.field_path.empty()) {
    json field = read_json_file(f.field_path);
    if (auto it = field.find("envelope"); it != field.end() && it->is_object()) {
      if (!f.r && it->contains("r")) env["r"] = it->at("r");
      if (!f.D && it->contains("D")) env["D"] = it->at("D");
    }
    return {{"kind", "field"}, {"field", field}, {"x0", f.x0}, {"envelope", env}};
  }
  return {{"kind", "model"}, {"model", read_json_file(f.model_path)}, {"envelope", env}};
}

/// A resolved model: either a one-dimensional field or a quasi-periodic one.
struct Source {
  std::optional<FourierField1D> field1d;
  std::optional<QuasiPeriodicField> multi;
  std::vector<double> x0;
  /// Set for the reduced Kuramoto model, which has a closed-form classical matrix.
  std::optional<ReducedKuramoto> reduced;
  double time_scale = 1.0;

  bool one_dimensional() const { return field1d.has_value(); }
  std::vector<double> taus() const { return field1d ? std::vector<double>{1.0} : multi->taus(); }
  int d() const { return field1d ? 1 : multi->d(); }
  const Envelope& envelope() const { return field1d ? field1d->envelope() : multi->envelope(); }
  BoundParams bound_params() const {
    const Envelope& e = envelope();
    return field1d ? BoundParams::one_dimensional(e.D, e.r) : BoundParams::multi(e.D, e.r, d());
  }
};

std::optional<double> opt_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

Source resolve_source(const json& src) {
  try {
    const double r = src.at("envelope").at("r").get<double>();
    const std::optional<double> D = opt_double(src.at("envelope").at("D"));
    const std::string kind = src.at("kind").get<std::string>();
    Source out;
    if (kind == "kuramoto2") {
      ReducedKuramoto red{src.at("omega1").get<double>(), src.at("ktilde").get<double>(), src.at("theta0").get<double>()};
      out.field1d = reduced_field(red.omega1, red.ktilde, r, D);
      out.x0 = {red.theta0};
      out.reduced = red;
    } else if (kind == "field") {
      json field = src.at("field");
      field["envelope"] = {{"r", r}, {"D", D ? json(*D) : json(nullptr)}};
      std::visit(
          [&](auto&& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, FourierField1D>)
              out.field1d = f;
            else
              out.multi = f;
          },
          io::parse_field(field));
      out.x0 = src.at("x0").get<std::vector<double>>();
      if (static_cast<int>(out.x0.size()) != out.d())
        throw UsageError("--x0 must have " + std::to_string(out.d()) + " entries");
    } else if (kind == "model") {
      const NormalizedKuramoto n = normalize(io::parse_model(src.at("model")));
      out.time_scale = n.time_scale;
      if (n.model.d == 2) {
        const ReducedKuramoto red = reduce_two_oscillator(n);
        out.field1d = reduced_field(red.omega1, red.ktilde, r, D);
        out.x0 = {red.theta0};
        out.reduced = red;
      } else {
        out.multi = full_rhs(n, r);
        if (D) out.multi = QuasiPeriodicField(out.multi->d(), out.multi->taus(), out.multi->coeffs(), r, D);
        out.x0 = n.model.theta0;
      }
    } else {
      throw UsageError("unknown model source " + kind);
    }
    return out;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

json source_summary(const Source& s) {
  const Envelope& e = s.envelope();
  json j{{"dimension", s.d()}, {"taus", s.taus()}, {"x0", s.x0}, {"envelope", {{"D", e.D}, {"r", e.r}}},
         {"time_scale", s.time_scale}};
  if (s.reduced) j["reduced"] = {{"omega1", s.reduced->omega1}, {"ktilde", s.reduced->ktilde}, {"theta0", s.reduced->theta0}};
  return j;
}

LiftedSystem lift(const Source& s, int N) {
  return s.one_dimensional() ? lift_1d(*s.field1d, s.x0[0], N) : lift_multi(*s.multi, s.x0, N);
}

ClassicalSystem classical(const Source& s, int N) {
  if (!s.one_dimensional()) throw UsageError("classical method requires a one-dimensional field");
  if (s.reduced) return build_classical_kuramoto(s.reduced->omega1, s.reduced->ktilde, s.x0[0], N);
  return build_classical(maclaurin_from_fourier(*s.field1d, N), s.x0[0], N);
}

RealTrajectory reference(const Source& s, const TimeGrid& grid, double tol) {
  return s.one_dimensional() ? integrate_reference(*s.field1d, s.x0[0], grid, tol)
                             : integrate_reference(*s.multi, s.x0, grid, tol);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const json& cfg) {
  const Source src = resolve_source(cfg.at("source"));
  const std::string method = cfg.at("method").get<std::string>();
  const int N = cfg.at("N").get<int>();
  const double t_end = cfg.at("t_end").get<double>();
  const auto samples = cfg.at("samples").get<std::size_t>();
  const double tol = cfg.at("tol").get<double>();
  require(N >= 1, "N must be at least 1");
  require(t_end > 0.0, "--t-end must be positive");
  require(samples >= 1, "--samples must be at least 1");
  require(tol >= kMinTol && tol <= kMaxTol, "--tol must lie in [1e-14, 1e-6]");
  const TimeGrid grid = TimeGrid::uniform(t_end, samples);
  std::optional<std::size_t> max_components;
  if (!cfg.at("max_components").is_null()) max_components = cfg.at("max_components").get<std::size_t>();

  Output out(cfg.at("output").get<std::string>());
  json meta;
  if (method == "reference") {
    const auto traj = reference(src, grid, tol);
    io::write_trajectory(out.stream(), traj, max_components);
    meta = io::trajectory_meta(traj.meta);
  } else if (method == "classical") {
    const auto traj = integrate_classical(classical(src, N), grid, tol);
    io::write_trajectory(out.stream(), traj, max_components);
    meta = io::trajectory_meta(traj.meta);
  } else if (method == "carleman-fourier") {
    const LiftedSystem sys = lift(src, N);
    const auto solver = cfg.at("linear_solver").get<std::string>() == "expm" ? LinearMethod::expm : LinearMethod::rk_adaptive;
    const auto traj = integrate_linear(sys, grid, tol, solver);
    io::write_trajectory(out.stream(), traj, max_components);
    meta = io::trajectory_meta(traj.meta);
    meta["lifted_dimension"] = sys.dim;
  } else {
    throw UsageError("unknown method " + method);
  }
  out.stream().flush();

  if (const std::string side = sidecar_path(cfg); !side.empty())
    write_json(side, {{"config", cfg}, {"config_hash", content_hash(cfg)}, {"source", source_summary(src)},
                      {"integration", meta}, {"rows", grid.size()}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

int run_sweep(const json& cfg) {
  SweepConfig sc;
  sc.omega1 = cfg.at("omega1").get<double>();
  sc.ktilde = cfg.at("ktilde").get<double>();
  const std::string method = cfg.at("method").get<std::string>();
  if (method == "classical")
    sc.method = SweepMethod::classical;
  else if (method == "carleman-fourier")
    sc.method = SweepMethod::carleman_fourier;
  else
    throw UsageError("sweep method must be classical or carleman-fourier");
  sc.N = cfg.at("N").get<int>();
  sc.theta0_axis = cfg.at("theta0_axis").get<std::vector<double>>();
  sc.t_axis = cfg.at("t_axis").get<std::vector<double>>();
  sc.reference_tol = cfg.at("reference_tol").get<double>();
  sc.lifted_tol = cfg.at("tol").get<double>();
  sc.floor = cfg.at("floor").get<double>();
  sc.cap = cfg.at("cap").get<double>();
  sc.workers = cfg.at("workers").get<unsigned>();
  require(sc.N >= 1, "N must be at least 1");
  require(!sc.t_axis.empty() && sc.t_axis.front() == 0.0, "time axis must start at 0");
  require(std::abs(sc.ktilde) == 1.0, "--ktilde must be +1 or -1");
  require(sc.floor > 0.0 && sc.cap > sc.floor, "metric requires 0 < floor < cap");
  if (sc.workers == 0) sc.workers = std::max(1u, std::thread::hardware_concurrency());

  ErrorSurface surface;
  try {
    surface = sweep_error_surface(sc);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  {
    Output out(cfg.at("output").get<std::string>());
    io::write_surface(out.stream(), surface);
  }
  json failures = json::array();
  for (const auto& f : surface.failures) failures.push_back({{"row", f.row}, {"theta0", f.theta0}, {"reason", f.reason}});
  json diverged = json::array();
  for (std::size_t i : surface.diverged_rows) diverged.push_back(sc.theta0_axis[i]);
  if (const std::string side = sidecar_path(cfg); !side.empty())
    write_json(side, {{"config", cfg},
                      {"config_hash", content_hash(cfg)},
                      {"metric", method == "classical" ? "E_C" : "E_CF"},
                      {"failures", failures},
                      {"diverged_theta0", diverged}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bound

int run_bound(const json& cfg) {
  const Source src = resolve_source(cfg.at("source"));
  const double horizon = cfg.at("horizon").get<double>();
  const auto samples = cfg.at("samples").get<std::size_t>();
  const auto Ns = cfg.at("N_values").get<std::vector<int>>();
  const double slack = cfg.at("slack").get<double>();
  const double tol = cfg.at("tol").get<double>();
  require(horizon > 0.0, "--horizon must be positive");
  require(samples >= 2, "--samples must be at least 2");
  require(!Ns.empty(), "--N-values must be nonempty");
  for (int N : Ns) require(N >= 1, "N values must be at least 1");

  const BoundParams p = src.bound_params();
  const double T0 = t0_bound(p);
  json report{{"config", cfg}, {"config_hash", content_hash(cfg)}, {"source", source_summary(src)},
              {"T0", T0}, {"horizon", horizon}, {"rate_constant", p.rate()}};
  const bool satisfiable = horizon < T0;
  report["satisfiable"] = satisfiable;
  report["N0"] = satisfiable ? json(n0_search(p, horizon)) : json(nullptr);
  if (!satisfiable) report["message"] = "horizon exceeds T_0; condition unsatisfiable";

  const TimeGrid grid = TimeGrid::uniform(horizon, samples);
  const RealTrajectory ref = reference(src, grid, 1e-12);
  json rows = json::array();
  bool all_pass = true;
  for (int N : Ns) {
    const auto err = error_primary(integrate_linear(lift(src, N), grid, tol), ref, src.taus());
    double max_err = 0.0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    bool pass = true;
    for (std::size_t i = 0; i < err.size(); ++i) {
      const double b = theorem_bound(p, grid.samples[i], N);
      max_err = std::max(max_err, err[i]);
      worst_excess = std::max(worst_excess, err[i] - b);
      if (err[i] > b + slack) pass = false;
    }
    all_pass = all_pass && pass;
    rows.push_back({{"N", N},
                    {"max_error", max_err},
                    {"bound_at_horizon", theorem_bound(p, horizon, N)},
                    {"worst_excess", worst_excess},
                    {"pass", pass}});
  }
  report["per_N"] = rows;
  report["all_pass"] = all_pass;
  write_json(cfg.at("output").get<std::string>(), report);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// n0

int run_n0(const json& cfg) {
  BoundParams p;
  if (cfg.contains("source")) {
    p = resolve_source(cfg.at("source")).bound_params();
  } else {
    const int d = cfg.at("d").get<int>();
    const double D = cfg.at("D").get<double>();
    const double r = cfg.at("r").get<double>();
    p = d <= 1 && !cfg.at("multi").get<bool>() ? BoundParams::one_dimensional(D, r) : BoundParams::multi(D, r, d);
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const double horizon = cfg.at("horizon").get<double>();
  require(horizon >= 0.0, "--horizon must be nonnegative");
  const double T0 = t0_bound(p);
  const int N0 = n0_search(p, horizon);  // HorizonError -> runtime failure
  write_json(cfg.at("output").get<std::string>(),
             {{"D", p.D}, {"r", p.r}, {"rate_constant", p.rate()}, {"T0", T0}, {"horizon", horizon}, {"N0", N0},
              {"bound_at_N0", theorem_bound(p, horizon, N0)}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dump-matrix

int run_dump(const json& cfg) {
  const Source src = resolve_source(cfg.at("source"));
  const std::string method = cfg.at("method").get<std::string>();
  const int N = cfg.at("N").get<int>();
  require(N >= 1, "N must be at least 1");
  if (method == "classical") {
    Output out(cfg.at("output").get<std::string>());
    io::write_classical_matrix(out.stream(), classical(src, N));
  } else if (method == "carleman-fourier") {
    const LiftedSystem sys = lift(src, N);
    {
      Output out(cfg.at("output").get<std::string>());
      io::write_blocks(out.stream(), sys.blocks);
    }
    if (!cfg.at("layout").is_null()) {
      Output lay(cfg.at("layout").get<std::string>());
      io::write_layout(lay.stream(), *sys.layout, N);
    }
  } else {
    throw UsageError("dump-matrix method must be classical or carleman-fourier");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// normalize

int run_normalize(const json& cfg) {
  KuramotoModel model;
  try {
    model = io::parse_model(cfg.at("model"));
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const NormalizedKuramoto n = normalize(model);
  json out{{"model", io::to_json(n.model)}, {"time_scale", n.time_scale}, {"ktilde", n.ktilde},
           {"input_was_normalized", is_normalized(model)}};
  if (n.model.d == 2) {
    const ReducedKuramoto r = reduce_two_oscillator(n);
    out["reduced"] = {{"omega1", r.omega1}, {"ktilde", r.ktilde}, {"theta0", r.theta0}};
  }
  write_json(cfg.at("output").get<std::string>(), out);
  return kExitOk;
}

int dispatch(const json& cfg) {
  const std::string cmd = cfg.at("command").get<std::string>();
  if (cmd == "simulate") return run_simulate(cfg);
  if (cmd == "sweep") return run_sweep(cfg);
  if (cmd == "bound") return run_bound(cfg);
  if (cmd == "n0") return run_n0(cfg);
  if (cmd == "dump-matrix") return run_dump(cfg);
  if (cmd == "normalize") return run_normalize(cfg);
  throw UsageError("unknown command in config: " + cmd);
}

/// Config stored in a sidecar (or a bare config object); `output` overrides the stored path.
json replay_config(const std::string& path, const std::string& output_override) {
  json j = read_json_file(path);
  json cfg = j.contains("config") ? j.at("config") : j;
  if (!cfg.contains("command")) throw UsageError(path + " holds no replayable config");
  if (!output_override.empty()) {
    cfg["output"] = output_override;
    cfg["meta"] = nullptr;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carleman and Carleman-Fourier linearization of periodic ODEs", "cflin"};
  app.set_config("--config", "", "TOML config file; flags override its values");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::optional<json> config;
  std::string replay;
  std::string output = "-";
  std::optional<std::string> meta_path;

  // simulate
  auto* sim = app.add_subcommand("simulate", "integrate one initial value problem");
  SourceFlags sim_src;
  std::string sim_method = "carleman-fourier";
  int sim_N = 10;
  double sim_t_end = 0.5;
  std::size_t sim_samples = 65;
  std::optional<double> sim_tol;
  std::optional<std::size_t> sim_max_components;
  std::string sim_solver = "rk";
  add_source_options(*sim, sim_src);
  sim->add_option("--method", sim_method)->check(CLI::IsMember({"classical", "carleman-fourier", "reference"}));
  sim->add_option("-N,--order", sim_N, "section order");
  sim->add_option("--t-end", sim_t_end);
  sim->add_option("--samples", sim_samples, "number of uniform samples on [0, t-end]");
  sim->add_option("--tol", sim_tol, "solver tolerance (1e-12 for reference, 1e-10 otherwise)");
  sim->add_option("--max-components", sim_max_components, "limit the number of CSV state columns");
  sim->add_option("--linear-solver", sim_solver)->check(CLI::IsMember({"rk", "expm"}));
  sim->add_option("-o,--output", output, "trajectory CSV ('-' for stdout)");
  sim->add_option("--meta", meta_path, "metadata sidecar (default: <output>.json)");
  sim->add_option("--replay", replay, "rerun the config stored in a sidecar");

  // sweep
  auto* sw = app.add_subcommand("sweep", "error surface over initial phase and time");
  double sw_omega1 = 0.0;
  double sw_ktilde = 1.0;
  std::string sw_method = "carleman-fourier";
  int sw_N = 10;
  double sw_theta_min = -std::numbers::pi / 2;
  double sw_theta_max = std::numbers::pi / 2;
  std::size_t sw_theta_count = 33;
  double sw_t_end = 0.5;
  std::size_t sw_t_count = 65;
  std::vector<double> sw_theta_values;
  std::vector<double> sw_t_values;
  double sw_tol = 1e-10;
  double sw_ref_tol = 1e-12;
  double sw_floor = kMetricFloor;
  double sw_cap = kMetricCap;
  unsigned sw_workers = 1;
  std::string sw_fig1;
  sw->add_option("--omega1", sw_omega1);
  sw->add_option("--ktilde", sw_ktilde);
  sw->add_option("--method", sw_method)->check(CLI::IsMember({"classical", "carleman-fourier"}));
  sw->add_option("-N,--order", sw_N);
  sw->add_option("--theta0-min", sw_theta_min);
  sw->add_option("--theta0-max", sw_theta_max);
  sw->add_option("--theta0-count", sw_theta_count);
  sw->add_option("--theta0-values", sw_theta_values, "explicit theta0 axis")->delimiter(',');
  sw->add_option("--t-end", sw_t_end);
  sw->add_option("--t-count", sw_t_count);
  sw->add_option("--t-values", sw_t_values, "explicit time axis")->delimiter(',');
  sw->add_option("--tol", sw_tol, "tolerance of the linearized solve");
  sw->add_option("--reference-tol", sw_ref_tol);
  sw->add_option("--floor", sw_floor);
  sw->add_option("--cap", sw_cap);
  sw->add_option("--workers", sw_workers, "worker threads (0: hardware concurrency)");
  sw->add_option("--fig1", sw_fig1, "write the four omega1 in {0,1} x {E_C, E_CF} surfaces into this directory");
  sw->add_option("-o,--output", output, "surface CSV ('-' for stdout)");
  sw->add_option("--meta", meta_path, "metadata sidecar (default: <output>.json)");
  sw->add_option("--replay", replay, "rerun the config stored in a sidecar");

  // bound
  auto* bd = app.add_subcommand("bound", "measured error against the a priori bound");
  SourceFlags bd_src;
  double bd_horizon = 0.0;
  std::size_t bd_samples = 50;
  std::vector<int> bd_Ns{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  double bd_slack = 1e-9;
  double bd_tol = 1e-12;
  add_source_options(*bd, bd_src);
  bd->add_option("--horizon", bd_horizon, "horizon T*")->required();
  bd->add_option("--samples", bd_samples);
  bd->add_option("--N-values", bd_Ns)->delimiter(',');
  bd->add_option("--slack", bd_slack);
  bd->add_option("--tol", bd_tol);
  bd->add_option("-o,--output", output, "report JSON ('-' for stdout)");
  bd->add_option("--replay", replay, "rerun the config stored in a report");

  // n0
  auto* n0 = app.add_subcommand("n0", "smallest section order with bound <= 1/2 on [0, T*]");
  SourceFlags n0_src;
  std::optional<double> n0_D;
  double n0_r = 0.5;
  int n0_d = 1;
  bool n0_multi = false;
  double n0_horizon = 0.0;
  n0->add_option("--D", n0_D, "envelope constant D");
  n0->add_option("--r", n0_r, "envelope rate r");
  n0->add_option("--d", n0_d, "state dimension of a quasi-periodic field");
  n0->add_flag("--multi", n0_multi, "use the quasi-periodic rate constant 2^d D");
  auto* n0_k2 = n0->add_flag("--kuramoto2", n0_src.kuramoto2);
  n0->add_option("--omega1", n0_src.omega1);
  n0->add_option("--ktilde", n0_src.ktilde);
  auto* n0_field = n0->add_option("--field", n0_src.field_path);
  auto* n0_model = n0->add_option("--model", n0_src.model_path);
  n0_k2->excludes(n0_field)->excludes(n0_model);
  n0_field->excludes(n0_model);
  n0->add_option("--horizon", n0_horizon, "horizon T*")->required();
  n0->add_option("-o,--output", output);

  // dump-matrix
  auto* dm = app.add_subcommand("dump-matrix", "write the classical matrix or the Carleman-Fourier blocks");
  SourceFlags dm_src;
  std::string dm_method = "carleman-fourier";
  int dm_N = 4;
  std::optional<std::string> dm_layout;
  add_source_options(*dm, dm_src);
  dm->add_option("--method", dm_method)->check(CLI::IsMember({"classical", "carleman-fourier"}));
  dm->add_option("-N,--order", dm_N);
  dm->add_option("-o,--output", output, "matrix or block CSV ('-' for stdout)");
  dm->add_option("--layout", dm_layout, "multi-index layout CSV (carleman-fourier)");

  // normalize
  auto* nm = app.add_subcommand("normalize", "normalise a Kuramoto model");
  std::string nm_model;
  nm->add_option("--model", nm_model, "Kuramoto model description (JSON)")->required();
  nm->add_option("-o,--output", output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!replay.empty()) return dispatch(replay_config(replay, output == "-" ? "" : output));

    auto meta_json = [&] { return meta_path ? json(*meta_path) : json(nullptr); };
    if (sim->parsed()) {
      config = json{{"command", "simulate"},
                    {"source", source_config(sim_src)},
                    {"method", sim_method},
                    {"N", sim_N},
                    {"t_end", sim_t_end},
                    {"samples", sim_samples},
                    {"tol", sim_tol ? *sim_tol : (sim_method == "reference" ? 1e-12 : 1e-10)},
                    {"linear_solver", sim_solver},
                    {"max_components", sim_max_components ? json(*sim_max_components) : json(nullptr)},
                    {"output", output},
                    {"meta", meta_json()}};
    } else if (sw->parsed()) {
      json base{{"command", "sweep"},
                {"omega1", sw_omega1},
                {"ktilde", sw_ktilde},
                {"method", sw_method},
                {"N", sw_N},
                {"theta0_axis", sw_theta_values.empty() ? linspace(sw_theta_min, sw_theta_max, sw_theta_count)
                                                        : sw_theta_values},
                {"t_axis", sw_t_values.empty() ? linspace(0.0, sw_t_end, sw_t_count) : sw_t_values},
                {"tol", sw_tol},
                {"reference_tol", sw_ref_tol},
                {"floor", sw_floor},
                {"cap", sw_cap},
                {"workers", sw_workers},
                {"output", output},
                {"meta", meta_json()}};
      if (!sw_fig1.empty()) {
        // Top row E_C, bottom row E_CF; left omega1 = 0, right omega1 = 1.
        for (const char* method : {"classical", "carleman-fourier"}) {
          for (int w : {0, 1}) {
            json panel = base;
            panel["omega1"] = static_cast<double>(w);
            panel["method"] = method;
            const std::string name = std::string(std::string(method) == "classical" ? "EC" : "ECF") + "_omega" +
                                     std::to_string(w) + ".csv";
            panel["output"] = (std::filesystem::path(sw_fig1) / name).string();
            panel["meta"] = nullptr;
            if (const int rc = dispatch(panel); rc != kExitOk) return rc;
          }
        }
        return kExitOk;
      }
      config = base;
    } else if (bd->parsed()) {
      config = json{{"command", "bound"},
                    {"source", source_config(bd_src)},
                    {"horizon", bd_horizon},
                    {"samples", bd_samples},
                    {"N_values", bd_Ns},
                    {"slack", bd_slack},
                    {"tol", bd_tol},
                    {"output", output}};
    } else if (n0->parsed()) {
      json cfg{{"command", "n0"}, {"horizon", n0_horizon}, {"output", output}};
      const bool has_source = n0_src.kuramoto2 || !n0_src.field_path.empty() || !n0_src.model_path.empty();
      n0_src.r = n0_r;
      n0_src.D = n0_D;
      if (has_source) {
        cfg["source"] = source_config(n0_src);
      } else {
        if (!n0_D) throw UsageError("n0 needs --D or a model source");
        cfg["D"] = *n0_D;
        cfg["r"] = n0_r;
        cfg["d"] = n0_d;
        cfg["multi"] = n0_multi;
      }
      config = cfg;
    } else if (dm->parsed()) {
      config = json{{"command", "dump-matrix"},
                    {"source", source_config(dm_src)},
                    {"method", dm_method},
                    {"N", dm_N},
                    {"output", output},
                    {"layout", dm_layout ? json(*dm_layout) : json(nullptr)}};
    } else if (nm->parsed()) {
      config = json{{"command", "normalize"}, {"model", read_json_file(nm_model)}, {"output", output}};
    }
    return dispatch(*config);
  } catch (const UsageError& e) {
    std::cerr << "cflin: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "cflin: error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
