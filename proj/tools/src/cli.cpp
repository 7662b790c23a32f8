#include "qmem_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qmem/analysis.hpp"
#include "qmem/error.hpp"
#include "qmem/experiment.hpp"
#include "qmem/io.hpp"
#include "qmem/memory_sim.hpp"
#include "qmem/noise_model.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/random.hpp"
#include "qmem/report.hpp"

#ifndef QMEM_VERSION
#define QMEM_VERSION "0.0.0"
#endif

namespace qmem::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
  std::string format; // empty: per-output default
  unsigned workers = 0;
};

struct SimulateOptions {
  std::string kind = "storage";
  std::string state = "all";
  std::uint64_t trials = 1'000'000;
  std::uint64_t polarimetry_trials = 100'000;
  int angles = 16;
  std::string stage = "retrieved";
  std::vector<double> times{0, 10, 20, 30, 40, 50, 60, 70};
  std::vector<double> powers{0, 1, 2, 4, 8, 16, 32};
  std::vector<double> optics_axis{0, 0, 1};
  double optics_angle = 0.0;
};

struct AnalyzeOptions {
  std::string dir;
  std::vector<double> roi;
  std::vector<double> bg;
  bool measured_lengths = false;
  std::vector<double> efficiency_roi;
};

struct CurveOptions {
  std::optional<double> eta;
  std::optional<double> q;
  std::optional<int> n_max;
  double p_min = 0.1;
  double p_max = 24.0;
  int points = 60;
  std::vector<double> p;
};

struct FitOptions {
  std::string kind;
  std::string file;
};

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Records how the outputs were produced next to them.
class Manifest {
public:
  Manifest(std::string command, const Globals& g, const std::vector<std::string>& args)
      : command_(std::move(command)), globals_(g), args_(args) {}

  void add(const fs::path& p) { outputs_.push_back(p.string()); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const fs::path& path) const {
    json j;
    j["command"] = command_;
    j["arguments"] = args_;
    j["config"] = globals_.config.empty() ? json(nullptr) : json(globals_.config);
    j["seed"] = globals_.seed;
    j["outputs"] = outputs_;
    j["version"] = QMEM_VERSION;
    j["timestamp"] = timestamp_utc();
    for (const auto& [k, v] : extra_.items()) {
      j[k] = v;
    }
    io::write_file_atomic(path, j.dump(2) + "\n");
  }

private:
  std::string command_;
  Globals globals_;
  std::vector<std::string> args_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void write_output(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  io::write_file_atomic(path, text);
}

std::string resolve_format(const Globals& g, const char* fallback) {
  return g.format.empty() ? std::string(fallback) : g.format;
}

MemoryConfig load_memory_config(const Globals& g) {
  if (g.config.empty()) {
    throw ConfigError("this command needs --config <file>");
  }
  json j;
  try {
    j = json::parse(io::read_file(g.config));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + g.config + "' is not valid JSON: " + e.what());
  }
  return io::config_from_json(j);
}

std::string histogram_text(const ArrivalHistogram& h, const std::string& format) {
  if (format == "json") {
    return io::to_json(h).dump(1) + "\n";
  }
  std::string out = "t_start_us,counts\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out += io::format_double(h.t_start + h.bin_width * static_cast<double>(i)) + "," +
           std::to_string(h.counts[i]) + "\n";
  }
  return out;
}

std::string sweep_text(const SweepSeries& s, std::string_view x_name, std::string_view y_name,
                       const std::string& format) {
  if (format == "csv") {
    return io::sweep_to_csv(s, x_name, y_name);
  }
  json j;
  j[std::string(x_name)] = s.x;
  j[std::string(y_name)] = s.y;
  j[std::string(y_name) + "_err"] = s.y_err;
  return j.dump(1) + "\n";
}

std::string polarimetry_text(const SweepSeries& s, const std::string& format) {
  if (format == "csv") {
    return io::polarimetry_to_csv(io::samples_from_sweep(s));
  }
  json j;
  std::vector<double> deg;
  for (double a : s.x) {
    deg.push_back(a * 180.0 / std::numbers::pi);
  }
  j["qwp_angle_deg"] = deg;
  j["intensity"] = s.y;
  j["intensity_err"] = s.y_err;
  return j.dump(1) + "\n";
}

std::string polarimetry_name(CanonicalState s, SweepStage stage) {
  return "polarimetry_" + std::string(name_of(s)) + "_" + std::string(name_of(stage)) + ".csv";
}

std::string storage_name(CanonicalState s) { return "storage_" + std::string(name_of(s)) + ".json"; }

std::vector<CanonicalState> selected_states(const std::string& state) {
  if (state == "all" || state == "ALL") {
    return {kCanonicalStates.begin(), kCanonicalStates.end()};
  }
  return {parse_state(state)};
}

Rotation3 optics_rotation(const SimulateOptions& o) {
  if (o.optics_angle == 0.0) {
    return Rotation3::identity();
  }
  const Eigen::Vector3d axis(o.optics_axis[0], o.optics_axis[1], o.optics_axis[2]);
  if (!(axis.norm() > 0.0)) {
    throw InvalidArgument("optics axis must be nonzero");
  }
  return Rotation3::about_axis(axis, o.optics_angle);
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) {
    throw InvalidArgument("this command needs --out <path>");
  }
  return g.out;
}

int cmd_simulate(const Globals& g, const SimulateOptions& o, const std::vector<std::string>& args,
                 std::ostream& out) {
  const MemoryConfig config = load_memory_config(g);
  const fs::path dest = require_out(g);
  if (o.trials == 0 || o.polarimetry_trials == 0) {
    throw InvalidArgument("trial counts must be positive");
  }
  Manifest manifest("simulate", g, args);
  manifest.set("kind", o.kind);
  manifest.set("trials", o.trials);
  const auto angles = uniform_qwp_angles(static_cast<std::size_t>(std::max(o.angles, 0)));
  fs::path manifest_path = manifest_for_file(dest);

  const auto emit = [&](const fs::path& p, const std::string& text) {
    write_output(p, text);
    manifest.add(p);
  };

  if (o.kind == "storage") {
    const auto states = selected_states(o.state);
    const std::string fmt = resolve_format(g, "json");
    if (states.size() == 1) {
      auto h = simulate_histogram(config, angles_of(states[0]), Analyzer::none(), o.trials, g.seed, g.workers);
      h.label = "storage:" + std::string(name_of(states[0]));
      emit(dest, histogram_text(h, fmt));
    } else {
      fs::create_directories(dest);
      for (std::size_t i = 0; i < states.size(); ++i) {
        auto h = simulate_histogram(config, angles_of(states[i]), Analyzer::none(), o.trials,
                                    derive_seed(g.seed, 10 + i), g.workers);
        h.label = "storage:" + std::string(name_of(states[i]));
        fs::path p = dest / storage_name(states[i]);
        if (fmt == "csv") {
          p.replace_extension(".csv");
        }
        emit(p, histogram_text(h, fmt));
      }
      manifest_path = dest / "manifest.json";
    }
  } else if (o.kind == "reference") {
    auto h = simulate_reference(config, o.trials, g.seed, g.workers);
    h.label = "reference";
    emit(dest, histogram_text(h, resolve_format(g, "json")));
  } else if (o.kind == "polarimetry") {
    const auto states = selected_states(o.state);
    const SweepStage stage = parse_sweep_stage(o.stage);
    const std::string fmt = resolve_format(g, "csv");
    const Rotation3 optics = optics_rotation(o);
    if (states.size() == 1) {
      const auto s = simulate_polarimetry_sweep(config, angles_of(states[0]), angles, o.trials, g.seed,
                                                stage, optics, g.workers);
      emit(dest, polarimetry_text(s, fmt));
    } else {
      fs::create_directories(dest);
      for (std::size_t i = 0; i < states.size(); ++i) {
        const auto s = simulate_polarimetry_sweep(config, angles_of(states[i]), angles, o.trials,
                                                  derive_seed(g.seed, 100 + 10 * i), stage, optics, g.workers);
        fs::path p = dest / polarimetry_name(states[i], stage);
        if (fmt == "json") {
          p.replace_extension(".json");
        }
        emit(p, polarimetry_text(s, fmt));
      }
      manifest_path = dest / "manifest.json";
    }
  } else if (o.kind == "decay") {
    const auto s = simulate_decay_series(config, o.times, o.trials, g.seed, g.workers);
    emit(dest, sweep_text(s, "storage_time_us", "efficiency", resolve_format(g, "csv")));
  } else if (o.kind == "background") {
    const auto s = simulate_background_sweep(config, o.powers, o.trials, g.seed, g.workers);
    if (resolve_format(g, "csv") == "csv") {
      emit(dest, io::background_sweep_to_csv(s));
    } else {
      json j;
      j["power_mw"] = s.background.x;
      j["background"] = s.background.y;
      j["background_err"] = s.background.y_err;
      j["technical"] = s.technical.y;
      j["technical_err"] = s.technical.y_err;
      emit(dest, j.dump(1) + "\n");
    }
  } else if (o.kind == "experiment") {
    ExperimentPlan plan;
    plan.trials = o.trials;
    plan.polarimetry_trials = o.polarimetry_trials;
    plan.qwp_angles = angles;
    plan.optics = optics_rotation(o);
    const auto data = simulate_experiment(config, plan, g.seed, g.workers);
    fs::create_directories(dest);
    emit(dest / "config.json", io::to_json(config).dump(2) + "\n");
    emit(dest / "reference.json", histogram_text(data.reference, "json"));
    for (const auto& [state, d] : data.states) {
      emit(dest / storage_name(state), histogram_text(d.storage, "json"));
      emit(dest / polarimetry_name(state, SweepStage::Input), polarimetry_text(d.input, "csv"));
      emit(dest / polarimetry_name(state, SweepStage::Transmitted), polarimetry_text(d.transmitted, "csv"));
      emit(dest / polarimetry_name(state, SweepStage::Retrieved), polarimetry_text(d.retrieved, "csv"));
    }
    manifest.set("polarimetry_trials", o.polarimetry_trials);
    manifest_path = dest / "manifest.json";
  } else {
    throw InvalidArgument("unknown simulation kind '" + o.kind + "'");
  }
  manifest.write(manifest_path);
  out << "wrote " << manifest_path.string() << "\n";
  return kExitOk;
}

ArrivalHistogram read_histogram(const fs::path& p) {
  try {
    return io::histogram_from_json(json::parse(io::read_file(p)));
  } catch (const json::parse_error& e) {
    throw FormatError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

Window window_option(const std::vector<double>& v, const Window& fallback, const char* name) {
  if (v.empty()) {
    return fallback;
  }
  if (v.size() != 2) {
    throw InvalidArgument(std::string(name) + " expects two values: start end");
  }
  if (!(v[1] > v[0])) {
    throw InvalidArgument(std::string(name) + " window is empty");
  }
  return Window::make(v[0], v[1]);
}

std::string report_csv(const StorageReport& r) {
  std::string out = "state,sbr,efficiency,fidelity,transmitted_fidelity\n";
  const auto row = [&](std::string_view name, double a, double b, double c, double d) {
    out += std::string(name) + "," + io::format_double(a) + "," + io::format_double(b) + "," +
           io::format_double(c) + "," + io::format_double(d) + "\n";
  };
  for (const auto& s : r.rows) {
    row(name_of(s.state), s.sbr, s.efficiency, s.fidelity, s.transmitted_fidelity);
  }
  row("average", r.sbr.mean, r.efficiency.mean, r.fidelity.mean, r.transmitted_fidelity.mean);
  row("sem", r.sbr.sem, r.efficiency.sem, r.fidelity.sem, r.transmitted_fidelity.sem);
  return out;
}

int cmd_analyze(const Globals& g, const AnalyzeOptions& o, const std::vector<std::string>& args,
                std::ostream& out) {
  const fs::path dir = o.dir;
  if (!fs::is_directory(dir)) {
    throw FormatError("'" + dir.string() + "' is not a directory");
  }
  const MemoryConfig config = g.config.empty() ? MemoryConfig{} : load_memory_config(g);
  ReportInputs in;
  in.roi = window_option(o.roi, config.roi(), "--roi");
  in.background = window_option(o.bg, config.background_window(), "--bg");
  in.pure_inputs = !o.measured_lengths;
  if (!o.efficiency_roi.empty()) {
    in.efficiency_roi = window_option(o.efficiency_roi, in.roi, "--efficiency-roi");
  }
  in.reference = read_histogram(dir / "reference.json");
  for (auto s : kCanonicalStates) {
    StateMeasurement m;
    m.storage = read_histogram(dir / storage_name(s));
    const auto fit = [&](SweepStage stage) {
      return fit_stokes(io::polarimetry_from_csv(io::read_file(dir / polarimetry_name(s, stage)))).stokes;
    };
    m.input = fit(SweepStage::Input);
    m.transmitted = fit(SweepStage::Transmitted);
    m.retrieved = fit(SweepStage::Retrieved);
    in.states.emplace(s, std::move(m));
  }
  const StorageReport report = build_report(in);
  const std::string fmt = resolve_format(g, "json");
  const std::string text = fmt == "csv" ? report_csv(report) : io::to_json(report).dump(2) + "\n";

  out << format_table(report);
  if (g.out.empty()) {
    out << "\n" << text;
  } else {
    const fs::path dest = g.out;
    write_output(dest, text);
    Manifest manifest("analyze", g, args);
    manifest.add(dest);
    manifest.set("input_dir", dir.string());
    manifest.write(manifest_for_file(dest));
  }
  return kExitOk;
}

int cmd_model_curve(const Globals& g, const CurveOptions& o, const std::vector<std::string>& args,
                    std::ostream& out) {
  NoiseModelParams params;
  if (!g.config.empty()) {
    try {
      params = io::noise_params_from_json(json::parse(io::read_file(g.config)));
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + g.config + "' is not valid JSON: " + e.what());
    }
  }
  params.eta = o.eta.value_or(params.eta);
  params.q = o.q.value_or(params.q);
  params.n_max = o.n_max.value_or(params.n_max);
  params.validate();
  if (params.q == 0.0) {
    throw UndefinedQuantity("q = 0 gives an infinite SBR; the curve is undefined");
  }

  std::vector<double> grid = o.p;
  if (grid.empty()) {
    if (o.points < 1) {
      throw InvalidArgument("--points must be at least 1");
    }
    if (!(o.p_min > 0.0) || !(o.p_max >= o.p_min)) {
      throw InvalidArgument("p range must satisfy 0 < p-min <= p-max");
    }
    if (o.points == 1 || o.p_max == o.p_min) {
      if (o.points != 1) {
        throw InvalidArgument("a single-point range needs --points 1");
      }
      grid.push_back(o.p_min);
    } else {
      for (int i = 0; i < o.points; ++i) {
        grid.push_back(o.p_min + (o.p_max - o.p_min) * i / (o.points - 1));
      }
    }
  }
  const auto curve = fidelity_sbr_curve(params.eta, params.q, params.n_max, grid);

  std::string text;
  if (resolve_format(g, "csv") == "csv") {
    text = io::curve_to_csv(curve);
  } else {
    json rows = json::array();
    for (const auto& c : curve) {
      rows.push_back({{"p", c.p}, {"sbr", c.sbr}, {"fidelity", c.fidelity}});
    }
    text = json{{"params", io::to_json(params)}, {"curve", rows}}.dump(2) + "\n";
  }
  if (g.out.empty()) {
    out << text;
  } else {
    const fs::path dest = g.out;
    write_output(dest, text);
    Manifest manifest("model-curve", g, args);
    manifest.add(dest);
    manifest.set("params", io::to_json(params));
    manifest.write(manifest_for_file(dest));
  }
  return kExitOk;
}

int cmd_fit(const Globals& g, const FitOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  const std::string text_in = io::read_file(o.file);
  FitResult result;
  if (o.kind == "decay") {
    result = fit_exponential_decay(io::sweep_from_csv(text_in));
  } else if (o.kind == "background") {
    const auto s = io::background_sweep_from_csv(text_in);
    result = fit_sqrt_background(s.background, s.technical);
  } else if (o.kind == "stokes") {
    result = fit_stokes(io::polarimetry_from_csv(text_in)).fit;
  } else {
    throw InvalidArgument("unknown fit kind '" + o.kind + "'");
  }

  std::string text;
  if (resolve_format(g, "json") == "json") {
    text = io::to_json(result).dump(2) + "\n";
  } else {
    text = "param,value,stderr\n";
    for (std::size_t i = 0; i < result.params.size(); ++i) {
      text += result.params[i].first + "," + io::format_double(result.params[i].second) + "," +
              io::format_double(result.errors[i].second) + "\n";
    }
  }
  if (g.out.empty()) {
    out << text;
  } else {
    const fs::path dest = g.out;
    write_output(dest, text);
    Manifest manifest("fit", g, args);
    manifest.add(dest);
    manifest.set("input", o.file);
    manifest.write(manifest_for_file(dest));
  }
  return kExitOk;
}

void add_globals(CLI::App& app, Globals& g) {
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config, "Configuration JSON file");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--workers", g.workers, "Worker threads (0: all cores)")->capture_default_str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-rail polarization memory simulator and analysis toolkit", "qmem"};
  app.set_version_flag("--version", QMEM_VERSION);
  app.require_subcommand(1);
  Globals g;
  add_globals(app, g);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate histograms and sweeps")->fallthrough();
  simulate->add_option("--kind", sim.kind, "storage|reference|polarimetry|decay|background|experiment")
      ->check(CLI::IsMember({"storage", "reference", "polarimetry", "decay", "background", "experiment"}))
      ->capture_default_str();
  simulate->add_option("--state", sim.state, "H V D A R L or all")->capture_default_str();
  simulate->add_option("--trials", sim.trials, "Trials per histogram or per sweep point")->capture_default_str();
  simulate->add_option("--polarimetry-trials", sim.polarimetry_trials, "Trials per waveplate angle")
      ->capture_default_str();
  simulate->add_option("--angles", sim.angles, "Number of waveplate angles")->capture_default_str();
  simulate->add_option("--stage", sim.stage, "input|transmitted|retrieved")
      ->check(CLI::IsMember({"input", "transmitted", "retrieved"}))
      ->capture_default_str();
  simulate->add_option("--times", sim.times, "Storage times in us")->delimiter(',');
  simulate->add_option("--powers", sim.powers, "Control powers in mW")->delimiter(',');
  simulate->add_option("--optics-axis", sim.optics_axis, "Setup rotation axis x,y,z")
      ->delimiter(',')
      ->expected(3);
  simulate->add_option("--optics-angle", sim.optics_angle, "Setup rotation angle in radians");

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Build the storage report of a simulated run")->fallthrough();
  analyze->add_option("dir", an.dir, "Directory written by simulate --kind experiment")->required();
  analyze->add_option("--roi", an.roi, "Region of interest start,end in us")->delimiter(',')->expected(2);
  analyze->add_option("--bg", an.bg, "Signal-free window start,end in us")->delimiter(',')->expected(2);
  analyze->add_option("--efficiency-roi", an.efficiency_roi, "Wider window for the efficiency column, start,end in us")
      ->delimiter(',')
      ->expected(2);
  analyze->add_flag("--measured-lengths", an.measured_lengths,
                    "Use measured input lengths instead of treating inputs as pure");

  CurveOptions cv;
  auto* curve = app.add_subcommand("model-curve", "Fidelity versus SBR from the detection model")->fallthrough();
  curve->add_option("--eta", cv.eta, "Memory efficiency");
  curve->add_option("--q", cv.q, "Mean background photon number");
  curve->add_option("--n-max", cv.n_max, "Truncation order");
  curve->add_option("--p-min", cv.p_min, "Smallest mean input photon number")->capture_default_str();
  curve->add_option("--p-max", cv.p_max, "Largest mean input photon number")->capture_default_str();
  curve->add_option("--points", cv.points, "Grid points")->capture_default_str();
  curve->add_option("--p", cv.p, "Explicit ascending grid")->delimiter(',');

  FitOptions ft;
  auto* fit = app.add_subcommand("fit", "Fit a decay, background or polarimeter data file")->fallthrough();
  fit->add_option("kind", ft.kind, "decay|background|stokes")
      ->required()
      ->check(CLI::IsMember({"decay", "background", "stokes"}));
  fit->add_option("file", ft.file, "Input CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) {
      return cmd_simulate(g, sim, args, out);
    }
    if (*analyze) {
      return cmd_analyze(g, an, args, out);
    }
    if (*curve) {
      return cmd_model_curve(g, cv, args, out);
    }
    return cmd_fit(g, ft, args, out);
  } catch (const FitError& e) {
    err << "qmem: fit failed: " << e.what() << "\n";
    return kExitFit;
  } catch (const ConfigError& e) {
    err << "qmem: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UndefinedQuantity& e) {
    err << "qmem: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "qmem: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "qmem: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidData& e) {
    err << "qmem: invalid data: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "qmem: " << e.what() << "\n";
    return kExitFailure;
  }
}

} // namespace qmem::cli
