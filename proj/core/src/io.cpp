#include "qmem/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <system_error>

#include "qmem/error.hpp"

namespace qmem::io {

namespace {

[[noreturn]] void schema(const std::string& what) { throw FormatError(what); }

double number(const json& j, const char* key) {
  if (!j.contains(key)) {
    schema(std::string("missing key '") + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) {
    schema(std::string("key '") + key + "' must be a number");
  }
  return v.get<double>();
}

std::uint64_t unsigned_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
    schema(std::string("key '") + key + "' must be a nonnegative integer");
  }
  return j.at(key).get<std::uint64_t>();
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) {
    schema(std::string(what) + " must be a JSON object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      schema(std::string("unknown key '") + key + "' in " + what);
    }
  }
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

// JSON ----------------------------------------------------------------------

json to_json(const StokesVector& s) { return json::array({s.s0, s.s1, s.s2, s.s3}); }

StokesVector stokes_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    schema("Stokes vector must be a 4-element array");
  }
  for (const auto& v : j) {
    if (!v.is_number()) {
      schema("Stokes vector entries must be numbers");
    }
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json to_json(const ArrivalHistogram& h) {
  return json{{"t_start_us", h.t_start},
              {"bin_width_us", h.bin_width},
              {"n_trials", h.n_trials},
              {"counts", h.counts},
              {"label", h.label}};
}

ArrivalHistogram histogram_from_json(const json& j) {
  reject_unknown(j, {"t_start_us", "bin_width_us", "n_trials", "counts", "label"}, "histogram");
  ArrivalHistogram h;
  h.t_start = number(j, "t_start_us");
  h.bin_width = number(j, "bin_width_us");
  h.n_trials = unsigned_number(j, "n_trials");
  if (!j.contains("counts") || !j.at("counts").is_array()) {
    schema("histogram 'counts' must be an array");
  }
  for (const auto& c : j.at("counts")) {
    if (!c.is_number_unsigned()) {
      schema("histogram counts must be nonnegative integers");
    }
    h.counts.push_back(c.get<std::uint64_t>());
  }
  if (j.contains("label")) {
    if (!j.at("label").is_string()) {
      schema("histogram 'label' must be a string");
    }
    h.label = j.at("label").get<std::string>();
  }
  try {
    h.validate();
  } catch (const InvalidData& e) {
    schema(e.what());
  }
  return h;
}

json to_json(const MemoryConfig& c) {
  return json{{"eta_h", c.eta_h},
              {"eta_v", c.eta_v},
              {"p_in", c.p_in},
              {"chain", c.chain},
              {"bg_rate", c.bg_rate},
              {"tech_rate", c.tech_rate},
              {"roi_start", c.roi_start},
              {"roi_end", c.roi_end},
              {"bg_window_start", c.bg_window_start},
              {"bg_window_end", c.bg_window_end},
              {"bin_width", c.bin_width},
              {"t_max", c.t_max},
              {"tau_coherence", c.tau_coherence},
              {"retrieval_shape",
               {{"kind", std::string(name_of(c.retrieval_shape.kind))},
                {"tau_us", c.retrieval_shape.tau_us}}},
              {"dephasing", c.dephasing},
              {"tech_coeff", c.tech_coeff},
              {"fwm_coeff", c.fwm_coeff}};
}

MemoryConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"eta_h", "eta_v", "p_in", "chain", "bg_rate", "tech_rate", "roi_start", "roi_end",
                  "bg_window_start", "bg_window_end", "bin_width", "t_max", "tau_coherence",
                  "retrieval_shape", "dephasing", "tech_coeff", "fwm_coeff"},
                 "memory config");
  MemoryConfig c;
  c.eta_h = number(j, "eta_h");
  c.eta_v = number(j, "eta_v");
  c.p_in = number(j, "p_in");
  c.chain = number(j, "chain");
  c.bg_rate = number(j, "bg_rate");
  c.tech_rate = number(j, "tech_rate");
  c.roi_start = number(j, "roi_start");
  c.roi_end = number(j, "roi_end");
  c.bg_window_start = number(j, "bg_window_start");
  c.bg_window_end = number(j, "bg_window_end");
  c.bin_width = number(j, "bin_width");
  c.t_max = number(j, "t_max");
  c.tau_coherence = number(j, "tau_coherence");

  if (!j.contains("retrieval_shape")) {
    schema("missing key 'retrieval_shape'");
  }
  const auto& shape = j.at("retrieval_shape");
  try {
    if (shape.is_string()) {
      c.retrieval_shape.kind = parse_pulse_shape(shape.get<std::string>());
    } else {
      reject_unknown(shape, {"kind", "tau_us"}, "retrieval_shape");
      if (!shape.contains("kind") || !shape.at("kind").is_string()) {
        schema("retrieval_shape.kind must be a string");
      }
      c.retrieval_shape.kind = parse_pulse_shape(shape.at("kind").get<std::string>());
      if (shape.contains("tau_us")) {
        c.retrieval_shape.tau_us = number(shape, "tau_us");
      }
    }
  } catch (const InvalidArgument& e) {
    schema(e.what());
  }

  c.dephasing = j.contains("dephasing") ? number(j, "dephasing") : 0.0;
  c.tech_coeff = j.contains("tech_coeff") ? number(j, "tech_coeff") : 0.0;
  c.fwm_coeff = j.contains("fwm_coeff") ? number(j, "fwm_coeff") : 0.0;
  c.validate();
  return c;
}

json to_json(const NoiseModelParams& p) {
  return json{{"eta", p.eta}, {"p", p.p}, {"q", p.q}, {"n_max", p.n_max}};
}

NoiseModelParams noise_params_from_json(const json& j) {
  reject_unknown(j, {"eta", "p", "q", "n_max"}, "noise model parameters");
  NoiseModelParams p;
  if (j.contains("eta")) {
    p.eta = number(j, "eta");
  }
  if (j.contains("p")) {
    p.p = number(j, "p");
  }
  if (j.contains("q")) {
    p.q = number(j, "q");
  }
  if (j.contains("n_max")) {
    if (!j.at("n_max").is_number_integer()) {
      schema("key 'n_max' must be an integer");
    }
    p.n_max = j.at("n_max").get<int>();
  }
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

json to_json(const FitResult& f) {
  json params = json::object();
  json errors = json::object();
  for (const auto& [k, v] : f.params) {
    params[k] = v;
  }
  for (const auto& [k, v] : f.errors) {
    errors[k] = v;
  }
  return json{{"params", params},
              {"stderr", errors},
              {"residual_norm", f.residual_norm},
              {"n_points", f.n_points}};
}

FitResult fit_result_from_json(const json& j) {
  if (!j.is_object() || !j.contains("params") || !j.contains("stderr") ||
      !j.at("params").is_object() || !j.at("stderr").is_object()) {
    schema("fit result needs 'params' and 'stderr' objects");
  }
  FitResult f;
  for (const auto& [k, v] : j.at("params").items()) {
    if (!v.is_number() || !j.at("stderr").contains(k)) {
      schema("fit parameter '" + k + "' lacks a numeric value or stderr");
    }
    f.set(k, v.get<double>(), j.at("stderr").at(k).get<double>());
  }
  f.residual_norm = number(j, "residual_norm");
  f.n_points = unsigned_number(j, "n_points");
  return f;
}

json to_json(const StorageReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"state", std::string(name_of(row.state))},
                    {"sbr", row.sbr},
                    {"efficiency", row.efficiency},
                    {"fidelity", row.fidelity},
                    {"transmitted_fidelity", row.transmitted_fidelity}});
  }
  const auto avg = [](const Averaged& a) { return json{{"mean", a.mean}, {"sem", a.sem}}; };
  json rot = json::array();
  for (int i = 0; i < 3; ++i) {
    rot.push_back(json::array(
        {r.setup_rotation.matrix()(i, 0), r.setup_rotation.matrix()(i, 1), r.setup_rotation.matrix()(i, 2)}));
  }
  return json{{"rows", rows},
              {"average",
               {{"sbr", avg(r.sbr)},
                {"efficiency", avg(r.efficiency)},
                {"fidelity", avg(r.fidelity)},
                {"transmitted_fidelity", avg(r.transmitted_fidelity)}}},
              {"setup_rotation", rot}};
}

// CSV -----------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> parse_csv(std::string_view text, std::size_t min_cols,
                                           std::size_t max_cols, std::vector<std::string>* header) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  bool seen_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) {
      fields.push_back(field);
    }
    if (!seen_header) {
      seen_header = true;
      if (header) {
        *header = fields;
      }
      continue;
    }
    if (fields.size() < min_cols || fields.size() > max_cols) {
      schema("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
             " columns");
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0') {
        schema("CSV line " + std::to_string(line_no) + ": '" + f + "' is not a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!seen_header) {
    schema("CSV input is empty");
  }
  return rows;
}

} // namespace

std::string polarimetry_to_csv(std::span<const PolarimetrySample> samples) {
  std::string out = "qwp_angle_deg,intensity\n";
  for (const auto& s : samples) {
    out += format_double(s.qwp_angle * 180.0 / std::numbers::pi) + "," + format_double(s.intensity) + "\n";
  }
  return out;
}

std::vector<PolarimetrySample> polarimetry_from_csv(std::string_view text) {
  std::vector<std::string> header;
  const auto rows = parse_csv(text, 2, 2, &header);
  if (header.size() != 2 || header[0] != "qwp_angle_deg" || header[1] != "intensity") {
    schema("polarimetry CSV must have header 'qwp_angle_deg,intensity'");
  }
  std::vector<PolarimetrySample> out;
  for (const auto& r : rows) {
    out.push_back({r[0] * std::numbers::pi / 180.0, r[1]});
  }
  return out;
}

std::string sweep_to_csv(const SweepSeries& s, std::string_view x_name, std::string_view y_name) {
  std::string out = std::string(x_name) + "," + std::string(y_name) + "," + std::string(y_name) + "_err\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += format_double(s.x[i]) + "," + format_double(s.y[i]) + "," + format_double(s.error_at(i)) + "\n";
  }
  return out;
}

SweepSeries sweep_from_csv(std::string_view text) {
  const auto rows = parse_csv(text, 2, 3, nullptr);
  SweepSeries s;
  for (const auto& r : rows) {
    s.x.push_back(r[0]);
    s.y.push_back(r[1]);
    s.y_err.push_back(r.size() > 2 ? r[2] : 0.0);
  }
  return s;
}

std::string background_sweep_to_csv(const BackgroundSweep& s) {
  if (s.background.size() != s.technical.size()) {
    throw InvalidArgument("background and technical series differ in length");
  }
  std::string out = "power_mw,background,background_err,technical,technical_err\n";
  for (std::size_t i = 0; i < s.background.size(); ++i) {
    out += format_double(s.background.x[i]) + "," + format_double(s.background.y[i]) + "," +
           format_double(s.background.error_at(i)) + "," + format_double(s.technical.y[i]) + "," +
           format_double(s.technical.error_at(i)) + "\n";
  }
  return out;
}

BackgroundSweep background_sweep_from_csv(std::string_view text) {
  const auto rows = parse_csv(text, 5, 5, nullptr);
  BackgroundSweep s;
  for (const auto& r : rows) {
    s.background.x.push_back(r[0]);
    s.background.y.push_back(r[1]);
    s.background.y_err.push_back(r[2]);
    s.technical.x.push_back(r[0]);
    s.technical.y.push_back(r[3]);
    s.technical.y_err.push_back(r[4]);
  }
  return s;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::string out = "p,sbr,fidelity\n";
  for (const auto& c : curve) {
    out += format_double(c.p) + "," + format_double(c.sbr) + "," + format_double(c.fidelity) + "\n";
  }
  return out;
}

std::vector<PolarimetrySample> samples_from_sweep(const SweepSeries& s) {
  std::vector<PolarimetrySample> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.push_back({s.x[i], s.y[i]});
  }
  return out;
}

// Files ---------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw FormatError("cannot write '" + tmp.string() + "'");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw FormatError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError("cannot move output into place at '" + path.string() + "'");
  }
}

} // namespace qmem::io
