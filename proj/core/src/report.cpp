#include "qmem/report.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "qmem/analysis.hpp"
#include "qmem/error.hpp"

namespace qmem {

Averaged average(const std::vector<double>& values) {
  if (values.empty()) {
    return {};
  }
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= n;
  if (values.size() < 2) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

namespace {

// Shot noise can push a fitted nearly-pure state slightly outside the unit
// ball; measured vectors are pulled back onto it before comparison.
StokesVector physical(const StokesVector& s) {
  const StokesVector n = s.normalized();
  const double len = n.polarized_intensity();
  if (len <= 1.0) {
    return n;
  }
  return {1.0, n.s1 / len, n.s2 / len, n.s3 / len};
}

StokesVector unit(const StokesVector& s) {
  const StokesVector n = s.normalized();
  const double len = n.polarized_intensity();
  if (!(len > 0.0)) {
    throw InvalidData("input or transmitted state has no polarized component");
  }
  return {1.0, n.s1 / len, n.s2 / len, n.s3 / len};
}

} // namespace

StorageReport build_report(const ReportInputs& inputs) {
  for (auto s : kCanonicalStates) {
    if (!inputs.states.contains(s)) {
      throw InvalidArgument("storage report needs all six input states; missing " +
                            std::string(name_of(s)));
    }
  }

  // Setup rotation from measured inputs to transmitted states.
  std::vector<StokesVector> in;
  std::vector<StokesVector> tr;
  for (auto s : kCanonicalStates) {
    const auto& m = inputs.states.at(s);
    in.push_back(inputs.pure_inputs ? unit(m.input) : physical(m.input));
    tr.push_back(inputs.pure_inputs ? unit(m.transmitted) : physical(m.transmitted));
  }
  StorageReport report;
  report.setup_rotation = fit_rotation(in, tr);

  Window eff_roi = inputs.roi;
  Window eff_bg = inputs.background;
  if (inputs.efficiency_roi) {
    eff_roi = *inputs.efficiency_roi;
    eff_bg = Window::make(inputs.background.start, inputs.background.start + eff_roi.duration());
  }

  std::vector<double> sbrs, effs, fids, tr_fids;
  for (std::size_t i = 0; i < kCanonicalStates.size(); ++i) {
    const auto state = kCanonicalStates[i];
    const auto& m = inputs.states.at(state);
    const StokesVector rotated = apply_rotation(report.setup_rotation, in[i]);

    StateRow row;
    row.state = state;
    row.sbr = sbr(m.storage, inputs.roi, inputs.background).value;
    row.efficiency = storage_efficiency(m.storage, inputs.reference, eff_roi, eff_bg).value;
    row.fidelity = fidelity(rotated, physical(m.retrieved));
    row.transmitted_fidelity = fidelity(rotated, tr[i]);
    report.rows.push_back(row);

    sbrs.push_back(row.sbr);
    effs.push_back(row.efficiency);
    fids.push_back(row.fidelity);
    tr_fids.push_back(row.transmitted_fidelity);
  }
  report.sbr = average(sbrs);
  report.efficiency = average(effs);
  report.fidelity = average(fids);
  report.transmitted_fidelity = average(tr_fids);
  return report;
}

std::string format_table(const StorageReport& report) {
  std::string out;
  char buf[64];
  const auto cell = [&](const char* fmt, double v) {
    std::snprintf(buf, sizeof buf, fmt, v);
    out += buf;
  };

  out += "Input          ";
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%8s", std::string(name_of(r.state)).c_str());
    out += buf;
  }
  out += "   Average\n";

  out += "SBR            ";
  for (const auto& r : report.rows) {
    cell("%8.2f", r.sbr);
  }
  cell("%7.2f", report.sbr.mean);
  cell(" +- %.2f\n", report.sbr.sem);

  out += "Fidelity (%)   ";
  for (const auto& r : report.rows) {
    cell("%8.1f", 100.0 * r.fidelity);
  }
  cell("%7.1f", 100.0 * report.fidelity.mean);
  cell(" +- %.1f\n", 100.0 * report.fidelity.sem);

  out += "Efficiency (%) ";
  for (const auto& r : report.rows) {
    cell("%8.1f", 100.0 * r.efficiency);
  }
  cell("%7.1f", 100.0 * report.efficiency.mean);
  cell(" +- %.1f\n", 100.0 * report.efficiency.sem);

  out += "Transmitted F  ";
  for (const auto& r : report.rows) {
    cell("%8.1f", 100.0 * r.transmitted_fidelity);
  }
  cell("%7.1f", 100.0 * report.transmitted_fidelity.mean);
  cell(" +- %.1f\n", 100.0 * report.transmitted_fidelity.sem);
  return out;
}

} // namespace qmem
