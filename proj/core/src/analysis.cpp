#include "qmem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "qmem/error.hpp"

namespace qmem {

// FitResult -----------------------------------------------------------------

namespace {

double lookup(const std::vector<std::pair<std::string, double>>& v, std::string_view name) {
  for (const auto& [k, x] : v) {
    if (k == name) {
      return x;
    }
  }
  throw std::out_of_range("fit has no parameter '" + std::string(name) + "'");
}

} // namespace

double FitResult::param(std::string_view name) const { return lookup(params, name); }
double FitResult::error(std::string_view name) const { return lookup(errors, name); }

void FitResult::set(std::string name, double value, double err) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first == name) {
      params[i].second = value;
      errors[i].second = err;
      return;
    }
  }
  params.emplace_back(name, value);
  errors.emplace_back(std::move(name), err);
}

// Histogram primitives -------------------------------------------------------

Window Window::make(double start, double end) {
  if (!(start >= 0.0 && start < end) || !std::isfinite(end)) {
    throw InvalidArgument("window needs 0 <= start < end, got [" + std::to_string(start) + ", " +
                          std::to_string(end) + ")");
  }
  return {start, end};
}

std::uint64_t ArrivalHistogram::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : counts) {
    sum += c;
  }
  return sum;
}

void ArrivalHistogram::validate() const {
  if (n_trials == 0) {
    throw InvalidData("histogram has zero trials");
  }
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw InvalidData("histogram bin width must be positive");
  }
  if (counts.empty()) {
    throw InvalidData("histogram has no bins");
  }
}

void SweepSeries::validate(bool increasing) const {
  if (y.size() != x.size() || (!y_err.empty() && y_err.size() != x.size())) {
    throw InvalidData("sweep columns have different lengths");
  }
  if (increasing) {
    for (std::size_t i = 1; i < x.size(); ++i) {
      if (!(x[i] > x[i - 1])) {
        throw InvalidData("sweep abscissas must be strictly increasing");
      }
    }
  }
}

namespace {

std::size_t bin_edge(const ArrivalHistogram& hist, double t) {
  const double r = (t - hist.t_start) / hist.bin_width;
  const double nearest = std::round(r);
  if (std::abs(r - nearest) > 1e-9 * std::max(1.0, std::abs(r))) {
    throw InvalidArgument("window edge " + std::to_string(t) + " us is not on a bin boundary");
  }
  if (nearest < 0.0 || nearest > static_cast<double>(hist.counts.size())) {
    throw InvalidArgument("window edge " + std::to_string(t) + " us lies outside the histogram");
  }
  return static_cast<std::size_t>(nearest);
}

void require_equal_duration(const Window& roi, const Window& bg, double bin_width) {
  if (std::abs(roi.duration() - bg.duration()) > 1e-9 * bin_width) {
    throw InvalidArgument("ROI and signal-free window must have equal duration");
  }
}

} // namespace

std::uint64_t roi_counts(const ArrivalHistogram& hist, const Window& w) {
  hist.validate();
  if (!(w.end > w.start)) {
    throw InvalidArgument("window is empty");
  }
  const std::size_t first = bin_edge(hist, w.start);
  const std::size_t last = bin_edge(hist, w.end);
  std::uint64_t sum = 0;
  for (std::size_t b = first; b < last; ++b) {
    sum += hist.counts[b];
  }
  return sum;
}

Estimate storage_efficiency(const ArrivalHistogram& storage, const ArrivalHistogram& reference,
                            const Window& roi, const Window& bg) {
  require_equal_duration(roi, bg, storage.bin_width);
  reference.validate();
  const auto in_roi = static_cast<double>(roi_counts(storage, roi));
  const auto in_bg = static_cast<double>(roi_counts(storage, bg));
  const auto ref_total = static_cast<double>(reference.total());
  if (!(ref_total > 0.0)) {
    throw InvalidData("reference histogram holds no counts");
  }
  const auto n_storage = static_cast<double>(storage.n_trials);
  const double per_pulse_ref = ref_total / static_cast<double>(reference.n_trials);
  const double numerator = (in_roi - in_bg) / n_storage;

  Estimate e;
  e.value = numerator / per_pulse_ref;
  const double var_num = (in_roi + in_bg) / (n_storage * n_storage);
  e.error = std::sqrt(var_num / (per_pulse_ref * per_pulse_ref) + e.value * e.value / ref_total);
  e.negative = numerator < 0.0;
  return e;
}

double sbr_from_counts(double roi, double background) {
  if (!(background > 0.0)) {
    throw UndefinedQuantity("SBR is undefined: no counts in the signal-free window");
  }
  return (roi - background) / background;
}

Estimate sbr(const ArrivalHistogram& storage, const Window& roi, const Window& bg) {
  require_equal_duration(roi, bg, storage.bin_width);
  const auto in_roi = static_cast<double>(roi_counts(storage, roi));
  const auto in_bg = static_cast<double>(roi_counts(storage, bg));
  Estimate e;
  e.value = sbr_from_counts(in_roi, in_bg);
  e.error = std::sqrt(in_roi / (in_bg * in_bg) + in_roi * in_roi / (in_bg * in_bg * in_bg));
  e.negative = in_roi < in_bg;
  return e;
}

// Nonlinear fits -------------------------------------------------------------

namespace {

using Model = std::function<double(double x, const Eigen::Vector2d& p, Eigen::Vector2d& grad)>;

struct Weights {
  Eigen::VectorXd w;
  bool statistical = false; // true when taken from measured errors
};

// 1/err^2 when errors are given, otherwise Poisson-like 1/|y|.
Weights make_weights(const std::vector<double>& y, const std::vector<double>& y_err) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Weights out;
  out.w.resize(n);
  double min_err = std::numeric_limits<double>::infinity();
  for (double e : y_err) {
    if (e > 0.0) {
      min_err = std::min(min_err, e);
    }
  }
  if (std::isfinite(min_err)) {
    out.statistical = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = y_err[static_cast<std::size_t>(i)] > 0.0 ? y_err[static_cast<std::size_t>(i)] : min_err;
      out.w(i) = 1.0 / (e * e);
    }
    return out;
  }
  double min_y = std::numeric_limits<double>::infinity();
  for (double v : y) {
    if (v > 0.0) {
      min_y = std::min(min_y, v);
    }
  }
  if (!std::isfinite(min_y)) {
    min_y = 1.0;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = y[static_cast<std::size_t>(i)];
    out.w(i) = 1.0 / (v > 0.0 ? v : min_y);
  }
  return out;
}

struct LsqOutcome {
  Eigen::Vector2d p;
  Eigen::Vector2d err;
  double residual_norm = 0.0;
};

// Damped Gauss-Newton (Levenberg-Marquardt) for two-parameter models.
LsqOutcome least_squares(const std::vector<double>& x, const std::vector<double>& y,
                         const Weights& weights, Eigen::Vector2d p, const Model& model) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd jac(n, 2);
  Eigen::VectorXd r(n);

  const auto evaluate = [&](const Eigen::Vector2d& at, bool with_jac) {
    double chi2 = 0.0;
    Eigen::Vector2d g;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f = model(x[static_cast<std::size_t>(i)], at, g);
      r(i) = y[static_cast<std::size_t>(i)] - f;
      if (with_jac) {
        jac.row(i) = g.transpose();
      }
      chi2 += weights.w(i) * r(i) * r(i);
    }
    return chi2;
  };

  double chi2 = evaluate(p, true);
  double lambda = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::Matrix2d jtj = jac.transpose() * weights.w.asDiagonal() * jac;
    const Eigen::Vector2d jtr = jac.transpose() * weights.w.asDiagonal() * r;
    bool improved = false;
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d a = jtj;
      a.diagonal() *= 1.0 + lambda;
      step = a.ldlt().solve(jtr);
      if (!step.allFinite()) {
        break;
      }
      const Eigen::Vector2d trial = p + step;
      Eigen::Vector2d g;
      double trial_chi2 = 0.0;
      bool finite = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double f = model(x[static_cast<std::size_t>(i)], trial, g);
        if (!std::isfinite(f)) {
          finite = false;
          break;
        }
        const double ri = y[static_cast<std::size_t>(i)] - f;
        trial_chi2 += weights.w(i) * ri * ri;
      }
      if (finite && trial_chi2 <= chi2) {
        p = trial;
        chi2 = evaluate(p, true);
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      break;
    }
    if (step.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
      break;
    }
  }

  LsqOutcome out;
  out.p = p;
  out.residual_norm = r.norm();
  const Eigen::Matrix2d jtj = jac.transpose() * weights.w.asDiagonal() * jac;
  Eigen::Matrix2d cov = jtj.inverse();
  if (!weights.statistical) {
    cov *= n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
  }
  out.err = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (!out.err.allFinite()) {
    out.err.setConstant(std::numeric_limits<double>::infinity());
  }
  return out;
}

// Weighted straight-line fit y = c0 + c1 x.
Eigen::Vector2d line_fit(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) {
    throw FitError("initial line fit is degenerate (abscissas coincide)");
  }
  return {(sxx * sy - sx * sxy) / det, (sw * sxy - sx * sy) / det};
}

} // namespace

FitResult fit_exponential_decay(const SweepSeries& series) {
  series.validate(false);
  if (series.size() < 3) {
    throw InvalidArgument("exponential fit needs at least 3 points");
  }
  for (double v : series.y) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidData("exponential fit needs strictly positive values");
    }
  }
  const Weights weights = make_weights(series.y, series.y_err);

  std::vector<double> log_y(series.size());
  std::vector<double> log_w(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    log_y[i] = std::log(series.y[i]);
    log_w[i] = weights.w(static_cast<Eigen::Index>(i)) * series.y[i] * series.y[i];
  }
  const Eigen::Vector2d line = line_fit(series.x, log_y, log_w);
  const auto [lo, hi] = std::ranges::minmax(series.x);
  const double span = hi - lo;
  if (!(line(1) < -1e-12 / span)) {
    throw FitError("decay fit failed: series does not decay (tau is infinite or negative)");
  }

  const Model model = [](double t, const Eigen::Vector2d& p, Eigen::Vector2d& g) {
    const double e = std::exp(-t / p(1));
    g(0) = e;
    g(1) = p(0) * e * t / (p(1) * p(1));
    return p(0) * e;
  };
  const LsqOutcome fit =
      least_squares(series.x, series.y, weights, {std::exp(line(0)), -1.0 / line(1)}, model);
  if (!(fit.p(1) > 0.0) || !std::isfinite(fit.p(1)) || !std::isfinite(fit.p(0))) {
    throw FitError("decay fit failed: tau estimate is not positive and finite");
  }

  FitResult out;
  out.set("amplitude", fit.p(0), fit.err(0));
  out.set("tau", fit.p(1), fit.err(1));
  out.residual_norm = fit.residual_norm;
  out.n_points = series.size();
  return out;
}

FitResult fit_power_law(const SweepSeries& series) {
  series.validate(false);
  if (series.size() < 2) {
    throw InvalidArgument("power-law fit needs at least 2 points");
  }
  std::vector<double> lx;
  std::vector<double> ly;
  std::vector<double> lw;
  const Weights weights = make_weights(series.y, series.y_err);
  bool all_zero = true;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series.x[i] >= 0.0) || !std::isfinite(series.x[i]) || !std::isfinite(series.y[i])) {
      throw InvalidArgument("power-law fit needs finite, nonnegative abscissas");
    }
    all_zero = all_zero && series.y[i] == 0.0;
    if (series.x[i] > 0.0 && series.y[i] > 0.0) {
      lx.push_back(std::log(series.x[i]));
      ly.push_back(std::log(series.y[i]));
      lw.push_back(weights.w(static_cast<Eigen::Index>(i)) * series.y[i] * series.y[i]);
    }
  }
  if (all_zero) {
    throw FitError("power-law fit failed: subtracted series is identically zero");
  }
  if (lx.size() < 2) {
    throw FitError("power-law fit failed: fewer than two positive points");
  }
  const Eigen::Vector2d line = line_fit(lx, ly, lw);

  const Model model = [](double x, const Eigen::Vector2d& p, Eigen::Vector2d& g) {
    if (x <= 0.0) {
      g.setZero();
      return 0.0;
    }
    const double v = std::pow(x, p(1));
    g(0) = v;
    g(1) = p(0) * v * std::log(x);
    return p(0) * v;
  };
  const LsqOutcome fit =
      least_squares(series.x, series.y, weights, {std::exp(line(0)), line(1)}, model);
  if (!fit.p.allFinite()) {
    throw FitError("power-law fit diverged");
  }

  FitResult out;
  out.set("a", fit.p(0), fit.err(0));
  out.set("c", fit.p(1), fit.err(1));
  out.residual_norm = fit.residual_norm;
  out.n_points = series.size();
  return out;
}

FitResult fit_sqrt_background(const SweepSeries& background, const SweepSeries& technical) {
  background.validate(false);
  technical.validate(false);
  if (background.size() != technical.size()) {
    throw InvalidArgument("background and technical sweeps have different lengths");
  }
  SweepSeries diff;
  for (std::size_t i = 0; i < background.size(); ++i) {
    const double xa = background.x[i];
    const double xb = technical.x[i];
    if (std::abs(xa - xb) > 1e-9 * std::max(1.0, std::abs(xa))) {
      throw InvalidArgument("background and technical sweeps use different control powers");
    }
    diff.x.push_back(xa);
    diff.y.push_back(background.y[i] - technical.y[i]);
    diff.y_err.push_back(std::hypot(background.error_at(i), technical.error_at(i)));
  }
  return fit_power_law(diff);
}

} // namespace qmem
