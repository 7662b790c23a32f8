#include "qmem/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qmem/error.hpp"
#include "qmem/parallel.hpp"
#include "qmem/random.hpp"

namespace qmem {

void NoiseModelParams::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw InvalidArgument("eta must lie in [0, 1], got " + std::to_string(eta));
  }
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw InvalidArgument("mean input photon number p must be >= 0");
  }
  if (!(q >= 0.0) || !std::isfinite(q)) {
    throw InvalidArgument("mean background photon number q must be >= 0");
  }
  if (n_max < 1) {
    throw InvalidArgument("truncation order n_max must be >= 1");
  }
}

double poisson_pmf(int k, double mean) {
  if (!(mean >= 0.0)) {
    throw InvalidArgument("Poisson mean must be >= 0");
  }
  if (k < 0) {
    return 0.0;
  }
  if (mean == 0.0) {
    return k == 0 ? 1.0 : 0.0;
  }
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

double signal_term(int n, const NoiseModelParams& params) {
  return poisson_pmf(n, params.signal_mean());
}

double background_term(int m, const NoiseModelParams& params) { return poisson_pmf(m, params.q); }

DetectionProbs detection_probs(const NoiseModelParams& params) {
  params.validate();
  const auto size = static_cast<std::size_t>(params.n_max) + 1;
  std::vector<double> ps(size);
  std::vector<double> pb(size);
  for (std::size_t k = 0; k < size; ++k) {
    ps[k] = signal_term(static_cast<int>(k), params);
    pb[k] = background_term(static_cast<int>(k), params);
  }
  DetectionProbs out;
  for (std::size_t n = 0; n < size; ++n) {
    for (std::size_t m = 0; m < size; ++m) {
      if (n + m == 0) {
        continue;
      }
      const double w = ps[n] * pb[m] / static_cast<double>(n + m);
      out.p_signal += w * static_cast<double>(n);
      out.p_background += w * static_cast<double>(m);
    }
  }
  return out;
}

double truncation_error(const NoiseModelParams& params) {
  NoiseModelParams doubled = params;
  doubled.n_max = 2 * params.n_max;
  const auto a = detection_probs(params);
  const auto b = detection_probs(doubled);
  return std::max(std::abs(a.p_signal - b.p_signal), std::abs(a.p_background - b.p_background));
}

double model_fidelity(const NoiseModelParams& params) {
  params.validate();
  if (params.signal_mean() == 0.0 && params.q == 0.0) {
    throw UndefinedQuantity("model fidelity is undefined with neither signal nor background");
  }
  const auto probs = detection_probs(params);
  const double total = probs.p_signal + probs.p_background;
  if (!(total > 0.0)) {
    throw UndefinedQuantity("model fidelity is undefined: detection probability underflows");
  }
  return (probs.p_signal + 0.5 * probs.p_background) / total;
}

double model_sbr(const NoiseModelParams& params) {
  params.validate();
  if (params.q == 0.0) {
    throw UndefinedQuantity("model SBR is infinite without background (q = 0)");
  }
  const auto probs = detection_probs(params);
  if (!(probs.p_background > 0.0)) {
    throw UndefinedQuantity("model SBR is infinite: background probability underflows");
  }
  return probs.p_signal / probs.p_background;
}

std::vector<CurvePoint> fidelity_sbr_curve(double eta, double q, int n_max,
                                           std::span<const double> p_grid) {
  if (p_grid.empty()) {
    throw InvalidArgument("photon-number grid is empty");
  }
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (!(p_grid[i] > 0.0) || !std::isfinite(p_grid[i])) {
      throw InvalidArgument("photon-number grid must be positive");
    }
    if (i > 0 && !(p_grid[i] > p_grid[i - 1])) {
      throw InvalidArgument("photon-number grid must be strictly ascending");
    }
  }
  std::vector<CurvePoint> curve;
  curve.reserve(p_grid.size());
  for (double p : p_grid) {
    const NoiseModelParams params{eta, p, q, n_max};
    curve.push_back({p, model_sbr(params), model_fidelity(params)});
  }
  std::ranges::stable_sort(curve, {}, &CurvePoint::sbr);
  return curve;
}

namespace {

template <class DrawBackground>
DetectionProbs run_oracle(const NoiseModelParams& params, std::uint64_t trials, std::uint64_t seed,
                          unsigned workers, DrawBackground&& draw_background) {
  params.validate();
  if (trials == 0) {
    throw InvalidArgument("Monte Carlo oracle needs at least one trial");
  }
  const PoissonSampler signal(params.signal_mean());
  const unsigned nw = resolve_workers(workers);
  std::vector<std::uint64_t> sig(nw, 0);
  std::vector<std::uint64_t> bg(nw, 0);
  parallel_chunks(trials, nw, [&](unsigned w, std::uint64_t begin, std::uint64_t end) {
    std::uint64_t s = 0;
    std::uint64_t b = 0;
    for (std::uint64_t t = begin; t < end; ++t) {
      TrialRng rng(seed, t);
      const std::uint64_t n = signal(rng);
      const std::uint64_t m = draw_background(rng);
      if (m == 0) {
        s += n > 0 ? 1 : 0;
      } else if (n == 0) {
        ++b;
      } else if (rng.uniform() * static_cast<double>(n + m) < static_cast<double>(n)) {
        ++s;
      } else {
        ++b;
      }
    }
    sig[w] = s;
    bg[w] = b;
  });
  std::uint64_t s_total = 0;
  std::uint64_t b_total = 0;
  for (unsigned w = 0; w < nw; ++w) {
    s_total += sig[w];
    b_total += bg[w];
  }
  const double td = static_cast<double>(trials);
  return {static_cast<double>(s_total) / td, static_cast<double>(b_total) / td};
}

} // namespace

DetectionProbs mc_detection_oracle(const NoiseModelParams& params, std::uint64_t trials,
                                   std::uint64_t seed, unsigned workers) {
  const PoissonSampler background(params.q);
  return run_oracle(params, trials, seed, workers,
                    [&background](TrialRng& rng) { return background(rng); });
}

DetectionProbs mc_detection_oracle_split_background(const NoiseModelParams& params,
                                                    std::uint64_t trials, std::uint64_t seed,
                                                    unsigned workers) {
  const PoissonSampler half(0.5 * params.q);
  return run_oracle(params, trials, seed, workers,
                    [&half](TrialRng& rng) { return half(rng) + half(rng); });
}

} // namespace qmem
