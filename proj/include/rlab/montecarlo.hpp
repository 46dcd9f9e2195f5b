#ifndef RLAB_MONTECARLO_HPP
#define RLAB_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rlab/channels.hpp"
#include "rlab/parallel.hpp"
#include "rlab/quantum_core.hpp"

namespace rlab {

/// sqrt(ln N / N), the concentration scale of complementary-output spectra.
inline double concentration_scale(Index N) {
  const double n = static_cast<double>(N);
  return std::sqrt(std::log(n) / n);
}

/// max_i |q_i - 1/D|.
inline double max_deviation_from_uniform(const Spectrum& q) {
  const double target = 1.0 / static_cast<double>(q.size());
  double m = 0.0;
  for (double v : q.values()) m = std::max(m, std::abs(v - target));
  return m;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ConcentrationReport {
  Index D = 0;
  Index N = 0;
  int trials = 0;
  std::vector<double> deviations;
  double median_deviation = 0.0;
  double scaled_median = 0.0;
};

/// For each N, `trials` fresh (channel, state) pairs. Trial t at list position a
/// draws from rng.derive(a * trials + t): channel first, then the state.
inline std::vector<ConcentrationReport> concentration_experiment(Index D, const std::vector<Index>& N_list, int trials,
                                                                 const RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("concentration_experiment: trials must be >= 1");
  if (D < 1) throw std::invalid_argument("concentration_experiment: D must be >= 1");
  std::vector<ConcentrationReport> out;
  for (std::size_t a = 0; a < N_list.size(); ++a) {
    const Index N = N_list[a];
    if (N <= D) throw std::invalid_argument("concentration_experiment: every N must exceed D");
    ConcentrationReport rep;
    rep.D = D;
    rep.N = N;
    rep.trials = trials;
    rep.deviations.resize(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      RngStream s = rng.derive(a * static_cast<std::size_t>(trials) + t);
      const RandomUnitaryChannel ch = sample_channel(D, N, s);
      const PureState chi = random_pure_state(N, s);
      rep.deviations[t] = max_deviation_from_uniform(eigenvalues(conjugate_apply(ch, chi)));
    });
    rep.median_deviation = median(rep.deviations);
    rep.scaled_median = rep.median_deviation / concentration_scale(N);
    out.push_back(std::move(rep));
  }
  return out;
}

/// Per-trial max_i |q_i - 1/D| for a fixed channel; trial t uses rng.derive(t).
inline std::vector<double> complementary_deviations(const RandomUnitaryChannel& ch, int trials, const RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("complementary_deviations: trials must be >= 1");
  std::vector<double> dev(static_cast<std::size_t>(trials));
  parallel_for(dev.size(), [&](std::size_t t) {
    RngStream s = rng.derive(t);
    dev[t] = max_deviation_from_uniform(eigenvalues(conjugate_apply(ch, random_pure_state(ch.dim(), s))));
  });
  return dev;
}

/// Fraction of deviations within lambda * sqrt(ln N / N).
inline double fraction_lambda_mixed(const std::vector<double>& deviations, double lambda, Index N) {
  const double bound = lambda * concentration_scale(N);
  const auto hits = std::count_if(deviations.begin(), deviations.end(), [&](double d) { return d <= bound; });
  return static_cast<double>(hits) / static_cast<double>(deviations.size());
}

/// Empirical P_{E,lambda}: probability that a random input gives a lambda-maximally mixed
/// complementary output, for the fixed channel `ch`.
inline double estimate_p_lambda(const RandomUnitaryChannel& ch, double lambda, int trials, const RngStream& rng) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("estimate_p_lambda: lambda must be non-negative");
  return fraction_lambda_mixed(complementary_deviations(ch, trials, rng), lambda, ch.dim());
}

struct QLambdaEstimate {
  double q = 0.0;
  double standard_error = 0.0;
  std::vector<double> p_lambda;  // per channel
};

/// Empirical Q_lambda: fraction of sampled channels with P_{E,lambda} < 1/2.
/// Channel c is sampled from rng.derive(c), and its trials use children of that stream.
inline QLambdaEstimate estimate_q_lambda(Index D, Index N, double lambda, int n_channels, int trials_per_channel,
                                         const RngStream& rng) {
  if (D < 1 || N < 1 || n_channels < 1 || trials_per_channel < 1)
    throw std::invalid_argument("estimate_q_lambda: sizes must be >= 1");
  QLambdaEstimate est;
  est.p_lambda.resize(static_cast<std::size_t>(n_channels));
  for (int c = 0; c < n_channels; ++c) {
    RngStream s = rng.derive(static_cast<std::uint64_t>(c));
    const RandomUnitaryChannel ch = sample_channel(D, N, s);
    est.p_lambda[static_cast<std::size_t>(c)] = estimate_p_lambda(ch, lambda, trials_per_channel, s);
  }
  const auto bad = std::count_if(est.p_lambda.begin(), est.p_lambda.end(), [](double p) { return p < 0.5; });
  est.q = static_cast<double>(bad) / n_channels;
  est.standard_error = std::sqrt(est.q * (1.0 - est.q) / n_channels);
  return est;
}

struct RelativeDecomposition {
  double x;
  std::optional<PureState> phi;  // empty when x <= 1e-12
  PureState chi_aligned;         // chi with the phase making <psi0|chi> >= 0
};

/// chi = sqrt(1 - x^2) psi0 + x phi with phi orthogonal to psi0, after fixing chi's global phase.
inline RelativeDecomposition decompose_relative(const PureState& chi, const PureState& psi0) {
  if (chi.dim() != psi0.dim()) throw std::invalid_argument("decompose_relative: dimension mismatch");
  const cplx ov = psi0.amplitudes().dot(chi.amplitudes());
  const double mag = std::abs(ov);
  CVector aligned = chi.amplitudes();
  if (mag > 0.0) aligned *= std::conj(ov) / mag;
  // Norm of the orthogonal part rather than sqrt(1 - |<psi0|chi>|^2), which loses half the digits near x = 0.
  CVector rest = aligned - mag * psi0.amplitudes();
  const double x = std::min(1.0, rest.norm());
  std::optional<PureState> phi;
  if (x > 1e-12) phi = PureState::normalized(std::move(rest));
  return {x, std::move(phi), PureState::normalized(std::move(aligned))};
}

/// P(x^2 <= x0) = x0^(n-1) for a Haar-random state's squared distance from a fixed state.
inline double overlap_cdf(double x0, int n) {
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw std::invalid_argument("overlap_cdf: x0 must lie in [0, 1]");
  if (n < 1) throw std::invalid_argument("overlap_cdf: n must be >= 1");
  return std::pow(x0, n - 1);
}

struct NearEventFit {
  double y;
  double residual;  // max_i |q_i - (y p_i + (1 - y)/D)|
};

/// Chebyshev fit of q to the interpolation y p + (1 - y) u over y in [0, 1] by golden-section
/// search; the residual is convex and piecewise linear in y.
inline NearEventFit fit_near_event(const Spectrum& p, const Spectrum& q) {
  if (p.size() != q.size()) throw std::invalid_argument("fit_near_event: spectra lengths differ");
  const double u = 1.0 / static_cast<double>(p.size());
  auto residual = [&](double y) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m = std::max(m, std::abs(q[i] - (y * p[i] + (1.0 - y) * u)));
    return m;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = residual(x1), f2 = residual(x2);
  while (hi - lo > 1e-12) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1, f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = residual(x1);
    } else {
      lo = x1;
      x1 = x2, f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = residual(x2);
    }
  }
  double y = 0.5 * (lo + hi);
  double r = residual(y);
  // Golden section never evaluates the endpoints.
  for (double edge : {0.0, 1.0}) {
    const double re = residual(edge);
    if (re <= r) y = edge, r = re;
  }
  return {y, r};
}

/// Least-squares y for the same interpolation, clipped to [0, 1]. Secondary statistic.
inline double least_squares_y(const Spectrum& p, const Spectrum& q) {
  const double u = 1.0 / static_cast<double>(p.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += (q[i] - u) * (p[i] - u);
    den += (p[i] - u) * (p[i] - u);
  }
  if (den <= 0.0) return 1.0;
  return std::clamp(num / den, 0.0, 1.0);
}

struct NearEventReport {
  int trials = 0;
  double y0 = 0.0;
  std::vector<double> fitted_y;
  std::vector<double> residuals;
  std::vector<double> least_squares_y;
  double fraction_above_y0 = 0.0;
  double median_residual = 0.0;
};

/// Fits each random input's complementary spectrum q against p = spectrum at psi0.
/// Trial t samples chi from rng.derive(t).
inline NearEventReport near_event_experiment(const RandomUnitaryChannel& ch, const PureState& psi0, double y0,
                                             int trials, const RngStream& rng) {
  if (psi0.dim() != ch.dim()) throw std::invalid_argument("near_event_experiment: psi0 dimension does not match channel");
  if (trials < 1) throw std::invalid_argument("near_event_experiment: trials must be >= 1");
  const Spectrum p = eigenvalues(conjugate_apply(ch, psi0));
  NearEventReport rep;
  rep.trials = trials;
  rep.y0 = y0;
  const auto n = static_cast<std::size_t>(trials);
  rep.fitted_y.resize(n);
  rep.residuals.resize(n);
  rep.least_squares_y.resize(n);
  parallel_for(n, [&](std::size_t t) {
    RngStream s = rng.derive(t);
    const Spectrum q = eigenvalues(conjugate_apply(ch, random_pure_state(ch.dim(), s)));
    const NearEventFit fit = fit_near_event(p, q);
    rep.fitted_y[t] = fit.y;
    rep.residuals[t] = fit.residual;
    rep.least_squares_y[t] = least_squares_y(p, q);
  });
  const auto above = std::count_if(rep.fitted_y.begin(), rep.fitted_y.end(), [&](double y) { return y >= y0; });
  rep.fraction_above_y0 = static_cast<double>(above) / trials;
  rep.median_residual = median(rep.residuals);
  return rep;
}

}  // namespace rlab

#endif  // RLAB_MONTECARLO_HPP
