#ifndef RLAB_BOUNDS_HPP
#define RLAB_BOUNDS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rlab/quantum_core.hpp"

namespace rlab {

namespace detail {

inline void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument(std::string(what) + ": p must lie in (0, 1)");
}

}  // namespace detail

/// (1/(1-p)) ln((sum w_i^2)^p + sum_{i != j} (w_i w_j)^p): the Rényi entropy of the
/// mixture weights of (E (x) conj E)(|Phi><Phi|), which majorize its spectrum.
inline double mixture_bound(const WeightVector& w, double p) {
  detail::require_open_unit(p, "mixture_bound");
  const std::size_t d = w.size();
  // Neumaier summation: D^2 - D terms at D = 64 otherwise drift past 1e-12.
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  for (std::size_t i = 0; i < d; ++i) add(w[i] * w[i]);
  const double sq = sum + comp;
  sum = comp = 0.0;
  add(std::pow(sq, p));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) add(std::pow(w[i] * w[j], p));
  return std::log(sum + comp) / (1.0 - p);
}

/// 2 ln D + ln(1 - 1/D + D^(p-2)) / (1 - p).
inline double lemma1_bound(int D, double p) {
  detail::require_open_unit(p, "lemma1_bound");
  if (D < 1) throw std::invalid_argument("lemma1_bound: D must be >= 1");
  const double d = D;
  return 2.0 * std::log(d) + std::log1p(-1.0 / d + std::pow(d, p - 2.0)) / (1.0 - p);
}

/// h(y) = 2 y^2 / (-ln(1 - y)), positive on (0, 1).
inline double h(double y) {
  if (!(y > 0.0 && y < 1.0)) throw std::invalid_argument("h: y must lie in (0, 1)");
  return 2.0 * y * y / -std::log1p(-y);
}

struct CriticalConstants {
  double y0;
  double h0;
  double p0;
};

inline constexpr int kCriticalCoarseGrid = 10000;

/// True iff the discrete differences of h on the coarse grid change sign exactly once.
inline bool h_unimodal_on_grid(int points = kCriticalCoarseGrid) {
  int sign_changes = 0;
  double prev_diff = 0.0;
  double prev = h(1.0 / points);
  for (int k = 2; k < points; ++k) {
    const double cur = h(static_cast<double>(k) / points);
    const double diff = cur - prev;
    if (k > 2 && ((diff < 0.0) != (prev_diff < 0.0))) ++sign_changes;
    prev_diff = diff;
    prev = cur;
  }
  return sign_changes == 1;
}

/// argmax and max of h on (0, 1): coarse grid of 1e4 points, then golden-section
/// search on the bracketing cells down to a 1e-12 interval. p0 = (1 - sqrt(1 - h0)) / 2.
inline CriticalConstants find_critical() {
  const int n = kCriticalCoarseGrid;
  if (!h_unimodal_on_grid(n)) throw numerical_error("find_critical: h is not unimodal on the coarse grid");
  int best = 1;
  double best_h = h(1.0 / n);
  for (int k = 2; k < n; ++k) {
    const double v = h(static_cast<double>(k) / n);
    if (v > best_h) best_h = v, best = k;
  }
  double lo = static_cast<double>(best - 1) / n;
  double hi = static_cast<double>(best + 1) / n;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = h(x1), f2 = h(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2, f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = h(x2);
    } else {
      hi = x2;
      x2 = x1, f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = h(x1);
    }
  }
  const double y0 = 0.5 * (lo + hi);
  const double h0 = h(y0);
  return {y0, h0, 0.5 * (1.0 - std::sqrt(1.0 - h0))};
}

/// p in (0, p0) or (1 - p0, 1).
inline bool in_violation_window(double p, const CriticalConstants& c) {
  if (!(p > 0.0)) throw std::invalid_argument("in_violation_window: p must be positive");
  return (p < c.p0) || (p > 1.0 - c.p0 && p < 1.0);
}

/// Solves (D^(1-p) - dS)^2 = (D^2 - D + D^p) D^(-2p) for the positive root dS.
inline double deltaS_threshold(int D, double p) {
  detail::require_open_unit(p, "deltaS_threshold");
  if (D < 2) throw std::invalid_argument("deltaS_threshold: D must be >= 2");
  const double d = D;
  return std::pow(d, 1.0 - p) - std::pow(d, -p) * std::sqrt(d * d - d + std::pow(d, p));
}

/// Leading-order Delta = sum Delta_i^2 = 2 D^p dS / (p (1 - p)).
inline double delta_from_deltaS(int D, double p, double dS) {
  detail::require_open_unit(p, "delta_from_deltaS");
  if (D < 1) throw std::invalid_argument("delta_from_deltaS: D must be >= 1");
  if (!(dS >= 0.0)) throw std::invalid_argument("delta_from_deltaS: dS must be non-negative");
  return 2.0 * std::pow(static_cast<double>(D), p) * dS / (p * (1.0 - p));
}

/// (N - D) sum_i (ln(D q_i) + 1 - D q_i): the log of the spectrum-dependent factor of the
/// eigenvalue density of complementary outputs, without its normalization.
/// Returns -infinity if any q_i is zero.
inline double log_density_exponent(const Spectrum& q, int N, int D) {
  if (D < 1 || static_cast<std::size_t>(D) != q.size())
    throw std::invalid_argument("log_density_exponent: spectrum length must equal D");
  if (N <= D) throw std::invalid_argument("log_density_exponent: requires N > D");
  if (std::abs(q.sum() - 1.0) > tol::kSpectrumSum)
    throw std::invalid_argument("log_density_exponent: spectrum must sum to 1");
  double acc = 0.0;
  for (double v : q.values()) {
    if (v <= 0.0) return -std::numeric_limits<double>::infinity();
    const double x = D * v;
    acc += std::log(x) + 1.0 - x;
  }
  return (N - D) * acc;
}

/// Per-(N - D) exponential rate D^p dS / (p (1 - p)) of the entropy-deficit density.
inline double deficit_rate(double p, int D, double dS) {
  detail::require_open_unit(p, "deficit_rate");
  if (D < 1) throw std::invalid_argument("deficit_rate: D must be >= 1");
  if (!(dS >= 0.0)) throw std::invalid_argument("deficit_rate: dS must be non-negative");
  return std::pow(static_cast<double>(D), p) * dS / (p * (1.0 - p));
}

}  // namespace rlab

#endif  // RLAB_BOUNDS_HPP
