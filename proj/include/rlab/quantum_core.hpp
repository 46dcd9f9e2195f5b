#ifndef RLAB_QUANTUM_CORE_HPP
#define RLAB_QUANTUM_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rlab/rng.hpp"

namespace rlab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Raised when a numerical check fails on data that passed its preconditions
/// (non-PSD density matrix, failed eigensolver, broken unimodality).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double kStateNorm = 1e-12;
inline constexpr double kHermitian = 1e-10;
inline constexpr double kTrace = 1e-9;
inline constexpr double kNegativeClip = 1e-9;
// Eigenvalues this close to zero are round-off of a rank-deficient matrix.
inline constexpr double kZeroFlush = 1e-12;
inline constexpr double kSpectrumSum = 1e-6;
inline constexpr double kUnitary = 1e-10;
inline constexpr double kWeightSum = 1e-12;
inline constexpr double kVonNeumannBand = 1e-6;
}  // namespace tol

/// Unit-norm complex vector.
class PureState {
 public:
  explicit PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 1) throw std::invalid_argument("PureState: empty amplitude vector");
    if (std::abs(amplitudes_.norm() - 1.0) > tol::kStateNorm)
      throw std::invalid_argument("PureState: norm deviates from 1 by more than 1e-12");
  }

  /// Normalizes v; rejects the zero vector.
  static PureState normalized(CVector v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("PureState: cannot normalize zero vector");
    v /= n;
    return PureState(std::move(v));
  }

  static PureState basis(Index dim, Index k) {
    if (dim < 1 || k < 0 || k >= dim) throw std::invalid_argument("PureState::basis: index out of range");
    CVector v = CVector::Zero(dim);
    v(k) = 1.0;
    return PureState(std::move(v));
  }

  Index dim() const { return amplitudes_.size(); }
  const CVector& amplitudes() const { return amplitudes_; }

  PureState conjugate() const { return PureState(amplitudes_.conjugate()); }

 private:
  CVector amplitudes_;
};

/// |a> (x) |b> with index a_i * dim(b) + b_j.
inline PureState tensor(const PureState& a, const PureState& b) {
  CVector v(a.dim() * b.dim());
  for (Index i = 0; i < a.dim(); ++i) v.segment(i * b.dim(), b.dim()) = a.amplitudes()(i) * b.amplitudes();
  return PureState::normalized(std::move(v));
}

/// Hermitian, unit-trace matrix. Positivity is checked when the spectrum is taken.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) throw std::invalid_argument("DensityMatrix: matrix must be square");
    const double asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= tol::kHermitian)) throw numerical_error("DensityMatrix: not Hermitian within 1e-10");
    const cplx tr = m_.trace();
    if (!(std::abs(tr - 1.0) <= tol::kTrace)) throw numerical_error("DensityMatrix: trace deviates from 1 by more than 1e-9");
  }

  static DensityMatrix projector(const PureState& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
  }

  static DensityMatrix maximally_mixed(Index dim) {
    return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }

 private:
  CMatrix m_;
};

/// Descending, non-negative eigenvalue vector.
class Spectrum {
 public:
  explicit Spectrum(std::vector<double> values) : values_(std::move(values)) {
    for (double& v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("Spectrum: non-finite entry");
      if (v < -tol::kNegativeClip) throw numerical_error("Spectrum: eigenvalue below -1e-9 (input not PSD)");
      if (v < 0.0) v = 0.0;
    }
    std::sort(values_.begin(), values_.end(), std::greater<>());
  }

  /// Eigenvalues of a PSD matrix: additionally flushes |v| <= 1e-12 to zero.
  static Spectrum from_eigenvalues(std::vector<double> values) {
    for (double& v : values)
      if (std::abs(v) <= tol::kZeroFlush) v = 0.0;
    return Spectrum(std::move(values));
  }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

 private:
  std::vector<double> values_;
};

/// Order p of a Rényi entropy. Orders within 1e-6 of 1 use the von Neumann formula.
class RenyiOrder {
 public:
  explicit RenyiOrder(double p) : p_(p), von_neumann_(std::abs(p - 1.0) < tol::kVonNeumannBand) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("RenyiOrder: p must be positive and finite");
    if (von_neumann_) p_ = 1.0;
  }

  static RenyiOrder von_neumann() { return RenyiOrder(1.0); }

  double p() const { return p_; }
  bool is_von_neumann() const { return von_neumann_; }

 private:
  double p_;
  bool von_neumann_;
};

/// Probability vector w_i = l_i^2.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("WeightVector: empty");
    double s = 0.0;
    for (double x : w_) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("WeightVector: negative or non-finite weight");
      s += x;
    }
    if (std::abs(s - 1.0) > tol::kWeightSum) throw std::invalid_argument("WeightVector: weights do not sum to 1");
  }

  static WeightVector uniform(std::size_t d) { return WeightVector(std::vector<double>(d, 1.0 / static_cast<double>(d))); }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }

 private:
  std::vector<double> w_;
};

inline void check_spectrum_sum(const Spectrum& s) {
  if (!(std::abs(s.sum() - 1.0) <= tol::kSpectrumSum))
    throw std::invalid_argument("entropy: spectrum sum deviates from 1 by more than 1e-6");
}

/// -sum v ln v in nats, with 0 ln 0 = 0.
inline double von_neumann_entropy(const Spectrum& s) {
  check_spectrum_sum(s);
  double h = 0.0;
  for (double v : s.values())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

/// (1/(1-p)) ln sum v^p in nats, with 0^p = 0.
inline double renyi_entropy(const Spectrum& s, const RenyiOrder& order) {
  if (order.is_von_neumann()) return von_neumann_entropy(s);
  check_spectrum_sum(s);
  const double p = order.p();
  double acc = 0.0;
  for (double v : s.values())
    if (v > 0.0) acc += std::pow(v, p);
  return std::log(acc) / (1.0 - p);
}

namespace detail {

inline Spectrum hermitian_spectrum(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("eigenvalues: Hermitian eigensolver failed");
  const auto& ev = es.eigenvalues();
  return Spectrum::from_eigenvalues(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

}  // namespace detail

inline Spectrum eigenvalues(const DensityMatrix& dm) { return detail::hermitian_spectrum(dm.matrix()); }

/// Haar-distributed unitary: Ginibre matrix, QR, then column phases fixed by diag(R).
inline CMatrix haar_unitary(Index n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("haar_unitary: n must be >= 1");
  CMatrix z(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0) ? d / a : cplx(1.0);
  }
  return q;
}

inline PureState random_pure_state(Index n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("random_pure_state: n must be >= 1");
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
  return PureState::normalized(std::move(v));
}

/// w_i = L_i^2 / sum L_j^2 for D complex Gaussian vectors of dimension N (Dirichlet(N,...,N)).
inline WeightVector sample_weights(std::size_t D, std::size_t N, RngStream& rng) {
  if (D < 1 || N < 1) throw std::invalid_argument("sample_weights: D and N must be >= 1");
  std::vector<double> w(D);
  double total = 0.0;
  for (auto& x : w) {
    double l2 = 0.0;
    for (std::size_t k = 0; k < N; ++k) l2 += std::norm(rng.complex_normal());
    x = l2;
    total += l2;
  }
  for (auto& x : w) x /= total;
  // Re-sum so the invariant holds to the last ulp.
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return WeightVector(std::move(w));
}

/// (1/sqrt(n)) sum_i |i>|i>, amplitude index i*n + i.
inline PureState maximally_entangled(Index n) {
  if (n < 1) throw std::invalid_argument("maximally_entangled: n must be >= 1");
  CVector v = CVector::Zero(n * n);
  const double a = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < n; ++i) v(i * n + i) = a;
  return PureState::normalized(std::move(v));
}

}  // namespace rlab

#endif  // RLAB_QUANTUM_CORE_HPP
