#ifndef RLAB_ENTROPY_MIN_HPP
#define RLAB_ENTROPY_MIN_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rlab/channels.hpp"
#include "rlab/parallel.hpp"
#include "rlab/quantum_core.hpp"

namespace rlab {

struct MinimizationConfig {
  int starts = 32;
  int max_iters = 2000;
  double grad_tol = 1e-8;
  double value_tol = 1e-10;
  double fd_step = 1e-6;
  bool include_special_starts = true;

  void validate() const {
    if (starts < 1) throw std::invalid_argument("MinimizationConfig: starts must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("MinimizationConfig: max_iters must be >= 1");
    if (!(grad_tol > 0.0) || !(value_tol > 0.0) || !(fd_step > 0.0))
      throw std::invalid_argument("MinimizationConfig: tolerances must be positive");
  }
};

/// Best point of a multistart minimization. `value` is an upper bound on the
/// true minimum output entropy: it is the entropy at `witness`, nothing more.
struct EntropyEstimate {
  double value;
  PureState witness;
  int start_index;
  int iterations;
  bool converged;
  std::vector<double> all_start_values;
};

namespace detail {

/// (C, Q) for probing psi + s e_k, where the factor product becomes M + s C + conj(s) C^dag + |s|^2 Q.
using ProbeTerms = std::function<std::pair<CMatrix, CMatrix>(Index)>;

/// Probe terms from B = forward(e_k): C = A^dag B, Q = B^dag B on the Gram side, B A^dag and B B^dag otherwise.
template <class Action>
ProbeTerms basis_probe(const Action& action, const CMatrix& a, bool gram) {
  return [&action, a, gram](Index k) {
    const CMatrix b = action.basis_image(k);
    if (gram) return std::pair<CMatrix, CMatrix>(a.adjoint() * b, b.adjoint() * b);
    return std::pair<CMatrix, CMatrix>(b * a.adjoint(), b * b.adjoint());
  };
}

/// The single channel seen from the input: psi -> columns sqrt(w_i) U_i^dag psi.
class SingleChannelAction {
 public:
  explicit SingleChannelAction(const RandomUnitaryChannel& ch) : ch_(&ch) {}

  Index input_dim() const { return ch_->dim(); }

  CMatrix forward(const CVector& psi) const { return conjugate_factor(*ch_, psi); }

  /// forward(e_k).
  CMatrix basis_image(Index k) const {
    CMatrix b(ch_->dim(), ch_->kraus_count());
    for (Index i = 0; i < ch_->kraus_count(); ++i) b.col(i) = std::sqrt(ch_->weight(i)) * ch_->unitary(i).row(k).adjoint();
    return b;
  }

  /// Adjoint of forward: sum_i sqrt(w_i) U_i cols_i.
  CVector backward(const CMatrix& cols) const {
    CVector g = CVector::Zero(ch_->dim());
    for (Index i = 0; i < ch_->kraus_count(); ++i) g.noalias() += std::sqrt(ch_->weight(i)) * (ch_->unitary(i) * cols.col(i));
    return g;
  }

  ProbeTerms probe_terms(const CMatrix& a, bool gram) const { return basis_probe(*this, a, gram); }

 private:
  const RandomUnitaryChannel* ch_;
};

/// E_A (x) E_B as a mixed-unitary map with D_A * D_B terms K_ij = U_i^dag (x) V_j^dag.
/// psi is reshaped row-major to an N_A x N_B matrix X, and K_ij psi <-> U_i^dag X conj(V_j).
class ProductChannelAction {
 public:
  ProductChannelAction(const RandomUnitaryChannel& a, const RandomUnitaryChannel& b) : a_(&a), b_(&b) {
    for (Index i = 0; i < a.kraus_count(); ++i) a_adj_.push_back(a.unitary(i).adjoint());
    for (Index j = 0; j < b.kraus_count(); ++j) {
      b_conj_.push_back(b.unitary(j).conjugate());
      b_trans_.push_back(b.unitary(j).transpose());
    }
  }

  Index input_dim() const { return a_->dim() * b_->dim(); }

  CMatrix forward(const CVector& psi) const {
    const Index na = a_->dim(), nb = b_->dim();
    const Index da = a_->kraus_count(), db = b_->kraus_count();
    Eigen::Map<const RowMajor> x(psi.data(), na, nb);
    CMatrix cols(na * nb, da * db);
    RowMajor y(na, nb);
    for (Index i = 0; i < da; ++i) {
      y.noalias() = a_adj_[static_cast<std::size_t>(i)] * x;
      for (Index j = 0; j < db; ++j) {
        Eigen::Map<RowMajor> out(cols.col(i * db + j).data(), na, nb);
        out.noalias() = std::sqrt(a_->weight(i) * b_->weight(j)) * (y * b_conj_[static_cast<std::size_t>(j)]);
      }
    }
    return cols;
  }

  /// forward(e_k): columns sqrt(w_i w'_j) (U_i^dag e_r) (x) (V_j^dag e_c) with k = r * N_B + c.
  CMatrix basis_image(Index k) const {
    const Index na = a_->dim(), nb = b_->dim();
    const Index da = a_->kraus_count(), db = b_->kraus_count();
    const Index r = k / nb, c = k % nb;
    CMatrix cols(na * nb, da * db);
    for (Index i = 0; i < da; ++i) {
      const auto u = a_adj_[static_cast<std::size_t>(i)].col(r);
      for (Index j = 0; j < db; ++j) {
        const auto v = b_conj_[static_cast<std::size_t>(j)].row(c);
        const double s = std::sqrt(a_->weight(i) * b_->weight(j));
        Eigen::Map<RowMajor> out(cols.col(i * db + j).data(), na, nb);
        out.noalias() = s * (u * v);
      }
    }
    return cols;
  }

  /// On the Gram side C(kl, ij) = s_ij (X_r^T conj(Z_kl) Y_c)(i, j), with X_r, Y_c the r-th and c-th
  /// basis images of the factors and Z_kl column kl of A reshaped; conj(Z_kl) Y_c is tabulated per c.
  ProbeTerms probe_terms(const CMatrix& a, bool gram) const {
    if (!gram) return basis_probe(*this, a, gram);
    const Index na = a_->dim(), nb = b_->dim();
    const Index da = a_->kraus_count(), db = b_->kraus_count();
    const Index terms = da * db;
    auto y_of = [this, nb, db](Index c) {
      CMatrix y(nb, db);
      for (Index j = 0; j < db; ++j) y.col(j) = b_conj_[static_cast<std::size_t>(j)].row(c).transpose();
      return y;
    };
    auto tables = std::make_shared<std::vector<CMatrix>>();
    for (Index c = 0; c < nb; ++c) {
      const CMatrix y = y_of(c);
      CMatrix t(na, terms * db);
      for (Index kl = 0; kl < terms; ++kl) {
        Eigen::Map<const RowMajor> z(a.col(kl).data(), na, nb);
        t.middleCols(kl * db, db).noalias() = z.conjugate() * y;
      }
      tables->push_back(std::move(t));
    }
    Eigen::MatrixXd sw(da, db);
    for (Index i = 0; i < da; ++i)
      for (Index j = 0; j < db; ++j) sw(i, j) = std::sqrt(a_->weight(i) * b_->weight(j));
    return [this, tables, y_of, sw, na, da, db, nb, terms](Index k) {
      const Index r = k / nb, c = k % nb;
      CMatrix x(na, da);
      for (Index i = 0; i < da; ++i) x.col(i) = a_adj_[static_cast<std::size_t>(i)].col(r);
      const CMatrix y = y_of(c);
      const CMatrix rt = x.transpose() * (*tables)[static_cast<std::size_t>(c)];
      CMatrix cm(terms, terms);
      for (Index kl = 0; kl < terms; ++kl)
        for (Index i = 0; i < da; ++i)
          for (Index j = 0; j < db; ++j) cm(kl, i * db + j) = sw(i, j) * rt(i, kl * db + j);
      const CMatrix xx = x.adjoint() * x, yy = y.adjoint() * y;
      CMatrix q(terms, terms);
      for (Index i = 0; i < da; ++i)
        for (Index j = 0; j < db; ++j)
          for (Index i2 = 0; i2 < da; ++i2)
            for (Index j2 = 0; j2 < db; ++j2)
              q(i * db + j, i2 * db + j2) = sw(i, j) * sw(i2, j2) * xx(i, i2) * yy(j, j2);
      return std::pair<CMatrix, CMatrix>(std::move(cm), std::move(q));
    };
  }

  /// sum_ij sqrt(w_i w'_j) (U_i (x) V_j) cols_ij  <->  U_i Z_ij V_j^T.
  CVector backward(const CMatrix& cols) const {
    const Index na = a_->dim(), nb = b_->dim();
    const Index da = a_->kraus_count(), db = b_->kraus_count();
    CVector g = CVector::Zero(na * nb);
    Eigen::Map<RowMajor> out(g.data(), na, nb);
    RowMajor inner(na, nb);
    for (Index i = 0; i < da; ++i) {
      inner.setZero();
      for (Index j = 0; j < db; ++j) {
        Eigen::Map<const RowMajor> z(cols.col(i * db + j).data(), na, nb);
        inner.noalias() += std::sqrt(a_->weight(i) * b_->weight(j)) * (z * b_trans_[static_cast<std::size_t>(j)]);
      }
      out.noalias() += a_->unitary(i) * inner;
    }
    return g;
  }

 private:
  using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RandomUnitaryChannel* a_;
  const RandomUnitaryChannel* b_;
  std::vector<CMatrix> a_adj_, b_conj_, b_trans_;
};

}  // namespace detail

/// Output Rényi entropy of a mixed-unitary map as a function of the pure input.
///
/// With A the matrix of columns sqrt(w_k) K_k psi, the output is A A^dag and the
/// complementary output is (A^dag A)^T. Whichever is smaller is diagonalized.
/// The gradient uses d Tr f(M) = Tr f'(M) dM, which needs no spectral gap; it is
/// only unavailable when an eigenvalue of the diagonalized factor is ~0 and
/// f'(0) diverges (p < 1 or von Neumann).
template <class Action>
class OutputEntropyObjective {
 public:
  struct Evaluation {
    double value = 0.0;
    /// Directional derivative along dpsi is Re<gradient, dpsi>.
    CVector gradient;
    bool smooth = true;
  };

  OutputEntropyObjective(Action action, RenyiOrder order) : action_(std::move(action)), order_(order) {}

  Index dim() const { return action_.input_dim(); }
  const RenyiOrder& order() const { return order_; }

  Spectrum spectrum(const CVector& psi) const {
    const CMatrix a = action_.forward(psi);
    return detail::hermitian_spectrum(factor_product(a));
  }

  double value(const CVector& psi) const { return renyi_entropy(spectrum(psi), order_); }

  Evaluation evaluate(const CVector& psi, bool with_gradient) const {
    const CMatrix a = action_.forward(psi);
    const bool gram = a.cols() <= a.rows();
    const CMatrix m = factor_product(a);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, with_gradient ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("output entropy: eigensolver failed");
    const Eigen::VectorXd& lam = es.eigenvalues();

    Evaluation ev;
    ev.value = renyi_entropy(Spectrum::from_eigenvalues(std::vector<double>(lam.data(), lam.data() + lam.size())), order_);
    ev.smooth = lam.minCoeff() > tol::kZeroFlush;
    if (!with_gradient || !ev.smooth) return ev;

    Eigen::VectorXd dfdl(lam.size());
    if (order_.is_von_neumann()) {
      for (Index k = 0; k < lam.size(); ++k) dfdl(k) = -std::log(lam(k)) - 1.0;
    } else {
      const double p = order_.p();
      double s = 0.0;
      for (Index k = 0; k < lam.size(); ++k) s += std::pow(lam(k), p);
      for (Index k = 0; k < lam.size(); ++k) dfdl(k) = p * std::pow(lam(k), p - 1.0) / (s * (1.0 - p));
    }
    const CMatrix& q = es.eigenvectors();
    const CMatrix b = q * dfdl.asDiagonal() * q.adjoint();
    const CMatrix u = gram ? CMatrix(a * b) : CMatrix(b * a);
    ev.gradient = 2.0 * action_.backward(u);
    return ev;
  }

  /// Central differences of psi -> H(psi / |psi|) along each real and imaginary coordinate.
  /// forward is linear, so with B = forward(e_k) the perturbed factor product is
  /// M + s C + conj(s) C^dag + |s|^2 B'B for psi + s e_k, and no probe re-applies the channel.
  CVector finite_difference_gradient(const CVector& psi, double h) const {
    const CMatrix a = action_.forward(psi);
    const bool gram = a.cols() <= a.rows();
    const CMatrix m0 = gram ? CMatrix(a.adjoint() * a) : CMatrix(a * a.adjoint());
    const double n0 = psi.squaredNorm();
    const detail::ProbeTerms probe = action_.probe_terms(a, gram);
    CVector g(psi.size());
    for (Index k = 0; k < psi.size(); ++k) {
      const auto [c, bb] = probe(k);
      auto at = [&](cplx s) {
        CMatrix m = m0 + s * c + std::conj(s) * c.adjoint() + std::norm(s) * bb;
        m /= n0 + 2.0 * (std::conj(psi(k)) * s).real() + std::norm(s);
        return renyi_entropy(detail::hermitian_spectrum(0.5 * (m + m.adjoint())), order_);
      };
      const double re = (at(h) - at(-h)) / (2.0 * h);
      const double im = (at(cplx(0.0, h)) - at(cplx(0.0, -h))) / (2.0 * h);
      g(k) = cplx(re, im);
    }
    return g;
  }

 private:
  static CMatrix factor_product(const CMatrix& a) {
    CMatrix m = (a.cols() <= a.rows()) ? CMatrix(a.adjoint() * a) : CMatrix(a * a.adjoint());
    return 0.5 * (m + m.adjoint());
  }

  Action action_;
  RenyiOrder order_;
};

/// Tangent-space projection at unit x under the real inner product Re<.,.>.
inline CVector project_tangent(const CVector& x, const CVector& g) { return g - x.dot(g).real() * x; }

struct DescentResult {
  CVector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_finite_differences = false;
  std::vector<double> history;
};

/// Projected steepest descent on the unit sphere with Armijo backtracking
/// (c = 1e-4, shrink 0.5, initial step 1) and renormalization as retraction.
/// Switches to central differences for good once the output hits a ~0 eigenvalue.
template <class Objective>
DescentResult local_descent(const Objective& obj, const CVector& start, const MinimizationConfig& cfg,
                            bool record_history = false) {
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr double kMinStep = 1e-20;

  DescentResult r;
  r.x = start / start.norm();
  auto ev = obj.evaluate(r.x, true);
  r.value = ev.value;
  r.used_finite_differences = !ev.smooth;
  if (record_history) r.history.push_back(r.value);

  for (int it = 0; it < cfg.max_iters; ++it) {
    const CVector g = r.used_finite_differences ? obj.finite_difference_gradient(r.x, cfg.fd_step) : ev.gradient;
    const CVector rg = project_tangent(r.x, g);
    const double gn2 = rg.squaredNorm();
    if (std::sqrt(gn2) <= cfg.grad_tol) {
      r.converged = true;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    CVector trial;
    double trial_value = 0.0;
    while (step >= kMinStep) {
      trial = r.x - step * rg;
      trial /= trial.norm();
      trial_value = obj.value(trial);
      if (trial_value <= r.value - kArmijo * step * gn2) {
        accepted = true;
        break;
      }
      step *= kShrink;
    }
    if (!accepted) {
      // No representable decrease along the descent direction.
      r.converged = true;
      break;
    }

    const double decrease = r.value - trial_value;
    r.x = std::move(trial);
    r.value = trial_value;
    ++r.iterations;
    if (record_history) r.history.push_back(r.value);

    if (!r.used_finite_differences) {
      ev = obj.evaluate(r.x, true);
      r.value = ev.value;
      if (!ev.smooth) r.used_finite_differences = true;
    }
    if (decrease <= cfg.value_tol * std::max(1.0, std::abs(r.value))) {
      r.converged = true;
      break;
    }
  }
  return r;
}

namespace detail {

/// Runs every start, then keeps the smallest value; ties within 1e-12 go to the lower index.
template <class Objective>
EntropyEstimate multistart(const Objective& obj, const std::vector<CVector>& starts, const MinimizationConfig& cfg) {
  std::vector<DescentResult> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) { results[s] = local_descent(obj, starts[s], cfg); });

  std::size_t best = 0;
  std::vector<double> values(results.size());
  bool any_converged = false;
  for (std::size_t s = 0; s < results.size(); ++s) {
    values[s] = results[s].value;
    any_converged = any_converged || results[s].converged;
    if (results[s].value < results[best].value - 1e-12) best = s;
  }
  const auto& b = results[best];
  return EntropyEstimate{b.value,       PureState(b.x), static_cast<int>(best), b.iterations,
                         any_converged, std::move(values)};
}

}  // namespace detail

/// H_p(E(|psi><psi|)). Uses the complementary output when D < N (same nonzero spectrum).
inline double output_entropy(const RandomUnitaryChannel& ch, const PureState& psi, const RenyiOrder& order) {
  if (psi.dim() != ch.dim()) throw std::invalid_argument("output_entropy: state dimension does not match channel");
  if (ch.kraus_count() < ch.dim()) return renyi_entropy(eigenvalues(conjugate_apply(ch, psi)), order);
  return renyi_entropy(eigenvalues(apply(ch, DensityMatrix::projector(psi))), order);
}

/// H_p((E (x) conj E)(|psi><psi|)) for psi of dimension N^2.
inline double product_output_entropy(const RandomUnitaryChannel& ch, const PureState& psi, const RenyiOrder& order) {
  if (psi.dim() != ch.dim() * ch.dim())
    throw std::invalid_argument("product_output_entropy: state dimension must be N^2");
  const RandomUnitaryChannel conj = complex_conjugate(ch);
  OutputEntropyObjective obj(detail::ProductChannelAction(ch, conj), order);
  return obj.value(psi.amplitudes());
}

/// Multistart minimization of the output entropy over pure inputs.
///
/// Start k < cfg.starts is random_pure_state drawn from rng.derive(k); with
/// include_special_starts the N computational basis states follow.
inline EntropyEstimate minimize_output_entropy(const RandomUnitaryChannel& ch, const RenyiOrder& order,
                                               const MinimizationConfig& cfg, const RngStream& rng) {
  cfg.validate();
  OutputEntropyObjective obj(detail::SingleChannelAction(ch), order);
  std::vector<CVector> starts;
  for (int s = 0; s < cfg.starts; ++s) {
    RngStream child = rng.derive(static_cast<std::uint64_t>(s));
    starts.push_back(random_pure_state(ch.dim(), child).amplitudes());
  }
  if (cfg.include_special_starts)
    for (Index k = 0; k < ch.dim(); ++k) starts.push_back(PureState::basis(ch.dim(), k).amplitudes());
  return detail::multistart(obj, starts, cfg);
}

inline constexpr Index kMaxProductDim = 64;

/// Multistart minimization for E (x) conj(E) over pure states of dimension N^2.
///
/// Starts: cfg.starts random states (rng.derive(k)), then the maximally entangled
/// state, then psi_A (x) conj(psi_A). psi_A is `single_witness` when given, else the
/// witness of minimize_output_entropy(ch, order, cfg, rng.derive(cfg.starts)).
inline EntropyEstimate minimize_product_entropy(const RandomUnitaryChannel& ch, const RenyiOrder& order,
                                                const MinimizationConfig& cfg, const RngStream& rng,
                                                const std::optional<PureState>& single_witness = std::nullopt) {
  cfg.validate();
  if (ch.dim() > kMaxProductDim) throw std::invalid_argument("minimize_product_entropy: N must be <= 64");
  const Index n = ch.dim();
  const RandomUnitaryChannel conj = complex_conjugate(ch);
  OutputEntropyObjective obj(detail::ProductChannelAction(ch, conj), order);

  std::vector<CVector> starts;
  for (int s = 0; s < cfg.starts; ++s) {
    RngStream child = rng.derive(static_cast<std::uint64_t>(s));
    starts.push_back(random_pure_state(n * n, child).amplitudes());
  }
  starts.push_back(maximally_entangled(n).amplitudes());
  const PureState psi_a = single_witness
                              ? *single_witness
                              : minimize_output_entropy(ch, order, cfg, rng.derive(static_cast<std::uint64_t>(cfg.starts))).witness;
  if (psi_a.dim() != n) throw std::invalid_argument("minimize_product_entropy: witness dimension does not match channel");
  starts.push_back(tensor(psi_a, psi_a.conjugate()).amplitudes());
  return detail::multistart(obj, starts, cfg);
}

namespace detail {

/// Closed-form H_p of the qubit output at Bloch angles (theta, phi).
inline double qubit_output_entropy(const RandomUnitaryChannel& ch, const RenyiOrder& order, double theta, double phi) {
  const cplx a0(std::cos(0.5 * theta), 0.0);
  const cplx a1 = std::polar(std::sin(0.5 * theta), phi);
  double r00 = 0.0, r11 = 0.0;
  cplx r01(0.0, 0.0);
  for (Index i = 0; i < ch.kraus_count(); ++i) {
    const CMatrix& u = ch.unitary(i);
    // v = U^dag psi
    const cplx v0 = std::conj(u(0, 0)) * a0 + std::conj(u(1, 0)) * a1;
    const cplx v1 = std::conj(u(0, 1)) * a0 + std::conj(u(1, 1)) * a1;
    const double w = ch.weight(i);
    r00 += w * std::norm(v0);
    r11 += w * std::norm(v1);
    r01 += w * v0 * std::conj(v1);
  }
  const double tr = r00 + r11;
  const double disc = std::sqrt((r00 - r11) * (r00 - r11) + 4.0 * std::norm(r01));
  return renyi_entropy(Spectrum::from_eigenvalues({0.5 * (tr + disc), 0.5 * (tr - disc)}), order);
}

}  // namespace detail

/// Grid search over the Bloch sphere (res x 2res grid, theta in [0, pi], phi in [0, 2 pi)),
/// then a zoom refinement around the best cell: 21 x 21 sub-grids spanning +-2 cells,
/// shrinking the cell 5x per level until it is below 1e-10 rad.
inline double brute_force_min(const RandomUnitaryChannel& ch, const RenyiOrder& order, int grid_resolution) {
  if (ch.dim() != 2) throw std::invalid_argument("brute_force_min: channel must act on a qubit (N = 2)");
  if (grid_resolution < 2) throw std::invalid_argument("brute_force_min: grid_resolution must be >= 2");
  constexpr double pi = std::numbers::pi;
  double d_theta = pi / (grid_resolution - 1);
  double d_phi = 2.0 * pi / (2 * grid_resolution);

  double best = std::numeric_limits<double>::infinity();
  double bt = 0.0, bp = 0.0;
  for (int i = 0; i < grid_resolution; ++i) {
    for (int j = 0; j < 2 * grid_resolution; ++j) {
      const double t = i * d_theta, ph = j * d_phi;
      const double h = detail::qubit_output_entropy(ch, order, t, ph);
      if (h < best) best = h, bt = t, bp = ph;
    }
  }

  constexpr int kSub = 21;
  while (d_theta > 1e-10 || d_phi > 1e-10) {
    const double ct = bt, cp = bp;
    for (int i = 0; i < kSub; ++i) {
      for (int j = 0; j < kSub; ++j) {
        const double t = ct + (i - kSub / 2) * (4.0 * d_theta / (kSub - 1));
        const double ph = cp + (j - kSub / 2) * (4.0 * d_phi / (kSub - 1));
        const double h = detail::qubit_output_entropy(ch, order, t, ph);
        if (h < best) best = h, bt = t, bp = ph;
      }
    }
    d_theta /= 5.0;
    d_phi /= 5.0;
  }
  return best;
}

}  // namespace rlab

#endif  // RLAB_ENTROPY_MIN_HPP
