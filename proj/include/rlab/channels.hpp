#ifndef RLAB_CHANNELS_HPP
#define RLAB_CHANNELS_HPP

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rlab/quantum_core.hpp"

namespace rlab {

/// rho -> sum_i w_i U_i^dag rho U_i on an N-dimensional system.
class RandomUnitaryChannel {
 public:
  RandomUnitaryChannel(std::vector<CMatrix> unitaries, WeightVector weights)
      : unitaries_(std::move(unitaries)), weights_(std::move(weights)) {
    if (unitaries_.empty()) throw std::invalid_argument("RandomUnitaryChannel: no unitaries");
    if (unitaries_.size() != weights_.size())
      throw std::invalid_argument("RandomUnitaryChannel: unitary count does not match weight count");
    const Index n = unitaries_.front().rows();
    for (const auto& u : unitaries_) {
      if (u.rows() != n || u.cols() != n) throw std::invalid_argument("RandomUnitaryChannel: unitaries must be N x N");
      const double err = (u.adjoint() * u - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
      if (!(err <= tol::kUnitary)) throw std::invalid_argument("RandomUnitaryChannel: matrix is not unitary within 1e-10");
    }
  }

  Index dim() const { return unitaries_.front().rows(); }
  Index kraus_count() const { return static_cast<Index>(unitaries_.size()); }
  const std::vector<CMatrix>& unitaries() const { return unitaries_; }
  const CMatrix& unitary(Index i) const { return unitaries_[static_cast<std::size_t>(i)]; }
  const WeightVector& weights() const { return weights_; }
  double weight(Index i) const { return weights_[static_cast<std::size_t>(i)]; }

  friend bool operator==(const RandomUnitaryChannel& a, const RandomUnitaryChannel& b) {
    if (a.kraus_count() != b.kraus_count() || a.dim() != b.dim()) return false;
    for (Index i = 0; i < a.kraus_count(); ++i)
      if (a.weight(i) != b.weight(i) || a.unitary(i) != b.unitary(i)) return false;
    return true;
  }

 private:
  std::vector<CMatrix> unitaries_;
  WeightVector weights_;
};

/// Weights are drawn first, then the D unitaries in order, all from `rng`.
inline RandomUnitaryChannel sample_channel(Index D, Index N, RngStream& rng) {
  if (D < 1 || N < 1) throw std::invalid_argument("sample_channel: D and N must be >= 1");
  WeightVector w = sample_weights(static_cast<std::size_t>(D), static_cast<std::size_t>(N), rng);
  std::vector<CMatrix> us;
  us.reserve(static_cast<std::size_t>(D));
  for (Index i = 0; i < D; ++i) us.push_back(haar_unitary(N, rng));
  return RandomUnitaryChannel(std::move(us), std::move(w));
}

inline DensityMatrix apply(const RandomUnitaryChannel& ch, const DensityMatrix& rho) {
  if (rho.dim() != ch.dim()) throw std::invalid_argument("apply: density matrix dimension does not match channel");
  CMatrix out = CMatrix::Zero(ch.dim(), ch.dim());
  for (Index i = 0; i < ch.kraus_count(); ++i) {
    const CMatrix& u = ch.unitary(i);
    out.noalias() += ch.weight(i) * (u.adjoint() * rho.matrix() * u);
  }
  // Symmetrize away round-off so downstream Hermitian checks see an exact adjoint.
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(std::move(out));
}

inline RandomUnitaryChannel complex_conjugate(const RandomUnitaryChannel& ch) {
  std::vector<CMatrix> us;
  us.reserve(ch.unitaries().size());
  for (const auto& u : ch.unitaries()) us.push_back(u.conjugate());
  return RandomUnitaryChannel(std::move(us), ch.weights());
}

namespace detail {

/// Columns sqrt(w_i) U_i^dag |psi>, an N x D matrix A with E(psi psi^dag) = A A^dag.
inline CMatrix conjugate_factor(const RandomUnitaryChannel& ch, const CVector& psi) {
  CMatrix a(ch.dim(), ch.kraus_count());
  for (Index i = 0; i < ch.kraus_count(); ++i)
    a.col(i).noalias() = std::sqrt(ch.weight(i)) * (ch.unitary(i).adjoint() * psi);
  return a;
}

}  // namespace detail

/// Output of the complementary channel on |psi><psi|.
///
/// Entry (i, j) is sqrt(w_i w_j) <psi| U_j U_i^dag |psi>. The other ordering of the
/// trace gives the transpose, which has the same spectrum.
inline DensityMatrix conjugate_apply(const RandomUnitaryChannel& ch, const PureState& psi) {
  if (psi.dim() != ch.dim()) throw std::invalid_argument("conjugate_apply: state dimension does not match channel");
  const CMatrix a = detail::conjugate_factor(ch, psi.amplitudes());
  // (i,j) = a_j^dag a_i = (A^T conj(A))_{ij}
  CMatrix g = a.transpose() * a.conjugate();
  g = 0.5 * (g + g.adjoint()).eval();
  return DensityMatrix(std::move(g));
}

namespace detail {

/// Applies (A (x) B) to every column of m, where columns index the product basis a * nb + b.
/// Uses (A (x) B) vec(X) = vec(A X B^T) on the row-major reshape, never forming A (x) B.
inline CMatrix kron_left_apply(const CMatrix& a, const CMatrix& b, const CMatrix& m) {
  using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index na = a.cols();
  const Index nb = b.cols();
  CMatrix out(a.rows() * b.rows(), m.cols());
  RowMajor tmp(a.rows(), nb);
  for (Index c = 0; c < m.cols(); ++c) {
    Eigen::Map<const RowMajor> x(m.col(c).data(), na, nb);
    Eigen::Map<RowMajor> y(out.col(c).data(), a.rows(), b.rows());
    tmp.noalias() = a * x;
    y.noalias() = tmp * b.transpose();
  }
  return out;
}

}  // namespace detail

/// (E_A (x) E_B)(rho): sum_ij w_i w'_j (U_i^dag (x) V_j^dag) rho (U_i (x) V_j).
inline DensityMatrix tensor_apply(const RandomUnitaryChannel& ch_a, const RandomUnitaryChannel& ch_b,
                                  const DensityMatrix& rho) {
  if (rho.dim() != ch_a.dim() * ch_b.dim())
    throw std::invalid_argument("tensor_apply: density matrix dimension does not match N_A * N_B");
  const Index n = rho.dim();
  CMatrix out = CMatrix::Zero(n, n);
  for (Index i = 0; i < ch_a.kraus_count(); ++i) {
    const CMatrix ua = ch_a.unitary(i).adjoint();
    for (Index j = 0; j < ch_b.kraus_count(); ++j) {
      const CMatrix vb = ch_b.unitary(j).adjoint();
      // K rho K^dag = (K (K rho)^dag)^dag
      const CMatrix left = detail::kron_left_apply(ua, vb, rho.matrix());
      const CMatrix both = detail::kron_left_apply(ua, vb, left.adjoint());
      out.noalias() += (ch_a.weight(i) * ch_b.weight(j)) * both.adjoint();
    }
  }
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(std::move(out));
}

}  // namespace rlab

#endif  // RLAB_CHANNELS_HPP
