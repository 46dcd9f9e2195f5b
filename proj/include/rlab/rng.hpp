#ifndef RLAB_RNG_HPP
#define RLAB_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

namespace rlab {

/// Reproducible random stream keyed by (master_seed, stream_index).
///
/// Two streams constructed from the same pair produce identical sequences.
/// Parallel work never shares a stream: each task receives its own child via
/// derive(k), where k is a running counter over the task's (trial, start)
/// position. derive() depends only on the key, never on how much of the parent
/// stream has been consumed, so serial and parallel schedules agree.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed), stream_index_(stream_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  RngStream derive(std::uint64_t k) const {
    return RngStream(splitmix64(master_seed_) ^ splitmix64(stream_index_ + 0x632be59bd9b4e019ULL), k);
  }

  engine_type& engine() { return engine_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Standard complex Gaussian with independent real/imaginary parts of unit variance.
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rlab

#endif  // RLAB_RNG_HPP
