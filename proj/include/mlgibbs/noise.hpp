#ifndef MLGIBBS_NOISE_HPP
#define MLGIBBS_NOISE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace mlgibbs {

/// Deterministic source of i.i.d. standard Gaussian vectors.
///
/// Two streams with the same (seed, stream_id) emit identical sequences;
/// distinct stream ids give statistically independent sequences.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  /// Number of Gaussian vectors emitted so far.
  std::uint64_t cursor() const { return cursor_; }

  template <typename Derived>
  void fill(Eigen::MatrixBase<Derived> const& out_) {
    auto& out = const_cast<Eigen::MatrixBase<Derived>&>(out_);
    using Scalar = typename Derived::Scalar;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = static_cast<Scalar>(normal_(engine_));
    ++cursor_;
  }

  Eigen::VectorXd next(Eigen::Index dim) {
    Eigen::VectorXd z(dim);
    fill(z);
    return z;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t cursor_ = 0;
  std::mt19937_64 engine_;
  // Ziggurat sampler; unlike std::normal_distribution its output is the
  // same on every standard library.
  boost::random::normal_distribution<double> normal_;
};

/// Stream id of one estimator level inside one replicate. The layout
/// (replicate in the high bits, level in the low 16 bits) is part of the
/// reproducibility contract and must not change.
constexpr std::uint64_t level_stream_id(std::uint64_t replicate_id, unsigned level) {
  return (replicate_id << 16) | static_cast<std::uint64_t>(level & 0xFFFFu);
}

}  // namespace mlgibbs

#endif  // MLGIBBS_NOISE_HPP
