#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "aedr/reconstructor.hpp"

namespace aedr {

/// Stochastic linear autoencoder: a PCA projection with Gaussian noise added
/// to the latent code before decoding.
///
///   z  = W (x - mu)
///   z' = z + sigma * g,   g ~ N(0, I_k) keyed by (seed, call_seed)
///   x* = clamp(W^T z' + mu, [0,1])
///
/// Rows of W are orthonormal. With sigma = 0 the backend is an orthogonal
/// projection onto the affine span mu + span(W), hence idempotent whenever
/// clamping is inactive.
class LinearAEBackend final : public Reconstructor {
 public:
  LinearAEBackend(Dims dims, Eigen::VectorXd mean, Eigen::MatrixXd basis,
                  Eigen::VectorXd latent_variance, double noise_sigma, std::uint64_t seed);

  std::string id() const override;
  bool deterministic() const override { return noise_sigma_ == 0.0; }
  bool accepts(const Dims& dims) const override { return dims == dims_; }
  Image reconstruct(const Image& x, std::uint64_t call_seed) const override;

  Eigen::VectorXd encode(const Image& x) const;
  Image decode(const Eigen::VectorXd& z) const;

  const Dims& dims() const { return dims_; }
  int latent_dim() const { return static_cast<int>(basis_.rows()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// k x (w*h*c), rows are principal directions in decreasing variance order.
  const Eigen::MatrixXd& basis() const { return basis_; }
  /// Training-corpus variance of each latent coordinate.
  const Eigen::VectorXd& latent_variance() const { return latent_variance_; }
  double noise_sigma() const { return noise_sigma_; }
  std::uint64_t seed() const { return seed_; }

  /// Mean over latent coordinates of the training-corpus standard deviation.
  double mean_latent_std() const;

  LinearAEBackend with_noise(double noise_sigma) const;

  void set_name(std::string name) { name_ = std::move(name); }

 private:
  Dims dims_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd latent_variance_;
  double noise_sigma_;
  std::uint64_t seed_;
  std::string name_ = "linear_ae";
};

inline constexpr double kDefaultRelativeNoise = 0.05;

/// Fits mean and top-k principal components of `corpus`.
///
/// When `noise_sigma` is empty the noise defaults to
/// kDefaultRelativeNoise * mean latent standard deviation. Requires a nonempty
/// corpus of identical dimensions and 1 <= k <= min(corpus size - 1, pixels).
/// Directions the corpus does not span (zero variance) are completed with an
/// arbitrary orthonormal extension.
LinearAEBackend train_linear_backend(std::span<const Image> corpus, int latent_dim,
                                     std::optional<double> noise_sigma, std::uint64_t seed);

}  // namespace aedr
