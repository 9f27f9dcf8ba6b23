#include "aedr/linear_backend.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "aedr/error.hpp"

namespace aedr {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(const Image& x) {
  return {x.pixels().data(), static_cast<Eigen::Index>(x.size())};
}

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t call_seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(call_seed),
                    static_cast<std::uint32_t>(call_seed >> 32)};
  return std::mt19937_64(seq);
}

// Modified Gram-Schmidt over the rows of `basis`, run twice for stability.
// Rows that collapse are replaced by the first standard basis vector that is
// independent of the rows already accepted.
void orthonormalize_rows(Eigen::MatrixXd& basis) {
  const Eigen::Index k = basis.rows();
  const Eigen::Index p = basis.cols();
  Eigen::Index next_unit = 0;
  for (Eigen::Index r = 0; r < k; ++r) {
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index q = 0; q < r; ++q) {
          basis.row(r) -= basis.row(q).dot(basis.row(r)) * basis.row(q);
        }
      }
      const double norm = basis.row(r).norm();
      if (norm > 1e-6) {
        basis.row(r) /= norm;
        break;
      }
      if (next_unit >= p || attempt > p) throw Error("cannot complete an orthonormal basis");
      basis.row(r).setZero();
      basis(r, next_unit++) = 1.0;
    }
  }
}

// Deterministic sign: the largest-magnitude entry of each row is positive.
void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index r = 0; r < basis.rows(); ++r) {
    Eigen::Index idx = 0;
    double best = -1.0;
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
      // Strict comparison with a small slack keeps the first of near-equal entries.
      if (std::abs(basis(r, c)) > best + 1e-12) {
        best = std::abs(basis(r, c));
        idx = c;
      }
    }
    if (basis(r, idx) < 0) basis.row(r) *= -1.0;
  }
}

}  // namespace

LinearAEBackend::LinearAEBackend(Dims dims, Eigen::VectorXd mean, Eigen::MatrixXd basis,
                                 Eigen::VectorXd latent_variance, double noise_sigma,
                                 std::uint64_t seed)
    : dims_(dims),
      mean_(std::move(mean)),
      basis_(std::move(basis)),
      latent_variance_(std::move(latent_variance)),
      noise_sigma_(noise_sigma),
      seed_(seed) {
  const auto p = static_cast<Eigen::Index>(dims_.samples());
  if (p == 0) throw Error("linear backend: empty dimensions");
  if (mean_.size() != p) throw Error("linear backend: mean length does not match dimensions");
  if (basis_.rows() < 1 || basis_.cols() != p) {
    throw Error("linear backend: basis shape does not match dimensions");
  }
  if (latent_variance_.size() != basis_.rows()) {
    throw Error("linear backend: latent variance length does not match latent dimension");
  }
  if (!(noise_sigma_ >= 0.0) || !std::isfinite(noise_sigma_)) {
    throw Error("linear backend: noise sigma must be finite and >= 0");
  }
  const Eigen::MatrixXd gram = basis_ * basis_.transpose();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(basis_.rows(), basis_.rows());
  if (!((gram - eye).cwiseAbs().maxCoeff() <= 1e-8)) {
    throw Error("linear backend: basis rows are not orthonormal");
  }
}

std::string LinearAEBackend::id() const { return name_; }

Eigen::VectorXd LinearAEBackend::encode(const Image& x) const {
  if (!accepts(x.dims())) throw Error("linear backend: image dimensions do not match backend");
  return basis_ * (as_vector(x) - mean_);
}

Image LinearAEBackend::decode(const Eigen::VectorXd& z) const {
  if (z.size() != basis_.rows()) throw Error("linear backend: latent length mismatch");
  const Eigen::VectorXd x = basis_.transpose() * z + mean_;
  return Image::clamped(dims_.width, dims_.height, dims_.channels,
                        std::vector<double>(x.data(), x.data() + x.size()));
}

Image LinearAEBackend::reconstruct(const Image& x, std::uint64_t call_seed) const {
  Eigen::VectorXd z = encode(x);
  if (noise_sigma_ > 0.0) {
    auto engine = keyed_engine(seed_, call_seed);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += noise_sigma_ * normal(engine);
  }
  return decode(z);
}

double LinearAEBackend::mean_latent_std() const {
  return latent_variance_.cwiseMax(0.0).cwiseSqrt().mean();
}

LinearAEBackend LinearAEBackend::with_noise(double noise_sigma) const {
  LinearAEBackend copy(dims_, mean_, basis_, latent_variance_, noise_sigma, seed_);
  copy.name_ = name_;
  return copy;
}

LinearAEBackend train_linear_backend(std::span<const Image> corpus, int latent_dim,
                                     std::optional<double> noise_sigma, std::uint64_t seed) {
  if (corpus.empty()) throw Error("train: empty corpus");
  const Dims dims = corpus.front().dims();
  for (const auto& img : corpus) {
    if (img.dims() != dims) throw Error("train: corpus images have inconsistent dimensions");
  }
  const auto n = static_cast<Eigen::Index>(corpus.size());
  const auto p = static_cast<Eigen::Index>(dims.samples());
  if (latent_dim < 1 || latent_dim > std::min<Eigen::Index>(n - 1, p)) {
    throw Error("train: latent dimension " + std::to_string(latent_dim) +
                " out of range [1, " + std::to_string(std::min<Eigen::Index>(n - 1, p)) + "]");
  }
  const Eigen::Index k = latent_dim;

  Eigen::MatrixXd centered(p, n);
  for (Eigen::Index j = 0; j < n; ++j) centered.col(j) = as_vector(corpus[j]);
  const Eigen::VectorXd mean = centered.rowwise().mean();
  centered.colwise() -= mean;

  Eigen::MatrixXd basis(k, p);
  Eigen::VectorXd variance(k);
  const double dof = static_cast<double>(n - 1);

  if (p > n) {
    // Gram trick: eigenvectors of Xc^T Xc map to principal directions Xc u / sqrt(lambda).
    const Eigen::MatrixXd gram = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw Error("train: eigendecomposition failed");
    const double floor = 1e-12 * std::max(1.0, gram.trace());
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index c = n - 1 - r;
      const double lambda = solver.eigenvalues()[c];
      if (lambda > floor) {
        basis.row(r) = (centered * solver.eigenvectors().col(c)).transpose() / std::sqrt(lambda);
        variance[r] = lambda / dof;
      } else {
        basis.row(r).setZero();
        variance[r] = 0.0;
      }
    }
  } else {
    const Eigen::MatrixXd cov = centered * centered.transpose() / dof;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("train: eigendecomposition failed");
    const double floor = 1e-12 * std::max(1.0, cov.trace());
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index c = p - 1 - r;
      const double lambda = solver.eigenvalues()[c];
      if (lambda > floor) {
        basis.row(r) = solver.eigenvectors().col(c).transpose();
        variance[r] = lambda;
      } else {
        basis.row(r).setZero();
        variance[r] = 0.0;
      }
    }
  }
  orthonormalize_rows(basis);
  fix_signs(basis);

  LinearAEBackend tmp(dims, mean, basis, variance, 0.0, seed);
  const double sigma = noise_sigma.value_or(kDefaultRelativeNoise * tmp.mean_latent_std());
  return tmp.with_noise(sigma);
}

}  // namespace aedr
