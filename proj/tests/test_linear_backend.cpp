#include <doctest.h>

#include <cmath>
#include <random>

#include "aedr/backend_io.hpp"
#include "aedr/error.hpp"
#include "aedr/harness.hpp"
#include "aedr/linear_backend.hpp"
#include "aedr/losses.hpp"
#include "support.hpp"

using namespace aedr;

namespace {

std::vector<Image> random_corpus(int n, int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Image> out;
  for (int i = 0; i < n; ++i) out.push_back(test::random_image(w, h, 1, rng));
  return out;
}

Eigen::VectorXd as_vector(const Image& img) {
  Eigen::VectorXd v(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) v[i] = img.pixels()[i];
  return v;
}

}  // namespace

TEST_CASE("two-pixel corpus has the diagonal as its principal axis") {
  std::vector<Image> corpus{Image(2, 1, 1, {0.0, 0.0}), Image(2, 1, 1, {1.0, 1.0})};
  LinearAEBackend b = train_linear_backend(corpus, 1, 0.0, 0);
  CHECK(b.mean()[0] == doctest::Approx(0.5));
  CHECK(b.mean()[1] == doctest::Approx(0.5));
  CHECK(std::abs(b.basis()(0, 0)) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(b.basis()(0, 0) == doctest::Approx(b.basis()(0, 1)).epsilon(1e-12));
  CHECK(b.latent_variance()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical corpus is reproduced by the noiseless backend") {
  std::mt19937_64 rng(1);
  Image x = test::random_image(6, 5, 1, rng);
  std::vector<Image> corpus(3, x);
  LinearAEBackend b = train_linear_backend(corpus, 1, 0.0, 0);
  for (int i = 0; i < x.width() * x.height(); ++i) CHECK(b.mean()[i] == doctest::Approx(x.pixels()[i]));
  CHECK((b.basis() * b.basis().transpose())(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  Image r = b.reconstruct(x, 9);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(r.pixels()[i] - x.pixels()[i]) <= 1e-12);
}

TEST_CASE("principal rows are orthonormal") {
  // 256 pixels > 64 images: exercises the Gram path.
  LinearAEBackend gram = train_linear_backend(random_corpus(64, 16, 16, 2), 8, std::nullopt, 0);
  Eigen::MatrixXd g = gram.basis() * gram.basis().transpose();
  CHECK((g - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);
  // 16 pixels < 64 images: covariance path.
  LinearAEBackend cov = train_linear_backend(random_corpus(64, 4, 4, 3), 8, std::nullopt, 0);
  Eigen::MatrixXd c = cov.basis() * cov.basis().transpose();
  CHECK((c - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);
  for (int i = 1; i < 8; ++i) CHECK(cov.latent_variance()[i] <= cov.latent_variance()[i - 1]);
}

TEST_CASE("gram and covariance paths find the same subspace") {
  auto corpus = random_corpus(30, 5, 5, 4);
  LinearAEBackend a = train_linear_backend(corpus, 4, 0.0, 0);
  // Same images padded with a constant pixel row becomes wider than the corpus.
  std::vector<Image> padded;
  for (const auto& img : corpus) {
    std::vector<double> px(img.pixels().begin(), img.pixels().end());
    px.resize(25 * 2, 0.5);
    padded.emplace_back(5, 10, 1, px);
  }
  LinearAEBackend b = train_linear_backend(padded, 4, 0.0, 0);
  Eigen::MatrixXd wa = a.basis();
  Eigen::MatrixXd wb = b.basis().leftCols(25);
  Eigen::MatrixXd cross = wa * wb.transpose();
  CHECK((cross.cwiseAbs() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("training rejects bad inputs") {
  auto corpus = random_corpus(5, 4, 4, 5);
  CHECK_THROWS_AS(train_linear_backend({}, 1, 0.0, 0), Error);
  CHECK_THROWS_AS(train_linear_backend(corpus, 0, 0.0, 0), Error);
  CHECK_THROWS_AS(train_linear_backend(corpus, 5, 0.0, 0), Error);
  corpus.push_back(Image(4, 5, 1));
  CHECK_THROWS_AS(train_linear_backend(corpus, 2, 0.0, 0), Error);
}

TEST_CASE("noiseless backend is a projection") {
  auto corpus = random_corpus(40, 8, 8, 6);
  LinearAEBackend b = train_linear_backend(corpus, 6, 0.0, 0);
  CHECK(b.deterministic());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    Image x = test::random_image(8, 8, 1, rng);
    Image r1 = b.reconstruct(x, i);
    Image r2 = b.reconstruct(r1, i + 1);
    CHECK(loss(LossMetric::Mse, r2, r1) <= 1e-12);
  }

  // A point of the affine span is a fixed point.
  Eigen::VectorXd z(6);
  for (int i = 0; i < 6; ++i) z[i] = 0.05 * (i - 2.5);
  Eigen::VectorXd v = b.mean() + b.basis().transpose() * z;
  REQUIRE(v.minCoeff() > 0.0);
  REQUIRE(v.maxCoeff() < 1.0);
  Image x(8, 8, 1, std::vector<double>(v.data(), v.data() + v.size()));
  Image r = b.reconstruct(x, 0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(r.pixels()[i] - x.pixels()[i]) <= 1e-6);
  CHECK((b.encode(x) - z).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("noisy reconstruction is reproducible per call seed") {
  LinearAEBackend b = train_linear_backend(random_corpus(40, 8, 8, 9), 6, 0.1, 77);
  CHECK_FALSE(b.deterministic());
  std::mt19937_64 rng(10);
  Image x = test::random_image(8, 8, 1, rng);
  CHECK(b.reconstruct(x, 5) == b.reconstruct(x, 5));
  CHECK_FALSE(b.reconstruct(x, 5) == b.reconstruct(x, 6));
  CHECK(b.with_noise(0.1).reconstruct(x, 5) == b.reconstruct(x, 5));
  LinearAEBackend other_seed(b.dims(), b.mean(), b.basis(), b.latent_variance(), 0.1, 78);
  CHECK_FALSE(b.reconstruct(x, 5) == other_seed.reconstruct(x, 5));
  CHECK_THROWS_AS(b.reconstruct(Image(4, 4, 1), 0), Error);
}

TEST_CASE("default noise is a fixed fraction of the latent spread") {
  LinearAEBackend b = train_linear_backend(random_corpus(40, 8, 8, 11), 6, std::nullopt, 0);
  CHECK(b.noise_sigma() == doctest::Approx(kDefaultRelativeNoise * b.mean_latent_std()));
}

TEST_CASE("belonging images have comparable first and second losses") {
  TextureFamily fam{"t", 4.0, 8.0, 0.5, 0.12};
  Corpus train = texture_corpus(fam, 120, 32, 32, 1, "train");
  LinearAEBackend b = train_linear_backend(images_of(train), 16, std::nullopt, 5);
  Corpus syn = synthesize_corpus(b, 200, 2);
  double l1 = 0, l2 = 0;
  for (std::size_t i = 0; i < syn.size(); ++i) {
    Image x1 = b.reconstruct(syn[i].image, 2 * i);
    Image x2 = b.reconstruct(x1, 2 * i + 1);
    l1 += loss(LossMetric::Mse, x1, syn[i].image);
    l2 += loss(LossMetric::Mse, x2, x1);
  }
  double r = l1 / l2;
  CHECK(r >= 0.8);
  CHECK(r <= 1.25);
}

TEST_CASE("out-of-span images lose much more on the first pass") {
  TextureFamily fam{"t", 4.0, 8.0, 0.5, 0.12};
  TextureFamily other{"o", 4.0, 3.0, 0.5, 0.12};
  LinearAEBackend b =
      train_linear_backend(images_of(texture_corpus(fam, 120, 32, 32, 1, "a")), 16, std::nullopt, 5);
  Corpus foreign = texture_corpus(other, 200, 32, 32, 3, "b");
  const double p = 32.0 * 32.0;
  const double noise_floor = b.noise_sigma() * b.noise_sigma() * b.latent_dim() / p;
  double l1 = 0, l2 = 0;
  for (std::size_t i = 0; i < foreign.size(); ++i) {
    const Image& x = foreign[i].image;
    Eigen::VectorXd c = as_vector(x) - b.mean();
    Eigen::VectorXd out = c - b.basis().transpose() * (b.basis() * c);
    REQUIRE(out.squaredNorm() / p > 10.0 * noise_floor);
    Image x1 = b.reconstruct(x, 2 * i);
    Image x2 = b.reconstruct(x1, 2 * i + 1);
    l1 += loss(LossMetric::Mse, x1, x);
    l2 += loss(LossMetric::Mse, x2, x1);
  }
  CHECK(l1 > 2.0 * l2);
}

TEST_CASE("backend json round trip") {
  LinearAEBackend b = train_linear_backend(random_corpus(20, 6, 4, 12), 3, 0.02, 99);
  b.set_name("demo");
  test::TempDir dir("backend");
  save_backend(b, dir / "b.json");
  LinearAEBackend back = load_linear_backend(dir / "b.json");
  CHECK(back.id() == "demo");
  CHECK(back.dims() == b.dims());
  CHECK(back.mean() == b.mean());
  CHECK(back.basis() == b.basis());
  CHECK(back.latent_variance() == b.latent_variance());
  CHECK(back.noise_sigma() == b.noise_sigma());
  CHECK(back.seed() == b.seed());
  std::mt19937_64 rng(1);
  Image x = test::random_image(6, 4, 1, rng);
  CHECK(back.reconstruct(x, 4) == b.reconstruct(x, 4));

  auto generic = load_backend(dir / "b.json");
  CHECK(generic->reconstruct(x, 4) == b.reconstruct(x, 4));

  auto doc = backend_to_json(b);
  doc["basis"][0][0] = 5.0;
  CHECK_THROWS_AS(linear_backend_from_json(doc), Error);
}
