#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ideotrack/error.hpp"
#include "ideotrack/reduce.hpp"
#include "oracles.hpp"

using namespace ideotrack;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

TEST_CASE("PCA on a line") {
  MatrixXd x(5, 2);
  for (int i = 0; i < 5; ++i) x.row(i) << i - 2.0, 2.0 * (i - 2.0);
  const auto p = fit_pca(x, 2);
  CHECK(p.basis(0, 0) == doctest::Approx(1 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(p.basis(1, 0) == doctest::Approx(2 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(std::abs(p.eigenvalues[1]) < 1e-12);
  CHECK(p.rank_deficient);
}

TEST_CASE("PCA of identical points") {
  const MatrixXd x = MatrixXd::Ones(4, 3);
  const auto p = fit_pca(x, 2);
  CHECK(p.eigenvalues.isZero(1e-15));
  CHECK(p.rank_deficient);
}

TEST_CASE("PCA preconditions") {
  std::mt19937_64 rng(1);
  const MatrixXd x = random_matrix(rng, 5, 3);
  CHECK_THROWS_AS(fit_pca(x, 4), Error);
  CHECK_THROWS_AS(fit_pca(x, 0), Error);
  CHECK_THROWS_AS(fit_pca(MatrixXd(x.topRows(1)), 1), Error);
  const auto p = fit_pca(x, 2);
  CHECK_THROWS_AS(project(p, VectorXd::Zero(4)), Error);
}

TEST_CASE("PCA matches the Jacobi oracle on random matrices") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd x = random_matrix(rng, 10, 6);
    const auto p = fit_pca(x, 6);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(x));
    for (Eigen::Index j = 0; j < 6; ++j) {
      CHECK(std::abs(p.eigenvalues[j] - values[j]) < 1e-8);
      const double sign = p.basis.col(j).dot(vectors.col(j)) < 0 ? -1.0 : 1.0;
      CHECK((p.basis.col(j) - sign * vectors.col(j)).cwiseAbs().maxCoeff() < 1e-8);
    }
    // Orthonormal basis, sign convention and the variance bound.
    CHECK((p.basis.transpose() * p.basis - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index j = 0; j < 6; ++j) {
      Eigen::Index arg;
      p.basis.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(p.basis(arg, j) > 0);
    }
    CHECK(p.eigenvalues.sum() == doctest::Approx(oracle::covariance(x).trace()).epsilon(1e-10));
    const auto p3 = fit_pca(x, 3);
    CHECK(p3.eigenvalues.sum() <= oracle::covariance(x).trace() + 1e-8);
  }
}

TEST_CASE("projection identities") {
  std::mt19937_64 rng(3);
  const MatrixXd x = random_matrix(rng, 12, 4);
  const auto p = fit_pca(x, 4);
  CHECK(project(p, p.mean).isZero(1e-12));
  const VectorXd a = random_matrix(rng, 4, 1);
  const VectorXd b = random_matrix(rng, 4, 1);
  const double t = 0.3;
  CHECK((project(p, VectorXd(t * a + (1 - t) * b)) - (t * project(p, a) + (1 - t) * project(p, b))).norm() < 1e-10);
  // Full rank: reconstruct then project is the identity.
  const VectorXd coords = random_matrix(rng, 4, 1);
  CHECK((project(p, reconstruct(p, coords)) - coords).norm() < 1e-8);
  CHECK((project_rows(p, x).row(3).transpose() - project(p, VectorXd(x.row(3).transpose()))).norm() < 1e-12);

  // Identity basis on centred data.
  Projection<double> id;
  id.mean = VectorXd::Zero(4);
  id.basis = MatrixXd::Identity(4, 4);
  CHECK(project(id, a) == a);
}

TEST_CASE("templated on the scalar type") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXf x = random_matrix(rng, 8, 3).cast<float>();
  const auto p = fit_pca(x, 2);
  static_assert(std::is_same_v<decltype(p), const Projection<float>>);
  CHECK(project(p, p.mean).isZero(1e-5f));
}

TEST_CASE("LDA finds the Fisher direction") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  MatrixXd x(200, 3);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    x.row(i) << normal(rng) + (i % 2 ? 4.0 : 0.0), normal(rng), normal(rng);
  }
  const auto lda = fit_lda(x, y, 1);
  CHECK(lda.kind == ProjectionKind::lda);
  // Analytic direction Sw^-1 (mu1 - mu0) from the same sample.
  VectorXd mu0 = VectorXd::Zero(3), mu1 = VectorXd::Zero(3);
  for (int i = 0; i < 200; ++i) (i % 2 ? mu1 : mu0) += x.row(i).transpose() / 100.0;
  MatrixXd sw = MatrixXd::Zero(3, 3);
  for (int i = 0; i < 200; ++i) {
    const VectorXd d = x.row(i).transpose() - (i % 2 ? mu1 : mu0);
    sw += d * d.transpose();
  }
  const VectorXd fisher = sw.ldlt().solve(mu1 - mu0).normalized();
  const VectorXd got = lda.basis.col(0).normalized();
  CHECK(std::abs(std::abs(got.dot(fisher)) - 1.0) < 1e-6);
  CHECK(std::abs(got[0]) > 0.95);
}

TEST_CASE("LDA dimensions and errors") {
  std::mt19937_64 rng(6);
  const MatrixXd x = random_matrix(rng, 30, 5);
  std::vector<int> y(30);
  for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = i % 3;
  CHECK(fit_lda(x, y, 2).output_dim() == 2);
  CHECK_THROWS_AS(fit_lda(x, y, 3), Error);
  const std::vector<int> same(30, 1);
  try {
    fit_lda(x, same, 1);
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::single_class);
  }
}

TEST_CASE("LDA solves the generalised eigenproblem") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd x = random_matrix(rng, 40, 4);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) {
      y[static_cast<std::size_t>(i)] = i % 3;
      x(i, i % 3) += 2.0;
    }
    const auto lda = fit_lda(x, y, 2);
    // Rebuild the scatter matrices here and check S_b v = lambda S_w v.
    VectorXd mean = x.colwise().mean().transpose();
    MatrixXd sw = MatrixXd::Zero(4, 4), sb = MatrixXd::Zero(4, 4);
    for (int c = 0; c < 3; ++c) {
      VectorXd mc = VectorXd::Zero(4);
      int count = 0;
      for (int i = 0; i < 40; ++i) {
        if (y[static_cast<std::size_t>(i)] == c) {
          mc += x.row(i).transpose();
          ++count;
        }
      }
      mc /= count;
      for (int i = 0; i < 40; ++i) {
        if (y[static_cast<std::size_t>(i)] == c) sw += (x.row(i).transpose() - mc) * (x.row(i).transpose() - mc).transpose();
      }
      sb += (double(count) / 40.0) * (mc - mean) * (mc - mean).transpose();
    }
    sw /= (40 - 3);
    sw.diagonal().array() += 1e-6 * sw.trace() / 4;
    for (Eigen::Index j = 0; j < 2; ++j) {
      const VectorXd v = lda.basis.col(j);
      CHECK((sb * v - lda.eigenvalues[j] * sw * v).norm() < 1e-8);
      CHECK(v.dot(sw * v) == doctest::Approx(1.0).epsilon(1e-8));
    }
    // Eigenvalues agree with the Jacobi oracle on L^-1 S_b L^-T.
    const MatrixXd l = sw.llt().matrixL();
    const MatrixXd li = l.inverse();
    const auto [values, vectors] = oracle::jacobi_eigen(li * sb * li.transpose());
    CHECK(std::abs(values[0] - lda.eigenvalues[0]) < 1e-8);
    CHECK(std::abs(values[1] - lda.eigenvalues[1]) < 1e-8);
    CHECK(lda.eigenvalues[0] >= lda.eigenvalues[1]);
  }
}

TEST_CASE("LDA separates better than a random projection") {
  const auto ratio = [](const MatrixXd& z, const std::vector<int>& y) {
    VectorXd mean = z.colwise().mean().transpose();
    double between = 0, within = 0;
    for (int c = 0; c < 3; ++c) {
      VectorXd mc = VectorXd::Zero(z.cols());
      int n = 0;
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        if (y[static_cast<std::size_t>(i)] == c) {
          mc += z.row(i).transpose();
          ++n;
        }
      }
      mc /= n;
      between += n * (mc - mean).squaredNorm();
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        if (y[static_cast<std::size_t>(i)] == c) within += (z.row(i).transpose() - mc).squaredNorm();
      }
    }
    return between / within;
  };
  int wins = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(100 + seed));
    MatrixXd x = random_matrix(rng, 90, 8);
    std::vector<int> y(90);
    for (int i = 0; i < 90; ++i) {
      y[static_cast<std::size_t>(i)] = i % 3;
      x(i, i % 3) += 4.0;
    }
    const auto lda = fit_lda(x, y, 2);
    const MatrixXd random = random_matrix(rng, 8, 2);
    const MatrixXd centred = x.rowwise() - x.colwise().mean();
    if (ratio(project_rows(lda, x), y) > ratio(centred * random, y)) ++wins;
  }
  CHECK(wins == 20);
}

TEST_CASE("projection JSON round trip") {
  std::mt19937_64 rng(9);
  const MatrixXd x = random_matrix(rng, 10, 4);
  const auto p = fit_pca(x, 3);
  const auto back = projection_from_json<double>(nlohmann::json::parse(to_json(p).dump()));
  CHECK(back.kind == p.kind);
  CHECK(back.basis == p.basis);
  CHECK(back.mean == p.mean);
  CHECK(back.eigenvalues == p.eigenvalues);
  nlohmann::json broken = to_json(p);
  broken["output_dim"] = 5;
  CHECK_THROWS_AS(projection_from_json<double>(broken), Error);
}
