#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "ideotrack/error.hpp"

namespace ideotrack {

template <typename Scalar, int Dim>
struct Gaussian {
  Eigen::Matrix<Scalar, Dim, 1> mean;
  Eigen::Matrix<Scalar, Dim, Dim> covariance;
};

/// log N(x | g.mean, g.covariance).
template <typename Scalar, int Dim, typename Derived>
Scalar log_density(const Gaussian<Scalar, Dim>& g, const Eigen::MatrixBase<Derived>& x) {
  const Eigen::LLT<Eigen::Matrix<Scalar, Dim, Dim>> llt(g.covariance);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::invalid_argument, "covariance is not positive definite");
  const Eigen::Matrix<Scalar, Dim, 1> d = x - g.mean;
  const Eigen::Matrix<Scalar, Dim, 1> w = llt.matrixL().solve(d);
  const Eigen::Index dim = g.mean.size();
  Scalar log_det = 0;
  for (Eigen::Index i = 0; i < dim; ++i) log_det += std::log(llt.matrixL()(i, i));
  return -Scalar(0.5) * w.squaredNorm() - log_det -
         Scalar(0.5) * static_cast<Scalar>(dim) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

/// Normalised weights from log weights, subtracting the maximum first.
/// Entries equal to -inf get weight zero.
template <typename Scalar>
std::vector<Scalar> normalise_log_weights(std::span<const Scalar> log_weights) {
  Scalar top = -std::numeric_limits<Scalar>::infinity();
  for (const Scalar v : log_weights) top = std::max(top, v);
  if (!std::isfinite(top)) throw Error(ErrorKind::invalid_argument, "mixture has no component with positive weight");
  std::vector<Scalar> w(log_weights.size());
  Scalar total = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(log_weights[k] - top);
    total += w[k];
  }
  for (auto& v : w) v /= total;
  return w;
}

/// Single Gaussian with the first two moments of the mixture. Weights need
/// not be normalised.
template <typename Scalar, int Dim>
Gaussian<Scalar, Dim> moment_match(std::span<const Scalar> weights, std::span<const Gaussian<Scalar, Dim>> components) {
  if (weights.size() != components.size() || components.empty()) {
    throw Error(ErrorKind::dimension_mismatch, "mixture weights and components differ in count");
  }
  Scalar total = 0;
  for (const Scalar w : weights) total += w;
  if (!(total > 0)) throw Error(ErrorKind::invalid_argument, "mixture weights sum to zero");

  const Eigen::Index dim = components.front().mean.size();
  Gaussian<Scalar, Dim> out;
  out.mean = Eigen::Matrix<Scalar, Dim, 1>::Zero(dim);
  for (std::size_t k = 0; k < components.size(); ++k) out.mean += (weights[k] / total) * components[k].mean;
  out.covariance = Eigen::Matrix<Scalar, Dim, Dim>::Zero(dim, dim);
  for (std::size_t k = 0; k < components.size(); ++k) {
    const Eigen::Matrix<Scalar, Dim, 1> d = components[k].mean - out.mean;
    out.covariance += (weights[k] / total) * (components[k].covariance + d * d.transpose());
  }
  out.covariance = (out.covariance + out.covariance.transpose()) / Scalar(2);
  return out;
}

}  // namespace ideotrack
