#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <json.hpp>

#include "ideotrack/error.hpp"

namespace ideotrack {

enum class ProjectionKind { pca, lda };

inline std::string to_string(ProjectionKind kind) { return kind == ProjectionKind::pca ? "pca" : "lda"; }

/// Fitted affine map x -> basis^T (x - mean).
///
/// PCA bases are orthonormal; LDA bases are scaled so the pooled
/// within-class covariance projects to the identity. Each column is signed so
/// that its largest-magnitude entry is positive.
template <typename Scalar>
struct Projection {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  ProjectionKind kind = ProjectionKind::pca;
  Vector mean;
  Matrix basis;  // input_dim x output_dim
  Vector eigenvalues;  // non-increasing
  /// Set when a retained eigenvalue is below 1e-12.
  bool rank_deficient = false;

  Eigen::Index input_dim() const { return basis.rows(); }
  Eigen::Index output_dim() const { return basis.cols(); }
};

namespace detail {

template <typename Matrix>
void fix_signs(Matrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0) basis.col(j) *= -1;
  }
}

}  // namespace detail

/// Principal components of the rows of `data` via SVD of the centred matrix.
/// Eigenvalues are those of the sample covariance (divisor n - 1).
template <typename Derived>
Projection<typename Derived::Scalar> fit_pca(const Eigen::MatrixBase<Derived>& data, Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  using P = Projection<Scalar>;
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) throw Error(ErrorKind::too_few_samples, "PCA needs at least 2 rows");
  if (k < 1 || k > std::min(n - 1, d)) {
    throw Error(ErrorKind::invalid_argument, "PCA component count " + std::to_string(k) +
                                                 " outside [1, min(n-1, d)]");
  }

  P out;
  out.kind = ProjectionKind::pca;
  out.mean = data.colwise().mean().transpose();
  typename P::Matrix centred = data.rowwise() - out.mean.transpose();
  Eigen::BDCSVD<typename P::Matrix> svd(centred, Eigen::ComputeThinV);
  out.basis = svd.matrixV().leftCols(k);
  out.eigenvalues = svd.singularValues().head(k).array().square() / Scalar(n - 1);
  detail::fix_signs(out.basis);
  out.rank_deficient = (out.eigenvalues.array() < Scalar(1e-12)).any();
  return out;
}

/// Fisher discriminant directions from the generalised eigenproblem
/// S_b v = lambda (S_w + ridge I) v, with S_w the pooled within-class
/// covariance and ridge = 1e-6 trace(S_w) / d. `labels` are arbitrary ints.
template <typename Derived>
Projection<typename Derived::Scalar> fit_lda(const Eigen::MatrixBase<Derived>& data,
                                             std::span<const int> labels, Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  using P = Projection<Scalar>;
  using Vector = typename P::Vector;
  using Matrix = typename P::Matrix;
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error(ErrorKind::dimension_mismatch, "LDA labels do not match data rows");
  }

  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < n; ++i) groups[labels[static_cast<std::size_t>(i)]].push_back(i);
  const auto classes = static_cast<Eigen::Index>(groups.size());
  if (classes < 2) throw Error(ErrorKind::single_class, "LDA needs at least two distinct labels");
  if (k < 1 || k > classes - 1 || k > d) {
    throw Error(ErrorKind::invalid_argument, "LDA component count " + std::to_string(k) +
                                                 " exceeds classes - 1 = " + std::to_string(classes - 1));
  }

  P out;
  out.kind = ProjectionKind::lda;
  out.mean = data.colwise().mean().transpose();

  Matrix within = Matrix::Zero(d, d);
  Matrix between = Matrix::Zero(d, d);
  for (const auto& [label, rows] : groups) {
    Vector class_mean = Vector::Zero(d);
    for (const auto i : rows) class_mean += data.row(i).transpose();
    class_mean /= Scalar(rows.size());
    for (const auto i : rows) {
      const Vector diff = data.row(i).transpose() - class_mean;
      within.noalias() += diff * diff.transpose();
    }
    const Vector offset = class_mean - out.mean;
    between.noalias() += (Scalar(rows.size()) / Scalar(n)) * offset * offset.transpose();
  }
  within /= Scalar(std::max<Eigen::Index>(n - classes, 1));
  Scalar ridge = Scalar(1e-6) * within.trace() / Scalar(d);
  if (!(ridge > Scalar(0))) ridge = Scalar(1e-12);
  within.diagonal().array() += ridge;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(between, within);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::invalid_argument, "LDA eigenproblem did not converge");
  }
  // Eigenvalues come back ascending.
  out.basis = solver.eigenvectors().rightCols(k).rowwise().reverse();
  out.eigenvalues = solver.eigenvalues().tail(k).reverse();
  detail::fix_signs(out.basis);
  out.rank_deficient = (out.eigenvalues.array() < Scalar(1e-12)).any();
  return out;
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> project(const Projection<Scalar>& p,
                                                 const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != p.input_dim()) {
    throw Error(ErrorKind::dimension_mismatch, "projection expects dimension " +
                                                   std::to_string(p.input_dim()) + ", got " +
                                                   std::to_string(x.size()));
  }
  return p.basis.transpose() * (x.derived().reshaped() - p.mean);
}

/// Projects every row of `data`.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> project_rows(const Projection<Scalar>& p,
                                                                   const Eigen::MatrixBase<Derived>& data) {
  if (data.cols() != p.input_dim()) {
    throw Error(ErrorKind::dimension_mismatch, "projection expects " + std::to_string(p.input_dim()) +
                                                   " columns, got " + std::to_string(data.cols()));
  }
  return (data.rowwise() - p.mean.transpose()) * p.basis;
}

/// Maps low-dimensional coordinates back to input space (PCA only).
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> reconstruct(const Projection<Scalar>& p,
                                                     const Eigen::MatrixBase<Derived>& coords) {
  return p.mean + p.basis * coords.derived().reshaped();
}

template <typename Scalar>
nlohmann::json to_json(const Projection<Scalar>& p) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(p.kind);
  j["input_dim"] = p.input_dim();
  j["output_dim"] = p.output_dim();
  j["mean"] = std::vector<double>(p.mean.data(), p.mean.data() + p.mean.size());
  std::vector<double> basis;
  basis.reserve(static_cast<std::size_t>(p.basis.size()));
  for (Eigen::Index r = 0; r < p.basis.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.basis.cols(); ++c) basis.push_back(static_cast<double>(p.basis(r, c)));
  }
  j["basis"] = basis;
  j["eigenvalues"] = std::vector<double>(p.eigenvalues.data(), p.eigenvalues.data() + p.eigenvalues.size());
  return j;
}

template <typename Scalar = double>
Projection<Scalar> projection_from_json(const nlohmann::json& j) {
  Projection<Scalar> p;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "pca" && kind != "lda") throw Error(ErrorKind::schema, "unknown projection kind " + kind);
    p.kind = kind == "pca" ? ProjectionKind::pca : ProjectionKind::lda;
    const auto d = j.at("input_dim").get<Eigen::Index>();
    const auto k = j.at("output_dim").get<Eigen::Index>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto basis = j.at("basis").get<std::vector<double>>();
    const auto eig = j.at("eigenvalues").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(mean.size()) != d || static_cast<Eigen::Index>(basis.size()) != d * k ||
        static_cast<Eigen::Index>(eig.size()) != k) {
      throw Error(ErrorKind::schema, "projection arrays do not match declared dimensions");
    }
    p.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d).template cast<Scalar>();
    p.basis = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                  basis.data(), d, k)
                  .template cast<Scalar>();
    p.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eig.data(), k).template cast<Scalar>();
    p.rank_deficient = (p.eigenvalues.array() < Scalar(1e-12)).any();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("projection: ") + e.what());
  }
  return p;
}

}  // namespace ideotrack
