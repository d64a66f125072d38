#pragma once

#include <Eigen/Dense>

#include "ideotrack/error.hpp"

namespace ideotrack {

/// State [x1, x1', x2, x2'] with covariance. Velocities are per year.
template <typename Scalar = double>
struct TrackState {
  using Vector = Eigen::Matrix<Scalar, 4, 1>;
  using Matrix = Eigen::Matrix<Scalar, 4, 4>;

  Vector mean = Vector::Zero();
  Matrix covariance = Matrix::Identity();
};

/// Nearly constant velocity dynamics on two independent axes.
template <typename Scalar = double>
struct MotionModel {
  using Matrix = Eigen::Matrix<Scalar, 4, 4>;

  Scalar process_variance = Scalar(0.1);

  Matrix transition(Scalar dt) const {
    Matrix f = Matrix::Identity();
    f(0, 1) = dt;
    f(2, 3) = dt;
    return f;
  }

  Matrix noise(Scalar dt) const {
    Eigen::Matrix<Scalar, 2, 2> block;
    block << dt * dt * dt / Scalar(3), dt * dt / Scalar(2), dt * dt / Scalar(2), dt;
    Matrix q = Matrix::Zero();
    q.template block<2, 2>(0, 0) = process_variance * block;
    q.template block<2, 2>(2, 2) = process_variance * block;
    return q;
  }
};

template <typename Scalar>
TrackState<Scalar> predict(const TrackState<Scalar>& state, Scalar dt, const MotionModel<Scalar>& model) {
  if (dt < Scalar(0)) throw Error(ErrorKind::negative_time_step, "time step must be non-negative");
  const auto f = model.transition(dt);
  TrackState<Scalar> out;
  out.mean = f * state.mean;
  out.covariance = f * state.covariance * f.transpose() + model.noise(dt);
  out.covariance = (out.covariance + out.covariance.transpose()) / Scalar(2);
  return out;
}

/// Measurement matrix picking the two positions out of the state.
template <typename Scalar = double>
Eigen::Matrix<Scalar, 2, 4> position_selector() {
  Eigen::Matrix<Scalar, 2, 4> h = Eigen::Matrix<Scalar, 2, 4>::Zero();
  h(0, 0) = Scalar(1);
  h(1, 2) = Scalar(1);
  return h;
}

/// Kalman update with the Joseph-form covariance.
template <typename Scalar, typename ZDerived, typename RDerived>
TrackState<Scalar> update(const TrackState<Scalar>& state, const Eigen::MatrixBase<ZDerived>& z,
                          const Eigen::MatrixBase<RDerived>& r) {
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
  const auto h = position_selector<Scalar>();
  const Eigen::Matrix<Scalar, 2, 2> s = h * state.covariance * h.transpose() + r;
  const Eigen::LLT<Eigen::Matrix<Scalar, 2, 2>> llt(s);
  if (llt.info() != Eigen::Success || !s.allFinite()) {
    throw Error(ErrorKind::singular_innovation, "innovation covariance is not positive definite");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<Scalar, 4, 2> gain = llt.solve(h * state.covariance).transpose();
  const Matrix4 a = Matrix4::Identity() - gain * h;

  TrackState<Scalar> out;
  out.mean = state.mean + gain * (z - h * state.mean);
  out.covariance = a * state.covariance * a.transpose() + gain * r * gain.transpose();
  out.covariance = (out.covariance + out.covariance.transpose()) / Scalar(2);
  return out;
}

}  // namespace ideotrack
