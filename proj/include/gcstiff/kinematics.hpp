#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gcstiff/errors.hpp"

namespace gcstiff {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix6 = Eigen::Matrix<Scalar, 6, 6>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Jacobian = Eigen::Matrix<Scalar, 6, Eigen::Dynamic>;

/// One revolute joint: a fixed translation from the previous joint frame
/// (expressed in that frame) followed by a rotation about `axis`.
template <typename Scalar>
struct JointDescriptor {
  Vector3<Scalar> offset = Vector3<Scalar>::Zero();
  Vector3<Scalar> axis = Vector3<Scalar>::UnitZ();
};

/// Serial chain with one collocated virtual spring per actuated joint.
/// Immutable once constructed; the constructor enforces the invariants.
template <typename Scalar>
class RobotModel {
 public:
  RobotModel(std::vector<JointDescriptor<Scalar>> joints, Vector3<Scalar> tool_offset,
             VectorX<Scalar> joint_compliances)
      : joints_(std::move(joints)),
        tool_offset_(std::move(tool_offset)),
        compliances_(std::move(joint_compliances)) {
    if (joints_.empty()) throw InvalidModelError("robot model needs at least one joint");
    if (static_cast<Eigen::Index>(joints_.size()) != compliances_.size()) {
      throw InvalidModelError("robot model has " + std::to_string(joints_.size()) +
                              " joints but " + std::to_string(compliances_.size()) +
                              " joint compliances");
    }
    for (std::size_t i = 0; i < joints_.size(); ++i) {
      using std::abs;
      if (!(abs(joints_[i].axis.norm() - Scalar(1)) <= Scalar(1e-12))) {
        throw InvalidModelError("axis of joint " + std::to_string(i + 1) + " is not a unit vector");
      }
      if (!joints_[i].offset.allFinite()) {
        throw InvalidModelError("offset of joint " + std::to_string(i + 1) + " is not finite");
      }
      if (!(compliances_(static_cast<Eigen::Index>(i)) > Scalar(0)) ||
          !std::isfinite(static_cast<double>(compliances_(static_cast<Eigen::Index>(i))))) {
        throw InvalidModelError("compliance of joint " + std::to_string(i + 1) +
                                " must be positive and finite");
      }
    }
    if (!tool_offset_.allFinite()) throw InvalidModelError("tool offset is not finite");
  }

  Eigen::Index dof() const { return static_cast<Eigen::Index>(joints_.size()); }
  const std::vector<JointDescriptor<Scalar>>& joints() const { return joints_; }
  const Vector3<Scalar>& toolOffset() const { return tool_offset_; }
  /// k_i in rad/(N*m).
  const VectorX<Scalar>& compliances() const { return compliances_; }

  /// Same geometry, different joint compliances.
  RobotModel withCompliances(VectorX<Scalar> compliances) const {
    return RobotModel(joints_, tool_offset_, std::move(compliances));
  }

 private:
  std::vector<JointDescriptor<Scalar>> joints_;
  Vector3<Scalar> tool_offset_;
  VectorX<Scalar> compliances_;
};

/// Actuated coordinates q and virtual-joint deflections theta.
template <typename Scalar>
struct Configuration {
  VectorX<Scalar> q;
  VectorX<Scalar> theta;

  Configuration() = default;
  explicit Configuration(VectorX<Scalar> q_) : q(std::move(q_)), theta(VectorX<Scalar>::Zero(q.size())) {}
  Configuration(VectorX<Scalar> q_, VectorX<Scalar> theta_) : q(std::move(q_)), theta(std::move(theta_)) {}

  VectorX<Scalar> effective() const { return q + theta; }
};

template <typename Scalar>
struct Pose {
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
  Matrix3<Scalar> orientation = Matrix3<Scalar>::Identity();
};

namespace detail {

template <typename Scalar>
void checkDimensions(const RobotModel<Scalar>& model, const Configuration<Scalar>& cfg) {
  if (cfg.q.size() != model.dof() || cfg.theta.size() != model.dof()) {
    throw InvalidModelError("configuration has q of size " + std::to_string(cfg.q.size()) +
                            " and theta of size " + std::to_string(cfg.theta.size()) +
                            ", model has " + std::to_string(model.dof()) + " joints");
  }
}

/// World-frame joint origins and axes plus the end-effector pose at the
/// given joint angles.
template <typename Scalar>
struct ChainState {
  std::vector<Vector3<Scalar>> origins;
  std::vector<Vector3<Scalar>> axes;
  Pose<Scalar> end_effector;
};

template <typename Scalar>
ChainState<Scalar> propagate(const RobotModel<Scalar>& model, const VectorX<Scalar>& angles) {
  ChainState<Scalar> state;
  state.origins.reserve(model.joints().size());
  state.axes.reserve(model.joints().size());

  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
  for (Eigen::Index i = 0; i < model.dof(); ++i) {
    const auto& joint = model.joints()[static_cast<std::size_t>(i)];
    position += rotation * joint.offset;
    state.origins.push_back(position);
    state.axes.push_back(rotation * joint.axis);
    rotation = rotation * Eigen::AngleAxis<Scalar>(angles(i), joint.axis).toRotationMatrix();
  }
  state.end_effector.position = position + rotation * model.toolOffset();
  state.end_effector.orientation = rotation;
  return state;
}

}  // namespace detail

/// Rotation vector (axis * angle) of a rotation matrix, angle in [0, pi].
template <typename Derived>
Vector3<typename Derived::Scalar> rotationLog(const Eigen::MatrixBase<Derived>& rotation) {
  using Scalar = typename Derived::Scalar;
  const Eigen::AngleAxis<Scalar> aa{Eigen::Quaternion<Scalar>(Matrix3<Scalar>(rotation))};
  return aa.angle() * aa.axis();
}

/// Rotation matrix of a rotation vector.
template <typename Derived>
Matrix3<typename Derived::Scalar> rotationExp(const Eigen::MatrixBase<Derived>& rotvec) {
  using Scalar = typename Derived::Scalar;
  const Scalar angle = rotvec.norm();
  if (angle == Scalar(0)) return Matrix3<Scalar>::Identity();
  return Eigen::AngleAxis<Scalar>(angle, rotvec / angle).toRotationMatrix();
}

/// End-effector pose g(q, theta). Virtual springs sit on the actuated
/// joints, so this is the rigid forward kinematics at q + theta.
template <typename Scalar>
Pose<Scalar> forwardKinematics(const RobotModel<Scalar>& model, const Configuration<Scalar>& cfg) {
  detail::checkDimensions(model, cfg);
  return detail::propagate(model, cfg.effective()).end_effector;
}

template <typename Scalar>
Pose<Scalar> forwardKinematics(const RobotModel<Scalar>& model, const VectorX<Scalar>& q) {
  return forwardKinematics(model, Configuration<Scalar>(q));
}

/// d g / d theta as a 6 x n matrix: rows 0-2 translational velocity of the
/// end-effector point, rows 3-5 world-frame angular velocity.
template <typename Scalar>
Jacobian<Scalar> jacobianTheta(const RobotModel<Scalar>& model, const Configuration<Scalar>& cfg) {
  detail::checkDimensions(model, cfg);
  const auto state = detail::propagate(model, cfg.effective());
  Jacobian<Scalar> jac(6, model.dof());
  for (Eigen::Index i = 0; i < model.dof(); ++i) {
    const auto& axis = state.axes[static_cast<std::size_t>(i)];
    const auto& origin = state.origins[static_cast<std::size_t>(i)];
    jac.template block<3, 1>(0, i) = axis.cross(state.end_effector.position - origin);
    jac.template block<3, 1>(3, i) = axis;
  }
  return jac;
}

template <typename Scalar>
Jacobian<Scalar> jacobianTheta(const RobotModel<Scalar>& model, const VectorX<Scalar>& q) {
  return jacobianTheta(model, Configuration<Scalar>(q));
}

/// Pose error (translation; world-frame rotation vector) taking `current`
/// onto `target`.
template <typename Scalar>
Vector6<Scalar> poseError(const Pose<Scalar>& target, const Pose<Scalar>& current) {
  Vector6<Scalar> err;
  err.template head<3>() = target.position - current.position;
  err.template tail<3>() = rotationLog(target.orientation * current.orientation.transpose());
  return err;
}

struct IkOptions {
  double damping = 1e-3;
  int max_iterations = 200;
  double tolerance = 1e-9;
  /// Joint steps are scaled down to at most this norm (rad).
  double max_step = 0.5;
};

/// Damped least-squares IK from `seed` (its theta is ignored). Throws
/// UnreachableTargetError if either residual is still above tolerance after
/// the iteration budget.
template <typename Scalar>
Configuration<Scalar> inverseKinematics(const RobotModel<Scalar>& model, const Pose<Scalar>& target,
                                        const Configuration<Scalar>& seed,
                                        const IkOptions& options = {}) {
  if (seed.q.size() != model.dof()) {
    throw InvalidModelError("IK seed has " + std::to_string(seed.q.size()) + " joints, model has " +
                            std::to_string(model.dof()));
  }
  const Scalar lambda_sq = Scalar(options.damping * options.damping);
  // Iterate past the acceptance tolerance; the damped step converges linearly.
  const Scalar stop = Scalar(options.tolerance * 1e-3);

  VectorX<Scalar> q = seed.q;
  Vector6<Scalar> err;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    const auto state = detail::propagate(model, q);
    err = poseError(target, state.end_effector);
    if (err.template head<3>().norm() < stop && err.template tail<3>().norm() < stop) break;
    if (iter == options.max_iterations) break;

    Jacobian<Scalar> jac(6, model.dof());
    for (Eigen::Index i = 0; i < model.dof(); ++i) {
      const auto& axis = state.axes[static_cast<std::size_t>(i)];
      jac.template block<3, 1>(0, i) =
          axis.cross(state.end_effector.position - state.origins[static_cast<std::size_t>(i)]);
      jac.template block<3, 1>(3, i) = axis;
    }
    const Matrix6<Scalar> damped = jac * jac.transpose() + lambda_sq * Matrix6<Scalar>::Identity();
    VectorX<Scalar> step = jac.transpose() * damped.ldlt().solve(err);
    const Scalar step_norm = step.norm();
    if (step_norm > Scalar(options.max_step)) step *= Scalar(options.max_step) / step_norm;
    q += step;
  }

  const double pos_res = static_cast<double>(err.template head<3>().norm());
  const double rot_res = static_cast<double>(err.template tail<3>().norm());
  if (!(pos_res < options.tolerance && rot_res < options.tolerance)) {
    throw UnreachableTargetError("inverse kinematics did not converge (position residual " +
                                     std::to_string(pos_res) + " m, orientation residual " +
                                     std::to_string(rot_res) + " rad)",
                                 pos_res, rot_res);
  }
  return Configuration<Scalar>(q);
}

using JointDescriptord = JointDescriptor<double>;
using RobotModeld = RobotModel<double>;
using Configurationd = Configuration<double>;
using Posed = Pose<double>;

}  // namespace gcstiff
