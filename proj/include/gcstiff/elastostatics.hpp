#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "gcstiff/compensator.hpp"
#include "gcstiff/errors.hpp"
#include "gcstiff/kinematics.hpp"

namespace gcstiff {

/// Largest admissible cond(J_theta) for stiffness and deflection evaluation.
inline constexpr double kMaxJacobianCondition = 1e8;

/// Diagonal joint stiffness matrix K_theta (N*m/rad). Entries of
/// compensated joints may be non-positive.
template <typename Scalar>
struct JointStiffnessMatrix {
  VectorX<Scalar> diag;

  MatrixX<Scalar> asMatrix() const { return diag.asDiagonal(); }
  bool allPositive() const { return (diag.array() > Scalar(0)).all(); }
};

template <typename Scalar>
struct Wrench {
  Vector3<Scalar> force = Vector3<Scalar>::Zero();
  Vector3<Scalar> moment = Vector3<Scalar>::Zero();

  static Wrench fromVector(const Vector6<Scalar>& v) {
    return Wrench{v.template head<3>(), v.template tail<3>()};
  }

  Vector6<Scalar> vector() const {
    Vector6<Scalar> v;
    v << force, moment;
    return v;
  }

  /// Re-express a wrench given in a frame with orientation `rotation`
  /// (same reference point) in the world frame.
  Wrench rotated(const Matrix3<Scalar>& rotation) const {
    return Wrench{rotation * force, rotation * moment};
  }
};

template <typename Scalar>
struct CartesianStiffness {
  Matrix6<Scalar> matrix = Matrix6<Scalar>::Zero();
  /// False when some joint stiffness is non-positive and K_C lost definiteness.
  bool positive_definite = true;
  /// cond(J_theta) at the evaluated configuration.
  Scalar jacobian_condition = Scalar(1);
  /// ||K - K^T|| / ||K|| before symmetrization.
  Scalar asymmetry = Scalar(0);
};

/// Small end-effector displacement: translation (m) and rotation vector (rad).
template <typename Scalar>
struct Deflection {
  Vector3<Scalar> d_position = Vector3<Scalar>::Zero();
  Vector3<Scalar> d_orientation = Vector3<Scalar>::Zero();

  Scalar magnitude() const { return d_position.norm(); }

  Vector6<Scalar> vector() const {
    Vector6<Scalar> v;
    v << d_position, d_orientation;
    return v;
  }
};

/// K_theta = K_theta^0 + K_theta^GC(q). Classical part is 1/k_i; each
/// compensator adds its equivalent stiffness on the joint it spans.
template <typename Scalar>
JointStiffnessMatrix<Scalar> jointStiffness(const RobotModel<Scalar>& model,
                                            const std::vector<CompensatorParams<Scalar>>& comps,
                                            const VectorX<Scalar>& q) {
  if (q.size() != model.dof()) {
    throw InvalidModelError("joint vector has size " + std::to_string(q.size()) + ", model has " +
                            std::to_string(model.dof()) + " joints");
  }
  JointStiffnessMatrix<Scalar> K{model.compliances().cwiseInverse()};
  std::set<int> seen;
  for (const auto& comp : comps) {
    const int j = comp.jointIndex();
    if (j < 1 || j > model.dof()) {
      throw InvalidConfigurationError("compensator joint index " + std::to_string(j) +
                                      " outside 1.." + std::to_string(model.dof()));
    }
    if (!seen.insert(j).second) {
      throw InvalidConfigurationError("more than one compensator on joint " + std::to_string(j));
    }
    K.diag(j - 1) += jointStiffnessContribution(comp, q(j - 1));
  }
  return K;
}

/// cond(J) from singular values, over min(6, n) of them.
template <typename Derived>
typename Derived::Scalar jacobianCondition(const Eigen::MatrixBase<Derived>& jac) {
  using Scalar = typename Derived::Scalar;
  const Eigen::JacobiSVD<MatrixX<Scalar>> svd(jac);
  const auto& sv = svd.singularValues();
  const Scalar smin = sv(sv.size() - 1);
  if (!(smin > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return sv(0) / smin;
}

namespace detail {

template <typename Scalar>
Scalar guardConditioning(const Jacobian<Scalar>& jac) {
  const Scalar cond = jacobianCondition(jac);
  if (!(cond < Scalar(kMaxJacobianCondition))) {
    throw SingularConfigurationError(
        "near-singular configuration, cond(J_theta) = " + std::to_string(static_cast<double>(cond)),
        static_cast<double>(cond));
  }
  return cond;
}

template <typename Scalar>
void checkStiffness(const JointStiffnessMatrix<Scalar>& K, Eigen::Index dof) {
  if (K.diag.size() != dof) {
    throw InvalidModelError("joint stiffness has " + std::to_string(K.diag.size()) +
                            " entries, model has " + std::to_string(dof) + " joints");
  }
  if ((K.diag.array() == Scalar(0)).any()) {
    throw InvalidModelError("joint stiffness matrix has a zero diagonal entry");
  }
}

}  // namespace detail

/// Cartesian compliance J K^-1 J^T (6 x 6) for a given Jacobian. Defined
/// for any number of joints.
template <typename Scalar>
Matrix6<Scalar> cartesianCompliance(const Jacobian<Scalar>& jac, const JointStiffnessMatrix<Scalar>& K) {
  const MatrixX<Scalar> scaled = jac * K.diag.cwiseInverse().asDiagonal();
  return scaled * jac.transpose();
}

template <typename Scalar>
Matrix6<Scalar> cartesianCompliance(const RobotModel<Scalar>& model, const JointStiffnessMatrix<Scalar>& K,
                                    const Configuration<Scalar>& cfg) {
  detail::checkStiffness(K, model.dof());
  detail::checkDimensions(model, cfg);
  return cartesianCompliance(jacobianTheta(model, Configuration<Scalar>(cfg.q)), K);
}

/// K_C = (J K^-1 J^T)^-1 from an LU solve, symmetrized. The model
/// overloads linearize at theta = 0.
template <typename Scalar>
CartesianStiffness<Scalar> cartesianStiffness(const Jacobian<Scalar>& jac,
                                              const JointStiffnessMatrix<Scalar>& K) {
  detail::checkStiffness(K, jac.cols());
  if (jac.cols() < 6) {
    throw UnderActuatedError("Cartesian stiffness needs at least 6 joints, model has " +
                             std::to_string(jac.cols()));
  }
  CartesianStiffness<Scalar> out;
  out.jacobian_condition = detail::guardConditioning(jac);

  const Matrix6<Scalar> compliance = cartesianCompliance(jac, K);
  const Matrix6<Scalar> raw = compliance.partialPivLu().solve(Matrix6<Scalar>::Identity());
  out.asymmetry = (raw - raw.transpose()).norm() / raw.norm();
  out.matrix = (raw + raw.transpose()) / Scalar(2);
  out.positive_definite = out.matrix.llt().info() == Eigen::Success;
  return out;
}

template <typename Scalar>
CartesianStiffness<Scalar> cartesianStiffness(const RobotModel<Scalar>& model,
                                              const JointStiffnessMatrix<Scalar>& K,
                                              const Configuration<Scalar>& cfg) {
  detail::checkStiffness(K, model.dof());
  detail::checkDimensions(model, cfg);
  return cartesianStiffness(jacobianTheta(model, Configuration<Scalar>(cfg.q)), K);
}

/// First-order deflection J K^-1 J^T F at theta = 0.
template <typename Scalar>
Deflection<Scalar> deflectionUnderLoad(const Jacobian<Scalar>& jac, const JointStiffnessMatrix<Scalar>& K,
                                       const Wrench<Scalar>& F) {
  detail::checkStiffness(K, jac.cols());
  detail::guardConditioning(jac);
  const VectorX<Scalar> joint_torque = jac.transpose() * F.vector();
  const VectorX<Scalar> theta = joint_torque.cwiseQuotient(K.diag);
  const Vector6<Scalar> dt = jac * theta;
  return Deflection<Scalar>{dt.template head<3>(), dt.template tail<3>()};
}

template <typename Scalar>
Deflection<Scalar> deflectionUnderLoad(const RobotModel<Scalar>& model, const JointStiffnessMatrix<Scalar>& K,
                                       const Configuration<Scalar>& cfg, const Wrench<Scalar>& F) {
  detail::checkStiffness(K, model.dof());
  detail::checkDimensions(model, cfg);
  return deflectionUnderLoad(jacobianTheta(model, Configuration<Scalar>(cfg.q)), K, F);
}

using Wrenchd = Wrench<double>;
using Deflectiond = Deflection<double>;
using JointStiffnessMatrixd = JointStiffnessMatrix<double>;
using CartesianStiffnessd = CartesianStiffness<double>;

}  // namespace gcstiff
