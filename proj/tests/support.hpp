#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gcstiff/compensator.hpp"
#include "gcstiff/elastostatics.hpp"
#include "gcstiff/kinematics.hpp"
#include "gcstiff/workspace.hpp"

namespace gcstiff::test {

inline constexpr double kPi = std::numbers::pi;

inline Eigen::VectorXd identifiedCompliances() {
  Eigen::VectorXd k(6);
  k << 3.774e-6, 0.302e-6, 0.406e-6, 3.002e-6, 3.303e-6, 2.365e-6;
  return k;
}

/// Same chain as configs/kr270_standin.cfg.
inline RobotModeld standInModel(const Eigen::VectorXd& compliances = identifiedCompliances()) {
  std::vector<JointDescriptord> joints = {
      {{0.0, 0.0, 0.0}, Eigen::Vector3d::UnitZ()},     {{0.35, 0.0, 0.675}, Eigen::Vector3d::UnitY()},
      {{1.15, 0.0, 0.0}, Eigen::Vector3d::UnitY()},    {{0.6, 0.0, -0.041}, Eigen::Vector3d::UnitX()},
      {{0.6, 0.0, 0.0}, Eigen::Vector3d::UnitY()},     {{0.0, 0.0, 0.0}, Eigen::Vector3d::UnitX()},
  };
  return RobotModeld(joints, Eigen::Vector3d(0.315, 0.0, -0.12), compliances);
}

inline CompensatorParamsd identifiedCompensator(double stiffness = 1.0 / 0.144e-6) {
  return CompensatorParamsd(stiffness, 0.458, 0.18472, 0.68593, 0.12030, 2);
}

inline Eigen::VectorXd standInHome() {
  Eigen::VectorXd home(6);
  home << 90, -17, 46, 0, 61, 0;
  return home * kPi / 180.0;
}

inline WorkspaceGrid standInGrid(int n = 21) {
  WorkspaceGrid g;
  g.origin = Eigen::Vector3d(-1.0, 0.45, 0.5);
  g.width = 2.0;
  g.height = 2.0;
  g.nu = n;
  g.nv = n;
  g.tool_orientation = Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  return g;
}

inline Wrenchd machiningWrench() { return Wrenchd{{0.0, 360.0, 560.0}, {0.0, 0.0, 0.0}}; }

inline Eigen::Vector3d randomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

inline Eigen::VectorXd randomAngles(std::mt19937_64& rng, Eigen::Index n, double spread = kPi) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = u(rng);
  return q;
}

/// Random chain: offsets in a 1 m box, random unit axes, compliances
/// between 0.2e-6 and 5e-6 rad/(N*m).
inline RobotModeld randomModel(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> box(-0.5, 0.5);
  std::uniform_real_distribution<double> k(0.2e-6, 5e-6);
  std::vector<JointDescriptord> joints;
  Eigen::VectorXd compliances(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    joints.push_back({Eigen::Vector3d(box(rng), box(rng), box(rng)), randomUnit(rng)});
    compliances(i) = k(rng);
  }
  return RobotModeld(joints, Eigen::Vector3d(box(rng), box(rng), box(rng)), compliances);
}

/// Central finite differences of forward kinematics: translation columns
/// from positions, rotation columns from log(R+ R-^T).
inline Eigen::MatrixXd finiteDifferenceJacobian(const RobotModeld& model, const Eigen::VectorXd& q, double h) {
  Eigen::MatrixXd jac(6, model.dof());
  for (Eigen::Index i = 0; i < model.dof(); ++i) {
    Eigen::VectorXd qp = q, qm = q;
    qp(i) += h;
    qm(i) -= h;
    const Posed plus = forwardKinematics(model, qp);
    const Posed minus = forwardKinematics(model, qm);
    jac.block<3, 1>(0, i) = (plus.position - minus.position) / (2 * h);
    jac.block<3, 1>(3, i) = rotationLog(plus.orientation * minus.orientation.transpose()) / (2 * h);
  }
  return jac;
}

inline double relativeError(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace gcstiff::test
