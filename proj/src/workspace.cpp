#include "gcstiff/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "gcstiff/csv.hpp"
#include "gcstiff/errors.hpp"

namespace gcstiff {

namespace {

constexpr double kMm = 1e3;

Wrenchd worldWrench(const Wrenchd& force, const Eigen::Matrix3d& orientation, WrenchFrame frame) {
  return frame == WrenchFrame::Tool ? force.rotated(orientation) : force;
}

bool isUnit(const Eigen::Vector3d& v) { return std::abs(v.norm() - 1.0) <= 1e-12; }

void evaluateNode(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                  const Wrenchd& world_force, MapNode& node) {
  const Configurationd cfg(node.q);
  const auto jac = jacobianTheta(model, cfg);
  const auto K = jointStiffness(model, comps, node.q);
  const auto K0 = jointStiffness(model, {}, node.q);

  NodeDeflection d;
  d.compensated = deflectionUnderLoad(jac, K, world_force);
  d.classical = deflectionUnderLoad(jac, K0, world_force);
  d.magnitude_compensated = d.compensated.magnitude();
  d.magnitude_classical = d.classical.magnitude();
  d.model_difference = (d.compensated.d_position - d.classical.d_position).norm();
  node.deflection = d;
}

}  // namespace

void WorkspaceGrid::validate() const {
  if (nu < 2 || nv < 2) throw InvalidConfigurationError("workspace grid needs at least 2x2 samples");
  if (!(width > 0.0) || !(height > 0.0)) throw InvalidConfigurationError("workspace size must be positive");
  if (!isUnit(u_axis) || !isUnit(v_axis)) {
    throw InvalidConfigurationError("workspace axes must be unit vectors");
  }
  if (std::abs(u_axis.dot(v_axis)) > 1e-12) {
    throw InvalidConfigurationError("workspace axes must be orthogonal");
  }
  if (!origin.allFinite()) throw InvalidConfigurationError("workspace origin is not finite");
  const Eigen::Matrix3d& R = tool_orientation;
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
      std::abs(R.determinant() - 1.0) > 1e-10) {
    throw InvalidConfigurationError("tool orientation is not a rotation matrix");
  }
}

const char* toString(NodeStatus status) {
  switch (status) {
    case NodeStatus::Ok:
      return "ok";
    case NodeStatus::Unreachable:
      return "unreachable";
    case NodeStatus::Singular:
      return "singular";
  }
  return "?";
}

int DeflectionMap::okCount() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const MapNode& n) { return n.status == NodeStatus::Ok; }));
}

DeflectionMap evaluateMap(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                          const WorkspaceGrid& grid, const Wrenchd& force, const Eigen::VectorXd& home,
                          const MapOptions& options) {
  grid.validate();
  if (home.size() != model.dof()) {
    throw InvalidModelError("home posture has " + std::to_string(home.size()) + " joints, model has " +
                            std::to_string(model.dof()));
  }
  if (!force.vector().allFinite()) throw InvalidConfigurationError("wrench is not finite");

  DeflectionMap map;
  map.nu = grid.nu;
  map.nv = grid.nv;
  map.dof = model.dof();
  map.nodes.resize(static_cast<std::size_t>(grid.nu) * static_cast<std::size_t>(grid.nv));

  const Wrenchd world_force = worldWrench(force, grid.tool_orientation, options.frame);
  Eigen::VectorXd row_seed = home;
  for (int iv = 0; iv < grid.nv; ++iv) {
    Eigen::VectorXd seed = row_seed;
    for (int iu = 0; iu < grid.nu; ++iu) {
      MapNode& node = map.nodes[static_cast<std::size_t>(iv * grid.nu + iu)];
      node.iu = iu;
      node.iv = iv;
      node.u = grid.u(iu);
      node.v = grid.v(iv);
      node.position = grid.point(iu, iv);
      try {
        node.q = inverseKinematics(model, grid.pose(iu, iv), Configurationd(seed), options.ik).q;
      } catch (const UnreachableTargetError&) {
        node.status = NodeStatus::Unreachable;
        continue;
      }
      seed = node.q;
      if (iu == 0) row_seed = node.q;
      try {
        evaluateNode(model, comps, world_force, node);
      } catch (const SingularConfigurationError&) {
        node.status = NodeStatus::Singular;
      } catch (const SingularGeometryError&) {
        node.status = NodeStatus::Singular;
      }
    }
  }
  if (map.okCount() == 0) map.warnings.emplace_back("every node is flagged; the deflection map is empty");
  return map;
}

StrategyComparison compareStrategies(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                                     const WorkspaceGrid& grid, const Wrenchd& force,
                                     const Eigen::VectorXd& home, const MapOptions& options) {
  StrategyComparison out{evaluateMap(model, comps, grid, force, home, options), {}};
  double sum = 0.0;
  out.summary.min = std::numeric_limits<double>::infinity();
  out.summary.max = 0.0;
  for (auto& node : out.map.nodes) {
    if (!node.deflection) continue;
    // Commanding target - dp0 on a robot that deflects by dp leaves dp - dp0.
    const double residual = node.deflection->model_difference;
    node.compensation_residual = residual;
    out.summary.min = std::min(out.summary.min, residual);
    out.summary.max = std::max(out.summary.max, residual);
    sum += residual;
    ++out.summary.count;
  }
  if (out.summary.count == 0) {
    out.summary.min = 0.0;
  } else {
    out.summary.mean = sum / out.summary.count;
  }
  return out;
}

CompensationResult compensatePose(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                                  const Posed& target, const Wrenchd& force, const Eigen::VectorXd& seed,
                                  const CompensationOptions& options) {
  CompensationResult result;
  result.command = target;
  Eigen::VectorXd q_seed = seed;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.q = inverseKinematics(model, result.command, Configurationd(q_seed), options.ik).q;
    q_seed = result.q;

    const Configurationd cfg(result.q);
    const Posed reached = forwardKinematics(model, cfg);
    const Wrenchd world_force = worldWrench(force, reached.orientation, options.frame);
    result.deflection = deflectionUnderLoad(jacobianTheta(model, cfg), jointStiffness(model, comps, result.q),
                                            world_force);

    const Eigen::Vector3d loaded_position = reached.position + result.deflection.d_position;
    const Eigen::Matrix3d loaded_orientation = rotationExp(result.deflection.d_orientation) * reached.orientation;
    result.position_residual = (loaded_position - target.position).norm();
    result.orientation_residual = rotationLog(target.orientation * loaded_orientation.transpose()).norm();
    result.iterations = iter;
    if (result.position_residual < options.tolerance && result.orientation_residual < options.tolerance) {
      return result;
    }

    result.command.position = target.position - result.deflection.d_position;
    result.command.orientation = rotationExp(-result.deflection.d_orientation) * target.orientation;
  }
  throw CompensationFailureError("compliance compensation did not converge, residual " +
                                     std::to_string(result.position_residual) + " m",
                                 result.position_residual);
}

void writeMapCsv(std::ostream& out, const DeflectionMap& map) {
  using csv::formatNumber;
  out << "# units: u,v,x,y,z mm; q rad; dx,dy,dz,mag_comp,mag_classical,diff mm\n";
  out << "u,v,x,y,z";
  for (Eigen::Index j = 1; j <= map.dof; ++j) out << ",q" << j;
  out << ",dx,dy,dz,mag_comp,mag_classical,diff,flag\n";
  for (const auto& node : map.nodes) {
    out << formatNumber(node.u * kMm) << ',' << formatNumber(node.v * kMm);
    for (int i = 0; i < 3; ++i) out << ',' << formatNumber(node.position(i) * kMm);
    for (Eigen::Index j = 0; j < map.dof; ++j) {
      out << ',';
      if (node.q.size() == map.dof) out << formatNumber(node.q(j));
    }
    if (node.deflection) {
      const auto& d = *node.deflection;
      for (int i = 0; i < 3; ++i) out << ',' << formatNumber(d.compensated.d_position(i) * kMm);
      out << ',' << formatNumber(d.magnitude_compensated * kMm) << ',' << formatNumber(d.magnitude_classical * kMm)
          << ',' << formatNumber(d.model_difference * kMm);
    } else {
      out << ",,,,,,";
    }
    out << ',' << toString(node.status) << '\n';
  }
}

void writeComparisonCsv(std::ostream& out, const StrategyComparison& comparison) {
  using csv::formatNumber;
  out << "# units: u,v,x,y,z,residual mm\n";
  out << "u,v,x,y,z,residual,flag\n";
  for (const auto& node : comparison.map.nodes) {
    out << formatNumber(node.u * kMm) << ',' << formatNumber(node.v * kMm);
    for (int i = 0; i < 3; ++i) out << ',' << formatNumber(node.position(i) * kMm);
    out << ',';
    if (node.compensation_residual) out << formatNumber(*node.compensation_residual * kMm);
    out << ',' << toString(node.status) << '\n';
  }
}

}  // namespace gcstiff
