#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcstiff/compensator.hpp"
#include "gcstiff/elastostatics.hpp"
#include "gcstiff/kinematics.hpp"

namespace gcstiff {

/// Frame in which the external wrench components are given. Tool-frame
/// wrenches are rotated into the world frame with the node's orientation.
enum class WrenchFrame { World, Tool };

/// Planar rectangular machining area sampled on an nu x nv lattice, with a
/// fixed tool orientation over the whole area.
struct WorkspaceGrid {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  double width = 1.0;
  double height = 1.0;
  int nu = 21;
  int nv = 21;
  Eigen::Matrix3d tool_orientation = Eigen::Matrix3d::Identity();

  /// Throws InvalidConfigurationError when an invariant does not hold.
  void validate() const;

  double u(int iu) const { return width * iu / (nu - 1); }
  double v(int iv) const { return height * iv / (nv - 1); }
  Eigen::Vector3d point(int iu, int iv) const { return origin + u(iu) * u_axis + v(iv) * v_axis; }
  Posed pose(int iu, int iv) const { return Posed{point(iu, iv), tool_orientation}; }
};

enum class NodeStatus { Ok, Unreachable, Singular };

const char* toString(NodeStatus status);

/// Per-node deflections for the compensated (K_theta) and classical
/// (K_theta^0) joint stiffness models.
struct NodeDeflection {
  Deflectiond compensated;
  Deflectiond classical;
  double magnitude_compensated = 0.0;
  double magnitude_classical = 0.0;
  /// ||dp - dp0||
  double model_difference = 0.0;
};

struct MapNode {
  int iu = 0;
  int iv = 0;
  double u = 0.0;
  double v = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  NodeStatus status = NodeStatus::Ok;
  /// Empty when IK failed.
  Eigen::VectorXd q;
  /// Present only when status is Ok.
  std::optional<NodeDeflection> deflection;
  /// Over/under-compensation residual, filled by compareStrategies.
  std::optional<double> compensation_residual;
};

struct DeflectionMap {
  int nu = 0;
  int nv = 0;
  Eigen::Index dof = 0;
  /// Row-major: node (iu, iv) is at index iv * nu + iu.
  std::vector<MapNode> nodes;
  std::vector<std::string> warnings;

  const MapNode& at(int iu, int iv) const { return nodes[static_cast<std::size_t>(iv * nu + iu)]; }
  int okCount() const;
};

struct MapOptions {
  WrenchFrame frame = WrenchFrame::World;
  IkOptions ik;
};

/// Solves IK over the grid and evaluates both stiffness models at every
/// reachable node. The first node of each row is seeded from the first node
/// of the previous row (the home posture for row 0); the remaining nodes of a
/// row are seeded from their left neighbour. Failed nodes are flagged.
DeflectionMap evaluateMap(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                          const WorkspaceGrid& grid, const Wrenchd& force, const Eigen::VectorXd& home,
                          const MapOptions& options = {});

struct ResidualSummary {
  int count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct StrategyComparison {
  DeflectionMap map;
  ResidualSummary summary;
};

/// Residual left at each node when the compliance error is compensated with
/// the classical model while the robot deflects per the compensated model.
StrategyComparison compareStrategies(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                                     const WorkspaceGrid& grid, const Wrenchd& force,
                                     const Eigen::VectorXd& home, const MapOptions& options = {});

struct CompensationOptions {
  int max_iterations = 20;
  /// Converged once the predicted loaded pose is this close to the target
  /// (m for position, rad for orientation).
  double tolerance = 1e-9;
  WrenchFrame frame = WrenchFrame::World;
  IkOptions ik;
};

struct CompensationResult {
  /// Pose to command so the loaded robot lands on the target.
  Posed command;
  Eigen::VectorXd q;
  Deflectiond deflection;
  int iterations = 0;
  double position_residual = 0.0;
  double orientation_residual = 0.0;
};

/// Fixed-point iteration p_cmd <- target - dt(q(p_cmd), F), applied to both
/// position and orientation.
CompensationResult compensatePose(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps,
                                  const Posed& target, const Wrenchd& force, const Eigen::VectorXd& seed,
                                  const CompensationOptions& options = {});

/// Map CSV: u, v, x, y, z, q1..qn, dx, dy, dz, mag_comp, mag_classical,
/// diff, flag. Lengths in mm, angles in rad.
void writeMapCsv(std::ostream& out, const DeflectionMap& map);

/// Comparison CSV: u, v, x, y, z, residual, flag (mm).
void writeComparisonCsv(std::ostream& out, const StrategyComparison& comparison);

}  // namespace gcstiff
