#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcstiff/compensator.hpp"
#include "gcstiff/elastostatics.hpp"
#include "gcstiff/kinematics.hpp"
#include "gcstiff/workspace.hpp"

namespace gcstiff {

struct WorkspaceSetup {
  WorkspaceGrid grid;
  /// IK seed for the first grid node (rad).
  Eigen::VectorXd home;
};

/// Everything a run needs, in SI units.
struct RunConfig {
  RobotModeld model;
  std::vector<CompensatorParamsd> compensators;
  std::optional<WorkspaceSetup> workspace;
  std::optional<Wrenchd> force;
  WrenchFrame frame = WrenchFrame::World;
};

/// Parses the sectioned key = value format:
///
///   [robot]        jointN.offset = x y z mm|m, jointN.axis = x y z,
///                  tool_offset = x y z mm|m
///   [compliance]   kN = value rad/(N*m)
///   [compensator]  joint = N, kc = value m/N|mm/N (compliance) or N/m|N/mm
///                  (stiffness), s0 / L / ax / ay = value mm|m
///                  (the section may repeat, one per compensated joint)
///   [workspace]    origin = x y z mm|m, u_axis, v_axis = x y z,
///                  size = w h mm|m, resolution = nu nv,
///                  tool_rotvec = x y z deg|rad or tool_orientation = 9 values,
///                  home = q1 .. qn deg|rad
///   [force]        wrench = fx fy fz mx my mz [N], frame = world|tool
///
/// '#' starts a comment. Unknown sections or keys, duplicates, missing keys
/// and bad units raise ParseError with the offending line.
RunConfig parseConfig(std::istream& in);
RunConfig loadConfig(const std::string& path);

/// Writes `config` in the same format with SI units and round-trip precision.
void dumpConfig(std::ostream& out, const RunConfig& config);

}  // namespace gcstiff
