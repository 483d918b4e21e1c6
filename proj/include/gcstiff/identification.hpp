#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcstiff/compensator.hpp"
#include "gcstiff/elastostatics.hpp"
#include "gcstiff/kinematics.hpp"

namespace gcstiff {

/// One calibration measurement: joint angles, applied wrench (world frame)
/// and measured translational deflection of the end-effector point.
struct CalibrationSample {
  Eigen::VectorXd q;
  Wrenchd force;
  Eigen::Vector3d measured_dp = Eigen::Vector3d::Zero();
};

/// Parameter layout: k1..kn (rad/(N*m)), kc (m/N), s0, L, ax, ay (m).
/// The compensator enters as its compliance kc = 1 / K_c.
struct ParameterLayout {
  Eigen::Index dof = 6;

  Eigen::Index size() const { return dof + 5; }
  Eigen::Index kc() const { return dof; }
  Eigen::Index s0() const { return dof + 1; }
  Eigen::Index L() const { return dof + 2; }
  Eigen::Index ax() const { return dof + 3; }
  Eigen::Index ay() const { return dof + 4; }

  std::string name(Eigen::Index i) const;
  /// Units used by the text report.
  std::string reportUnit(Eigen::Index i) const;
  /// Parameters estimated in log space (must stay positive).
  bool isPositive(Eigen::Index i) const { return i < dof + 3; }
};

/// Packs a model's compliances and one compensator into a parameter vector.
Eigen::VectorXd packParameters(const RobotModeld& model, const CompensatorParamsd& comp);

/// Rebuilds the model and compensator from a parameter vector. The joint
/// geometry of `geometry` and `joint_index` are kept.
RobotModeld unpackModel(const RobotModeld& geometry, const Eigen::VectorXd& values);
CompensatorParamsd unpackCompensator(const Eigen::VectorXd& values, Eigen::Index dof, int joint_index);

struct ParameterEstimate {
  ParameterLayout layout;
  Eigen::VectorXd values;
  /// 95% confidence half-widths, same units as values.
  Eigen::VectorXd ci95;
  Eigen::MatrixXd covariance;
  /// CI half-width above 10x the magnitude of the estimate.
  std::vector<bool> unidentifiable;
  /// Held at the initial guess; zero CI and covariance.
  std::vector<bool> fixed;
  double residual_rms = 0.0;
  int iterations = 0;
  int sample_count = 0;
};

struct SimulationResult {
  std::vector<CalibrationSample> samples;
  /// Indices into the input poses skipped as singular.
  std::vector<std::size_t> excluded;
};

/// Synthetic calibration: model deflections of (poses[i], forces[i]) plus
/// i.i.d. N(0, noise_sigma^2) per axis, reproducible from `seed`.
SimulationResult simulateCalibration(const RobotModeld& model, const std::vector<CompensatorParamsd>& comps_true,
                                     const std::vector<Eigen::VectorXd>& poses, const std::vector<Wrenchd>& forces,
                                     double noise_sigma, std::uint64_t seed);

/// Random joint postures inside +/- `spread` rad of `center` and random
/// wrenches (force magnitude in [force_min, force_max] N, moments up to
/// `moment_max` N*m per axis), for building calibration experiments.
struct ExcitationPlan {
  std::vector<Eigen::VectorXd> poses;
  std::vector<Wrenchd> forces;
};
ExcitationPlan randomExcitation(const Eigen::VectorXd& center, const Eigen::VectorXd& spread, std::size_t count,
                                double force_min, double force_max, double moment_max, std::uint64_t seed);

struct IdentificationOptions {
  int max_iterations = 500;
  double relative_step = 1e-6;
  /// Largest admissible condition number of the column-scaled normal matrix.
  double max_condition = 1e12;
  /// Parameter indices held at their initial-guess values.
  std::vector<Eigen::Index> fixed;
};

/// Index of the parameter called `name` (k1..kn, kc, s0, L, ax, ay).
/// Throws InvalidConfigurationError for an unknown name.
Eigen::Index parameterIndex(const ParameterLayout& layout, const std::string& name);

/// Nonlinear least-squares fit of the n + 5 parameters that are not fixed.
/// Deflections depend on the compensator only through its joint stiffness,
/// which is unchanged when s0, L, ax, ay scale by c and kc by c^2, so one of
/// them has to be fixed for the rest to be identifiable. Throws
/// UnidentifiableError when the data cannot determine the set and
/// NonConvergenceError when the iteration budget runs out.
ParameterEstimate identify(const RobotModeld& geometry, int compensator_joint,
                           const std::vector<CalibrationSample>& samples, const Eigen::VectorXd& initial_guess,
                           const IdentificationOptions& options = {});

/// Translational deflections predicted by a parameter vector, stacked 3 per
/// sample.
Eigen::VectorXd predictDeflections(const RobotModeld& geometry, int compensator_joint,
                                   const std::vector<CalibrationSample>& samples, const Eigen::VectorXd& values);

/// CSV with columns q1..qn, Fx, Fy, Fz, Mx, My, Mz, dx, dy, dz (q in rad,
/// forces in N and N*m, deflections in mm).
void writeSamplesCsv(std::ostream& out, const std::vector<CalibrationSample>& samples, Eigen::Index dof);
std::vector<CalibrationSample> readSamplesCsv(std::istream& in, Eigen::Index dof);

/// Text report laid out as parameter, unit, value, CI.
void writeEstimateReport(std::ostream& out, const ParameterEstimate& estimate);

}  // namespace gcstiff
