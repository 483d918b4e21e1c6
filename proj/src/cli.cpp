#include "gcstiff/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <numbers>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "gcstiff/config.hpp"
#include "gcstiff/csv.hpp"
#include "gcstiff/elastostatics.hpp"
#include "gcstiff/errors.hpp"
#include "gcstiff/identification.hpp"
#include "gcstiff/kinematics.hpp"
#include "gcstiff/workspace.hpp"

namespace gcstiff {

namespace {

struct CommonFlags {
  std::string config_path;
  std::string output_path;
  std::string force;
  std::string grid;
  std::string frame;
  std::string dump_path;
  std::optional<std::uint64_t> seed;
  bool no_compensator = false;
};

struct CommandFlags {
  std::string q;
  std::string samples_path;
  std::size_t count = 200;
  double noise_mm = 0.05;
  std::string fix = "L";
};

std::vector<double> parseList(const std::string& text, const std::string& what) {
  std::vector<double> values;
  try {
    for (const auto& f : csv::splitFields(text)) values.push_back(csv::parseDouble(f));
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCategory::Usage, what + ": " + e.what());
  }
  return values;
}

Eigen::VectorXd parseJoints(const std::string& text, Eigen::Index dof) {
  if (text.empty()) throw Error(ErrorCategory::Usage, "--q is required for this command");
  const auto v = parseList(text, "--q");
  if (static_cast<Eigen::Index>(v.size()) != dof) {
    throw Error(ErrorCategory::Usage, "--q needs " + std::to_string(dof) + " joint angles, got " +
                                          std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dof);
}

/// Config after command-line overrides.
RunConfig prepare(const CommonFlags& flags) {
  RunConfig config = loadConfig(flags.config_path);
  if (flags.no_compensator) config.compensators.clear();
  if (!flags.force.empty()) {
    const auto w = parseList(flags.force, "--force");
    if (w.size() != 6) throw Error(ErrorCategory::Usage, "--force needs 6 comma-separated components");
    config.force = Wrenchd::fromVector(Eigen::Map<const Eigen::Matrix<double, 6, 1>>(w.data()));
  }
  if (!flags.frame.empty()) {
    if (flags.frame == "world") {
      config.frame = WrenchFrame::World;
    } else if (flags.frame == "tool") {
      config.frame = WrenchFrame::Tool;
    } else {
      throw Error(ErrorCategory::Usage, "--frame must be 'world' or 'tool'");
    }
  }
  if (!flags.grid.empty()) {
    if (!config.workspace) throw Error(ErrorCategory::Usage, "--grid needs a [workspace] section");
    int nu = 0;
    int nv = 0;
    char tail = 0;
    if (std::sscanf(flags.grid.c_str(), "%dx%d%c", &nu, &nv, &tail) != 2) {
      throw Error(ErrorCategory::Usage, "--grid expects NxM, e.g. 21x21");
    }
    config.workspace->grid.nu = nu;
    config.workspace->grid.nv = nv;
    config.workspace->grid.validate();
  }
  if (!flags.dump_path.empty()) {
    std::ofstream dump(flags.dump_path);
    if (!dump) throw IoError("cannot write '" + flags.dump_path + "'");
    dumpConfig(dump, config);
  }
  return config;
}

const Wrenchd& requireForce(const RunConfig& config) {
  if (!config.force) throw Error(ErrorCategory::Usage, "no wrench: add a [force] section or pass --force");
  return *config.force;
}

const WorkspaceSetup& requireWorkspace(const RunConfig& config) {
  if (!config.workspace) throw Error(ErrorCategory::Usage, "this command needs a [workspace] section");
  return *config.workspace;
}

/// Writes to --output when given, otherwise to `fallback`.
class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw IoError("cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }
  bool toFile() const { return file_ != nullptr; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string fmt(double v) { return csv::formatNumber(v); }

void printVector(std::ostream& out, const Eigen::VectorXd& v, double scale = 1.0) {
  out << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << fmt(v(i) * scale);
  out << ')';
}

void printMatrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << "  ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << fmt(m(r, c));
    out << '\n';
  }
}

Wrenchd worldForce(const RunConfig& config, const Posed& pose) {
  const Wrenchd& f = requireForce(config);
  return config.frame == WrenchFrame::Tool ? f.rotated(pose.orientation) : f;
}

void cmdFk(const RunConfig& config, const CommandFlags& cmd, std::ostream& out) {
  const Eigen::VectorXd q = parseJoints(cmd.q, config.model.dof());
  const Posed pose = forwardKinematics(config.model, q);
  out << "position: ";
  printVector(out, pose.position);
  out << " m\norientation:\n";
  printMatrix(out, pose.orientation);
}

void cmdStiffness(const RunConfig& config, const CommandFlags& cmd, std::ostream& out) {
  const Eigen::VectorXd q = parseJoints(cmd.q, config.model.dof());
  const Configurationd cfg(q);
  const auto report = [&](const char* name, const JointStiffnessMatrixd& K) {
    const auto kc = cartesianStiffness(config.model, K, cfg);
    out << name << " joint stiffness (N*m/rad): ";
    printVector(out, K.diag);
    out << "\n" << name << " Cartesian stiffness (SI):\n";
    printMatrix(out, kc.matrix);
    out << name << " positive definite: " << (kc.positive_definite ? "yes" : "no")
        << ", cond(J_theta): " << fmt(kc.jacobian_condition) << '\n';
  };
  report("compensated", jointStiffness(config.model, config.compensators, q));
  report("classical", jointStiffness(config.model, {}, q));
}

void cmdDeflect(const RunConfig& config, const CommandFlags& cmd, std::ostream& out) {
  const Eigen::VectorXd q = parseJoints(cmd.q, config.model.dof());
  const Configurationd cfg(q);
  const Wrenchd force = worldForce(config, forwardKinematics(config.model, cfg));
  const auto report = [&](const char* name, const JointStiffnessMatrixd& K) {
    const auto d = deflectionUnderLoad(config.model, K, cfg, force);
    out << name << " dp (mm): ";
    printVector(out, d.d_position, 1e3);
    out << "  |dp| = " << fmt(d.magnitude() * 1e3) << " mm  dphi (mrad): ";
    printVector(out, d.d_orientation, 1e3);
    out << '\n';
  };
  report("compensated", jointStiffness(config.model, config.compensators, q));
  report("classical", jointStiffness(config.model, {}, q));
}

void printWarnings(const DeflectionMap& map, std::ostream& err) {
  for (const auto& w : map.warnings) err << "warning: " << w << '\n';
  const int flagged = static_cast<int>(map.nodes.size()) - map.okCount();
  if (flagged > 0) err << "warning: " << flagged << " of " << map.nodes.size() << " nodes flagged\n";
}

void cmdMap(const RunConfig& config, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto& ws = requireWorkspace(config);
  const MapOptions options{config.frame, {}};
  const auto map = evaluateMap(config.model, config.compensators, ws.grid, requireForce(config), ws.home, options);
  OutputSink sink(flags.output_path, out);
  writeMapCsv(sink.stream(), map);
  printWarnings(map, err);
  if (sink.toFile()) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& n : map.nodes) {
      if (!n.deflection) continue;
      const double m = n.deflection->magnitude_compensated;
      lo = first ? m : std::min(lo, m);
      hi = first ? m : std::max(hi, m);
      first = false;
    }
    out << "nodes: " << map.okCount() << " of " << map.nodes.size() << " evaluated\n";
    out << "deflection magnitude (mm): min " << fmt(lo * 1e3) << ", max " << fmt(hi * 1e3) << '\n';
  }
}

void cmdCompare(const RunConfig& config, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto& ws = requireWorkspace(config);
  const MapOptions options{config.frame, {}};
  const auto cmp =
      compareStrategies(config.model, config.compensators, ws.grid, requireForce(config), ws.home, options);
  OutputSink sink(flags.output_path, out);
  writeComparisonCsv(sink.stream(), cmp);
  printWarnings(cmp.map, err);
  std::ostream& summary = sink.toFile() ? out : err;
  summary << "nodes: " << cmp.summary.count << '\n';
  summary << "min difference: " << fmt(cmp.summary.min * 1e3) << " mm\n";
  summary << "max difference: " << fmt(cmp.summary.max * 1e3) << " mm\n";
  summary << "mean difference: " << fmt(cmp.summary.mean * 1e3) << " mm\n";
}

const CompensatorParamsd& singleCompensator(const RunConfig& config) {
  if (config.compensators.size() != 1) {
    throw Error(ErrorCategory::Usage, "identification needs exactly one [compensator] section");
  }
  return config.compensators.front();
}

void cmdSimulate(const RunConfig& config, const CommonFlags& flags, const CommandFlags& cmd, std::ostream& out,
                 std::ostream& err) {
  const Eigen::Index n = config.model.dof();
  const Eigen::VectorXd center = config.workspace ? config.workspace->home : Eigen::VectorXd::Zero(n);
  const std::uint64_t seed = flags.seed.value_or(1);
  const auto plan = randomExcitation(center, Eigen::VectorXd::Constant(n, std::numbers::pi), cmd.count, 500.0, 1500.0, 100.0,
                                     seed);
  const auto sim =
      simulateCalibration(config.model, config.compensators, plan.poses, plan.forces, cmd.noise_mm * 1e-3, seed + 1);
  OutputSink sink(flags.output_path, out);
  writeSamplesCsv(sink.stream(), sim.samples, n);
  if (!sim.excluded.empty()) err << "excluded " << sim.excluded.size() << " singular poses\n";
}

void cmdIdentify(const RunConfig& config, const CommonFlags& flags, const CommandFlags& cmd, std::ostream& out) {
  if (cmd.samples_path.empty()) throw Error(ErrorCategory::Usage, "--samples is required");
  const auto& comp = singleCompensator(config);
  std::ifstream in(cmd.samples_path);
  if (!in) throw IoError("cannot open samples file '" + cmd.samples_path + "'");
  const auto samples = readSamplesCsv(in, config.model.dof());
  IdentificationOptions options;
  const ParameterLayout layout{config.model.dof()};
  if (cmd.fix != "none") {
    try {
      for (const auto& name : csv::splitFields(cmd.fix)) options.fixed.push_back(parameterIndex(layout, name));
    } catch (const InvalidConfigurationError& e) {
      throw Error(ErrorCategory::Usage, std::string("--fix: ") + e.what());
    }
  }
  const auto est = identify(config.model, comp.jointIndex(), samples, packParameters(config.model, comp), options);
  OutputSink sink(flags.output_path, out);
  writeEstimateReport(sink.stream(), est);
}

}  // namespace

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Elastostatic analysis of serial robots with spring gravity compensators", "gcstiff"};
  app.require_subcommand(1);

  CommonFlags flags;
  CommandFlags cmd;
  std::uint64_t seed_value = 1;

  const auto addCommon = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "Robot configuration file")->required();
    sub->add_option("--output", flags.output_path, "Output file (default: standard output)");
    sub->add_option("--force", flags.force, "Wrench override \"fx,fy,fz,mx,my,mz\" (N, N*m)");
    sub->add_option("--grid", flags.grid, "Workspace resolution override NxM");
    sub->add_option("--frame", flags.frame, "Wrench frame: world or tool");
    sub->add_option("--seed", seed_value, "Random seed")->each([&](const std::string&) { flags.seed = seed_value; });
    sub->add_flag("--no-compensator", flags.no_compensator, "Ignore every [compensator] section");
    sub->add_option("--dump-config", flags.dump_path, "Write the parsed configuration in canonical form");
  };

  struct Command {
    CLI::App* app;
    std::function<void(const RunConfig&)> run;
  };
  std::vector<Command> commands;
  const auto add = [&](const std::string& name, const std::string& help, std::function<void(const RunConfig&)> fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    addCommon(sub);
    commands.push_back({sub, std::move(fn)});
    return sub;
  };

  add("fk", "End-effector pose at --q", [&](const RunConfig& c) { cmdFk(c, cmd, out); })
      ->add_option("--q", cmd.q, "Joint angles \"q1,...,qn\" (rad)");
  add("stiffness", "Cartesian stiffness at --q for both models", [&](const RunConfig& c) { cmdStiffness(c, cmd, out); })
      ->add_option("--q", cmd.q, "Joint angles \"q1,...,qn\" (rad)");
  add("deflect", "End-effector deflection at --q under the wrench",
      [&](const RunConfig& c) { cmdDeflect(c, cmd, out); })
      ->add_option("--q", cmd.q, "Joint angles \"q1,...,qn\" (rad)");
  add("map", "Deflection map CSV over the workspace grid", [&](const RunConfig& c) { cmdMap(c, flags, out, err); });
  add("compare", "Classical vs compensated compensation residual CSV",
      [&](const RunConfig& c) { cmdCompare(c, flags, out, err); });
  add("identify", "Fit compliances and compensator parameters to samples",
      [&](const RunConfig& c) { cmdIdentify(c, flags, cmd, out); })
      ->add_option("--samples", cmd.samples_path, "Calibration samples CSV");
  commands.back().app->add_option(
      "--fix", cmd.fix,
      "Parameters held at their config values, comma separated, or 'none' (default L; the compensator "
      "geometry is only determined up to scale)");
  CLI::App* sim = add("simulate-calib", "Synthetic calibration samples CSV",
                      [&](const RunConfig& c) { cmdSimulate(c, flags, cmd, out, err); });
  sim->add_option("--count", cmd.count, "Number of random calibration poses");
  sim->add_option("--noise", cmd.noise_mm, "Measurement noise standard deviation (mm)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::Usage);
  }

  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) {
        c.run(prepare(flags));
        break;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exitCode();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::Usage);
  }
  return 0;
}

}  // namespace gcstiff
