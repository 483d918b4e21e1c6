#include "gcstiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gcstiff/csv.hpp"
#include "gcstiff/errors.hpp"

namespace gcstiff {

namespace {

struct Entry {
  std::vector<double> numbers;
  std::string unit;
  std::string text;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
};

struct UnitTable {
  const char* kind;
  std::vector<std::pair<std::string, double>> units;
  bool required;
};

const UnitTable kLength{"length", {{"m", 1.0}, {"mm", 1e-3}}, true};
const UnitTable kAngle{"angle", {{"rad", 1.0}, {"deg", std::numbers::pi / 180.0}}, true};
const UnitTable kJointCompliance{"joint compliance", {{"rad/(N*m)", 1.0}, {"rad/Nm", 1.0}}, true};
const UnitTable kWrench{"wrench", {{"N", 1.0}}, false};
const UnitTable kUnitless{"dimensionless", {}, false};

std::vector<std::string> tokenize(std::string_view text) {
  std::string copy(text);
  for (char& c : copy) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(copy);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  return tokens;
}

std::vector<Section> readSections(std::istream& in) {
  std::vector<Section> sections;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", line_no, "");
      sections.push_back(Section{std::string(csv::trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    if (sections.empty()) throw ParseError("key outside of any section", line_no, "");
    Section& section = sections.back();
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, section.name);
    const std::string key(csv::trim(line.substr(0, eq)));
    const std::string_view value = csv::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no, section.name);

    Entry entry;
    entry.line = line_no;
    entry.text = std::string(value);
    const auto tokens = tokenize(value);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      try {
        entry.numbers.push_back(csv::parseDouble(tokens[i]));
      } catch (const std::invalid_argument&) {
        if (i + 1 != tokens.size() || !entry.unit.empty()) {
          throw ParseError("'" + tokens[i] + "' is not a number", line_no, section.name);
        }
        entry.unit = tokens[i];
      }
    }
    if (!section.entries.emplace(key, std::move(entry)).second) {
      throw ParseError("duplicate key '" + key + "'", line_no, section.name);
    }
  }
  return sections;
}

class SectionReader {
 public:
  explicit SectionReader(const Section& section) : section_(section) {}

  bool has(const std::string& key) const { return section_.entries.count(key) != 0; }

  const Entry& entry(const std::string& key) const {
    const auto it = section_.entries.find(key);
    if (it == section_.entries.end()) throw ParseError("missing key '" + key + "'", section_.line, section_.name);
    used_.push_back(key);
    return it->second;
  }

  std::vector<double> values(const std::string& key, std::size_t count, const UnitTable& table) const {
    const Entry& e = entry(key);
    if (e.numbers.size() != count) {
      throw ParseError("'" + key + "' needs " + std::to_string(count) + " values, found " +
                           std::to_string(e.numbers.size()),
                       e.line, section_.name);
    }
    const double factor = unitFactor(key, e, table);
    std::vector<double> out;
    for (double v : e.numbers) {
      if (!std::isfinite(v)) throw ParseError("'" + key + "' is not finite", e.line, section_.name);
      out.push_back(v * factor);
    }
    return out;
  }

  double scalar(const std::string& key, const UnitTable& table) const { return values(key, 1, table)[0]; }

  Eigen::Vector3d vector3(const std::string& key, const UnitTable& table) const {
    const auto v = values(key, 3, table);
    return Eigen::Vector3d(v[0], v[1], v[2]);
  }

  int integer(const std::string& key) const {
    const double v = scalar(key, kUnitless);
    if (v != std::floor(v)) throw ParseError("'" + key + "' must be an integer", entry(key).line, section_.name);
    return static_cast<int>(v);
  }

  ParseError error(const std::string& key, const std::string& what) const {
    return ParseError(what, entry(key).line, section_.name);
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, e] : section_.entries) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw ParseError("unknown key '" + key + "'", e.line, section_.name);
      }
    }
  }

  const Section& section() const { return section_; }

 private:
  double unitFactor(const std::string& key, const Entry& e, const UnitTable& table) const {
    if (e.unit.empty()) {
      if (table.required) {
        throw ParseError("'" + key + "' needs a " + std::string(table.kind) + " unit", e.line, section_.name);
      }
      return 1.0;
    }
    for (const auto& [name, factor] : table.units) {
      if (name == e.unit) return factor;
    }
    throw ParseError("unit '" + e.unit + "' is not a valid " + std::string(table.kind) + " unit for '" + key + "'",
                     e.line, section_.name);
  }

  const Section& section_;
  mutable std::vector<std::string> used_;
};

RobotModeld readRobot(const Section& robot, const Section& compliance) {
  SectionReader r(robot);
  std::vector<JointDescriptord> joints;
  for (int i = 1;; ++i) {
    const std::string prefix = "joint" + std::to_string(i);
    if (!r.has(prefix + ".offset") && !r.has(prefix + ".axis")) break;
    JointDescriptord joint;
    joint.offset = r.vector3(prefix + ".offset", kLength);
    joint.axis = r.vector3(prefix + ".axis", kUnitless);
    if (std::abs(joint.axis.norm() - 1.0) > 1e-12) throw r.error(prefix + ".axis", "axis must be a unit vector");
    joints.push_back(joint);
  }
  if (joints.empty()) throw ParseError("no joints defined (expected joint1.offset, joint1.axis)", robot.line, "robot");
  const Eigen::Vector3d tool = r.vector3("tool_offset", kLength);
  r.finish();

  SectionReader c(compliance);
  Eigen::VectorXd k(static_cast<Eigen::Index>(joints.size()));
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    const std::string key = "k" + std::to_string(i + 1);
    k(i) = c.scalar(key, kJointCompliance);
    if (!(k(i) > 0.0)) throw c.error(key, "joint compliance must be positive");
  }
  c.finish();
  return RobotModeld(std::move(joints), tool, std::move(k));
}

CompensatorParamsd readCompensator(const Section& section) {
  SectionReader r(section);
  const int joint = r.integer("joint");
  const Entry& kc = r.entry("kc");
  if (kc.numbers.size() != 1) throw r.error("kc", "'kc' needs 1 value");
  double stiffness = 0.0;
  const double value = kc.numbers[0];
  if (kc.unit == "m/N" || kc.unit == "mm/N") {
    const double compliance = kc.unit == "m/N" ? value : value * 1e-3;
    if (!(compliance > 0.0)) throw r.error("kc", "compliance must be positive; give a stiffness in N/m instead");
    stiffness = 1.0 / compliance;
  } else if (kc.unit == "N/m" || kc.unit == "N/mm") {
    stiffness = kc.unit == "N/m" ? value : value * 1e3;
  } else {
    throw r.error("kc", "'kc' needs a unit: m/N or mm/N (compliance), N/m or N/mm (stiffness)");
  }
  const double s0 = r.scalar("s0", kLength);
  const double L = r.scalar("L", kLength);
  const double ax = r.scalar("ax", kLength);
  const double ay = r.scalar("ay", kLength);
  r.finish();
  try {
    return CompensatorParamsd(stiffness, s0, L, ax, ay, joint);
  } catch (const InvalidModelError& e) {
    throw ParseError(e.what(), section.line, section.name);
  }
}

WorkspaceSetup readWorkspace(const Section& section, Eigen::Index dof) {
  SectionReader r(section);
  WorkspaceSetup ws;
  ws.grid.origin = r.vector3("origin", kLength);
  ws.grid.u_axis = r.vector3("u_axis", kUnitless);
  ws.grid.v_axis = r.vector3("v_axis", kUnitless);
  const auto size = r.values("size", 2, kLength);
  ws.grid.width = size[0];
  ws.grid.height = size[1];
  const auto res = r.values("resolution", 2, kUnitless);
  if (res[0] != std::floor(res[0]) || res[1] != std::floor(res[1])) {
    throw r.error("resolution", "resolution must be two integers");
  }
  ws.grid.nu = static_cast<int>(res[0]);
  ws.grid.nv = static_cast<int>(res[1]);
  if (r.has("tool_orientation") && r.has("tool_rotvec")) {
    throw r.error("tool_rotvec", "give either tool_orientation or tool_rotvec, not both");
  }
  if (r.has("tool_orientation")) {
    const auto m = r.values("tool_orientation", 9, kUnitless);
    ws.grid.tool_orientation = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(m.data());
  } else {
    ws.grid.tool_orientation = rotationExp(r.vector3("tool_rotvec", kAngle));
  }
  const auto home = r.values("home", static_cast<std::size_t>(dof), kAngle);
  ws.home = Eigen::Map<const Eigen::VectorXd>(home.data(), dof);
  r.finish();
  try {
    ws.grid.validate();
  } catch (const Error& e) {
    throw ParseError(e.what(), section.line, section.name);
  }
  return ws;
}

void readForce(const Section& section, RunConfig& config) {
  SectionReader r(section);
  const auto w = r.values("wrench", 6, kWrench);
  config.force = Wrenchd::fromVector(Eigen::Map<const Eigen::Matrix<double, 6, 1>>(w.data()));
  if (r.has("frame")) {
    const Entry& e = r.entry("frame");
    if (e.text == "world") {
      config.frame = WrenchFrame::World;
    } else if (e.text == "tool") {
      config.frame = WrenchFrame::Tool;
    } else {
      throw r.error("frame", "frame must be 'world' or 'tool'");
    }
  }
  r.finish();
}

}  // namespace

RunConfig parseConfig(std::istream& in) {
  const auto sections = readSections(in);
  const Section* robot = nullptr;
  const Section* compliance = nullptr;
  const Section* workspace = nullptr;
  const Section* force = nullptr;
  std::vector<const Section*> compensators;
  for (const auto& s : sections) {
    const Section** slot = nullptr;
    if (s.name == "robot") {
      slot = &robot;
    } else if (s.name == "compliance") {
      slot = &compliance;
    } else if (s.name == "workspace") {
      slot = &workspace;
    } else if (s.name == "force") {
      slot = &force;
    } else if (s.name == "compensator") {
      compensators.push_back(&s);
      continue;
    } else {
      throw ParseError("unknown section [" + s.name + "]", s.line, s.name);
    }
    if (*slot != nullptr) throw ParseError("duplicate section [" + s.name + "]", s.line, s.name);
    *slot = &s;
  }
  if (robot == nullptr) throw ParseError("missing [robot] section", 0, "");
  if (compliance == nullptr) throw ParseError("missing [compliance] section", 0, "");

  RunConfig config{readRobot(*robot, *compliance), {}, std::nullopt, std::nullopt, WrenchFrame::World};
  for (const Section* s : compensators) {
    auto comp = readCompensator(*s);
    if (comp.jointIndex() > config.model.dof()) {
      throw ParseError("compensator joint " + std::to_string(comp.jointIndex()) + " outside 1.." +
                           std::to_string(config.model.dof()),
                       s->line, s->name);
    }
    for (const auto& other : config.compensators) {
      if (other.jointIndex() == comp.jointIndex()) {
        throw ParseError("second compensator on joint " + std::to_string(comp.jointIndex()), s->line, s->name);
      }
    }
    config.compensators.push_back(comp);
  }
  if (workspace != nullptr) config.workspace = readWorkspace(*workspace, config.model.dof());
  if (force != nullptr) readForce(*force, config);
  return config;
}

RunConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parseConfig(in);
}

void dumpConfig(std::ostream& out, const RunConfig& config) {
  using csv::formatExact;
  const auto vec = [](const auto& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + formatExact(v(i));
    return s;
  };

  out << "# SI units, full precision\n[robot]\n";
  const auto& joints = config.model.joints();
  for (std::size_t i = 0; i < joints.size(); ++i) {
    out << "joint" << i + 1 << ".offset = " << vec(joints[i].offset) << " m\n";
    out << "joint" << i + 1 << ".axis = " << vec(joints[i].axis) << '\n';
  }
  out << "tool_offset = " << vec(config.model.toolOffset()) << " m\n";

  out << "\n[compliance]\n";
  for (Eigen::Index i = 0; i < config.model.dof(); ++i) {
    out << 'k' << i + 1 << " = " << formatExact(config.model.compliances()(i)) << " rad/(N*m)\n";
  }

  for (const auto& c : config.compensators) {
    out << "\n[compensator]\njoint = " << c.jointIndex() << '\n';
    out << "kc = " << formatExact(c.stiffness()) << " N/m\n";
    out << "s0 = " << formatExact(c.freeLength()) << " m\n";
    out << "L = " << formatExact(c.linkLength()) << " m\n";
    out << "ax = " << formatExact(c.ax()) << " m\n";
    out << "ay = " << formatExact(c.ay()) << " m\n";
  }

  if (config.workspace) {
    const auto& g = config.workspace->grid;
    out << "\n[workspace]\norigin = " << vec(g.origin) << " m\n";
    out << "u_axis = " << vec(g.u_axis) << '\n';
    out << "v_axis = " << vec(g.v_axis) << '\n';
    out << "size = " << formatExact(g.width) << ' ' << formatExact(g.height) << " m\n";
    out << "resolution = " << g.nu << ' ' << g.nv << '\n';
    const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> R = g.tool_orientation;
    out << "tool_orientation = " << vec(Eigen::Map<const Eigen::Matrix<double, 9, 1>>(R.data())) << '\n';
    out << "home = " << vec(config.workspace->home) << " rad\n";
  }

  if (config.force) {
    out << "\n[force]\nwrench = " << vec(config.force->vector()) << " N\n";
    out << "frame = " << (config.frame == WrenchFrame::Tool ? "tool" : "world") << '\n';
  }
}

}  // namespace gcstiff
