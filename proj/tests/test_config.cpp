#include <doctest.h>

#include <sstream>
#include <string>

#include "gcstiff/config.hpp"
#include "gcstiff/errors.hpp"
#include "support.hpp"

using namespace gcstiff;
using namespace gcstiff::test;

namespace {

const std::string kDir = GCSTIFF_CONFIG_DIR;

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parseConfig(in);
}

const std::string kMinimal =
    "[robot]\n"
    "joint1.offset = 0 0 0 m\n"
    "joint1.axis = 0 0 1\n"
    "tool_offset = 1 0 0 m\n"
    "[compliance]\n"
    "k1 = 1e-6 rad/(N*m)\n";

/// Line number reported for a malformed config.
int errorLine(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

void checkSame(const RunConfig& a, const RunConfig& b) {
  REQUIRE(a.model.dof() == b.model.dof());
  for (Eigen::Index i = 0; i < a.model.dof(); ++i) {
    CHECK(a.model.joints()[static_cast<std::size_t>(i)].offset == b.model.joints()[static_cast<std::size_t>(i)].offset);
    CHECK(a.model.joints()[static_cast<std::size_t>(i)].axis == b.model.joints()[static_cast<std::size_t>(i)].axis);
  }
  CHECK(a.model.toolOffset() == b.model.toolOffset());
  CHECK(a.model.compliances() == b.model.compliances());
  REQUIRE(a.compensators.size() == b.compensators.size());
  for (std::size_t i = 0; i < a.compensators.size(); ++i) {
    const auto &x = a.compensators[i], &y = b.compensators[i];
    CHECK(x.stiffness() == y.stiffness());
    CHECK(x.freeLength() == y.freeLength());
    CHECK(x.linkLength() == y.linkLength());
    CHECK(x.ax() == y.ax());
    CHECK(x.ay() == y.ay());
    CHECK(x.jointIndex() == y.jointIndex());
  }
  REQUIRE(a.workspace.has_value() == b.workspace.has_value());
  if (a.workspace) {
    const auto &g = a.workspace->grid, &h = b.workspace->grid;
    CHECK(g.origin == h.origin);
    CHECK(g.u_axis == h.u_axis);
    CHECK(g.v_axis == h.v_axis);
    CHECK(g.width == h.width);
    CHECK(g.height == h.height);
    CHECK(g.nu == h.nu);
    CHECK(g.nv == h.nv);
    CHECK(g.tool_orientation == h.tool_orientation);
    CHECK(a.workspace->home == b.workspace->home);
  }
  REQUIRE(a.force.has_value() == b.force.has_value());
  if (a.force) CHECK(a.force->vector() == b.force->vector());
  CHECK(a.frame == b.frame);
}

}  // namespace

TEST_CASE("shipped stand-in config") {
  const auto cfg = loadConfig(kDir + "/kr270_standin.cfg");
  CHECK(cfg.model.dof() == 6);
  CHECK((cfg.model.compliances() - identifiedCompliances()).norm() == 0.0);
  CHECK((cfg.model.joints()[1].offset - Eigen::Vector3d(0.35, 0.0, 0.675)).norm() < 1e-15);
  CHECK((cfg.model.toolOffset() - Eigen::Vector3d(0.315, 0.0, -0.12)).norm() < 1e-15);

  REQUIRE(cfg.compensators.size() == 1);
  const auto& c = cfg.compensators[0];
  CHECK(c.jointIndex() == 2);
  CHECK(c.stiffness() == doctest::Approx(1.0 / 0.144e-6).epsilon(1e-15));
  CHECK(c.freeLength() == doctest::Approx(0.458).epsilon(1e-15));
  CHECK(c.linkLength() == doctest::Approx(0.18472).epsilon(1e-15));
  CHECK(c.ax() == doctest::Approx(0.68593).epsilon(1e-15));
  CHECK(c.ay() == doctest::Approx(0.12030).epsilon(1e-15));

  REQUIRE(cfg.workspace);
  const auto& g = cfg.workspace->grid;
  CHECK((g.origin - Eigen::Vector3d(-1.0, 0.45, 0.5)).norm() < 1e-15);
  CHECK(g.width == doctest::Approx(2.0));
  CHECK(g.nu == 21);
  CHECK(g.nv == 21);
  CHECK((g.tool_orientation - standInGrid().tool_orientation).norm() < 1e-15);
  CHECK((cfg.workspace->home - standInHome()).norm() < 1e-15);

  REQUIRE(cfg.force);
  CHECK(cfg.force->vector() == machiningWrench().vector());
  CHECK(cfg.frame == WrenchFrame::World);
}

TEST_CASE("unit handling") {
  const auto base = parse(kMinimal);
  CHECK(base.model.toolOffset() == Eigen::Vector3d(1, 0, 0));
  CHECK(base.compensators.empty());
  CHECK_FALSE(base.workspace);
  CHECK_FALSE(base.force);

  const auto mm = parse(
      "[robot]\njoint1.offset = 0, 0, 250 mm\njoint1.axis = 0 0 1\ntool_offset = 1000 0 0 mm\n"
      "[compliance]\nk1 = 2e-6 rad/Nm\n");
  CHECK(mm.model.joints()[0].offset(2) == doctest::Approx(0.25));
  CHECK(mm.model.toolOffset()(0) == doctest::Approx(1.0));

  const std::string comp = "[compensator]\njoint = 1\ns0 = 0.1 m\nL = 200 mm\nax = 300 mm\nay = 0 mm\n";
  CHECK(parse(kMinimal + comp + "kc = 0.5e-6 m/N\n").compensators[0].stiffness() == doctest::Approx(2e6));
  CHECK(parse(kMinimal + comp + "kc = 0.5e-3 mm/N\n").compensators[0].stiffness() == doctest::Approx(2e6));
  CHECK(parse(kMinimal + comp + "kc = 2e6 N/m\n").compensators[0].stiffness() == doctest::Approx(2e6));
  CHECK(parse(kMinimal + comp + "kc = 2e3 N/mm\n").compensators[0].stiffness() == doctest::Approx(2e6));
  CHECK(parse(kMinimal + comp + "kc = 0 N/m\n").compensators[0].stiffness() == 0.0);

  const auto tool = parse(kMinimal + "[force]\nwrench = 1 2 3 4 5 6\nframe = tool\n");
  CHECK(tool.force->force == Eigen::Vector3d(1, 2, 3));
  CHECK(tool.force->moment == Eigen::Vector3d(4, 5, 6));
  CHECK(tool.frame == WrenchFrame::Tool);
}

TEST_CASE("malformed configs name the offending line") {
  CHECK(errorLine(kMinimal + "k2 = 1e-6 rad/(N*m)\nbogus = 3\n") == 8);
  const std::string compliance = "[compliance]\nk1 = 1e-6 rad/(N*m)\n";
  CHECK(errorLine(compliance + "[robot]\njoint1.offset = 0 0 0 furlongs\n") == 4);
  CHECK(errorLine(compliance + "[robot]\njoint1.offset = 0 0 0 m\njoint1.axis = 0 0 2\n") == 5);
  CHECK(errorLine("[robot]\njoint1.offset = 0 0 0 m\njoint1.offset = 0 0 0 m\n") == 3);
  CHECK(errorLine("\n[nonsense]\n") == 2);
  CHECK(errorLine(kMinimal + "[compliance]\n") == 7);
  CHECK(errorLine(kMinimal + "[compensator]\njoint = 1\nkc = 0 m/N\n") == 9);
  CHECK(errorLine(kMinimal + "[force]\nwrench = 1 2 3\n") == 8);
  try {
    parse(compliance);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("[robot]") != std::string::npos);
  }
  CHECK(errorLine("no section = 1\n") == 1);

  try {
    parse("[robot]\njoint1.offset = 0 0 0 m\njoint1.axis = 0 0 1\n" + compliance);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("tool_offset") != std::string::npos);
  }
  CHECK_THROWS_AS(loadConfig(kDir + "/does_not_exist.cfg"), IoError);
}

TEST_CASE("dump and re-parse is field-for-field identical") {
  for (const char* name : {"kr270_standin.cfg", "single_joint.cfg", "planar2.cfg"}) {
    INFO(name);
    const auto original = loadConfig(kDir + "/" + name);
    std::stringstream dumped;
    dumpConfig(dumped, original);
    const auto again = parseConfig(dumped);
    checkSame(original, again);

    std::ostringstream twice;
    dumpConfig(twice, again);
    CHECK(twice.str() == dumped.str());
  }

  const auto null_comp = parse(kMinimal + "[compensator]\njoint = 1\nkc = 0 N/m\ns0 = 0.1 m\nL = 0.2 m\n"
                                          "ax = 0.3 m\nay = 0 m\n");
  std::stringstream dumped;
  dumpConfig(dumped, null_comp);
  checkSame(null_comp, parseConfig(dumped));
}
