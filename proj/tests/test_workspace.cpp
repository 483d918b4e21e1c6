#include <doctest.h>

#include <sstream>
#include <string>

#include "gcstiff/workspace.hpp"
#include "support.hpp"

using namespace gcstiff;
using namespace gcstiff::test;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int commas(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), ',')); }

/// Reachable pose near the home posture.
Posed nearbyTarget(const RobotModeld& model, std::mt19937_64& rng) {
  return forwardKinematics(model, Eigen::VectorXd(standInHome() + randomAngles(rng, 6, 0.4)));
}

}  // namespace

TEST_CASE("grid validation") {
  auto g = standInGrid();
  CHECK_NOTHROW(g.validate());
  g.nu = 1;
  CHECK_THROWS_AS(g.validate(), InvalidConfigurationError);
  g = standInGrid();
  g.v_axis = Eigen::Vector3d(0.1, 1, 0).normalized();
  CHECK_THROWS_AS(g.validate(), InvalidConfigurationError);
  g = standInGrid();
  g.tool_orientation(0, 0) = 2.0;
  CHECK_THROWS_AS(g.validate(), InvalidConfigurationError);

  g = standInGrid();
  CHECK((g.point(0, 0) - g.origin).norm() == 0.0);
  CHECK((g.point(20, 20) - Eigen::Vector3d(1.0, 2.45, 0.5)).norm() < 1e-15);
}

TEST_CASE("deflection map on a coarse grid") {
  const auto model = standInModel();
  const std::vector<CompensatorParamsd> comps{identifiedCompensator()};
  const auto grid = standInGrid(5);

  SUBCASE("zero load gives zero deflection") {
    const auto map = evaluateMap(model, comps, grid, Wrenchd{}, standInHome());
    CHECK(map.okCount() == 25);
    for (const auto& node : map.nodes) {
      REQUIRE(node.deflection);
      CHECK(node.deflection->magnitude_compensated == 0.0);
      CHECK(node.deflection->magnitude_classical == 0.0);
      CHECK(node.deflection->model_difference == 0.0);
    }
  }

  SUBCASE("null compensator leaves no model difference") {
    const auto map = evaluateMap(model, {identifiedCompensator(0.0)}, grid, machiningWrench(), standInHome());
    CHECK(map.okCount() == 25);
    for (const auto& node : map.nodes) CHECK(node.deflection->model_difference == 0.0);
  }

  SUBCASE("nodes reach their targets and magnitudes are consistent") {
    const auto map = evaluateMap(model, comps, grid, machiningWrench(), standInHome());
    CHECK(map.warnings.empty());
    for (const auto& node : map.nodes) {
      REQUIRE(toString(node.status) == std::string("ok"));
      const auto err = poseError(grid.pose(node.iu, node.iv), forwardKinematics(model, node.q));
      CHECK(err.norm() < 1e-9);
      const auto& d = *node.deflection;
      CHECK(d.magnitude_compensated == doctest::Approx(d.compensated.d_position.norm()));
      CHECK(d.model_difference <= d.magnitude_compensated + d.magnitude_classical);
      CHECK(d.model_difference > 0.0);
    }
  }

  SUBCASE("identical inputs give identical maps") {
    const auto a = evaluateMap(model, comps, grid, machiningWrench(), standInHome());
    const auto b = evaluateMap(model, comps, grid, machiningWrench(), standInHome());
    std::ostringstream ca, cb;
    writeMapCsv(ca, a);
    writeMapCsv(cb, b);
    CHECK(ca.str() == cb.str());
  }

  SUBCASE("tool-frame wrench is rotated with the tool") {
    const Wrenchd along_tool_x{{100.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    MapOptions tool;
    tool.frame = WrenchFrame::Tool;
    const auto in_tool = evaluateMap(model, comps, grid, along_tool_x, standInHome(), tool);
    const Wrenchd world = along_tool_x.rotated(grid.tool_orientation);
    const auto in_world = evaluateMap(model, comps, grid, world, standInHome());
    for (std::size_t i = 0; i < in_tool.nodes.size(); ++i) {
      CHECK((in_tool.nodes[i].deflection->compensated.vector() - in_world.nodes[i].deflection->compensated.vector())
                .norm() < 1e-15);
    }
  }
}

TEST_CASE("unreachable nodes are flagged, not fatal") {
  const auto model = standInModel();
  auto grid = standInGrid(3);
  grid.origin = Eigen::Vector3d(10.0, 10.0, 0.5);
  const auto map = evaluateMap(model, {identifiedCompensator()}, grid, machiningWrench(), standInHome());
  CHECK(map.okCount() == 0);
  for (const auto& node : map.nodes) {
    CHECK(toString(node.status) == std::string("unreachable"));
    CHECK_FALSE(node.deflection);
  }
  CHECK(map.warnings.size() == 1);

  std::ostringstream csv;
  writeMapCsv(csv, map);
  CHECK(lines(csv.str())[2].ends_with(",unreachable"));
}

TEST_CASE("order of magnitude over the full machining area") {
  const auto model = standInModel();
  const auto cmp = compareStrategies(model, {identifiedCompensator()}, standInGrid(), machiningWrench(), standInHome());
  CHECK(cmp.map.okCount() == 441);
  double lo = 1e9, hi = 0.0;
  for (const auto& node : cmp.map.nodes) {
    lo = std::min(lo, node.deflection->magnitude_compensated);
    hi = std::max(hi, node.deflection->magnitude_compensated);
    CHECK(*node.compensation_residual == node.deflection->model_difference);
  }
  CHECK(lo >= 0.1e-3);
  CHECK(hi <= 5e-3);
  CHECK(cmp.summary.count == 441);
  CHECK(cmp.summary.max >= 0.01e-3);
  CHECK(cmp.summary.max <= 0.5e-3);
  CHECK(cmp.summary.min <= cmp.summary.mean);
  CHECK(cmp.summary.mean <= cmp.summary.max);

  SUBCASE("null compensator comparison") {
    const auto null =
        compareStrategies(model, {identifiedCompensator(0.0)}, standInGrid(5), machiningWrench(), standInHome());
    CHECK(null.summary.max == 0.0);
  }
}

TEST_CASE("pose compensation") {
  const auto model = standInModel();
  const std::vector<CompensatorParamsd> comps{identifiedCompensator()};
  std::mt19937_64 rng(41);

  SUBCASE("no load commands the target itself") {
    const auto target = nearbyTarget(model, rng);
    const auto r = compensatePose(model, comps, target, Wrenchd{}, standInHome());
    CHECK(r.iterations == 1);
    CHECK((r.command.position - target.position).norm() == 0.0);
  }

  SUBCASE("a nearly rigid robot needs no correction") {
    const auto rigid = standInModel(Eigen::VectorXd::Constant(6, 1e-15));
    const auto target = nearbyTarget(rigid, rng);
    const auto r = compensatePose(rigid, {}, target, machiningWrench(), standInHome());
    CHECK((r.command.position - target.position).norm() < 1e-9);
  }

  SUBCASE("loaded robot lands on the target") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto target = nearbyTarget(model, rng);
      const auto r = compensatePose(model, comps, target, machiningWrench(), standInHome());
      const Posed reached = forwardKinematics(model, r.q);
      CHECK((reached.position + r.deflection.d_position - target.position).norm() < 1e-6);
      CHECK((r.command.position - target.position).norm() > 1e-5);
    }
  }

  SUBCASE("iteration budget exhausted") {
    CompensationOptions opts;
    opts.max_iterations = 1;
    const auto target = nearbyTarget(model, rng);
    try {
      compensatePose(model, comps, target, machiningWrench(), standInHome(), opts);
      FAIL("expected CompensationFailureError");
    } catch (const CompensationFailureError& e) {
      CHECK(e.residual() > 0.0);
    }
  }
}

TEST_CASE("CSV layout") {
  const auto model = standInModel();
  const auto grid = standInGrid(3);
  const auto cmp = compareStrategies(model, {identifiedCompensator()}, grid, machiningWrench(), standInHome());

  std::ostringstream map_csv;
  writeMapCsv(map_csv, cmp.map);
  const auto rows = lines(map_csv.str());
  REQUIRE(rows.size() == 2 + 9);
  CHECK(rows[0].starts_with("#"));
  CHECK(rows[1] == "u,v,x,y,z,q1,q2,q3,q4,q5,q6,dx,dy,dz,mag_comp,mag_classical,diff,flag");
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(commas(rows[i]) == 17);
  CHECK(rows[2].starts_with("0,0,-1000,450,500,"));
  CHECK(map_csv.str().find('\r') == std::string::npos);

  std::ostringstream cmp_csv;
  writeComparisonCsv(cmp_csv, cmp);
  const auto crows = lines(cmp_csv.str());
  REQUIRE(crows.size() == 2 + 9);
  CHECK(crows[1] == "u,v,x,y,z,residual,flag");
  CHECK(crows[10].starts_with("2000,2000,1000,2450,500,"));
  CHECK(crows[10].ends_with(",ok"));
}
