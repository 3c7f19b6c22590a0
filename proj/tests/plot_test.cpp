#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uavllm/plot.hpp"

using namespace uavllm;

namespace {

const std::string kData = UAVLLM_DATA_DIR;

MissionSpec mission(const std::string& name) {
  return load_mission_file(kData + "/missions/" + name + ".json");
}

std::vector<std::vector<double>> parse_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Plot, MissionTwoProfilePeaksAboveBound) {
  const MissionLog log = run_direct(mission("mission-2"));
  const auto rows = parse_csv(trajectory_csv(log));
  ASSERT_EQ(rows.size(), log.trajectory.size());
  double zmax = 0.0;
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 7u);
    zmax = std::max(zmax, r[3]);
  }
  EXPECT_GT(zmax, 5.0);
  const std::string svg = trajectory_svg(log);
  EXPECT_EQ(count(svg, "class=\"height-bound\""), 1u);
  EXPECT_EQ(count(svg, "class=\"obstacle\""), 1u);
  EXPECT_EQ(count(svg, "class=\"cell\""), 4u);
}

TEST(Plot, SameLogGivesSameBytes) {
  const MissionLog a = run_direct(mission("mission-3"));
  const MissionLog b = log_from_ndjson(log_to_ndjson(a));
  EXPECT_EQ(trajectory_svg(a), trajectory_svg(b));
  EXPECT_EQ(trajectory_csv(a), trajectory_csv(b));
  const std::string svg = trajectory_svg(a);
  EXPECT_EQ(count(svg, "<circle class=\"clearance\""), 1u);
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(Plot, EmptyMotionLogPlotsSinglePoint) {
  MissionLog log;
  log.mission = mission("mission-1");
  const auto rows = parse_csv(trajectory_csv(log));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][1], 2.0);
  const std::string svg = trajectory_svg(log);
  const auto p = svg.find("class=\"path\" points=\"");
  ASSERT_NE(p, std::string::npos);
  const auto q = svg.find('"', p + 21);
  EXPECT_EQ(svg.substr(p + 21, q - p - 21).find(' '), std::string::npos);
}

TEST(Plot, WritesBothFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "uavllm_plot_test";
  std::filesystem::create_directories(dir);
  const MissionLog log = run_direct(mission("mission-1"));
  const PlotFiles files = write_plot(log, (dir / "m1").string());
  std::ifstream svg(files.svg_path), csv(files.csv_path);
  std::stringstream s1, s2;
  s1 << svg.rdbuf();
  s2 << csv.rdbuf();
  EXPECT_EQ(s1.str(), trajectory_svg(log));
  EXPECT_EQ(s2.str(), trajectory_csv(log));
  std::filesystem::remove_all(dir);
}
