#pragma once

#include <string>

#include "uavllm/mission.hpp"

namespace uavllm {

/// Trajectory samples as CSV: time,x,y,z,yaw,roll,pitch with fixed precision.
std::string trajectory_csv(const MissionLog& log);

/// Two-panel SVG: top-down path over the occupancy grid with obstacle
/// footprints and clearance outlines, then altitude against simulated time.
/// Output depends only on the log, so equal logs give equal bytes. A log
/// without samples plots the start point alone.
std::string trajectory_svg(const MissionLog& log);

struct PlotFiles {
  std::string svg_path;
  std::string csv_path;
};

/// Writes `<prefix>.svg` and `<prefix>.csv`.
PlotFiles write_plot(const MissionLog& log, const std::string& prefix);

}  // namespace uavllm
