#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "uavllm/error.hpp"
#include "uavllm/plot.hpp"

namespace uavllm {

namespace {

constexpr double kWidth = 800.0;
constexpr double kMargin = 50.0;
constexpr double kPlanMaxHeight = 480.0;
constexpr double kProfileHeight = 220.0;
constexpr double kGap = 60.0;

/// Fixed-precision number; avoids "-0.00".
std::string num(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<TrajectorySample> samples_of(const MissionLog& log) {
  if (!log.trajectory.empty()) return log.trajectory;
  return {{0.0, Pose{log.mission.start, 0.0, 0.0, 0.0}}};
}

/// Rounds up to a readable axis limit.
double nice_ceiling(double v) {
  if (v <= 1.0) return 1.0;
  const double step = v <= 10.0 ? 1.0 : v <= 50.0 ? 5.0 : v <= 200.0 ? 20.0 : 100.0;
  return std::ceil(v / step) * step;
}

double tick_step(double span) {
  if (span <= 10.0) return 1.0;
  if (span <= 50.0) return 5.0;
  if (span <= 200.0) return 20.0;
  return 100.0;
}

}  // namespace

std::string trajectory_csv(const MissionLog& log) {
  std::string out = "time,x,y,z,yaw,roll,pitch\n";
  for (const TrajectorySample& s : samples_of(log)) {
    const Pose& p = s.pose;
    out += num(s.time, 3) + ',' + num(p.position.x, 6) + ',' + num(p.position.y, 6) + ',' +
           num(p.position.z, 6) + ',' + num(p.yaw, 6) + ',' + num(p.roll, 6) + ',' +
           num(p.pitch, 6) + '\n';
  }
  return out;
}

std::string trajectory_svg(const MissionLog& log) {
  const WorldDescription world = world_from_json(log.mission.world_doc);
  const WorldExtent& e = world.extent;
  const std::vector<TrajectorySample> samples = samples_of(log);

  const double xr = e.x_max - e.x_min;
  const double yr = e.y_max - e.y_min;
  const double scale = std::min((kWidth - 2 * kMargin) / xr, kPlanMaxHeight / yr);
  const double plan_w = xr * scale;
  const double plan_h = yr * scale;
  const double plan_top = kMargin;
  const auto px = [&](double x) { return kMargin + (x - e.x_min) * scale; };
  const auto py = [&](double y) { return plan_top + (e.y_max - y) * scale; };

  const double prof_top = plan_top + plan_h + kGap;
  const double prof_w = kWidth - 2 * kMargin;
  const double height = prof_top + kProfileHeight + kMargin;

  double z_max = 0.0;
  for (const auto& s : samples) z_max = std::max(z_max, s.pose.position.z);
  for (const auto& ob : world.obstacles) z_max = std::max(z_max, ob.top());
  if (log.mission.height_bound) z_max = std::max(z_max, *log.mission.height_bound);
  z_max = nice_ceiling(z_max + 0.5);
  const double t_max = nice_ceiling(samples.back().time);
  const auto tx = [&](double t) { return kMargin + t / t_max * prof_w; };
  const auto zy = [&](double z) { return prof_top + kProfileHeight - z / z_max * kProfileHeight; };

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth, 0) + "\" height=\"" +
       num(height, 0) + "\" viewBox=\"0 0 " + num(kWidth, 0) + ' ' + num(height, 0) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  o += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kMargin - 20) + "\" font-size=\"14\">" +
       escape(log.mission.id + " (" + std::string(mode_name(log.mode)) + ", " +
              std::string(status_name(log.status)) + ")") +
       "</text>\n";

  // Plan view.
  o += "<g id=\"plan\">\n";
  o += "<rect x=\"" + num(px(e.x_min)) + "\" y=\"" + num(py(e.y_max)) + "\" width=\"" +
       num(plan_w) + "\" height=\"" + num(plan_h) +
       "\" fill=\"#f8f8f8\" stroke=\"#333333\"/>\n";
  try {
    const GridMap grid = world.rasterize();
    for (int iy = 0; iy < grid.ny(); ++iy) {
      for (int ix = 0; ix < grid.nx(); ++ix) {
        if (!grid.cell({ix, iy}).occupancy) continue;
        const Rect r = grid.cell_rect({ix, iy});
        o += "<rect class=\"cell\" x=\"" + num(px(r.x_lo)) + "\" y=\"" + num(py(r.y_hi)) +
             "\" width=\"" + num((r.x_hi - r.x_lo) * scale) + "\" height=\"" +
             num((r.y_hi - r.y_lo) * scale) + "\" fill=\"#dddddd\"/>\n";
      }
    }
  } catch (const Error&) {
    // An invalid world still plots its outlines.
  }
  for (const Obstacle& ob : world.obstacles) {
    if (ob.is_cube()) {
      const Cube& c = ob.cube();
      const double x0 = c.center.x - c.size.x / 2, x1 = c.center.x + c.size.x / 2;
      const double y0 = c.center.y - c.size.y / 2, y1 = c.center.y + c.size.y / 2;
      const double k = ob.clearance;
      o += "<rect class=\"clearance\" x=\"" + num(px(x0 - k)) + "\" y=\"" + num(py(y1 + k)) +
           "\" width=\"" + num((x1 - x0 + 2 * k) * scale) + "\" height=\"" +
           num((y1 - y0 + 2 * k) * scale) + "\" rx=\"" + num(k * scale) +
           "\" fill=\"none\" stroke=\"#cc6600\" stroke-dasharray=\"4 3\"/>\n";
      o += "<rect class=\"obstacle\" id=\"" + escape(ob.id) + "\" x=\"" + num(px(x0)) +
           "\" y=\"" + num(py(y1)) + "\" width=\"" + num((x1 - x0) * scale) + "\" height=\"" +
           num((y1 - y0) * scale) + "\" fill=\"#996633\" fill-opacity=\"0.6\"/>\n";
    } else {
      const Sphere& s = ob.sphere();
      o += "<circle class=\"clearance\" cx=\"" + num(px(s.center.x)) + "\" cy=\"" +
           num(py(s.center.y)) + "\" r=\"" + num((s.radius + ob.clearance) * scale) +
           "\" fill=\"none\" stroke=\"#cc6600\" stroke-dasharray=\"4 3\"/>\n";
      o += "<circle class=\"obstacle\" id=\"" + escape(ob.id) + "\" cx=\"" + num(px(s.center.x)) +
           "\" cy=\"" + num(py(s.center.y)) + "\" r=\"" + num(s.radius * scale) +
           "\" fill=\"#996633\" fill-opacity=\"0.6\"/>\n";
    }
  }
  const Vec3 a = log.mission.start;
  const Vec3 b = log.mission.goal;
  o += "<circle class=\"goal-tolerance\" cx=\"" + num(px(b.x)) + "\" cy=\"" + num(py(b.y)) +
       "\" r=\"" + num(log.mission.goal_tolerance * scale) +
       "\" fill=\"none\" stroke=\"#cc0000\"/>\n";
  o += "<circle class=\"start\" cx=\"" + num(px(a.x)) + "\" cy=\"" + num(py(a.y)) +
       "\" r=\"4\" fill=\"#009900\"/>\n";
  o += "<circle class=\"goal\" cx=\"" + num(px(b.x)) + "\" cy=\"" + num(py(b.y)) +
       "\" r=\"4\" fill=\"#cc0000\"/>\n";
  std::string pts;
  for (const auto& s : samples) {
    if (!pts.empty()) pts += ' ';
    pts += num(px(s.pose.position.x)) + ',' + num(py(s.pose.position.y));
  }
  o += "<polyline class=\"path\" points=\"" + pts +
       "\" fill=\"none\" stroke=\"#0044cc\" stroke-width=\"2\"/>\n";
  const Vec3 last = samples.back().pose.position;
  o += "<circle class=\"agent\" cx=\"" + num(px(last.x)) + "\" cy=\"" + num(py(last.y)) +
       "\" r=\"3\" fill=\"#0044cc\"/>\n";
  o += "<text x=\"" + num(kMargin) + "\" y=\"" + num(plan_top + plan_h + 18) +
       "\">x " + num(e.x_min, 0) + ".." + num(e.x_max, 0) + " m, y " + num(e.y_min, 0) + ".." +
       num(e.y_max, 0) + " m</text>\n";
  o += "</g>\n";

  // Altitude profile.
  o += "<g id=\"profile\">\n";
  o += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(prof_top) + "\" width=\"" + num(prof_w) +
       "\" height=\"" + num(kProfileHeight) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
  const double zt = tick_step(z_max);
  for (double z = 0.0; z <= z_max + 1e-9; z += zt) {
    o += "<text x=\"" + num(kMargin - 8) + "\" y=\"" + num(zy(z) + 4) +
         "\" text-anchor=\"end\">" + num(z, 0) + "</text>\n";
  }
  const double tt = tick_step(t_max);
  for (double t = 0.0; t <= t_max + 1e-9; t += tt) {
    o += "<text x=\"" + num(tx(t)) + "\" y=\"" + num(prof_top + kProfileHeight + 16) +
         "\" text-anchor=\"middle\">" + num(t, 0) + "</text>\n";
  }
  o += "<text x=\"" + num(kMargin + prof_w) + "\" y=\"" + num(prof_top + kProfileHeight + 32) +
       "\" text-anchor=\"end\">sim time [s]</text>\n";
  o += "<text x=\"" + num(kMargin) + "\" y=\"" + num(prof_top - 6) + "\">altitude [m]</text>\n";
  if (log.mission.height_bound) {
    const double hb = *log.mission.height_bound;
    o += "<line class=\"height-bound\" x1=\"" + num(kMargin) + "\" y1=\"" + num(zy(hb)) +
         "\" x2=\"" + num(kMargin + prof_w) + "\" y2=\"" + num(zy(hb)) +
         "\" stroke=\"#cc0000\" stroke-dasharray=\"6 4\"/>\n";
  }
  pts.clear();
  for (const auto& s : samples) {
    if (!pts.empty()) pts += ' ';
    pts += num(tx(s.time)) + ',' + num(zy(s.pose.position.z));
  }
  o += "<polyline class=\"altitude\" points=\"" + pts +
       "\" fill=\"none\" stroke=\"#0044cc\" stroke-width=\"2\"/>\n";
  o += "</g>\n";
  o += "</svg>\n";
  return o;
}

PlotFiles write_plot(const MissionLog& log, const std::string& prefix) {
  PlotFiles files{prefix + ".svg", prefix + ".csv"};
  const std::string svg = trajectory_svg(log);
  const std::string csv = trajectory_csv(log);
  for (const auto& [path, text] : {std::pair{files.svg_path, svg}, std::pair{files.csv_path, csv}}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kInvalidArguments, "cannot write " + path);
    out << text;
  }
  return files;
}

}  // namespace uavllm
