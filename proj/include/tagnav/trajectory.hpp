#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tagnav/geometry.hpp"

namespace tagnav {

/// One timestamped reference pose.
struct TimedPose {
    double t = 0.0;
    Pose pose;
};

using PosePath = std::vector<TimedPose>;

/// One row of an estimated trajectory. Frames where estimation was not
/// possible are kept as explicit gap records (has_pose = false, cause set)
/// rather than interpolated.
struct TrajectoryPoint {
    double t = 0.0;
    long frame = 0;
    bool has_pose = false;
    Pose pose;
    double rms = 0.0;
    int n_markers = 0;
    bool converged = false;
    std::string cause;  // empty for clean estimates
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;

    size_t pose_count() const {
        size_t n = 0;
        for (const auto& p : points) n += p.has_pose ? 1 : 0;
        return n;
    }
};

/// Format a double with 9 significant digits, the fixed file precision.
inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline constexpr const char* kTrajectoryHeader =
    "t,x,y,z,theta,rms,n_markers,converged,cause";

inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << kTrajectoryHeader << "\n";
    for (const auto& p : traj.points) {
        out << fmt_g9(p.t) << ",";
        if (p.has_pose) {
            out << fmt_g9(p.pose.x) << "," << fmt_g9(p.pose.y) << ","
                << fmt_g9(p.pose.z) << "," << fmt_g9(p.pose.theta) << ","
                << fmt_g9(p.rms) << "," << p.n_markers << ","
                << (p.converged ? 1 : 0) << "," << p.cause;
        } else {
            out << ",,,,," << p.n_markers << ",0," << p.cause;
        }
        out << "\n";
    }
    return out.str();
}

inline void write_trajectory(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << trajectory_to_csv(traj);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

/// Read a trajectory CSV. Accepts the full 9-column estimate format and the
/// 5-column ground-truth format (t,x,y,z,theta).
inline Trajectory read_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    Trajectory traj;
    std::string line;
    int lineno = 0;
    long frame = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (lineno == 1 && line.rfind("t,", 0) == 0) continue;  // header
        const auto f = split_csv_line(line);
        if (f.size() != 5 && f.size() != 9)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 5 or 9 columns, got " +
                             std::to_string(f.size()));
        try {
            TrajectoryPoint p;
            p.t = std::stod(f[0]);
            p.frame = frame++;
            if (f[1].empty()) {
                p.has_pose = false;
                if (f.size() == 9) {
                    p.n_markers = f[5].empty() ? 0 : std::stoi(f[5]);
                    p.cause = f[8];
                }
            } else {
                p.has_pose = true;
                p.pose = Pose(std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                              std::stod(f[4]));
                if (f.size() == 9) {
                    p.rms = std::stod(f[5]);
                    p.n_markers = std::stoi(f[6]);
                    p.converged = std::stoi(f[7]) != 0;
                    p.cause = f[8];
                } else {
                    p.converged = true;
                }
            }
            traj.points.push_back(p);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return traj;
}

inline Trajectory path_to_trajectory(const PosePath& path) {
    Trajectory traj;
    long frame = 0;
    for (const auto& tp : path) {
        TrajectoryPoint p;
        p.t = tp.t;
        p.frame = frame++;
        p.has_pose = true;
        p.pose = tp.pose;
        p.converged = true;
        traj.points.push_back(p);
    }
    return traj;
}

inline void write_pose_path(const PosePath& path, const std::string& file) {
    write_trajectory(path_to_trajectory(path), file);
}

}  // namespace tagnav
