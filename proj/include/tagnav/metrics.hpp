#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagnav/errors.hpp"
#include "tagnav/geometry.hpp"
#include "tagnav/trajectory.hpp"

namespace tagnav {

using PointSeq = std::vector<Eigen::VectorXd>;

namespace detail {

inline void check_pair(const PointSeq& a, const PointSeq& b) {
    if (a.empty() || b.empty()) throw EmptyTrajectory("point sequence is empty");
    const auto dim = a.front().size();
    for (const auto& p : a)
        if (p.size() != dim) throw DimensionMismatch("inconsistent dimensions in A");
    for (const auto& p : b)
        if (p.size() != dim)
            throw DimensionMismatch("B dimension " + std::to_string(p.size()) +
                                    " vs " + std::to_string(dim));
}

}  // namespace detail

/// Symmetric Hausdorff distance between two point sets (Euclidean norm).
inline double hausdorff(const PointSeq& a, const PointSeq& b) {
    detail::check_pair(a, b);
    const auto directed = [](const PointSeq& from, const PointSeq& to) {
        double worst = 0.0;
        for (const auto& p : from) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& q : to) nearest = std::min(nearest, (p - q).norm());
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

/// Discrete Fréchet distance via the Eiter-Mannila dynamic program with a
/// rolling row, O(min(|A|,|B|)) memory.
inline double discrete_frechet(const PointSeq& a, const PointSeq& b) {
    detail::check_pair(a, b);
    const PointSeq& rows = a.size() >= b.size() ? a : b;
    const PointSeq& cols = a.size() >= b.size() ? b : a;
    const size_t m = cols.size();
    std::vector<double> prev(m), cur(m);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < m; ++j) {
            const double d = (rows[i] - cols[j]).norm();
            double reach;
            if (i == 0 && j == 0)
                reach = d;
            else if (i == 0)
                reach = std::max(cur[j - 1], d);
            else if (j == 0)
                reach = std::max(prev[0], d);
            else
                reach = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
            cur[j] = reach;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

struct FpsMeasurement {
    double mean = 0.0;  // frames per second
    double stddev = 0.0;
    int repetitions = 0;
};

/**
 * Throughput of a pipeline stage over a frame workload: frames divided by
 * wall-clock stage time, mean and std over `reps` repetitions. The stage
 * callable must process the whole workload once per invocation.
 */
inline FpsMeasurement measure_fps(const std::function<void()>& stage,
                                  long n_frames, int reps = 5) {
    if (n_frames < 100)
        throw TooFewFrames("need >= 100 frames for stable timing, got " +
                           std::to_string(n_frames));
    std::vector<double> fps;
    for (int r = 0; r < reps; ++r) {
        const auto start = std::chrono::steady_clock::now();
        stage();
        const auto stop = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(stop - start).count();
        fps.push_back(double(n_frames) / std::max(secs, 1e-12));
    }
    FpsMeasurement out;
    out.repetitions = reps;
    for (double f : fps) out.mean += f;
    out.mean /= reps;
    for (double f : fps) out.stddev += (f - out.mean) * (f - out.mean);
    out.stddev = std::sqrt(out.stddev / reps);
    return out;
}

/// Trajectory-similarity report mirroring the benchmark table columns.
struct MetricReport {
    double hausdorff = 0.0;  // m
    double frechet = 0.0;    // m
    double yaw_rms = 0.0;    // rad, diagnostic (positions only feed the distances)
    bool has_fps = false;
    FpsMeasurement fps;
    int n_points_a = 0;
    int n_points_b = 0;
    std::string config_digest;
};

inline nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j;
    j["hausdorff"] = r.hausdorff;
    j["frechet"] = r.frechet;
    j["yaw_rms"] = r.yaw_rms;
    if (r.has_fps)
        j["fps"] = {{"mean", r.fps.mean}, {"std", r.fps.stddev}};
    else
        j["fps"] = nullptr;
    j["n_a"] = r.n_points_a;
    j["n_b"] = r.n_points_b;
    j["config_digest"] = r.config_digest;
    return j;
}

/// Positions of the valid poses of a trajectory as 3-D points.
inline PointSeq trajectory_positions(const Trajectory& traj) {
    PointSeq pts;
    for (const auto& p : traj.points)
        if (p.has_pose) pts.push_back(p.pose.position());
    return pts;
}

/**
 * Compare an estimated trajectory against a reference. Sequences are paired
 * by nearest timestamp (max skew half a frame period); the distances are
 * then computed on the paired 3-D position sequences, yaw separately as an
 * RMS diagnostic.
 */
inline MetricReport evaluate_trajectories(const Trajectory& estimate,
                                          const Trajectory& reference,
                                          double frame_period = 1.0 / 30.0) {
    PointSeq a, b;
    double yaw_sq = 0.0;
    size_t yaw_n = 0;
    size_t ref_idx = 0;
    for (const auto& ep : estimate.points) {
        if (!ep.has_pose) continue;
        // reference timestamps are sorted; advance to the nearest
        while (ref_idx + 1 < reference.points.size() &&
               std::abs(reference.points[ref_idx + 1].t - ep.t) <=
                   std::abs(reference.points[ref_idx].t - ep.t))
            ++ref_idx;
        const auto& rp = reference.points[ref_idx];
        if (!rp.has_pose) continue;
        if (std::abs(rp.t - ep.t) > 0.5 * frame_period) continue;
        a.push_back(ep.pose.position());
        b.push_back(rp.pose.position());
        const double dth = wrap_angle(ep.pose.theta - rp.pose.theta);
        yaw_sq += dth * dth;
        ++yaw_n;
    }
    MetricReport report;
    report.hausdorff = hausdorff(a, b);
    report.frechet = discrete_frechet(a, b);
    report.yaw_rms = yaw_n ? std::sqrt(yaw_sq / yaw_n) : 0.0;
    report.n_points_a = static_cast<int>(a.size());
    report.n_points_b = static_cast<int>(b.size());
    return report;
}

/// Render reports as an aligned text table (one row per label).
inline std::string format_bench_table(
    const std::vector<std::pair<std::string, MetricReport>>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-28s %12s %12s %14s\n", "Trajectory",
                  "Hausdorff", "Frechet", "Runtime (FPS)");
    out << line;
    out << std::string(69, '-') << "\n";
    for (const auto& [label, r] : rows) {
        if (r.has_fps)
            std::snprintf(line, sizeof line, "%-28s %12.4f %12.4f %14.1f\n",
                          label.c_str(), r.hausdorff, r.frechet, r.fps.mean);
        else
            std::snprintf(line, sizeof line, "%-28s %12.4f %12.4f %14s\n",
                          label.c_str(), r.hausdorff, r.frechet, "-");
        out << line;
    }
    return out.str();
}

}  // namespace tagnav
