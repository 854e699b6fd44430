#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagnav/butterworth.hpp"
#include "tagnav/detection.hpp"
#include "tagnav/geometry.hpp"
#include "tagnav/metrics.hpp"
#include "tagnav/pnp.hpp"
#include "tagnav/trajectory.hpp"

namespace tagnav {

enum class ProfileKind { SpiralEight, RectangularEight };

/**
 * Parametric reference flight path in front of the wall. The spiral eight is
 * a Lissajous figure-eight with sinusoidal altitude; the rectangular eight
 * is two adjoined axis-aligned rectangles traversed at constant speed with
 * instantaneous corner turns. Yaw faces the wall (+y) at all times.
 */
struct TrajectoryProfile {
    ProfileKind kind = ProfileKind::SpiralEight;
    double amplitude_x = 1.5;        // m
    double amplitude_y = 0.8;        // m
    double base_altitude = 1.2;      // m
    double altitude_amplitude = 0.3; // m (spiral only)
    double period = 20.0;            // s, horizontal figure (spiral only)
    double altitude_period = 20.0;   // s (spiral only)
    double speed = 0.3;              // m/s (rectangular only)
    double duration = 30.0;          // s
    double frame_rate = 30.0;        // Hz
    double center_x = 0.0;           // m, figure center
    double center_y = -3.0;          // m, distance from the wall plane y = 0

    void validate() const {
        if (!(duration > 0.0)) throw InvalidParameter("duration must be positive");
        if (!(frame_rate > 0.0)) throw InvalidParameter("frame rate must be positive");
        if (amplitude_x < 0.0 || amplitude_y < 0.0 || altitude_amplitude < 0.0)
            throw InvalidParameter("amplitudes must be >= 0");
        if (kind == ProfileKind::SpiralEight &&
            (!(period > 0.0) || !(altitude_period > 0.0)))
            throw InvalidParameter("periods must be positive");
        if (kind == ProfileKind::RectangularEight && !(speed > 0.0))
            throw InvalidParameter("speed must be positive");
    }
};

/// Axis-aligned flight volume. The box spans [origin, origin + extent];
/// defaults place the wall plane y = 0 at the +y face and the floor at z = 0.
struct RoomSpec {
    double extent_x = 6.10, extent_y = 5.85, extent_z = 2.44;  // m
    double origin_x = -1.02, origin_y = -5.85, origin_z = 0.0; // m

    void validate() const {
        if (!(extent_x > 0.0) || !(extent_y > 0.0) || !(extent_z > 0.0))
            throw InvalidParameter("room extents must be positive");
    }

    bool contains(const Vec3& p) const {
        return p.x() >= origin_x && p.x() <= origin_x + extent_x &&
               p.y() >= origin_y && p.y() <= origin_y + extent_y &&
               p.z() >= origin_z && p.z() <= origin_z + extent_z;
    }
};

namespace detail {

inline Vec3 rectangular_eight_position(const TrajectoryProfile& p, double t) {
    const double ax = p.amplitude_x, ay = p.amplitude_y;
    // Right rectangle counter-clockwise, then left rectangle, sharing the
    // center edge at x = center_x.
    const std::vector<Vec2> wp = {
        {0, -ay},  {ax, -ay}, {ax, ay}, {0, ay},  {0, -ay},
        {-ax, -ay}, {-ax, ay}, {0, ay},  {0, -ay},
    };
    std::vector<double> seg_len;
    double total = 0.0;
    for (size_t i = 0; i + 1 < wp.size(); ++i) {
        seg_len.push_back((wp[i + 1] - wp[i]).norm());
        total += seg_len.back();
    }
    double s = std::fmod(p.speed * t, total);
    for (size_t i = 0; i + 1 < wp.size(); ++i) {
        if (s <= seg_len[i] || i + 2 == wp.size()) {
            const double f = seg_len[i] > 0.0 ? s / seg_len[i] : 0.0;
            const Vec2 q = wp[i] + f * (wp[i + 1] - wp[i]);
            return {p.center_x + q.x(), p.center_y + q.y(), p.base_altitude};
        }
        s -= seg_len[i];
    }
    return {p.center_x + wp.back().x(), p.center_y + wp.back().y(), p.base_altitude};
}

}  // namespace detail

/// Position of the reference path at time t (before room checks).
inline Vec3 reference_position(const TrajectoryProfile& p, double t) {
    if (p.kind == ProfileKind::SpiralEight) {
        const double x = p.center_x + p.amplitude_x * std::sin(2.0 * M_PI * t / p.period);
        const double y = p.center_y + p.amplitude_y * std::sin(4.0 * M_PI * t / p.period);
        const double z = p.base_altitude +
                         p.altitude_amplitude * std::sin(2.0 * M_PI * t / p.altitude_period);
        return {x, y, z};
    }
    return detail::rectangular_eight_position(p, t);
}

/// Sample the reference path at the profile frame rate, validating every
/// sample against the room bounds.
inline PosePath generate_reference(const TrajectoryProfile& profile,
                                   const RoomSpec& room) {
    profile.validate();
    room.validate();
    const long n = std::lround(profile.duration * profile.frame_rate);
    if (n < 1) throw InvalidParameter("duration too short for one frame");
    PosePath path;
    path.reserve(n);
    for (long i = 0; i < n; ++i) {
        const double t = double(i) / profile.frame_rate;
        const Vec3 pos = reference_position(profile, t);
        if (!room.contains(pos))
            throw OutOfRoom("sample at t=" + fmt_g9(t) + " leaves the room: (" +
                            fmt_g9(pos.x()) + ", " + fmt_g9(pos.y()) + ", " +
                            fmt_g9(pos.z()) + ")");
        path.push_back({t, Pose(pos.x(), pos.y(), pos.z(), M_PI_2)});
    }
    return path;
}

// ---- experiment configuration -----------------------------------------

struct FilterConfig {
    int order = 2;
    std::optional<double> cutoff;   // rad/s; unset -> spectrum-based
    double energy_fraction = 0.95;
    double cutoff_margin = 4.0;     // multiplier applied to the suggested cutoff
};

struct ExperimentConfig {
    uint64_t seed = 1;
    std::optional<std::string> map_file;
    int map_n = 8;
    double map_side = 0.2, map_spacing = 0.58, map_height = 0.724;
    std::optional<std::string> intrinsics_file;
    CameraIntrinsics intrinsics = default_intrinsics();
    TrajectoryProfile profile;
    RoomSpec room;
    NoiseSpec noise;
    double min_confidence = kDefaultConfidenceThreshold;
    FilterConfig filter;
    int min_markers = 1;
    PnpMode mode = PnpMode::FourDOF;

    MarkerMap marker_map() const {
        return map_file ? read_marker_map(*map_file)
                        : wall_marker_map(map_n, map_side, map_spacing, map_height);
    }

    CameraIntrinsics camera() const {
        return intrinsics_file ? read_intrinsics(*intrinsics_file) : intrinsics;
    }
};

inline ProfileKind profile_kind_from_string(const std::string& s) {
    if (s == "spiral_eight") return ProfileKind::SpiralEight;
    if (s == "rectangular_eight") return ProfileKind::RectangularEight;
    throw SchemaError("unknown profile kind \"" + s + "\"");
}

inline std::string to_string(ProfileKind k) {
    return k == ProfileKind::SpiralEight ? "spiral_eight" : "rectangular_eight";
}

inline TrajectoryProfile profile_from_json(const nlohmann::json& j) {
    TrajectoryProfile p;
    if (j.contains("kind")) p.kind = profile_kind_from_string(j.at("kind"));
    p.amplitude_x = j.value("amplitude_x", p.amplitude_x);
    p.amplitude_y = j.value("amplitude_y", p.amplitude_y);
    p.base_altitude = j.value("base_altitude", p.base_altitude);
    p.altitude_amplitude = j.value("altitude_amplitude", p.altitude_amplitude);
    p.period = j.value("period", p.period);
    p.altitude_period = j.value("altitude_period", p.period);
    p.speed = j.value("speed", p.speed);
    p.duration = j.value("duration", p.duration);
    p.frame_rate = j.value("frame_rate", p.frame_rate);
    p.center_x = j.value("center_x", p.center_x);
    p.center_y = j.value("center_y", p.center_y);
    return p;
}

inline nlohmann::json to_json(const TrajectoryProfile& p) {
    return {{"kind", to_string(p.kind)},
            {"amplitude_x", p.amplitude_x},
            {"amplitude_y", p.amplitude_y},
            {"base_altitude", p.base_altitude},
            {"altitude_amplitude", p.altitude_amplitude},
            {"period", p.period},
            {"altitude_period", p.altitude_period},
            {"speed", p.speed},
            {"duration", p.duration},
            {"frame_rate", p.frame_rate},
            {"center_x", p.center_x},
            {"center_y", p.center_y}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("map")) {
        const auto& jm = j.at("map");
        if (jm.contains("file")) {
            c.map_file = jm.at("file").get<std::string>();
        } else {
            c.map_n = jm.value("n", c.map_n);
            c.map_side = jm.value("side", c.map_side);
            c.map_spacing = jm.value("spacing", c.map_spacing);
            c.map_height = jm.value("center_height", c.map_height);
        }
    }
    if (j.contains("intrinsics")) {
        const auto& ji = j.at("intrinsics");
        if (ji.contains("file"))
            c.intrinsics_file = ji.at("file").get<std::string>();
        else
            c.intrinsics = intrinsics_from_json(ji);
    }
    if (j.contains("profile")) c.profile = profile_from_json(j.at("profile"));
    if (j.contains("room")) {
        const auto& jr = j.at("room");
        c.room.extent_x = jr.value("extent_x", c.room.extent_x);
        c.room.extent_y = jr.value("extent_y", c.room.extent_y);
        c.room.extent_z = jr.value("extent_z", c.room.extent_z);
        c.room.origin_x = jr.value("origin_x", c.room.origin_x);
        c.room.origin_y = jr.value("origin_y", c.room.origin_y);
        c.room.origin_z = jr.value("origin_z", c.room.origin_z);
    }
    if (j.contains("noise")) {
        const auto& jn = j.at("noise");
        c.noise.pixel_sigma = jn.value("pixel_sigma", 0.0);
        c.noise.dropout_prob = jn.value("dropout_prob", 0.0);
        c.noise.fixed_confidence = jn.value("confidence", 1.0);
        if (jn.value("confidence_model", std::string("fixed")) == "sigma_decay")
            c.noise.confidence_model = ConfidenceModel::SigmaDecay;
    }
    c.noise.seed = c.seed;
    c.min_confidence = j.value("min_confidence", c.min_confidence);
    if (j.contains("filter")) {
        const auto& jf = j.at("filter");
        c.filter.order = jf.value("order", c.filter.order);
        if (jf.contains("cutoff") && !jf.at("cutoff").is_null())
            c.filter.cutoff = jf.at("cutoff").get<double>();
        c.filter.energy_fraction = jf.value("energy_fraction", c.filter.energy_fraction);
        c.filter.cutoff_margin = jf.value("cutoff_margin", c.filter.cutoff_margin);
    }
    c.min_markers = j.value("min_markers", c.min_markers);
    if (j.value("mode", std::string("four_dof")) == "six_dof")
        c.mode = PnpMode::SixDOF;
    return c;
}

/// Fully resolved echo of a configuration (every effective parameter).
inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    if (c.map_file)
        j["map"] = {{"file", *c.map_file}};
    else
        j["map"] = {{"n", c.map_n},
                    {"side", c.map_side},
                    {"spacing", c.map_spacing},
                    {"center_height", c.map_height}};
    j["intrinsics"] = c.intrinsics_file ? nlohmann::json{{"file", *c.intrinsics_file}}
                                        : to_json(c.camera());
    j["profile"] = to_json(c.profile);
    j["room"] = {{"extent_x", c.room.extent_x}, {"extent_y", c.room.extent_y},
                 {"extent_z", c.room.extent_z}, {"origin_x", c.room.origin_x},
                 {"origin_y", c.room.origin_y}, {"origin_z", c.room.origin_z}};
    j["noise"] = {{"pixel_sigma", c.noise.pixel_sigma},
                  {"dropout_prob", c.noise.dropout_prob},
                  {"confidence", c.noise.fixed_confidence},
                  {"confidence_model",
                   c.noise.confidence_model == ConfidenceModel::Fixed ? "fixed"
                                                                      : "sigma_decay"}};
    j["min_confidence"] = c.min_confidence;
    j["filter"] = {{"order", c.filter.order},
                   {"cutoff", c.filter.cutoff ? nlohmann::json(*c.filter.cutoff)
                                              : nlohmann::json(nullptr)},
                   {"energy_fraction", c.filter.energy_fraction},
                   {"cutoff_margin", c.filter.cutoff_margin}};
    j["min_markers"] = c.min_markers;
    j["mode"] = c.mode == PnpMode::FourDOF ? "four_dof" : "six_dof";
    return j;
}

// ---- orchestration ----------------------------------------------------

inline uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ParseError("cannot open " + tmp + " for writing");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// ZOH-filled per-axis position signals of a trajectory (for spectra).
inline std::array<std::vector<double>, 3> position_signals(const Trajectory& traj) {
    std::array<std::vector<double>, 3> sig;
    size_t first = 0;
    while (first < traj.points.size() && !traj.points[first].has_pose) ++first;
    if (first == traj.points.size()) throw EmptyInput("trajectory has no poses");
    Vec3 held = traj.points[first].pose.position();
    for (const auto& p : traj.points) {
        if (p.has_pose) held = p.pose.position();
        for (int a = 0; a < 3; ++a) sig[a].push_back(held[a]);
    }
    return sig;
}

/// Spectrum-based cutoff for a trajectory. The signal band edge is the
/// largest per-axis suggestion times a safety margin; axes with negligible
/// motion are ignored, since their spectrum is pure estimator noise and
/// would push the suggestion toward Nyquist. The cutoff is then placed at
/// the log-midpoint between the band edge and Nyquist: high enough that the
/// causal group delay stays small against the path speed, low enough to
/// shed most of the noise bandwidth.
inline double auto_cutoff(const Trajectory& raw, double sample_rate,
                          double energy_fraction, double margin) {
    const auto sig = position_signals(raw);
    std::array<double, 3> energy{};
    double emax = 0.0;
    for (int a = 0; a < 3; ++a) {
        double mean = 0.0;
        for (double v : sig[a]) mean += v;
        mean /= double(sig[a].size());
        for (double v : sig[a]) energy[a] += (v - mean) * (v - mean);
        emax = std::max(emax, energy[a]);
    }
    if (!(emax > 0.0)) return 0.95 * M_PI * sample_rate;
    double band = 0.0;
    for (int a = 0; a < 3; ++a)
        if (energy[a] > 1e-2 * emax)
            band = std::max(band, suggest_cutoff(sig[a], sample_rate,
                                                 energy_fraction));
    const double nyquist = M_PI * sample_rate;
    const double edge = std::min(band * margin, 0.95 * nyquist);
    return std::min(std::sqrt(edge * nyquist), 0.95 * nyquist);
}

struct ExperimentArtifacts {
    std::string dir;
    MetricReport raw_report;
    MetricReport filtered_report;
    double cutoff_used = 0.0;
    PosePath reference;
    Trajectory raw;
    Trajectory filtered;
    std::vector<std::string> warnings;
    nlohmann::json manifest;
};

/**
 * End-to-end experiment: synthesize -> estimate -> filter -> evaluate.
 * All stage boundaries pass through files in out_dir, so the monolithic run
 * and the equivalent CLI pipeline produce identical artifacts. Deterministic
 * for a fixed seed.
 */
inline ExperimentArtifacts run_experiment(const ExperimentConfig& config,
                                          const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto file = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

    ExperimentArtifacts art;
    art.dir = out_dir;

    const MarkerMap map = config.marker_map();
    const CameraIntrinsics intr = config.camera();
    art.reference = generate_reference(config.profile, config.room);
    write_file_atomic(file("ground_truth.csv"),
                      trajectory_to_csv(path_to_trajectory(art.reference)));

    const auto dets =
        synthesize_detections(map, intr, art.reference, config.noise);
    write_file_atomic(file("detections.jsonl"), detections_to_jsonl(dets));

    const auto dets_in = read_detections(file("detections.jsonl"));
    const auto kept = threshold(dets_in, config.min_confidence);

    FrameTimeline timeline{0.0, config.profile.frame_rate,
                           static_cast<long>(art.reference.size())};
    Trajectory raw = estimate_trajectory(kept, map, intr, config.mode,
                                         config.min_markers, {}, timeline);
    write_file_atomic(file("raw_trajectory.csv"), trajectory_to_csv(raw));
    art.raw = read_trajectory(file("raw_trajectory.csv"));

    const size_t gaps = art.raw.points.size() - art.raw.pose_count();
    if (art.raw.points.empty() || art.raw.pose_count() == 0) {
        art.warnings.push_back("no frames produced a pose estimate");
    } else if (double(gaps) > 0.2 * double(art.raw.points.size())) {
        art.warnings.push_back("frame coverage low: " + std::to_string(gaps) + "/" +
                               std::to_string(art.raw.points.size()) +
                               " frames are gap records");
    }

    const std::string digest =
        hex64(fnv1a64(to_json(config).dump()));

    const Trajectory truth = read_trajectory(file("ground_truth.csv"));
    const double frame_period = 1.0 / config.profile.frame_rate;

    if (art.raw.pose_count() > 0) {
        art.cutoff_used = config.filter.cutoff
                              ? *config.filter.cutoff
                              : auto_cutoff(art.raw, config.profile.frame_rate,
                                            config.filter.energy_fraction,
                                            config.filter.cutoff_margin);
        FilterSpec spec{config.filter.order, art.cutoff_used,
                        config.profile.frame_rate};
        Trajectory filtered = filter_trajectory(spec, art.raw);
        write_file_atomic(file("filtered_trajectory.csv"),
                          trajectory_to_csv(filtered));
        art.filtered = read_trajectory(file("filtered_trajectory.csv"));

        art.raw_report = evaluate_trajectories(art.raw, truth, frame_period);
        art.filtered_report = evaluate_trajectories(art.filtered, truth, frame_period);
        art.raw_report.config_digest = digest;
        art.filtered_report.config_digest = digest;
        write_file_atomic(file("report_raw.json"),
                          to_json(art.raw_report).dump(2) + "\n");
        write_file_atomic(file("report_filtered.json"),
                          to_json(art.filtered_report).dump(2) + "\n");
    }

    nlohmann::json manifest;
    manifest["config"] = to_json(config);
    manifest["config_digest"] = digest;
    manifest["cutoff_used"] = art.cutoff_used;
    manifest["warnings"] = art.warnings;
    manifest["artifacts"] = nlohmann::json::object();
    for (const char* name : {"ground_truth.csv", "detections.jsonl",
                             "raw_trajectory.csv", "filtered_trajectory.csv",
                             "report_raw.json", "report_filtered.json"}) {
        if (fs::exists(file(name)))
            manifest["artifacts"][name] = hex64(fnv1a64(read_file(file(name))));
    }
    art.manifest = manifest;
    write_file_atomic(file("manifest.json"), manifest.dump(2) + "\n");
    return art;
}

}  // namespace tagnav
