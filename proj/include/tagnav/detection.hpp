#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagnav/geometry.hpp"
#include "tagnav/trajectory.hpp"

namespace tagnav {

/// One detected marker in one frame. Corner order TL, TR, BR, BL.
/// This record is the boundary where a real detector plugs into the
/// pipeline; anything that writes the JSONL format below can feed it.
struct Detection {
    double t = 0.0;
    long frame = 0;
    int id = 0;
    std::array<Vec2, 4> corners;
    double confidence = 1.0;

    void validate() const {
        if (confidence < 0.0 || confidence > 1.0)
            throw SchemaError("confidence " + std::to_string(confidence) +
                              " outside [0, 1]");
        for (const auto& c : corners)
            if (!c.allFinite()) throw NonFinite("detection corner not finite");
    }
};

/// Shoelace sum of the corner quad in pixel coordinates (v axis down).
/// TL,TR,BR,BL ordering gives a positive sign.
inline double corner_winding(const std::array<Vec2, 4>& corners) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Vec2& a = corners[k];
        const Vec2& b = corners[(k + 1) % 4];
        s += a.x() * b.y() - b.x() * a.y();
    }
    return s;
}

enum class ConfidenceModel {
    Fixed,       // constant value (default 1.0)
    SigmaDecay,  // 1 / (1 + pixel_sigma), lower confidence for noisier corners
};

/// Corruption model applied to exact corner projections.
struct NoiseSpec {
    double pixel_sigma = 0.0;   // std-dev of additive Gaussian noise per coord
    double dropout_prob = 0.0;  // probability a visible marker is dropped
    ConfidenceModel confidence_model = ConfidenceModel::Fixed;
    double fixed_confidence = 1.0;
    uint64_t seed = 0;

    void validate() const {
        if (pixel_sigma < 0.0) throw InvalidParameter("pixel_sigma must be >= 0");
        if (dropout_prob < 0.0 || dropout_prob > 1.0)
            throw InvalidParameter("dropout_prob must be in [0, 1]");
    }

    double confidence() const {
        return confidence_model == ConfidenceModel::Fixed
                   ? fixed_confidence
                   : 1.0 / (1.0 + pixel_sigma);
    }
};

/**
 * Generate detections for every frame of a camera path. A marker produces a
 * detection iff all four exact corner projections are in front of the camera
 * and inside the image; partially visible markers yield nothing, matching
 * whole-box detector behavior. Deterministic for a fixed seed.
 */
inline std::vector<Detection> synthesize_detections(const MarkerMap& map,
                                                    const CameraIntrinsics& intr,
                                                    const PosePath& camera_path,
                                                    const NoiseSpec& noise) {
    noise.validate();
    map.validate();
    for (size_t i = 1; i < camera_path.size(); ++i)
        if (!(camera_path[i].t > camera_path[i - 1].t))
            throw InvalidParameter("camera path timestamps must be strictly increasing");

    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<Detection> out;
    for (size_t fi = 0; fi < camera_path.size(); ++fi) {
        const auto& tp = camera_path[fi];
        for (const auto& marker : map.markers) {
            std::array<Vec2, 4> exact;
            bool visible = true;
            for (int k = 0; k < 4 && visible; ++k) {
                const Vec3 p_cam = world_to_camera(tp.pose, marker.corners[k]);
                if (!p_cam.allFinite()) throw NonFinite("marker corner projection");
                if (p_cam.z() <= 0.0) {
                    visible = false;
                    break;
                }
                exact[k] = project_camera_frame(intr, p_cam);
                if (!intr.contains(exact[k])) visible = false;
            }
            if (!visible) continue;
            // RNG draws happen only for visible markers so streams stay
            // aligned across configs that differ in noise alone.
            if (noise.dropout_prob > 0.0 && uni(rng) < noise.dropout_prob) continue;
            Detection d;
            d.t = tp.t;
            d.frame = static_cast<long>(fi);
            d.id = marker.id;
            d.confidence = noise.confidence();
            for (int k = 0; k < 4; ++k) {
                d.corners[k] = exact[k];
                if (noise.pixel_sigma > 0.0) {
                    d.corners[k].x() += noise.pixel_sigma * gauss(rng);
                    d.corners[k].y() += noise.pixel_sigma * gauss(rng);
                }
            }
            out.push_back(d);
        }
    }
    return out;
}

/// Keep detections with confidence >= min_confidence, order preserved.
inline std::vector<Detection> threshold(const std::vector<Detection>& dets,
                                        double min_confidence) {
    std::vector<Detection> out;
    for (const auto& d : dets)
        if (d.confidence >= min_confidence) out.push_back(d);
    return out;
}

/// Pipeline default confidence threshold.
inline constexpr double kDefaultConfidenceThreshold = 0.5;

// ---- JSONL detections file --------------------------------------------

inline nlohmann::json to_json(const Detection& d) {
    nlohmann::json j;
    j["t"] = d.t;
    j["frame"] = d.frame;
    j["id"] = d.id;
    j["corners"] = nlohmann::json::array();
    for (const auto& c : d.corners) j["corners"].push_back({c.x(), c.y()});
    j["conf"] = d.confidence;
    return j;
}

inline std::string detections_to_jsonl(const std::vector<Detection>& dets) {
    std::ostringstream out;
    for (const auto& d : dets) out << to_json(d).dump() << "\n";
    return out.str();
}

inline void write_detections(const std::vector<Detection>& dets,
                             const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << detections_to_jsonl(dets);
}

inline std::vector<Detection> read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<Detection> dets;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string where = path + ":" + std::to_string(lineno);
        for (const char* field : {"t", "frame", "id", "corners", "conf"})
            if (!j.contains(field))
                throw SchemaError(where + ": missing \"" + field + "\"");
        Detection d;
        d.t = j.at("t").get<double>();
        d.frame = j.at("frame").get<long>();
        d.id = j.at("id").get<int>();
        const auto& jc = j.at("corners");
        if (jc.size() != 4) throw SchemaError(where + ": need exactly 4 corners");
        for (int k = 0; k < 4; ++k)
            d.corners[k] = Vec2(jc[k][0].get<double>(), jc[k][1].get<double>());
        d.confidence = j.at("conf").get<double>();
        try {
            d.validate();
        } catch (const Error& e) {
            throw SchemaError(where + ": " + e.what());
        }
        if (corner_winding(d.corners) <= 0.0)
            throw SchemaError(where + ": corner winding is not TL,TR,BR,BL");
        dets.push_back(d);
    }
    return dets;
}

}  // namespace tagnav
