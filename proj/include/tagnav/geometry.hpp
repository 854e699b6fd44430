#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagnav/errors.hpp"

namespace tagnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    double t = std::fmod(a + M_PI, 2.0 * M_PI);
    if (t <= 0.0) t += 2.0 * M_PI;
    return t - M_PI;
}

/**
 * 4-DOF UAV pose: position in the world frame plus yaw about the world
 * vertical axis. World frame is right-handed, +Z up, marker wall in the
 * plane y = 0; a camera with theta = +pi/2 looks toward +Y.
 */
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double theta = 0.0;  // wrapped to (-pi, pi]

    Pose() = default;
    Pose(double x_, double y_, double z_, double theta_)
        : x(x_), y(y_), z(z_), theta(wrap_angle(theta_)) {
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
            !std::isfinite(theta))
            throw NonFinite("Pose coordinates must be finite");
    }

    Vec3 position() const { return {x, y, z}; }

    /// Camera axes expressed in the world frame. Camera convention:
    /// +Z forward along the yaw heading, +X right, +Y down.
    Mat3 camera_to_world_rotation() const {
        const double c = std::cos(theta), s = std::sin(theta);
        Mat3 r;
        r.col(0) = Vec3(s, -c, 0.0);   // camera +X (right)
        r.col(1) = Vec3(0.0, 0.0, -1.0);  // camera +Y (down)
        r.col(2) = Vec3(c, s, 0.0);    // camera +Z (forward)
        return r;
    }

    Mat3 world_to_camera_rotation() const {
        return camera_to_world_rotation().transpose();
    }
};

/// Pinhole camera intrinsics (no distortion).
struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;  // focal lengths, px
    double cx = 0.0, cy = 0.0;  // principal point, px
    int width = 0, height = 0;  // image size, px

    CameraIntrinsics() = default;
    CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int w, int h)
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
        validate();
    }

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0))
            throw InvalidParameter("focal lengths must be positive");
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
            throw InvalidParameter("principal point must lie inside the image");
    }

    bool contains(const Vec2& px) const {
        return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
    }
};

/// One fiducial marker: id plus four 3-D corners in the world frame,
/// ordered TL, TR, BR, BL as seen from the camera side of the wall.
struct Marker {
    int id = 0;
    std::array<Vec3, 4> corners;

    static constexpr double kGeomTol = 1e-9;

    void validate() const {
        for (const auto& c : corners)
            if (!c.allFinite()) throw NonFinite("marker corner not finite");
        // coplanarity: distance of corner 3 from the plane of 0,1,2
        const Vec3 n = (corners[1] - corners[0]).cross(corners[2] - corners[0]);
        const double nn = n.norm();
        if (nn > 0.0) {
            const double d = std::abs(n.dot(corners[3] - corners[0])) / nn;
            if (d > kGeomTol) throw InvalidParameter("marker corners not coplanar");
        }
        const double side = (corners[1] - corners[0]).norm();
        for (int k = 0; k < 4; ++k) {
            const double len = (corners[(k + 1) % 4] - corners[k]).norm();
            if (std::abs(len - side) > kGeomTol)
                throw InvalidParameter("marker sides unequal");
        }
    }

    double side_length() const { return (corners[1] - corners[0]).norm(); }
};

/// Set of markers forming the landmark map.
struct MarkerMap {
    std::vector<Marker> markers;
    std::string frame = "world: right-handed, +Z up, wall plane y=0, units m";

    void validate() const {
        if (markers.empty()) throw InvalidParameter("marker map is empty");
        for (const auto& m : markers) m.validate();
        for (size_t i = 0; i < markers.size(); ++i)
            for (size_t j = i + 1; j < markers.size(); ++j)
                if (markers[i].id == markers[j].id)
                    throw InvalidParameter("duplicate marker id " +
                                           std::to_string(markers[i].id));
    }

    const Marker* find(int id) const {
        for (const auto& m : markers)
            if (m.id == id) return &m;
        return nullptr;
    }
};

/// Transform a world point into the camera frame of `camera_pose`.
inline Vec3 world_to_camera(const Pose& camera_pose, const Vec3& point) {
    return camera_pose.world_to_camera_rotation() * (point - camera_pose.position());
}

/// Project a camera-frame point through the pinhole model.
/// Throws BehindCamera when the depth is non-positive.
inline Vec2 project_camera_frame(const CameraIntrinsics& k, const Vec3& p_cam) {
    if (!p_cam.allFinite()) throw NonFinite("camera-frame point not finite");
    if (p_cam.z() <= 0.0) throw BehindCamera("point depth " + std::to_string(p_cam.z()));
    return {k.fx * p_cam.x() / p_cam.z() + k.cx,
            k.fy * p_cam.y() / p_cam.z() + k.cy};
}

/// Project a world point into pixels for a camera at `camera_pose`.
inline Vec2 project(const CameraIntrinsics& k, const Pose& camera_pose,
                    const Vec3& point) {
    if (!point.allFinite()) throw NonFinite("world point not finite");
    return project_camera_frame(k, world_to_camera(camera_pose, point));
}

/// Invert the projection at a given depth; returns a world point.
inline Vec3 back_project(const CameraIntrinsics& k, const Pose& camera_pose,
                         const Vec2& pixel, double depth) {
    if (depth <= 0.0) throw InvalidParameter("back-projection depth must be positive");
    const Vec3 p_cam((pixel.x() - k.cx) / k.fx * depth,
                     (pixel.y() - k.cy) / k.fy * depth, depth);
    return camera_pose.camera_to_world_rotation() * p_cam + camera_pose.position();
}

/**
 * Build a single-wall marker map: n markers in the plane y = 0, ids 1..n,
 * centers at x = (i-1)*spacing, z = center_height. Corners ordered
 * TL, TR, BR, BL as seen from -y.
 */
inline MarkerMap wall_marker_map(int n, double side, double spacing,
                                 double center_height) {
    if (n < 1) throw InvalidParameter("marker count must be >= 1");
    if (!(side > 0.0) || !(spacing > 0.0))
        throw InvalidParameter("side and spacing must be positive");
    MarkerMap map;
    const double h = side / 2.0;
    for (int i = 1; i <= n; ++i) {
        Marker m;
        m.id = i;
        const double cx = (i - 1) * spacing;
        const double cz = center_height;
        m.corners = {Vec3(cx - h, 0.0, cz + h), Vec3(cx + h, 0.0, cz + h),
                     Vec3(cx + h, 0.0, cz - h), Vec3(cx - h, 0.0, cz - h)};
        map.markers.push_back(m);
    }
    map.validate();
    return map;
}

// ---- JSON file formats ------------------------------------------------

inline nlohmann::json to_json(const MarkerMap& map) {
    nlohmann::json j;
    j["frame"] = map.frame;
    j["markers"] = nlohmann::json::array();
    for (const auto& m : map.markers) {
        nlohmann::json jm;
        jm["id"] = m.id;
        jm["corners"] = nlohmann::json::array();
        for (const auto& c : m.corners)
            jm["corners"].push_back({c.x(), c.y(), c.z()});
        j["markers"].push_back(jm);
    }
    return j;
}

inline MarkerMap marker_map_from_json(const nlohmann::json& j) {
    MarkerMap map;
    if (!j.contains("markers")) throw SchemaError("marker map missing \"markers\"");
    if (j.contains("frame")) map.frame = j.at("frame").get<std::string>();
    for (const auto& jm : j.at("markers")) {
        Marker m;
        if (!jm.contains("id")) throw SchemaError("marker missing \"id\"");
        if (!jm.contains("corners")) throw SchemaError("marker missing \"corners\"");
        m.id = jm.at("id").get<int>();
        const auto& jc = jm.at("corners");
        if (jc.size() != 4) throw SchemaError("marker must have 4 corners");
        for (int k = 0; k < 4; ++k)
            m.corners[k] = Vec3(jc[k][0].get<double>(), jc[k][1].get<double>(),
                                jc[k][2].get<double>());
        map.markers.push_back(m);
    }
    map.validate();
    return map;
}

inline nlohmann::json to_json(const CameraIntrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
            {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
    for (const char* field : {"fx", "fy", "cx", "cy", "width", "height"})
        if (!j.contains(field))
            throw SchemaError(std::string("intrinsics missing \"") + field + "\"");
    return CameraIntrinsics(j.at("fx").get<double>(), j.at("fy").get<double>(),
                            j.at("cx").get<double>(), j.at("cy").get<double>(),
                            j.at("width").get<int>(), j.at("height").get<int>());
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline MarkerMap read_marker_map(const std::string& path) {
    return marker_map_from_json(load_json_file(path));
}

inline CameraIntrinsics read_intrinsics(const std::string& path) {
    return intrinsics_from_json(load_json_file(path));
}

/// Default simulation intrinsics for the 856x480 camera. The focal length
/// is configuration, not a measured value.
inline CameraIntrinsics default_intrinsics() {
    return CameraIntrinsics(537.0, 537.0, 428.0, 240.0, 856, 480);
}

///// Default 8-marker wall: 0.2 m tags, 0.58 m spacing, centers 0.724 m high.
inline MarkerMap default_wall_map() {
    return wall_marker_map(8, 0.2, 0.58, 0.724);
}

}  // namespace tagnav
