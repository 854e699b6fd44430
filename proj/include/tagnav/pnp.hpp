#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "tagnav/detection.hpp"
#include "tagnav/geometry.hpp"
#include "tagnav/trajectory.hpp"

namespace tagnav {

/// One 3D-2D point pair with a positive weight.
struct Correspondence {
    Vec3 world;
    Vec2 image;
    double weight = 1.0;
};

enum class WeightPolicy { Uniform, ConfidenceProportional };

enum class PnpMode { FourDOF, SixDOF };

struct SolveOptions {
    int max_iters = 50;
    double step_tol = 1e-10;
    double grad_tol = 1e-9;  // on the gradient of the weighted squared cost
};

struct PoseEstimate {
    Pose pose;
    Mat3 rotation = Mat3::Identity();  // world-to-camera, 6-DOF view
    double reprojection_rms = 0.0;     // unweighted, px
    int num_markers = 0;
    int num_points = 0;
    bool converged = false;
    int iterations = 0;
};

/// Expand per-frame detections into 4 correspondences each, corner order
/// aligned with the map (TL-TL, ...).
inline std::vector<Correspondence> build_correspondences(
    const std::vector<Detection>& frame_dets, const MarkerMap& map,
    WeightPolicy policy = WeightPolicy::Uniform) {
    std::vector<Correspondence> corrs;
    corrs.reserve(frame_dets.size() * 4);
    for (const auto& d : frame_dets) {
        const Marker* m = map.find(d.id);
        if (!m) throw UnknownMarkerId("id " + std::to_string(d.id));
        const double w =
            policy == WeightPolicy::ConfidenceProportional ? d.confidence : 1.0;
        for (int k = 0; k < 4; ++k)
            corrs.push_back({m->corners[k], d.corners[k], w});
    }
    return corrs;
}

namespace detail {

struct RigidTransform {
    Mat3 rotation;  // world to camera
    Vec3 translation;
};

/// EPnP-style linear initialization. Uses 4 control points in general
/// position and falls back to 3 control points spanning the marker plane
/// when the world-point scatter is (near) planar, which is the normal case
/// for a single wall of tags.
inline RigidTransform epnp_initialize(const std::vector<Correspondence>& corrs,
                                      const CameraIntrinsics& intr) {
    const int n = static_cast<int>(corrs.size());
    Vec3 centroid = Vec3::Zero();
    for (const auto& c : corrs) centroid += c.world;
    centroid /= n;

    Mat3 scatter = Mat3::Zero();
    for (const auto& c : corrs) {
        const Vec3 d = c.world - centroid;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    const Vec3 evals = eig.eigenvalues();  // ascending
    const Mat3 evecs = eig.eigenvectors();
    if (!(evals(2) > 0.0))
        throw DegenerateConfiguration("world points are coincident");
    const bool planar = evals(0) / evals(2) < 1e-6;
    if (evals(1) / evals(2) < 1e-6)
        throw DegenerateConfiguration("world points are collinear");

    const int m = planar ? 3 : 4;
    std::vector<Vec3> ctrl(m);
    ctrl[0] = centroid;
    for (int k = 1; k < m; ++k) {
        const int axis = 2 - (k - 1);  // principal directions, largest first
        ctrl[k] = centroid + std::sqrt(evals(axis) / n) * evecs.col(axis);
    }

    // Barycentric coordinates of each world point in the control frame.
    Eigen::MatrixXd basis(3, m - 1);
    for (int k = 1; k < m; ++k) basis.col(k - 1) = ctrl[k] - ctrl[0];
    const auto basis_qr = basis.colPivHouseholderQr();
    Eigen::MatrixXd alphas(n, m);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd a = basis_qr.solve(corrs[i].world - centroid);
        alphas(i, 0) = 1.0 - a.sum();
        for (int k = 1; k < m; ++k) alphas(i, k) = a(k - 1);
    }

    // Linear system in the camera-frame control point coordinates.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 3 * m);
    for (int i = 0; i < n; ++i) {
        const double u = corrs[i].image.x(), v = corrs[i].image.y();
        for (int k = 0; k < m; ++k) {
            const double a = alphas(i, k);
            M(2 * i, 3 * k) = a * intr.fx;
            M(2 * i, 3 * k + 2) = a * (intr.cx - u);
            M(2 * i + 1, 3 * k + 1) = a * intr.fy;
            M(2 * i + 1, 3 * k + 2) = a * (intr.cy - v);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    const Eigen::VectorXd null_vec = svd.matrixV().col(3 * m - 1);

    std::vector<Vec3> cam_ctrl(m);
    for (int k = 0; k < m; ++k) cam_ctrl[k] = null_vec.segment<3>(3 * k);

    // Scale so inter-control-point distances match the world frame.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double dc = (cam_ctrl[i] - cam_ctrl[j]).norm();
            const double dw = (ctrl[i] - ctrl[j]).norm();
            num += dc * dw;
            den += dc * dc;
        }
    if (!(den > 0.0)) throw DegenerateConfiguration("null-space collapse in EPnP");
    double beta = num / den;

    std::vector<Vec3> cam_pts(n);
    double depth_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec3 p = Vec3::Zero();
        for (int k = 0; k < m; ++k) p += alphas(i, k) * (beta * cam_ctrl[k]);
        cam_pts[i] = p;
        depth_sum += p.z();
    }
    if (depth_sum < 0.0)
        for (auto& p : cam_pts) p = -p;

    // Rigid alignment (Kabsch) world -> camera.
    Vec3 wbar = centroid, pbar = Vec3::Zero();
    for (const auto& p : cam_pts) pbar += p;
    pbar /= n;
    Mat3 h = Mat3::Zero();
    for (int i = 0; i < n; ++i)
        h += (corrs[i].world - wbar) * (cam_pts[i] - pbar).transpose();
    Eigen::JacobiSVD<Mat3> hsvd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = hsvd.matrixV() * hsvd.matrixU().transpose();
    if (r.determinant() < 0.0) {
        Mat3 v = hsvd.matrixV();
        v.col(2) *= -1.0;
        r = v * hsvd.matrixU().transpose();
    }
    return {r, pbar - r * wbar};
}

/// Yaw of the camera forward axis in the world frame (Z-Y-X convention).
inline double yaw_from_rotation(const Mat3& world_to_cam) {
    return std::atan2(world_to_cam(2, 1), world_to_cam(2, 0));
}

constexpr double kMinDepth = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Weighted squared reprojection cost of a 4-DOF pose; infinite when any
/// point falls behind the camera.
inline double cost_4dof(const std::vector<Correspondence>& corrs,
                        const CameraIntrinsics& intr, const Pose& pose) {
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    double cost = 0.0;
    for (const auto& corr : corrs) {
        const double dx = corr.world.x() - pose.x;
        const double dy = corr.world.y() - pose.y;
        const double dz = corr.world.z() - pose.z;
        const double X = s * dx - c * dy;
        const double Y = -dz;
        const double Z = c * dx + s * dy;
        if (Z <= kMinDepth) return kInf;
        const double ru = intr.fx * X / Z + intr.cx - corr.image.x();
        const double rv = intr.fy * Y / Z + intr.cy - corr.image.y();
        cost += corr.weight * (ru * ru + rv * rv);
    }
    return cost;
}

/// Residuals (sqrt(w)-scaled) and Jacobian wrt (x, y, z, theta).
inline bool residuals_4dof(const std::vector<Correspondence>& corrs,
                           const CameraIntrinsics& intr, const Pose& pose,
                           Eigen::VectorXd& rho, Eigen::MatrixXd& jac) {
    const int n = static_cast<int>(corrs.size());
    rho.resize(2 * n);
    jac.resize(2 * n, 4);
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    for (int i = 0; i < n; ++i) {
        const auto& corr = corrs[i];
        const double dx = corr.world.x() - pose.x;
        const double dy = corr.world.y() - pose.y;
        const double dz = corr.world.z() - pose.z;
        const double X = s * dx - c * dy;
        const double Y = -dz;
        const double Z = c * dx + s * dy;
        if (Z <= kMinDepth) return false;
        const double sw = std::sqrt(corr.weight);
        rho(2 * i) = sw * (intr.fx * X / Z + intr.cx - corr.image.x());
        rho(2 * i + 1) = sw * (intr.fy * Y / Z + intr.cy - corr.image.y());
        // dX/dp, dY/dp, dZ/dp for p = (x, y, z, theta)
        const double Xp[4] = {-s, c, 0.0, Z};
        const double Yp[4] = {0.0, 0.0, 1.0, 0.0};
        const double Zp[4] = {-c, -s, 0.0, -X};
        const double z2 = Z * Z;
        for (int p = 0; p < 4; ++p) {
            jac(2 * i, p) = sw * intr.fx * (Xp[p] * Z - X * Zp[p]) / z2;
            jac(2 * i + 1, p) = sw * intr.fy * (Yp[p] * Z - Y * Zp[p]) / z2;
        }
    }
    return true;
}

inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return s;
}

inline Mat3 exp_so3(const Vec3& w) {
    const double a = w.norm();
    if (a < 1e-12) return Mat3::Identity() + skew(w);
    const Vec3 axis = w / a;
    return Eigen::AngleAxisd(a, axis).toRotationMatrix();
}

struct State6 {
    Mat3 rotation;  // world to camera
    Vec3 center;    // camera center in world
};

inline double cost_6dof(const std::vector<Correspondence>& corrs,
                        const CameraIntrinsics& intr, const State6& st) {
    double cost = 0.0;
    for (const auto& corr : corrs) {
        const Vec3 p = st.rotation * (corr.world - st.center);
        if (p.z() <= kMinDepth) return kInf;
        const double ru = intr.fx * p.x() / p.z() + intr.cx - corr.image.x();
        const double rv = intr.fy * p.y() / p.z() + intr.cy - corr.image.y();
        cost += corr.weight * (ru * ru + rv * rv);
    }
    return cost;
}

inline bool residuals_6dof(const std::vector<Correspondence>& corrs,
                           const CameraIntrinsics& intr, const State6& st,
                           Eigen::VectorXd& rho, Eigen::MatrixXd& jac) {
    const int n = static_cast<int>(corrs.size());
    rho.resize(2 * n);
    jac.resize(2 * n, 6);
    for (int i = 0; i < n; ++i) {
        const auto& corr = corrs[i];
        const Vec3 p = st.rotation * (corr.world - st.center);
        if (p.z() <= kMinDepth) return false;
        const double sw = std::sqrt(corr.weight);
        rho(2 * i) = sw * (intr.fx * p.x() / p.z() + intr.cx - corr.image.x());
        rho(2 * i + 1) = sw * (intr.fy * p.y() / p.z() + intr.cy - corr.image.y());
        Eigen::Matrix<double, 2, 3> pin;
        const double z2 = p.z() * p.z();
        pin << intr.fx / p.z(), 0, -intr.fx * p.x() / z2, 0, intr.fy / p.z(),
            -intr.fy * p.y() / z2;
        Eigen::Matrix<double, 3, 6> dp;
        dp.block<3, 3>(0, 0) = -st.rotation;  // d p_cam / d center
        dp.block<3, 3>(0, 3) = -skew(p);      // left perturbation of R
        jac.block<2, 6>(2 * i, 0) = sw * pin * dp;
    }
    return true;
}

}  // namespace detail

/// Gradient of the weighted squared reprojection cost wrt (x, y, z, theta).
inline Eigen::Vector4d cost_gradient_4dof(const std::vector<Correspondence>& corrs,
                                          const CameraIntrinsics& intr,
                                          const Pose& pose) {
    Eigen::VectorXd rho;
    Eigen::MatrixXd jac;
    if (!detail::residuals_4dof(corrs, intr, pose, rho, jac))
        throw BehindCamera("cost gradient undefined behind camera");
    return 2.0 * jac.transpose() * rho;
}

inline double reprojection_cost(const std::vector<Correspondence>& corrs,
                                const CameraIntrinsics& intr, const Pose& pose) {
    return detail::cost_4dof(corrs, intr, pose);
}

/**
 * Estimate the camera pose minimizing the weighted squared reprojection
 * error. EPnP linear initialization (planar-aware) followed by
 * Gauss-Newton refinement with Levenberg damping. FourDOF constrains the
 * rotation to yaw about the world vertical axis; SixDOF refines the full
 * rotation and reports theta as the yaw of the forward axis.
 */
inline PoseEstimate solve_pose(const std::vector<Correspondence>& corrs,
                               const CameraIntrinsics& intr,
                               PnpMode mode = PnpMode::FourDOF,
                               const SolveOptions& options = {}) {
    const int n = static_cast<int>(corrs.size());
    if (n < 6)
        throw InsufficientPoints("need >= 6 correspondences, got " +
                                 std::to_string(n));
    for (const auto& c : corrs)
        if (!(c.weight > 0.0) || !std::isfinite(c.weight))
            throw InvalidParameter("correspondence weights must be positive finite");

    const detail::RigidTransform init = detail::epnp_initialize(corrs, intr);
    const Vec3 center0 = -init.rotation.transpose() * init.translation;

    PoseEstimate est;
    est.num_points = n;
    est.num_markers = n / 4;

    Eigen::VectorXd rho;
    Eigen::MatrixXd jac;

    if (mode == PnpMode::FourDOF) {
        Pose pose(center0.x(), center0.y(), center0.z(),
                  detail::yaw_from_rotation(init.rotation));
        double cost = detail::cost_4dof(corrs, intr, pose);
        if (!std::isfinite(cost)) {
            // Linear init landed outside the valid depth region; rescue with
            // coarse yaw restarts around the same center.
            for (double dth : {M_PI, M_PI_2, -M_PI_2}) {
                Pose cand(pose.x, pose.y, pose.z, pose.theta + dth);
                const double c = detail::cost_4dof(corrs, intr, cand);
                if (c < cost) {
                    cost = c;
                    pose = cand;
                }
            }
            if (!std::isfinite(cost))
                throw DegenerateConfiguration(
                    "no initialization with all points in front of the camera");
        }

        if (!detail::residuals_4dof(corrs, intr, pose, rho, jac))
            throw DegenerateConfiguration("initial pose places points at zero depth");
        {
            Eigen::JacobiSVD<Eigen::MatrixXd> jsvd(jac);
            const auto& sv = jsvd.singularValues();
            if (sv(sv.size() - 1) < 1e-10 * sv(0))
                throw DegenerateConfiguration("rank-deficient observation geometry");
        }

        double lambda = 1e-3;
        double last_step = detail::kInf;
        while (est.iterations < options.max_iters) {
            if (!detail::residuals_4dof(corrs, intr, pose, rho, jac)) break;
            const Eigen::Vector4d g = jac.transpose() * rho;
            if (2.0 * g.norm() < options.grad_tol) {
                est.converged = true;
                break;
            }
            const Eigen::Matrix4d h = jac.transpose() * jac;
            bool accepted = false;
            while (lambda < 1e14) {
                Eigen::Matrix4d hd = h;
                hd.diagonal() += lambda * h.diagonal();
                const Eigen::Vector4d step = hd.ldlt().solve(-g);
                Pose cand(pose.x + step(0), pose.y + step(1), pose.z + step(2),
                          pose.theta + step(3));
                const double cand_cost = detail::cost_4dof(corrs, intr, cand);
                if (cand_cost < cost) {
                    pose = cand;
                    cost = cand_cost;
                    lambda = std::max(lambda / 10.0, 1e-15);
                    last_step = step.norm();
                    accepted = true;
                    break;
                }
                lambda *= 10.0;
            }
            ++est.iterations;
            if (!accepted) break;
            if (last_step < options.step_tol) {
                est.converged = true;
                break;
            }
        }
        // Near the optimum the cost decrease falls below double rounding and
        // the LM acceptance test stalls with a small but nonzero gradient;
        // a few undamped Gauss-Newton steps drive it to machine level.
        for (int it = 0; it < 8; ++it) {
            if (!detail::residuals_4dof(corrs, intr, pose, rho, jac)) break;
            const Eigen::Vector4d g = jac.transpose() * rho;
            if (2.0 * g.norm() < options.grad_tol) {
                est.converged = true;
                break;
            }
            const Eigen::Vector4d step =
                (jac.transpose() * jac).ldlt().solve(Eigen::Vector4d(-g));
            const Pose cand(pose.x + step(0), pose.y + step(1), pose.z + step(2),
                            pose.theta + step(3));
            if (!std::isfinite(detail::cost_4dof(corrs, intr, cand))) break;
            pose = cand;
        }
        est.pose = pose;
        const double ct = std::cos(pose.theta), st = std::sin(pose.theta);
        Mat3 r;
        r << st, -ct, 0, 0, 0, -1, ct, st, 0;
        est.rotation = r;
        est.reprojection_rms = [&] {
            double ssq = 0.0;
            for (const auto& corr : corrs) {
                const Vec2 p = project(intr, pose, corr.world);
                ssq += (p - corr.image).squaredNorm();
            }
            return std::sqrt(ssq / n);
        }();
        return est;
    }

    // SixDOF
    detail::State6 st{init.rotation, center0};
    double cost = detail::cost_6dof(corrs, intr, st);
    if (!std::isfinite(cost))
        throw DegenerateConfiguration(
            "no initialization with all points in front of the camera");
    if (!detail::residuals_6dof(corrs, intr, st, rho, jac))
        throw DegenerateConfiguration("initial pose places points at zero depth");
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> jsvd(jac);
        const auto& sv = jsvd.singularValues();
        if (sv(sv.size() - 1) < 1e-10 * sv(0))
            throw DegenerateConfiguration("rank-deficient observation geometry");
    }
    double lambda = 1e-3;
    while (est.iterations < options.max_iters) {
        if (!detail::residuals_6dof(corrs, intr, st, rho, jac)) break;
        const Eigen::Matrix<double, 6, 1> g = jac.transpose() * rho;
        if (2.0 * g.norm() < options.grad_tol) {
            est.converged = true;
            break;
        }
        const Eigen::Matrix<double, 6, 6> h = jac.transpose() * jac;
        bool accepted = false;
        double step_norm = 0.0;
        while (lambda < 1e14) {
            Eigen::Matrix<double, 6, 6> hd = h;
            hd.diagonal() += lambda * h.diagonal();
            const Eigen::Matrix<double, 6, 1> step = hd.ldlt().solve(-g);
            detail::State6 cand{detail::exp_so3(step.tail<3>()) * st.rotation,
                                st.center + step.head<3>()};
            const double cand_cost = detail::cost_6dof(corrs, intr, cand);
            if (cand_cost < cost) {
                st = cand;
                cost = cand_cost;
                lambda = std::max(lambda / 10.0, 1e-15);
                step_norm = step.norm();
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        ++est.iterations;
        if (!accepted) break;
        if (step_norm < options.step_tol) {
            est.converged = true;
            break;
        }
    }
    for (int it = 0; it < 8; ++it) {
        if (!detail::residuals_6dof(corrs, intr, st, rho, jac)) break;
        const Eigen::Matrix<double, 6, 1> g = jac.transpose() * rho;
        if (2.0 * g.norm() < options.grad_tol) {
            est.converged = true;
            break;
        }
        const Eigen::Matrix<double, 6, 1> step =
            (jac.transpose() * jac).ldlt().solve(Eigen::Matrix<double, 6, 1>(-g));
        const detail::State6 cand{detail::exp_so3(step.tail<3>()) * st.rotation,
                                  st.center + step.head<3>()};
        if (!std::isfinite(detail::cost_6dof(corrs, intr, cand))) break;
        st = cand;
    }
    est.rotation = st.rotation;
    est.pose = Pose(st.center.x(), st.center.y(), st.center.z(),
                    detail::yaw_from_rotation(st.rotation));
    double ssq = 0.0;
    for (const auto& corr : corrs) {
        const Vec3 p = st.rotation * (corr.world - st.center);
        const Vec2 px = project_camera_frame(intr, p);
        ssq += (px - corr.image).squaredNorm();
    }
    est.reprojection_rms = std::sqrt(ssq / n);
    return est;
}

/// Optional frame timeline for trajectory estimation; supplies frames that
/// produced no detections at all.
struct FrameTimeline {
    double t0 = 0.0;
    double frame_rate = 30.0;
    long n_frames = 0;
};

/**
 * Per-frame pose estimation over a detection stream. Frames with fewer than
 * min_markers usable detections, or whose solve fails, become explicit gap
 * records carrying the cause.
 */
inline Trajectory estimate_trajectory(const std::vector<Detection>& dets,
                                      const MarkerMap& map,
                                      const CameraIntrinsics& intr,
                                      PnpMode mode = PnpMode::FourDOF,
                                      int min_markers = 1,
                                      const SolveOptions& options = {},
                                      std::optional<FrameTimeline> timeline = {},
                                      WeightPolicy policy = WeightPolicy::Uniform) {
    std::map<long, std::vector<Detection>> by_frame;
    for (const auto& d : dets) by_frame[d.frame].push_back(d);

    long n_frames = 0;
    double t0 = 0.0, period = 1.0 / 30.0;
    if (timeline) {
        n_frames = timeline->n_frames;
        t0 = timeline->t0;
        period = 1.0 / timeline->frame_rate;
    } else {
        if (dets.empty()) return {};
        const long f_first = dets.front().frame, f_last = dets.back().frame;
        n_frames = f_last + 1;
        t0 = dets.front().t - f_first * period;
        if (f_last > f_first)
            period = (dets.back().t - dets.front().t) / double(f_last - f_first);
        t0 = dets.front().t - f_first * period;
    }

    Trajectory traj;
    traj.points.reserve(n_frames);
    for (long f = 0; f < n_frames; ++f) {
        TrajectoryPoint p;
        p.frame = f;
        const auto it = by_frame.find(f);
        const std::vector<Detection>* frame_dets =
            it == by_frame.end() ? nullptr : &it->second;
        p.t = frame_dets ? frame_dets->front().t : t0 + f * period;
        if (!frame_dets) {
            p.cause = "no-detections";
        } else if (static_cast<int>(frame_dets->size()) < min_markers) {
            p.cause = "insufficient-markers";
            p.n_markers = static_cast<int>(frame_dets->size());
        } else {
            try {
                const auto corrs = build_correspondences(*frame_dets, map, policy);
                const PoseEstimate est = solve_pose(corrs, intr, mode, options);
                p.has_pose = true;
                p.pose = est.pose;
                p.rms = est.reprojection_rms;
                p.n_markers = static_cast<int>(frame_dets->size());
                p.converged = est.converged;
            } catch (const Error& e) {
                p.has_pose = false;
                p.n_markers = static_cast<int>(frame_dets->size());
                std::string what = e.what();
                p.cause = what.substr(0, what.find(':'));
            }
        }
        traj.points.push_back(p);
    }
    return traj;
}

}  // namespace tagnav
