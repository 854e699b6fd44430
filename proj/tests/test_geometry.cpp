#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tagnav/geometry.hpp"

using namespace tagnav;

TEST_CASE("angle wrapping lands in (-pi, pi]") {
    CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = wrap_angle(u(rng));
        CHECK(a > -M_PI);
        CHECK(a <= M_PI);
    }
}

TEST_CASE("optical-axis point maps to the principal point") {
    const CameraIntrinsics k(1, 1, 0, 0, 1, 1);
    const Vec2 px = project_camera_frame(k, Vec3(0, 0, 1));
    CHECK(px.x() == doctest::Approx(0.0));
    CHECK(px.y() == doctest::Approx(0.0));
}

TEST_CASE("projection formula direct evaluation") {
    const CameraIntrinsics k(100, 100, 428, 240, 856, 480);
    const Vec2 px = project_camera_frame(k, Vec3(1, 2, 2));
    CHECK(px.x() == doctest::Approx(478.0));
    CHECK(px.y() == doctest::Approx(340.0));
}

TEST_CASE("negative depth raises BehindCamera") {
    const CameraIntrinsics k(100, 100, 428, 240, 856, 480);
    CHECK_THROWS_AS(project_camera_frame(k, Vec3(0, 0, -1)), BehindCamera);
    CHECK_THROWS_AS(project_camera_frame(k, Vec3(0, 0, 0)), BehindCamera);
}

TEST_CASE("non-finite input raises NonFinite") {
    const CameraIntrinsics k(100, 100, 428, 240, 856, 480);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(project(k, Pose(), Vec3(nan, 0, 1)), NonFinite);
}

TEST_CASE("camera at theta=pi/2 looks toward +y") {
    const CameraIntrinsics k = default_intrinsics();
    const Pose cam(0, -3, 1, M_PI_2);
    // a point straight ahead on the wall projects to the principal point
    const Vec2 px = project(k, cam, Vec3(0, 0, 1));
    CHECK(px.x() == doctest::Approx(k.cx));
    CHECK(px.y() == doctest::Approx(k.cy));
    // +x world is to the right in the image at this heading
    CHECK(project(k, cam, Vec3(0.5, 0, 1)).x() > k.cx);
    // +z world is up, which is -v in the image
    CHECK(project(k, cam, Vec3(0, 0, 1.5)).y() < k.cy);
}

TEST_CASE("projection is homogeneous in depth") {
    const CameraIntrinsics k = default_intrinsics();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> lam(0.1, 10.0);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p(u(rng), u(rng), 1.0 + std::abs(u(rng)) * 5.0);
        const double s = lam(rng);
        const Vec2 a = project_camera_frame(k, p);
        const Vec2 b = project_camera_frame(k, s * p);
        CHECK((a - b).norm() < 1e-9);
    }
}

TEST_CASE("back-project then project is the identity") {
    const CameraIntrinsics k = default_intrinsics();
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> uu(0.0, 856.0), vv(0.0, 480.0);
    std::uniform_real_distribution<double> dd(0.2, 20.0), ang(-M_PI, M_PI);
    std::uniform_real_distribution<double> pos(-5.0, 5.0);
    for (int i = 0; i < 500; ++i) {
        const Pose cam(pos(rng), pos(rng), pos(rng), ang(rng));
        const Vec2 px(uu(rng), vv(rng));
        const double depth = dd(rng);
        const Vec3 world = back_project(k, cam, px, depth);
        const Vec2 again = project(k, cam, world);
        CHECK((again - px).norm() < 1e-9);
    }
}

TEST_CASE("wall map from the experiment parameters") {
    const MarkerMap map = wall_marker_map(8, 0.2, 0.58, 0.724);
    REQUIRE(map.markers.size() == 8);
    const Marker& m1 = map.markers.front();
    CHECK(m1.id == 1);
    CHECK((m1.corners[0] - Vec3(-0.1, 0, 0.824)).norm() < 1e-12);
    CHECK((m1.corners[1] - Vec3(0.1, 0, 0.824)).norm() < 1e-12);
    CHECK((m1.corners[2] - Vec3(0.1, 0, 0.624)).norm() < 1e-12);
    CHECK((m1.corners[3] - Vec3(-0.1, 0, 0.624)).norm() < 1e-12);
}

TEST_CASE("wall map unit geometry") {
    const MarkerMap map = wall_marker_map(1, 2.0, 1.0, 1.0);
    const Marker& m = map.markers.front();
    CHECK((m.corners[0] - Vec3(-1, 0, 2)).norm() < 1e-12);
    CHECK((m.corners[2] - Vec3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("neighboring marker centers are one spacing apart") {
    const MarkerMap map = wall_marker_map(2, 0.2, 0.58, 0.724);
    Vec3 c0 = Vec3::Zero(), c1 = Vec3::Zero();
    for (int k = 0; k < 4; ++k) {
        c0 += map.markers[0].corners[k] / 4.0;
        c1 += map.markers[1].corners[k] / 4.0;
    }
    CHECK((c1 - c0).norm() == doctest::Approx(0.58));
}

TEST_CASE("wall map rejects invalid parameters") {
    CHECK_THROWS_AS(wall_marker_map(0, 0.2, 0.58, 0.7), InvalidParameter);
    CHECK_THROWS_AS(wall_marker_map(2, -0.2, 0.58, 0.7), InvalidParameter);
    CHECK_THROWS_AS(wall_marker_map(2, 0.2, 0.0, 0.7), InvalidParameter);
}

TEST_CASE("wall map satisfies marker invariants for random parameters") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> nn(1, 12);
    std::uniform_real_distribution<double> sd(0.01, 2.0), sp(0.01, 3.0),
        hh(0.1, 3.0);
    for (int i = 0; i < 200; ++i) {
        const MarkerMap map = wall_marker_map(nn(rng), sd(rng), sp(rng), hh(rng));
        CHECK_NOTHROW(map.validate());
    }
}

TEST_CASE("intrinsics invariants") {
    CHECK_THROWS_AS(CameraIntrinsics(-1, 537, 428, 240, 856, 480), InvalidParameter);
    CHECK_THROWS_AS(CameraIntrinsics(537, 537, 900, 240, 856, 480), InvalidParameter);
}

TEST_CASE("marker map JSON round trip") {
    const MarkerMap map = default_wall_map();
    const MarkerMap back = marker_map_from_json(to_json(map));
    REQUIRE(back.markers.size() == map.markers.size());
    for (size_t i = 0; i < map.markers.size(); ++i) {
        CHECK(back.markers[i].id == map.markers[i].id);
        for (int k = 0; k < 4; ++k)
            CHECK((back.markers[i].corners[k] - map.markers[i].corners[k]).norm() ==
                  0.0);
    }
    CHECK(back.frame == map.frame);
}

TEST_CASE("intrinsics JSON round trip and schema errors") {
    const CameraIntrinsics k = default_intrinsics();
    const CameraIntrinsics back = intrinsics_from_json(to_json(k));
    CHECK(back.fx == k.fx);
    CHECK(back.width == k.width);
    nlohmann::json bad = to_json(k);
    bad.erase("fy");
    CHECK_THROWS_AS(intrinsics_from_json(bad), SchemaError);
}

TEST_CASE("duplicate marker ids rejected") {
    MarkerMap map = wall_marker_map(2, 0.2, 0.58, 0.724);
    map.markers[1].id = map.markers[0].id;
    CHECK_THROWS_AS(map.validate(), InvalidParameter);
}
