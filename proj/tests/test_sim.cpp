#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "tagnav/sim.hpp"

using namespace tagnav;

namespace {

namespace fs = std::filesystem;

std::string temp_dir(const char* name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir.string();
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.profile.center_x = 2.03;
    c.profile.duration = 10.0;
    return c;
}

}  // namespace

TEST_CASE("zero-amplitude spiral hovers at the center") {
    TrajectoryProfile p;
    p.amplitude_x = p.amplitude_y = p.altitude_amplitude = 0.0;
    p.center_x = 0.0;
    p.center_y = -3.0;
    p.base_altitude = 1.2;
    p.duration = 2.0;
    const auto path = generate_reference(p, RoomSpec{});
    REQUIRE(!path.empty());
    for (const auto& tp : path) {
        CHECK(tp.pose.x == doctest::Approx(0.0));
        CHECK(tp.pose.y == doctest::Approx(-3.0));
        CHECK(tp.pose.z == doctest::Approx(1.2));
        CHECK(tp.pose.theta == doctest::Approx(M_PI_2));
    }
}

TEST_CASE("rectangular lap time equals both perimeters over speed") {
    TrajectoryProfile p;
    p.kind = ProfileKind::RectangularEight;
    p.amplitude_x = 1.0;
    p.amplitude_y = 0.5;
    p.speed = 0.5;
    p.center_x = 2.0;
    p.center_y = -3.0;
    // full figure: two rectangles, each of perimeter 2*(ax + 2*ay) = 4
    const double lap = 2.0 * (2.0 * (p.amplitude_x + 2.0 * p.amplitude_y)) / p.speed;
    p.duration = lap + 1.0;
    const auto path = generate_reference(p, RoomSpec{});
    const Vec3 start = path.front().pose.position();
    const long lap_frame = std::lround(lap * p.frame_rate);
    REQUIRE(lap_frame < static_cast<long>(path.size()));
    const Vec3 after = path[lap_frame].pose.position();
    CHECK((after - start).norm() < p.speed / p.frame_rate + 1e-9);
}

TEST_CASE("rectangular speed is constant between samples") {
    TrajectoryProfile p;
    p.kind = ProfileKind::RectangularEight;
    p.center_x = 2.0;
    p.duration = 20.0;
    const auto path = generate_reference(p, RoomSpec{});
    for (size_t i = 1; i < path.size(); ++i) {
        const double ds = (path[i].pose.position() - path[i - 1].pose.position()).norm();
        const double dt = path[i].t - path[i - 1].t;
        // corner frames can split a step across two segments, shortening it
        CHECK(ds <= p.speed * dt + 1e-9);
    }
}

TEST_CASE("default profiles stay inside the room") {
    for (ProfileKind kind : {ProfileKind::SpiralEight, ProfileKind::RectangularEight}) {
        TrajectoryProfile p;
        p.kind = kind;
        p.center_x = 2.03;
        p.duration = 60.0;
        const auto path = generate_reference(p, RoomSpec{});
        CHECK(path.size() == 1800);
    }
}

TEST_CASE("out-of-room profiles are rejected with the offending sample") {
    TrajectoryProfile p;
    p.amplitude_y = 4.0;  // reaches past the wall plane
    p.center_x = 2.03;
    CHECK_THROWS_AS(generate_reference(p, RoomSpec{}), OutOfRoom);
}

TEST_CASE("reference poses respect pose invariants") {
    TrajectoryProfile p;
    p.center_x = 2.03;
    p.duration = 15.0;
    for (const auto& tp : generate_reference(p, RoomSpec{})) {
        CHECK(tp.pose.theta > -M_PI);
        CHECK(tp.pose.theta <= M_PI);
        CHECK(std::isfinite(tp.pose.x));
    }
}

TEST_CASE("visibility sanity: most frames see at least four markers") {
    const ExperimentConfig c = default_config();
    const auto path = generate_reference(c.profile, c.room);
    const auto dets = synthesize_detections(c.marker_map(), c.camera(), path, {});
    std::map<long, int> per_frame;
    for (const auto& d : dets) per_frame[d.frame]++;
    long good = 0;
    for (const auto& [frame, count] : per_frame)
        if (count >= 4) ++good;
    CHECK(double(good) >= 0.5 * double(path.size()));
}

TEST_CASE("zero-noise experiment reproduces the reference trajectory") {
    const std::string dir = temp_dir("tagnav_sim_clean");
    const auto art = run_experiment(default_config(), dir);
    CHECK(art.raw_report.hausdorff < 1e-6);
    CHECK(art.warnings.empty());
    CHECK(fs::exists(fs::path(dir) / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("experiments are deterministic: identical artifacts byte for byte") {
    ExperimentConfig c = default_config();
    c.noise.pixel_sigma = 2.0;
    c.noise.dropout_prob = 0.2;
    c.seed = 7;
    c.noise.seed = 7;
    const std::string dir1 = temp_dir("tagnav_sim_det1");
    const std::string dir2 = temp_dir("tagnav_sim_det2");
    run_experiment(c, dir1);
    run_experiment(c, dir2);
    for (const char* name :
         {"ground_truth.csv", "detections.jsonl", "raw_trajectory.csv",
          "filtered_trajectory.csv", "report_raw.json", "report_filtered.json",
          "manifest.json"}) {
        CAPTURE(name);
        CHECK(read_file((fs::path(dir1) / name).string()) ==
              read_file((fs::path(dir2) / name).string()));
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("re-running from the manifest reproduces the artifacts") {
    ExperimentConfig c = default_config();
    c.noise.pixel_sigma = 1.0;
    c.seed = 11;
    c.noise.seed = 11;
    const std::string dir1 = temp_dir("tagnav_sim_man1");
    const auto art = run_experiment(c, dir1);
    const ExperimentConfig replay =
        experiment_config_from_json(art.manifest.at("config"));
    const std::string dir2 = temp_dir("tagnav_sim_man2");
    const auto art2 = run_experiment(replay, dir2);
    CHECK(art.manifest.at("artifacts") == art2.manifest.at("artifacts"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("heavy dropout raises a coverage warning") {
    ExperimentConfig c = default_config();
    c.profile.duration = 5.0;
    c.noise.dropout_prob = 0.97;
    const std::string dir = temp_dir("tagnav_sim_warn");
    const auto art = run_experiment(c, dir);
    CHECK(!art.warnings.empty());
    fs::remove_all(dir);
}

TEST_CASE("config JSON round trip preserves every field") {
    ExperimentConfig c = default_config();
    c.seed = 23;
    c.noise.pixel_sigma = 1.5;
    c.filter.cutoff = 4.0;
    c.min_markers = 2;
    c.mode = PnpMode::SixDOF;
    const auto j = to_json(c);
    const ExperimentConfig back = experiment_config_from_json(j);
    CHECK(to_json(back) == j);
}
