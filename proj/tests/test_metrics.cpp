#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>
#include <thread>

#include "tagnav/metrics.hpp"

using namespace tagnav;

namespace {

PointSeq seq2(std::initializer_list<std::pair<double, double>> pts) {
    PointSeq out;
    for (const auto& [x, y] : pts) {
        Eigen::VectorXd v(2);
        v << x, y;
        out.push_back(v);
    }
    return out;
}

PointSeq random_polyline(std::mt19937& rng, int max_len, int dim = 2) {
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    PointSeq out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v(dim);
        for (int d = 0; d < dim; ++d) v(d) = u(rng);
        out.push_back(v);
    }
    return out;
}

/// Exhaustive monotone-coupling enumeration; independent of the DP.
double frechet_brute(const PointSeq& a, const PointSeq& b, size_t i, size_t j) {
    const double d = (a[i] - b[j]).norm();
    if (i == 0 && j == 0) return d;
    double best = std::numeric_limits<double>::infinity();
    if (i > 0) best = std::min(best, frechet_brute(a, b, i - 1, j));
    if (j > 0) best = std::min(best, frechet_brute(a, b, i, j - 1));
    if (i > 0 && j > 0) best = std::min(best, frechet_brute(a, b, i - 1, j - 1));
    return std::max(best, d);
}

double frechet_brute(const PointSeq& a, const PointSeq& b) {
    return frechet_brute(a, b, a.size() - 1, b.size() - 1);
}

}  // namespace

TEST_CASE("hausdorff of identical sequences is zero") {
    const auto a = seq2({{0, 0}, {1, 2}, {3, 1}});
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(discrete_frechet(a, a) == 0.0);
}

TEST_CASE("hausdorff parallel segments") {
    const auto a = seq2({{0, 0}, {1, 0}});
    const auto b = seq2({{0, 1}, {1, 1}});
    CHECK(hausdorff(a, b) == doctest::Approx(1.0));
}

TEST_CASE("hausdorff single pair is the euclidean distance") {
    const auto a = seq2({{0, 0}});
    const auto b = seq2({{3, 4}});
    CHECK(hausdorff(a, b) == doctest::Approx(5.0));
}

TEST_CASE("frechet parallel three-point paths") {
    const auto a = seq2({{0, 0}, {1, 0}, {2, 0}});
    const auto b = seq2({{0, 1}, {1, 1}, {2, 1}});
    CHECK(discrete_frechet(a, b) == doctest::Approx(1.0));
    CHECK(discrete_frechet(a, b) == doctest::Approx(frechet_brute(a, b)));
}

TEST_CASE("frechet is order sensitive") {
    const auto a = seq2({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
    auto b = a;
    std::reverse(b.begin(), b.end());
    CHECK(discrete_frechet(a, b) >= discrete_frechet(a, a));
}

TEST_CASE("empty or mismatched sequences rejected") {
    const auto a = seq2({{0, 0}});
    CHECK_THROWS_AS(hausdorff(a, {}), EmptyTrajectory);
    CHECK_THROWS_AS(discrete_frechet({}, a), EmptyTrajectory);
    PointSeq b;
    Eigen::VectorXd v(3);
    v << 1, 2, 3;
    b.push_back(v);
    CHECK_THROWS_AS(hausdorff(a, b), DimensionMismatch);
    CHECK_THROWS_AS(discrete_frechet(a, b), DimensionMismatch);
}

TEST_CASE("DP equals exhaustive coupling enumeration") {
    std::mt19937 rng(101);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_polyline(rng, 6);
        auto b = random_polyline(rng, 6);
        while (b.front().size() != a.front().size()) b = random_polyline(rng, 6);
        CHECK(discrete_frechet(a, b) == doctest::Approx(frechet_brute(a, b)));
    }
}

TEST_CASE("hausdorff is symmetric and bounded by frechet") {
    std::mt19937 rng(103);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_polyline(rng, 200);
        const auto b = random_polyline(rng, 200);
        const double h = hausdorff(a, b);
        CHECK(h == hausdorff(b, a));
        CHECK(h <= discrete_frechet(a, b) + 1e-12);
    }
}

TEST_CASE("metric axioms on equal-length aligned sequences") {
    std::mt19937 rng(107);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_polyline(rng, 20);
        CHECK(discrete_frechet(a, a) == 0.0);
        CHECK(hausdorff(a, a) == 0.0);
        auto b = a;
        b.back()(0) += 1.0;
        CHECK(discrete_frechet(a, b) > 0.0);
    }
}

TEST_CASE("both metrics are translation invariant") {
    std::mt19937 rng(109);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_polyline(rng, 30, 3);
        const auto b = random_polyline(rng, 30, 3);
        Eigen::VectorXd shift(3);
        shift << u(rng), u(rng), u(rng);
        PointSeq as = a, bs = b;
        for (auto& p : as) p += shift;
        for (auto& p : bs) p += shift;
        CHECK(std::abs(hausdorff(a, b) - hausdorff(as, bs)) < 1e-12);
        CHECK(std::abs(discrete_frechet(a, b) - discrete_frechet(as, bs)) < 1e-12);
    }
}

TEST_CASE("fps follows the definition frames / stage seconds") {
    const auto m = measure_fps([] { std::this_thread::sleep_for(std::chrono::milliseconds(30)); },
                               300, 3);
    // 300 frames in ~0.03 s -> ~10000 fps
    CHECK(m.mean > 3000.0);
    CHECK(m.mean < 30000.0);
    CHECK(m.repetitions == 3);
}

TEST_CASE("fps timing is stable across repetitions") {
    volatile double sink = 0.0;
    const auto stage = [&] {
        double acc = 0.0;
        for (int i = 0; i < 2000000; ++i) acc += std::sqrt(double(i));
        sink = acc;
    };
    const auto m = measure_fps(stage, 300, 5);
    CHECK(m.stddev / m.mean < 0.25);
}

TEST_CASE("fps scales roughly linearly in frame count") {
    volatile double sink = 0.0;
    const auto work = [&](long frames) {
        double acc = 0.0;
        for (long i = 0; i < frames * 5000; ++i) acc += std::sqrt(double(i));
        sink = acc;
    };
    const auto m1 = measure_fps([&] { work(300); }, 300, 3);
    const auto m2 = measure_fps([&] { work(600); }, 600, 3);
    CHECK(m2.mean == doctest::Approx(m1.mean).epsilon(0.2));
}

TEST_CASE("too few frames rejected") {
    CHECK_THROWS_AS(measure_fps([] {}, 50), TooFewFrames);
}

TEST_CASE("report JSON carries the table fields") {
    MetricReport r;
    r.hausdorff = 0.25;
    r.frechet = 2.0;
    r.n_points_a = 10;
    r.n_points_b = 12;
    r.config_digest = "abc";
    const auto j = to_json(r);
    CHECK(j.at("hausdorff") == 0.25);
    CHECK(j.at("frechet") == 2.0);
    CHECK(j.at("fps").is_null());
    CHECK(j.at("n_a") == 10);
    CHECK(j.at("config_digest") == "abc");
}
