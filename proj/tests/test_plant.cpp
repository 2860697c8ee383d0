#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "softrl/geometry.hpp"
#include "softrl/plant.hpp"

using namespace softrl;
using namespace softrl::plant;

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

Mat3 mat_add(const Mat3& a, const Mat3& b, double s) {
    Mat3 c;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c[i][j] = a[i][j] + s * b[i][j];
    return c;
}

// Independent tip oracle: RK4 integration of the moving-frame ODE
//   r' = R e3,  R' = R [u]x,  u = kappa * (-sin phi, cos phi, 0)
Vec3 rk4_arc_tip(double kappa, double phi, double length, int steps) {
    Mat3 uhat{};  // skew(u)
    double ux = -kappa * std::sin(phi), uy = kappa * std::cos(phi);
    uhat[0][1] = 0.0 - 0.0;
    uhat[0][2] = uy;
    uhat[1][2] = -ux;
    uhat[1][0] = 0.0;
    uhat[2][0] = -uy;
    uhat[2][1] = ux;

    Mat3 rot{};
    rot[0][0] = rot[1][1] = rot[2][2] = 1.0;
    Vec3 pos{0, 0, 0};
    double h = length / steps;

    auto tangent = [](const Mat3& r) { return Vec3{r[0][2], r[1][2], r[2][2]}; };
    for (int s = 0; s < steps; ++s) {
        // k1..k4 for both position and rotation
        Vec3 k1p = tangent(rot);
        Mat3 k1r = mat_mul(rot, uhat);
        Mat3 r2 = mat_add(rot, k1r, h / 2);
        Vec3 k2p = tangent(r2);
        Mat3 k2r = mat_mul(r2, uhat);
        Mat3 r3 = mat_add(rot, k2r, h / 2);
        Vec3 k3p = tangent(r3);
        Mat3 k3r = mat_mul(r3, uhat);
        Mat3 r4 = mat_add(rot, k3r, h);
        Vec3 k4p = tangent(r4);
        Mat3 k4r = mat_mul(r4, uhat);
        for (int i = 0; i < 3; ++i)
            pos[i] += h / 6.0 * (k1p[i] + 2 * k2p[i] + 2 * k3p[i] + k4p[i]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                rot[i][j] += h / 6.0 * (k1r[i][j] + 2 * k2r[i][j] + 2 * k3r[i][j] + k4r[i][j]);
    }
    return pos;
}

}  // namespace

TEST_CASE("play operator: zero half-width is the identity") {
    HysteresisState s;
    s.state = {3, 4, 5};
    auto [next, eff] = play_update(s, {10, 20, 30}, 0.0);
    CHECK(eff == Pressures{10, 20, 30});
    CHECK(next.state == Pressures{10, 20, 30});
}

TEST_CASE("play operator: hand-stepped up/down sweep branches") {
    // h = 2, sweep 0 -> 10 -> 6 in 1 kPa steps; ascending branch at 6 gives 4,
    // descending branch at 6 gives 8
    const double h = 2.0;
    HysteresisState s;
    s.state = {0, 0, 0};
    double eff_at_6_up = -1;
    for (int p = 1; p <= 10; ++p) {
        auto [next, eff] = play_update(s, {double(p), 0, 0}, h);
        s = next;
        if (p == 6) eff_at_6_up = eff[0];
    }
    CHECK(eff_at_6_up == doctest::Approx(4.0));
    double eff_at_6_down = -1;
    for (int p = 9; p >= 6; --p) {
        auto [next, eff] = play_update(s, {double(p), 0, 0}, h);
        s = next;
        if (p == 6) eff_at_6_down = eff[0];
    }
    CHECK(eff_at_6_down == doctest::Approx(8.0));
}

TEST_CASE("play operator: constant input is a fixed point") {
    HysteresisState s;
    s.state = {1, 1, 1};
    for (int i = 0; i < 5; ++i) {
        auto [next, eff] = play_update(s, {7, 7, 7}, 1.5);
        CHECK(eff == next.state);
        if (i > 0) CHECK(next.state == s.state);
        s = next;
    }
    CHECK(std::abs(s.state[0] - 5.5) < 1e-12);  // engaged at 7 - 1.5
}

TEST_CASE("play operator: rate independence on monotone segments") {
    const double h = 1.7;
    HysteresisState coarse;
    coarse.state = {0, 0, 0};
    for (double p : {4.0, 9.0, 2.0}) coarse = play_update(coarse, {p, p, p}, h).first;

    HysteresisState fine;
    fine.state = {0, 0, 0};
    for (double p = 0.5; p <= 4.0; p += 0.5) fine = play_update(fine, {p, p, p}, h).first;
    for (double p = 4.25; p <= 9.0; p += 0.25) fine = play_update(fine, {p, p, p}, h).first;
    for (double p = 8.9; p >= 2.0; p -= 0.1) fine = play_update(fine, {p, p, p}, h).first;
    fine = play_update(fine, {2.0, 2.0, 2.0}, h).first;

    for (int c = 0; c < 3; ++c) CHECK(fine.state[c] == doctest::Approx(coarse.state[c]).epsilon(1e-12));
}

TEST_CASE("pcc forward: zero pressure gives the straight rest shape") {
    PlantParams params;
    auto keys = pcc_forward({0, 0, 0}, params);
    REQUIRE(keys.size() == 5);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        CHECK(std::abs(keys[i].x) < 1e-12);
        CHECK(std::abs(keys[i].y) < 1e-12);
        CHECK(keys[i].z == doctest::Approx(70.0 * i / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("pcc forward: symmetric pressures give pure elongation") {
    PlantParams params;
    const double c = 20.0;
    auto keys = pcc_forward({c, c, c}, params);
    CHECK(std::abs(keys.back().x) < 1e-12);
    CHECK(std::abs(keys.back().y) < 1e-12);
    CHECK(keys.back().z == doctest::Approx(70.0 + 3 * params.elong_gain * c).epsilon(1e-12));
}

TEST_CASE("pcc forward: tip matches RK4 integration of the frame ODE") {
    PlantParams params;
    const Pressures p{10, 0, 0};
    auto arc = pcc_arc_params(p, params);
    auto keys = pcc_forward(p, params);
    Vec3 oracle = rk4_arc_tip(arc.curvature, arc.plane_angle, arc.arc_length, 2000);
    CHECK(std::abs(keys.back().x - oracle[0]) < 1e-6);
    CHECK(std::abs(keys.back().y - oracle[1]) < 1e-6);
    CHECK(std::abs(keys.back().z - oracle[2]) < 1e-6);

    const Pressures q{35, 12, 50};
    auto arc2 = pcc_arc_params(q, params);
    auto keys2 = pcc_forward(q, params);
    Vec3 oracle2 = rk4_arc_tip(arc2.curvature, arc2.plane_angle, arc2.arc_length, 2000);
    CHECK(std::abs(keys2.back().x - oracle2[0]) < 1e-6);
    CHECK(std::abs(keys2.back().y - oracle2[1]) < 1e-6);
    CHECK(std::abs(keys2.back().z - oracle2[2]) < 1e-6);
}

TEST_CASE("pcc forward: keys lie on one circular arc") {
    PlantParams params;
    params.n_keys = 7;
    auto keys = pcc_forward({25, 3, 10}, params);
    auto arc = pcc_arc_params({25, 3, 10}, params);
    REQUIRE(arc.curvature > 1e-6);
    auto fit = geometry::fit_circle_3d(std::vector<geometry::Point3>(keys.begin() + 1, keys.end()));
    CHECK(fit.residual < 1e-6);
    CHECK(fit.radius == doctest::Approx(1.0 / arc.curvature).epsilon(1e-9));
}

TEST_CASE("pcc forward: cyclic chamber rotation rotates the body by 120 degrees") {
    PlantParams params;
    const Pressures p{24, 7, 41};
    const Pressures rotated{p[2], p[0], p[1]};
    auto keys = pcc_forward(p, params);
    auto keys_rot = pcc_forward(rotated, params);
    // chambers sit at azimuths 0, -120, +120 degrees, so the shift rotates by -120
    const double c = std::cos(-2 * M_PI / 3), s = std::sin(-2 * M_PI / 3);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        geometry::Point3 expect{c * keys[i].x - s * keys[i].y, s * keys[i].x + c * keys[i].y,
                                keys[i].z};
        CHECK((keys_rot[i] - expect).norm() < 1e-9);
    }
}

TEST_CASE("pcc forward: equal arc spacing between consecutive keys") {
    PlantParams params;
    auto keys = pcc_forward({33, 5, 18}, params);
    double chord0 = (keys[1] - keys[0]).norm();
    for (std::size_t i = 1; i + 1 < keys.size(); ++i)
        CHECK((keys[i + 1] - keys[i]).norm() == doctest::Approx(chord0).epsilon(1e-9));
}

TEST_CASE("plant eval: zero half-width is memoryless") {
    PlantParams params;
    params.hysteresis_halfwidth = 0.0;
    Plant plant(params);
    auto a = plant.eval({20, 10, 5});
    plant.eval({55, 0, 30});
    plant.eval({1, 2, 3});
    auto b = plant.eval({20, 10, 5});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() < 1e-12);
}

TEST_CASE("plant eval: direction of arrival shifts the shape") {
    PlantParams params;
    params.hysteresis_halfwidth = 2.0;
    Plant plant(params);
    for (double p = 0; p <= 30; p += 1) plant.eval({p, 0, 0});
    auto ascending = plant.eval({30, 0, 0});
    for (double p = 30; p <= 60; p += 1) plant.eval({p, 0, 0});
    for (double p = 60; p >= 30; p -= 1) plant.eval({p, 0, 0});
    auto descending = plant.eval({30, 0, 0});
    CHECK((ascending.back() - descending.back()).norm() > 0.5);
}

TEST_CASE("plant eval: out-of-range pressure rejected") {
    Plant plant(PlantParams{});
    CHECK_THROWS_AS(plant.eval({-5, 0, 0}), InputRangeError);
    CHECK_THROWS_AS(plant.eval({0, 61, 0}), InputRangeError);
}

TEST_CASE("plant eval: fixed noise seed reproduces outputs bit-identically") {
    PlantParams params;
    params.noise_sigma = 0.05;
    Plant a(params, 99), b(params, 99);
    for (int i = 0; i < 10; ++i) {
        auto ka = a.eval_averaged({double(i), 5, 2}, 20);
        auto kb = b.eval_averaged({double(i), 5, 2}, 20);
        for (std::size_t k = 0; k < ka.size(); ++k) {
            CHECK(ka[k].x == kb[k].x);
            CHECK(ka[k].y == kb[k].y);
            CHECK(ka[k].z == kb[k].z);
        }
    }
}

TEST_CASE("calibration: zero target gives zero half-width") {
    CHECK(calibrate_hysteresis(PlantParams{}, 0.0) == 0.0);
}

TEST_CASE("calibration: deviation is monotone over the bracket") {
    PlantParams params;
    double d1 = sweep_tip_deviation(params, 0.5);
    double d2 = sweep_tip_deviation(params, 1.5);
    double d3 = sweep_tip_deviation(params, 3.0);
    CHECK(d1 < d2);
    CHECK(d2 < d3);
    CHECK(sweep_tip_deviation(params, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("calibration: 3.4% target verified by an independent sweep") {
    PlantParams params;
    double h = calibrate_hysteresis(params, 0.034);
    CHECK(h > 0.0);
    params.hysteresis_halfwidth = h;
    double dev = sweep_tip_deviation(params, h) / params.length_rest;
    CHECK(dev > 0.033);
    CHECK(dev < 0.035);
}

TEST_CASE("calibration: unreachable target reported") {
    PlantParams params;
    params.bend_gain = 1e-9;
    params.elong_gain = 1e-6;
    CHECK_THROWS_AS(calibrate_hysteresis(params, 0.1), CalibrationError);
}
