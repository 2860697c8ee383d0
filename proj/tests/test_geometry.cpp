#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "softrl/geometry.hpp"

using namespace softrl;
using namespace softrl::geometry;

namespace {

Point3 rotate(const Point3& p, const double r[3][3]) {
    return {r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z};
}

// Rotation matrix from an axis-angle pair.
void axis_angle(const Point3& axis_in, double angle, double r[3][3]) {
    Point3 a = axis_in.normalized();
    double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
    r[0][0] = t * a.x * a.x + c;
    r[0][1] = t * a.x * a.y - s * a.z;
    r[0][2] = t * a.x * a.z + s * a.y;
    r[1][0] = t * a.x * a.y + s * a.z;
    r[1][1] = t * a.y * a.y + c;
    r[1][2] = t * a.y * a.z - s * a.x;
    r[2][0] = t * a.x * a.z - s * a.y;
    r[2][1] = t * a.y * a.z + s * a.x;
    r[2][2] = t * a.z * a.z + c;
}

}  // namespace

TEST_CASE("circle fit: circumscribed unit circle") {
    auto fit = fit_circle_3d({{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}});
    CHECK(std::abs(fit.center.x) < 1e-12);
    CHECK(std::abs(fit.center.y) < 1e-12);
    CHECK(std::abs(fit.center.z) < 1e-12);
    CHECK(fit.radius == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.normal.z == doctest::Approx(1.0));  // sign convention: +z
    CHECK(fit.residual < 1e-12);
}

TEST_CASE("circle fit: any 3 non-collinear points are interpolated exactly") {
    Rng rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point3> pts = {{u(rng), u(rng), u(rng)},
                                   {u(rng), u(rng), u(rng)},
                                   {u(rng), u(rng), u(rng)}};
        Point3 ab = pts[1] - pts[0], ac = pts[2] - pts[0];
        if (ab.cross(ac).norm() < 1e-3) continue;
        auto fit = fit_circle_3d(pts);
        CHECK(fit.residual < 1e-8);
        for (const auto& p : pts)
            CHECK((p - fit.center).norm() == doctest::Approx(fit.radius).epsilon(1e-8));
    }
}

TEST_CASE("circle fit: noisy samples recover the generator") {
    // 8 points from circle center (5,5,5), radius 2, normal z, noise sigma=0.01
    Rng rng(42);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<Point3> pts;
    for (int k = 0; k < 8; ++k) {
        double th = 2.0 * M_PI * k / 8.0;
        pts.push_back({5 + 2 * std::cos(th) + noise(rng), 5 + 2 * std::sin(th) + noise(rng),
                       5 + noise(rng)});
    }
    auto fit = fit_circle_3d(pts);
    CHECK((fit.center - Point3{5, 5, 5}).norm() < 0.02);
    CHECK(fit.radius == doctest::Approx(2.0).epsilon(0.01));
    CHECK(std::abs(fit.normal.z) > 0.999);
}

TEST_CASE("circle fit: degenerate inputs rejected") {
    CHECK_THROWS_AS(fit_circle_3d({{0, 0, 0}, {1, 1, 1}}), GeometryError);
    CHECK_THROWS_AS(fit_circle_3d({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}), GeometryError);
    CHECK_THROWS_AS(fit_circle_3d({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}), GeometryError);
}

TEST_CASE("circle fit: rigid-transform invariance") {
    Rng rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        Point3 center{u(rng) * 20, u(rng) * 20, u(rng) * 20};
        double radius = 1.0 + std::abs(u(rng)) * 10;
        std::vector<Point3> pts;
        for (int k = 0; k < 7; ++k) {
            double th = 2.0 * M_PI * k / 7.0;
            pts.push_back(center + Point3{radius * std::cos(th), radius * std::sin(th), 0.0});
        }
        double r[3][3];
        axis_angle({u(rng) + 1.5, u(rng), u(rng)}, u(rng) * 3.0, r);
        Point3 shift{u(rng) * 5, u(rng) * 5, u(rng) * 5};
        std::vector<Point3> moved;
        for (const auto& p : pts) moved.push_back(rotate(p, r) + shift);

        auto fit0 = fit_circle_3d(pts);
        auto fit1 = fit_circle_3d(moved);
        Point3 expect_center = rotate(fit0.center, r) + shift;
        CHECK((fit1.center - expect_center).norm() < 1e-9);
        CHECK(fit1.radius == doctest::Approx(fit0.radius).epsilon(1e-9));
        Point3 expect_normal = rotate(fit0.normal, r);
        CHECK(std::abs(std::abs(expect_normal.dot(fit1.normal)) - 1.0) < 1e-9);
    }
}

TEST_CASE("bspline: collinear keys reproduce the line") {
    KeyPointSet keys;
    for (int i = 0; i < 5; ++i) keys.push_back({0, 0, 10.0 * i});
    auto rec = bspline_reconstruct(keys, 101);
    CHECK_FALSE(rec.linear_fallback);
    for (const auto& p : rec.points) {
        CHECK(std::abs(p.x) < 1e-9);
        CHECK(std::abs(p.y) < 1e-9);
        CHECK(p.z >= -1e-9);
        CHECK(p.z <= 40.0 + 1e-9);
    }
}

TEST_CASE("bspline: clamped endpoints and key interpolation") {
    KeyPointSet keys = {{0, 0, 0}, {5, 1, 10}, {6, -2, 25}, {2, 3, 33}, {0, 1, 44}};
    auto rec = bspline_reconstruct(keys, 50);
    CHECK((rec.points.front() - keys.front()).norm() < 1e-9);
    CHECK((rec.points.back() - keys.back()).norm() < 1e-9);
    SplineCurve curve = bspline_fit(keys);
    for (std::size_t k = 0; k < keys.size(); ++k)
        CHECK((curve.eval(curve.params[k]) - keys[k]).norm() < 1e-9);
}

TEST_CASE("bspline: planar arc reconstruction error under 0.5% of arc length") {
    const double radius = 50.0, span = M_PI / 2.0;
    KeyPointSet keys;
    for (int i = 0; i < 5; ++i) {
        double th = span * i / 4.0;
        keys.push_back({radius * std::cos(th), 0, radius * std::sin(th)});
    }
    auto rec = bspline_reconstruct(keys, 400);
    const double arc_length = radius * span;
    double worst = 0.0;
    for (const auto& p : rec.points) {
        CHECK(std::abs(p.y) < 1e-9);  // stays planar
        worst = std::max(worst, std::abs(std::hypot(p.x, p.z) - radius));
    }
    CHECK(worst < 0.005 * arc_length);
}

TEST_CASE("bspline: n < 4 falls back to the polyline and flags it") {
    KeyPointSet keys = {{0, 0, 0}, {1, 0, 5}, {0, 0, 10}};
    auto rec = bspline_reconstruct(keys, 21);
    CHECK(rec.linear_fallback);
    CHECK((rec.points.front() - keys.front()).norm() < 1e-12);
    CHECK((rec.points.back() - keys.back()).norm() < 1e-12);
}

TEST_CASE("bspline: dense arc length is at least the key polyline length") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        KeyPointSet keys;
        Point3 p{0, 0, 0};
        keys.push_back(p);
        for (int i = 0; i < 5; ++i) {
            p = p + Point3{u(rng) * 4, u(rng) * 4, 8 + u(rng)};
            keys.push_back(p);
        }
        double chord = 0.0;
        for (std::size_t i = 1; i < keys.size(); ++i) chord += (keys[i] - keys[i - 1]).norm();
        auto rec = bspline_reconstruct(keys, 20001);
        double spline_len = 0.0;
        for (std::size_t i = 1; i < rec.points.size(); ++i)
            spline_len += (rec.points[i] - rec.points[i - 1]).norm();
        CHECK(spline_len >= chord * (1.0 - 1e-6));
    }
}

TEST_CASE("tip tangent: straight body points along +z") {
    KeyPointSet keys;
    for (int i = 0; i < 5; ++i) keys.push_back({0, 0, 17.5 * i});
    Point3 t = tip_tangent(keys);
    CHECK(std::abs(t.x) < 1e-12);
    CHECK(std::abs(t.y) < 1e-12);
    CHECK(t.z == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tip tangent: quarter-circle arc tangent within 2 degrees") {
    // quarter circle in the x-z plane from (0,0,0) to (r,0,r); the analytic
    // end tangent is +x
    const double r = 40.0;
    KeyPointSet keys;
    for (int i = 0; i < 5; ++i) {
        double th = M_PI - (M_PI / 2.0) * i / 4.0;  // 180 deg -> 90 deg
        keys.push_back({r + r * std::cos(th), 0, r * std::sin(th)});
    }
    Point3 t = tip_tangent(keys);
    double angle = std::acos(std::clamp(t.dot({1, 0, 0}), -1.0, 1.0));
    CHECK(angle < 2.0 * M_PI / 180.0);
}

TEST_CASE("tip tangent: reversing key order flips orientation") {
    KeyPointSet keys;
    for (int i = 0; i < 5; ++i) keys.push_back({0, 0, 10.0 * i});
    Point3 fwd = tip_tangent(keys);
    KeyPointSet rev(keys.rbegin(), keys.rend());
    Point3 bwd = tip_tangent(rev);
    CHECK((fwd + bwd).norm() < 1e-9);

    // general case: the reversed-order tip tangent is the negated start tangent
    KeyPointSet bent = {{0, 0, 0}, {3, 1, 9}, {7, 0, 19}, {12, -2, 27}, {18, 0, 33}};
    SplineCurve curve = bspline_fit(bent);
    Point3 start = curve.derivative(0.0).normalized();
    KeyPointSet bent_rev(bent.rbegin(), bent.rend());
    CHECK((tip_tangent(bent_rev) + start).norm() < 1e-9);
}

TEST_CASE("tip tangent: coincident last keys rejected") {
    CHECK_THROWS_AS(tip_tangent({{0, 0, 0}, {1, 1, 1}, {1, 1, 1}}), GeometryError);
}

TEST_CASE("ray-plane intersection") {
    Plane z5 = make_plane({0, 0, 1}, 5.0);
    Point3 hit = ray_plane_intersect({0, 0, 0}, {0, 0, 1}, z5);
    CHECK((hit - Point3{0, 0, 5}).norm() < 1e-12);
    hit = ray_plane_intersect({1, 1, 0}, {0, 0, 1}, z5);
    CHECK((hit - Point3{1, 1, 5}).norm() < 1e-12);
    CHECK_THROWS_AS(ray_plane_intersect({0, 0, 0}, {0, 1, 0}, z5), GeometryError);
    CHECK_THROWS_AS(ray_plane_intersect({0, 0, 10}, {0, 0, 1}, z5), GeometryError);
}

TEST_CASE("ray-plane intersection: residual property") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Point3 n = Point3{u(rng), u(rng), u(rng) + 1.5}.normalized();
        Plane plane = make_plane(n, u(rng) * 20);
        Point3 origin{u(rng) * 5, u(rng) * 5, -30.0};
        Point3 dir = Point3{u(rng) * 0.3, u(rng) * 0.3, 1.0}.normalized();
        if (std::abs(dir.dot(n)) < 1e-6) continue;
        double t = (plane.offset - origin.dot(n)) / dir.dot(n);
        if (t < 0) continue;
        Point3 hit = ray_plane_intersect(origin, dir, plane);
        CHECK(std::abs(hit.dot(plane.normal) - plane.offset) < 1e-9);
        CHECK((hit - origin).cross(dir).norm() < 1e-9 * std::max(1.0, (hit - origin).norm()));
    }
}

TEST_CASE("plane constructor enforces unit normal") {
    CHECK_THROWS_AS(make_plane({0, 0, 2}, 1.0), GeometryError);
}
