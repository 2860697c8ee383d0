#pragma once

#include <cmath>
#include <vector>

#include "softrl/util.hpp"

namespace softrl::geometry {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Point3 operator/(double s) const { return {x / s, y / s, z / s}; }

    double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    Point3 cross(const Point3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Point3 normalized() const {
        double n = norm();
        if (n == 0.0) throw GeometryError("cannot normalize zero vector");
        return *this / n;
    }
};

/// Ordered key feature points along the robot body; points[0] is the fixed base.
using KeyPointSet = std::vector<Point3>;

struct Plane {
    Point3 normal;   // unit vector
    double offset;   // signed distance, normal . p == offset on the plane
};

Plane make_plane(const Point3& normal, double offset);

struct CircleFit {
    Point3 center;
    double radius = 0.0;
    Point3 normal;       // unit; sign convention: positive z component, else positive x
    double residual = 0.0;  // rms radial residual, mm
};

/// Least-squares circle through >=3 non-collinear 3D points. Plane from the
/// smallest-variance direction of the scatter matrix, then an algebraic 2D fit
/// refined by one Gauss-Newton step.
CircleFit fit_circle_3d(const std::vector<Point3>& markers);

struct SplineCurve {
    // Clamped cubic B-spline (or polyline fallback for n < 4).
    int degree = 3;
    bool linear_fallback = false;
    std::vector<double> knots;
    std::vector<Point3> control;
    std::vector<double> params;  // chord-length parameter of each key point

    Point3 eval(double u) const;
    Point3 derivative(double u) const;
};

SplineCurve bspline_fit(const KeyPointSet& keys);

struct SplineSamples {
    std::vector<Point3> points;
    bool linear_fallback = false;
};

/// Samples the interpolating spline at `samples` uniformly spaced parameters.
/// First/last samples coincide with keys.front()/keys.back().
SplineSamples bspline_reconstruct(const KeyPointSet& keys, std::size_t samples);

/// Unit tangent of the reconstructed body curve at the last key point.
Point3 tip_tangent(const KeyPointSet& keys);

/// Intersection of the ray origin + t*dir (t >= 0) with the plane.
Point3 ray_plane_intersect(const Point3& origin, const Point3& dir, const Plane& plane);

}  // namespace softrl::geometry
