#include "softrl/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>

namespace softrl::geometry {

namespace {

constexpr double kDegenerateTol = 1e-10;

// Index of the last knot span whose half-open interval contains u.
std::size_t find_span(const std::vector<double>& knots, int degree, std::size_t n_ctrl, double u) {
    std::size_t p = static_cast<std::size_t>(degree);
    if (u >= knots[n_ctrl]) return n_ctrl - 1;  // clamp at the right end
    if (u <= knots[p]) return p;
    std::size_t lo = p, hi = n_ctrl;
    while (lo + 1 < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (u < knots[mid])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

// Cox-de Boor basis functions N_{span-p..span} at u.
void basis_funs(const std::vector<double>& knots, std::size_t span, int degree, double u,
                double* out) {
    int p = degree;
    std::vector<double> left(p + 1), right(p + 1);
    out[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            double tmp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out[j] = saved;
    }
}

// Basis functions and their first derivatives at u.
void basis_funs_ders(const std::vector<double>& knots, std::size_t span, int degree, double u,
                     double* out_n, double* out_d) {
    int p = degree;
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1));
    std::vector<double> left(p + 1), right(p + 1);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            double tmp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) out_n[j] = ndu[j][p];
    // first derivative only
    for (int r = 0; r <= p; ++r) {
        double d = 0.0;
        if (r >= 1) d += ndu[r - 1][p - 1] / ndu[p][r - 1];
        if (r <= p - 1) d -= ndu[r][p - 1] / ndu[p][r];
        out_d[r] = d * p;
    }
}

}  // namespace

Plane make_plane(const Point3& normal, double offset) {
    double n = normal.norm();
    if (std::abs(n - 1.0) > 1e-12) throw GeometryError("plane normal must be unit length");
    return Plane{normal, offset};
}

CircleFit fit_circle_3d(const std::vector<Point3>& markers) {
    if (markers.size() < 3) throw GeometryError("circle fit needs at least 3 markers");
    const std::size_t m = markers.size();

    Point3 centroid{0, 0, 0};
    for (const auto& p : markers) centroid = centroid + p;
    centroid = centroid / static_cast<double>(m);

    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& p : markers) {
        Eigen::Vector3d d(p.x - centroid.x, p.y - centroid.y, p.z - centroid.z);
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
    if (evals(1) <= kDegenerateTol * std::max(evals(2), 1e-30))
        throw GeometryError("degenerate geometry: markers collinear or coincident");

    Eigen::Vector3d n = eig.eigenvectors().col(0);  // smallest-variance direction
    // In-plane orthonormal basis.
    Eigen::Vector3d seed = std::abs(n(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d u = seed.cross(n).normalized();
    Eigen::Vector3d v = n.cross(u);

    std::vector<double> a(m), b(m);
    for (std::size_t k = 0; k < m; ++k) {
        Eigen::Vector3d d(markers[k].x - centroid.x, markers[k].y - centroid.y,
                          markers[k].z - centroid.z);
        a[k] = d.dot(u);
        b[k] = d.dot(v);
    }

    // Algebraic (Kasa) fit: a^2 + b^2 = 2*a*a0 + 2*b*b0 + c.
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < m; ++k) {
        Eigen::Vector3d row(2.0 * a[k], 2.0 * b[k], 1.0);
        ata += row * row.transpose();
        atb += row * (a[k] * a[k] + b[k] * b[k]);
    }
    Eigen::Vector3d sol = ata.ldlt().solve(atb);
    double a0 = sol(0), b0 = sol(1);
    double r2 = sol(2) + a0 * a0 + b0 * b0;
    if (!(r2 > 0.0) || !std::isfinite(r2))
        throw GeometryError("degenerate geometry: circle fit failed");
    double radius = std::sqrt(r2);

    // One Gauss-Newton step on the geometric residuals.
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < m; ++k) {
        double dx = a[k] - a0, dy = b[k] - b0;
        double dist = std::sqrt(dx * dx + dy * dy);
        if (dist < 1e-12) throw GeometryError("degenerate geometry: marker at circle center");
        double res = dist - radius;
        Eigen::Vector3d grad(-dx / dist, -dy / dist, -1.0);
        jtj += grad * grad.transpose();
        jtr += grad * res;
    }
    Eigen::Vector3d step = jtj.ldlt().solve(-jtr);
    a0 += step(0);
    b0 += step(1);
    radius += step(2);
    if (!(radius > 0.0)) throw GeometryError("degenerate geometry: non-positive radius");

    double ss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double dx = a[k] - a0, dy = b[k] - b0;
        double res = std::sqrt(dx * dx + dy * dy) - radius;
        ss += res * res;
    }

    // Deterministic normal orientation: positive z, else positive x, else positive y.
    if (std::abs(n(2)) > 1e-12) {
        if (n(2) < 0) n = -n;
    } else if (std::abs(n(0)) > 1e-12) {
        if (n(0) < 0) n = -n;
    } else if (n(1) < 0) {
        n = -n;
    }

    Eigen::Vector3d c3 = Eigen::Vector3d(centroid.x, centroid.y, centroid.z) + a0 * u + b0 * v;
    CircleFit fit;
    fit.center = {c3(0), c3(1), c3(2)};
    fit.radius = radius;
    fit.normal = {n(0), n(1), n(2)};
    fit.residual = std::sqrt(ss / static_cast<double>(m));
    return fit;
}

Point3 SplineCurve::eval(double u) const {
    if (linear_fallback) {
        u = std::clamp(u, 0.0, 1.0);
        // piecewise linear over the chord parameters
        std::size_t seg = 0;
        while (seg + 2 < params.size() && u > params[seg + 1]) ++seg;
        double t0 = params[seg], t1 = params[seg + 1];
        double w = (t1 > t0) ? (u - t0) / (t1 - t0) : 0.0;
        return control[seg] + (control[seg + 1] - control[seg]) * w;
    }
    u = std::clamp(u, 0.0, 1.0);
    std::size_t span = find_span(knots, degree, control.size(), u);
    double nvals[4];
    basis_funs(knots, span, degree, u, nvals);
    Point3 out{0, 0, 0};
    for (int j = 0; j <= degree; ++j)
        out = out + control[span - degree + j] * nvals[j];
    return out;
}

Point3 SplineCurve::derivative(double u) const {
    if (linear_fallback) {
        u = std::clamp(u, 0.0, 1.0);
        std::size_t seg = 0;
        while (seg + 2 < params.size() && u > params[seg + 1]) ++seg;
        double t0 = params[seg], t1 = params[seg + 1];
        Point3 d = control[seg + 1] - control[seg];
        return (t1 > t0) ? d / (t1 - t0) : d;
    }
    u = std::clamp(u, 0.0, 1.0);
    std::size_t span = find_span(knots, degree, control.size(), u);
    double nvals[4], dvals[4];
    basis_funs_ders(knots, span, degree, u, nvals, dvals);
    Point3 out{0, 0, 0};
    for (int j = 0; j <= degree; ++j)
        out = out + control[span - degree + j] * dvals[j];
    return out;
}

SplineCurve bspline_fit(const KeyPointSet& keys) {
    const std::size_t n = keys.size();
    if (n < 2) throw GeometryError("spline needs at least 2 key points");

    // Chord-length parameterization, normalized to [0, 1].
    std::vector<double> params(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        params[i] = params[i - 1] + (keys[i] - keys[i - 1]).norm();
    double total = params.back();
    if (total <= 0.0) throw GeometryError("degenerate geometry: all key points coincident");
    for (auto& t : params) t /= total;
    for (std::size_t i = 1; i < n; ++i)
        if (params[i] <= params[i - 1])
            throw GeometryError("degenerate geometry: coincident consecutive key points");

    SplineCurve curve;
    curve.params = params;
    if (n < 4) {
        curve.linear_fallback = true;
        curve.degree = 1;
        curve.control = keys;
        return curve;
    }

    const int p = 3;
    curve.degree = p;
    // Clamped knot vector with interior knots from parameter averaging.
    curve.knots.assign(n + p + 1, 0.0);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(p); ++i)
        curve.knots[n + i] = 1.0;
    for (std::size_t j = 1; j + p < n; ++j) {
        double s = 0.0;
        for (std::size_t i = j; i < j + p; ++i) s += params[i];
        curve.knots[j + p] = s / p;
    }

    // Collocation system: one basis row per key point.
    Eigen::MatrixXd coll = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t span = find_span(curve.knots, p, n, params[k]);
        double nvals[4];
        basis_funs(curve.knots, span, p, params[k], nvals);
        for (int j = 0; j <= p; ++j) coll(k, span - p + j) = nvals[j];
    }
    Eigen::MatrixXd rhs(n, 3);
    for (std::size_t k = 0; k < n; ++k) {
        rhs(k, 0) = keys[k].x;
        rhs(k, 1) = keys[k].y;
        rhs(k, 2) = keys[k].z;
    }
    Eigen::MatrixXd ctrl = coll.partialPivLu().solve(rhs);
    curve.control.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        curve.control[i] = {ctrl(i, 0), ctrl(i, 1), ctrl(i, 2)};
    return curve;
}

SplineSamples bspline_reconstruct(const KeyPointSet& keys, std::size_t samples) {
    if (samples < 2) throw GeometryError("need at least 2 samples");
    SplineCurve curve = bspline_fit(keys);
    SplineSamples out;
    out.linear_fallback = curve.linear_fallback;
    out.points.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double u = static_cast<double>(i) / static_cast<double>(samples - 1);
        out.points[i] = curve.eval(u);
    }
    // Clamped endpoints: pin them exactly.
    out.points.front() = keys.front();
    out.points.back() = keys.back();
    return out;
}

Point3 tip_tangent(const KeyPointSet& keys) {
    if (keys.size() < 2) throw GeometryError("tip tangent needs at least 2 key points");
    const Point3 last_seg = keys[keys.size() - 1] - keys[keys.size() - 2];
    if (last_seg.norm() < 1e-12)
        throw GeometryError("degenerate geometry: coincident last two key points");
    if (keys.size() < 4) return last_seg.normalized();
    SplineCurve curve = bspline_fit(keys);
    Point3 d = curve.derivative(1.0);
    if (d.norm() < 1e-12) return last_seg.normalized();
    return d.normalized();
}

Point3 ray_plane_intersect(const Point3& origin, const Point3& dir, const Plane& plane) {
    double denom = dir.dot(plane.normal);
    if (std::abs(denom) < 1e-12)
        throw GeometryError("no intersection: ray parallel to plane");
    double t = (plane.offset - origin.dot(plane.normal)) / denom;
    if (t < 0.0) throw GeometryError("no intersection: plane behind ray origin");
    return origin + dir * t;
}

}  // namespace softrl::geometry
