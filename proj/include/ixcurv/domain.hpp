#pragma once

// Solve domains: a chart-coordinate inside test, a seeding/binning bounding
// box, and an explicit boundary description (loops of parametrized edges with
// corner vertices). Closed charts have no loops; polygons have straight or
// great-circle edges; caps have a single closed circular edge per loop.

#include <ixcurv/geometry.hpp>

#include <functional>
#include <memory>
#include <vector>

namespace ixcurv {

struct EdgeCurve {
    std::function<Vec2(double)> gamma;  // chart coordinates
    double t_end = 1.0;
    bool closed = false;  // full loop with no corner (circle boundary)
};

struct BoundaryLoop {
    // edge i runs from vertex i to vertex (i+1) mod n; a loop made of one
    // closed edge has no vertices.
    std::vector<EdgeCurve> edges;
    std::vector<Vec2> vertices;
    std::vector<double> vertex_angles;  // interior angles (tangent metric)
};

struct Domain {
    std::function<bool(const Vec2&)> inside;
    Rect bbox{0, 1, 0, 1};
    std::vector<BoundaryLoop> loops;
    double diameter = 1.0;
    bool has_boundary() const { return !loops.empty(); }
};

// Whole chart rectangle (closed surfaces: sphere, torus, ellipsoid).
inline Domain full_chart_domain(const Chart& chart) {
    Domain d;
    // Periodic axes accept any value; non-periodic axes are clamped to the
    // chart rectangle so analytic continuations past a coordinate singularity
    // (which alias points already covered elsewhere in the chart) are not
    // double-counted.
    const bool pu = chart.periodic_u, pv = chart.periodic_v;
    const double u0 = chart.u0, u1 = chart.u1, v0 = chart.v0, v1 = chart.v1;
    d.inside = [pu, pv, u0, u1, v0, v1](const Vec2& p) {
        if (!pu && (p.x() < u0 || p.x() > u1)) return false;
        if (!pv && (p.y() < v0 || p.y() > v1)) return false;
        return true;
    };
    d.bbox = {chart.u0, chart.u1, chart.v0, chart.v1};
    d.diameter = chart.diameter();
    return d;
}

// Flat polygon in chart coordinates (plane chart, s4patch block squares).
inline Domain polygon_domain(const PolygonDomain& poly) {
    Domain d;
    auto shared = std::make_shared<PolygonDomain>(poly);
    d.inside = [shared](const Vec2& p) { return shared->inside(p); };
    double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
    BoundaryLoop loop;
    int n = shared->size();
    for (int i = 0; i < n; ++i) {
        Vec2 a = shared->vertex(i);
        Vec2 b = shared->vertex((i + 1) % n);
        ulo = std::min(ulo, a.x());
        uhi = std::max(uhi, a.x());
        vlo = std::min(vlo, a.y());
        vhi = std::max(vhi, a.y());
        EdgeCurve e;
        e.t_end = (b - a).norm();
        Vec2 dir = (b - a) / e.t_end;
        e.gamma = [a, dir](double t) { return Vec2(a + t * dir); };
        loop.edges.push_back(std::move(e));
        loop.vertices.push_back(a);
        loop.vertex_angles.push_back(shared->interior_angle(i));
    }
    d.loops.push_back(std::move(loop));
    d.bbox = {ulo, uhi, vlo, vhi};
    d.diameter = shared->diameter();
    return d;
}

// ---------------------------------------------------------------------------
// Spherical domains (unit sphere, lat-long chart coordinates).

inline Vec2 sphere_chart_coords(const Eigen::Vector3d& x) {
    double u = std::atan2(x.y(), x.x());
    if (u < 0.0) u += 2.0 * M_PI;
    double v = std::acos(std::clamp(x.z() / x.norm(), -1.0, 1.0));
    return {u, v};
}

// Geodesically convex spherical polygon given by unit-vector vertices in
// counter-clockwise order as seen from outside the sphere.
inline Domain spherical_polygon_domain(const std::vector<Eigen::Vector3d>& verts) {
    const int n = static_cast<int>(verts.size());
    if (n < 3) throw InvalidParameter("spherical polygon needs >= 3 vertices");
    auto vs = std::make_shared<std::vector<Eigen::Vector3d>>(verts);
    for (auto& v : *vs) v.normalize();

    Domain d;
    d.inside = [vs, n](const Vec2& p) {
        double sv = std::sin(p.y());
        Eigen::Vector3d x(std::cos(p.x()) * sv, std::sin(p.x()) * sv, std::cos(p.y()));
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector3d& a = (*vs)[i];
            const Eigen::Vector3d& b = (*vs)[(i + 1) % n];
            if (a.cross(b).dot(x) < 0.0) return false;
        }
        return true;
    };

    BoundaryLoop loop;
    double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
    for (int i = 0; i < n; ++i) {
        Eigen::Vector3d P = (*vs)[i];
        Eigen::Vector3d Q = (*vs)[(i + 1) % n];
        double ang = std::acos(std::clamp(P.dot(Q), -1.0, 1.0));
        Eigen::Vector3d U = (Q - P.dot(Q) * P).normalized();
        EdgeCurve e;
        e.t_end = ang;
        e.gamma = [P, U](double t) {
            return sphere_chart_coords(P * std::cos(t) + U * std::sin(t));
        };
        // Track the chart extent along the edge.
        for (int k = 0; k <= 64; ++k) {
            Vec2 p = e.gamma(ang * k / 64.0);
            ulo = std::min(ulo, p.x());
            uhi = std::max(uhi, p.x());
            vlo = std::min(vlo, p.y());
            vhi = std::max(vhi, p.y());
        }
        loop.edges.push_back(std::move(e));
        loop.vertices.push_back(sphere_chart_coords(P));
        Eigen::Vector3d Rv = (*vs)[(i + n - 1) % n];
        Eigen::Vector3d tq = (Q - P.dot(Q) * P).normalized();
        Eigen::Vector3d tr = (Rv - P.dot(Rv) * P).normalized();
        loop.vertex_angles.push_back(std::acos(std::clamp(tq.dot(tr), -1.0, 1.0)));
    }
    d.loops.push_back(std::move(loop));
    double pu = 0.02 * (uhi - ulo), pv = 0.02 * (vhi - vlo);
    d.bbox = {ulo - pu, uhi + pu, vlo - pv, vhi + pv};
    d.diameter = std::hypot(uhi - ulo, vhi - vlo);
    return d;
}

// Geodesic cap around `center` of radius rho, minus disjoint circular holes.
struct CapSpec {
    Eigen::Vector3d center;
    double rho;
};

inline Domain cap_domain(const CapSpec& cap, const std::vector<CapSpec>& holes) {
    auto c0 = cap.center.normalized();
    // Every hole must sit strictly inside the cap and clear of other holes.
    for (size_t i = 0; i < holes.size(); ++i) {
        double di = std::acos(std::clamp(c0.dot(holes[i].center.normalized()), -1.0, 1.0));
        if (di + holes[i].rho >= cap.rho - 0.02) {
            throw InvalidParameter("cap hole not strictly inside the cap");
        }
        for (size_t j = i + 1; j < holes.size(); ++j) {
            double dij = std::acos(std::clamp(holes[i].center.normalized().dot(
                                       holes[j].center.normalized()), -1.0, 1.0));
            if (dij <= holes[i].rho + holes[j].rho + 0.02) {
                throw InvalidParameter("cap holes overlap");
            }
        }
    }

    auto hs = std::make_shared<std::vector<CapSpec>>(holes);
    for (auto& h : *hs) h.center.normalize();
    double cos_rho0 = std::cos(cap.rho);

    Domain d;
    d.inside = [c0, cos_rho0, hs](const Vec2& p) {
        double sv = std::sin(p.y());
        Eigen::Vector3d x(std::cos(p.x()) * sv, std::sin(p.x()) * sv, std::cos(p.y()));
        if (x.dot(c0) < cos_rho0) return false;
        for (const auto& h : *hs) {
            if (x.dot(h.center) > std::cos(h.rho)) return false;
        }
        return true;
    };

    auto circle_loop = [](const Eigen::Vector3d& c, double rho) {
        Eigen::Vector3d e1 = c.unitOrthogonal();
        Eigen::Vector3d e2 = c.cross(e1);
        EdgeCurve e;
        e.t_end = 2.0 * M_PI;
        e.closed = true;
        double cr = std::cos(rho), sr = std::sin(rho);
        e.gamma = [c, e1, e2, cr, sr](double t) {
            return sphere_chart_coords(cr * c + sr * (e1 * std::cos(t) + e2 * std::sin(t)));
        };
        BoundaryLoop loop;
        loop.edges.push_back(std::move(e));
        return loop;
    };

    double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
    d.loops.push_back(circle_loop(c0, cap.rho));
    for (const auto& h : *hs) d.loops.push_back(circle_loop(h.center, h.rho));
    for (int k = 0; k <= 256; ++k) {
        Vec2 p = d.loops[0].edges[0].gamma(2.0 * M_PI * k / 256.0);
        ulo = std::min(ulo, p.x());
        uhi = std::max(uhi, p.x());
        vlo = std::min(vlo, p.y());
        vhi = std::max(vhi, p.y());
    }
    double pu = 0.02 * (uhi - ulo), pv = 0.02 * (vhi - vlo);
    d.bbox = {ulo - pu, uhi + pu, vlo - pv, vhi + pv};
    d.diameter = std::hypot(uhi - ulo, vhi - vlo);
    return d;
}

}  // namespace ixcurv
