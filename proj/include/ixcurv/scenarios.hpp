#pragma once

// The scenario catalog: each entry bundles the surface (chart + domain per
// factor), its topology, the histogram grids with per-bin oracle masses where
// a closed form or quadrature is available, boundary bookkeeping, and solver
// defaults. Scenarios are immutable after construction and shared across
// worker threads.

#include <ixcurv/critical.hpp>
#include <ixcurv/domain.hpp>
#include <ixcurv/errors.hpp>
#include <ixcurv/geometry.hpp>
#include <ixcurv/histogram.hpp>
#include <ixcurv/morse.hpp>
#include <ixcurv/quadrature.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ixcurv {

struct FactorSpace {
    std::shared_ptr<const Chart> chart;  // null for dummy-dependent slice blocks
    Domain domain;
    TopologyInfo topo;
    GridSpec bins;
    std::vector<double> bin_oracle;  // expected value per bin; NaN = no oracle
    bool oracle_is_density = false;  // oracle given per unit area, not as mass
    std::vector<double> bin_area;    // area of bin ∩ domain; NaN = not computed
};

struct BoundarySpec {
    std::vector<Vec2> vertex_locations;
    std::vector<double> vertex_oracle;     // expected mass; NaN = none
    std::vector<double> vertex_reference;  // angle-fraction reference, reported only
    std::vector<double> edge_lengths;      // t_end per edge, boundary-scan order
    int profile_bins = 32;
};

struct Scenario {
    enum class Kind { height, product, patch4 };

    std::string name;
    std::string summary;
    Kind kind = Kind::height;
    TopologyInfo topo;
    std::vector<FactorSpace> factors;
    SplitSpace space;   // product / patch4 kinds
    double delta = 0.0; // patch4
    SolverOptions solver;
    uint64_t default_samples = 20000;
    std::optional<BoundarySpec> boundary;
    std::vector<GridSpec> stat_grids;  // independence-test grids, one per factor
    int cov_regions = 3;

    int blocks() const { return static_cast<int>(factors.size()); }
};

struct ScenarioParams {
    std::map<std::string, double> values;  // numeric knobs (R, r, a, b, c, delta, p)
    std::vector<Vec2> vertices;            // flat_polygon override
    std::vector<std::string> factors;      // product factor names
    int bins_u = 0;        // histogram grid override; 0 keeps the scenario default
    int bins_v = 0;
    int profile_bins = 0;  // boundary edge histogram bins; 0 keeps the default
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline GridSpec chart_grid(const Chart& chart, int n_u, int n_v) {
    return {n_u, n_v, {chart.u0, chart.u1, chart.v0, chart.v1}};
}

// Lat-long bin areas are exact: du * (cos v_lo - cos v_hi) steradians.
inline double latlong_area(const Rect& b) {
    return (b.u1 - b.u0) * (std::cos(b.v0) - std::cos(b.v1));
}

inline FactorSpace sphere_factor(double R, int n_u = 24, int n_v = 12) {
    FactorSpace f;
    f.chart = make_chart("sphere", {{"R", R}});
    f.domain = full_chart_domain(*f.chart);
    f.topo = {2, false, 0};
    f.bins = chart_grid(*f.chart, n_u, n_v);
    // Constant curvature: the oracle is the uniform density K/(2 pi).
    f.oracle_is_density = true;
    for (int b = 0; b < f.bins.bins(); ++b) {
        Rect r = f.bins.bin_rect(b);
        f.bin_oracle.push_back(1.0 / (2.0 * M_PI * R * R));
        f.bin_area.push_back(R * R * latlong_area(r));
    }
    return f;
}

inline FactorSpace torus_factor(double R, double r, int n_u = 16, int n_v = 16) {
    FactorSpace f;
    f.chart = make_chart("torus", {{"R", R}, {"r", r}});
    f.domain = full_chart_domain(*f.chart);
    f.topo = {0, false, 0};
    f.bins = chart_grid(*f.chart, n_u, n_v);
    for (int b = 0; b < f.bins.bins(); ++b) {
        Rect rc = f.bins.bin_rect(b);
        double du = rc.u1 - rc.u0;
        f.bin_oracle.push_back(du * (std::sin(rc.v1) - std::sin(rc.v0)) / (2.0 * M_PI));
        f.bin_area.push_back(r * du * (R * (rc.v1 - rc.v0) +
                                       r * (std::sin(rc.v1) - std::sin(rc.v0))));
    }
    return f;
}

inline FactorSpace ellipsoid_factor(double a, double b, double c, int n_u = 24,
                                    int n_v = 12) {
    FactorSpace f;
    f.chart = make_chart("ellipsoid", {{"a", a}, {"b", b}, {"c", c}});
    f.domain = full_chart_domain(*f.chart);
    f.topo = {2, false, 0};
    f.bins = chart_grid(*f.chart, n_u, n_v);
    const Chart& ch = *f.chart;
    auto darea = [&ch](double u, double v) {
        auto ff = first_fundamental_form(ch, u, v);
        return std::sqrt(std::max(0.0, ff.E * ff.G - ff.F * ff.F));
    };
    for (int bi = 0; bi < f.bins.bins(); ++bi) {
        Rect rc = f.bins.bin_rect(bi);
        double mass = integrate2d(
            [&](double u, double v) { return gauss_curvature(ch, u, v) * darea(u, v); },
            rc.u0, rc.u1, rc.v0, rc.v1, 8);
        f.bin_oracle.push_back(mass / (2.0 * M_PI));
        f.bin_area.push_back(integrate2d(darea, rc.u0, rc.u1, rc.v0, rc.v1, 8));
    }
    return f;
}

// Rotation taking the first-octant centroid (1,1,1)/sqrt(3) onto (-1,0,0),
// which keeps the whole triangle far from the chart's pole lines.
inline Eigen::Matrix3d octant_rotation() {
    Eigen::Vector3d m = Eigen::Vector3d(1, 1, 1).normalized();
    Eigen::Vector3d t(-1, 0, 0);
    Eigen::Vector3d axis = m.cross(t).normalized();
    double angle = std::acos(std::clamp(m.dot(t), -1.0, 1.0));
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Per-bin area of bin ∩ domain on the unit sphere by midpoint subcells with
// exact lat-long subcell areas. Unit-curvature domains have the constant
// interior density 1/(2 pi) wherever the bin meets the domain at all.
inline void subgrid_sphere_bins(FactorSpace& f, int sub) {
    f.oracle_is_density = true;
    for (int b = 0; b < f.bins.bins(); ++b) {
        Rect rc = f.bins.bin_rect(b);
        double du = (rc.u1 - rc.u0) / sub, dv = (rc.v1 - rc.v0) / sub;
        double inside_area = 0.0;
        for (int i = 0; i < sub; ++i) {
            for (int j = 0; j < sub; ++j) {
                double um = rc.u0 + (i + 0.5) * du;
                double vlo = rc.v0 + j * dv, vhi = vlo + dv;
                if (f.domain.inside(Vec2(um, 0.5 * (vlo + vhi)))) {
                    inside_area += du * (std::cos(vlo) - std::cos(vhi));
                }
            }
        }
        f.bin_area.push_back(inside_area);
        f.bin_oracle.push_back(inside_area > 1e-9 ? 1.0 / (2.0 * M_PI) : kNaN);
    }
}

inline std::vector<double> loop_edge_lengths(const Domain& dom) {
    std::vector<double> lens;
    for (const auto& loop : dom.loops) {
        for (const auto& e : loop.edges) lens.push_back(e.t_end);
    }
    return lens;
}

}  // namespace detail

// Curvature margin of the coordinate 2-slices over a grid of frozen-block
// positions; `make_slice(other)` builds the slice chart for one frozen block.
namespace detail {
inline double slice_margin(
    const std::function<std::shared_ptr<const Chart>(const Vec2&)>& make_slice,
    double delta) {
    double margin = std::numeric_limits<double>::infinity();
    const int G = 5, W = 7;
    for (int a = 0; a < G; ++a) {
        for (int b = 0; b < G; ++b) {
            Vec2 other(-delta + 2.0 * delta * a / (G - 1),
                       -delta + 2.0 * delta * b / (G - 1));
            auto slice = make_slice(other);
            for (int i = 0; i < W; ++i) {
                for (int j = 0; j < W; ++j) {
                    double u = -delta + 2.0 * delta * i / (W - 1);
                    double v = -delta + 2.0 * delta * j / (W - 1);
                    margin = std::min(margin, gauss_curvature(*slice, u, v));
                }
            }
        }
    }
    return margin;
}
}  // namespace detail

inline double definite_margin_or_throw(double margin) {
    if (!(margin > 1e-9)) {
        throw NonDefiniteSign("slice curvature margin is not positive");
    }
    return margin;
}

// ---------------------------------------------------------------------------
// Catalog.

inline std::vector<std::pair<std::string, std::string>> scenario_catalog() {
    return {
        {"sphere", "round sphere of radius R; constant curvature, chi = 2"},
        {"torus", "torus of revolution (major R, minor r); chi = 0"},
        {"ellipsoid", "triaxial ellipsoid (a, b, c); chi = 2"},
        {"flat_polygon", "flat polygon; boundary vertex masses carry chi = 1"},
        {"spherical_triangle", "octant triangle on the unit sphere; chi = 1"},
        {"cap_with_holes", "geodesic cap with p round holes; chi = 1 - p"},
        {"product", "product of two closed factors under a joint height"},
        {"s4patch", "coordinate patch of the round 4-sphere, two 2-d blocks"},
    };
}

inline Scenario build_scenario(const std::string& name, ScenarioParams params = {}) {
    Scenario s;
    s.name = name;
    ChartParams vals = params.values;
    if (params.bins_u < 0 || params.bins_v < 0 || params.profile_bins < 0) {
        throw InvalidParameter("bin counts must be positive");
    }
    auto bins_or = [&params](int du, int dv) {
        return std::pair<int, int>{params.bins_u > 0 ? params.bins_u : du,
                                   params.bins_v > 0 ? params.bins_v : dv};
    };
    const int pbins = params.profile_bins > 0 ? params.profile_bins : 32;

    if (name == "sphere") {
        double R = detail::take(vals, "R", 1.0);
        detail::expect_empty(vals, name);
        auto [bu, bv] = bins_or(24, 12);
        s.summary = scenario_catalog()[0].second;
        s.factors.push_back(detail::sphere_factor(R, bu, bv));
        s.topo = s.factors[0].topo;
        return s;
    }

    if (name == "torus") {
        double R = detail::take(vals, "R", 2.0);
        double r = detail::take(vals, "r", 1.0);
        detail::expect_empty(vals, name);
        auto [bu, bv] = bins_or(16, 16);
        s.summary = scenario_catalog()[1].second;
        s.factors.push_back(detail::torus_factor(R, r, bu, bv));
        s.topo = s.factors[0].topo;
        return s;
    }

    if (name == "ellipsoid") {
        double a = detail::take(vals, "a", 1.0);
        double b = detail::take(vals, "b", 1.3);
        double c = detail::take(vals, "c", 0.7);
        detail::expect_empty(vals, name);
        auto [bu, bv] = bins_or(24, 12);
        s.summary = scenario_catalog()[2].second;
        s.factors.push_back(detail::ellipsoid_factor(a, b, c, bu, bv));
        s.topo = s.factors[0].topo;
        return s;
    }

    if (name == "flat_polygon") {
        detail::expect_empty(vals, name);
        std::vector<Vec2> verts = params.vertices;
        if (verts.empty()) {
            verts = {{0.0, 0.0}, {1.0, 0.0}, {0.0, std::sqrt(3.0)}};
        }
        PolygonDomain poly(verts);
        s.summary = scenario_catalog()[3].second;

        FactorSpace f;
        Domain dom = polygon_domain(poly);
        double pu = 0.05 * (dom.bbox.u1 - dom.bbox.u0);
        double pv = 0.05 * (dom.bbox.v1 - dom.bbox.v0);
        f.chart = std::make_shared<PlaneChart>(dom.bbox.u0 - pu, dom.bbox.u1 + pu,
                                               dom.bbox.v0 - pv, dom.bbox.v1 + pv);
        f.domain = std::move(dom);
        f.topo = {1, true, 0};
        auto [bu, bv] = bins_or(12, 12);
        f.bins = {bu, bv, f.domain.bbox};
        for (int b = 0; b < f.bins.bins(); ++b) {
            Rect rc = f.bins.bin_rect(b);
            const int sub = 32;
            double cell = (rc.u1 - rc.u0) * (rc.v1 - rc.v0) / (sub * sub);
            double inside_area = 0.0;
            for (int i = 0; i < sub; ++i) {
                for (int j = 0; j < sub; ++j) {
                    Vec2 p(rc.u0 + (i + 0.5) * (rc.u1 - rc.u0) / sub,
                           rc.v0 + (j + 0.5) * (rc.v1 - rc.v0) / sub);
                    if (f.domain.inside(p)) inside_area += cell;
                }
            }
            // Flat interior carries no index mass at all.
            f.bin_oracle.push_back(0.0);
            f.bin_area.push_back(inside_area);
        }
        s.topo = f.topo;

        BoundarySpec bspec;
        const auto& loop = f.domain.loops[0];
        for (int i = 0; i < poly.size(); ++i) {
            bspec.vertex_locations.push_back(loop.vertices[i]);
            bspec.vertex_oracle.push_back(normal_cone_mass(poly, i));
            bspec.vertex_reference.push_back(poly.interior_angle(i) / M_PI);
        }
        bspec.edge_lengths = detail::loop_edge_lengths(f.domain);
        bspec.profile_bins = pbins;
        s.boundary = std::move(bspec);
        s.factors.push_back(std::move(f));
        return s;
    }

    if (name == "spherical_triangle") {
        detail::expect_empty(vals, name);
        s.summary = scenario_catalog()[4].second;
        Eigen::Matrix3d R = detail::octant_rotation();
        std::vector<Eigen::Vector3d> verts = {R.col(0), R.col(1), R.col(2)};

        FactorSpace f;
        f.chart = make_chart("sphere");
        f.domain = spherical_polygon_domain(verts);
        f.topo = {1, true, 0};
        auto [bu, bv] = bins_or(12, 12);
        f.bins = {bu, bv, f.domain.bbox};
        detail::subgrid_sphere_bins(f, 64);
        s.topo = f.topo;

        BoundarySpec bspec;
        const auto& loop = f.domain.loops[0];
        bspec.vertex_locations = loop.vertices;
        bspec.vertex_oracle.assign(loop.vertices.size(), detail::kNaN);
        for (double ang : loop.vertex_angles) {
            bspec.vertex_reference.push_back(ang / M_PI);
        }
        bspec.edge_lengths = detail::loop_edge_lengths(f.domain);
        bspec.profile_bins = pbins;
        s.boundary = std::move(bspec);
        s.factors.push_back(std::move(f));
        return s;
    }

    if (name == "cap_with_holes") {
        double pd = detail::take(vals, "p", 0.0);
        detail::expect_empty(vals, name);
        int p = static_cast<int>(std::lround(pd));
        if (p < 0 || p > 6 || std::abs(pd - p) > 1e-9) {
            throw InvalidParameter("cap_with_holes: p must be an integer in [0, 6]");
        }
        s.summary = scenario_catalog()[5].second;

        Eigen::Vector3d c0(-1.0, 0.0, 0.0);
        Eigen::Vector3d e1 = c0.unitOrthogonal();
        Eigen::Vector3d e2 = c0.cross(e1);
        std::vector<CapSpec> holes;
        for (int j = 0; j < p; ++j) {
            double phi = 2.0 * M_PI * j / p;
            Eigen::Vector3d hc = std::cos(0.4) * c0 +
                                 std::sin(0.4) * (std::cos(phi) * e1 + std::sin(phi) * e2);
            holes.push_back({hc, 0.12});
        }

        FactorSpace f;
        f.chart = make_chart("sphere");
        f.domain = cap_domain({c0, 0.8}, holes);
        f.topo = {1 - p, true, p};
        auto [bu, bv] = bins_or(12, 12);
        f.bins = {bu, bv, f.domain.bbox};
        detail::subgrid_sphere_bins(f, 64);
        s.topo = f.topo;

        BoundarySpec bspec;
        bspec.edge_lengths = detail::loop_edge_lengths(f.domain);
        bspec.profile_bins = pbins;
        s.boundary = std::move(bspec);
        s.factors.push_back(std::move(f));
        return s;
    }

    if (name == "product") {
        detail::expect_empty(vals, name);
        std::vector<std::string> names = params.factors;
        if (names.empty()) names = {"sphere", "sphere"};
        if (names.size() != 2) {
            throw InvalidParameter("product: exactly two factors are supported");
        }
        s.summary = scenario_catalog()[6].second;
        s.kind = Scenario::Kind::product;
        std::vector<std::shared_ptr<const Chart>> charts;
        auto [bu, bv] = bins_or(16, 16);
        for (const auto& fname : names) {
            FactorSpace f;
            if (fname == "sphere") {
                f = detail::sphere_factor(1.0, bu, bv);
            } else if (fname == "torus") {
                f = detail::torus_factor(2.0, 1.0, bu, bv);
            } else if (fname == "ellipsoid") {
                f = detail::ellipsoid_factor(1.0, 1.3, 0.7, bu, bv);
            } else {
                throw InvalidParameter("product: unsupported factor '" + fname + "'");
            }
            s.stat_grids.push_back(detail::chart_grid(*f.chart, 6, 12));
            charts.push_back(f.chart);
            s.factors.push_back(std::move(f));
        }
        s.space = SplitSpace::product(charts);
        s.topo = product_topology({s.factors[0].topo, s.factors[1].topo});
        return s;
    }

    if (name == "s4patch") {
        double delta = detail::take(vals, "delta", 0.2);
        detail::expect_empty(vals, name);
        s.summary = scenario_catalog()[7].second;
        s.kind = Scenario::Kind::patch4;
        s.delta = delta;
        s.space = SplitSpace::patch4(delta);
        for (int k = 0; k < 2; ++k) {
            FactorSpace f;
            PolygonDomain square({{-delta, -delta},
                                  {delta, -delta},
                                  {delta, delta},
                                  {-delta, delta}});
            f.domain = polygon_domain(square);
            f.topo = {1, true, 0};
            auto [bu, bv] = bins_or(8, 8);
            f.bins = {bu, bv, {-delta, delta, -delta, delta}};
            f.bin_oracle.assign(f.bins.bins(), detail::kNaN);
            f.bin_area.assign(f.bins.bins(), detail::kNaN);
            s.stat_grids.push_back({6, 6, {-delta, delta, -delta, delta}});
            s.factors.push_back(std::move(f));
        }
        s.topo = product_topology({s.factors[0].topo, s.factors[1].topo});
        return s;
    }

    throw UnknownScenario("unknown scenario '" + name + "'");
}

// Positivity margin of the slice curvatures that the block decomposition
// relies on; throws NonDefiniteSign when the margin is not strictly positive.
inline double sectional_sign_margin(const Scenario& s) {
    if (s.kind != Scenario::Kind::patch4) {
        throw InvalidParameter("sectional_sign_margin: only defined for block patches");
    }
    double delta = s.delta;
    double m = detail::slice_margin(
        [delta](const Vec2& other) -> std::shared_ptr<const Chart> {
            return std::make_shared<Slice4Chart>(delta, 0, other);
        },
        delta);
    return definite_margin_or_throw(m);
}

}  // namespace ixcurv
