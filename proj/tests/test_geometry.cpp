// Charts, fundamental forms, curvature (two routes), areas, normal cones.

#include <catch2/catch_amalgamated.hpp>

#include <ixcurv/geometry.hpp>
#include <ixcurv/rng.hpp>

#include "oracles.hpp"

#include <cmath>

using namespace ixcurv;

namespace {
const double kPi = M_PI;

std::vector<std::shared_ptr<const Chart>> catalog_charts() {
    return {
        make_chart("sphere", {}),
        make_chart("torus", {{"R", 2.0}, {"r", 1.0}}),
        make_chart("ellipsoid", {{"a", 1.0}, {"b", 1.3}, {"c", 0.7}}),
        make_chart("plane", {}),
        make_chart("s4patch", {{"delta", 0.2}}),
    };
}
}  // namespace

TEST_CASE("torus fundamental form at the outer equator") {
    // Convention here: u = major (toroidal) angle, v = minor (poloidal) angle,
    // so E carries the major radius. At v=0: E=(R+r)^2=9, F=0, G=r^2=1.
    auto torus = make_chart("torus", {{"R", 2.0}, {"r", 1.0}});
    auto ff = first_fundamental_form(*torus, 0.3, 0.0);
    CHECK(ff.E == Catch::Approx(9.0).margin(1e-12));
    CHECK(ff.F == Catch::Approx(0.0).margin(1e-12));
    CHECK(ff.G == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("degenerate immersion is rejected") {
    // A chart that collapses the v direction entirely.
    struct Collapsed : Chart {
        Collapsed() {
            name = "collapsed";
            ambient_dim = 3;
            u1 = 1.0;
            v1 = 1.0;
        }
        AmbientVec embed(double u, double) const override {
            AmbientVec x(3);
            x << u, 0.0, 0.0;
            return x;
        }
    } chart;
    CHECK_THROWS_AS(first_fundamental_form(chart, 0.5, 0.5), DegenerateImmersion);
}

TEST_CASE("immersion holds on a 64x64 grid for every catalog chart") {
    for (const auto& chart : catalog_charts()) {
        for (int i = 0; i < 64; ++i) {
            for (int j = 0; j < 64; ++j) {
                double u = chart->u0 + (chart->u1 - chart->u0) * (i + 0.5) / 64.0;
                double v = chart->v0 + (chart->v1 - chart->v0) * (j + 0.5) / 64.0;
                auto ff = first_fundamental_form(*chart, u, v);
                REQUIRE(ff.det() > 1e-14);
            }
        }
    }
}

TEST_CASE("periodic identifications are consistent with embed") {
    auto torus = make_chart("torus", {{"R", 2.0}, {"r", 1.0}});
    auto sphere = make_chart("sphere", {});
    for (double v : {0.4, 1.1, 2.9}) {
        CHECK((torus->embed(0.7 + 2 * kPi, v) - torus->embed(0.7, v)).norm() < 1e-12);
        CHECK((torus->embed(0.7, v + 2 * kPi) - torus->embed(0.7, v)).norm() < 1e-12);
        CHECK((sphere->embed(1.2 + 2 * kPi, v) - sphere->embed(1.2, v)).norm() < 1e-12);
    }
}

TEST_CASE("torus curvature formula at the outer equator") {
    // K = cos v / (r (R + r cos v)); at v=0 with R=2, r=1 this is 1/3.
    auto torus = make_chart("torus", {{"R", 2.0}, {"r", 1.0}});
    CHECK(gauss_curvature(*torus, 1.0, 0.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-9));
    // And on the inner equator: K = -1/(r (R - r)) = -1.
    CHECK(gauss_curvature(*torus, 1.0, kPi) == Catch::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("sphere has unit curvature everywhere") {
    auto sphere = make_chart("sphere", {});
    for (double v : {0.3, 1.0, 2.0, 2.8}) {
        CHECK(gauss_curvature(*sphere, 0.9, v) == Catch::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("normal and metric curvature routes agree at random points") {
    Stream s(2024u, 0, Role::direction(0));
    for (const auto& chart : catalog_charts()) {
        if (chart->ambient_dim != 3) continue;
        for (int k = 0; k < 1000; ++k) {
            // Stay clear of the lat-long poles where the chart degenerates.
            double u = chart->u0 + (chart->u1 - chart->u0) * s.uniform();
            double v = chart->v0 + (chart->v1 - chart->v0) * (0.02 + 0.96 * s.uniform());
            double kn = gauss_curvature_normal(*chart, u, v);
            double km = gauss_curvature_metric(*chart, u, v);
            REQUIRE(km == Catch::Approx(kn).margin(1e-6 * (1.0 + std::abs(kn))));
        }
    }
}

TEST_CASE("metric route works for the embedded 4-sphere slice") {
    // Central coordinate 2-slice of the round S^4 patch is a unit 2-sphere
    // patch: K = 1. Only the metric (Brioschi) route applies in ambient R^5.
    auto slice = make_chart("s4patch", {{"delta", 0.2}});
    CHECK(gauss_curvature(*slice, 0.0, 0.0) == Catch::Approx(1.0).margin(1e-6));
    CHECK(gauss_curvature(*slice, 0.1, -0.15) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("chart areas match closed forms") {
    auto sphere = make_chart("sphere", {});
    auto torus = make_chart("torus", {{"R", 2.0}, {"r", 1.0}});
    auto plane = make_chart("plane", {});
    CHECK(chart_area(*sphere, 64) == Catch::Approx(4.0 * kPi).epsilon(1e-6));
    CHECK(chart_area(*torus, 64) == Catch::Approx(4.0 * kPi * kPi * 2.0).epsilon(1e-6));
    CHECK(chart_area(*plane, 64) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("area is additive under domain bisection") {
    auto torus = make_chart("torus", {{"R", 2.0}, {"r", 1.0}});
    double mid = kPi;
    double left = chart_area(*torus, 48, {torus->u0, mid, torus->v0, torus->v1});
    double right = chart_area(*torus, 48, {mid, torus->u1, torus->v0, torus->v1});
    double full = chart_area(*torus, 64);
    CHECK(left + right == Catch::Approx(full).epsilon(1e-9));
}

TEST_CASE("normal cone masses: square") {
    PolygonDomain square({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
        double m = normal_cone_mass(square, i);
        CHECK(m == Catch::Approx(0.25).margin(1e-14));
        total += m;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("normal cone masses: equilateral triangle") {
    PolygonDomain tri({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}});
    for (int i = 0; i < 3; ++i) {
        CHECK(normal_cone_mass(tri, i) == Catch::Approx(1.0 / 3.0).margin(1e-14));
    }
}

TEST_CASE("normal cone masses: 30-60-90 triangle with enumeration oracle") {
    // Vertices ordered so the interior angles are (90, 60, 30) degrees.
    std::vector<Eigen::Vector2d> vs = {{0, 0}, {1, 0}, {0, std::sqrt(3.0)}};
    PolygonDomain tri(vs);
    const double expected[3] = {0.25, 1.0 / 3.0, 5.0 / 12.0};
    auto brute = oracle::vertex_argmin_fractions(vs);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        double m = normal_cone_mass(tri, i);
        CHECK(m == Catch::Approx(expected[i]).margin(1e-14));
        CHECK(m == Catch::Approx(brute[i]).margin(5e-6));
        total += m;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("reflex vertices are flagged and carry no cone mass") {
    // L-shaped hexagon; the vertex at (1,1) is reflex (interior angle 3pi/2).
    PolygonDomain ell({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
    CHECK_FALSE(ell.vertex_convex(3));
    CHECK(normal_cone_mass(ell, 3) == 0.0);
    for (int i : {0, 1, 2, 4, 5}) CHECK(ell.vertex_convex(i));
}

TEST_CASE("polygon inside test and area") {
    PolygonDomain tri({{0, 0}, {1, 0}, {0, std::sqrt(3.0)}});
    CHECK(tri.inside({0.2, 0.2}));
    CHECK_FALSE(tri.inside({0.9, 0.9}));
    CHECK(tri.area() == Catch::Approx(std::sqrt(3.0) / 2).margin(1e-14));
}

TEST_CASE("finite-difference derivative fallback matches analytic derivatives") {
    auto sphere = make_chart("sphere", {});
    // Wrap the sphere's embed in a chart that only supplies positions.
    struct FdSphere : Chart {
        std::shared_ptr<const Chart> base;
        explicit FdSphere(std::shared_ptr<const Chart> b) : base(std::move(b)) {
            name = "fd_sphere";
            ambient_dim = 3;
            u1 = 2 * kPi;
            v1 = kPi;
            periodic_u = true;
        }
        AmbientVec embed(double u, double v) const override { return base->embed(u, v); }
    } fd(sphere);

    for (double v : {0.5, 1.3, 2.4}) {
        AmbientVec xu_a, xv_a, xu_f, xv_f;
        sphere->jacobian(1.1, v, xu_a, xv_a);
        fd.jacobian(1.1, v, xu_f, xv_f);
        CHECK((xu_a - xu_f).norm() < 1e-8);
        CHECK((xv_a - xv_f).norm() < 1e-8);
        AmbientVec a1, a2, a3, f1, f2, f3;
        sphere->hessian(1.1, v, a1, a2, a3);
        fd.hessian(1.1, v, f1, f2, f3);
        CHECK((a1 - f1).norm() < 1e-4);
        CHECK((a2 - f2).norm() < 1e-4);
        CHECK((a3 - f3).norm() < 1e-4);
    }
}

TEST_CASE("spherical triangle: angle excess equals l'Huilier area") {
    // Harriot's theorem cross-check at oracle precision for the octant
    // triangle and for a generic triangle.
    Eigen::Vector3d A(1, 0, 0), B(0, 1, 0), C(0, 0, 1);
    double excess = spherical_triangle_angles(A, B, C).sum() - kPi;
    CHECK(excess == Catch::Approx(oracle::lhuilier_area(A, B, C)).margin(1e-9));
    CHECK(excess == Catch::Approx(kPi / 2).margin(1e-12));

    Eigen::Vector3d P(1, 0.2, -0.1), Q(-0.3, 1, 0.4), R(0.1, -0.2, 1);
    P.normalize();
    Q.normalize();
    R.normalize();
    double e2 = spherical_triangle_angles(P, Q, R).sum() - kPi;
    CHECK(e2 == Catch::Approx(oracle::lhuilier_area(P, Q, R)).margin(1e-9));
}

TEST_CASE("unknown chart name and invalid parameters are rejected") {
    CHECK_THROWS_AS(make_chart("klein_bottle", {}), UnknownScenario);
    CHECK_THROWS_AS(make_chart("torus", {{"R", 1.0}, {"r", 2.0}}), InvalidParameter);
    CHECK_THROWS_AS(make_chart("s4patch", {{"delta", 0.9}}), InvalidParameter);
}
