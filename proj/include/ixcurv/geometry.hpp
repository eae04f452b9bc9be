#pragma once

// Embedded-surface machinery: parametric charts with analytic or
// finite-difference derivatives, fundamental forms, Gauss curvature through
// two independent routes, areas by quadrature, polygon domains and normal
// cones, and the round-4-sphere patch used for coordinate 2-slices.

#include <Eigen/Dense>

#include <ixcurv/errors.hpp>
#include <ixcurv/quadrature.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ixcurv {

// Ambient points: dynamic dimension with fixed capacity (stack storage, no
// per-call allocation in hot loops).
using AmbientVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// ---------------------------------------------------------------------------
// Chart: a parametric patch (u,v) -> R^m on a rectangle, possibly periodic.
// Derived charts should override jacobian/hessian with analytic formulas;
// the central-difference fallback (step 1e-5, one Richardson pass) exists so
// position-only charts still work at reduced accuracy.

struct Chart {
    std::string name;
    int ambient_dim = 3;
    double u0 = 0.0, u1 = 1.0, v0 = 0.0, v1 = 1.0;
    bool periodic_u = false, periodic_v = false;
    // v-lines where the chart itself (not the surface) degenerates, e.g. the
    // lat-long poles. Link circles must stay clear of these.
    std::vector<double> singular_v{};

    virtual AmbientVec embed(double u, double v) const = 0;

    virtual void jacobian(double u, double v, AmbientVec& xu, AmbientVec& xv) const {
        auto d = [&](int axis, double h) {
            AmbientVec p = axis == 0 ? embed(u + h, v) : embed(u, v + h);
            AmbientVec m = axis == 0 ? embed(u - h, v) : embed(u, v - h);
            return AmbientVec((p - m) / (2.0 * h));
        };
        const double h = 1e-5;
        xu = (4.0 * d(0, h / 2) - d(0, h)) / 3.0;
        xv = (4.0 * d(1, h / 2) - d(1, h)) / 3.0;
    }

    virtual void hessian(double u, double v, AmbientVec& xuu, AmbientVec& xuv,
                         AmbientVec& xvv) const {
        const double h = 1e-5;
        auto second = [&](int a1, int a2, double s) -> AmbientVec {
            if (a1 == a2) {
                double du = a1 == 0 ? s : 0.0, dv = a1 == 0 ? 0.0 : s;
                return (embed(u + du, v + dv) - 2.0 * embed(u, v) +
                        embed(u - du, v - dv)) /
                       (s * s);
            }
            return (embed(u + s, v + s) - embed(u + s, v - s) - embed(u - s, v + s) +
                    embed(u - s, v - s)) /
                   (4.0 * s * s);
        };
        xuu = (4.0 * second(0, 0, h / 2) - second(0, 0, h)) / 3.0;
        xuv = (4.0 * second(0, 1, h / 2) - second(0, 1, h)) / 3.0;
        xvv = (4.0 * second(1, 1, h / 2) - second(1, 1, h)) / 3.0;
    }

    double u_period() const { return u1 - u0; }
    double v_period() const { return v1 - v0; }

    // Chart-rectangle diagonal; the scale for dedupe radii and link radii.
    double diameter() const { return std::hypot(u1 - u0, v1 - v0); }

    virtual ~Chart() = default;
};

// ---------------------------------------------------------------------------
// First fundamental form and curvature.

struct FundamentalForm {
    double E, F, G;
    double det() const { return E * G - F * F; }
};

inline FundamentalForm first_fundamental_form(const Chart& chart, double u, double v) {
    AmbientVec xu, xv;
    chart.jacobian(u, v, xu, xv);
    FundamentalForm ff{xu.dot(xu), xu.dot(xv), xv.dot(xv)};
    if (ff.det() <= 1e-14) {
        throw DegenerateImmersion(chart.name + ": EG-F^2 <= 1e-14 at (" +
                                  std::to_string(u) + "," + std::to_string(v) + ")");
    }
    return ff;
}

// Route 1: second fundamental form against the unit normal (ambient R^3 only).
inline double gauss_curvature_normal(const Chart& chart, double u, double v) {
    if (chart.ambient_dim != 3) {
        throw InvalidParameter("normal-based curvature needs ambient dimension 3");
    }
    AmbientVec xu, xv, xuu, xuv, xvv;
    chart.jacobian(u, v, xu, xv);
    chart.hessian(u, v, xuu, xuv, xvv);
    Eigen::Vector3d n = Eigen::Vector3d(xu.head<3>()).cross(Eigen::Vector3d(xv.head<3>()));
    double nn = n.norm();
    if (nn * nn <= 1e-14) throw DegenerateImmersion(chart.name + ": degenerate normal");
    n /= nn;
    double L = n.dot(xuu.head<3>());
    double M = n.dot(xuv.head<3>());
    double N = n.dot(xvv.head<3>());
    return (L * N - M * M) / (nn * nn);
}

namespace detail {

// First derivatives of E, F, G from the chart's analytic second derivatives.
struct MetricDerivs {
    double Eu, Ev, Fu, Fv, Gu, Gv;
};

inline MetricDerivs metric_first_derivs(const Chart& chart, double u, double v) {
    AmbientVec xu, xv, xuu, xuv, xvv;
    chart.jacobian(u, v, xu, xv);
    chart.hessian(u, v, xuu, xuv, xvv);
    MetricDerivs d;
    d.Eu = 2.0 * xu.dot(xuu);
    d.Ev = 2.0 * xu.dot(xuv);
    d.Fu = xuu.dot(xv) + xu.dot(xuv);
    d.Fv = xuv.dot(xv) + xu.dot(xvv);
    d.Gu = 2.0 * xv.dot(xuv);
    d.Gv = 2.0 * xv.dot(xvv);
    return d;
}

inline double brioschi_at(const Chart& chart, double u, double v, double h) {
    auto ff = first_fundamental_form(chart, u, v);
    auto d = metric_first_derivs(chart, u, v);
    // Second derivatives by one central difference of the analytic first
    // derivatives (keeps roundoff at ~eps/h instead of eps/h^2).
    auto dp_u = metric_first_derivs(chart, u + h, v);
    auto dm_u = metric_first_derivs(chart, u - h, v);
    auto dp_v = metric_first_derivs(chart, u, v + h);
    auto dm_v = metric_first_derivs(chart, u, v - h);
    double Evv = (dp_v.Ev - dm_v.Ev) / (2.0 * h);
    double Guu = (dp_u.Gu - dm_u.Gu) / (2.0 * h);
    double Fuv = (dp_v.Fu - dm_v.Fu) / (2.0 * h);

    Eigen::Matrix3d M1, M2;
    M1 << -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * d.Eu, d.Fu - 0.5 * d.Ev,
        d.Fv - 0.5 * d.Gu, ff.E, ff.F,
        0.5 * d.Gv, ff.F, ff.G;
    M2 << 0.0, 0.5 * d.Ev, 0.5 * d.Gu,
        0.5 * d.Ev, ff.E, ff.F,
        0.5 * d.Gu, ff.F, ff.G;
    double det = ff.det();
    return (M1.determinant() - M2.determinant()) / (det * det);
}

}  // namespace detail

// Route 2: Brioschi formula from the metric alone (any ambient dimension).
// One Richardson pass over the finite-difference step.
inline double gauss_curvature_metric(const Chart& chart, double u, double v) {
    const double h = 1e-3 * std::max(1.0, std::max(std::abs(u), std::abs(v)));
    double kh = detail::brioschi_at(chart, u, v, h);
    double kh2 = detail::brioschi_at(chart, u, v, h / 2.0);
    return (4.0 * kh2 - kh) / 3.0;
}

inline double gauss_curvature(const Chart& chart, double u, double v) {
    return chart.ambient_dim == 3 ? gauss_curvature_normal(chart, u, v)
                                  : gauss_curvature_metric(chart, u, v);
}

// ---------------------------------------------------------------------------
// Topology bookkeeping carried by every scenario space.

struct TopologyInfo {
    int euler_char = 0;
    bool has_boundary = false;
    int holes = 0;
};

inline TopologyInfo product_topology(const std::vector<TopologyInfo>& factors) {
    TopologyInfo t;
    t.euler_char = 1;
    for (const auto& f : factors) {
        t.euler_char *= f.euler_char;
        t.has_boundary = t.has_boundary || f.has_boundary;
        t.holes += f.holes;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Area by tensor Gauss-Legendre quadrature of sqrt(EG - F^2).

struct Rect {
    double u0, u1, v0, v1;
};

inline double chart_area(const Chart& chart, int quadrature_n) {
    return integrate2d(
        [&](double u, double v) { return std::sqrt(first_fundamental_form(chart, u, v).det()); },
        chart.u0, chart.u1, chart.v0, chart.v1, quadrature_n);
}

inline double chart_area(const Chart& chart, int quadrature_n, const Rect& rect) {
    return integrate2d(
        [&](double u, double v) { return std::sqrt(first_fundamental_form(chart, u, v).det()); },
        rect.u0, rect.u1, rect.v0, rect.v1, quadrature_n);
}

// ---------------------------------------------------------------------------
// Flat polygon domains (counter-clockwise, simple).

class PolygonDomain {
  public:
    explicit PolygonDomain(std::vector<Vec2> vertices) : vs_(std::move(vertices)) {
        if (vs_.size() < 3) throw InvalidParameter("polygon needs >= 3 vertices");
        double signed_area = 0.0;
        for (size_t i = 0; i < vs_.size(); ++i) {
            const Vec2& a = vs_[i];
            const Vec2& b = vs_[(i + 1) % vs_.size()];
            signed_area += a.x() * b.y() - b.x() * a.y();
        }
        if (signed_area <= 0.0) {
            throw InvalidParameter("polygon must be counter-clockwise and nondegenerate");
        }
        area_ = 0.5 * signed_area;
    }

    int size() const { return static_cast<int>(vs_.size()); }
    const Vec2& vertex(int i) const { return vs_[i]; }
    const std::vector<Vec2>& vertices() const { return vs_; }

    // Interior angle at vertex i (pi minus the exterior turn).
    double interior_angle(int i) const {
        int n = size();
        Vec2 d1 = vs_[i] - vs_[(i + n - 1) % n];
        Vec2 d2 = vs_[(i + 1) % n] - vs_[i];
        double turn = std::atan2(d1.x() * d2.y() - d1.y() * d2.x(), d1.dot(d2));
        return M_PI - turn;
    }

    bool vertex_convex(int i) const { return interior_angle(i) < M_PI; }

    bool inside(const Vec2& p) const {
        // Ray casting along +u.
        bool in = false;
        int n = size();
        for (int i = 0; i < n; ++i) {
            const Vec2& a = vs_[i];
            const Vec2& b = vs_[(i + 1) % n];
            if ((a.y() > p.y()) != (b.y() > p.y())) {
                double x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
                if (p.x() < x) in = !in;
            }
        }
        return in;
    }

    double area() const { return area_; }

    double diameter() const {
        double d = 0.0;
        for (size_t i = 0; i < vs_.size(); ++i)
            for (size_t j = i + 1; j < vs_.size(); ++j)
                d = std::max(d, (vs_[i] - vs_[j]).norm());
        return d;
    }

  private:
    std::vector<Vec2> vs_;
    double area_;
};

// Probability that a uniform direction attains its minimum over the polygon
// at vertex i: the normal-cone fraction (pi - alpha) / (2 pi). Reflex
// vertices have an empty cone and get mass 0.
inline double normal_cone_mass(const PolygonDomain& poly, int vertex_index) {
    double alpha = poly.interior_angle(vertex_index);
    return std::max(0.0, (M_PI - alpha) / (2.0 * M_PI));
}

// ---------------------------------------------------------------------------
// Spherical utilities.

// Interior angles of the spherical triangle ABC (unit vectors) at A, B, C.
inline Eigen::Vector3d spherical_triangle_angles(const Eigen::Vector3d& A,
                                                 const Eigen::Vector3d& B,
                                                 const Eigen::Vector3d& C) {
    auto angle_at = [](const Eigen::Vector3d& P, const Eigen::Vector3d& Q,
                       const Eigen::Vector3d& R) {
        Eigen::Vector3d tq = (Q - P.dot(Q) * P).normalized();
        Eigen::Vector3d tr = (R - P.dot(R) * P).normalized();
        return std::acos(std::clamp(tq.dot(tr), -1.0, 1.0));
    };
    return {angle_at(A, B, C), angle_at(B, C, A), angle_at(C, A, B)};
}

// ---------------------------------------------------------------------------
// Catalog charts.

struct SphereChart final : Chart {
    double R;
    explicit SphereChart(double radius = 1.0) : R(radius) {
        if (R <= 0.0) throw InvalidParameter("sphere: R must be positive");
        name = "sphere";
        ambient_dim = 3;
        u1 = 2.0 * M_PI;
        v1 = M_PI;
        periodic_u = true;
        singular_v = {0.0, M_PI};
    }
    AmbientVec embed(double u, double v) const override {
        AmbientVec x(3);
        double sv = std::sin(v);
        x << R * std::cos(u) * sv, R * std::sin(u) * sv, R * std::cos(v);
        return x;
    }
    void jacobian(double u, double v, AmbientVec& xu, AmbientVec& xv) const override {
        double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        xu.resize(3);
        xv.resize(3);
        xu << -R * su * sv, R * cu * sv, 0.0;
        xv << R * cu * cv, R * su * cv, -R * sv;
    }
    void hessian(double u, double v, AmbientVec& xuu, AmbientVec& xuv,
                 AmbientVec& xvv) const override {
        double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        xuu.resize(3);
        xuv.resize(3);
        xvv.resize(3);
        xuu << -R * cu * sv, -R * su * sv, 0.0;
        xuv << -R * su * cv, R * cu * cv, 0.0;
        xvv << -R * cu * sv, -R * su * sv, -R * cv;
    }
};

struct TorusChart final : Chart {
    double R, r;
    TorusChart(double major, double minor) : R(major), r(minor) {
        if (!(R > r && r > 0.0)) throw InvalidParameter("torus: need R > r > 0");
        name = "torus";
        ambient_dim = 3;
        u1 = 2.0 * M_PI;
        v1 = 2.0 * M_PI;
        periodic_u = true;
        periodic_v = true;
    }
    AmbientVec embed(double u, double v) const override {
        AmbientVec x(3);
        double w = R + r * std::cos(v);
        x << w * std::cos(u), w * std::sin(u), r * std::sin(v);
        return x;
    }
    void jacobian(double u, double v, AmbientVec& xu, AmbientVec& xv) const override {
        double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        double w = R + r * cv;
        xu.resize(3);
        xv.resize(3);
        xu << -w * su, w * cu, 0.0;
        xv << -r * sv * cu, -r * sv * su, r * cv;
    }
    void hessian(double u, double v, AmbientVec& xuu, AmbientVec& xuv,
                 AmbientVec& xvv) const override {
        double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        double w = R + r * cv;
        xuu.resize(3);
        xuv.resize(3);
        xvv.resize(3);
        xuu << -w * cu, -w * su, 0.0;
        xuv << r * sv * su, -r * sv * cu, 0.0;
        xvv << -r * cv * cu, -r * cv * su, -r * sv;
    }
};

struct EllipsoidChart final : Chart {
    double a, b, c;
    EllipsoidChart(double ax, double bx, double cx) : a(ax), b(bx), c(cx) {
        if (a <= 0.0 || b <= 0.0 || c <= 0.0) {
            throw InvalidParameter("ellipsoid: semi-axes must be positive");
        }
        name = "ellipsoid";
        ambient_dim = 3;
        u1 = 2.0 * M_PI;
        v1 = M_PI;
        periodic_u = true;
        singular_v = {0.0, M_PI};
    }
    AmbientVec embed(double u, double v) const override {
        AmbientVec x(3);
        double sv = std::sin(v);
        x << a * std::cos(u) * sv, b * std::sin(u) * sv, c * std::cos(v);
        return x;
    }
    void jacobian(double u, double v, AmbientVec& xu, AmbientVec& xv) const override {
        double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        xu.resize(3);
        xv.resize(3);
        xu << -a * su * sv, b * cu * sv, 0.0;
        xv << a * cu * cv, b * su * cv, -c * sv;
    }
    void hessian(double u, double v, AmbientVec& xuu, AmbientVec& xuv,
                 AmbientVec& xvv) const override {
        double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        xuu.resize(3);
        xuv.resize(3);
        xvv.resize(3);
        xuu << -a * cu * sv, -b * su * sv, 0.0;
        xuv << -a * su * cv, b * cu * cv, 0.0;
        xvv << -a * cu * sv, -b * su * sv, -c * cv;
    }
};

struct PlaneChart final : Chart {
    explicit PlaneChart(double ua = 0.0, double ub = 1.0, double va = 0.0, double vb = 1.0) {
        name = "plane";
        ambient_dim = 2;
        u0 = ua;
        u1 = ub;
        v0 = va;
        v1 = vb;
    }
    AmbientVec embed(double u, double v) const override {
        AmbientVec x(2);
        x << u, v;
        return x;
    }
    void jacobian(double, double, AmbientVec& xu, AmbientVec& xv) const override {
        xu.resize(2);
        xv.resize(2);
        xu << 1.0, 0.0;
        xv << 0.0, 1.0;
    }
    void hessian(double, double, AmbientVec& xuu, AmbientVec& xuv,
                 AmbientVec& xvv) const override {
        xuu = AmbientVec::Zero(2);
        xuv = AmbientVec::Zero(2);
        xvv = AmbientVec::Zero(2);
    }
};

// ---------------------------------------------------------------------------
// Round S^4 patch: graph chart y -> (y, sqrt(1-|y|^2)) over the box
// [-delta, delta]^4 in R^5, split into two coordinate pairs.

struct Patch4 {
    double delta;
    explicit Patch4(double d) : delta(d) {
        if (!(d > 0.0 && d <= 0.35)) {
            throw InvalidParameter("s4patch: delta must be in (0, 0.35]");
        }
    }
    static AmbientVec embed(const Eigen::Vector4d& y) {
        double h2 = 1.0 - y.squaredNorm();
        AmbientVec x(5);
        x << y(0), y(1), y(2), y(3), std::sqrt(h2);
        return x;
    }
    // sqrt(det g) of the induced 4-metric: 1/sqrt(1-|y|^2).
    static double volume_density(const Eigen::Vector4d& y) {
        return 1.0 / std::sqrt(1.0 - y.squaredNorm());
    }
};

// Coordinate 2-slice of the patch: coordinates (u,v) occupy block
// `block` (0 -> y1,y2; 1 -> y3,y4) and the other pair is frozen.
struct Slice4Chart final : Chart {
    int block;
    Vec2 frozen;
    Slice4Chart(double delta, int blk, const Vec2& other) : block(blk), frozen(other) {
        if (blk != 0 && blk != 1) throw InvalidParameter("s4patch slice: block must be 0 or 1");
        Patch4 check(delta);  // validates delta
        name = "s4patch_slice";
        ambient_dim = 5;
        u0 = -delta;
        u1 = delta;
        v0 = -delta;
        v1 = delta;
    }
    Eigen::Vector4d assemble(double u, double v) const {
        Eigen::Vector4d y;
        if (block == 0)
            y << u, v, frozen.x(), frozen.y();
        else
            y << frozen.x(), frozen.y(), u, v;
        return y;
    }
    AmbientVec embed(double u, double v) const override {
        return Patch4::embed(assemble(u, v));
    }
    void jacobian(double u, double v, AmbientVec& xu, AmbientVec& xv) const override {
        double h = std::sqrt(1.0 - assemble(u, v).squaredNorm());
        int p = 2 * block;
        xu = AmbientVec::Zero(5);
        xv = AmbientVec::Zero(5);
        xu(p) = 1.0;
        xu(4) = -u / h;
        xv(p + 1) = 1.0;
        xv(4) = -v / h;
    }
    void hessian(double u, double v, AmbientVec& xuu, AmbientVec& xuv,
                 AmbientVec& xvv) const override {
        double h2 = 1.0 - assemble(u, v).squaredNorm();
        double h = std::sqrt(h2), h3 = h2 * h;
        xuu = AmbientVec::Zero(5);
        xuv = AmbientVec::Zero(5);
        xvv = AmbientVec::Zero(5);
        xuu(4) = -1.0 / h - u * u / h3;
        xuv(4) = -u * v / h3;
        xvv(4) = -1.0 / h - v * v / h3;
    }
};

// ---------------------------------------------------------------------------
// Chart catalog.

using ChartParams = std::map<std::string, double>;

namespace detail {
inline double take(ChartParams& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    double v = it->second;
    p.erase(it);
    return v;
}
inline void expect_empty(const ChartParams& p, const std::string& chart) {
    if (!p.empty()) {
        throw InvalidParameter(chart + ": unknown parameter '" + p.begin()->first + "'");
    }
}
}  // namespace detail

inline std::shared_ptr<const Chart> make_chart(const std::string& name, ChartParams params = {}) {
    if (name == "sphere") {
        double R = detail::take(params, "R", 1.0);
        detail::expect_empty(params, name);
        return std::make_shared<SphereChart>(R);
    }
    if (name == "torus") {
        double R = detail::take(params, "R", 2.0);
        double r = detail::take(params, "r", 1.0);
        detail::expect_empty(params, name);
        return std::make_shared<TorusChart>(R, r);
    }
    if (name == "ellipsoid") {
        double a = detail::take(params, "a", 1.0);
        double b = detail::take(params, "b", 1.3);
        double c = detail::take(params, "c", 0.7);
        detail::expect_empty(params, name);
        return std::make_shared<EllipsoidChart>(a, b, c);
    }
    if (name == "plane") {
        detail::expect_empty(params, name);
        return std::make_shared<PlaneChart>();
    }
    if (name == "s4patch") {
        // Registered as its central coordinate 2-slice; scenario code builds
        // the dummy-dependent slices directly.
        double delta = detail::take(params, "delta", 0.2);
        detail::expect_empty(params, name);
        return std::make_shared<Slice4Chart>(delta, 0, Vec2::Zero());
    }
    throw UnknownScenario("unknown chart '" + name + "'");
}

}  // namespace ixcurv
