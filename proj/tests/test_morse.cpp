// Random height/combined functions: derivative consistency, sampling laws,
// block-sum identity, decoupling on products vs nonlocality on the patch.

#include <catch2/catch_amalgamated.hpp>

#include <ixcurv/morse.hpp>
#include <ixcurv/stats.hpp>

#include <cmath>

using namespace ixcurv;

namespace {
const double kPi = M_PI;

// Central-difference gradient/hessian of a ChartFunction's eval route.
Vec2 fd_grad(const ChartFunction& h, const Vec2& p, double step = 1e-6) {
    return {(h.eval({p.x() + step, p.y()}) - h.eval({p.x() - step, p.y()})) / (2 * step),
            (h.eval({p.x(), p.y() + step}) - h.eval({p.x(), p.y() - step})) / (2 * step)};
}

Mat2 fd_hess(const ChartFunction& h, const Vec2& p, double step = 1e-4) {
    Mat2 m;
    m(0, 0) = (h.eval({p.x() + step, p.y()}) - 2 * h.eval(p) + h.eval({p.x() - step, p.y()})) /
              (step * step);
    m(1, 1) = (h.eval({p.x(), p.y() + step}) - 2 * h.eval(p) + h.eval({p.x(), p.y() - step})) /
              (step * step);
    m(0, 1) = m(1, 0) =
        (h.eval({p.x() + step, p.y() + step}) - h.eval({p.x() + step, p.y() - step}) -
         h.eval({p.x() - step, p.y() + step}) + h.eval({p.x() - step, p.y() - step})) /
        (4 * step * step);
    return m;
}
}  // namespace

TEST_CASE("sampled directions are unit and isotropic") {
    for (int m : {3, 5}) {
        Stream s(11u, 0, Role::direction(0));
        const int n = 20000;
        Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < n; ++i) {
            Direction d = sample_direction(s, m);
            REQUIRE(std::abs(d.a.norm() - 1.0) < 1e-12);
            second += d.a * d.a.transpose();
        }
        second /= n;
        // E[a a^T] = I/m; 4-sigma bands from the known fourth moments.
        double var_diag = 3.0 / (m * (m + 2.0)) - 1.0 / (m * m);
        double var_off = 1.0 / (m * (m + 2.0));
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                double want = i == j ? 1.0 / m : 0.0;
                double band = 4.0 * std::sqrt((i == j ? var_diag : var_off) / n);
                REQUIRE(std::abs(second(i, j) - want) < band);
            }
        }
    }
}

TEST_CASE("axis height on the sphere is critical only at the poles") {
    auto sphere = make_chart("sphere", {});
    AmbientVec ez(3);
    ez << 0.0, 0.0, 1.0;
    auto h = restrict_height({ez}, sphere);
    // Away from the poles the pullback gradient is bounded below...
    for (double v = 0.2; v < kPi - 0.2; v += 0.1) {
        for (double u = 0.0; u < 2 * kPi; u += 0.5) {
            REQUIRE(h->grad({u, v}).norm() > 0.19);
        }
    }
    // ...and it vanishes exactly toward the polar lines.
    CHECK(h->grad({1.0, 1e-3}).norm() < 2e-3);
    CHECK(h->grad({4.0, kPi - 1e-3}).norm() < 2e-3);
}

TEST_CASE("plane heights have constant gradient and zero hessian") {
    auto plane = make_chart("plane", {});
    Stream s(5u, 1, Role::direction(0));
    Direction d = sample_direction(s, 2);
    auto h = restrict_height(d, plane);
    Vec2 g0 = h->grad({0.1, 0.1});
    for (double t : {0.3, 0.6, 0.9}) {
        CHECK((h->grad({t, 1.0 - t}) - g0).norm() < 1e-15);
        CHECK(h->hess({t, 1.0 - t}).norm() < 1e-15);
    }
}

TEST_CASE("height derivatives agree with finite differences of eval") {
    std::vector<std::shared_ptr<const Chart>> charts = {
        make_chart("sphere", {}),
        make_chart("torus", {{"R", 2.0}, {"r", 1.0}}),
        make_chart("s4patch", {{"delta", 0.2}}),
    };
    int chart_idx = 0;
    for (const auto& chart : charts) {
        Stream s(77u + chart_idx++, 0, Role::direction(0));
        auto h = restrict_height(sample_direction(s, chart->ambient_dim), chart);
        for (int k = 0; k < 100; ++k) {
            double u = chart->u0 + (chart->u1 - chart->u0) * (0.05 + 0.9 * s.uniform());
            double v = chart->v0 + (chart->v1 - chart->v0) * (0.05 + 0.9 * s.uniform());
            Vec2 g = h->grad({u, v});
            Mat2 hh = h->hess({u, v});
            REQUIRE((g - fd_grad(*h, {u, v})).norm() < 1e-5 * (1.0 + g.norm()));
            REQUIRE((hh - fd_hess(*h, {u, v})).norm() < 1e-5 * (1.0 + hh.norm()));
        }
    }
}

TEST_CASE("dummy points on a sphere factor follow the area law") {
    auto sphere = make_chart("sphere", {});
    auto space = SplitSpace::product({sphere, sphere});
    const int n = 20000, bins = 20;
    std::vector<double> count(bins, 0.0);
    for (int attempt = 0; attempt < n; ++attempt) {
        SampleCtx ctx{314159u, static_cast<uint64_t>(attempt)};
        auto ws = sample_dummy_points(ctx, space, 2);
        REQUIRE(ws.size() == 2);
        double v = ws[0](1);  // factor-0 latitude of dummy 0
        REQUIRE(v >= 0.0);
        REQUIRE(v <= kPi);
        count[std::min(bins - 1, static_cast<int>(v / kPi * bins))] += 1.0;
    }
    // chi^2 against the sin(v) latitude profile.
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        double p = 0.5 * (std::cos(b * kPi / bins) - std::cos((b + 1) * kPi / bins));
        double e = n * p;
        chi2 += (count[b] - e) * (count[b] - e) / e;
    }
    double pval = chi_square_pvalue(chi2, bins - 1);
    CHECK(pval > 0.001);
}

TEST_CASE("combined functions satisfy the block-sum identity") {
    SampleCtx ctx{2718u, 9};
    // Patch split.
    {
        auto space = SplitSpace::patch4(0.2);
        auto ws = sample_dummy_points(ctx, space, 2);
        Stream s0 = ctx.stream(Role::direction(0));
        Stream s1 = ctx.stream(Role::direction(1));
        auto f = make_combined({sample_direction(s0, 5), sample_direction(s1, 5)}, ws, space);
        Stream sz(1u, 0, Role::direction(7));
        for (int k = 0; k < 100; ++k) {
            FullPoint z(4);
            for (int i = 0; i < 4; ++i) z(i) = 0.2 * (2.0 * sz.uniform() - 1.0);
            REQUIRE(std::abs(f.eval_full(z) - f.eval_blocks(z)) < 1e-12);
        }
    }
    // Product split.
    {
        auto sphere = make_chart("sphere", {});
        auto torus = make_chart("torus", {{"R", 2.0}, {"r", 1.0}});
        auto space = SplitSpace::product({sphere, torus});
        auto ws = sample_dummy_points(ctx, space, 2);
        Stream s0 = ctx.stream(Role::direction(0));
        Stream s1 = ctx.stream(Role::direction(1));
        auto f = make_combined({sample_direction(s0, 6), sample_direction(s1, 6)}, ws, space);
        Stream sz(2u, 0, Role::direction(7));
        for (int k = 0; k < 100; ++k) {
            FullPoint z(4);
            z << 2 * kPi * sz.uniform(), kPi * sz.uniform(), 2 * kPi * sz.uniform(),
                2 * kPi * sz.uniform();
            REQUIRE(std::abs(f.eval_full(z) - f.eval_blocks(z)) < 1e-12);
        }
    }
}

TEST_CASE("heights on a product decouple: dummies do not move the blocks") {
    auto sphere = make_chart("sphere", {});
    auto space = SplitSpace::product({sphere, sphere});
    SampleCtx c1{10u, 1}, c2{10u, 2};  // two different dummy draws
    Stream sd = SampleCtx{10u, 0}.stream(Role::direction(0));
    auto dirs = std::vector<Direction>{sample_direction(sd, 6), sample_direction(sd, 6)};
    auto fa = make_combined(dirs, sample_dummy_points(c1, space, 2), space);
    auto fb = make_combined(dirs, sample_dummy_points(c2, space, 2), space);
    for (double u = 0.3; u < 6.0; u += 1.1) {
        Vec2 p(u, 1.3);
        CHECK((fa.blocks[0].h->grad(p) - fb.blocks[0].h->grad(p)).norm() < 1e-14);
        CHECK((fa.blocks[1].h->grad(p) - fb.blocks[1].h->grad(p)).norm() < 1e-14);
    }
}

TEST_CASE("patch blocks are nonlocal: the frozen dummy moves block 1") {
    auto space = SplitSpace::patch4(0.2);
    Stream sd = SampleCtx{20u, 0}.stream(Role::direction(0));
    auto dirs = std::vector<Direction>{sample_direction(sd, 5), sample_direction(sd, 5)};
    FullPoint wa(4), wb(4);
    wa << 0.0, 0.0, 0.1, 0.1;
    wb << 0.0, 0.0, -0.15, 0.12;
    auto fa = make_combined(dirs, {wa, wa}, space);
    auto fb = make_combined(dirs, {wb, wb}, space);
    double diff = 0.0;
    for (double u = -0.15; u <= 0.15; u += 0.05) {
        diff = std::max(diff, (fa.blocks[0].h->grad({u, 0.0}) -
                               fb.blocks[0].h->grad({u, 0.0})).norm());
    }
    CHECK(diff > 1e-6);
}

TEST_CASE("make_combined validates its arity") {
    auto space = SplitSpace::patch4(0.2);
    CHECK_THROWS_AS(make_combined({}, {}, space), InvalidParameter);
}
