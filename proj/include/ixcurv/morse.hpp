#pragma once

// Random Morse data on a chart: height functions f_a(x) = a.x restricted to
// an embedded surface, and combined functions built blockwise from
// independent (direction, dummy-point) draws on a split space (a genuine
// product of surfaces, or the coordinate-split 4-sphere patch).

#include <ixcurv/domain.hpp>
#include <ixcurv/geometry.hpp>
#include <ixcurv/rng.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace ixcurv {

// Chart coordinates of a point of the full split space, blocks stacked.
using FullPoint = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;

struct Direction {
    AmbientVec a;  // unit vector
};

// Uniform direction on S^(m-1): normalized Gaussian vector.
inline Direction sample_direction(Stream& stream, int m) {
    AmbientVec a(m);
    double n2 = 0.0;
    do {
        for (int i = 0; i < m; ++i) a(i) = stream.gaussian();
        n2 = a.squaredNorm();
    } while (n2 < 1e-12);
    a /= std::sqrt(n2);
    return {a};
}

// ---------------------------------------------------------------------------
// Scalar functions on a chart domain with analytic first/second derivatives.

struct ChartFunction {
    virtual double eval(const Vec2& p) const = 0;
    virtual Vec2 grad(const Vec2& p) const = 0;
    virtual Mat2 hess(const Vec2& p) const = 0;
    virtual ~ChartFunction() = default;
};

// a . embed(u,v) + offset; `a` need not be unit (combined-function blocks
// carry subvector directions and frozen-dummy constants).
struct HeightFunction final : ChartFunction {
    std::shared_ptr<const Chart> chart;
    AmbientVec a;
    double offset = 0.0;

    HeightFunction(std::shared_ptr<const Chart> c, AmbientVec dir, double off = 0.0)
        : chart(std::move(c)), a(std::move(dir)), offset(off) {}

    double eval(const Vec2& p) const override {
        return a.dot(chart->embed(p.x(), p.y())) + offset;
    }
    Vec2 grad(const Vec2& p) const override {
        AmbientVec xu, xv;
        chart->jacobian(p.x(), p.y(), xu, xv);
        return {a.dot(xu), a.dot(xv)};
    }
    Mat2 hess(const Vec2& p) const override {
        AmbientVec xuu, xuv, xvv;
        chart->hessian(p.x(), p.y(), xuu, xuv, xvv);
        Mat2 h;
        double m = a.dot(xuv);
        h << a.dot(xuu), m, m, a.dot(xvv);
        return h;
    }
};

inline std::shared_ptr<const HeightFunction> restrict_height(
    const Direction& dir, std::shared_ptr<const Chart> chart) {
    return std::make_shared<HeightFunction>(std::move(chart), dir.a);
}

// ---------------------------------------------------------------------------
// Split spaces: either a product of factor charts or the 4-sphere patch with
// its 2+2 coordinate split.

struct SplitSpace {
    enum class Kind { product, patch4 };
    Kind kind = Kind::product;
    std::vector<std::shared_ptr<const Chart>> factors;  // product only
    double delta = 0.0;                                 // patch4 only

    static SplitSpace product(std::vector<std::shared_ptr<const Chart>> fs) {
        if (fs.size() < 2) throw InvalidParameter("product space needs >= 2 factors");
        SplitSpace s;
        s.kind = Kind::product;
        s.factors = std::move(fs);
        return s;
    }
    static SplitSpace patch4(double delta) {
        Patch4 check(delta);  // validates
        SplitSpace s;
        s.kind = Kind::patch4;
        s.delta = delta;
        return s;
    }

    int blocks() const {
        return kind == Kind::product ? static_cast<int>(factors.size()) : 2;
    }
    int full_ambient_dim() const {
        if (kind == Kind::patch4) return 5;
        int m = 0;
        for (const auto& f : factors) m += f->ambient_dim;
        return m;
    }
    // Ambient dimension seen by block k's own Morse function.
    int block_ambient_dim(int) const {
        return kind == Kind::patch4 ? 5 : full_ambient_dim();
    }

    AmbientVec embed_full(const FullPoint& z) const {
        if (kind == Kind::patch4) {
            return Patch4::embed(Eigen::Vector4d(z.head<4>()));
        }
        AmbientVec x(full_ambient_dim());
        int off = 0;
        for (size_t j = 0; j < factors.size(); ++j) {
            int m = factors[j]->ambient_dim;
            x.segment(off, m) = factors[j]->embed(z(2 * j), z(2 * j + 1));
            off += m;
        }
        return x;
    }
};

// ---------------------------------------------------------------------------
// Dummy points: i.i.d. from the normalized volume measure of the full space,
// by rejection against the chart volume density.

namespace detail {

inline double chart_density_max(const Chart& chart) {
    double mx = 0.0;
    for (int i = 0; i <= 64; ++i) {
        for (int j = 0; j <= 64; ++j) {
            double u = chart.u0 + (chart.u1 - chart.u0) * (i + 0.5) / 65.0;
            double v = chart.v0 + (chart.v1 - chart.v0) * (j + 0.5) / 65.0;
            AmbientVec xu, xv;
            chart.jacobian(u, v, xu, xv);
            double det = xu.dot(xu) * xv.dot(xv) - xu.dot(xv) * xu.dot(xv);
            mx = std::max(mx, std::sqrt(std::max(det, 0.0)));
        }
    }
    return mx * 1.05;
}

inline Vec2 sample_chart_point(Stream& stream, const Chart& chart, double dens_max) {
    for (int tries = 0; tries < 10000; ++tries) {
        double u = chart.u0 + (chart.u1 - chart.u0) * stream.uniform();
        double v = chart.v0 + (chart.v1 - chart.v0) * stream.uniform();
        AmbientVec xu, xv;
        chart.jacobian(u, v, xu, xv);
        double det = xu.dot(xu) * xv.dot(xv) - xu.dot(xv) * xu.dot(xv);
        double dens = std::sqrt(std::max(det, 0.0));
        if (dens > dens_max) throw Error("volume density exceeded precomputed bound");
        if (stream.uniform() * dens_max < dens) return {u, v};
    }
    throw Error("chart point rejection sampling failed");
}

inline Eigen::Vector4d sample_patch_point(Stream& stream, double delta) {
    const double dens_max = 1.0 / std::sqrt(1.0 - 4.0 * delta * delta);
    for (int tries = 0; tries < 10000; ++tries) {
        Eigen::Vector4d y;
        for (int i = 0; i < 4; ++i) y(i) = delta * (2.0 * stream.uniform() - 1.0);
        if (stream.uniform() * dens_max < Patch4::volume_density(y)) return y;
    }
    throw Error("patch point rejection sampling failed");
}

}  // namespace detail

// Identifies one sample attempt; all of its independent random inputs are
// derived as (seed, attempt, role) streams.
struct SampleCtx {
    uint64_t seed;
    uint64_t attempt;
    Stream stream(Role role) const { return Stream(seed, attempt, role); }
};

inline std::vector<FullPoint> sample_dummy_points(const SampleCtx& ctx,
                                                  const SplitSpace& space, int d) {
    std::vector<FullPoint> ws;
    ws.reserve(d);
    for (int k = 0; k < d; ++k) {
        Stream s = ctx.stream(Role::dummy(k));
        FullPoint w(2 * space.blocks());
        if (space.kind == SplitSpace::Kind::patch4) {
            w.head<4>() = detail::sample_patch_point(s, space.delta);
        } else {
            for (size_t j = 0; j < space.factors.size(); ++j) {
                // Density bounds are cheap relative to a sample and keep this
                // function stateless.
                static thread_local std::map<const Chart*, double> bound_cache;
                const Chart* cp = space.factors[j].get();
                auto it = bound_cache.find(cp);
                if (it == bound_cache.end()) {
                    it = bound_cache.emplace(cp, detail::chart_density_max(*cp)).first;
                }
                Vec2 p = detail::sample_chart_point(s, *cp, it->second);
                w(2 * j) = p.x();
                w(2 * j + 1) = p.y();
            }
        }
        ws.push_back(std::move(w));
    }
    return ws;
}

// ---------------------------------------------------------------------------
// Combined functions: f(z) = sum_k f_k(w_k with block k replaced by z_k).
// Block k is again a height function, on the factor chart (product) or on a
// dummy-dependent coordinate slice (patch).

struct CombinedBlock {
    std::shared_ptr<const Chart> chart;          // block chart
    std::shared_ptr<const ChartFunction> h;      // function of z_k on it
};

struct CombinedFunction {
    std::vector<CombinedBlock> blocks;
    std::vector<Direction> directions;  // f_k's own directions
    std::vector<FullPoint> dummies;
    SplitSpace space;

    int d() const { return static_cast<int>(blocks.size()); }

    // Independent full-evaluation route: assemble the block-k argument and
    // evaluate f_k on the full space.
    double eval_full(const FullPoint& z) const {
        double total = 0.0;
        for (int k = 0; k < d(); ++k) {
            FullPoint arg = dummies[k];
            arg.segment(2 * k, 2) = z.segment(2 * k, 2);
            total += directions[k].a.dot(space.embed_full(arg));
        }
        return total;
    }

    // Sum of the per-block evaluation routes (slice charts / offsets).
    double eval_blocks(const FullPoint& z) const {
        double total = 0.0;
        for (int k = 0; k < d(); ++k) {
            total += blocks[k].h->eval(Vec2(z(2 * k), z(2 * k + 1)));
        }
        return total;
    }
};

inline CombinedFunction make_combined(const std::vector<Direction>& dirs,
                                      const std::vector<FullPoint>& dummies,
                                      const SplitSpace& space) {
    const int d = space.blocks();
    if (static_cast<int>(dirs.size()) != d || static_cast<int>(dummies.size()) != d) {
        throw InvalidParameter("make_combined: need one direction and one dummy per block");
    }
    CombinedFunction f;
    f.directions = dirs;
    f.dummies = dummies;
    f.space = space;
    for (int k = 0; k < d; ++k) {
        CombinedBlock blk;
        if (space.kind == SplitSpace::Kind::patch4) {
            Vec2 other(dummies[k](2 * (1 - k)), dummies[k](2 * (1 - k) + 1));
            blk.chart = std::make_shared<Slice4Chart>(space.delta, k, other);
            blk.h = std::make_shared<HeightFunction>(blk.chart, dirs[k].a);
        } else {
            blk.chart = space.factors[k];
            // Direction restricted to factor k's ambient block; the frozen
            // factors contribute a constant.
            int off = 0;
            for (int j = 0; j < k; ++j) off += space.factors[j]->ambient_dim;
            int m = space.factors[k]->ambient_dim;
            AmbientVec sub = dirs[k].a.segment(off, m);
            double offset = 0.0;
            int o2 = 0;
            for (int j = 0; j < d; ++j) {
                int mj = space.factors[j]->ambient_dim;
                if (j != k) {
                    AmbientVec ej = space.factors[j]->embed(dummies[k](2 * j),
                                                            dummies[k](2 * j + 1));
                    offset += dirs[k].a.segment(o2, mj).dot(ej);
                }
                o2 += mj;
            }
            blk.h = std::make_shared<HeightFunction>(blk.chart, sub, offset);
        }
        f.blocks.push_back(std::move(blk));
    }
    return f;
}

}  // namespace ixcurv
