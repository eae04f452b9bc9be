#pragma once

// Critical points and integer indices. Interior points come from damped
// Newton on grad h = 0 seeded on a grid; completeness is certified against
// the expected index sum, escalating the grid up to max_grid. Indices are
// computed along two independent routes: the Hessian signature and a
// sampled circle link (count of connected below-level arcs on S_r(x) within
// the domain). Boundary atoms (edge and vertex points) are scored by the
// link route alone.

#include <ixcurv/domain.hpp>
#include <ixcurv/geometry.hpp>
#include <ixcurv/morse.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace ixcurv {

struct SolverOptions {
    int grid_n = 16;              // Newton seeds per axis
    int max_grid = 128;           // escalation cap for the completeness loop
    double newton_tol = 1e-12;    // |grad| convergence threshold
    int newton_max_iter = 50;
    double dedupe_radius = 1e-6;  // relative to domain diameter
    int link_samples = 256;       // K points on each link circle
    double morse_gate = 1e-8;     // |lambda_min| >= gate * |H| or reject
    int edge_scan = 128;          // boundary scan nodes per edge
    bool cross_check = true;      // link route also on interior points
};

enum class CritKind { interior, edge, vertex };

struct CriticalPoint {
    Vec2 location;
    double value = 0.0;
    CritKind kind = CritKind::interior;
    int morse_index = -1;        // interior only
    int index = 0;               // i_f
    double min_abs_eig = 0.0;    // interior only
    double newton_residual = 0.0;
    int edge_id = -1;            // boundary atoms: flattened edge index
    double edge_t = 0.0;         // boundary atoms: curve parameter
};

namespace detail {

inline Vec2 wrap_to_chart(const Chart& chart, Vec2 p) {
    if (chart.periodic_u) {
        double P = chart.u_period();
        p.x() = p.x() - P * std::floor((p.x() - chart.u0) / P);
    }
    if (chart.periodic_v) {
        double P = chart.v_period();
        p.y() = p.y() - P * std::floor((p.y() - chart.v0) / P);
    }
    return p;
}

inline double chart_distance(const Chart& chart, const Vec2& a, const Vec2& b) {
    double du = std::abs(a.x() - b.x());
    double dv = std::abs(a.y() - b.y());
    if (chart.periodic_u) {
        double P = chart.u_period();
        du = std::fmod(du, P);
        du = std::min(du, P - du);
    }
    if (chart.periodic_v) {
        double P = chart.v_period();
        dv = std::fmod(dv, P);
        dv = std::min(dv, P - dv);
    }
    return std::hypot(du, dv);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Interior search: damped Newton from grid seeds, deduplicated. Completeness
// is NOT guaranteed here; callers certify it with the index-sum identity.

inline std::vector<CriticalPoint> find_critical_points(const ChartFunction& h,
                                                       const Chart& chart,
                                                       const Domain& dom,
                                                       const SolverOptions& opts,
                                                       int grid_n_override = 0) {
    const int n = grid_n_override > 0 ? grid_n_override : opts.grid_n;
    const double uspan = dom.bbox.u1 - dom.bbox.u0;
    const double vspan = dom.bbox.v1 - dom.bbox.v0;
    const double max_step = 0.25 * dom.diameter;
    const double dedupe = opts.dedupe_radius * dom.diameter;

    std::vector<CriticalPoint> found;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vec2 x(dom.bbox.u0 + uspan * (i + 0.5) / n, dom.bbox.v0 + vspan * (j + 0.5) / n);
            double gn = h.grad(x).norm();
            bool converged = false;
            for (int it = 0; it < opts.newton_max_iter; ++it) {
                if (gn <= opts.newton_tol) {
                    converged = true;
                    break;
                }
                Vec2 g = h.grad(x);
                Mat2 H = h.hess(x);
                double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
                double hnorm = H.cwiseAbs().maxCoeff();
                Vec2 dx;
                if (std::abs(det) > 1e-14 * std::max(1.0, hnorm * hnorm)) {
                    dx = Vec2(-(H(1, 1) * g.x() - H(0, 1) * g.y()) / det,
                              -(H(0, 0) * g.y() - H(1, 0) * g.x()) / det);
                } else {
                    // Singular Hessian: scaled descent on the gradient, so
                    // degenerate critical sets are still reached (and then
                    // rejected by the nondegeneracy gate).
                    dx = -g / (hnorm + 1e-12);
                }
                double dn = dx.norm();
                if (dn > max_step) dx *= max_step / dn;
                // Backtrack until |grad| decreases.
                bool moved = false;
                for (int half = 0; half < 10; ++half) {
                    double g2 = h.grad(x + dx).norm();
                    if (g2 < gn * (1.0 - 1e-4) || g2 <= opts.newton_tol) {
                        x += dx;
                        gn = g2;
                        moved = true;
                        break;
                    }
                    dx *= 0.5;
                }
                if (!moved) break;
                // Kill runaways in non-periodic directions.
                if (!chart.periodic_u &&
                    (x.x() < dom.bbox.u0 - 0.2 * uspan || x.x() > dom.bbox.u1 + 0.2 * uspan))
                    break;
                if (!chart.periodic_v &&
                    (x.y() < dom.bbox.v0 - 0.2 * vspan || x.y() > dom.bbox.v1 + 0.2 * vspan))
                    break;
            }
            if (!converged) continue;
            Vec2 xc = detail::wrap_to_chart(chart, x);
            if (!dom.inside(xc)) continue;
            // Zeros of the pulled-back gradient that lie exactly on a
            // coordinate-singular line are parametrization artifacts (the
            // whole line has du h = 0), not critical points of the surface
            // function; every genuine critical point sits strictly off the
            // line for directions not aligned with the pole axis.
            bool on_singular_line = false;
            for (double sv : chart.singular_v) {
                if (std::abs(xc.y() - sv) < 1e-10) {
                    on_singular_line = true;
                    break;
                }
            }
            if (on_singular_line) continue;
            bool dup = false;
            for (auto& cp : found) {
                if (detail::chart_distance(chart, cp.location, xc) < dedupe) {
                    if (gn < cp.newton_residual) {
                        cp.location = xc;
                        cp.newton_residual = gn;
                    }
                    dup = true;
                    break;
                }
            }
            if (dup) continue;
            CriticalPoint cp;
            cp.location = xc;
            cp.value = h.eval(xc);
            cp.kind = CritKind::interior;
            cp.newton_residual = gn;
            found.push_back(cp);
        }
    }
    return found;
}

// ---------------------------------------------------------------------------
// Hessian route: Morse index of an interior critical point.

struct HessianIndexResult {
    int morse_index;
    int index;            // (-1)^morse_index
    double min_abs_eig;
    double hess_norm;
};

inline HessianIndexResult hessian_index(const ChartFunction& h, const Vec2& x,
                                        const SolverOptions& opts) {
    Mat2 H = h.hess(x);
    double tr = H(0, 0) + H(1, 1);
    double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
    double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    double l1 = 0.5 * (tr - disc), l2 = 0.5 * (tr + disc);
    double hnorm = std::max(std::abs(l1), std::abs(l2));
    double margin = std::min(std::abs(l1), std::abs(l2));
    if (margin < opts.morse_gate * std::max(hnorm, 1e-300)) {
        throw DegenerateCritical("Hessian eigenvalue below the nondegeneracy gate");
    }
    int m = (l1 < 0.0) + (l2 < 0.0);
    return {m, (m % 2 == 0) ? 1 : -1, margin, hnorm};
}

// ---------------------------------------------------------------------------
// Link route: classify S_r(x) within the domain by counting connected
// below-level arcs. The sample set is K uniform circle points plus, for
// boundary atoms, one point pinned to each boundary curve through x at arc
// distance r. The pinned samples are essential: near an edge the sublevel
// set can be a parabolically thin wedge hugging the boundary, invisible to
// interior circle samples at every radius. Outside-domain samples break the
// circle into in-domain arcs, so one counting rule covers interior, edge and
// vertex points. The radius is shrunk until two consecutive radii agree.

struct LinkResult {
    int index;
    int components;
    double radius;
};

// Boundary-pinned link samples: each ray maps a link radius to a point on a
// boundary curve through x at that arc distance from x.
struct LinkRays {
    std::vector<std::function<Vec2(double)>> rays;
};

namespace detail {

struct LinkPass {
    int index;
    bool tie;
};

inline LinkPass link_once(const ChartFunction& h, const Domain& dom, const Vec2& x,
                          double hx, double r, int K, const LinkRays* rays) {
    // Sample classes: 0 = outside domain, 1 = below, 2 = at-or-above.
    // Half-sample angular offset avoids axis-aligned coincidences.
    bool any_out = false, any_above = false, any_below = false;
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(hx));
    std::vector<std::pair<double, uint8_t>> samples;
    samples.reserve(K + (rays ? rays->rays.size() : 0));
    for (int j = 0; j < K; ++j) {
        double th = 2.0 * M_PI * (j + 0.5) / K;
        Vec2 y(x.x() + r * std::cos(th), x.y() + r * std::sin(th));
        uint8_t c;
        if (!dom.inside(y)) {
            c = 0;
            any_out = true;
        } else {
            double d = h.eval(y) - hx;
            if (std::abs(d) < tie_tol) return {0, true};
            c = d < 0.0 ? 1 : 2;
            (d < 0.0 ? any_below : any_above) = true;
        }
        samples.emplace_back(th, c);
    }
    if (rays) {
        for (const auto& ray : rays->rays) {
            Vec2 y = ray(r);
            // On the boundary of the closed domain by construction.
            double d = h.eval(y) - hx;
            if (std::abs(d) < tie_tol) return {0, true};
            double th = std::atan2(y.y() - x.y(), y.x() - x.x());
            if (th < 0.0) th += 2.0 * M_PI;
            samples.emplace_back(th, d < 0.0 ? uint8_t{1} : uint8_t{2});
            (d < 0.0 ? any_below : any_above) = true;
        }
        std::sort(samples.begin(), samples.end());
    }
    if (!any_out && !any_above) return {1, false};  // whole link below: chi=0
    if (!any_below) return {1, false};              // empty sublevel: chi=0
    const size_t n = samples.size();
    int comps = 0;
    for (size_t j = 0; j < n; ++j) {
        uint8_t cur = samples[j].second;
        uint8_t prev = samples[(j + n - 1) % n].second;
        if (cur == 1 && prev != 1) ++comps;
    }
    return {1 - comps, false};
}

}  // namespace detail

inline LinkResult link_index(const ChartFunction& h, const Vec2& x, const Domain& dom,
                             double r0, int K, const LinkRays* rays = nullptr) {
    double hx = h.eval(x);
    int last_index = 0;
    bool have_last = false;
    double r = r0;
    // Initial radius plus up to 5 shrink-and-retry passes.
    for (int level = 0; level < 6; ++level, r *= 0.5) {
        auto pass = detail::link_once(h, dom, x, hx, r, K, rays);
        if (pass.tie) {
            have_last = false;  // restart agreement after a tie
            continue;
        }
        if (have_last && pass.index == last_index) {
            int comps = 1 - pass.index;
            return {pass.index, comps, r};
        }
        last_index = pass.index;
        have_last = true;
    }
    throw AmbiguousLink("link classification failed to stabilize under radius shrinking");
}

// ---------------------------------------------------------------------------
// Boundary scan: 1-d critical points of h along each boundary edge, by sign
// changes of the tangential derivative on a dense parameter scan refined by
// bisection. Loop vertices are returned as candidates unconditionally. Each
// candidate carries its boundary-pinned link rays.

struct BoundaryCandidate {
    CriticalPoint point;
    LinkRays rays;
};

namespace detail {

// Chart-space speed |gamma'(t)|, used to convert a link radius into a curve
// parameter offset.
inline double edge_speed(const EdgeCurve& edge, double t) {
    const double T = edge.t_end;
    const double ht = 1e-6 * T;
    double ta = edge.closed ? t - ht : std::max(t - ht, 0.0);
    double tb = edge.closed ? t + ht : std::min(t + ht, T);
    return (edge.gamma(tb) - edge.gamma(ta)).norm() / (tb - ta);
}

// Ray along `edge` starting at parameter t0 in direction sgn; r is mapped to
// a parameter offset via the local speed and clamped inside the edge.
inline std::function<Vec2(double)> edge_ray(const EdgeCurve& edge, double t0, double sgn) {
    const double s = edge_speed(edge, t0);
    const double T = edge.t_end;
    const bool closed = edge.closed;
    auto gamma = edge.gamma;
    return [gamma, t0, sgn, s, T, closed](double r) {
        double t = t0 + sgn * r / s;
        if (!closed) t = std::clamp(t, 0.0, T);
        return gamma(t);
    };
}

}  // namespace detail

inline std::vector<BoundaryCandidate> boundary_scan(const ChartFunction& h,
                                                    const Domain& dom,
                                                    const SolverOptions& opts,
                                                    int scan_override = 0) {
    const int n_scan = scan_override > 0 ? scan_override : opts.edge_scan;
    std::vector<BoundaryCandidate> out;
    int edge_id = 0;
    for (const auto& loop : dom.loops) {
        for (const auto& edge : loop.edges) {
            const double T = edge.t_end;
            const double ht = 1e-6 * T;
            // Tangential derivative of h along the edge; the tangent comes
            // from a central difference (one-sided at open-edge endpoints).
            auto dphi = [&](double t) {
                double ta = edge.closed ? t - ht : std::max(t - ht, 0.0);
                double tb = edge.closed ? t + ht : std::min(t + ht, T);
                Vec2 tangent = (edge.gamma(tb) - edge.gamma(ta)) / (tb - ta);
                return h.grad(edge.gamma(t)).dot(tangent);
            };
            const int m = n_scan;
            double prev_t = 0.0, prev_d = dphi(0.0);
            for (int k = 1; k <= m; ++k) {
                double t = T * k / m;
                double d = dphi(t);
                if (prev_d == 0.0) prev_d = 1e-300;
                if ((prev_d < 0.0) != (d < 0.0)) {
                    double a = prev_t, b = t, da = prev_d;
                    for (int it = 0; it < 80; ++it) {
                        double mth = 0.5 * (a + b);
                        double dm = dphi(mth);
                        if ((dm < 0.0) == (da < 0.0)) {
                            a = mth;
                            da = dm;
                        } else {
                            b = mth;
                        }
                    }
                    double tstar = 0.5 * (a + b);
                    // Endpoints belong to the adjacent vertex atoms.
                    if (!edge.closed &&
                        (tstar < 1e-7 * T || tstar > T * (1.0 - 1e-7))) {
                        prev_t = t;
                        prev_d = d;
                        continue;
                    }
                    BoundaryCandidate cand;
                    cand.point.location = edge.gamma(tstar);
                    cand.point.value = h.eval(cand.point.location);
                    cand.point.kind = CritKind::edge;
                    cand.point.newton_residual = std::abs(dphi(tstar));
                    cand.point.edge_id = edge_id;
                    cand.point.edge_t = tstar;
                    cand.rays.rays.push_back(detail::edge_ray(edge, tstar, -1.0));
                    cand.rays.rays.push_back(detail::edge_ray(edge, tstar, +1.0));
                    out.push_back(std::move(cand));
                }
                prev_t = t;
                prev_d = d;
            }
            ++edge_id;
        }
        const size_t nv = loop.vertices.size();
        for (size_t i = 0; i < nv; ++i) {
            BoundaryCandidate cand;
            cand.point.location = loop.vertices[i];
            cand.point.value = h.eval(cand.point.location);
            cand.point.kind = CritKind::vertex;
            // Edge i runs vertex i -> i+1; pin one ray into each adjacent
            // edge, pointing away from the vertex.
            const EdgeCurve& next = loop.edges[i];
            const EdgeCurve& prev = loop.edges[(i + nv - 1) % nv];
            cand.rays.rays.push_back(detail::edge_ray(next, 0.0, +1.0));
            cand.rays.rays.push_back(detail::edge_ray(prev, prev.t_end, -1.0));
            out.push_back(std::move(cand));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-block orchestration: find, gate, score, certify.

enum class RejectReason { none, degenerate, ambiguous, uncertified };

struct BlockSolveResult {
    std::vector<CriticalPoint> atoms;  // nonzero-index atoms
    int ph_sum = 0;
    RejectReason reject = RejectReason::none;
    int cross_check_mismatches = 0;
    int escalations = 0;
};

namespace detail {

inline double link_radius_cap(const Chart& chart, const Domain& dom, const Vec2& x,
                              const std::vector<CriticalPoint>& all, size_t self) {
    double r = 0.05 * dom.diameter;
    for (size_t j = 0; j < all.size(); ++j) {
        if (j == self) continue;
        r = std::min(r, 0.5 * chart_distance(chart, x, all[j].location));
    }
    // A chart-coordinate circle crossing a coordinate-singular line is not a
    // simple loop on the surface; stay at least half that distance away.
    for (double sv : chart.singular_v) {
        r = std::min(r, 0.5 * std::abs(x.y() - sv));
    }
    return r;
}

}  // namespace detail

// Solves one 2-d block and certifies completeness against chi_expected.
inline BlockSolveResult solve_block(const ChartFunction& h, const Chart& chart,
                                    const Domain& dom, const SolverOptions& opts,
                                    int chi_expected) {
    BlockSolveResult res;
    for (int grid = opts.grid_n; grid <= opts.max_grid; grid *= 2, ++res.escalations) {
        try {
            std::vector<CriticalPoint> pts = find_critical_points(h, chart, dom, opts, grid);
            std::vector<LinkRays> rays(pts.size());
            int scan = opts.edge_scan * (grid / opts.grid_n);
            for (auto& cand : boundary_scan(h, dom, opts, scan)) {
                pts.push_back(std::move(cand.point));
                rays.push_back(std::move(cand.rays));
            }

            int mismatches = 0;
            int sum = 0;
            for (size_t i = 0; i < pts.size(); ++i) {
                double r0 = detail::link_radius_cap(chart, dom, pts[i].location, pts, i);
                if (pts[i].kind == CritKind::interior) {
                    auto hi = hessian_index(h, pts[i].location, opts);
                    pts[i].morse_index = hi.morse_index;
                    pts[i].index = hi.index;
                    pts[i].min_abs_eig = hi.min_abs_eig;
                    if (opts.cross_check) {
                        auto li = link_index(h, pts[i].location, dom, r0, opts.link_samples);
                        if (li.index != hi.index) ++mismatches;
                    }
                } else {
                    auto li = link_index(h, pts[i].location, dom, r0, opts.link_samples,
                                         &rays[i]);
                    pts[i].index = li.index;
                    if (std::abs(li.index) > 1) {
                        // |i| > 1 cannot come from a Morse function; treat as
                        // a degeneracy and resample.
                        throw DegenerateCritical("boundary link index outside {-1,0,1}");
                    }
                }
                sum += pts[i].index;
            }
            if (sum == chi_expected) {
                res.ph_sum = sum;
                res.cross_check_mismatches = mismatches;
                for (auto& cp : pts) {
                    if (cp.index != 0) res.atoms.push_back(cp);
                }
                return res;
            }
            // Certificate failed: escalate the search density.
        } catch (const DegenerateCritical&) {
            res.reject = RejectReason::degenerate;
            return res;
        } catch (const AmbiguousLink&) {
            res.reject = RejectReason::ambiguous;
            return res;
        }
    }
    res.reject = RejectReason::uncertified;
    return res;
}

// ---------------------------------------------------------------------------
// Products of blocks.

struct IndexAtom {
    std::vector<Vec2> locations;     // one per block
    std::vector<CritKind> kinds;
    std::vector<double> values;
    int index = 0;
    uint64_t sample = 0;
};

// Cartesian product of per-block atoms; the product index is the product of
// block indices (block-diagonal Hessian structure).
inline std::vector<IndexAtom> block_product_atoms(
    const std::vector<std::vector<CriticalPoint>>& blocks, uint64_t sample_id) {
    std::vector<IndexAtom> out;
    if (blocks.empty()) return out;
    std::vector<size_t> idx(blocks.size(), 0);
    for (const auto& b : blocks) {
        if (b.empty()) return out;  // empty factor: empty product
    }
    while (true) {
        IndexAtom atom;
        atom.index = 1;
        atom.sample = sample_id;
        for (size_t k = 0; k < blocks.size(); ++k) {
            const CriticalPoint& cp = blocks[k][idx[k]];
            atom.locations.push_back(cp.location);
            atom.kinds.push_back(cp.kind);
            atom.values.push_back(cp.value);
            atom.index *= cp.index;
        }
        out.push_back(std::move(atom));
        size_t k = 0;
        while (k < blocks.size() && ++idx[k] == blocks[k].size()) {
            idx[k] = 0;
            ++k;
        }
        if (k == blocks.size()) break;
    }
    return out;
}

// Exact integer comparison of the atom index sum against the Euler
// characteristic; a violation is a returned state, not an error.
struct PhCertificate {
    bool certified = false;
    int sum = 0;
};

inline PhCertificate poincare_hopf_sum(const std::vector<IndexAtom>& atoms,
                                       const TopologyInfo& topo) {
    int s = 0;
    for (const auto& a : atoms) s += a.index;
    return {s == topo.euler_char, s};
}

// Independent route for product atoms: the Morse index of the full combined
// function from a central-difference Hessian on the stacked 2d-dimensional
// coordinates, bypassing the per-block factorization entirely.
inline int full_hessian_index(const CombinedFunction& f,
                              const std::vector<Vec2>& locations,
                              double gate = 1e-8) {
    const int d = f.d();
    if (static_cast<int>(locations.size()) != d) {
        throw InvalidParameter("full_hessian_index: one location per block required");
    }
    FullPoint z(2 * d);
    for (int k = 0; k < d; ++k) {
        z(2 * k) = locations[k].x();
        z(2 * k + 1) = locations[k].y();
    }
    const int n = 2 * d;
    const double hstep = 1e-5;
    Eigen::MatrixXd H(n, n);
    const double f0 = f.eval_full(z);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            FullPoint zpp = z, zpm = z, zmp = z, zmm = z;
            if (i == j) {
                zpp(i) += hstep;
                zmm(i) -= hstep;
                H(i, i) = (f.eval_full(zpp) - 2.0 * f0 + f.eval_full(zmm)) /
                          (hstep * hstep);
            } else {
                zpp(i) += hstep; zpp(j) += hstep;
                zpm(i) += hstep; zpm(j) -= hstep;
                zmp(i) -= hstep; zmp(j) += hstep;
                zmm(i) -= hstep; zmm(j) -= hstep;
                H(i, j) = (f.eval_full(zpp) - f.eval_full(zpm) -
                           f.eval_full(zmp) + f.eval_full(zmm)) /
                          (4.0 * hstep * hstep);
                H(j, i) = H(i, j);
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double hnorm = H.norm();
    int negatives = 0;
    for (int i = 0; i < n; ++i) {
        double lam = es.eigenvalues()(i);
        if (std::abs(lam) < gate * std::max(hnorm, 1e-300)) {
            throw DegenerateCritical("full Hessian eigenvalue below margin gate");
        }
        if (lam < 0.0) ++negatives;
    }
    return (negatives % 2 == 0) ? 1 : -1;
}

}  // namespace ixcurv
