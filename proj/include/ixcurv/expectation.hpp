#pragma once

// Sampling loop and derived statistics. One sample = one random function on
// the scenario's space, solved to a certified atom list; its integer index
// sums feed per-bin histograms, boundary measures, and independence tests.
// Every accumulator is integer-valued, so results are bit-identical for any
// thread count and any partition of the sample range. Rejected attempts are
// replaced by re-deriving the sample from (seed, attempt) with the attempt id
// advanced by the total sample count, which keeps slots independent.

#include <ixcurv/critical.hpp>
#include <ixcurv/errors.hpp>
#include <ixcurv/histogram.hpp>
#include <ixcurv/morse.hpp>
#include <ixcurv/scenarios.hpp>
#include <ixcurv/stats.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ixcurv {

struct RunParams {
    uint64_t samples = 0;
    uint64_t seed = 1;
    int threads = 1;
    // Variance reduction: odd sample slots reuse the direction drawn by the
    // preceding even slot, negated. The marginal law is unchanged (negation
    // preserves the uniform sphere measure); pairs decouple only when one
    // member resamples after a rejection. Off by default.
    bool antithetic = false;
};

// ---------------------------------------------------------------------------
// Oracle comparison.

struct OracleStats {
    int factor = 1;
    double pearson = std::numeric_limits<double>::quiet_NaN();
    double max_abs_z = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    int unresolved_bins = 0;  // oracle present but no sample variance yet
    std::vector<double> z;    // per bin; NaN where no oracle or unresolved
};

inline OracleStats oracle_compare(const CurvatureHistogram& hist,
                                  const std::vector<double>& oracle) {
    if (oracle.size() != hist.sum.size()) {
        throw InvalidParameter("oracle_compare: oracle grid does not match histogram");
    }
    OracleStats st;
    st.factor = hist.factor;
    st.z.assign(oracle.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> ms, os;
    for (size_t b = 0; b < oracle.size(); ++b) {
        if (std::isnan(oracle[b])) continue;
        double est = hist.mass(static_cast<int>(b));
        double se = hist.stderr_of_mass(static_cast<int>(b));
        if (hist.oracle_is_density) {
            double a = hist.area[b];
            if (!(a > 0.0)) continue;
            est /= a;
            se /= a;
        }
        ms.push_back(est);
        os.push_back(oracle[b]);
        if (se == 0.0) {
            // Zero sample variance: an exact match is consistent (flat
            // scenarios). Otherwise — typically a sliver bin that no atom has
            // reached yet — score the oracle's own null: per-sample values in
            // such bins are 0 or a single signed index, so the oracle mass
            // implies a Bernoulli variance. z stays near sqrt(expected atoms),
            // small whenever emptiness is statistically unremarkable.
            if (std::abs(est - oracle[b]) <= 1e-12) continue;
            double scale = 1.0;
            double m_mass = oracle[b];
            if (hist.oracle_is_density) {
                scale = hist.area[b];
                m_mass = oracle[b] * scale;
            }
            double am = std::abs(m_mass);
            if (am <= 0.0 || am >= 1.0) {
                ++st.unresolved_bins;  // constant estimate contradicts the oracle
                continue;
            }
            double n = static_cast<double>(hist.n_samples);
            se = std::sqrt(am * (1.0 - am) / n) / scale;
        }
        st.z[b] = (est - oracle[b]) / se;
        st.max_abs_z = std::max(st.max_abs_z, std::abs(st.z[b]));
        st.chi2 += st.z[b] * st.z[b];
        ++st.dof;
    }
    if (ms.size() >= 2) st.pearson = pearson(ms, os);
    if (st.dof > 0) st.p_value = chi_square_pvalue(st.chi2, st.dof);
    return st;
}

inline OracleStats oracle_compare(const CurvatureHistogram& hist) {
    return oracle_compare(hist, hist.oracle);
}

// ---------------------------------------------------------------------------
// Factorization test: per-sample bin sums X (factor 1) and Y (factor 2) must
// be uncorrelated pairwise when the construction decorrelates blocks. The
// covariance estimate and its standard error come from integer moment sums.

struct FactorizationAccum {
    GridSpec g1, g2;
    std::vector<long long> n_pair, s_xy, s_x2y, s_xy2, s_x2y2;
    std::vector<long long> s_x, s_x2, s_y, s_y2;
    uint64_t n = 0;

    FactorizationAccum() = default;
    FactorizationAccum(const GridSpec& a, const GridSpec& b) : g1(a), g2(b) {
        size_t pairs = static_cast<size_t>(g1.bins()) * g2.bins();
        n_pair.assign(pairs, 0);
        s_xy.assign(pairs, 0);
        s_x2y.assign(pairs, 0);
        s_xy2.assign(pairs, 0);
        s_x2y2.assign(pairs, 0);
        s_x.assign(g1.bins(), 0);
        s_x2.assign(g1.bins(), 0);
        s_y.assign(g2.bins(), 0);
        s_y2.assign(g2.bins(), 0);
    }

    void add_sample(const std::vector<CurvatureHistogram::SparseEntry>& X,
                    const std::vector<CurvatureHistogram::SparseEntry>& Y) {
        ++n;
        for (const auto& x : X) {
            if (x.bin < 0) continue;
            s_x[x.bin] += x.value;
            s_x2[x.bin] += x.value * x.value;
        }
        for (const auto& y : Y) {
            if (y.bin < 0) continue;
            s_y[y.bin] += y.value;
            s_y2[y.bin] += y.value * y.value;
        }
        for (const auto& x : X) {
            if (x.bin < 0) continue;
            for (const auto& y : Y) {
                if (y.bin < 0) continue;
                size_t id = static_cast<size_t>(x.bin) * g2.bins() + y.bin;
                long long xy = x.value * y.value;
                n_pair[id] += x.atoms * y.atoms;
                s_xy[id] += xy;
                s_x2y[id] += x.value * xy;
                s_xy2[id] += xy * y.value;
                s_x2y2[id] += xy * xy;
            }
        }
    }

    void merge(const FactorizationAccum& o) {
        for (size_t i = 0; i < n_pair.size(); ++i) {
            n_pair[i] += o.n_pair[i];
            s_xy[i] += o.s_xy[i];
            s_x2y[i] += o.s_x2y[i];
            s_xy2[i] += o.s_xy2[i];
            s_x2y2[i] += o.s_x2y2[i];
        }
        for (size_t i = 0; i < s_x.size(); ++i) {
            s_x[i] += o.s_x[i];
            s_x2[i] += o.s_x2[i];
        }
        for (size_t i = 0; i < s_y.size(); ++i) {
            s_y[i] += o.s_y[i];
            s_y2[i] += o.s_y2[i];
        }
        n += o.n;
    }
};

struct FactorizationResult {
    bool applicable = false;
    double max_abs_z = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    int tested_pairs = 0;
    int excluded_pairs = 0;  // joint atom count below threshold
};

// Standard error of a sample covariance from raw moments:
// Var((X-mx)(Y-my)) evaluated with the sample means plugged in.
namespace detail {
inline double cov_se2(double n, double mx, double my, double exy, double ex2,
                      double ey2, double ex2y, double exy2, double ex2y2) {
    double cov = exy - mx * my;
    double eq2 = ex2y2 - 2.0 * my * ex2y - 2.0 * mx * exy2 + my * my * ex2 +
                 mx * mx * ey2 + 4.0 * mx * my * exy - 3.0 * mx * mx * my * my;
    double varq = eq2 - cov * cov;
    return varq / n;
}
}  // namespace detail

inline FactorizationResult factorization_test(const FactorizationAccum& a,
                                              long long min_pair_count = 20) {
    FactorizationResult r;
    if (a.n == 0 || a.n_pair.empty()) return r;  // single-factor: not applicable
    r.applicable = true;
    const double n = static_cast<double>(a.n);
    const int B2 = a.g2.bins();
    for (size_t id = 0; id < a.n_pair.size(); ++id) {
        if (a.n_pair[id] < min_pair_count) {
            ++r.excluded_pairs;
            continue;
        }
        int bx = static_cast<int>(id) / B2, by = static_cast<int>(id) % B2;
        double mx = a.s_x[bx] / n, my = a.s_y[by] / n;
        double cov = a.s_xy[id] / n - mx * my;
        double se2 = detail::cov_se2(n, mx, my, a.s_xy[id] / n, a.s_x2[bx] / n,
                                     a.s_y2[by] / n, a.s_x2y[id] / n,
                                     a.s_xy2[id] / n, a.s_x2y2[id] / n);
        if (!(se2 > 0.0)) {
            ++r.excluded_pairs;
            continue;
        }
        double z = cov / std::sqrt(se2);
        r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
        r.chi2 += z * z;
        ++r.tested_pairs;
    }
    r.dof = r.tested_pairs;
    if (r.dof > 0) r.p_value = chi_square_pvalue(r.chi2, r.dof);
    return r;
}

// ---------------------------------------------------------------------------
// Coarse-region covariance test between distinct factors.

struct CovarianceAccum {
    int d = 0;
    int regions = 3;  // per axis; region grid is regions x regions per factor
    std::vector<GridSpec> grids;
    std::vector<std::vector<long long>> s, s2;  // [factor][region]
    struct Pair {
        int k, l;
        std::vector<long long> s_xy, s_x2y, s_xy2, s_x2y2;
    };
    std::vector<Pair> pairs;
    uint64_t n = 0;

    CovarianceAccum() = default;
    CovarianceAccum(const std::vector<FactorSpace>& factors, int regions_per_axis)
        : d(static_cast<int>(factors.size())), regions(regions_per_axis) {
        const int R = regions * regions;
        for (const auto& f : factors) {
            grids.push_back({regions, regions, f.bins.rect});
            s.emplace_back(R, 0);
            s2.emplace_back(R, 0);
        }
        for (int k = 0; k < d; ++k) {
            for (int l = k + 1; l < d; ++l) {
                Pair p;
                p.k = k;
                p.l = l;
                p.s_xy.assign(static_cast<size_t>(R) * R, 0);
                p.s_x2y.assign(static_cast<size_t>(R) * R, 0);
                p.s_xy2.assign(static_cast<size_t>(R) * R, 0);
                p.s_x2y2.assign(static_cast<size_t>(R) * R, 0);
                pairs.push_back(std::move(p));
            }
        }
    }

    // One sample's dense region values, one vector per factor.
    void add_sample(const std::vector<std::vector<long long>>& vals) {
        ++n;
        const int R = regions * regions;
        for (int k = 0; k < d; ++k) {
            for (int u = 0; u < R; ++u) {
                s[k][u] += vals[k][u];
                s2[k][u] += vals[k][u] * vals[k][u];
            }
        }
        for (auto& p : pairs) {
            for (int u = 0; u < R; ++u) {
                long long x = vals[p.k][u];
                if (x == 0) continue;
                for (int v = 0; v < R; ++v) {
                    long long y = vals[p.l][v];
                    if (y == 0) continue;
                    size_t id = static_cast<size_t>(u) * R + v;
                    p.s_xy[id] += x * y;
                    p.s_x2y[id] += x * x * y;
                    p.s_xy2[id] += x * y * y;
                    p.s_x2y2[id] += x * x * y * y;
                }
            }
        }
    }

    void merge(const CovarianceAccum& o) {
        for (int k = 0; k < d; ++k) {
            for (size_t u = 0; u < s[k].size(); ++u) {
                s[k][u] += o.s[k][u];
                s2[k][u] += o.s2[k][u];
            }
        }
        for (size_t pi = 0; pi < pairs.size(); ++pi) {
            for (size_t id = 0; id < pairs[pi].s_xy.size(); ++id) {
                pairs[pi].s_xy[id] += o.pairs[pi].s_xy[id];
                pairs[pi].s_x2y[id] += o.pairs[pi].s_x2y[id];
                pairs[pi].s_xy2[id] += o.pairs[pi].s_xy2[id];
                pairs[pi].s_x2y2[id] += o.pairs[pi].s_x2y2[id];
            }
        }
        n += o.n;
    }
};

struct CovariancePairStat {
    int factor_a = 0, region_a = 0, factor_b = 0, region_b = 0;
    double cov = 0.0, se = 0.0, z = 0.0;
};

struct CovarianceResult {
    bool applicable = false;
    bool underpowered = false;  // too few samples for the 4-sigma screen
    double max_abs_z = 0.0;
    int flagged = 0;  // pairs with |cov| >= 4 se
    std::vector<CovariancePairStat> pairs;
    std::vector<std::vector<double>> region_variance;  // same-factor sanity view
};

inline CovarianceResult covariance_test(const CovarianceAccum& a) {
    CovarianceResult r;
    if (a.n == 0 || a.d < 2) return r;
    r.applicable = true;
    r.underpowered = a.n < 100;
    const double n = static_cast<double>(a.n);
    const int R = a.regions * a.regions;
    for (int k = 0; k < a.d; ++k) {
        std::vector<double> vars;
        for (int u = 0; u < R; ++u) {
            double m = a.s[k][u] / n;
            vars.push_back(n < 2 ? 0.0 : (a.s2[k][u] - n * m * m) / (n - 1.0));
        }
        r.region_variance.push_back(std::move(vars));
    }
    for (const auto& p : a.pairs) {
        for (int u = 0; u < R; ++u) {
            for (int v = 0; v < R; ++v) {
                size_t id = static_cast<size_t>(u) * R + v;
                double mx = a.s[p.k][u] / n, my = a.s[p.l][v] / n;
                double cov = p.s_xy[id] / n - mx * my;
                double se2 = detail::cov_se2(n, mx, my, p.s_xy[id] / n,
                                             a.s2[p.k][u] / n, a.s2[p.l][v] / n,
                                             p.s_x2y[id] / n, p.s_xy2[id] / n,
                                             p.s_x2y2[id] / n);
                CovariancePairStat st;
                st.factor_a = p.k + 1;
                st.region_a = u;
                st.factor_b = p.l + 1;
                st.region_b = v;
                st.cov = cov;
                if (se2 > 0.0) {
                    st.se = std::sqrt(se2);
                    st.z = cov / st.se;
                    r.max_abs_z = std::max(r.max_abs_z, std::abs(st.z));
                    if (std::abs(cov) >= 4.0 * st.se) ++r.flagged;
                } else if (cov != 0.0) {
                    st.z = std::numeric_limits<double>::infinity();
                    ++r.flagged;
                }
                r.pairs.push_back(st);
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Boundary decomposition: interior + vertex + edge index mass recombines to
// the Euler characteristic, exactly when the per-sample identity held.

struct BoundaryDecomposition {
    double interior_total = 0.0;
    double vertex_total = 0.0;
    double edge_total = 0.0;
    double overflow_total = 0.0;
    double recombined = 0.0;
    int chi_expected = 0;
    bool exact = false;  // integer sums match chi * samples
};

inline BoundaryDecomposition boundary_decomposition(const CurvatureHistogram& hist,
                                                    const BoundaryMeasure& bm,
                                                    int chi) {
    BoundaryDecomposition d;
    d.chi_expected = chi;
    long long total = hist.overflow_sum;
    for (long long v : hist.sum) total += v;
    double n = static_cast<double>(hist.n_samples);
    d.interior_total = (total - hist.overflow_sum) / n;
    d.overflow_total = hist.overflow_sum / n;
    long long vsum = 0, esum = 0;
    for (const auto& v : bm.vertices) vsum += v.sum;
    for (const auto& e : bm.edges) {
        for (long long s : e.sum) esum += s;
    }
    d.vertex_total = vsum / n;
    d.edge_total = esum / n;
    d.recombined = d.interior_total + d.overflow_total + d.vertex_total + d.edge_total;
    d.exact = (total + vsum + esum) ==
              static_cast<long long>(chi) * static_cast<long long>(hist.n_samples);
    return d;
}

// ---------------------------------------------------------------------------
// The experiment driver.

struct RejectCounts {
    uint64_t degenerate = 0;
    uint64_t ambiguous = 0;
    uint64_t uncertified = 0;
    uint64_t total() const { return degenerate + ambiguous + uncertified; }
};

struct ExperimentResult {
    std::string scenario;
    uint64_t seed = 0;
    uint64_t samples = 0;
    bool antithetic = false;
    RejectCounts rejects;
    int chi_expected = 0;
    long long chi_sum = 0;  // over samples; chi_violations counts mismatches
    uint64_t chi_violations = 0;
    long long cross_check_mismatches = 0;
    long long full_hessian_mismatches = 0;
    uint64_t escalations = 0;
    std::vector<CurvatureHistogram> histograms;
    std::optional<BoundaryMeasure> boundary;
    std::vector<OracleStats> oracle_stats;
    FactorizationResult factorization;
    CovarianceResult covariance;
    std::optional<BoundaryDecomposition> decomposition;
    double sectional_margin = std::numeric_limits<double>::quiet_NaN();
    SolverOptions solver;
    double wall_seconds = 0.0;  // measured, never part of the reproducible payload
};

namespace detail {

struct SampleSolve {
    bool accepted = false;
    RejectReason reason = RejectReason::none;
    std::vector<std::vector<CriticalPoint>> blocks;
    int chi_sum = 0;
    int cross_mismatches = 0;
    int full_hessian_mismatches = 0;
    int escalations = 0;
};

// Directions are drawn from the stream keyed by dir_attempt and negated when
// it differs from attempt (the antithetic pairing); dummy points always come
// from the sample's own stream.
inline SampleSolve solve_sample(const Scenario& sc, uint64_t seed, uint64_t attempt,
                                uint64_t dir_attempt) {
    SampleCtx ctx{seed, attempt};
    SampleCtx dctx{seed, dir_attempt};
    const double sign = (dir_attempt == attempt) ? 1.0 : -1.0;
    SampleSolve out;
    std::vector<BlockSolveResult> results;

    auto run_block = [&](const ChartFunction& h, const Chart& chart,
                         const Domain& dom, int chi) {
        BlockSolveResult res = solve_block(h, chart, dom, sc.solver, chi);
        results.push_back(std::move(res));
        return results.back().reject == RejectReason::none;
    };

    if (sc.kind == Scenario::Kind::height) {
        const FactorSpace& f = sc.factors[0];
        Stream ds = dctx.stream(Role::direction(0));
        Direction dir = sample_direction(ds, f.chart->ambient_dim);
        HeightFunction h(f.chart, sign * dir.a);
        if (!run_block(h, *f.chart, f.domain, f.topo.euler_char)) {
            out.reason = results.back().reject;
            return out;
        }
    } else if (sc.kind == Scenario::Kind::product) {
        int m_total = 0;
        for (const auto& f : sc.factors) m_total += f.chart->ambient_dim;
        Stream ds = dctx.stream(Role::direction(0));
        Direction joint = sample_direction(ds, m_total);
        int off = 0;
        for (const auto& f : sc.factors) {
            int m = f.chart->ambient_dim;
            AmbientVec sub = sign * joint.a.segment(off, m);
            off += m;
            HeightFunction h(f.chart, sub);
            if (!run_block(h, *f.chart, f.domain, f.topo.euler_char)) {
                out.reason = results.back().reject;
                return out;
            }
        }
    } else {  // patch4
        const int d = sc.blocks();
        std::vector<Direction> dirs;
        for (int k = 0; k < d; ++k) {
            Stream ds = dctx.stream(Role::direction(k));
            Direction dir = sample_direction(ds, 5);
            dir.a *= sign;
            dirs.push_back(dir);
        }
        std::vector<FullPoint> dummies = sample_dummy_points(ctx, sc.space, d);
        CombinedFunction f = make_combined(dirs, dummies, sc.space);
        for (int k = 0; k < d; ++k) {
            if (!run_block(*f.blocks[k].h, *f.blocks[k].chart, sc.factors[k].domain,
                           sc.factors[k].topo.euler_char)) {
                out.reason = results.back().reject;
                return out;
            }
        }
        // Interior product atoms must agree with the Morse index of the full
        // combined function; a degenerate full Hessian rejects the sample.
        try {
            for (const auto& cp1 : results[0].atoms) {
                if (cp1.kind != CritKind::interior) continue;
                for (const auto& cp2 : results[1].atoms) {
                    if (cp2.kind != CritKind::interior) continue;
                    int full = full_hessian_index(f, {cp1.location, cp2.location});
                    if (full != cp1.index * cp2.index) ++out.full_hessian_mismatches;
                }
            }
        } catch (const DegenerateCritical&) {
            out.reason = RejectReason::degenerate;
            return out;
        }
    }

    out.accepted = true;
    out.chi_sum = 1;
    for (auto& res : results) {
        out.chi_sum *= res.ph_sum;
        out.cross_mismatches += res.cross_check_mismatches;
        out.escalations += res.escalations;
        out.blocks.push_back(std::move(res.atoms));
    }
    return out;
}

struct WorkerAccum {
    std::vector<CurvatureHistogram> hists;
    std::optional<BoundaryMeasure> boundary;
    FactorizationAccum fact;
    CovarianceAccum cov;
    long long chi_sum = 0;
    uint64_t chi_violations = 0;
    long long cross_mismatches = 0;
    long long full_hessian_mismatches = 0;
    uint64_t escalations = 0;
    RejectCounts rejects;
    uint64_t samples = 0;

    explicit WorkerAccum(const Scenario& sc) {
        for (size_t k = 0; k < sc.factors.size(); ++k) {
            CurvatureHistogram h(sc.factors[k].bins, static_cast<int>(k) + 1);
            h.oracle = sc.factors[k].bin_oracle;
            h.oracle_is_density = sc.factors[k].oracle_is_density;
            h.area = sc.factors[k].bin_area;
            hists.push_back(std::move(h));
        }
        if (sc.boundary) {
            BoundaryMeasure bm;
            for (size_t i = 0; i < sc.boundary->vertex_locations.size(); ++i) {
                VertexMass vm;
                vm.location = sc.boundary->vertex_locations[i];
                vm.oracle = sc.boundary->vertex_oracle[i];
                vm.reference = sc.boundary->vertex_reference[i];
                bm.vertices.push_back(vm);
            }
            for (size_t e = 0; e < sc.boundary->edge_lengths.size(); ++e) {
                bm.edges.emplace_back(static_cast<int>(e),
                                      sc.boundary->edge_lengths[e],
                                      sc.boundary->profile_bins);
            }
            boundary = std::move(bm);
        }
        if (sc.blocks() == 2 && sc.stat_grids.size() == 2) {
            fact = FactorizationAccum(sc.stat_grids[0], sc.stat_grids[1]);
            cov = CovarianceAccum(sc.factors, sc.cov_regions);
        }
    }

    void merge(const WorkerAccum& o) {
        for (size_t k = 0; k < hists.size(); ++k) hists[k].merge(o.hists[k]);
        if (boundary) boundary->merge(*o.boundary);
        if (fact.n || o.fact.n) fact.merge(o.fact);
        if (cov.n || o.cov.n) cov.merge(o.cov);
        chi_sum += o.chi_sum;
        chi_violations += o.chi_violations;
        cross_mismatches += o.cross_mismatches;
        full_hessian_mismatches += o.full_hessian_mismatches;
        escalations += o.escalations;
        rejects.degenerate += o.rejects.degenerate;
        rejects.ambiguous += o.rejects.ambiguous;
        rejects.uncertified += o.rejects.uncertified;
        samples += o.samples;
    }

    void accumulate(const Scenario& sc, const SampleSolve& smp) {
        ++samples;
        chi_sum += smp.chi_sum;
        if (smp.chi_sum != sc.topo.euler_char) ++chi_violations;
        cross_mismatches += smp.cross_mismatches;
        full_hessian_mismatches += smp.full_hessian_mismatches;
        escalations += static_cast<uint64_t>(smp.escalations);

        std::vector<CurvatureHistogram::SparseEntry> entries;
        std::vector<std::vector<CurvatureHistogram::SparseEntry>> stat_entries(
            sc.blocks());
        std::vector<std::vector<long long>> region_vals;
        const bool want_stats = fact.n_pair.size() > 0 || cov.d == 2;
        if (cov.d == 2) {
            region_vals.assign(sc.blocks(),
                               std::vector<long long>(
                                   static_cast<size_t>(cov.regions) * cov.regions, 0));
        }
        std::vector<long long> vertex_vals;
        if (boundary) vertex_vals.assign(boundary->vertices.size(), 0);

        auto push_sparse = [](std::vector<CurvatureHistogram::SparseEntry>& es,
                              int bin, int value) {
            for (auto& e : es) {
                if (e.bin == bin) {
                    e.value += value;
                    e.atoms += 1;
                    return;
                }
            }
            es.push_back({bin, value, 1});
        };

        struct EdgeEntry {
            int edge, bin;
            long long value, atoms;
        };
        std::vector<EdgeEntry> edge_entries;

        for (int k = 0; k < sc.blocks(); ++k) {
            entries.clear();
            for (const auto& cp : smp.blocks[k]) {
                const bool boundary_atom = cp.kind != CritKind::interior;
                if (boundary && boundary_atom) {
                    if (cp.kind == CritKind::vertex) {
                        size_t best = 0;
                        double bestd = 1e300;
                        for (size_t i = 0; i < boundary->vertices.size(); ++i) {
                            double dd =
                                (boundary->vertices[i].location - cp.location).norm();
                            if (dd < bestd) {
                                bestd = dd;
                                best = i;
                            }
                        }
                        if (bestd > 1e-9 * (1.0 + sc.factors[k].domain.diameter)) {
                            throw InvalidParameter(
                                "vertex atom does not match any catalog vertex");
                        }
                        vertex_vals[best] += cp.index;
                        boundary->vertices[best].n_atoms += 1;
                    } else {
                        int bin = boundary->edges[cp.edge_id].bin_of(cp.edge_t);
                        bool found = false;
                        for (auto& ee : edge_entries) {
                            if (ee.edge == cp.edge_id && ee.bin == bin) {
                                ee.value += cp.index;
                                ee.atoms += 1;
                                found = true;
                                break;
                            }
                        }
                        if (!found) edge_entries.push_back({cp.edge_id, bin, cp.index, 1});
                    }
                } else {
                    push_sparse(entries, hists[k].grid.bin_of(cp.location), cp.index);
                }
                if (want_stats && cov.d == 2) {
                    int rb = cov.grids[k].bin_of(cp.location);
                    if (rb >= 0) region_vals[k][rb] += cp.index;
                }
                if (fact.n_pair.size() > 0 && k < 2) {
                    const GridSpec& g = k == 0 ? fact.g1 : fact.g2;
                    push_sparse(stat_entries[k], g.bin_of(cp.location), cp.index);
                }
            }
            hists[k].add_sample(entries);
        }

        if (boundary) {
            ++boundary->n_samples;
            for (size_t i = 0; i < vertex_vals.size(); ++i) {
                boundary->vertices[i].sum += vertex_vals[i];
                boundary->vertices[i].sumsq += vertex_vals[i] * vertex_vals[i];
            }
            for (const auto& ee : edge_entries) {
                auto& prof = boundary->edges[ee.edge];
                prof.sum[ee.bin] += ee.value;
                prof.sumsq[ee.bin] += ee.value * ee.value;
                prof.n_atoms[ee.bin] += ee.atoms;
            }
        }
        if (fact.n_pair.size() > 0) fact.add_sample(stat_entries[0], stat_entries[1]);
        if (cov.d == 2) cov.add_sample(region_vals);
    }
};

}  // namespace detail

inline ExperimentResult run_experiment(const Scenario& sc, const RunParams& rp) {
    if (rp.samples == 0) throw InvalidParameter("run: sample count must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    const int threads = std::clamp(rp.threads, 1, 64);
    const uint64_t N = rp.samples;

    double margin = std::numeric_limits<double>::quiet_NaN();
    if (sc.kind == Scenario::Kind::patch4) {
        margin = sectional_sign_margin(sc);  // throws NonDefiniteSign when flat
    }

    std::vector<detail::WorkerAccum> accums(threads, detail::WorkerAccum(sc));
    std::atomic<uint64_t> next_chunk{0};
    const uint64_t chunk = 256;
    std::vector<std::exception_ptr> errors(threads);

    auto work = [&](int wid) {
        try {
            detail::WorkerAccum& acc = accums[wid];
            while (true) {
                uint64_t c = next_chunk.fetch_add(1);
                uint64_t s0 = c * chunk;
                if (s0 >= N) break;
                uint64_t s1 = std::min(N, s0 + chunk);
                for (uint64_t slot = s0; slot < s1; ++slot) {
                    for (uint64_t round = 0;; ++round) {
                        if (round >= 1000) {
                            throw CompletenessUncertified(
                                "sample slot rejected 1000 consecutive attempts");
                        }
                        uint64_t attempt = slot + round * N;
                        uint64_t dir_attempt = attempt;
                        if (rp.antithetic && slot % 2 == 1) {
                            dir_attempt = (slot - 1) + round * N;
                        }
                        detail::SampleSolve smp =
                            detail::solve_sample(sc, rp.seed, attempt, dir_attempt);
                        if (smp.accepted) {
                            acc.accumulate(sc, smp);
                            break;
                        }
                        switch (smp.reason) {
                            case RejectReason::degenerate: ++acc.rejects.degenerate; break;
                            case RejectReason::ambiguous: ++acc.rejects.ambiguous; break;
                            default: ++acc.rejects.uncertified; break;
                        }
                    }
                }
            }
        } catch (...) {
            errors[wid] = std::current_exception();
        }
    };

    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    detail::WorkerAccum total = std::move(accums[0]);
    for (int w = 1; w < threads; ++w) total.merge(accums[w]);

    if (total.rejects.total() >
        0.05 * static_cast<double>(N + total.rejects.total())) {
        throw CompletenessUncertified("rejection rate exceeds 5%; scenario ill-posed");
    }

    ExperimentResult out;
    out.scenario = sc.name;
    out.seed = rp.seed;
    out.samples = N;
    out.antithetic = rp.antithetic;
    out.rejects = total.rejects;
    out.chi_expected = sc.topo.euler_char;
    out.chi_sum = total.chi_sum;
    out.chi_violations = total.chi_violations;
    out.cross_check_mismatches = total.cross_mismatches;
    out.full_hessian_mismatches = total.full_hessian_mismatches;
    out.escalations = total.escalations;
    out.histograms = std::move(total.hists);
    out.boundary = std::move(total.boundary);
    for (const auto& h : out.histograms) {
        bool any = false;
        for (double o : h.oracle) any = any || !std::isnan(o);
        if (any) out.oracle_stats.push_back(oracle_compare(h));
    }
    out.factorization = factorization_test(total.fact);
    out.covariance = covariance_test(total.cov);
    if (out.boundary) {
        out.decomposition =
            boundary_decomposition(out.histograms[0], *out.boundary, sc.topo.euler_char);
    }
    out.sectional_margin = margin;
    out.solver = sc.solver;
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace ixcurv
