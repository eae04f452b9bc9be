#pragma once

// Histogram accumulation for index atoms. All per-bin accumulators are exact
// integers (per-sample bin values are sums of indices), so accumulation is
// associative and commutative and merged results are bit-identical for any
// partition of the sample set. Real-valued summaries (mass, stderr, density)
// are derived views computed at read time.

#include <ixcurv/critical.hpp>
#include <ixcurv/errors.hpp>
#include <ixcurv/geometry.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ixcurv {

struct GridSpec {
    int n_u = 0;
    int n_v = 0;
    Rect rect{0, 1, 0, 1};

    int bins() const { return n_u * n_v; }
    // Flat bin id, or -1 for out-of-grid (overflow). The closing edges belong
    // to the last bin so boundary atoms of rectangular domains are kept.
    int bin_of(const Vec2& p) const {
        double fu = (p.x() - rect.u0) / (rect.u1 - rect.u0);
        double fv = (p.y() - rect.v0) / (rect.v1 - rect.v0);
        int iu = static_cast<int>(std::floor(fu * n_u));
        int iv = static_cast<int>(std::floor(fv * n_v));
        if (iu == n_u && fu <= 1.0 + 1e-12) iu = n_u - 1;
        if (iv == n_v && fv <= 1.0 + 1e-12) iv = n_v - 1;
        if (iu < 0 || iu >= n_u || iv < 0 || iv >= n_v) return -1;
        return iv * n_u + iu;
    }
    Rect bin_rect(int id) const {
        int iv = id / n_u, iu = id % n_u;
        double du = (rect.u1 - rect.u0) / n_u, dv = (rect.v1 - rect.v0) / n_v;
        return {rect.u0 + iu * du, rect.u0 + (iu + 1) * du,
                rect.v0 + iv * dv, rect.v0 + (iv + 1) * dv};
    }
};

struct CurvatureHistogram {
    GridSpec grid;
    int factor = 1;  // 1-based factor id (1 for single-factor scenarios)
    std::vector<long long> sum;     // per-bin Σ over samples of (Σ indices in bin)
    std::vector<long long> sumsq;   // per-bin Σ of squares of per-sample values
    std::vector<long long> n_atoms; // per-bin atom count
    std::vector<double> oracle;     // per-bin expected value; NaN when undefined
    bool oracle_is_density = false; // oracle in mass/area units instead of mass
    std::vector<double> area;       // per-bin surface area (normalization)
    long long overflow_sum = 0;
    long long overflow_n = 0;
    uint64_t n_samples = 0;

    explicit CurvatureHistogram(const GridSpec& g = {}, int factor_id = 1)
        : grid(g), factor(factor_id) {
        sum.assign(g.bins(), 0);
        sumsq.assign(g.bins(), 0);
        n_atoms.assign(g.bins(), 0);
        oracle.assign(g.bins(), std::numeric_limits<double>::quiet_NaN());
        area.assign(g.bins(), std::numeric_limits<double>::quiet_NaN());
    }

    // One sample's sparse contribution: (bin, per-sample index sum, atom count).
    struct SparseEntry {
        int bin;
        long long value;
        long long atoms;
    };
    void add_sample(const std::vector<SparseEntry>& entries) {
        ++n_samples;
        for (const auto& e : entries) {
            if (e.bin < 0) {
                overflow_sum += e.value;
                overflow_n += e.atoms;
                continue;
            }
            sum[e.bin] += e.value;
            sumsq[e.bin] += e.value * e.value;
            n_atoms[e.bin] += e.atoms;
        }
    }

    void merge(const CurvatureHistogram& other) {
        for (size_t i = 0; i < sum.size(); ++i) {
            sum[i] += other.sum[i];
            sumsq[i] += other.sumsq[i];
            n_atoms[i] += other.n_atoms[i];
        }
        overflow_sum += other.overflow_sum;
        overflow_n += other.overflow_n;
        n_samples += other.n_samples;
    }

    double mass(int bin) const {
        return static_cast<double>(sum[bin]) / static_cast<double>(n_samples);
    }
    double stderr_of_mass(int bin) const {
        double n = static_cast<double>(n_samples);
        if (n < 2) return std::numeric_limits<double>::quiet_NaN();
        double m = mass(bin);
        double var = (static_cast<double>(sumsq[bin]) - n * m * m) / (n - 1.0);
        return std::sqrt(std::max(0.0, var) / n);
    }
    double density(int bin) const { return mass(bin) / area[bin]; }
    double total_mass() const {
        long long t = overflow_sum;
        for (long long s : sum) t += s;
        return static_cast<double>(t) / static_cast<double>(n_samples);
    }
};

// Groups a sample-ordered atom stream by sample id and accumulates the block
// location of `factor` (1-based). Atom indices are the atoms' own (block)
// indices for multi-factor atoms when block_index is provided.
inline CurvatureHistogram bin_histogram(const std::vector<IndexAtom>& atoms,
                                        const GridSpec& grid, uint64_t n_samples,
                                        int factor = 1) {
    CurvatureHistogram hist(grid, factor);
    std::vector<CurvatureHistogram::SparseEntry> entries;
    size_t i = 0;
    uint64_t next_sample = 0;
    while (next_sample < n_samples) {
        entries.clear();
        while (i < atoms.size() && atoms[i].sample == next_sample) {
            const auto& loc = atoms[i].locations.at(static_cast<size_t>(factor - 1));
            int bin = grid.bin_of(loc);
            bool found = false;
            for (auto& e : entries) {
                if (e.bin == bin) {
                    e.value += atoms[i].index;
                    e.atoms += 1;
                    found = true;
                    break;
                }
            }
            if (!found) entries.push_back({bin, atoms[i].index, 1});
            ++i;
        }
        hist.add_sample(entries);
        ++next_sample;
    }
    if (i != atoms.size()) {
        throw InvalidParameter("atom stream not ordered by sample id within range");
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Boundary measure: vertex atoms and per-edge 1-d profiles.

struct VertexMass {
    Vec2 location;
    long long sum = 0;
    long long sumsq = 0;
    long long n_atoms = 0;
    double oracle = std::numeric_limits<double>::quiet_NaN();
    double reference = std::numeric_limits<double>::quiet_NaN();  // flagged, not asserted

    double mass(uint64_t n) const {
        return static_cast<double>(sum) / static_cast<double>(n);
    }
    double stderr_of_mass(uint64_t n) const {
        double nn = static_cast<double>(n);
        double m = mass(n);
        double var = (static_cast<double>(sumsq) - nn * m * m) / (nn - 1.0);
        return std::sqrt(std::max(0.0, var) / nn);
    }
};

struct EdgeProfile {
    int edge_id = 0;
    double t_end = 1.0;
    std::vector<long long> sum;
    std::vector<long long> sumsq;
    std::vector<long long> n_atoms;

    explicit EdgeProfile(int id = 0, double T = 1.0, int nbins = 32)
        : edge_id(id), t_end(T), sum(nbins, 0), sumsq(nbins, 0), n_atoms(nbins, 0) {}
    int bin_of(double t) const {
        int b = static_cast<int>(std::floor(t / t_end * sum.size()));
        return std::clamp(b, 0, static_cast<int>(sum.size()) - 1);
    }
    double mass(int bin, uint64_t n) const {
        return static_cast<double>(sum[bin]) / static_cast<double>(n);
    }
    double total_mass(uint64_t n) const {
        long long t = 0;
        for (long long s : sum) t += s;
        return static_cast<double>(t) / static_cast<double>(n);
    }
};

struct BoundaryMeasure {
    std::vector<VertexMass> vertices;
    std::vector<EdgeProfile> edges;
    uint64_t n_samples = 0;

    void merge(const BoundaryMeasure& other) {
        for (size_t i = 0; i < vertices.size(); ++i) {
            vertices[i].sum += other.vertices[i].sum;
            vertices[i].sumsq += other.vertices[i].sumsq;
            vertices[i].n_atoms += other.vertices[i].n_atoms;
        }
        for (size_t i = 0; i < edges.size(); ++i) {
            for (size_t b = 0; b < edges[i].sum.size(); ++b) {
                edges[i].sum[b] += other.edges[i].sum[b];
                edges[i].sumsq[b] += other.edges[i].sumsq[b];
                edges[i].n_atoms[b] += other.edges[i].n_atoms[b];
            }
        }
        n_samples += other.n_samples;
    }

    double vertex_total(uint64_t n) const {
        double t = 0;
        for (const auto& v : vertices) t += v.mass(n);
        return t;
    }
    double edge_total(uint64_t n) const {
        double t = 0;
        for (const auto& e : edges) t += e.total_mass(n);
        return t;
    }
};

}  // namespace ixcurv
