#pragma once

// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on the Legendre recurrence.

#include <cmath>
#include <map>
#include <vector>

namespace ixcurv {

struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const GaussLegendre& gauss_legendre(int n) {
    static std::map<int, GaussLegendre> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        gl.nodes[i] = -x;
        gl.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(gl)).first->second;
}

// Tensor-product integral of f(u,v) over [ua,ub] x [va,vb].
template <typename F>
double integrate2d(F&& f, double ua, double ub, double va, double vb, int n) {
    const auto& gl = gauss_legendre(n);
    double su = 0.5 * (ub - ua), cu = 0.5 * (ub + ua);
    double sv = 0.5 * (vb - va), cv = 0.5 * (vb + va);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = cu + su * gl.nodes[i];
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = cv + sv * gl.nodes[j];
            row += gl.weights[j] * f(u, v);
        }
        total += gl.weights[i] * row;
    }
    return total * su * sv;
}

}  // namespace ixcurv
