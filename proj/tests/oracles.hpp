#pragma once

// Independent brute-force oracles used by the test suite. These deliberately
// avoid the library's own code paths wherever a result can be recomputed from
// first principles (dense scans, direction enumeration, closed forms).

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

// Fraction of directions (equally spaced on the unit circle) for which each
// polygon vertex is the unique argmin of a . x. Deterministic enumeration;
// error is bounded by (#vertices / n_dirs) from boundary ties.
inline std::vector<double> vertex_argmin_fractions(
    const std::vector<Eigen::Vector2d>& vertices, int n_dirs = 1000000) {
    std::vector<double> hits(vertices.size(), 0.0);
    for (int j = 0; j < n_dirs; ++j) {
        double th = 2.0 * M_PI * (j + 0.5) / n_dirs;
        Eigen::Vector2d a(std::cos(th), std::sin(th));
        int best = 0;
        double bestval = a.dot(vertices[0]);
        for (size_t i = 1; i < vertices.size(); ++i) {
            double val = a.dot(vertices[i]);
            if (val < bestval) {
                bestval = val;
                best = static_cast<int>(i);
            }
        }
        hits[best] += 1.0;
    }
    for (auto& h : hits) h /= n_dirs;
    return hits;
}

// Spherical triangle area via l'Huilier's theorem (side lengths only; does
// not touch vertex angles, so it is independent of the angle-excess route).
inline double lhuilier_area(const Eigen::Vector3d& A, const Eigen::Vector3d& B,
                            const Eigen::Vector3d& C) {
    double a = std::acos(std::clamp(B.dot(C), -1.0, 1.0));
    double b = std::acos(std::clamp(C.dot(A), -1.0, 1.0));
    double c = std::acos(std::clamp(A.dot(B), -1.0, 1.0));
    double s = 0.5 * (a + b + c);
    double t = std::sqrt(std::max(0.0, std::tan(s / 2) * std::tan((s - a) / 2) *
                                           std::tan((s - b) / 2) * std::tan((s - c) / 2)));
    return 4.0 * std::atan(t);
}

}  // namespace oracle
