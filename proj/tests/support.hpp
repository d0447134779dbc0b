#pragma once

// Shared test oracles and random instance generators.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "firctl/matlib.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl::testing {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(r, c);
    for (double& v : m.data()) v = g(rng);
    return m;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline StateSpaceSystem random_system(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t p) {
    return {random_matrix(rng, n, n, 0.6), random_matrix(rng, n, m), random_matrix(rng, p, n)};
}

inline FirGains random_gains(std::mt19937_64& rng, std::size_t order, std::size_t m, std::size_t p, double scale = 0.5) {
    std::vector<Matrix> g;
    for (std::size_t i = 0; i <= order; ++i) g.push_back(random_matrix(rng, m, p, scale));
    return FirGains(std::move(g));
}

/// Characteristic polynomial det(zI - A) by Faddeev-LeVerrier, highest power first.
inline std::vector<double> charpoly(const Matrix& a) {
    const std::size_t n = a.rows();
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    Matrix m = Matrix::zeros(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        m = a * m + Matrix::identity(n) * c[k - 1];
        c[k] = -(a * m).trace() / static_cast<double>(k);
    }
    return c;
}

/// Largest |det(λI - A)| residual over the claimed eigenvalues, relative to scale.
inline double eig_residual(const Matrix& a, const std::vector<Complex>& eigs) {
    const Polynomial p(charpoly(a));
    double worst = 0.0;
    for (const Complex& z : eigs) {
        // normalize by the size of the terms so large roots are judged fairly
        double scale = 0.0, zp = 1.0;
        for (auto it = p.coeffs().rbegin(); it != p.coeffs().rend(); ++it, zp *= z.abs()) scale += std::abs(*it) * zp;
        worst = std::max(worst, p(z).abs() / std::max(scale, 1e-300));
    }
    return worst;
}

/// Greedy multiset match of eigenvalue lists; largest pairwise distance.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
    if (a.size() != b.size()) return INFINITY;
    double worst = 0.0;
    for (const Complex& x : a) {
        auto best = std::min_element(b.begin(), b.end(), [&](Complex u, Complex v) { return (u - x).abs() < (v - x).abs(); });
        worst = std::max(worst, (*best - x).abs());
        b.erase(best);
    }
    return worst;
}

/// Controllability-matrix rank restricted to the unstable subspace is awkward
/// to compute directly; instead brute force the Hautus rank with complex
/// Gaussian elimination at each unstable eigenvalue.
inline std::size_t complex_rank_gauss(std::vector<std::vector<Complex>> m, double tol) {
    const std::size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    std::size_t rank = 0;
    double scale = 0.0;
    for (auto& r : m)
        for (auto& v : r) scale = std::max(scale, v.abs());
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        for (std::size_t r = rank; r < rows; ++r)
            if (m[r][c].abs() > m[piv][c].abs()) piv = r;
        if (m[piv][c].abs() <= tol * std::max(scale, 1.0)) continue;
        std::swap(m[piv], m[rank]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            const Complex f = m[r][c] / m[rank][c];
            for (std::size_t k = c; k < cols; ++k) m[r][k] = m[r][k] - f * m[rank][k];
        }
        ++rank;
    }
    return rank;
}

}  // namespace firctl::testing
