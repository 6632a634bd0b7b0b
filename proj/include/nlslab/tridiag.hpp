#pragma once

// Tridiagonal kernels shared by the spectral solver, the stationary Newton
// solves and the Crank-Nicolson stepper.  All matrices are stored as three
// diagonals (lower a[1..n-1], main d[0..n-1], upper c[0..n-2]).

#include <cmath>
#include <complex>
#include <vector>

#include "nlslab/errors.hpp"

namespace nlslab {

using cplx = std::complex<double>;

// Thomas algorithm, no pivoting.  Fine for the diagonally dominant systems
// produced by the w = r*f discretization (shifted or i/dt-augmented).
template <typename T>
void solve_tridiag(const std::vector<T>& lower, const std::vector<T>& diag,
                   const std::vector<T>& upper, std::vector<T>& rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw shape_error("solve_tridiag: diagonal length mismatch");
    static thread_local std::vector<T> cp, dp;
    cp.assign(n, T{});
    dp.assign(n, T{});
    T den = diag[0];
    cp[0] = upper[0] / den;
    dp[0] = rhs[0] / den;
    for (std::size_t i = 1; i < n; ++i) {
        den = diag[i] - lower[i] * cp[i - 1];
        cp[i] = upper[i] / den;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / den;
    }
    rhs[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = dp[i] - cp[i] * rhs[i + 1];
}

// Symmetric tridiagonal eigen-tools (main d, off-diagonal e with e[i]
// coupling i and i+1).

// Number of eigenvalues strictly below x, by the Sturm sequence sign count.
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e,
                       double x) {
    const std::size_t n = d.size();
    int count = 0;
    double q = d[0] - x;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        double off = e[i - 1];
        if (q == 0.0) q = 1e-300;
        q = d[i] - x - off * off / q;
        if (q < 0) ++count;
    }
    return count;
}

// k-th eigenvalue (0-based, ascending) by bisection to absolute tol.
inline double bisect_eigenvalue(const std::vector<double>& d,
                                const std::vector<double>& e, int k,
                                double tol = 1e-12) {
    double lo = d[0], hi = d[0];
    double radius = 0.0;
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = std::abs(d[i]);
        if (i > 0) r += std::abs(e[i - 1]);
        if (i + 1 < n) r += std::abs(e[i]);
        radius = std::max(radius, r);
    }
    lo = -radius - 1.0;
    hi = radius + 1.0;
    while (hi - lo > tol * (1.0 + std::abs(lo) + std::abs(hi))) {
        double mid = 0.5 * (lo + hi);
        if (sturm_count(d, e, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Inverse iteration for the eigenvector of an isolated eigenvalue lam.
inline std::vector<double> inverse_iteration(const std::vector<double>& d,
                                             const std::vector<double>& e,
                                             double lam, int iters = 6) {
    const std::size_t n = d.size();
    std::vector<double> lower(n, 0.0), diag(n), upper(n, 0.0), v(n);
    const double shift = lam + 1e-12 * (1.0 + std::abs(lam));
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = d[i] - shift;
        if (i > 0) lower[i] = e[i - 1];
        if (i + 1 < n) upper[i] = e[i];
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / std::sqrt(double(n));
    for (int it = 0; it < iters; ++it) {
        std::vector<double> rhs = v;
        solve_tridiag(lower, diag, upper, rhs);
        double nrm = 0.0;
        for (double x : rhs) nrm += x * x;
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) v[i] = rhs[i] / nrm;
    }
    return v;
}

// 2x2-block tridiagonal solver over the reals; used by the Newton fallback
// of the time stepper where the linearized cubic couples (Re, Im).
struct Block2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
};

inline Block2 block_mul(const Block2& A, const Block2& B) {
    return {A.a11 * B.a11 + A.a12 * B.a21, A.a11 * B.a12 + A.a12 * B.a22,
            A.a21 * B.a11 + A.a22 * B.a21, A.a21 * B.a12 + A.a22 * B.a22};
}

inline Block2 block_inv(const Block2& A) {
    double det = A.a11 * A.a22 - A.a12 * A.a21;
    return {A.a22 / det, -A.a12 / det, -A.a21 / det, A.a11 / det};
}

inline void block_solve_tridiag(const std::vector<Block2>& lower,
                                std::vector<Block2> diag,
                                const std::vector<Block2>& upper,
                                std::vector<cplx>& rhs) {
    const std::size_t n = diag.size();
    std::vector<Block2> cp(n);
    std::vector<cplx> dp(n);
    auto apply = [](const Block2& A, cplx v) {
        return cplx(A.a11 * v.real() + A.a12 * v.imag(),
                    A.a21 * v.real() + A.a22 * v.imag());
    };
    Block2 inv = block_inv(diag[0]);
    cp[0] = block_mul(inv, upper[0]);
    dp[0] = apply(inv, rhs[0]);
    for (std::size_t i = 1; i < n; ++i) {
        Block2 den = diag[i];
        Block2 lc = block_mul(lower[i], cp[i - 1]);
        den.a11 -= lc.a11; den.a12 -= lc.a12;
        den.a21 -= lc.a21; den.a22 -= lc.a22;
        inv = block_inv(den);
        if (i + 1 < n) cp[i] = block_mul(inv, upper[i]);
        cplx t = rhs[i] - apply(lower[i], dp[i - 1]);
        dp[i] = apply(inv, t);
    }
    rhs[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = dp[i] - apply(cp[i], rhs[i + 1]);
}

} // namespace nlslab
