#pragma once

// Test-side oracles, independent of the library's quadrature and operators.

#include <cmath>
#include <functional>

namespace oracles {

// adaptive Simpson on [a,b]
inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

// composite panels first so that narrow features are never missed
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
    const int panels = 64;
    double h = (b - a) / panels, acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        double x0 = a + k * h, x1 = x0 + h;
        double fa = f(x0), fb = f(x1), fm = f(0.5 * (x0 + x1));
        double whole = h / 6.0 * (fa + 4 * fm + fb);
        acc += adaptive_simpson_rec(f, x0, x1, fa, fm, fb, whole, tol / panels,
                                    40);
    }
    return acc;
}

// int_0^inf g(r) 4 pi r^2 dr for decaying g, truncated at R
inline double radial_integral(const std::function<double(double)>& g, double R,
                              double tol = 1e-12) {
    return integrate([&](double r) { return 4.0 * M_PI * r * r * g(r); }, 0.0,
                     R, tol);
}

} // namespace oracles
