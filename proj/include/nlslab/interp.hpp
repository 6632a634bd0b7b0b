#pragma once

// Interpolation helpers: monotone (Fritsch-Carlson) cubic Hermite for field
// resampling, and a C^2 cubic spline used to differentiate solved branches.

#include <cmath>
#include <cstddef>
#include <vector>

#include "nlslab/errors.hpp"

namespace nlslab {

// Monotone cubic Hermite slopes. On non-monotone data this limiter still
// yields a well-behaved C^1 interpolant without overshoot.
inline std::vector<double> pchip_slopes(const std::vector<double>& x,
                                        const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        del[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    if (n == 2) {
        d[0] = d[1] = del[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
            double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0)
            d = 0.0;
        else if (d0 * d1 <= 0.0 && std::abs(d) > 3 * std::abs(d0))
            d = 3 * d0;
        return d;
    };
    d[0] = end_slope(x[1] - x[0], x[2] - x[1], del[0], del[1]);
    d[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], del[n - 2],
                         del[n - 3]);
    return d;
}

inline double hermite_eval(double x0, double x1, double y0, double y1,
                           double d0, double d1, double x) {
    double h = x1 - x0, t = (x - x0) / h;
    double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + h * d0 * (t3 - 2 * t2 + t) +
           y1 * (-2 * t3 + 3 * t2) + h * d1 * (t3 - t2);
}

// Piecewise-monotone cubic interpolant of samples on strictly increasing x.
// Evaluation outside [x.front(), x.back()] returns 0 (fields vanish past the
// wall) unless even_at_zero is set, in which case r < x.front() uses an even
// quadratic through the first two samples.
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y, bool even_at_zero = false)
        : x_(std::move(x)), y_(std::move(y)), even_(even_at_zero) {
        if (x_.size() != y_.size() || x_.size() < 2)
            throw invalid_parameter("Pchip: need matching samples, >= 2");
        d_ = pchip_slopes(x_, y_);
    }

    double operator()(double x) const {
        if (x < x_.front()) {
            if (!even_) return 0.0;
            // even quadratic a + b r^2 through the first two samples
            double r1 = x_[0], r2 = x_[1];
            double b = (y_[1] - y_[0]) / (r2 * r2 - r1 * r1);
            double a = y_[0] - b * r1 * r1;
            return a + b * x * x;
        }
        if (x > x_.back()) return 0.0;
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            (x_[mid] <= x ? lo : hi) = mid;
        }
        return hermite_eval(x_[lo], x_[lo + 1], y_[lo], y_[lo + 1], d_[lo],
                            d_[lo + 1], x);
    }

  private:
    std::vector<double> x_, y_;
    std::vector<double> d_;
    bool even_ = false;
};

// C^2 cubic spline with optional clamped end derivatives; exposes first and
// second derivatives, which the modulation frames need along the branch.
class CubicSpline {
  public:
    CubicSpline() = default;
    // natural ends by default; pass finite slopes to clamp
    CubicSpline(std::vector<double> x, std::vector<double> y,
                double left_slope = nan_, double right_slope = nan_)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n != y_.size() || n < 3)
            throw invalid_parameter("CubicSpline: need >= 3 samples");
        // solve for second derivatives m_i (tridiagonal)
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), rhs(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            a[i] = h0 / 6;
            b[i] = (h0 + h1) / 3;
            c[i] = h1 / 6;
            rhs[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        }
        if (std::isnan(left_slope)) {
            b[0] = 1.0; rhs[0] = 0.0;  // natural
        } else {
            double h = x_[1] - x_[0];
            b[0] = h / 3; c[0] = h / 6;
            rhs[0] = (y_[1] - y_[0]) / h - left_slope;
        }
        if (std::isnan(right_slope)) {
            b[n - 1] = 1.0; rhs[n - 1] = 0.0;
        } else {
            double h = x_[n - 1] - x_[n - 2];
            a[n - 1] = h / 6; b[n - 1] = h / 3;
            rhs[n - 1] = right_slope - (y_[n - 1] - y_[n - 2]) / h;
        }
        // Thomas
        for (std::size_t i = 1; i < n; ++i) {
            double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m_.assign(n, 0.0);
        m_[n - 1] = rhs[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            m_[i] = (rhs[i] - c[i] * m_[i + 1]) / b[i];
    }

    double eval(double x) const { return piece(x, 0); }
    double deriv(double x) const { return piece(x, 1); }
    double deriv2(double x) const { return piece(x, 2); }

  private:
    static constexpr double nan_ = __builtin_nan("");

    double piece(double x, int order) const {
        const std::size_t n = x_.size();
        std::size_t lo = 0, hi = n - 1;
        if (x <= x_.front()) { lo = 0; hi = 1; }
        else if (x >= x_.back()) { lo = n - 2; hi = n - 1; }
        else {
            while (hi - lo > 1) {
                std::size_t mid = (lo + hi) / 2;
                (x_[mid] <= x ? lo : hi) = mid;
            }
        }
        double h = x_[hi] - x_[lo];
        double A = (x_[hi] - x) / h, B = (x - x_[lo]) / h;
        if (order == 0)
            return A * y_[lo] + B * y_[hi] +
                   ((A * A * A - A) * m_[lo] + (B * B * B - B) * m_[hi]) * h * h / 6;
        if (order == 1)
            return (y_[hi] - y_[lo]) / h -
                   (3 * A * A - 1) / 6 * h * m_[lo] + (3 * B * B - 1) / 6 * h * m_[hi];
        return A * m_[lo] + B * m_[hi];
    }

    std::vector<double> x_, y_, m_;
};

// second-order Lagrange derivative weights at xe for samples at x1,x2,x3
inline void lagrange3_deriv(double x1, double x2, double x3, double xe,
                            double& c1, double& c2, double& c3) {
    c1 = (2 * xe - x2 - x3) / ((x1 - x2) * (x1 - x3));
    c2 = (2 * xe - x1 - x3) / ((x2 - x1) * (x2 - x3));
    c3 = (2 * xe - x1 - x2) / ((x3 - x1) * (x3 - x2));
}

// Lagrange value weights at xe for samples at x1,x2,x3
inline void lagrange3_value(double x1, double x2, double x3, double xe,
                            double& c1, double& c2, double& c3) {
    c1 = (xe - x2) * (xe - x3) / ((x1 - x2) * (x1 - x3));
    c2 = (xe - x1) * (xe - x3) / ((x2 - x1) * (x2 - x3));
    c3 = (xe - x1) * (xe - x2) / ((x3 - x1) * (x3 - x2));
}

} // namespace nlslab
