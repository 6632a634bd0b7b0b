#include "nlslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nlslab/interp.hpp"

namespace nlslab {

namespace {
constexpr double four_pi = 4.0 * 3.14159265358979323846264338327950288;

// geometric map s in [0,1] -> r in [0,b]; phi'(1)/phi'(0) = stretch
struct GeoMap {
    double b, lam;
    double r(double s) const {
        if (lam == 0.0) return b * s;
        return b * std::expm1(lam * s) / std::expm1(lam);
    }
    double dr(double s) const {
        if (lam == 0.0) return b;
        return b * lam * std::exp(lam * s) / std::expm1(lam);
    }
    double d2r(double s) const {
        if (lam == 0.0) return 0.0;
        return b * lam * lam * std::exp(lam * s) / std::expm1(lam);
    }
};
} // namespace

GridPtr make_grid(double r_max, int n, double stretch) {
    if (!std::isfinite(r_max) || r_max <= 0.0)
        throw invalid_parameter("make_grid: r_max must be finite and positive");
    if (n < 16) throw invalid_parameter("make_grid: n must be >= 16");
    if (!std::isfinite(stretch) || stretch < 1.0)
        throw invalid_parameter("make_grid: stretch must be >= 1");

    auto g = std::make_shared<RadialGrid>();
    g->r_max = r_max;
    g->n = n;
    g->stretch = stretch;

    GeoMap map{r_max, std::log(stretch)};
    const double hs = 1.0 / n;
    g->nodes.resize(n);
    for (int i = 0; i < n; ++i) g->nodes[i] = map.r((i + 0.5) * hs);

    const auto& r = g->nodes;
    // cells: beta_0 = 0, beta_i = (r_i + r_{i+1})/2, beta_n = r_max
    g->cell.resize(n);
    for (int i = 0; i < n; ++i) {
        double lo = (i == 0) ? 0.0 : 0.5 * (r[i - 1] + r[i]);
        double hi = (i == n - 1) ? r_max : 0.5 * (r[i] + r[i + 1]);
        g->cell[i] = hi - lo;
    }

    g->weights.resize(n);
    for (int i = 0; i < n; ++i) g->weights[i] = g->cell[i] * r[i] * r[i];

    if (stretch == 1.0) {
        // Euler-Maclaurin wall correction (h^2/24) F'(1) for the mapped
        // integrand F(s) = g(r(s)) r(s)^2 r'(s), with g(b), g'(b) obtained by
        // quadratic extrapolation through the last three nodes.  Exact for
        // g in {1, r}; leaves decaying integrands untouched.
        double b = r_max;
        double e1, e2, e3, q1, q2, q3;
        lagrange3_value(r[n - 3], r[n - 2], r[n - 1], b, e1, e2, e3);
        lagrange3_deriv(r[n - 3], r[n - 2], r[n - 1], b, q1, q2, q3);
        double dphi = map.dr(1.0), d2phi = map.d2r(1.0);
        double cval = (hs * hs / 24.0) * (2.0 * b * dphi * dphi + b * b * d2phi);
        double cder = (hs * hs / 24.0) * (b * b * dphi * dphi);
        g->weights[n - 3] += cval * e1 + cder * q1;
        g->weights[n - 2] += cval * e2 + cder * q2;
        g->weights[n - 1] += cval * e3 + cder * q3;
    }

    for (int i = 0; i < n; ++i)
        if (!(g->weights[i] > 0.0))
            throw invalid_parameter("make_grid: non-positive quadrature weight");

    // flux-form Laplacian on w = r*f with odd-reflected ghosts
    g->lap_lo.assign(n, 0.0);
    g->lap_di.assign(n, 0.0);
    g->lap_up.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = (i == 0) ? 2.0 * r[0] : r[i] - r[i - 1];
        double t = (i == n - 1) ? 2.0 * (r_max - r[n - 1]) : r[i + 1] - r[i];
        double m = 0.5 * (s + t);
        if (i == 0) {
            g->lap_di[i] = -(2.0 / s + 1.0 / t) / m;
            g->lap_up[i] = 1.0 / (t * m);
        } else if (i == n - 1) {
            g->lap_lo[i] = 1.0 / (s * m);
            g->lap_di[i] = -(1.0 / s + 2.0 / t) / m;
        } else {
            g->lap_lo[i] = 1.0 / (s * m);
            g->lap_di[i] = -(1.0 / s + 1.0 / t) / m;
            g->lap_up[i] = 1.0 / (t * m);
        }
    }
    return g;
}

double integrate(const RadialGrid& g, const std::vector<double>& samples) {
    if (samples.size() != g.nodes.size())
        throw shape_error("integrate: sample length != grid.n");
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        s += g.weights[i] * samples[i];
    return four_pi * s;
}

cplx inner(const RadialField& f, const RadialField& g) {
    if (f.size() != g.size())
        throw shape_error("inner: field length mismatch");
    cplx s(0.0, 0.0);
    const auto& w = f.grid->weights;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += w[i] * f.values[i] * std::conj(g.values[i]);
    return four_pi * s;
}

double inner_re(const RadialField& f, const RadialField& g) {
    return inner(f, g).real();
}

double l2_norm(const RadialField& f) {
    double s = 0.0;
    const auto& w = f.grid->weights;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += w[i] * std::norm(f.values[i]);
    return std::sqrt(four_pi * s);
}

double lp_norm(const RadialField& f, double p) {
    double s = 0.0;
    const auto& w = f.grid->weights;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += w[i] * std::pow(std::abs(f.values[i]), p);
    return std::pow(four_pi * s, 1.0 / p);
}

double h1_norm(const RadialField& f) {
    RadialField d = radial_derivative(f);
    double a = l2_norm(f), b = l2_norm(d);
    return std::sqrt(a * a + b * b);
}

RadialField radial_derivative(const RadialField& f) {
    const auto& r = f.grid->nodes;
    const std::size_t n = r.size();
    if (n < 16) throw invalid_parameter("radial_derivative: grid too small");
    RadialField out(f.grid);
    double c1, c2, c3;
    // the self-coefficient is recomputed from the zero-sum property so that
    // constants differentiate to exactly zero
    lagrange3_deriv(r[0], r[1], r[2], r[0], c1, c2, c3);
    c1 = -(c2 + c3);
    out.values[0] = c1 * f.values[0] + c2 * f.values[1] + c3 * f.values[2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        lagrange3_deriv(r[i - 1], r[i], r[i + 1], r[i], c1, c2, c3);
        c2 = -(c1 + c3);
        out.values[i] =
            c1 * f.values[i - 1] + c2 * f.values[i] + c3 * f.values[i + 1];
    }
    lagrange3_deriv(r[n - 3], r[n - 2], r[n - 1], r[n - 1], c1, c2, c3);
    c3 = -(c1 + c2);
    out.values[n - 1] =
        c1 * f.values[n - 3] + c2 * f.values[n - 2] + c3 * f.values[n - 1];
    return out;
}

RadialField apply_H(const RadialField& f, const std::vector<double>& V) {
    const auto& g = *f.grid;
    const std::size_t n = g.nodes.size();
    if (V.size() != n) throw shape_error("apply_H: potential length != grid.n");
    std::vector<cplx> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = g.nodes[i] * f.values[i];
    RadialField out(f.grid);
    for (std::size_t i = 0; i < n; ++i) {
        cplx d2 = g.lap_di[i] * w[i];
        if (i > 0) d2 += g.lap_lo[i] * w[i - 1];
        if (i + 1 < n) d2 += g.lap_up[i] * w[i + 1];
        out.values[i] = (-d2 + V[i] * w[i]) / g.nodes[i];
    }
    return out;
}

RadialField conj(const RadialField& f) {
    RadialField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        out.values[i] = std::conj(f.values[i]);
    return out;
}

RadialField operator+(const RadialField& a, const RadialField& b) {
    if (a.size() != b.size()) throw shape_error("field +: length mismatch");
    RadialField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i)
        out.values[i] = a.values[i] + b.values[i];
    return out;
}

RadialField operator-(const RadialField& a, const RadialField& b) {
    if (a.size() != b.size()) throw shape_error("field -: length mismatch");
    RadialField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i)
        out.values[i] = a.values[i] - b.values[i];
    return out;
}

RadialField operator*(cplx s, const RadialField& a) {
    RadialField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = s * a.values[i];
    return out;
}

RadialField sample_onto(const RadialField& f, GridPtr target) {
    const auto& r = f.grid->nodes;
    std::vector<double> re(r.size()), im(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        re[i] = f.values[i].real();
        im[i] = f.values[i].imag();
    }
    Pchip pre(r, re, true), pim(r, im, true);
    RadialField out(target);
    for (std::size_t i = 0; i < target->nodes.size(); ++i)
        out.values[i] = cplx(pre(target->nodes[i]), pim(target->nodes[i]));
    return out;
}

void save_field(const RadialField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw invalid_parameter("save_field: cannot open " + path);
    char buf[128];
    std::snprintf(buf, sizeof buf, "# r_max=%.17g n=%d stretch=%.17g\n",
                  f.grid->r_max, f.grid->n, f.grid->stretch);
    os << buf;
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", f.grid->nodes[i],
                      f.values[i].real(), f.values[i].imag());
        os << buf;
    }
}

RadialField load_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_parameter("load_field: cannot open " + path);
    std::string header;
    std::getline(is, header);
    double r_max = 0, stretch = 1;
    int n = 0;
    if (std::sscanf(header.c_str(), "# r_max=%lg n=%d stretch=%lg", &r_max, &n,
                    &stretch) != 3)
        throw invalid_parameter("load_field: bad header in " + path);
    GridPtr g = make_grid(r_max, n, stretch);
    RadialField f(g);
    for (int i = 0; i < n; ++i) {
        double r, re, im;
        if (!(is >> r >> re >> im))
            throw invalid_parameter("load_field: truncated file " + path);
        f.values[i] = cplx(re, im);
    }
    return f;
}

} // namespace nlslab
