#include "nlslab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nlslab/interp.hpp"

namespace nlslab {

std::string FunctionalReport::csv_header() {
    return "M,E,H0,G,Vq,K2,I,E0,K2_0,sigma";
}

std::string FunctionalReport::csv_row() const {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%+d",
                  M, E, H0, G, Vq, K2, I, E0, K2_0, sigma);
    return buf;
}

FunctionalReport evaluate_functionals(const RadialField& phi,
                                      const std::vector<double>& V,
                                      const std::vector<double>& rVr,
                                      int sigma) {
    const auto& g = *phi.grid;
    const std::size_t n = phi.size();
    if (V.size() != n || rVr.size() != n)
        throw shape_error("evaluate_functionals: potential length mismatch");

    RadialField dphi = radial_derivative(phi);
    std::vector<double> a2(n), d2(n), a4(n), va(n), rva(n);
    for (std::size_t i = 0; i < n; ++i) {
        a2[i] = std::norm(phi.values[i]);
        d2[i] = std::norm(dphi.values[i]);
        a4[i] = a2[i] * a2[i];
        va[i] = V[i] * a2[i];
        rva[i] = rVr[i] * a2[i];
    }
    FunctionalReport rep;
    rep.sigma = sigma;
    rep.M = 0.5 * integrate(g, a2);
    rep.H0 = 0.5 * integrate(g, d2);
    rep.G = 0.25 * sigma * integrate(g, a4);
    rep.Vq = 0.5 * integrate(g, va);
    rep.Vs = 0.5 * integrate(g, rva);
    rep.E = rep.H0 + rep.Vq - rep.G;
    rep.K2 = 2.0 * rep.H0 - 3.0 * rep.G - rep.Vs;
    rep.I = rep.E - 0.5 * rep.K2;
    rep.E0 = rep.H0 - rep.G;
    rep.K2_0 = 2.0 * rep.H0 - 3.0 * rep.G;
    return rep;
}

FunctionalReport evaluate_functionals(const RadialField& phi,
                                      const PotentialSpec& V, int sigma) {
    return evaluate_functionals(phi, V.sample(*phi.grid),
                                V.sample_rVr(*phi.grid), sigma);
}

RadialField apply_scaling(const RadialField& phi, const ScalingOp& op) {
    if (std::abs(op.t) > op.t_max)
        throw parameter_out_of_range("apply_scaling: |t| exceeds t_max");
    if (op.p <= 0) throw invalid_parameter("apply_scaling: p must be positive");
    if (op.t == 0.0) return phi;

    const auto& r = phi.grid->nodes;
    std::vector<double> re(r.size()), im(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        re[i] = phi.values[i].real();
        im[i] = phi.values[i].imag();
    }
    Pchip pre(r, re, true), pim(r, im, true);
    double amp = std::exp(3.0 * op.t / op.p), lam = std::exp(op.t);
    RadialField out(phi.grid);
    for (std::size_t i = 0; i < r.size(); ++i) {
        double s = lam * r[i];
        out.values[i] = amp * cplx(pre(s), pim(s));
    }
    return out;
}

namespace {
// <W phi|phi>/2 for a sampled potential W
double half_quad(const RadialField& phi, const std::vector<double>& W) {
    std::vector<double> s(phi.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = W[i] * std::norm(phi.values[i]);
    return 0.5 * integrate(*phi.grid, s);
}

// d/dt <V(S_t-transformed)> family: S'_p<V> = -<S'_q V> with q = p/(p-2),
// S'_q V = r V_r + (3/q) V
double scaling_derivative_vquad(const RadialField& phi, double p,
                                const PotentialSpec& V) {
    const auto& g = *phi.grid;
    std::vector<double> W = V.sample_rVr(g);
    if (p != 2.0) {
        double coef = 3.0 * (p - 2.0) / p;  // 3/q
        std::vector<double> vs = V.sample(g);
        for (std::size_t i = 0; i < W.size(); ++i) W[i] += coef * vs[i];
    }
    return -half_quad(phi, W);
}

// S'_p <S'_inf V> where S'_inf V = r V_r:  -<r(rV_r)_r + (3/q) rV_r>
double scaling_derivative_vs(const RadialField& phi, double p,
                             const PotentialSpec& V) {
    const auto& g = *phi.grid;
    std::vector<double> rvr = V.sample_rVr(g), r2vrr = V.sample_r2Vrr(g);
    std::vector<double> W(rvr.size());
    double coef = (p == 2.0) ? 0.0 : 3.0 * (p - 2.0) / p;
    for (std::size_t i = 0; i < W.size(); ++i)
        W[i] = rvr[i] + r2vrr[i] + coef * rvr[i];
    return -half_quad(phi, W);
}
} // namespace

double scaling_derivative(FunctionalTag tag, const RadialField& phi, double p,
                          const PotentialSpec& V, int sigma) {
    if (p <= 0) throw invalid_parameter("scaling_derivative: p must be positive");
    FunctionalReport rep = evaluate_functionals(phi, V, sigma);
    switch (tag) {
        case FunctionalTag::M:
            return (6.0 / p - 3.0) * rep.M;
        case FunctionalTag::H0:
            return (6.0 / p - 1.0) * rep.H0;
        case FunctionalTag::G:
            return (12.0 / p - 3.0) * rep.G;
        case FunctionalTag::V_quad:
            return scaling_derivative_vquad(phi, p, V);
        case FunctionalTag::E:
            return (6.0 / p - 1.0) * rep.H0 + scaling_derivative_vquad(phi, p, V) -
                   (12.0 / p - 3.0) * rep.G;
        case FunctionalTag::K2:
            return 2.0 * (6.0 / p - 1.0) * rep.H0 -
                   3.0 * (12.0 / p - 3.0) * rep.G -
                   scaling_derivative_vs(phi, p, V);
        case FunctionalTag::I:
            return (6.0 / p - 1.0) * rep.H0 + scaling_derivative_vquad(phi, p, V) -
                   (12.0 / p - 3.0) * rep.G -
                   0.5 * (2.0 * (6.0 / p - 1.0) * rep.H0 -
                          3.0 * (12.0 / p - 3.0) * rep.G -
                          scaling_derivative_vs(phi, p, V));
    }
    throw invalid_parameter("scaling_derivative: unsupported tag");
}

std::string DichotomyConstants::describe() const {
    std::ostringstream os;
    os << "dichotomy constants: x(H0/M) ground<=" << x_ground_max
       << " excited>=" << x_excited_min << " theta_x=" << theta_x
       << "; y(H0*M) ground<=" << y_ground_max << " excited>=" << y_excited_min
       << " theta_y=" << theta_y << "; mu_hat=" << mu_hat;
    return os.str();
}

DichotomyCase dichotomy_classify(const FunctionalReport& rep,
                                 const DichotomyConstants& c) {
    if (c.mu_hat > 0 && rep.M > c.mu_hat)
        throw not_in_regime("dichotomy: mass above the calibrated surrogate");
    if (rep.K2 * rep.M > c.k2m_gate)
        throw not_in_regime("dichotomy: K2 not small against 1/M");
    double x = rep.H0 / rep.M;
    double y = rep.H0 * rep.M;
    if (x <= c.theta_x) return DichotomyCase::small_i;
    if (rep.sigma > 0 && y >= c.theta_y) {
        if (rep.G < c.g_ratio_min * rep.H0)
            throw not_in_regime("dichotomy: case (iii) without G ~ H0");
        if (std::abs(rep.Vq) + std::abs(rep.Vs) >= c.vdom_frac * rep.H0)
            throw not_in_regime("dichotomy: potential not dominated in (iii)");
        return DichotomyCase::large_iii;
    }
    return DichotomyCase::intermediate_ii;
}

double lemma_potential_constant(const std::vector<double>& V,
                                const RadialGrid& g, double eps) {
    if (eps <= 0) throw invalid_parameter("lemma_potential_constant: eps > 0");
    double vmax = 0.0;
    for (double v : V) vmax = std::max(vmax, std::abs(v));
    auto l2_above = [&](double h) {
        double s = 0.0;
        for (std::size_t i = 0; i < V.size(); ++i)
            if (std::abs(V[i]) > h) s += g.weights[i] * V[i] * V[i];
        return std::sqrt(4.0 * M_PI * s);
    };
    if (l2_above(0.0) <= 2.0 * eps) return 0.0;
    double lo = 0.0, hi = vmax;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (l2_above(mid) <= 2.0 * eps ? hi : lo) = mid;
    }
    return 0.5 * hi;
}

} // namespace nlslab
