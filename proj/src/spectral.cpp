#include "nlslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlslab/interp.hpp"
#include "nlslab/tridiag.hpp"

namespace nlslab {

double PotentialSpec::value(double r) const {
    double rho = r / width;
    switch (kind) {
        case PotentialKind::gaussian_well:
            return -depth * std::exp(-rho * rho);
        case PotentialKind::exponential_well:
            return -depth * std::exp(-rho);
        case PotentialKind::tabulated: {
            Pchip p(tab_r, tab_v, true);
            return p(r);
        }
    }
    return 0.0;
}

double PotentialSpec::rVr(double r) const {
    double rho = r / width;
    switch (kind) {
        case PotentialKind::gaussian_well:
            return -2.0 * rho * rho * value(r);
        case PotentialKind::exponential_well:
            return -rho * value(r);
        case PotentialKind::tabulated: {
            Pchip p(tab_r, tab_v, true);
            double d = 1e-4 * (1.0 + r);
            return r * (p(r + d) - p(std::max(0.0, r - d))) / (2.0 * d);
        }
    }
    return 0.0;
}

double PotentialSpec::r2Vrr(double r) const {
    double rho = r / width;
    switch (kind) {
        case PotentialKind::gaussian_well:
            return -2.0 * rho * rho * (1.0 - 2.0 * rho * rho) * value(r);
        case PotentialKind::exponential_well:
            return rho * rho * value(r);
        case PotentialKind::tabulated: {
            Pchip p(tab_r, tab_v, true);
            double d = 1e-4 * (1.0 + r);
            return r * r * (p(r + d) - 2.0 * p(r) + p(std::max(0.0, r - d))) /
                   (d * d);
        }
    }
    return 0.0;
}

std::vector<double> PotentialSpec::sample(const RadialGrid& g) const {
    std::vector<double> v(g.nodes.size());
    if (kind == PotentialKind::tabulated) {
        Pchip p(tab_r, tab_v, true);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = p(g.nodes[i]);
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(g.nodes[i]);
    }
    return v;
}

std::vector<double> PotentialSpec::sample_rVr(const RadialGrid& g) const {
    std::vector<double> v(g.nodes.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rVr(g.nodes[i]);
    return v;
}

std::vector<double> PotentialSpec::sample_r2Vrr(const RadialGrid& g) const {
    std::vector<double> v(g.nodes.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = r2Vrr(g.nodes[i]);
    return v;
}

std::string AssumptionReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << c.name << ": ";
        if (!c.checkable)
            os << "not checkable";
        else
            os << (c.pass ? "pass" : "FAIL") << " (" << c.value << ")";
        if (!c.note.empty()) os << " [" << c.note << "]";
        os << "\n";
    }
    return os.str();
}

AssumptionReport check_assumptions(const PotentialSpec& V, const RadialGrid& g) {
    AssumptionReport rep;
    const std::size_t n = g.nodes.size();
    std::vector<double> vs = V.sample(g), rvr = V.sample_rVr(g);

    rep.checks.push_back(
        {"radial real-valued", true, true, 0.0, "by construction"});

    // integrability of V/|x|: flag mass piling onto the innermost nodes
    double total = 0.0, head = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double c = g.weights[i] * std::abs(vs[i]) / g.nodes[i];
        total += c;
        if (i < 4) head += c;
    }
    AssumptionCheck integ{"V/|x| integrable", true, true, 4 * M_PI * total, ""};
    integ.pass = std::isfinite(total) && (total == 0.0 || head < 0.5 * total);
    if (!integ.pass) integ.note = "inner nodes dominate, likely non-integrable";
    rep.checks.push_back(integ);

    // decay of |V| + |r V_r| past r_max/4 and r_max/2
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        peak = std::max(peak, std::abs(vs[i]) + std::abs(rvr[i]));
    auto tail_sup = [&](double R) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (g.nodes[i] > R) s = std::max(s, std::abs(vs[i]) + std::abs(rvr[i]));
        return s;
    };
    double s4 = tail_sup(g.r_max / 4.0), s2 = tail_sup(g.r_max / 2.0);
    AssumptionCheck d4{"decay |V|+|rV_r| past r_max/4", true, true, s4, ""};
    d4.pass = s4 <= 0.1 * (1.0 + peak);
    rep.checks.push_back(d4);
    AssumptionCheck d2{"decay |V|+|rV_r| past r_max/2", true, true, s2, ""};
    d2.pass = (s2 <= 1e-3 * (1.0 + peak)) && (s2 <= s4 + 1e-300);
    rep.checks.push_back(d2);

    rep.checks.push_back({"wave operator bounded on W^{k,p}", false, false, 0.0,
                          "not checkable at desk scale"});

    for (const auto& c : rep.checks)
        if (c.checkable && !c.pass) rep.hard_failure = true;
    return rep;
}

HMatrix assemble_h_matrix(const RadialGrid& g, const std::vector<double>& V) {
    const std::size_t n = g.nodes.size();
    if (V.size() != n) throw shape_error("assemble_h_matrix: V length");
    HMatrix m;
    m.diag.resize(n);
    m.off.resize(n - 1);
    m.scale.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.diag[i] = -g.lap_di[i] + V[i];
        m.scale[i] = std::sqrt(g.cell[i]);
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        m.off[i] = -g.lap_up[i] * m.scale[i] / m.scale[i + 1];
    return m;
}

SpectralData solve_ground(const PotentialSpec& V, GridPtr grid) {
    std::vector<double> vs = V.sample(*grid);
    HMatrix hm = assemble_h_matrix(*grid, vs);

    int n_neg = sturm_count(hm.diag, hm.off, 0.0);
    if (n_neg == 0) throw no_bound_state("solve_ground: lowest eigenvalue >= 0");
    if (n_neg > 1)
        throw multiple_bound_states(
            "solve_ground: " + std::to_string(n_neg) +
            " negative eigenvalues; outside the single-bound-state regime");

    double e0 = bisect_eigenvalue(hm.diag, hm.off, 0, 1e-14);
    double e1 = bisect_eigenvalue(hm.diag, hm.off, 1, 1e-12);

    std::vector<double> w = inverse_iteration(hm.diag, hm.off, e0, 8);
    SpectralData out;
    out.e0 = e0;
    out.e1 = e1;
    out.n_neg = n_neg;
    out.phi0 = RadialField(grid);
    for (std::size_t i = 0; i < w.size(); ++i)
        out.phi0.values[i] = w[i] / (hm.scale[i] * grid->nodes[i]);
    // nodeless ground state: normalize and fix the sign to positive
    double nrm = l2_norm(out.phi0);
    std::size_t imax = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (std::abs(out.phi0.values[i]) > std::abs(out.phi0.values[imax]))
            imax = i;
    double sgn = out.phi0.values[imax].real() < 0 ? -1.0 : 1.0;
    for (auto& v : out.phi0.values) v *= sgn / nrm;
    return out;
}

RadialField project_continuous(const RadialField& f, const SpectralData& spec) {
    if (f.size() != spec.phi0.size())
        throw shape_error("project_continuous: grid mismatch");
    cplx c = inner(f, spec.phi0);
    RadialField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        out.values[i] = f.values[i] - c * spec.phi0.values[i];
    return out;
}

} // namespace nlslab
