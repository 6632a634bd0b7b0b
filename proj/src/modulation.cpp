#include "nlslab/modulation.hpp"

#include <algorithm>
#include <cmath>

#include "nlslab/interp.hpp"

namespace nlslab {

namespace {

// <i f | g> = Re int i f conj(g) dx = -Im (f|g)
double symp(const RadialField& f, const RadialField& g) {
    return -inner(f, g).imag();
}

// cutoff profile: f = rho on [0,1], 3/2 past 2, quintic Hermite blend whose
// solution is f = 1 + s - s^3 + s^4/2 on s = rho - 1 in [0,1]
double cut_f(double rho) {
    if (rho <= 1.0) return rho;
    if (rho >= 2.0) return 1.5;
    double s = rho - 1.0;
    return 1.0 + s - s * s * s + 0.5 * s * s * s * s;
}
double cut_fp(double rho) {
    if (rho <= 1.0) return 1.0;
    if (rho >= 2.0) return 0.0;
    double s = rho - 1.0;
    return (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s);
}
double cut_fpp(double rho) {
    if (rho <= 1.0 || rho >= 2.0) return 0.0;
    double s = rho - 1.0;
    return 6.0 * s * (s - 1.0);
}
double cut_fppp(double rho) {
    if (rho <= 1.0 || rho >= 2.0) return 0.0;
    return 12.0 * (rho - 1.0) - 6.0;
}

} // namespace

BranchInterpolant::BranchInterpolant(const GroundBranch& branch,
                                     const SpectralData& spec,
                                     const PotentialSpec& V, int sigma,
                                     GridPtr target)
    : grid_(std::move(target)) {
    if (branch.points.empty())
        throw invalid_parameter("BranchInterpolant: empty branch");

    SpectralData local =
        (spec.phi0.grid == grid_) ? spec : solve_ground(V, grid_);
    std::vector<double> vs = V.sample(*grid_);

    const std::size_t n = grid_->nodes.size();
    std::vector<std::vector<double>> profiles;  // per solved z, node values
    std::vector<double> omegas;
    knots_.clear();
    knots_.push_back(0.0);

    for (std::size_t j = 0; j < branch.points.size(); ++j) {
        RadialField seed = sample_onto(branch.points[j].phi, grid_);
        double omega_out = branch.points[j].omega;
        StationarySolve s = newton_ground_z(
            grid_, vs, local.phi0, branch.z_values[j], sigma, seed,
            branch.points[j].omega, omega_out, 40, 1e-12);
        if (!s.converged) break;
        knots_.push_back(branch.z_values[j]);
        std::vector<double> prof(n);
        for (std::size_t i = 0; i < n; ++i) prof[i] = s.phi.values[i].real();
        profiles.push_back(std::move(prof));
        omegas.push_back(omega_out);
        mass_ceiling_ = evaluate_functionals(s.phi, vs, vs, sigma).M;
    }
    if (profiles.empty())
        throw branch_anomaly("BranchInterpolant: no branch point re-solved");
    z_max_ = knots_.back();

    // per-node spline in z, anchored at Phi[0] = 0 with slope phi0
    node_splines_.reserve(n);
    std::vector<double> vals(knots_.size());
    for (std::size_t i = 0; i < n; ++i) {
        vals[0] = 0.0;
        for (std::size_t j = 0; j < profiles.size(); ++j)
            vals[j + 1] = profiles[j][i];
        node_splines_.emplace_back(knots_, vals, local.phi0.values[i].real());
    }
    std::vector<double> om(knots_.size());
    om[0] = -local.e0;
    for (std::size_t j = 0; j < omegas.size(); ++j) om[j + 1] = omegas[j];
    omega_spline_ = CubicSpline(knots_, om, 0.0);
}

double BranchInterpolant::omega(double s) const {
    if (s < 0.0 || s > z_max_)
        throw parameter_out_of_range("BranchInterpolant::omega: z out of range");
    return omega_spline_.eval(s);
}

void BranchInterpolant::eval_profile(double s, std::vector<double>& P,
                                     std::vector<double>& dP,
                                     std::vector<double>& d2P) const {
    const std::size_t n = node_splines_.size();
    P.resize(n);
    dP.resize(n);
    d2P.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        P[i] = node_splines_[i].eval(s);
        dP[i] = node_splines_[i].deriv(s);
        d2P[i] = node_splines_[i].deriv2(s);
    }
}

RadialField BranchInterpolant::Phi(cplx z) const {
    RadialField out(grid_);
    double s = std::abs(z);
    if (s == 0.0) return out;
    if (s > z_max_)
        throw parameter_out_of_range("BranchInterpolant::Phi: |z| out of range");
    cplx phase = z / s;
    std::vector<double> P, dP, d2P;
    eval_profile(s, P, dP, d2P);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = phase * P[i];
    return out;
}

void BranchInterpolant::dPhi(cplx z, RadialField& d1, RadialField& d2) const {
    double s = std::abs(z);
    if (s <= 0.0 || s > z_max_)
        throw parameter_out_of_range("BranchInterpolant::dPhi: |z| out of range");
    cplx phase = z / s;
    double z1 = z.real(), z2 = z.imag();
    double n1 = z1 / s, n2 = z2 / s;
    double t1 = -z2 / (s * s), t2 = z1 / (s * s);
    std::vector<double> P, dP, d2P;
    eval_profile(s, P, dP, d2P);
    d1 = RadialField(grid_);
    d2 = RadialField(grid_);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < P.size(); ++i) {
        d1.values[i] = phase * (dP[i] * n1 + I * P[i] * t1);
        d2.values[i] = phase * (dP[i] * n2 + I * P[i] * t2);
    }
}

void BranchInterpolant::d2Phi(cplx z, RadialField& d11, RadialField& d12,
                              RadialField& d22) const {
    double s = std::abs(z);
    if (s <= 0.0 || s > z_max_)
        throw parameter_out_of_range("BranchInterpolant::d2Phi: |z| out of range");
    cplx phase = z / s;
    double z1 = z.real(), z2 = z.imag();
    double s2 = s * s, s3 = s2 * s, s4 = s2 * s2;
    double n[2] = {z1 / s, z2 / s};
    double tau[2] = {-z2 / s2, z1 / s2};
    // dn[k][j] = d_k n_j ; dtau[k][j] = d_k tau_j
    double dn[2][2] = {{1.0 / s - z1 * z1 / s3, -z1 * z2 / s3},
                       {-z1 * z2 / s3, 1.0 / s - z2 * z2 / s3}};
    double dtau[2][2] = {{2 * z1 * z2 / s4, (z2 * z2 - z1 * z1) / s4},
                         {(z2 * z2 - z1 * z1) / s4, -2 * z1 * z2 / s4}};
    std::vector<double> P, dP, d2P;
    eval_profile(s, P, dP, d2P);
    const cplx I(0.0, 1.0);
    auto second = [&](int j, int k, std::size_t i) {
        cplx base = dP[i] * n[j] + I * P[i] * tau[j];
        return phase * (I * tau[k] * base + d2P[i] * n[k] * n[j] +
                        dP[i] * dn[k][j] + I * dP[i] * n[k] * tau[j] +
                        I * P[i] * dtau[k][j]);
    };
    d11 = RadialField(grid_);
    d12 = RadialField(grid_);
    d22 = RadialField(grid_);
    for (std::size_t i = 0; i < P.size(); ++i) {
        d11.values[i] = second(0, 0, i);
        d12.values[i] = second(0, 1, i);
        d22.values[i] = second(1, 1, i);
    }
}

ModulationFrame decompose(const RadialField& u, const SpectralData& spec,
                          const BranchInterpolant& branch, cplx z_guess,
                          double mu_p) {
    if (u.grid != branch.grid())
        throw shape_error("decompose: field grid differs from the branch grid");
    std::vector<double> a2(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a2[i] = std::norm(u.values[i]);
    double mass = 0.5 * integrate(*u.grid, a2);
    if (mass > mu_p)
        throw not_in_regime("decompose: mass above the modulation surrogate");

    ModulationFrame fr;
    cplx z = z_guess;
    double zmax = branch.z_max();
    auto clampz = [&](cplx w) {
        double s = std::abs(w);
        if (s < 1e-12 * zmax) return cplx(1e-12 * zmax, 0.0);
        if (s > 0.98 * zmax) return w * (0.98 * zmax / s);
        return w;
    };
    z = clampz(z);

    RadialField d1, d2, Phi, eta;
    double maxF = 1e300;
    bool converged = false;
    for (int it = 0; it < 20; ++it) {
        Phi = branch.Phi(z);
        branch.dPhi(z, d1, d2);
        eta = u - Phi;
        double F1 = symp(eta, d1), F2 = symp(eta, d2);
        maxF = std::max(std::abs(F1), std::abs(F2));
        double dscale = l2_norm(d1) + l2_norm(d2);
        double escale = l2_norm(eta) + 1e-3 * l2_norm(u) + 1e-30;
        if (maxF <= 1e-13 * dscale * escale + 1e-300) {
            converged = true;
            break;
        }
        RadialField d11, d12, d22;
        branch.d2Phi(z, d11, d12, d22);
        // J_jk = d F_j / d z_k = <i eta|d_k d_j Phi> - <i d_k Phi|d_j Phi>
        double J11 = symp(eta, d11) - symp(d1, d1);
        double J12 = symp(eta, d12) - symp(d2, d1);
        double J21 = symp(eta, d12) - symp(d1, d2);
        double J22 = symp(eta, d22) - symp(d2, d2);
        double det = J11 * J22 - J12 * J21;
        if (std::abs(det) < 1e-300) break;
        double dz1 = (J22 * F1 - J12 * F2) / det;
        double dz2 = (-J21 * F1 + J11 * F2) / det;
        cplx znew = clampz(z - cplx(dz1, dz2));
        if (std::abs(znew - z) < 1e-16 * (1.0 + std::abs(z))) {
            z = znew;
            converged = true;
            break;
        }
        z = znew;
    }
    // final orthogonality residual at the accepted z
    Phi = branch.Phi(z);
    branch.dPhi(z, d1, d2);
    eta = u - Phi;
    double F1 = symp(eta, d1), F2 = symp(eta, d2);
    fr.z = z;
    fr.eta = eta;
    fr.xi = project_continuous(eta, spec);
    fr.orth_residual = std::max(std::abs(F1), std::abs(F2));
    double floor = 1e-12 * (1.0 + h1_norm(u));
    fr.ok = converged && fr.orth_residual <= 1e-8 * h1_norm(eta) + floor;
    return fr;
}

cplx zdot_residual(const ModulationFrame& prev, const ModulationFrame& cur,
                   const ModulationFrame& next, double dt,
                   const BranchInterpolant& branch, int sigma) {
    if (!cur.ok)
        throw not_in_regime("zdot_residual: frame not in the modulation regime");
    if (std::abs(cur.z) == 0.0)
        throw not_in_regime("zdot_residual: z = 0 edge");
    cplx zdot = (next.z - prev.z) / (2.0 * dt);

    RadialField d1, d2, d11, d12, d22;
    branch.dPhi(cur.z, d1, d2);
    branch.d2Phi(cur.z, d11, d12, d22);
    const RadialField& eta = cur.eta;
    RadialField Phi = branch.Phi(cur.z);

    // A_jk = <i d_k Phi|d_j Phi> - <i eta|d_j d_k Phi>
    double A11 = symp(d1, d1) - symp(eta, d11);
    double A12 = symp(d2, d1) - symp(eta, d12);
    double A21 = symp(d1, d2) - symp(eta, d12);
    double A22 = symp(d2, d2) - symp(eta, d22);
    double det = A11 * A22 - A12 * A21;
    double scale = (l2_norm(d1) + l2_norm(d2));
    if (std::abs(det) < 1e-14 * scale * scale * scale * scale + 1e-300)
        throw degenerate_frame("zdot_residual: singular frame matrix");

    RadialField N(cur.eta.grid);
    for (std::size_t i = 0; i < N.size(); ++i) {
        cplx e = eta.values[i], p = Phi.values[i];
        N.values[i] = double(sigma) * (2.0 * p * std::norm(e) +
                                       std::conj(p) * e * e + std::norm(e) * e);
    }
    double b1 = inner_re(N, d1), b2 = inner_re(N, d2);
    double w1 = (A22 * b1 - A12 * b2) / det;
    double w2 = (-A21 * b1 + A11 * b2) / det;
    cplx Nbar(w1, w2);

    double Om = branch.omega(std::abs(cur.z));
    return (zdot + cplx(0.0, 1.0) * Om * cur.z) - Nbar;
}

VirialCutoff make_virial_cutoff(GridPtr grid, double R) {
    if (!(R > 0.0) || 2.0 * R > grid->r_max)
        throw invalid_parameter("make_virial_cutoff: need 0 < 2R <= r_max");
    VirialCutoff c;
    c.R = R;
    c.grid = grid;
    const auto& r = grid->nodes;
    const std::size_t n = r.size();
    c.f.resize(n);
    c.f0.resize(n);
    c.f1.resize(n);
    c.f2.resize(n);
    c.vfac.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double rho = r[i] / R;
        double fv = cut_f(rho), fp = cut_fp(rho);
        c.f[i] = fv;
        c.f0[i] = 1.0 - fp;
        c.f1[i] = 0.5 * cut_fppp(rho) + 2.0 * cut_fpp(rho) / rho;
        c.f2[i] = -1.5 + 0.5 * fp + fv / rho;
        c.vfac[i] = (rho <= 1.0) ? 0.0 : (1.0 - fv / rho);
        if (!(fp >= 0.0 && fp <= 1.0))
            throw invalid_parameter("make_virial_cutoff: profile not monotone");
    }
    return c;
}

double virial_pairing(const RadialField& u, const VirialCutoff& cutoff) {
    if (u.grid != cutoff.grid)
        throw shape_error("virial_pairing: cutoff built for another grid");
    RadialField du = radial_derivative(u);
    std::vector<double> s(u.size());
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        cplx a = cutoff.R * cutoff.f[i] * u.values[i];
        s[i] = std::real(a * std::conj(I * du.values[i]));
    }
    return integrate(*u.grid, s);
}

VirialSample virial_monitor(const RadialField& u_prev, const RadialField& u,
                            const RadialField& u_next,
                            const VirialCutoff& cutoff,
                            const std::vector<double>& rVr, int sigma,
                            double dt) {
    if (u.grid != cutoff.grid)
        throw shape_error("virial_monitor: cutoff grid mismatch");
    if (rVr.size() != u.size())
        throw shape_error("virial_monitor: potential derivative length");
    VirialSample out;
    out.lhs = (virial_pairing(u_next, cutoff) - virial_pairing(u_prev, cutoff)) /
              (2.0 * dt);

    RadialField du = radial_derivative(u);
    std::vector<double> bulk(u.size()), pot(u.size()), k2loc(u.size());
    const double R2 = cutoff.R * cutoff.R;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double a2 = std::norm(u.values[i]);
        double d2 = std::norm(du.values[i]);
        bulk[i] = 2.0 * d2 * cutoff.f0[i] + a2 * cutoff.f1[i] / R2 +
                  sigma * a2 * a2 * cutoff.f2[i];
        pot[i] = cutoff.vfac[i] * a2 * rVr[i];
        k2loc[i] = d2 - 0.5 * rVr[i] * a2 - sigma * 0.75 * a2 * a2;
    }
    double K2 = integrate(*u.grid, k2loc);
    out.rhs = 2.0 * K2 - integrate(*u.grid, bulk) - integrate(*u.grid, pot);
    return out;
}

double st_norm_accumulate(const std::vector<double>& times,
                          const std::vector<double>& l6_norms) {
    if (times.size() != l6_norms.size())
        throw shape_error("st_norm_accumulate: length mismatch");
    if (times.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        double a = std::pow(l6_norms[i - 1], 4), b = std::pow(l6_norms[i], 4);
        acc += 0.5 * (a + b) * (times[i] - times[i - 1]);
    }
    return std::pow(acc, 0.25);
}

} // namespace nlslab
