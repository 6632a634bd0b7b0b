#pragma once

// The coordinate change u = Phi[z] + eta with the symplectic orthogonality
// <i eta | d_j Phi[z]> = 0, the radiation xi = P_c eta, the z-equation
// residual bookkeeping, and the saturated virial monitor.

#include <optional>

#include "nlslab/interp.hpp"
#include "nlslab/solitons.hpp"

namespace nlslab {

// branch differentiated through z: per-node C^2 splines of the gauge-fixed
// real profile P(s) = Phi[s], anchored at (0, 0) with dP/ds(0) = phi0
class BranchInterpolant {
  public:
    BranchInterpolant(const GroundBranch& branch, const SpectralData& spec,
                      const PotentialSpec& V, int sigma, GridPtr target);

    GridPtr grid() const { return grid_; }
    double z_max() const { return z_max_; }
    double mass_ceiling() const { return mass_ceiling_; }
    double omega(double s) const;

    RadialField Phi(cplx z) const;
    // d_j with respect to Re z, Im z
    void dPhi(cplx z, RadialField& d1, RadialField& d2) const;
    // second derivatives d_j d_k, symmetric in (j,k)
    void d2Phi(cplx z, RadialField& d11, RadialField& d12,
               RadialField& d22) const;

  private:
    void eval_profile(double s, std::vector<double>& P, std::vector<double>& dP,
                      std::vector<double>& d2P) const;

    GridPtr grid_;
    double z_max_ = 0.0;
    double mass_ceiling_ = 0.0;
    std::vector<double> knots_;
    std::vector<CubicSpline> node_splines_;  // one spline in z per node
    CubicSpline omega_spline_;
};

struct ModulationFrame {
    double t = 0.0;
    cplx z{0.0, 0.0};
    RadialField eta;            // u - Phi[z]
    RadialField xi;             // P_c eta
    double orth_residual = 0.0; // max_j |<i eta|d_j Phi[z]>|
    cplx zdot_estimate{0.0, 0.0};
    bool ok = false;
};

// Newton on the 2x2 orthogonality system; throws not_in_regime when the mass
// precondition fails and out_of-regime frames report ok = false
ModulationFrame decompose(const RadialField& u, const SpectralData& spec,
                          const BranchInterpolant& branch, cplx z_guess,
                          double mu_p);

// (z_dot_fd + i Omega[z] z) - A^{-1} <N(z,eta)|DPhi[z]> from three frames
cplx zdot_residual(const ModulationFrame& prev, const ModulationFrame& cur,
                   const ModulationFrame& next, double dt,
                   const BranchInterpolant& branch, int sigma);

struct VirialCutoff {
    double R = 0.0;             // saturation radius
    GridPtr grid;
    std::vector<double> f;      // f(r_i/R)
    std::vector<double> f0;     // 1 - f'
    std::vector<double> f1;     // Laplacian((d_r/2 + 1/r) f)
    std::vector<double> f2;     // -3/2 + f'/2 + f/rho
    std::vector<double> vfac;   // 1 - f(rho) R/r, exactly 0 for r < R
};

VirialCutoff make_virial_cutoff(GridPtr grid, double R);

// lhs: centered difference of <R f_R u | i u_r>
// rhs: 2 K2(u) - int[2|u_r|^2 f0 + R^-2 |u|^2 f1 + sigma |u|^4 f2] dx
//      - int (1 - f_R R/r) |u|^2 r V_r dx
struct VirialSample {
    double lhs = 0.0;
    double rhs = 0.0;
};
VirialSample virial_monitor(const RadialField& u_prev, const RadialField& u,
                            const RadialField& u_next,
                            const VirialCutoff& cutoff,
                            const std::vector<double>& rVr, int sigma,
                            double dt);

double virial_pairing(const RadialField& u, const VirialCutoff& cutoff);

// (int ||xi||_L6^4 dt)^(1/4) by the trapezoid rule over sample times
double st_norm_accumulate(const std::vector<double>& times,
                          const std::vector<double>& l6_norms);

} // namespace nlslab
