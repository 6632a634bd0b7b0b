#pragma once

// Stationary states (H + omega) phi = sigma |phi|^2 phi on every branch the
// lab tracks: the V-free ground state Q, the small-mass ground branch
// Phi[z] with Omega[z], the defocusing branch phi_omega, and the focusing
// excited branch seeded by rescaled Q.

#include <string>
#include <vector>

#include "nlslab/functionals.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/spectral.hpp"

namespace nlslab {

struct SolitonBranchPoint {
    enum class Tag { ground, excited, defocusing, Q };
    double omega = 0.0;
    RadialField phi;          // real and positive on ground/defocusing/Q
    FunctionalReport report;
    double residual = 0.0;    // L2 norm of (H+omega)phi - sigma |phi|^2 phi
    Tag tag = Tag::ground;
};

struct GroundBranch {
    std::vector<double> z_values;       // gauge fixed z real > 0, increasing
    std::vector<SolitonBranchPoint> points;
    std::vector<double> gamma_norms;    // ||Phi[z] - z phi0||_H1
    std::vector<double> mass_curve;     // M(Phi[z])
    double e0 = 0.0;
    bool truncated = false;
    std::string truncation_reason;
};

struct DefocusingBranch {
    std::vector<double> omega_values;
    std::vector<SolitonBranchPoint> points;
};

// default solve grids; the h rules keep the Pohozaev defect of every
// returned point inside its invariant budget
GridPtr q_default_grid();
GridPtr ground_default_grid();
GridPtr excited_grid_for(double omega);

// V-free ground state of -DQ + Q = Q^3 by radial shooting plus a Newton
// polish of the discretized equation on the grid
SolitonBranchPoint solve_Q(GridPtr grid);

GroundBranch continue_ground(const SpectralData& spec, const PotentialSpec& V,
                             int sigma, std::vector<double> z_list);

DefocusingBranch continue_defocusing(const SpectralData& spec,
                                     const PotentialSpec& V,
                                     std::vector<double> omega_list);

SolitonBranchPoint solve_excited(const SpectralData& spec,
                                 const PotentialSpec& V, double omega,
                                 const DichotomyConstants* dich = nullptr);

// comparison constants from the two branch clusters (geometric midpoints)
DichotomyConstants calibrate_dichotomy(
    const GroundBranch& ground, const std::vector<SolitonBranchPoint>& excited);

// mass-parameterized energy levels E0(mu), E1(mu)
struct EnergyCurves {
    bool e1_infinite = false;  // defocusing marker
    double mu0_min = 0, mu0_max = 0;
    double mu1_min = 0, mu1_max = 0;
    std::vector<double> mu0, eps0;  // ground: (mass, energy), mass increasing
    std::vector<double> mu1, eps1;  // excited: (mass, energy), mass increasing

    double E0(double mu) const;
    double E1(double mu) const;  // +inf when e1_infinite
};

EnergyCurves energy_curves(const GroundBranch& ground,
                           const std::vector<SolitonBranchPoint>* excited,
                           bool defocusing);

struct KappaConfig {
    int n_samples = 48;
    unsigned long long seed = 20240901;
};

struct KappaEstimate {
    double kappa = 0.0;        // smallest |K2| found: an upper-bound estimate
    bool regime_violation = false;
    double mu = 0.0, delta = 0.0;
};

KappaEstimate estimate_kappa(const PotentialSpec& V, int sigma, double mu,
                             double delta, const KappaConfig& cfg,
                             const EnergyCurves& curves,
                             const std::vector<SolitonBranchPoint>& excited);

// internal stationary Newton, exposed for the modulation interpolant that
// re-solves branch points on a run grid
struct StationarySolve {
    bool converged = false;
    double residual = 0.0;
    RadialField phi;
};
StationarySolve newton_fixed_omega(GridPtr grid, const std::vector<double>& V,
                                   double omega, int sigma,
                                   const RadialField& seed, int max_iter = 40,
                                   double tol = 1e-12);
StationarySolve newton_ground_z(GridPtr grid, const std::vector<double>& V,
                                const RadialField& phi0, double z, int sigma,
                                const RadialField& seed_phi, double seed_omega,
                                double& omega_out, int max_iter = 40,
                                double tol = 1e-12);

} // namespace nlslab
