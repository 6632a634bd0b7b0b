#pragma once

// Potential representation, the standing assumptions on V, and the linear
// spectral data (e0, phi0, P_c) of H = -Delta + V.

#include <optional>
#include <string>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

enum class PotentialKind { gaussian_well, exponential_well, tabulated };

struct PotentialSpec {
    PotentialKind kind = PotentialKind::gaussian_well;
    double depth = 6.0;  // wells: V(r) = -depth * profile(r / width)
    double width = 1.0;
    // tabulated samples (radii/values); interpolated onto working grids
    std::vector<double> tab_r, tab_v;

    double value(double r) const;
    // r V_r and r^2 V_rr; analytic for the built-in wells, finite-difference
    // for tabulated input (reduced accuracy, flagged by callers)
    double rVr(double r) const;
    double r2Vrr(double r) const;
    bool analytic_derivatives() const { return kind != PotentialKind::tabulated; }

    std::vector<double> sample(const RadialGrid& g) const;
    std::vector<double> sample_rVr(const RadialGrid& g) const;
    std::vector<double> sample_r2Vrr(const RadialGrid& g) const;
};

struct AssumptionCheck {
    std::string name;
    bool checkable = true;
    bool pass = false;
    double value = 0.0;
    std::string note;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool hard_failure = false;
    std::string summary() const;
};

// decay of |V| + |r V_r| at R in {r_max/4, r_max/2}, integrability of V/r,
// radiality/realness by construction; wave-operator boundedness reported as
// not checkable
AssumptionReport check_assumptions(const PotentialSpec& V, const RadialGrid& g);

struct SpectralData {
    double e0 = 0.0;          // lowest eigenvalue, < 0 in the accepted regime
    RadialField phi0;         // positive, L2-normalized ground state
    int n_neg = 0;            // number of negative eigenvalues found
    double e1 = 0.0;          // second eigenvalue (diagnostic)
};

// lowest spectral data of H on the grid; throws no_bound_state /
// multiple_bound_states outside the single-eigenvalue regime
SpectralData solve_ground(const PotentialSpec& V, GridPtr grid);

// P_c f = f - phi0 (f|phi0)
RadialField project_continuous(const RadialField& f, const SpectralData& spec);

// w-space tridiagonal of H, symmetrized; used by solvers elsewhere
struct HMatrix {
    std::vector<double> diag;     // d_i  (includes V)
    std::vector<double> off;      // symmetrized off-diagonal, couples i,i+1
    std::vector<double> scale;    // similarity factors sqrt(cell)
};
HMatrix assemble_h_matrix(const RadialGrid& g, const std::vector<double>& V);

} // namespace nlslab
