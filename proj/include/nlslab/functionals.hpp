#pragma once

// Conserved / variational functionals, L^p-preserving dilations and their
// derivatives, and the small-mass dichotomy classifier.

#include <string>

#include "nlslab/grid.hpp"
#include "nlslab/spectral.hpp"

namespace nlslab {

struct FunctionalReport {
    double M = 0;     // ||phi||_2^2 / 2
    double E = 0;     // H0 + Vq - G
    double H0 = 0;    // ||grad phi||_2^2 / 2
    double G = 0;     // sigma ||phi||_4^4 / 4
    double Vq = 0;    // <V phi|phi> / 2
    double K2 = 0;    // 2 H0 - 3 G - Vs
    double I = 0;     // E - K2/2
    double E0 = 0;    // H0 - G
    double K2_0 = 0;  // 2 H0 - 3 G
    double Vs = 0;    // <(r V_r) phi|phi> / 2
    int sigma = +1;

    std::string csv_row() const;
    static std::string csv_header();  // M,E,H0,G,Vq,K2,I,E0,K2_0,sigma
};

FunctionalReport evaluate_functionals(const RadialField& phi,
                                      const std::vector<double>& V,
                                      const std::vector<double>& rVr,
                                      int sigma);
FunctionalReport evaluate_functionals(const RadialField& phi,
                                      const PotentialSpec& V, int sigma);

struct ScalingOp {
    double p = 2.0;  // L^p exponent preserved by the dilation
    double t = 0.0;
    double t_max = 5.0;
};

// S^t_p phi(x) = e^{3t/p} phi(e^t x), monotone-cubic resampling, zero past
// the wall; throws parameter_out_of_range for |t| > t_max
RadialField apply_scaling(const RadialField& phi, const ScalingOp& op);

enum class FunctionalTag { M, H0, G, V_quad, E, K2, I };

// d/dt F(S^t_p phi) at t = 0; closed-form multiples for M, H0, G, transformed
// potentials for the rest
double scaling_derivative(FunctionalTag tag, const RadialField& phi, double p,
                          const PotentialSpec& V, int sigma);

enum class DichotomyCase { small_i, intermediate_ii, large_iii };

// comparison constants calibrated from the solved branches (x = H0/M on the
// ground branch, y = H0*M on the excited branch); thresholds are geometric
// midpoints of the two clusters
struct DichotomyConstants {
    double x_ground_max = 0;
    double x_excited_min = 0;
    double y_ground_max = 0;
    double y_excited_min = 0;
    double theta_x = 0;
    double theta_y = 0;
    double mu_hat = 0;        // empirical small-mass surrogate
    double k2m_gate = 0.1;    // precondition K2 * M <= gate
    double g_ratio_min = 0.5; // case (iii) needs G >= ratio * H0
    double vdom_frac = 0.1;   // potential domination |Vq|+|Vs| < frac * H0
    std::string describe() const;
};

DichotomyCase dichotomy_classify(const FunctionalReport& rep,
                                 const DichotomyConstants& c);

// smallest C with |<V>(phi)| <= eps ||phi||_4^2 + C ||phi||_2^2 over the
// L^2 + L^inf splitting of V at level h, h found by bisection
double lemma_potential_constant(const std::vector<double>& V,
                                const RadialGrid& g, double eps);

} // namespace nlslab
