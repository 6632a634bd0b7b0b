#pragma once

// Time integration of i u_t + H u = sigma |u|^2 u by Crank-Nicolson with the
// midpoint nonlinearity, conservation monitoring, and the blow-up /
// scattering detectors.

#include <optional>
#include <string>

#include "nlslab/modulation.hpp"

namespace nlslab {

struct TimeConfig {
    double dt0 = 1e-3;       // initial step
    double dt_max = 0.0;     // supervised ceiling; 0 means dt0 (no growth)
    double dt_min = 4e-6;  // step collapse by ~256x flags the singularity
    double t_max = 50.0;
    double sample_dt = 0.05; // diagnostic sampling interval
    double window = 5.0;     // detector window length
    int fp_max_iter = 50;
    double fp_tol = 1e-12;
};

struct Thresholds {
    double gradient_gate = 1.0;  // the ||grad u(0)|| > 1 gate of the predictor
    double growth_factor = 20.0; // blow-up signature: gradnorm growth
    double drift_bound = 1e-4;   // conservation drift invalidation level
    double xi_decay_factor = 10.0;
    double st_increment = 0.01;
    double z_oscillation = 0.01;
};

struct EvolutionState {
    double t = 0.0;
    RadialField u;
    double dt = 0.0;         // controller step, within [dt_min, dt0]
    long step_count = 0;
    double M_drift = 0.0;    // |M(t)-M(0)| / M(0)
    double E_drift = 0.0;    // |E(t)-E(0)| / (|E(0)|+1)
    bool healthy = true;
    bool dt_at_min = false;
    int calm_steps = 0;
    double dt_cap = 0.0;     // current relax ceiling; 0 means tc.dt0
};

enum class Outcome { blow_up, scatter_to_ground, undecided };

struct RunVerdict {
    Outcome outcome = Outcome::undecided;
    double T_detect = 0.0;
    std::string evidence;
};

struct TrajectorySample {
    double t = 0, M = 0, E = 0, gradnorm = 0, L4norm = 0, K2 = 0;
    double virial_lhs = 0, virial_rhs = 0;
    double abs_z = 0, xi_L6 = 0, ST_accum = 0, dt = 0;
    bool frame_ok = false;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    RunVerdict verdict;
    bool invalidated = false;
    std::string invalid_reason;
    bool backward = false;

    static std::string csv_header();
    std::string csv() const;
};

// optional modulation diagnostics for a run
struct DiagnosticsContext {
    const SpectralData* spec = nullptr;          // on the run grid
    const BranchInterpolant* branch = nullptr;   // built for the run grid
    double mu_p = 0.0;                           // modulation mass surrogate
};

// one Crank-Nicolson step at st.dt (or less, to land on `t_stop`);
// returns false when the inner solves fail at dt_min (step-failure)
bool cn_step(EvolutionState& st, const std::vector<double>& V, int sigma,
             const TimeConfig& tc, double t_stop);

struct DetectorResult {
    bool fired = false;
    std::string evidence;
};

// gradient growth + step collapse + persistent K2 < 0 over the window
DetectorResult detect_blowup(const std::vector<TrajectorySample>& window,
                             int sigma, double grad0, bool dt_at_min,
                             const Thresholds& th);

// xi_L6 decay from its running peak, ST saturation, |z| convergence
DetectorResult detect_scattering(const std::vector<TrajectorySample>& window,
                                 double xi_l6_peak, const Thresholds& th);

TrajectoryRecord run_evolution(const RadialField& u0, const PotentialSpec& V,
                               int sigma, const TimeConfig& tc,
                               const Thresholds& th,
                               const DiagnosticsContext* diag = nullptr,
                               bool backward = false);

} // namespace nlslab
