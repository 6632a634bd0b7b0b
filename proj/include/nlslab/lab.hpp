#pragma once

// Experiment driver: run configuration, the classification sweep that
// exercises the blow-up/scattering dichotomy, bifurcation-diagram emission,
// and the command-line interface.

#include <map>
#include <string>

#include "nlslab/evolution.hpp"

namespace nlslab {

struct RunConfig {
    PotentialSpec potential;   // defaults to the Gaussian well
    int sigma = +1;

    double r_max = 40.0;
    int n = 3200;
    double stretch = 1.0;

    TimeConfig time;
    Thresholds thresholds;

    // initial-datum recipe
    std::string data_kind = "gaussian";  // soliton | scaled_Q | gaussian | file
    double data_z = 0.1;        // soliton: ground-branch parameter
    double data_omega = 30.0;   // scaled_Q: excited anchor frequency
    double data_t = 0.0;        // scaled_Q: L2-scaling ladder parameter
    double data_amp = 0.05;
    double data_width = 2.0;
    double data_chirp = 0.0;
    std::string data_file;

    std::string out_dir = "out";
    unsigned long long seed = 20240901;

    // sweep controls
    int sweep_count = 40;
    double margin_frac = 0.05;  // energy-hypothesis margin below E1
    int workers = 0;            // 0: hardware concurrency

    // branch controls
    double branch_z_max = 2.6;
};

RunConfig load_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);
std::string config_text(const RunConfig& cfg);

// everything the sweep and the diagnostics need, built once per potential
struct LabContext {
    RunConfig cfg;
    SpectralData spec_fine;     // on the branch solve grid
    GroundBranch ground;
    std::vector<SolitonBranchPoint> excited;
    SolitonBranchPoint Q;
    EnergyCurves curves;        // focusing only
    DichotomyConstants dichotomy;
    bool focusing = true;
};

LabContext build_lab_context(const RunConfig& cfg);

struct ClassificationVerdict {
    int id = 0;
    std::string family;
    double M = 0, E = 0, K2 = 0, gradnorm = 0;
    bool predicted_blowup = false;
    Outcome observed_fwd = Outcome::undecided;
    Outcome observed_bwd = Outcome::undecided;
    bool decided = false;
    bool agree = false;
    bool excluded = false;
    std::string reason;
    std::string dichotomy;      // i / ii / iii / n-a
    std::string sensitivity;    // empty, or grid/gate flag for disagreements
    double H0 = 0;
    bool k2_persistent = true;  // K2 < 0 at every recorded sample (blow-up)
};

struct SweepSummary {
    std::vector<ClassificationVerdict> table;
    int decided = 0;
    int agreeing = 0;
    int undecided = 0;
    int excluded = 0;
    double agreement_rate = 1.0;
    std::string csv() const;
};

SweepSummary sweep_classification(const LabContext& ctx);

// writes ground.csv / excited.csv / defocusing.csv / curves.csv
void bifurcation_report(const LabContext& ctx, const std::string& dir);

int cli(int argc, char** argv);

} // namespace nlslab
