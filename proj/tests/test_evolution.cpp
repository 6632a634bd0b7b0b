#include "doctest.h"

#include <cmath>
#include <random>

#include "nlslab/evolution.hpp"
#include "test_util.hpp"

using namespace nlslab;

namespace {

PotentialSpec default_well() {
    PotentialSpec V;
    V.depth = 6.0;
    V.width = 1.0;
    return V;
}

GridPtr run_grid() {
    static GridPtr g = make_grid(40.0, 3200, 1.0);
    return g;
}

const SpectralData& run_spec() {
    static SpectralData sd = solve_ground(default_well(), run_grid());
    return sd;
}

const BranchInterpolant& branch_fixture() {
    static BranchInterpolant bi = [] {
        SpectralData sd = solve_ground(default_well(), ground_default_grid());
        std::vector<double> zs;
        for (double z = 0.05; z <= 1.01; z += 0.05) zs.push_back(z);
        GroundBranch br = continue_ground(sd, default_well(), +1, zs);
        return BranchInterpolant(br, run_spec(), default_well(), +1, run_grid());
    }();
    return bi;
}

RadialField evolve_plain(RadialField u0, int sigma, double T, double dt) {
    TimeConfig tc;
    tc.dt0 = dt;
    EvolutionState st;
    st.u = std::move(u0);
    st.dt = tc.dt0;
    std::vector<double> vs = default_well().sample(*st.u.grid);
    while (st.t < T - 1e-12) {
        bool ok = cn_step(st, vs, sigma, tc, T);
        REQUIRE(ok);
    }
    return st.u;
}

} // namespace

TEST_CASE("near-linear regime: mass and energy drift below 1e-8 over T=10") {
    RadialField u0 = testutil::gaussian_field(run_grid(), 0.005, 2.0);
    TimeConfig tc;
    tc.dt0 = 5e-4;
    tc.t_max = 10.0;
    Thresholds th;
    for (int sigma : {+1, -1}) {
        TrajectoryRecord rec =
            run_evolution(u0, default_well(), sigma, tc, th, nullptr);
        REQUIRE(!rec.invalidated);
        double M0 = rec.samples.front().M, E0 = rec.samples.front().E;
        for (const auto& s : rec.samples) {
            CHECK(std::abs(s.M - M0) / M0 <= 1e-8);
            CHECK(std::abs(s.E - E0) / (std::abs(E0) + 1) <= 1e-8);
        }
    }
}

TEST_CASE("ground soliton is an orbit: phase rotation to 1e-4 over T=5") {
    const BranchInterpolant& bi = branch_fixture();
    double z0 = 0.5;
    double Om = bi.omega(z0);
    RadialField u0 = bi.Phi(cplx(z0, 0.0));

    RadialField uT = evolve_plain(u0, +1, 5.0, 1e-3);
    RadialField ref = std::polar(1.0, -Om * 5.0) * u0;
    RadialField diff = uT - ref;
    CHECK(l2_norm(diff) <= 1e-4);
}

TEST_CASE("time reversal: conjugate evolution returns to the datum") {
    GridPtr g = run_grid();
    std::mt19937_64 rng(3);
    RadialField u0 = testutil::random_field(g, rng, true, 3.0);
    for (auto& v : u0.values) v *= 0.3;

    RadialField uT = evolve_plain(u0, +1, 1.0, 5e-4);
    RadialField back = evolve_plain(conj(uT), +1, 1.0, 5e-4);
    RadialField round = conj(back);
    RadialField diff = round - u0;
    CHECK(l2_norm(diff) <= 1e-6 * (1.0 + l2_norm(u0)));
}

TEST_CASE("dt halving activates when the fixed point stalls") {
    GridPtr g = run_grid();
    RadialField u0 = testutil::gaussian_field(g, 25.0, 0.5);
    TimeConfig tc;
    tc.dt0 = 5e-2;  // deliberately too large for |u|^2 dt
    EvolutionState st;
    st.u = u0;
    st.dt = tc.dt0;
    std::vector<double> vs = default_well().sample(*g);
    bool ok = cn_step(st, vs, +1, tc, 1.0);
    CHECK(ok);
    CHECK(st.dt < tc.dt0);
}

TEST_CASE("blow-up detector fires on a negative-virial concentrated datum") {
    // moderate-gradient datum with K2 < 0: the x20 growth signature is then
    // reachable on an affordable grid
    GridPtr g = make_grid(16.0, 43000, 1.0);
    RadialField u0 = testutil::gaussian_field(g, 11.8, 0.3);
    FunctionalReport rep0 = evaluate_functionals(u0, default_well().sample(*g),
                                                 default_well().sample_rVr(*g),
                                                 +1);
    REQUIRE(rep0.K2 < 0.0);
    REQUIRE(std::sqrt(2 * rep0.H0) > 1.0);

    TimeConfig tc;
    tc.dt0 = 2e-5;
    tc.dt_min = 1e-8;
    tc.t_max = 2.0;
    tc.sample_dt = 0.002;
    tc.window = 0.01;
    Thresholds th;
    TrajectoryRecord rec = run_evolution(u0, default_well(), +1, tc, th);
    CHECK(rec.verdict.outcome == Outcome::blow_up);
    CHECK(!rec.verdict.evidence.empty());
    // K2 stays negative on the whole recorded trajectory
    for (const auto& s : rec.samples) CHECK(s.K2 < 0.0);
}

TEST_CASE("defocusing runs never fire the blow-up detector") {
    GridPtr g = run_grid();
    RadialField u0 = testutil::gaussian_field(g, 1.2, 1.5);
    TimeConfig tc;
    tc.dt0 = 1e-3;
    tc.t_max = 8.0;
    Thresholds th;
    TrajectoryRecord rec = run_evolution(u0, default_well(), -1, tc, th);
    CHECK(rec.verdict.outcome != Outcome::blow_up);
}

TEST_CASE("small data around the ground state scatters") {
    GridPtr g = make_grid(80.0, 4000, 1.0);
    SpectralData sd = solve_ground(default_well(), g);
    SpectralData sd_fine = solve_ground(default_well(), ground_default_grid());
    std::vector<double> zs;
    for (double z = 0.05; z <= 1.01; z += 0.05) zs.push_back(z);
    GroundBranch br = continue_ground(sd_fine, default_well(), +1, zs);
    BranchInterpolant bi(br, sd, default_well(), +1, g);

    RadialField u0(g);
    for (std::size_t i = 0; i < u0.size(); ++i) {
        double r = g->nodes[i];
        u0.values[i] = 0.06 * sd.phi0.values[i] +
                       cplx(0.02, 0.015) * std::exp(-(r - 3.0) * (r - 3.0));
    }
    DiagnosticsContext diag;
    diag.spec = &sd;
    diag.branch = &bi;
    diag.mu_p = 0.8 * bi.mass_ceiling();

    TimeConfig tc;
    tc.dt0 = 2e-3;
    tc.t_max = 30.0;
    Thresholds th;
    TrajectoryRecord rec = run_evolution(u0, default_well(), +1, tc, th, &diag);
    CHECK(rec.verdict.outcome == Outcome::scatter_to_ground);
    CHECK(!rec.verdict.evidence.empty());
}

TEST_CASE("excited soliton sits on neither side within the horizon") {
    SpectralData sd_fine = solve_ground(default_well(), ground_default_grid());
    SolitonBranchPoint exc = solve_excited(sd_fine, default_well(), 30.0);
    GridPtr g = make_grid(30.0, 9000, 1.0);
    RadialField u0 = sample_onto(exc.phi, g);

    TimeConfig tc;
    tc.dt0 = 2e-4;
    tc.t_max = 4.0;
    tc.sample_dt = 0.02;
    Thresholds th;
    TrajectoryRecord rec = run_evolution(u0, default_well(), +1, tc, th);
    CHECK(rec.verdict.outcome == Outcome::undecided);
}

TEST_CASE("trajectory CSV schema") {
    CHECK(TrajectoryRecord::csv_header() ==
          "t,M,E,gradnorm,L4norm,K2,virial_lhs,virial_rhs,abs_z,xi_L6,"
          "ST_accum,dt");
    TrajectoryRecord rec;
    TrajectorySample s;
    s.t = 0.5;
    rec.samples.push_back(s);
    std::string csv = rec.csv();
    CHECK(csv.find("t,M,E") == 0);
    CHECK(csv.find("0.5,") != std::string::npos);
}
