#include <filesystem>
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "nlslab/lab.hpp"

using namespace nlslab;

TEST_CASE("config file parsing and overrides") {
    const char* path = "lab_test_config.cfg";
    {
        std::ofstream os(path);
        os << "# comment line\n"
              "[model]\n"
              "sigma = -1\n"
              "[potential]\n"
              "kind = gaussian_well\n"
              "depth = 5.5\n"
              "width = 1.25\n"
              "[grid]\n"
              "r_max = 30\n"
              "n = 2000\n"
              "[time]\n"
              "dt0 = 2e-3\n"
              "t_max = 12\n"
              "[data]\n"
              "kind = gaussian\n"
              "amp = 0.07\n"
              "[outputs]\n"
              "dir = some_out\n"
              "seed = 99\n";
    }
    RunConfig cfg = load_config(path);
    CHECK(cfg.sigma == -1);
    CHECK(cfg.potential.depth == 5.5);
    CHECK(cfg.potential.width == 1.25);
    CHECK(cfg.r_max == 30.0);
    CHECK(cfg.n == 2000);
    CHECK(cfg.time.dt0 == 2e-3);
    CHECK(cfg.time.t_max == 12.0);
    CHECK(cfg.data_kind == "gaussian");
    CHECK(cfg.data_amp == 0.07);
    CHECK(cfg.out_dir == "some_out");
    CHECK(cfg.seed == 99);

    apply_override(cfg, "grid.n", "4000");
    CHECK(cfg.n == 4000);
    CHECK_THROWS_AS(apply_override(cfg, "grid.bogus", "1"), invalid_parameter);
    CHECK_THROWS_AS(load_config("definitely_missing.cfg"), invalid_parameter);
    std::remove(path);
}

TEST_CASE("cli exit codes: usage errors and check subcommand") {
    const char* a0 = "nlslab";
    {
        const char* argv[] = {a0, "bogus_subcommand"};
        CHECK(cli(2, const_cast<char**>(argv)) == 2);
    }
    {
        const char* argv[] = {a0, "evolve", "--config", "missing_file.cfg"};
        CHECK(cli(4, const_cast<char**>(argv)) == 2);
    }
    {
        // default well passes the whole self-test suite
        const char* argv[] = {a0, "check"};
        CHECK(cli(2, const_cast<char**>(argv)) == 0);
    }
}

namespace {
const LabContext& ctx_fixture() {
    static LabContext ctx = [] {
        RunConfig cfg;
        cfg.branch_z_max = 2.0;  // shortened branch, still overlapping masses
        return build_lab_context(cfg);
    }();
    return ctx;
}
} // namespace

TEST_CASE("lab context, energy curves wiring and dichotomy calibration") {
    const LabContext& ctx = ctx_fixture();
    CHECK(ctx.focusing);
    CHECK(ctx.spec_fine.e0 < 0.0);
    CHECK(ctx.ground.points.size() > 10);
    CHECK(ctx.excited.size() == 7);
    CHECK(ctx.dichotomy.mu_hat > 0.5);
    CHECK(ctx.Q.report.M > 9.0);
    double ref = ctx.Q.report.M * ctx.Q.report.E0;
    CHECK(ref > 80.0);
    CHECK(ref < 100.0);
}

TEST_CASE("bifurcation report emits the expected files") {
    const LabContext& ctx = ctx_fixture();
    bifurcation_report(ctx, "lab_test_report");
    std::ifstream g("lab_test_report/ground.csv"), e("lab_test_report/excited.csv"),
        c("lab_test_report/curves.csv");
    CHECK(g.good());
    CHECK(e.good());
    CHECK(c.good());
    std::string line;
    std::getline(g, line);  // comment
    std::getline(g, line);
    CHECK(line == "param,M,E,H0,G,K2,residual");
    // E0 column of curves is negative where defined
    std::getline(c, line);
    std::getline(c, line);
    int rows = 0;
    while (std::getline(c, line)) {
        double mu, e0v, e1v, mue1, ref;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg", &mu, &e0v, &e1v,
                        &mue1, &ref) == 5) {
            ++rows;
            if (std::isfinite(e0v)) CHECK(e0v < 0.0);
            CHECK(e1v > 0.0);
        }
    }
    CHECK(rows >= 5);
    std::filesystem::remove_all("lab_test_report");
}

