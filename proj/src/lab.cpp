#include "nlslab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "nlslab/interp.hpp"

namespace nlslab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::blow_up: return "blow_up";
        case Outcome::scatter_to_ground: return "scatter_to_ground";
        case Outcome::undecided: return "undecided";
    }
    return "?";
}

} // namespace

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
    auto d = [&] { return std::stod(value); };
    auto i = [&] { return std::stoi(value); };
    if (key == "model.sigma") cfg.sigma = (value == "-1" || value == "-") ? -1 : +1;
    else if (key == "potential.kind") {
        if (value == "gaussian_well") cfg.potential.kind = PotentialKind::gaussian_well;
        else if (value == "exponential_well") cfg.potential.kind = PotentialKind::exponential_well;
        else if (value == "tabulated") cfg.potential.kind = PotentialKind::tabulated;
        else throw invalid_parameter("config: unknown potential.kind " + value);
    }
    else if (key == "potential.depth") cfg.potential.depth = d();
    else if (key == "potential.width") cfg.potential.width = d();
    else if (key == "grid.r_max") cfg.r_max = d();
    else if (key == "grid.n") cfg.n = i();
    else if (key == "grid.stretch") cfg.stretch = d();
    else if (key == "time.dt0") cfg.time.dt0 = d();
    else if (key == "time.dt_min") cfg.time.dt_min = d();
    else if (key == "time.t_max") cfg.time.t_max = d();
    else if (key == "time.sample_dt") cfg.time.sample_dt = d();
    else if (key == "time.window") cfg.time.window = d();
    else if (key == "data.kind") cfg.data_kind = value;
    else if (key == "data.z") cfg.data_z = d();
    else if (key == "data.omega") cfg.data_omega = d();
    else if (key == "data.t") cfg.data_t = d();
    else if (key == "data.amp") cfg.data_amp = d();
    else if (key == "data.width") cfg.data_width = d();
    else if (key == "data.chirp") cfg.data_chirp = d();
    else if (key == "data.file") cfg.data_file = value;
    else if (key == "thresholds.gradient_gate") cfg.thresholds.gradient_gate = d();
    else if (key == "thresholds.growth_factor") cfg.thresholds.growth_factor = d();
    else if (key == "thresholds.drift_bound") cfg.thresholds.drift_bound = d();
    else if (key == "outputs.dir") cfg.out_dir = value;
    else if (key == "outputs.seed") cfg.seed = std::stoull(value);
    else if (key == "sweep.count") cfg.sweep_count = i();
    else if (key == "sweep.margin") cfg.margin_frac = d();
    else if (key == "sweep.workers") cfg.workers = i();
    else if (key == "branch.z_max") cfg.branch_z_max = d();
    else throw invalid_parameter("config: unknown key " + key);
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_parameter("config: cannot open " + path);
    RunConfig cfg;
    std::string line, section;
    while (std::getline(is, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw invalid_parameter("config: bad line '" + t + "'");
        std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
        if (val.empty()) continue;
        apply_override(cfg, section.empty() ? key : section + "." + key, val);
    }
    return cfg;
}

std::string config_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[model]\nsigma = " << cfg.sigma << "\n[potential]\nkind = "
       << (cfg.potential.kind == PotentialKind::gaussian_well
               ? "gaussian_well"
               : cfg.potential.kind == PotentialKind::exponential_well
                     ? "exponential_well"
                     : "tabulated")
       << "\ndepth = " << cfg.potential.depth
       << "\nwidth = " << cfg.potential.width << "\n[grid]\nr_max = "
       << cfg.r_max << "\nn = " << cfg.n << "\nstretch = " << cfg.stretch
       << "\n[outputs]\nseed = " << cfg.seed << "\n";
    return os.str();
}

LabContext build_lab_context(const RunConfig& cfg) {
    LabContext ctx;
    ctx.cfg = cfg;
    ctx.focusing = cfg.sigma > 0;
    GridPtr fine = ground_default_grid();
    ctx.spec_fine = solve_ground(cfg.potential, fine);

    std::vector<double> zs;
    for (double z = 0.02; z <= 0.201; z += 0.02) zs.push_back(z);
    for (double z = 0.3; z <= cfg.branch_z_max + 1e-9; z += 0.1) zs.push_back(z);
    ctx.ground = continue_ground(ctx.spec_fine, cfg.potential, cfg.sigma, zs);

    ctx.Q = solve_Q(q_default_grid());
    if (ctx.focusing) {
        for (double om : {10.0, 20.0, 30.0, 45.0, 65.0, 90.0, 130.0})
            ctx.excited.push_back(solve_excited(ctx.spec_fine, cfg.potential, om));
        ctx.curves = energy_curves(ctx.ground, &ctx.excited, false);
        ctx.dichotomy = calibrate_dichotomy(ctx.ground, ctx.excited);
    } else {
        ctx.curves = energy_curves(ctx.ground, nullptr, true);
        ctx.dichotomy = DichotomyConstants{};
        ctx.dichotomy.mu_hat = ctx.ground.mass_curve.back();
    }
    return ctx;
}

namespace {

struct SweepDatum {
    int id = 0;
    std::string family;
    RadialField u0;
    TimeConfig tc;
    Thresholds th;
    bool use_frames = false;
    int diag_index = -1;   // index into the shared diagnostics, -1 for none
};

struct SharedDiag {
    std::shared_ptr<SpectralData> spec;
    std::shared_ptr<BranchInterpolant> interp;
};

// energy-hypothesis floor E1(M) extended monotonically outside the solved
// mass range (E1 is decreasing in mass)
double e1_at(const LabContext& ctx, double M) {
    if (!ctx.focusing || ctx.curves.e1_infinite)
        return std::numeric_limits<double>::infinity();
    double m = std::clamp(M, ctx.curves.mu1_min, ctx.curves.mu1_max);
    return ctx.curves.E1(m);
}

std::vector<SweepDatum> make_sweep_data(const LabContext& ctx,
                                        std::vector<SharedDiag>& diags) {
    const RunConfig& cfg = ctx.cfg;
    const PotentialSpec& V = cfg.potential;
    std::vector<SweepDatum> data;

    if (!ctx.focusing) {
        // defocusing: random moderate data, all predicted global
        GridPtr g = make_grid(80.0, 4000, 1.0);
        auto spec = std::make_shared<SpectralData>(solve_ground(V, g));
        diags.push_back({spec, nullptr});
        std::size_t diag_id = diags.size() - 1;
        for (int i = 0; i < cfg.sweep_count; ++i) {
            std::mt19937_64 rng(cfg.seed + 1000 + i);
            std::uniform_real_distribution<double> ua(0.5, 1.3), uw(1.0, 2.0),
                uc(-0.3, 0.3);
            SweepDatum d;
            d.id = int(data.size());
            d.family = "defocusing_random";
            d.u0 = RadialField(g);
            double a = ua(rng), w = uw(rng), chirp = uc(rng);
            for (std::size_t k = 0; k < d.u0.size(); ++k) {
                double r = g->nodes[k];
                d.u0.values[k] = a * std::exp(-r * r / (w * w)) *
                                 std::polar(1.0, chirp * r * r);
            }
            d.tc = cfg.time;
            d.tc.dt0 = 5e-4;
            d.tc.dt_min = 1e-7;
            d.tc.t_max = 25.0;
            d.tc.sample_dt = 0.05;
            d.tc.window = 5.0;
            d.th = cfg.thresholds;
            d.diag_index = int(diag_id);
            data.push_back(std::move(d));
        }
        return data;
    }

    int n_collapse = std::max(1, int(0.35 * cfg.sweep_count));
    int n_ladder_s = std::max(1, int(0.15 * cfg.sweep_count));
    int n_ladder_c = std::max(1, int(0.05 * cfg.sweep_count));
    int n_small = cfg.sweep_count - n_collapse - n_ladder_s - n_ladder_c;

    GridPtr g_collapse = make_grid(16.0, 43000, 1.0);
    GridPtr g_scatter = make_grid(120.0, 8000, 1.0);
    GridPtr g_small = make_grid(80.0, 4000, 1.0);

    auto spec_small = std::make_shared<SpectralData>(solve_ground(V, g_small));
    auto interp_small = std::make_shared<BranchInterpolant>(
        ctx.ground, *spec_small, V, cfg.sigma, g_small);
    diags.push_back({spec_small, interp_small});
    std::size_t diag_small = diags.size() - 1;

    auto spec_scatter = std::make_shared<SpectralData>(solve_ground(V, g_scatter));
    diags.push_back({spec_scatter, nullptr});
    std::size_t diag_scatter = diags.size() - 1;

    // the scaling ladder around the excited soliton supplies both sides of
    // the dichotomy: K2 changes sign across t = 0, and E(S^t) drops below
    // E1 on both sides, exactly the theorem's regime
    const SolitonBranchPoint* anchor_s = &ctx.excited.front();
    const SolitonBranchPoint* anchor_c = anchor_s;
    for (const auto& p : ctx.excited) {
        if (std::abs(p.omega - 20.0) < 1e-9) anchor_s = &p;
        if (std::abs(p.omega - 30.0) < 1e-9) anchor_c = &p;
    }
    RadialField phi_s = sample_onto(anchor_s->phi, g_scatter);
    RadialField phi_c = sample_onto(anchor_c->phi, g_collapse);

    // blow-up side: moderate kicks ride to the x20 gradient signature on an
    // affordable grid
    for (int i = 0; i < n_collapse; ++i) {
        std::mt19937_64 rng(cfg.seed + i);
        std::uniform_real_distribution<double> ut(0.22, 0.32);
        double t = ut(rng);
        SweepDatum d;
        d.id = int(data.size());
        d.family = "ladder_collapse";
        d.u0 = apply_scaling(phi_c, ScalingOp{2.0, t});
        d.tc = cfg.time;
        d.tc.dt0 = 1e-5;
        d.tc.dt_min = 1e-8;
        d.tc.t_max = 2.0;
        d.tc.sample_dt = 0.002;
        d.tc.window = 0.01;
        d.th = cfg.thresholds;
        d.diag_index = -1;  // no frames during collapse runs
        data.push_back(std::move(d));
    }
    for (int i = 0; i < n_ladder_s; ++i) {
        double t = -0.45 + 0.3 * i / std::max(1, n_ladder_s - 1);
        SweepDatum d;
        d.id = int(data.size());
        d.family = "ladder_scatter";
        d.u0 = apply_scaling(phi_s, ScalingOp{2.0, t});
        d.tc = cfg.time;
        d.tc.dt0 = 3e-5;
        d.tc.dt_max = 4e-3;
        d.tc.dt_min = 1e-7;
        d.tc.t_max = 15.0;
        d.tc.sample_dt = 0.05;
        d.tc.window = 3.0;
        d.th = cfg.thresholds;
        d.diag_index = int(diag_scatter);
        data.push_back(std::move(d));
    }
    for (int i = 0; i < n_ladder_c; ++i) {
        double t = 0.50 + 0.10 * i;
        SweepDatum d;
        d.id = int(data.size());
        d.family = "ladder_collapse_hard";
        d.u0 = apply_scaling(phi_c, ScalingOp{2.0, t});
        d.tc = cfg.time;
        d.tc.dt0 = 2e-6;
        d.tc.dt_min = 1e-8;
        d.tc.t_max = 0.2;
        d.tc.sample_dt = 5e-4;
        d.tc.window = 2.5e-3;
        d.th = cfg.thresholds;
        d.diag_index = -1;
        data.push_back(std::move(d));
    }

    // small data around the ground state (predicted global / scattering)
    for (int i = 0; i < n_small; ++i) {
        std::mt19937_64 rng(cfg.seed + 500 + i);
        std::uniform_real_distribution<double> uc(0.02, 0.08), ub(0.005, 0.03),
            up(-3.0, 3.0), ur(2.0, 5.0);
        SweepDatum d;
        d.id = int(data.size());
        d.family = "small_data";
        d.u0 = RadialField(g_small);
        double c = uc(rng), b = ub(rng), ph = up(rng), r0 = ur(rng);
        for (std::size_t k = 0; k < d.u0.size(); ++k) {
            double r = g_small->nodes[k];
            d.u0.values[k] =
                c * spec_small->phi0.values[k] +
                std::polar(b, ph) * std::exp(-(r - r0) * (r - r0));
        }
        d.tc = cfg.time;
        d.tc.dt0 = 1e-3;
        d.tc.dt_min = 1e-6;
        d.tc.t_max = 30.0;
        d.tc.sample_dt = 0.05;
        d.tc.window = 5.0;
        d.th = cfg.thresholds;
        d.use_frames = true;
        d.diag_index = int(diag_small);
        data.push_back(std::move(d));
    }
    return data;
}

bool field_is_real(const RadialField& f) {
    double mx = 0, mi = 0;
    for (const auto& v : f.values) {
        mx = std::max(mx, std::abs(v.real()));
        mi = std::max(mi, std::abs(v.imag()));
    }
    return mi <= 1e-14 * (mx + 1e-300);
}

ClassificationVerdict run_one(const LabContext& ctx, const SweepDatum& d,
                              const std::vector<SharedDiag>& diags) {
    const PotentialSpec& V = ctx.cfg.potential;
    ClassificationVerdict v;
    v.id = d.id;
    v.family = d.family;

    std::vector<double> vs = V.sample(*d.u0.grid), rvr = V.sample_rVr(*d.u0.grid);
    FunctionalReport rep = evaluate_functionals(d.u0, vs, rvr, ctx.cfg.sigma);
    v.M = rep.M;
    v.E = rep.E;
    v.K2 = rep.K2;
    v.H0 = rep.H0;
    v.gradnorm = std::sqrt(std::max(0.0, 2 * rep.H0));
    v.predicted_blowup = ctx.cfg.sigma > 0 &&
                         v.gradnorm > d.th.gradient_gate && rep.K2 < 0;

    // hypothesis pre-checks: mass below the surrogate, energy below E1
    if (v.M > ctx.dichotomy.mu_hat && ctx.focusing) {
        v.excluded = true;
        v.reason = "mass above the calibrated surrogate";
        return v;
    }
    double e1 = e1_at(ctx, v.M);
    if (std::isfinite(e1) && !(v.E <= e1 * (1.0 - ctx.cfg.margin_frac))) {
        v.excluded = true;
        v.reason = "energy hypothesis violated (E too close to E1)";
        return v;
    }

    try {
        DichotomyCase c = dichotomy_classify(rep, ctx.dichotomy);
        v.dichotomy = c == DichotomyCase::small_i
                          ? "i"
                          : (c == DichotomyCase::intermediate_ii ? "ii" : "iii");
    } catch (const domain_error&) {
        v.dichotomy = "n/a";
    }

    DiagnosticsContext diag;
    const DiagnosticsContext* dptr = nullptr;
    if (d.diag_index >= 0 && std::size_t(d.diag_index) < diags.size()) {
        const SharedDiag& sd = diags[std::size_t(d.diag_index)];
        diag.spec = sd.spec.get();
        diag.branch = sd.interp.get();
        diag.mu_p = sd.interp ? 0.9 * sd.interp->mass_ceiling() : 0.0;
        dptr = &diag;
    }

    TrajectoryRecord fwd =
        run_evolution(d.u0, V, ctx.cfg.sigma, d.tc, d.th, dptr, false);
    v.observed_fwd = fwd.verdict.outcome;
    bool real_datum = field_is_real(d.u0);
    TrajectoryRecord bwd;
    if (real_datum) {
        v.observed_bwd = v.observed_fwd;  // conjugation fixes real data
    } else {
        bwd = run_evolution(d.u0, V, ctx.cfg.sigma, d.tc, d.th, dptr, true);
        v.observed_bwd = bwd.verdict.outcome;
    }

    // persistence of the blow-up criterion along recorded samples
    if (v.observed_fwd == Outcome::blow_up) {
        bool armed = false;
        for (const auto& s : fwd.samples) {
            bool crit = s.gradnorm > d.th.gradient_gate && s.K2 < 0;
            if (armed && !crit) v.k2_persistent = false;
            if (crit) armed = true;
        }
    }

    v.decided = v.observed_fwd != Outcome::undecided &&
                v.observed_bwd != Outcome::undecided;
    if (v.decided) {
        bool fwd_blow = v.observed_fwd == Outcome::blow_up;
        bool bwd_blow = v.observed_bwd == Outcome::blow_up;
        v.agree = (fwd_blow == v.predicted_blowup) &&
                  (bwd_blow == v.predicted_blowup);
    }
    if (!v.decided) {
        v.reason = fwd.verdict.evidence;
    }

    // disagreements carry a sensitivity flag
    if (v.decided && !v.agree) {
        GridPtr big = make_grid(d.u0.grid->r_max * 1.5,
                                int(d.u0.grid->n * 1.5), d.u0.grid->stretch);
        RadialField u_big = sample_onto(d.u0, big);
        TrajectoryRecord re =
            run_evolution(u_big, V, ctx.cfg.sigma, d.tc, d.th, nullptr, false);
        if (re.verdict.outcome != v.observed_fwd) {
            v.sensitivity = "grid";
        } else {
            bool flip_lo = (ctx.cfg.sigma > 0 &&
                            v.gradnorm > 0.5 * d.th.gradient_gate && v.K2 < 0) !=
                           v.predicted_blowup;
            bool flip_hi = (ctx.cfg.sigma > 0 &&
                            v.gradnorm > 2.0 * d.th.gradient_gate && v.K2 < 0) !=
                           v.predicted_blowup;
            v.sensitivity = (flip_lo || flip_hi) ? "gate" : "robust";
        }
    }
    return v;
}

} // namespace

std::string SweepSummary::csv() const {
    std::string out =
        "id,family,M,E,K2,gradnorm,predicted,observed_fwd,observed_bwd,"
        "decided,agree,excluded,dichotomy,sensitivity,reason\n";
    char buf[256];
    for (const auto& v : table) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,", v.id,
                      v.family.c_str(), v.M, v.E, v.K2, v.gradnorm);
        out += buf;
        out += v.predicted_blowup ? "blow_up," : "global,";
        out += std::string(outcome_name(v.observed_fwd)) + ",";
        out += std::string(outcome_name(v.observed_bwd)) + ",";
        out += (v.decided ? "1," : "0,");
        out += (v.agree ? "1," : "0,");
        out += (v.excluded ? "1," : "0,");
        out += v.dichotomy + "," + v.sensitivity + ",";
        std::string r = v.reason;
        for (auto& ch : r)
            if (ch == ',' || ch == '\n') ch = ';';
        out += r + "\n";
    }
    return out;
}

SweepSummary sweep_classification(const LabContext& ctx) {
    std::vector<SharedDiag> diags;
    std::vector<SweepDatum> data = make_sweep_data(ctx, diags);

    SweepSummary sum;
    sum.table.resize(data.size());

    unsigned workers = ctx.cfg.workers > 0
                           ? unsigned(ctx.cfg.workers)
                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, data.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= data.size()) break;
            sum.table[i] = run_one(ctx, data[i], diags);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 0; k + 1 < workers; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& v : sum.table) {
        if (v.excluded) {
            ++sum.excluded;
            continue;
        }
        if (!v.decided) {
            ++sum.undecided;
            continue;
        }
        ++sum.decided;
        if (v.agree) ++sum.agreeing;
    }
    sum.agreement_rate =
        sum.decided ? double(sum.agreeing) / sum.decided : 1.0;
    return sum;
}

void bifurcation_report(const LabContext& ctx, const std::string& dir) {
    std::filesystem::create_directories(dir);
    char buf[256];
    auto branch_csv = [&](const std::string& path,
                          const std::vector<double>& params,
                          const std::vector<SolitonBranchPoint>& pts,
                          const char* pname) {
        std::ofstream os(path);
        os << "# param column: " << pname << "\n";
        os << "param,M,E,H0,G,K2,residual\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& r = pts[i].report;
            std::snprintf(buf, sizeof buf,
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          params[i], r.M, r.E, r.H0, r.G, r.K2,
                          pts[i].residual);
            os << buf;
        }
    };

    branch_csv(dir + "/ground.csv", ctx.ground.z_values, ctx.ground.points, "z");

    if (ctx.focusing) {
        std::vector<double> oms;
        for (const auto& p : ctx.excited) oms.push_back(p.omega);
        branch_csv(dir + "/excited.csv", oms, ctx.excited, "omega");

        double ref = ctx.Q.report.M * ctx.Q.report.E0;
        std::ofstream os(dir + "/curves.csv");
        os << "# reference M(Q) E0(Q) = ";
        std::snprintf(buf, sizeof buf, "%.17g\n", ref);
        os << buf << "mu,E0,E1,mu_E1,reference\n";
        for (const auto& p : ctx.excited) {
            double mu = p.report.M;
            double e0v = (mu >= ctx.curves.mu0_min && mu <= ctx.curves.mu0_max)
                             ? ctx.curves.E0(mu)
                             : std::nan("");
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          mu, e0v, p.report.E, mu * p.report.E, ref);
            os << buf;
        }
    } else {
        // defocusing branch table on a geometric omega grid
        double e0 = ctx.spec_fine.e0;
        std::vector<double> oms;
        for (int k = 0; k < 20; ++k)
            oms.push_back(0.1 * (-e0) * std::pow(9.5, k / 19.0));
        DefocusingBranch db =
            continue_defocusing(ctx.spec_fine, ctx.cfg.potential, oms);
        branch_csv(dir + "/defocusing.csv", db.omega_values, db.points, "omega");
    }
}

namespace {

RadialField datum_from_recipe(const RunConfig& cfg, const LabContext* ctx,
                              GridPtr grid) {
    if (cfg.data_kind == "gaussian") {
        RadialField u(grid);
        for (std::size_t i = 0; i < u.size(); ++i) {
            double r = grid->nodes[i];
            u.values[i] = cfg.data_amp *
                          std::exp(-r * r / (cfg.data_width * cfg.data_width)) *
                          std::polar(1.0, cfg.data_chirp * r * r);
        }
        return u;
    }
    if (cfg.data_kind == "file") {
        RadialField f = load_field(cfg.data_file);
        return sample_onto(f, grid);
    }
    if (!ctx)
        throw invalid_parameter("datum recipe '" + cfg.data_kind +
                                "' needs the solved branches");
    if (cfg.data_kind == "soliton") {
        SpectralData sd = solve_ground(cfg.potential, grid);
        BranchInterpolant bi(ctx->ground, sd, cfg.potential, cfg.sigma, grid);
        return bi.Phi(cplx(cfg.data_z, 0.0));
    }
    if (cfg.data_kind == "scaled_Q") {
        SolitonBranchPoint exc =
            solve_excited(ctx->spec_fine, cfg.potential, cfg.data_omega);
        RadialField phi = sample_onto(exc.phi, grid);
        return apply_scaling(phi, ScalingOp{2.0, cfg.data_t});
    }
    throw invalid_parameter("unknown data.kind " + cfg.data_kind);
}

int cmd_spectrum(const RunConfig& cfg) {
    GridPtr g = make_grid(cfg.r_max, cfg.n, cfg.stretch);
    AssumptionReport rep = check_assumptions(cfg.potential, *g);
    std::printf("%s", rep.summary().c_str());
    if (rep.hard_failure) {
        std::printf("assumption check failed; potential rejected\n");
        return 1;
    }
    SpectralData sd = solve_ground(cfg.potential, g);
    std::printf("e0 = %.12g\nn_neg = %d\ne1 = %.12g\n", sd.e0, sd.n_neg, sd.e1);
    std::filesystem::create_directories(cfg.out_dir);
    save_field(sd.phi0, cfg.out_dir + "/phi0.txt");
    std::printf("phi0 written to %s/phi0.txt\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_branch(const RunConfig& cfg, const std::string& which) {
    LabContext ctx = build_lab_context(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    char buf[256];
    if (which == "ground") {
        std::ofstream os(cfg.out_dir + "/ground.csv");
        os << "param,M,E,H0,G,K2,residual\n";
        for (std::size_t i = 0; i < ctx.ground.points.size(); ++i) {
            const auto& r = ctx.ground.points[i].report;
            std::snprintf(buf, sizeof buf,
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          ctx.ground.z_values[i], r.M, r.E, r.H0, r.G, r.K2,
                          ctx.ground.points[i].residual);
            os << buf;
        }
        std::printf("ground branch: %zu points, e0 = %.8g%s\n",
                    ctx.ground.points.size(), ctx.spec_fine.e0,
                    ctx.ground.truncated ? " (truncated)" : "");
        return 0;
    }
    if (which == "excited") {
        if (!ctx.focusing) {
            std::printf("excited branch requires sigma = +1\n");
            return 1;
        }
        std::ofstream os(cfg.out_dir + "/excited.csv");
        os << "param,M,E,H0,G,K2,residual\n";
        for (const auto& p : ctx.excited) {
            const auto& r = p.report;
            std::snprintf(buf, sizeof buf,
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          p.omega, r.M, r.E, r.H0, r.G, r.K2, p.residual);
            os << buf;
        }
        std::printf("excited branch: %zu points\n", ctx.excited.size());
        return 0;
    }
    if (which == "defocusing") {
        double e0 = ctx.spec_fine.e0;
        std::vector<double> oms;
        for (int k = 0; k < 20; ++k)
            oms.push_back(0.1 * (-e0) * std::pow(9.5, k / 19.0));
        DefocusingBranch db = continue_defocusing(ctx.spec_fine, cfg.potential, oms);
        std::ofstream os(cfg.out_dir + "/defocusing.csv");
        os << "param,M,E,H0,G,K2,residual\n";
        for (std::size_t i = 0; i < db.points.size(); ++i) {
            const auto& r = db.points[i].report;
            std::snprintf(buf, sizeof buf,
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          db.omega_values[i], r.M, r.E, r.H0, r.G, r.K2,
                          db.points[i].residual);
            os << buf;
        }
        std::printf("defocusing branch: %zu points\n", db.points.size());
        return 0;
    }
    std::printf("unknown branch '%s'\n", which.c_str());
    return 2;
}

int cmd_evolve(const RunConfig& cfg, bool sensitivity) {
    GridPtr g = make_grid(cfg.r_max, cfg.n, cfg.stretch);
    LabContext ctx;
    bool have_ctx = false;
    if (cfg.data_kind == "soliton" || cfg.data_kind == "scaled_Q") {
        ctx = build_lab_context(cfg);
        have_ctx = true;
    }
    RadialField u0 = datum_from_recipe(cfg, have_ctx ? &ctx : nullptr, g);

    DiagnosticsContext diag;
    SpectralData sd = solve_ground(cfg.potential, g);
    diag.spec = &sd;
    std::shared_ptr<BranchInterpolant> bi;
    if (cfg.sigma > 0) {
        if (!have_ctx) {
            ctx = build_lab_context(cfg);
            have_ctx = true;
        }
        bi = std::make_shared<BranchInterpolant>(ctx.ground, sd, cfg.potential,
                                                 cfg.sigma, g);
        diag.branch = bi.get();
        diag.mu_p = 0.9 * bi->mass_ceiling();
    }

    TrajectoryRecord rec =
        run_evolution(u0, cfg.potential, cfg.sigma, cfg.time, cfg.thresholds,
                      &diag, false);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/trajectory.csv");
    os << "# " << config_text(cfg);
    os << rec.csv();
    std::printf("verdict: %s\n", outcome_name(rec.verdict.outcome));
    if (!rec.verdict.evidence.empty())
        std::printf("evidence: %s\n", rec.verdict.evidence.c_str());
    if (rec.invalidated)
        std::printf("invalidated: %s\n", rec.invalid_reason.c_str());
    std::printf("trajectory written to %s/trajectory.csv (%zu samples)\n",
                cfg.out_dir.c_str(), rec.samples.size());

    if (sensitivity) {
        GridPtr big = make_grid(1.5 * cfg.r_max, int(1.5 * cfg.n), cfg.stretch);
        RadialField ub = sample_onto(u0, big);
        TrajectoryRecord re = run_evolution(ub, cfg.potential, cfg.sigma,
                                            cfg.time, cfg.thresholds, nullptr,
                                            false);
        bool same = re.verdict.outcome == rec.verdict.outcome;
        std::printf("sensitivity (1.5x r_max): verdict %s -> %s\n",
                    same ? "unchanged" : "CHANGED",
                    outcome_name(re.verdict.outcome));
    }
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    LabContext ctx = build_lab_context(cfg);
    SweepSummary sum = sweep_classification(ctx);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/sweep.csv");
    os << "# " << ctx.dichotomy.describe() << "\n";
    os << "# seed=" << cfg.seed << "\n";
    os << sum.csv();
    std::printf("sweep: %zu data, decided %d, agreeing %d (rate %.3f), "
                "undecided %d, excluded %d\n",
                sum.table.size(), sum.decided, sum.agreeing,
                sum.agreement_rate, sum.undecided, sum.excluded);
    std::printf("table written to %s/sweep.csv\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_report(const RunConfig& cfg) {
    LabContext ctx = build_lab_context(cfg);
    bifurcation_report(ctx, cfg.out_dir);
    std::printf("bifurcation files written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_check(const RunConfig& cfg) {
    int fails = 0;
    auto verdict = [&](const char* name, bool ok) {
        std::printf("%-46s %s\n", name, ok ? "pass" : "FAIL");
        if (!ok) ++fails;
    };

    GridPtr g = make_grid(cfg.r_max, std::max(cfg.n, 1000), 1.0);
    std::vector<double> ones(g->nodes.size(), 1.0);
    double vol = integrate(*g, ones);
    double ref = 4.0 * M_PI * std::pow(cfg.r_max, 3) / 3.0;
    verdict("quadrature volume exactness", std::abs(vol - ref) < 1e-9 * ref);

    AssumptionReport arep = check_assumptions(cfg.potential, *g);
    verdict("potential assumptions", !arep.hard_failure);

    SpectralData sd = solve_ground(cfg.potential, g);
    verdict("single negative eigenvalue", sd.n_neg == 1 && sd.e0 < 0);
    verdict("phi0 normalized", std::abs(l2_norm(sd.phi0) - 1.0) < 1e-10);
    std::vector<double> vs = cfg.potential.sample(*g);
    double rq = inner_re(apply_H(sd.phi0, vs), sd.phi0);
    verdict("Rayleigh quotient", std::abs(rq - sd.e0) < 1e-8 * std::abs(sd.e0));

    RadialField pp = project_continuous(sd.phi0, sd);
    verdict("projection kills phi0", l2_norm(pp) < 1e-10);

    RadialField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double r = g->nodes[i];
        f.values[i] = 0.8 * std::exp(-r * r / 4.0);
    }
    FunctionalReport rep = evaluate_functionals(f, cfg.potential, cfg.sigma);
    verdict("E = H0 + Vq - G",
            std::abs(rep.E - (rep.H0 + rep.Vq - rep.G)) <
                1e-10 * (std::abs(rep.E) + 1));
    verdict("I = E - K2/2", std::abs(rep.I - (rep.E - rep.K2 / 2)) <
                                1e-10 * (std::abs(rep.I) + 1));
    double t = 1e-3;
    auto E_at = [&](double tt) {
        return evaluate_functionals(apply_scaling(f, ScalingOp{2.0, tt}),
                                    cfg.potential, cfg.sigma)
            .E;
    };
    double fd = (E_at(t) - E_at(-t)) / (2 * t);
    verdict("K2 = dE/dt along S^t_2",
            std::abs(fd - rep.K2) < 1e-3 * (std::abs(rep.K2) + 1e-6));

    VirialCutoff cut = make_virial_cutoff(g, g->r_max / 3.0);
    bool cut_ok = true;
    for (std::size_t i = 0; i < g->nodes.size(); ++i) {
        if (cut.f0[i] < 0) cut_ok = false;
        if (g->nodes[i] <= cut.R && cut.f2[i] != 0.0) cut_ok = false;
    }
    verdict("virial cutoff profiles", cut_ok);

    return fails == 0 ? 0 : 1;
}

} // namespace

int cli(int argc, char** argv) {
    CLI::App app{"radial NLS-with-potential dynamics laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--set", overrides, "override config entries (section.key=value)");

    std::string branch_which = "ground";
    bool evolve_sensitivity = false;
    std::string data_kind, data_file;
    double opt_z = std::nan(""), opt_t = std::nan(""), opt_omega = std::nan("");
    double opt_amp = std::nan(""), opt_width = std::nan("");

    auto* c_spec = app.add_subcommand("spectrum", "linear spectral data of H");
    auto* c_branch = app.add_subcommand("branch", "soliton branch continuation");
    c_branch->add_option("--which", branch_which,
                         "ground | excited | defocusing");
    auto* c_evolve = app.add_subcommand("evolve", "single evolution run");
    c_evolve->add_option("--data", data_kind, "datum recipe");
    c_evolve->add_option("--z", opt_z, "ground-branch parameter");
    c_evolve->add_option("--t", opt_t, "scaling-ladder parameter");
    c_evolve->add_option("--omega", opt_omega, "excited anchor frequency");
    c_evolve->add_option("--amp", opt_amp, "gaussian amplitude");
    c_evolve->add_option("--width", opt_width, "gaussian width");
    c_evolve->add_option("--file", data_file, "field file for data=file");
    c_evolve->add_flag("--sensitivity", evolve_sensitivity,
                       "re-run at 1.5x r_max and compare verdicts");
    auto* c_sweep = app.add_subcommand("sweep", "classification sweep");
    auto* c_report = app.add_subcommand("report", "bifurcation report files");
    auto* c_check = app.add_subcommand("check", "invariant self-tests");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const auto& kv : overrides) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw invalid_parameter("--set expects key=value");
            apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!data_kind.empty()) cfg.data_kind = data_kind;
        if (!data_file.empty()) cfg.data_file = data_file;
        if (!std::isnan(opt_z)) cfg.data_z = opt_z;
        if (!std::isnan(opt_t)) cfg.data_t = opt_t;
        if (!std::isnan(opt_omega)) cfg.data_omega = opt_omega;
        if (!std::isnan(opt_amp)) cfg.data_amp = opt_amp;
        if (!std::isnan(opt_width)) cfg.data_width = opt_width;
        if (const char* env = std::getenv("NLSLAB_OUTDIR")) cfg.out_dir = env;

        if (c_spec->parsed()) return cmd_spectrum(cfg);
        if (c_branch->parsed()) return cmd_branch(cfg, branch_which);
        if (c_evolve->parsed()) return cmd_evolve(cfg, evolve_sensitivity);
        if (c_sweep->parsed()) return cmd_sweep(cfg);
        if (c_report->parsed()) return cmd_report(cfg);
        if (c_check->parsed()) return cmd_check(cfg);
        return 2;
    } catch (const invalid_parameter& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        // a missing or malformed config is a usage problem
        return std::string(e.what()).find("cannot open") != std::string::npos
                   ? 2
                   : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace nlslab
