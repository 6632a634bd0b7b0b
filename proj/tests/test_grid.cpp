#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "nlslab/grid.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nlslab;

namespace {
double weight_sum(const RadialGrid& g, const std::vector<double>& s) {
    double acc = 0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += g.weights[i] * s[i];
    return acc;
}
std::vector<double> sample_fn(const RadialGrid& g, double (*f)(double)) {
    std::vector<double> v(g.nodes.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(g.nodes[i]);
    return v;
}
} // namespace

TEST_CASE("make_grid basic invariants and moment exactness") {
    GridPtr g = make_grid(1.0, 1000, 1.0);
    REQUIRE(g->nodes.size() == 1000);
    for (std::size_t i = 0; i < g->nodes.size(); ++i) {
        CHECK(g->nodes[i] > 0.0);
        CHECK(g->nodes[i] < g->r_max);
        if (i) CHECK(g->nodes[i] > g->nodes[i - 1]);
        CHECK(g->weights[i] > 0.0);
    }
    // moments r^k, k <= 1 at 1e-10; r^2 at 1e-8
    std::vector<double> ones(1000, 1.0);
    CHECK(std::abs(weight_sum(*g, ones) - 1.0 / 3.0) < 1e-10 / 3.0);
    std::vector<double> lin(1000), quad(1000);
    for (int i = 0; i < 1000; ++i) {
        lin[i] = g->nodes[i];
        quad[i] = g->nodes[i] * g->nodes[i];
    }
    CHECK(std::abs(weight_sum(*g, lin) - 0.25) < 1e-10 * 0.25);
    CHECK(std::abs(weight_sum(*g, quad) - 0.2) < 1e-8 * 0.2);
}

TEST_CASE("make_grid rejects bad parameters") {
    CHECK_THROWS_AS(make_grid(0.0, 100, 1.0), invalid_parameter);
    CHECK_THROWS_AS(make_grid(-2.0, 100, 1.0), invalid_parameter);
    CHECK_THROWS_AS(make_grid(1.0 / 0.0, 100, 1.0), invalid_parameter);
    CHECK_THROWS_AS(make_grid(10.0, 15, 1.0), invalid_parameter);
    CHECK_THROWS_AS(make_grid(10.0, 100, 0.5), invalid_parameter);
}

TEST_CASE("quadrature of a Gaussian matches an adaptive oracle") {
    GridPtr g = make_grid(40.0, 4000, 1.0);
    auto gauss = sample_fn(*g, [](double r) { return std::exp(-r * r); });
    double ours = weight_sum(*g, gauss);
    double ref = oracles::integrate(
        [](double r) { return r * r * std::exp(-r * r); }, 0.0, 40.0, 1e-14);
    CHECK(std::abs(ours - ref) < 1e-8 * std::abs(ref));
}

TEST_CASE("integrate: zero, unit ball volume, exponential closed form") {
    GridPtr g1 = make_grid(1.0, 1000, 1.0);
    std::vector<double> z(1000, 0.0), ones(1000, 1.0);
    CHECK(integrate(*g1, z) == 0.0);
    CHECK(std::abs(integrate(*g1, ones) - 4.0 * M_PI / 3.0) < 1e-9);

    GridPtr g2 = make_grid(40.0, 4000, 1.0);
    auto e2r = sample_fn(*g2, [](double r) { return std::exp(-2.0 * r); });
    // int e^{-2r} r^2 dr = Gamma(3)/2^3 = 1/4, so the full integral is pi
    CHECK(std::abs(integrate(*g2, e2r) - M_PI) < 1e-6 * M_PI);

    std::vector<double> wrong(17, 1.0);
    CHECK_THROWS_AS(integrate(*g1, wrong), shape_error);
}

TEST_CASE("radial_derivative: constants, refinement order, closed form") {
    GridPtr g = make_grid(10.0, 2000, 1.0);
    RadialField c(g);
    for (auto& v : c.values) v = 3.25;
    RadialField dc = radial_derivative(c);
    for (auto& v : dc.values) CHECK(std::abs(v) < 1e-12);

    // f = r^2 -> 2r, second order under refinement
    auto max_err_r2 = [](int n) {
        GridPtr gg = make_grid(10.0, n, 1.0);
        RadialField f(gg);
        for (std::size_t i = 0; i < f.size(); ++i)
            f.values[i] = gg->nodes[i] * gg->nodes[i];
        RadialField d = radial_derivative(f);
        double e = 0;
        for (std::size_t i = 0; i < f.size(); ++i)
            e = std::max(e, std::abs(d.values[i].real() - 2.0 * gg->nodes[i]));
        return e;
    };
    double e1 = max_err_r2(500), e2 = max_err_r2(1000);
    // derivative of a quadratic is exact for 3-point stencils; both tiny
    CHECK(e1 < 1e-9);
    CHECK(e2 < 1e-9);

    auto max_err_sin = [](int n) {
        GridPtr gg = make_grid(10.0, n, 1.0);
        RadialField f(gg);
        for (std::size_t i = 0; i < f.size(); ++i)
            f.values[i] = std::sin(gg->nodes[i]);
        RadialField d = radial_derivative(f);
        double e = 0;
        for (std::size_t i = 0; i < f.size(); ++i)
            e = std::max(e, std::abs(d.values[i].real() - std::cos(gg->nodes[i])));
        return e;
    };
    CHECK(max_err_sin(8000) < 1e-6);
    double s1 = max_err_sin(500), s2 = max_err_sin(1000);
    double order = std::log2(s1 / s2);
    CHECK(order > 1.8);
    CHECK(order < 2.3);
}

TEST_CASE("apply_H: free Laplacian closed form and refinement order") {
    auto max_err = [](int n) {
        GridPtr g = make_grid(12.0, n, 1.0);
        std::vector<double> V(n, 0.0);
        RadialField f(g);
        for (std::size_t i = 0; i < f.size(); ++i)
            f.values[i] = std::exp(-g->nodes[i] * g->nodes[i]);
        RadialField hf = apply_H(f, V);
        double e = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            double r = g->nodes[i];
            double lap = (4 * r * r - 6) * std::exp(-r * r);
            e = std::max(e, std::abs(hf.values[i].real() + lap));
        }
        return e;
    };
    double e1 = max_err(1500), e2 = max_err(3000);
    CHECK(e1 < 5e-4);
    double order = std::log2(e1 / e2);
    CHECK(order > 1.8);
    CHECK(order < 2.3);

    GridPtr g = make_grid(12.0, 600, 1.0);
    std::vector<double> V(600, 0.0);
    RadialField zero(g);
    RadialField hz = apply_H(zero, V);
    for (auto& v : hz.values) CHECK(std::abs(v) == 0.0);

    std::vector<double> bad(17, 0.0);
    CHECK_THROWS_AS(apply_H(zero, bad), shape_error);
}

TEST_CASE("apply_H is symmetric against the grid inner product") {
    GridPtr g = make_grid(20.0, 1500, 1.0);
    std::mt19937_64 rng(7);
    std::vector<double> V(1500);
    for (int i = 0; i < 1500; ++i)
        V[i] = -3.0 * std::exp(-g->nodes[i] * g->nodes[i] / 4.0);
    for (int rep = 0; rep < 5; ++rep) {
        RadialField f = testutil::random_field(g, rng, false);
        RadialField h = testutil::random_field(g, rng, false);
        double a = inner_re(apply_H(f, V), h);
        double b = inner_re(f, apply_H(h, V));
        CHECK(std::abs(a - b) < 1e-9 * (std::abs(a) + std::abs(b) + 1e-30));
    }
}

TEST_CASE("field basics: zero norm, conjugation involution") {
    GridPtr g = make_grid(5.0, 200, 1.0);
    RadialField z(g);
    CHECK(l2_norm(z) == 0.0);
    std::mt19937_64 rng(3);
    RadialField f = testutil::random_field(g, rng, true);
    RadialField cc = conj(conj(f));
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(std::abs(cc.values[i] - f.values[i]) == 0.0);
}

TEST_CASE("stretched grid: geometry and second-order quadrature") {
    GridPtr g = make_grid(100.0, 4000, 4.0);
    for (std::size_t i = 1; i < g->nodes.size(); ++i) {
        CHECK(g->nodes[i] > g->nodes[i - 1]);
        CHECK(g->weights[i] > 0.0);
    }
    // cells grow toward the wall
    CHECK(g->cell.back() > 2.0 * g->cell.front());
    std::vector<double> ones(g->nodes.size(), 1.0);
    double vol = integrate(*g, ones);
    double ref = 4.0 * M_PI / 3.0 * 1e6;
    CHECK(std::abs(vol - ref) < 1e-5 * ref);
    // decaying integrand still accurate
    auto gauss = sample_fn(*g, [](double r) { return std::exp(-r * r); });
    double ref2 = oracles::integrate(
        [](double r) { return 4 * M_PI * r * r * std::exp(-r * r); }, 0.0, 30.0,
        1e-14);
    CHECK(std::abs(integrate(*g, gauss) - ref2) < 1e-6 * ref2);
}

TEST_CASE("field serialization round trip") {
    GridPtr g = make_grid(8.0, 64, 1.0);
    std::mt19937_64 rng(11);
    RadialField f = testutil::random_field(g, rng, true);
    save_field(f, "field_roundtrip.txt");
    RadialField f2 = load_field("field_roundtrip.txt");
    REQUIRE(f2.size() == f.size());
    CHECK(f2.grid->r_max == f.grid->r_max);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(std::abs(f2.values[i] - f.values[i]) < 1e-15);
    std::remove("field_roundtrip.txt");
}

TEST_CASE("sample_onto refinement consistency") {
    GridPtr g1 = make_grid(10.0, 800, 1.0);
    GridPtr g2 = make_grid(10.0, 1200, 1.0);
    RadialField f = testutil::gaussian_field(g1, 1.3, 2.0, 0.4);
    RadialField f2 = sample_onto(f, g2);
    for (std::size_t i = 0; i < f2.size(); ++i) {
        double r = g2->nodes[i];
        cplx exact = 1.3 * std::exp(-r * r / 4.0) * std::polar(1.0, 0.4 * r * r);
        CHECK(std::abs(f2.values[i] - exact) < 2e-5);
    }
}
