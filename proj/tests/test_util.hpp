#pragma once

#include <complex>
#include <random>

#include "nlslab/grid.hpp"

namespace testutil {

using nlslab::cplx;
using nlslab::GridPtr;
using nlslab::RadialField;

// random smooth field decaying well before the wall (sum of Gaussian bumps
// with even profiles, optional complex phase)
inline RadialField random_field(GridPtr g, std::mt19937_64& rng,
                                bool complex_phase = true, double rscale = 0.0) {
    std::uniform_real_distribution<double> uamp(-1.0, 1.0), uw(0.5, 2.0),
        uc(0.0, 3.0);
    if (rscale == 0.0) rscale = g->r_max / 8.0;
    RadialField f(g);
    for (int b = 0; b < 3; ++b) {
        double a = uamp(rng), w = uw(rng) * rscale, c = uc(rng);
        double ph = complex_phase ? uamp(rng) * 3.14159265358979 : 0.0;
        cplx amp = a * std::polar(1.0, ph);
        for (std::size_t i = 0; i < f.size(); ++i) {
            double r = g->nodes[i];
            f.values[i] += amp * std::exp(-(r * r) / (w * w)) *
                           (1.0 + c * r * r / (rscale * rscale) *
                                      std::exp(-r * r / (2 * w * w)));
        }
    }
    return f;
}

inline RadialField gaussian_field(GridPtr g, double amp, double width,
                                  double chirp = 0.0) {
    RadialField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double r = g->nodes[i];
        f.values[i] = amp * std::exp(-(r * r) / (width * width)) *
                      std::polar(1.0, chirp * r * r);
    }
    return f;
}

} // namespace testutil
