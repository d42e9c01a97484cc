#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "irforge/errors.hpp"
#include "irforge/rng.hpp"

namespace irforge::synth {

// Parameters of one pasted target's weight field. Offsets and spreads
// are relative to the chip's box size; theta is in degrees.
struct GaussianParams {
    double rho_x = 0.0;    // relative center offset, [0, 0.2]
    double rho_y = 0.0;
    double sigma_x = 0.45; // relative spread, [0.3, 0.6]
    double sigma_y = 0.45;
    double theta = 0.0;    // rotation angle, [-90, 90] degrees
    double lambda = 0.75;  // brightness scalar, [0.5, 1]
};

// Sampling intervals for GaussianParams, configurable per dataset.
struct GaussianParamRanges {
    double rho_min = 0.0, rho_max = 0.2;
    double sigma_min = 0.3, sigma_max = 0.6;
    double theta_min = -90.0, theta_max = 90.0;
    double lambda_min = 0.5, lambda_max = 1.0;
};

inline void validate(const GaussianParams& p) {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(p.rho_x, 0.0, 0.2) || !in(p.rho_y, 0.0, 0.2) ||
        !in(p.sigma_x, 0.3, 0.6) || !in(p.sigma_y, 0.3, 0.6) ||
        !in(p.theta, -90.0, 90.0) || !in(p.lambda, 0.5, 1.0))
        throw ParamError("gaussian params outside valid ranges");
}

// Rotate (x, y) about (mu_x, mu_y) by theta degrees.
inline std::pair<double, double> rotate_coords(double x, double y, double mu_x, double mu_y,
                                               double theta_deg) {
    double t = theta_deg * (M_PI / 180.0);
    double c = std::cos(t), s = std::sin(t);
    double dx = x - mu_x, dy = y - mu_y;
    return {c * dx - s * dy, s * dx + c * dy};
}

// Continuous center of the weight field for a w x h box.
inline std::pair<double, double> gaussian_center(int w, int h, const GaussianParams& p) {
    return {0.5 * w + p.rho_x * w, 0.5 * h + p.rho_y * h};
}

// Weight field evaluated at a continuous coordinate. Equals 1 at the
// center and stays in (0, 1] everywhere.
inline double gaussian_at(double x, double y, int w, int h, const GaussianParams& p) {
    auto [mu_x, mu_y] = gaussian_center(w, h, p);
    auto [rx, ry] = rotate_coords(x, y, mu_x, mu_y, p.theta);
    double sx = p.sigma_x * w;
    double sy = p.sigma_y * h;
    return std::exp(-rx * rx / (2.0 * sx * sx) - ry * ry / (2.0 * sy * sy));
}

// w x h weight matrix sampled at integer pixel coordinates, row-major.
inline std::vector<double> gaussian_matrix(int w, int h, const GaussianParams& p) {
    if (w < 1 || h < 1) throw ParamError("gaussian_matrix dims must be >= 1");
    std::vector<double> g(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            g[static_cast<size_t>(y) * w + x] = gaussian_at(x, y, w, h, p);
    return g;
}

inline GaussianParams sample_params(SeededRng& rng, const GaussianParamRanges& r) {
    GaussianParams p;
    p.rho_x = rng.uniform_real(r.rho_min, r.rho_max);
    p.rho_y = rng.uniform_real(r.rho_min, r.rho_max);
    p.sigma_x = rng.uniform_real(r.sigma_min, r.sigma_max);
    p.sigma_y = rng.uniform_real(r.sigma_min, r.sigma_max);
    p.theta = rng.uniform_real(r.theta_min, r.theta_max);
    p.lambda = rng.uniform_real(r.lambda_min, r.lambda_max);
    return p;
}

inline GaussianParams sample_params(SeededRng& rng) {
    return sample_params(rng, GaussianParamRanges{});
}

}  // namespace irforge::synth
