#pragma once

#include <cmath>

#include "compo/errors.hpp"

namespace compo {

/// Smoothed ReLU: delta * log(1 + exp(x/delta)). C-infinity, not polynomial
/// on any interval, and within delta*ln2 of max(0,x) everywhere. The ramp is
/// recovered as delta -> 0.
inline double smooth_relu(double x, double delta) {
    if (!(delta > 0)) throw NumericError("smooth_relu: delta must be positive");
    double z = x / delta;
    if (z > 30) return x;
    if (z < -30) return 0.0;
    return delta * std::log1p(std::exp(z));
}

/// d/dx smooth_relu = logistic(x/delta).
inline double smooth_relu_grad(double x, double delta) {
    double z = x / delta;
    if (z > 30) return 1.0;
    if (z < -30) return 0.0;
    return 1.0 / (1.0 + std::exp(-z));
}

struct SmoothActivation {
    double delta = 0.01;

    SmoothActivation() = default;
    explicit SmoothActivation(double d) : delta(d) {
        if (!(delta > 0)) throw NumericError("SmoothActivation: delta must be positive");
    }

    double operator()(double x) const { return smooth_relu(x, delta); }
    double grad(double x) const { return smooth_relu_grad(x, delta); }
};

} // namespace compo
