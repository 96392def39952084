#include "afcm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace afcm {

void DynamicsConfig::validate() const {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw Error("dynamics: alpha must lie in (0, 1], got " + std::to_string(alpha));
    if (!(steepness > 0.0))
        throw Error("dynamics: steepness must be > 0, got " + std::to_string(steepness));
}

WeightSystem::WeightSystem(Mat initial)
    : w_(std::move(initial)), mask_(w_.rows, w_.cols), sign_(w_.rows, w_.cols) {
    if (w_.rows != w_.cols)
        throw DimensionError("weight matrix must be square, got " +
                             std::to_string(w_.rows) + "x" + std::to_string(w_.cols));
    if (!all_finite(w_)) throw Error("weight matrix has non-finite entries");
    for (std::size_t i = 0; i < w_.rows; ++i) {
        for (std::size_t j = 0; j < w_.cols; ++j) {
            const double v = w_(i, j);
            mask_(i, j) = (v != 0.0) ? 1.0 : 0.0;
            sign_(i, j) = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
    }
}

WeightSystem WeightSystem::with_weights(Mat w) const {
    if (w.rows != w_.rows || w.cols != w_.cols)
        throw DimensionError("with_weights: shape mismatch");
    if (!all_finite(w)) throw Error("with_weights: non-finite entries");
    WeightSystem out;
    out.w_ = std::move(w);
    out.mask_ = mask_;
    out.sign_ = sign_;
    return out;
}

WeightSystem apply_mask(const WeightSystem& ws) {
    Mat w = ws.weights();
    const Mat& m = ws.mask();
    for (std::size_t k = 0; k < w.a.size(); ++k)
        if (m.a[k] == 0.0) w.a[k] = 0.0;
    return ws.with_weights(std::move(w));
}

double activation(double z, const DynamicsConfig& cfg) {
    if (cfg.activation == Activation::Tanh) return std::tanh(z);
    const double t = std::clamp(cfg.steepness * z, -500.0, 500.0);
    return 1.0 / (1.0 + std::exp(-t));
}

double activation_derivative(double z, const DynamicsConfig& cfg) {
    if (cfg.activation == Activation::Tanh) {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    const double s = activation(z, cfg);
    return cfg.steepness * s * (1.0 - s);
}

ConceptState phi_step(const ConceptState& h, const WeightSystem& ws,
                      const DynamicsConfig& cfg) {
    const std::size_t n = ws.size();
    if (h.size() != n)
        throw DimensionError("phi_step: state length " + std::to_string(h.size()) +
                             " vs weight size " + std::to_string(n));
    Vec z = vec_mat(h, ws.weights());
    if (cfg.use_anchor)
        for (std::size_t j = 0; j < n; ++j) z[j] += h[j];

    ConceptState out(n);
    if (cfg.use_residual) {
        const double a = cfg.alpha;
        for (std::size_t j = 0; j < n; ++j)
            out[j] = (1.0 - a) * h[j] + a * activation(z[j], cfg);
    } else {
        for (std::size_t j = 0; j < n; ++j) out[j] = activation(z[j], cfg);
    }
    return out;
}

IterateResult iterate_attractor(const ConceptState& h0, const WeightSystem& ws,
                                const DynamicsConfig& cfg, std::size_t max_steps,
                                double tol) {
    if (max_steps < 1) throw Error("iterate_attractor: max_steps must be >= 1");
    if (!(tol > 0.0)) throw Error("iterate_attractor: tol must be > 0");

    ConceptState h = h0;
    for (std::size_t t = 1; t <= max_steps; ++t) {
        ConceptState next = phi_step(h, ws, cfg);
        if (!all_finite(next))
            throw DivergenceError("iterate_attractor: non-finite state at step " +
                                      std::to_string(t),
                                  t);
        const double delta = norm2_diff(next, h);
        h = std::move(next);
        if (delta < tol) return {std::move(h), t, true};
    }
    return {std::move(h), max_steps, false};
}

}  // namespace afcm
