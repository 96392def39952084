#include "afcm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

namespace afcm {

void NewtonConfig::validate() const {
    if (!(epsilon > 0.0)) throw Error("newton: epsilon must be > 0");
    if (max_iters < 1) throw Error("newton: max_iters must be >= 1");
    if (!(damping > 0.0) || damping > 1.0) throw Error("newton: damping must lie in (0, 1]");
}

namespace {

// Pre-activation z = h (W + anchor I).
Vec preactivation(const Vec& h, const WeightSystem& ws, const DynamicsConfig& dyn) {
    Vec z = vec_mat(h, ws.weights());
    if (dyn.use_anchor)
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += h[j];
    return z;
}

}  // namespace

Vec residual(const Vec& h, const WeightSystem& ws, const DynamicsConfig& dyn) {
    const std::size_t n = ws.size();
    if (h.size() != n) throw DimensionError("residual: state length vs weight size");
    Vec z = preactivation(h, ws, dyn);
    Vec r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = activation(z[j], dyn) - h[j];
    return r;
}

Mat jacobian(const Vec& h, const WeightSystem& ws, const DynamicsConfig& dyn) {
    const std::size_t n = ws.size();
    if (h.size() != n) throw DimensionError("jacobian: state length vs weight size");
    const Vec z = preactivation(h, ws, dyn);
    Vec d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = activation_derivative(z[j], dyn);

    const Mat& w = ws.weights();
    Mat jac(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double aij = w(i, j);
            if (dyn.use_anchor && i == j) aij += 1.0;
            jac(i, j) = aij * d[j] - (i == j ? 1.0 : 0.0);
        }
    }
    return jac;
}

FixedPointResult newton_fixed_point(const Vec& h0, const WeightSystem& ws,
                                    const NewtonConfig& cfg, const DynamicsConfig& dyn) {
    cfg.validate();
    const std::size_t n = ws.size();
    if (h0.size() != n) throw DimensionError("newton_fixed_point: state length vs weight size");
    if (!all_finite(h0)) throw Error("newton_fixed_point: non-finite initial state");

    Vec h = h0;
    Vec f = residual(h, ws, dyn);
    double rnorm = norm2(f);
    double best = rnorm;
    Vec best_h = h;

    if (rnorm < cfg.epsilon) return {std::move(h), rnorm, 0, SolveMethod::Newton};

    bool newton_ok = true;
    std::size_t iters = 0;
    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        const Mat jac = jacobian(h, ws, dyn);
        // Row convention: dF = dH J, so the linear solve runs on J^T.
        Mat jt(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) jt(i, j) = jac(j, i);
        Vec delta;
        if (!solve_lu(std::move(jt), f, delta)) {
            newton_ok = false;
            break;
        }

        // Halve the step while it makes ||F|| worse (or non-finite).
        double step = cfg.damping;
        Vec h_try(n);
        Vec f_try;
        double r_try = 0.0;
        bool accepted = false;
        for (int halving = 0; halving <= 8; ++halving) {
            for (std::size_t i = 0; i < n; ++i) h_try[i] = h[i] - step * delta[i];
            if (all_finite(h_try)) {
                f_try = residual(h_try, ws, dyn);
                r_try = norm2(f_try);
                if (std::isfinite(r_try) && r_try <= rnorm) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) {
            newton_ok = false;
            break;
        }

        h = h_try;
        f = std::move(f_try);
        rnorm = r_try;
        iters = k;
        if (rnorm < best) {
            best = rnorm;
            best_h = h;
        }
        if (rnorm < cfg.epsilon) {
            const double check = norm2(residual(h, ws, dyn));
            return {std::move(h), check, iters, SolveMethod::Newton};
        }
    }
    (void)newton_ok;

    // Fallback: plain forward iteration of the same map with alpha = 1.
    DynamicsConfig plain = dyn;
    plain.use_residual = false;
    plain.alpha = 1.0;
    Vec hf = best_h;
    for (std::size_t s = 1; s <= cfg.fallback_steps; ++s) {
        hf = phi_step(hf, ws, plain);
        if (!all_finite(hf))
            throw DivergenceError("newton_fixed_point: fallback diverged at step " +
                                      std::to_string(s),
                                  s);
        const double r = norm2(residual(hf, ws, dyn));
        if (r < best) {
            best = r;
            best_h = hf;
        }
        if (r < cfg.epsilon) return {std::move(hf), r, s, SolveMethod::FallbackIteration};
    }

    throw ConvergenceError("newton_fixed_point: no convergence (best residual " +
                               std::to_string(best) + ")",
                           best);
}

ContractionCertificate contraction_certificate(const WeightSystem& ws, double steepness) {
    if (!(steepness > 0.0)) throw Error("contraction_certificate: steepness must be > 0");
    const std::size_t n = ws.size();
    Mat a = ws.weights();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;

    constexpr double kTol = 1e-10;
    constexpr std::size_t kCap = 10000;

    // Power iteration on A^T A; the Rayleigh quotient is always a lower
    // bound for the top eigenvalue, so a non-converged run still yields a
    // usable lower bound on the norm.
    std::mt19937_64 eng(0x5eedbeefULL);
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = static_cast<double>(eng() >> 11) * 0x1.0p-53 - 0.5;
    double vn = norm2(v);
    if (vn == 0.0) {
        v.assign(n, 1.0);
        vn = std::sqrt(static_cast<double>(n));
    }
    for (double& x : v) x /= vn;

    double nu_prev = 0.0;
    double nu = 0.0;
    bool converged = false;
    std::size_t it = 0;
    while (it < kCap) {
        ++it;
        // u = A^T (A v); nu = ||A v||^2 is the Rayleigh quotient of A^T A.
        Vec av = mat_vec(a, v);
        double s = 0.0;
        for (double x : av) s += x * x;
        nu = s;
        Vec u(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double avi = av[i];
            if (avi == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) u[j] += a(i, j) * avi;
        }
        const double un = norm2(u);
        if (un == 0.0) {
            // v is in the null space of A; norm estimate stays at 0.
            converged = true;
            nu = 0.0;
            break;
        }
        for (std::size_t j = 0; j < n; ++j) v[j] = u[j] / un;
        if (it > 1 && std::abs(nu - nu_prev) <= kTol * std::max(1.0, std::abs(nu))) {
            converged = true;
            break;
        }
        nu_prev = nu;
    }

    ContractionCertificate cert;
    cert.operator_norm = std::sqrt(std::max(0.0, nu));
    cert.bound = steepness / 4.0 * cert.operator_norm;
    cert.norm_converged = converged;
    cert.power_iters = it;
    cert.contractive = converged && cert.bound < 1.0;
    cert.rate = cert.bound;
    return cert;
}

ConceptState polish_fixed_point(ConceptState h, const WeightSystem& ws,
                                const DynamicsConfig& dyn, std::size_t max_steps) {
    if (h.size() != ws.size())
        throw DimensionError("polish_fixed_point: state length vs weight size");
    DynamicsConfig plain = dyn;
    plain.use_residual = false;
    plain.alpha = 1.0;
    for (std::size_t t = 0; t < max_steps; ++t) {
        ConceptState next = phi_step(h, ws, plain);
        if (!all_finite(next))
            throw DivergenceError("polish_fixed_point: non-finite state at step " +
                                      std::to_string(t + 1),
                                  t + 1);
        if (next == h) break;
        h = std::move(next);
    }
    return h;
}

std::vector<double> denoising_trace(const ConceptState& h_clean, const Vec& noise,
                                    const WeightSystem& ws, const DynamicsConfig& dyn,
                                    std::size_t steps) {
    const std::size_t n = ws.size();
    if (h_clean.size() != n || noise.size() != n)
        throw DimensionError("denoising_trace: state/noise length vs weight size");

    const double drift = norm2_diff(phi_step(h_clean, ws, dyn), h_clean);
    if (!(drift <= 1e-8))
        throw PreconditionError("denoising_trace: h_clean is not a fixed point (moved by " +
                                std::to_string(drift) + ")");

    ConceptState h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = h_clean[i] + noise[i];

    std::vector<double> dist;
    dist.reserve(steps + 1);
    dist.push_back(norm2(noise));
    for (std::size_t t = 1; t <= steps; ++t) {
        h = phi_step(h, ws, dyn);
        if (!all_finite(h))
            throw DivergenceError("denoising_trace: non-finite state at step " +
                                      std::to_string(t),
                                  t);
        dist.push_back(norm2_diff(h, h_clean));
    }
    return dist;
}

}  // namespace afcm
