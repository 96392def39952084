#pragma once
// Newton solver for the self-consistency equation of the anchored map,
//
//   H* = act(H* (W + I)),   residual F(H) = act(H (W + I)) - H,
//
// plus the contraction certificate (steepness/4) ||W + I||_2 < 1 that
// guarantees geometric convergence and denoising.
//
// Vector convention: H is a row vector, so the Jacobian is defined entrywise
// as J(i, j) = dF_j / dH_i = (W + I)(i, j) act'((H (W + I))_j) - delta_ij.
// The anchor toggle and the activation come from the DynamicsConfig, so the
// solver targets the same map the forward dynamics iterate; alpha and
// use_residual do not change the fixed points and are ignored here.

#include <cstddef>
#include <vector>

#include "afcm/dynamics.hpp"

namespace afcm {

struct NewtonConfig {
    double epsilon = 1e-8;           // residual tolerance
    std::size_t max_iters = 50;      // Newton iteration cap
    double damping = 1.0;            // step-scale factor, in (0, 1]
    std::size_t fallback_steps = 500;  // plain phi iterations if Newton fails

    void validate() const;
};

enum class SolveMethod { Newton, FallbackIteration };

struct FixedPointResult {
    ConceptState h_star;
    double residual_norm = 0.0;  // ||F(h_star)||_2, recomputed at return
    std::size_t iters = 0;       // iterations of the reporting method
    SolveMethod method = SolveMethod::Newton;
};

struct ContractionCertificate {
    double operator_norm = 0.0;  // ||W + I||_2 (spectral norm)
    double bound = 0.0;          // (steepness / 4) * operator_norm
    bool contractive = false;    // bound < 1 (strict)
    double rate = 0.0;           // contraction factor when contractive
    bool norm_converged = false;
    std::size_t power_iters = 0;
};

// F(H) = act(H (W + anchor I)) - H.
Vec residual(const Vec& h, const WeightSystem& ws,
             const DynamicsConfig& dyn = DynamicsConfig{});

// Entry (i, j) = dF_j / dH_i under the row-vector convention.
Mat jacobian(const Vec& h, const WeightSystem& ws,
             const DynamicsConfig& dyn = DynamicsConfig{});

// Damped Newton on F. Steps that increase ||F|| are halved (up to 8 times);
// on a singular Jacobian, a non-finite iterate, or an exhausted budget the
// solver falls back to plain forward iteration (alpha = 1). Throws
// ConvergenceError when neither path reaches epsilon.
FixedPointResult newton_fixed_point(const Vec& h0, const WeightSystem& ws,
                                    const NewtonConfig& cfg = NewtonConfig{},
                                    const DynamicsConfig& dyn = DynamicsConfig{});

// Spectral norm of (W + I) by power iteration on the Gram matrix
// (tolerance 1e-10, cap 10000). If the iteration does not settle, the
// returned norm is a lower bound and contractive is forced to false.
ContractionCertificate contraction_certificate(const WeightSystem& ws,
                                               double steepness = 1.0);

// Iterates the plain (alpha = 1) map from h until the state is bitwise
// stationary or max_steps is reached, and returns the last iterate. A
// Newton solution is accurate to its epsilon; pinning it to the numerical
// attractor makes distance traces floor at machine precision instead.
ConceptState polish_fixed_point(ConceptState h, const WeightSystem& ws,
                                const DynamicsConfig& dyn,
                                std::size_t max_steps = 10000);

// Distances d_t = ||H_t - H_clean||_2 for t = 0..steps, starting from
// H_0 = H_clean + noise (d_0 is ||noise|| itself, so scaling the level
// scales d_0 exactly). H_clean must be a fixed point of the dynamics
// within 1e-8, otherwise PreconditionError.
std::vector<double> denoising_trace(const ConceptState& h_clean, const Vec& noise,
                                    const WeightSystem& ws,
                                    const DynamicsConfig& dyn, std::size_t steps);

}  // namespace afcm
