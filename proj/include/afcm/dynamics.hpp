#pragma once
// Concept-network state model and forward attractor dynamics.
//
// A state H is a row vector of n activations. One step of the map is
//
//   phi(H) = (1 - alpha) H + alpha * act(H W + H)
//
// where the +H term inside the nonlinearity is the "anchor" (equivalently
// W + I), the convex mixing is the residual memory, and act is a steepened
// sigmoid (or tanh for the plain baseline). Both features toggle off
// independently; use_residual = false behaves exactly like alpha = 1.
//
// Weights carry a structural mask (the zero pattern of the initial matrix)
// and a sign matrix, both frozen at construction. Masked entries are kept
// at an exact 0.0 by the update rules, never approximately.

#include <cstddef>

#include "afcm/errors.hpp"
#include "afcm/linalg.hpp"

namespace afcm {

using ConceptState = Vec;

enum class Activation { Sigmoid, Tanh };

struct DynamicsConfig {
    double alpha = 0.5;        // residual mixing coefficient, in (0, 1]
    bool use_anchor = true;    // +H inside the nonlinearity
    bool use_residual = true;  // convex mixing with the previous state
    bool use_mask = true;      // learners keep masked weight entries at zero
    double steepness = 1.0;    // sigmoid steepness, > 0
    Activation activation = Activation::Sigmoid;

    bool operator==(const DynamicsConfig&) const = default;

    // Throws Error when alpha or steepness is out of range.
    void validate() const;
};

// Weight matrix plus the structural mask and sign pattern derived from the
// initial weights. Mask and sign never change after construction.
class WeightSystem {
public:
    WeightSystem() = default;
    explicit WeightSystem(Mat initial);

    const Mat& weights() const { return w_; }
    const Mat& mask() const { return mask_; }
    const Mat& sign() const { return sign_; }
    std::size_t size() const { return w_.rows; }

    // Same mask and sign, new weight values. Dimensions must match.
    WeightSystem with_weights(Mat w) const;

    bool operator==(const WeightSystem&) const = default;

private:
    Mat w_;
    Mat mask_;
    Mat sign_;
};

// Zeroes (exact 0.0) every weight entry whose mask is 0. Idempotent.
WeightSystem apply_mask(const WeightSystem& ws);

// Steepened sigmoid 1 / (1 + e^(-steepness z)) or tanh(z). The exponent is
// clamped at |steepness * z| <= 500, so the result is always finite.
double activation(double z, const DynamicsConfig& cfg);

// d/dz of activation: steepness * s(z) (1 - s(z)) for the sigmoid
// (max steepness/4 at z = 0), 1 - tanh(z)^2 for tanh.
double activation_derivative(double z, const DynamicsConfig& cfg);

// One step of the map above. H is a row vector; the recurrence computes
// H W (left multiplication).
ConceptState phi_step(const ConceptState& h, const WeightSystem& ws,
                      const DynamicsConfig& cfg);

struct IterateResult {
    ConceptState state;
    std::size_t steps = 0;
    bool converged = false;
};

// Applies phi_step until ||H_{t+1} - H_t||_2 < tol or max_steps is reached.
// Throws DivergenceError if the state stops being finite.
IterateResult iterate_attractor(const ConceptState& h0, const WeightSystem& ws,
                                const DynamicsConfig& cfg,
                                std::size_t max_steps = 500, double tol = 1e-6);

}  // namespace afcm
