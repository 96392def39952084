#pragma once
// J-GD and the baseline learners.
//
// J-GD, per epoch: solve the fixed point H* under the current weights, take
// the BPTT gradient norm to form the adaptive scale
//
//   lambda_a = clip(ref_norm / grad_norm, clip_lo, clip_hi)
//
// against the frozen epoch-0 reference, then propose
//
//   dW = eta * lambda_a * outer(lambda_a H*, H_target - H*)   (masked)
//
// and accept only if the reward z = 2 e^(-||H_target - H_T||) - 1 of the
// candidate strictly beats the best accepted reward so far (initialized to
// the reward of the initial weights). On rejection eta is halved for the
// next attempt and restored to the configured value after an acceptance;
// without that, a rejected deterministic update would repeat forever.
//
// All train_* functions use config.dynamics as the forward map. Callers
// that train a generated scenario should copy scenario.dynamics into the
// config first (the harness and the CLI do).

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "afcm/dynamics.hpp"
#include "afcm/scenarios.hpp"
#include "afcm/solver.hpp"

namespace afcm {

struct LearnerConfig {
    double eta = 0.05;
    std::size_t unroll_T = 30;
    double clip_lo = 0.5;
    double clip_hi = 2.0;
    std::size_t epochs = 200;
    bool use_jgd = true;
    bool jgd_square_lambda = true;  // dW carries lambda_a twice, as written
    double converge_tol = 0.1;      // final_error threshold for the converged flag
    DynamicsConfig dynamics;
    NewtonConfig newton;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double error_norm = 0.0;  // ||H_target - H_T||_2 of this epoch's evaluation
    double reward = 0.0;      // 2 e^(-error_norm) - 1, in (-1, 1]
    double lambda_a = 1.0;
    bool accepted = false;
    double grad_norm = 0.0;
    std::string note;  // nonempty when the epoch hit a solver error
};

struct TrainResult {
    WeightSystem final_weights;
    std::vector<EpochRecord> history;
    double final_error = 0.0;  // last accepted epoch's error (initial error if none)
    bool converged = false;
};

struct BpttGradient {
    Mat grad;            // dL/dW for L = 1/2 ||target - H_T||^2
    ConceptState h_final;  // H_T
};

// Reverse accumulation through unroll_T phi steps, dense in W (masking is
// the update's job, not the gradient's). Throws DivergenceError if a state
// goes non-finite.
BpttGradient bptt_gradient(const ConceptState& h0, const ConceptState& target,
                           const WeightSystem& weights, const LearnerConfig& config);

// clip(ref_norm / grad_norm, clip_lo, clip_hi). grad_norm = 0 maps to
// clip_hi (flattest landscape); ref_norm = 0 maps to 1.0 (scale undefined).
double adaptive_scale(double grad_norm, double ref_norm, double clip_lo, double clip_hi);

inline double reward_from_error(double error_norm) {
    return 2.0 * std::exp(-error_norm) - 1.0;
}

// Applies phi_step T times and returns H_T.
ConceptState forward_unroll(const ConceptState& h0, const WeightSystem& ws,
                            const DynamicsConfig& dyn, std::size_t steps);

// Cross-epoch learner state for J-GD.
struct JgdState {
    double ref_grad_norm = 0.0;
    bool ref_set = false;
    double best_reward = -1.0;
    double eta_current = 0.0;
};

// One gated epoch; returns the (possibly unchanged) weights and the record.
// A Newton failure is recorded as a rejected epoch, not an exception.
std::pair<WeightSystem, EpochRecord> jgd_epoch(const ConceptState& h0,
                                               const ConceptState& target,
                                               const WeightSystem& weights, JgdState& state,
                                               const LearnerConfig& config);

TrainResult train_jgd(const ScenarioSpec& scenario, const LearnerConfig& config);

// Plain BPTT gradient descent, no mask and no gate.
TrainResult train_gd(const ScenarioSpec& scenario, const LearnerConfig& config);

// GD update path that honors config.dynamics.use_mask, for ablation rows
// where the mask is kept but the gated update is removed. train_gd is this
// with the mask forced off.
TrainResult train_gd_constrained(const ScenarioSpec& scenario, const LearnerConfig& config);

// Delta-rule baseline on plain tanh dynamics H_{t+1} = tanh(H_t W);
// W += eta * outer(H_T, target - H_T). Unmasked, ungated.
TrainResult train_simple(const ScenarioSpec& scenario, const LearnerConfig& config);

// Correlational stand-in baseline: along the tanh trajectory,
// W += eta * (outer(H_t, H_{t+1}) - decay W) with decay 0.1.
TrainResult train_hebbian(const ScenarioSpec& scenario, const LearnerConfig& config);

enum class Learner { Jgd, Gd, Simple, Hebbian };

const char* learner_name(Learner l);
// Accepts "jgd", "gd", "simple", "hebbian". Throws Error otherwise.
Learner parse_learner(const std::string& name);

TrainResult train(const ScenarioSpec& scenario, Learner learner, const LearnerConfig& config);

}  // namespace afcm
