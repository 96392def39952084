#include "afcm/learning.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace afcm {

void LearnerConfig::validate() const {
    if (!(eta >= 0.0)) throw Error("learner: eta must be >= 0");
    if (unroll_T < 1) throw Error("learner: unroll_T must be >= 1");
    if (!(clip_lo > 0.0) || !(clip_lo <= clip_hi))
        throw Error("learner: need 0 < clip_lo <= clip_hi");
    if (!(converge_tol > 0.0)) throw Error("learner: converge_tol must be > 0");
    dynamics.validate();
    newton.validate();
}

ConceptState forward_unroll(const ConceptState& h0, const WeightSystem& ws,
                            const DynamicsConfig& dyn, std::size_t steps) {
    ConceptState h = h0;
    for (std::size_t t = 1; t <= steps; ++t) {
        h = phi_step(h, ws, dyn);
        if (!all_finite(h))
            throw DivergenceError("forward_unroll: non-finite state at step " +
                                      std::to_string(t),
                                  t);
    }
    return h;
}

BpttGradient bptt_gradient(const ConceptState& h0, const ConceptState& target,
                           const WeightSystem& weights, const LearnerConfig& config) {
    const std::size_t n = weights.size();
    if (h0.size() != n || target.size() != n)
        throw DimensionError("bptt_gradient: state/target length vs weight size");
    const DynamicsConfig& dyn = config.dynamics;
    const double a = dyn.use_residual ? dyn.alpha : 1.0;
    const std::size_t T = config.unroll_T;

    // Forward pass, storing every state and pre-activation.
    std::vector<ConceptState> states(T + 1);
    std::vector<Vec> pre(T + 1);
    states[0] = h0;
    for (std::size_t t = 1; t <= T; ++t) {
        Vec z = vec_mat(states[t - 1], weights.weights());
        if (dyn.use_anchor)
            for (std::size_t j = 0; j < n; ++j) z[j] += states[t - 1][j];
        ConceptState h(n);
        for (std::size_t j = 0; j < n; ++j)
            h[j] = (1.0 - a) * states[t - 1][j] + a * activation(z[j], dyn);
        if (!all_finite(h))
            throw DivergenceError("bptt_gradient: non-finite state at step " +
                                      std::to_string(t),
                                  t);
        pre[t] = std::move(z);
        states[t] = std::move(h);
    }

    // Reverse pass. g = dL/dH_t; q = the nonlinearity's local factor.
    Mat grad(n, n);
    Vec g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = states[T][i] - target[i];
    for (std::size_t t = T; t >= 1; --t) {
        Vec q(n);
        for (std::size_t j = 0; j < n; ++j)
            q[j] = a * g[j] * activation_derivative(pre[t][j], dyn);
        const ConceptState& hp = states[t - 1];
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = hp[i];
            if (hi == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) grad(i, j) += hi * q[j];
        }
        Vec wq = mat_vec(weights.weights(), q);
        Vec gp(n);
        for (std::size_t i = 0; i < n; ++i) {
            gp[i] = (1.0 - a) * g[i] + wq[i];
            if (dyn.use_anchor) gp[i] += q[i];
        }
        g = std::move(gp);
    }
    return {std::move(grad), states[T]};
}

double adaptive_scale(double grad_norm, double ref_norm, double clip_lo, double clip_hi) {
    if (ref_norm == 0.0) return 1.0;
    if (grad_norm == 0.0) return clip_hi;
    return std::clamp(ref_norm / grad_norm, clip_lo, clip_hi);
}

std::pair<WeightSystem, EpochRecord> jgd_epoch(const ConceptState& h0,
                                               const ConceptState& target,
                                               const WeightSystem& weights, JgdState& state,
                                               const LearnerConfig& config) {
    const std::size_t n = weights.size();
    const DynamicsConfig& dyn = config.dynamics;

    ConceptState h_star;
    std::string note;
    try {
        h_star = newton_fixed_point(h0, weights, config.newton, dyn).h_star;
    } catch (const ConvergenceError& e) {
        note = e.what();
    }

    BpttGradient bg = bptt_gradient(h0, target, weights, config);
    const double gnorm = frobenius(bg.grad);
    if (!state.ref_set) {
        state.ref_grad_norm = gnorm;
        state.ref_set = true;
        if (state.eta_current <= 0.0) state.eta_current = config.eta;
    }

    EpochRecord rec;
    rec.lambda_a = adaptive_scale(gnorm, state.ref_grad_norm, config.clip_lo, config.clip_hi);
    rec.grad_norm = gnorm;

    if (!note.empty()) {
        // No fixed point to build an update from: record the status quo.
        rec.error_norm = norm2_diff(target, bg.h_final);
        rec.reward = reward_from_error(rec.error_norm);
        rec.accepted = false;
        rec.note = note;
        state.eta_current *= 0.5;
        return {weights, rec};
    }

    const double scale =
        state.eta_current * rec.lambda_a * (config.jgd_square_lambda ? rec.lambda_a : 1.0);
    Mat w_new = weights.weights();
    const Mat& mask = weights.mask();
    for (std::size_t i = 0; i < n; ++i) {
        const double hs = h_star[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (dyn.use_mask && mask(i, j) == 0.0) continue;
            w_new(i, j) += scale * hs * (target[j] - h_star[j]);
        }
    }
    WeightSystem candidate = weights.with_weights(std::move(w_new));
    if (dyn.use_mask) candidate = apply_mask(candidate);

    const ConceptState h_t = forward_unroll(h0, candidate, dyn, config.unroll_T);
    rec.error_norm = norm2_diff(target, h_t);
    rec.reward = reward_from_error(rec.error_norm);
    if (rec.reward > state.best_reward) {
        rec.accepted = true;
        state.best_reward = rec.reward;
        state.eta_current = config.eta;
        return {std::move(candidate), rec};
    }
    rec.accepted = false;
    state.eta_current *= 0.5;
    return {weights, rec};
}

namespace {

// Shared scaffolding: initial-error bookkeeping and the running-best
// accepted flag that every learner's history carries.
struct RunState {
    double best_reward;
    double last_accepted_error;

    explicit RunState(double initial_error)
        : best_reward(reward_from_error(initial_error)), last_accepted_error(initial_error) {}

    void finish(EpochRecord& rec) {
        rec.reward = reward_from_error(rec.error_norm);
        rec.accepted = rec.reward > best_reward;
        if (rec.accepted) {
            best_reward = rec.reward;
            last_accepted_error = rec.error_norm;
        }
    }
};

TrainResult finish_result(WeightSystem ws, std::vector<EpochRecord> history,
                          double last_accepted_error, double converge_tol) {
    TrainResult out;
    out.final_weights = std::move(ws);
    out.history = std::move(history);
    out.final_error = last_accepted_error;
    out.converged = last_accepted_error < converge_tol;
    return out;
}

[[noreturn]] void rethrow_with_epoch(const char* who, std::size_t epoch,
                                     const DivergenceError& e) {
    throw DivergenceError(std::string(who) + ": epoch " + std::to_string(epoch) + ": " +
                              e.what(),
                          e.step);
}

}  // namespace

TrainResult train_jgd(const ScenarioSpec& scenario, const LearnerConfig& config) {
    config.validate();
    scenario.validate();
    WeightSystem ws(scenario.w_initial);

    JgdState st;
    st.eta_current = config.eta;
    const ConceptState h_init =
        forward_unroll(scenario.h0, ws, config.dynamics, config.unroll_T);
    const double init_err = norm2_diff(scenario.h_target, h_init);
    st.best_reward = reward_from_error(init_err);
    double last_accepted_error = init_err;

    std::vector<EpochRecord> history;
    history.reserve(config.epochs);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        try {
            auto [ws_next, rec] = jgd_epoch(scenario.h0, scenario.h_target, ws, st, config);
            ws = std::move(ws_next);
            rec.epoch = e;
            if (rec.accepted) last_accepted_error = rec.error_norm;
            history.push_back(std::move(rec));
        } catch (const DivergenceError& err) {
            rethrow_with_epoch("train_jgd", e, err);
        }
    }
    return finish_result(std::move(ws), std::move(history), last_accepted_error,
                         config.converge_tol);
}

TrainResult train_gd_constrained(const ScenarioSpec& scenario, const LearnerConfig& config) {
    config.validate();
    scenario.validate();
    const DynamicsConfig& dyn = config.dynamics;
    WeightSystem ws(scenario.w_initial);

    RunState rs(norm2_diff(scenario.h_target,
                           forward_unroll(scenario.h0, ws, dyn, config.unroll_T)));
    std::vector<EpochRecord> history;
    history.reserve(config.epochs);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        try {
            BpttGradient bg = bptt_gradient(scenario.h0, scenario.h_target, ws, config);
            Mat w_new = ws.weights();
            const Mat& mask = ws.mask();
            for (std::size_t k = 0; k < w_new.a.size(); ++k) {
                if (dyn.use_mask && mask.a[k] == 0.0) continue;
                w_new.a[k] -= config.eta * bg.grad.a[k];
            }
            ws = ws.with_weights(std::move(w_new));
            if (dyn.use_mask) ws = apply_mask(ws);

            EpochRecord rec;
            rec.epoch = e;
            rec.grad_norm = frobenius(bg.grad);
            rec.error_norm = norm2_diff(
                scenario.h_target, forward_unroll(scenario.h0, ws, dyn, config.unroll_T));
            rs.finish(rec);
            history.push_back(std::move(rec));
        } catch (const DivergenceError& err) {
            rethrow_with_epoch("train_gd", e, err);
        }
    }
    return finish_result(std::move(ws), std::move(history), rs.last_accepted_error,
                         config.converge_tol);
}

TrainResult train_gd(const ScenarioSpec& scenario, const LearnerConfig& config) {
    LearnerConfig cfg = config;
    cfg.dynamics.use_mask = false;
    return train_gd_constrained(scenario, cfg);
}

namespace {

// The delta-rule and Hebbian baselines are independent systems on plain
// tanh dynamics, whatever the scenario's own dynamics are.
DynamicsConfig simple_dynamics() {
    DynamicsConfig d;
    d.alpha = 1.0;
    d.use_anchor = false;
    d.use_residual = false;
    d.use_mask = false;
    d.steepness = 1.0;
    d.activation = Activation::Tanh;
    return d;
}

}  // namespace

TrainResult train_simple(const ScenarioSpec& scenario, const LearnerConfig& config) {
    config.validate();
    scenario.validate();
    const DynamicsConfig dyn = simple_dynamics();
    WeightSystem ws(scenario.w_initial);

    RunState rs(norm2_diff(scenario.h_target,
                           forward_unroll(scenario.h0, ws, dyn, config.unroll_T)));
    std::vector<EpochRecord> history;
    history.reserve(config.epochs);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        try {
            const ConceptState h_t = forward_unroll(scenario.h0, ws, dyn, config.unroll_T);
            Vec err(ws.size());
            for (std::size_t i = 0; i < err.size(); ++i)
                err[i] = scenario.h_target[i] - h_t[i];
            const Mat delta = outer(h_t, err);
            Mat w_new = ws.weights();
            for (std::size_t k = 0; k < w_new.a.size(); ++k)
                w_new.a[k] += config.eta * delta.a[k];
            ws = ws.with_weights(std::move(w_new));

            EpochRecord rec;
            rec.epoch = e;
            rec.grad_norm = frobenius(delta);
            rec.error_norm = norm2_diff(
                scenario.h_target, forward_unroll(scenario.h0, ws, dyn, config.unroll_T));
            rs.finish(rec);
            history.push_back(std::move(rec));
        } catch (const DivergenceError& err) {
            rethrow_with_epoch("train_simple", e, err);
        }
    }
    return finish_result(std::move(ws), std::move(history), rs.last_accepted_error,
                         config.converge_tol);
}

TrainResult train_hebbian(const ScenarioSpec& scenario, const LearnerConfig& config) {
    config.validate();
    scenario.validate();
    const DynamicsConfig dyn = simple_dynamics();
    constexpr double kDecay = 0.1;
    WeightSystem ws(scenario.w_initial);

    RunState rs(norm2_diff(scenario.h_target,
                           forward_unroll(scenario.h0, ws, dyn, config.unroll_T)));
    std::vector<EpochRecord> history;
    history.reserve(config.epochs);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        try {
            const Mat w_before = ws.weights();
            ConceptState h = scenario.h0;
            for (std::size_t t = 1; t <= config.unroll_T; ++t) {
                ConceptState h_next = phi_step(h, ws, dyn);
                if (!all_finite(h_next))
                    throw DivergenceError("train_hebbian: non-finite state at step " +
                                              std::to_string(t),
                                          t);
                Mat w_new = ws.weights();
                for (std::size_t i = 0; i < ws.size(); ++i)
                    for (std::size_t j = 0; j < ws.size(); ++j)
                        w_new(i, j) += config.eta * (h[i] * h_next[j] - kDecay * w_new(i, j));
                ws = ws.with_weights(std::move(w_new));
                h = std::move(h_next);
            }

            EpochRecord rec;
            rec.epoch = e;
            double dn = 0.0;
            for (std::size_t k = 0; k < w_before.a.size(); ++k) {
                const double d = ws.weights().a[k] - w_before.a[k];
                dn += d * d;
            }
            rec.grad_norm = config.eta > 0.0 ? std::sqrt(dn) / config.eta : 0.0;
            rec.error_norm = norm2_diff(
                scenario.h_target, forward_unroll(scenario.h0, ws, dyn, config.unroll_T));
            rs.finish(rec);
            history.push_back(std::move(rec));
        } catch (const DivergenceError& err) {
            rethrow_with_epoch("train_hebbian", e, err);
        }
    }
    return finish_result(std::move(ws), std::move(history), rs.last_accepted_error,
                         config.converge_tol);
}

const char* learner_name(Learner l) {
    switch (l) {
        case Learner::Jgd: return "jgd";
        case Learner::Gd: return "gd";
        case Learner::Simple: return "simple";
        case Learner::Hebbian: return "hebbian";
    }
    return "?";
}

Learner parse_learner(const std::string& name) {
    for (Learner l : {Learner::Jgd, Learner::Gd, Learner::Simple, Learner::Hebbian})
        if (name == learner_name(l)) return l;
    throw Error("unknown learner '" + name + "' (expected jgd, gd, simple, or hebbian)");
}

TrainResult train(const ScenarioSpec& scenario, Learner learner, const LearnerConfig& config) {
    switch (learner) {
        case Learner::Jgd: return train_jgd(scenario, config);
        case Learner::Gd: return train_gd(scenario, config);
        case Learner::Simple: return train_simple(scenario, config);
        case Learner::Hebbian: return train_hebbian(scenario, config);
    }
    throw Error("train: unreachable learner");
}

}  // namespace afcm
