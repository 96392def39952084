// Acceptance gate: ten numbered criteria, one PASS/FAIL line each, nonzero
// exit when anything fails. Expected values come from independent oracles
// (finite differences, bisection, long fixed-point iteration), not from the
// code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "afcm/harness.hpp"
#include "afcm/learning.hpp"
#include "afcm/scenarios.hpp"
#include "afcm/solver.hpp"
#include "oracles.hpp"

using namespace afcm;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    std::string title;
    bool pass = false;
    double seconds = 0.0;
    double limit = 0.0;  // 0 = no stated budget
    std::string detail;

    Outcome() = default;
    explicit Outcome(std::string t) : title(std::move(t)) {}
};

double since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// ---- criterion 1: BPTT gradient vs central finite differences ------------

Outcome criterion_gradient() {
    Outcome out{"reverse-mode gradient matches central differences (rel < 1e-4)"};
    out.limit = 5.0;
    auto t0 = Clock::now();
    double worst = 0.0;
    for (std::size_t n : {2u, 4u, 8u}) {
        for (std::size_t T : {1u, 3u, 5u}) {
            for (std::uint64_t k = 0; k < 5; ++k) {
                DetRng rng(n * 100 + T * 10 + k);
                Mat w = oracle::rand_weights(rng, n, -1.0, 1.0);
                WeightSystem ws(w);
                Vec h0 = oracle::rand_state(rng, n, 0.05, 0.95);
                Vec target = oracle::rand_state(rng, n, 0.05, 0.95);
                LearnerConfig cfg;
                cfg.unroll_T = T;

                BpttGradient bg = bptt_gradient(h0, target, ws, cfg);
                Mat fd = oracle::fd_unroll_gradient(ws, h0, target, T, cfg.dynamics, 1e-5);
                for (std::size_t i = 0; i < fd.a.size(); ++i)
                    worst = std::max(worst, rel_err(bg.grad.a[i], fd.a[i]));
            }
        }
    }
    out.seconds = since(t0);
    out.pass = worst < 1e-4;
    out.detail = "worst relative error " + fmt(worst);
    return out;
}

// ---- criterion 2: analytic Jacobian vs finite differences -----------------

Outcome criterion_jacobian() {
    Outcome out{"fixed-point Jacobian matches finite differences (abs < 1e-6)"};
    out.limit = 1.0;
    auto t0 = Clock::now();
    double worst = 0.0;
    for (std::size_t n : {1u, 3u, 5u, 8u}) {
        for (std::uint64_t k = 0; k < 5; ++k) {
            DetRng rng(n * 57 + k + 1);
            Mat w = oracle::rand_weights(rng, n, -1.0, 1.0);
            WeightSystem ws(w);
            Vec h = oracle::rand_state(rng, n, 0.05, 0.95);
            DynamicsConfig dyn;
            Mat j = jacobian(h, ws, dyn);
            Mat fd = oracle::fd_residual_jacobian(h, ws, dyn);
            for (std::size_t i = 0; i < fd.a.size(); ++i)
                worst = std::max(worst, std::abs(j.a[i] - fd.a[i]));
        }
    }
    out.seconds = since(t0);
    out.pass = worst < 1e-6;
    out.detail = "worst absolute error " + fmt(worst);
    return out;
}

// ---- criterion 3: Newton agrees with long forward iteration ---------------

Outcome criterion_newton() {
    Outcome out{"Newton solves 10 contractive systems (agreement 1e-6, iters <= 20)"};
    out.limit = 1.0;
    auto t0 = Clock::now();
    out.pass = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ScenarioSpec spec = gen_stress(ScenarioKind::S3, seed);
        WeightSystem ws(spec.w_initial);
        FixedPointResult fp = newton_fixed_point(spec.h0, ws, {}, spec.dynamics);
        IterateResult it = iterate_attractor(spec.h0, ws, spec.dynamics, 20000, 1e-12);
        double gap = norm2_diff(fp.h_star, it.state);
        if (fp.method != SolveMethod::Newton || fp.iters > 20 || !it.converged ||
            gap >= 1e-6) {
            out.pass = false;
            out.detail = "seed " + std::to_string(seed) + ": gap " + fmt(gap) +
                         ", iters " + std::to_string(fp.iters);
            break;
        }
    }
    out.seconds = since(t0);
    if (out.pass) out.detail = "10 seeds";
    return out;
}

// ---- criterion 4: certified geometric denoising ---------------------------

Outcome criterion_denoising() {
    Outcome out{"denoising contracts per step within the certified rate"};
    out.limit = 2.0;
    auto t0 = Clock::now();
    out.pass = true;
    for (std::uint64_t seed = 1; seed <= 10 && out.pass; ++seed) {
        ScenarioSpec spec = gen_stress(ScenarioKind::S3, seed);
        WeightSystem ws(spec.w_initial);
        ContractionCertificate cert = contraction_certificate(ws, spec.dynamics.steepness);
        if (!cert.contractive) {
            out.pass = false;
            out.detail = "seed " + std::to_string(seed) + ": certificate not contractive";
            break;
        }
        std::vector<double> d =
            denoising_trace(spec.h_target, *spec.noise, ws, spec.dynamics, 50);
        for (std::size_t t = 0; t + 1 < d.size(); ++t) {
            if (d[t + 1] > cert.rate * d[t] + 1e-12) {
                out.pass = false;
                out.detail = "seed " + std::to_string(seed) + ": step " +
                             std::to_string(t) + " ratio " + fmt(d[t + 1] / d[t]) +
                             " vs rate " + fmt(cert.rate);
                break;
            }
        }
        if (out.pass && !(d[50] < 1e-3 * d[0])) {
            out.pass = false;
            out.detail = "seed " + std::to_string(seed) + ": d50/d0 " + fmt(d[50] / d[0]);
        }
    }
    out.seconds = since(t0);
    if (out.pass) out.detail = "10 seeds, 50 steps each";
    return out;
}

// ---- criterion 5: mask conservation under training ------------------------

Outcome criterion_mask() {
    Outcome out{"masked weights stay exactly zero through 200 training epochs"};
    out.limit = 5.0;  // per scenario; seconds reports the slowest one
    out.pass = true;
    double slowest = 0.0;
    for (ScenarioKind kind : all_scenario_kinds()) {
        auto tk = Clock::now();
        ScenarioSpec spec = gen_scenario(kind, 1);
        TrainResult res = run_comparison_cell(spec, Learner::Jgd, LearnerConfig{});
        double dt = since(tk);
        slowest = std::max(slowest, dt);
        const Mat& mask = res.final_weights.mask();
        const Mat& w = res.final_weights.weights();
        for (std::size_t i = 0; i < mask.a.size(); ++i) {
            if (mask.a[i] == 0.0 && (w.a[i] != 0.0 || std::signbit(w.a[i]))) {
                out.pass = false;
                out.detail = std::string(kind_name(kind)) + ": masked entry " +
                             std::to_string(i) + " drifted to " + fmt(w.a[i]);
                break;
            }
        }
        if (dt >= 5.0) {
            out.pass = false;
            out.detail = std::string(kind_name(kind)) + " took " + fmt(dt) + "s";
        }
        if (!out.pass) break;
    }
    out.seconds = slowest;
    if (out.pass) out.detail = "7 scenarios, slowest " + fmt(slowest) + "s";
    return out;
}

// ---- criteria 6 + 7: gate monotonicity and clip range ---------------------

Outcome criterion_monotone(const std::vector<const GridReport*>& reports) {
    Outcome out{"accepted rewards strictly increase in every training history"};
    auto t0 = Clock::now();
    out.pass = true;
    std::size_t histories = 0;
    for (const GridReport* rep : reports) {
        for (const CellResult& cell : rep->cells) {
            if (cell.status != "ok") continue;
            ++histories;
            double best = -2.0;
            bool first = true;
            for (const EpochRecord& r : cell.result.history) {
                if (!r.accepted) continue;
                if (first) {
                    best = r.reward;
                    first = false;
                    continue;
                }
                if (!(r.reward > best)) {
                    out.pass = false;
                    out.detail = cell.scenario + "/" + cell.config + " seed " +
                                 std::to_string(cell.seed) + ": epoch " +
                                 std::to_string(r.epoch) + " reward " + fmt(r.reward) +
                                 " does not beat " + fmt(best);
                    break;
                }
                best = r.reward;
            }
            if (!out.pass) break;
        }
        if (!out.pass) break;
    }
    out.seconds = since(t0);
    if (out.pass) out.detail = std::to_string(histories) + " histories checked";
    return out;
}

Outcome criterion_clip(const std::vector<const GridReport*>& reports) {
    Outcome out{"every adaptive scale lies in [0.5, 2.0]"};
    auto t0 = Clock::now();
    out.pass = true;
    std::size_t records = 0;
    for (const GridReport* rep : reports) {
        for (const CellResult& cell : rep->cells) {
            if (cell.status != "ok") continue;
            for (const EpochRecord& r : cell.result.history) {
                ++records;
                if (!(r.lambda_a >= 0.5 && r.lambda_a <= 2.0)) {
                    out.pass = false;
                    out.detail = cell.scenario + "/" + cell.config + " seed " +
                                 std::to_string(cell.seed) + ": lambda " +
                                 fmt(r.lambda_a);
                    break;
                }
            }
            if (!out.pass) break;
        }
        if (!out.pass) break;
    }
    out.seconds = since(t0);
    if (out.pass) out.detail = std::to_string(records) + " epoch records checked";
    return out;
}

// ---- criterion 8: headline benchmark margins -------------------------------

Outcome criterion_benchmark(const GridReport& rep, double seconds) {
    Outcome out{"benchmark: mean error < 0.1 and 10x below both baselines (S1-S4)"};
    out.limit = 60.0;
    out.seconds = seconds;
    out.pass = true;

    for (const CellResult& cell : rep.cells) {
        if (cell.status != "ok") {
            out.pass = false;
            out.detail = cell.scenario + "/" + cell.config + " seed " +
                         std::to_string(cell.seed) + ": " + cell.status;
            return out;
        }
    }
    auto mean_of = [&](const std::string& sc, const std::string& cfg) {
        for (const GridRow& r : rep.rows)
            if (r.scenario == sc && r.config == cfg) return r.mean_error;
        return std::nan("");
    };
    for (const char* sc : {"S1", "S2", "S3", "S4"}) {
        double jgd = mean_of(sc, "jgd");
        double simple = mean_of(sc, "simple");
        double hebbian = mean_of(sc, "hebbian");
        if (!(jgd < 0.1)) {
            out.pass = false;
            out.detail = std::string(sc) + ": mean " + fmt(jgd) + " >= 0.1";
            return out;
        }
        if (!(10.0 * jgd < simple) || !(10.0 * jgd < hebbian)) {
            out.pass = false;
            out.detail = std::string(sc) + ": margin jgd " + fmt(jgd) + " vs simple " +
                         fmt(simple) + ", hebbian " + fmt(hebbian);
            return out;
        }
    }
    out.detail = "4 scenarios x 4 learners x 10 seeds";
    return out;
}

// ---- criterion 9: complete ablation grid -----------------------------------

Outcome criterion_ablation(GridReport& rep_out) {
    Outcome out{"ablation grid: 91 complete rows, structure beats its removal"};
    out.limit = 300.0;
    auto t0 = Clock::now();
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    rep_out = run_ablation(all_scenario_kinds(), named_ablation_configs(), seeds);
    out.seconds = since(t0);

    if (rep_out.rows.size() != 91) {
        out.pass = false;
        out.detail = "rows " + std::to_string(rep_out.rows.size()) + " != 91";
        return out;
    }
    const std::size_t expect_cells = 7 * 13 * seeds.size();
    if (rep_out.cells.size() != expect_cells) {
        out.pass = false;
        out.detail = "cells " + std::to_string(rep_out.cells.size()) + " != " +
                     std::to_string(expect_cells);
        return out;
    }
    std::size_t not_ok = 0;
    for (const CellResult& c : rep_out.cells)
        if (c.status != "ok") ++not_ok;
    if (not_ok > 0) {
        out.pass = false;
        out.detail = std::to_string(not_ok) + " cells failed (explicit in the grid)";
        return out;
    }

    auto mean_of = [&](const std::string& sc, const std::string& cfg) {
        for (const GridRow& r : rep_out.rows)
            if (r.scenario == sc && r.config == cfg) return r.mean_error;
        return std::nan("");
    };
    out.pass = true;
    for (const char* sc : {"S1", "S2", "S3", "S4"}) {
        double full = mean_of(sc, "Full J-GD");
        double simple = mean_of(sc, "Simple FCM");
        if (!(simple > full)) {
            out.pass = false;
            out.detail = std::string(sc) + ": Simple FCM " + fmt(simple) +
                         " not above Full J-GD " + fmt(full);
            return out;
        }
    }
    out.detail = "91 rows, 455 cells, all ok";
    return out;
}

// ---- criterion 10: bitwise reproducibility ---------------------------------

Outcome criterion_reproducible(const GridReport& first) {
    Outcome out{"rerunning the benchmark reproduces the grid byte for byte"};
    auto t0 = Clock::now();
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
    GridReport again = run_comparison(
        {ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3, ScenarioKind::S4},
        {Learner::Jgd, Learner::Gd, Learner::Simple, Learner::Hebbian}, seeds);
    out.seconds = since(t0);
    std::string a = grid_csv(first);
    std::string b = grid_csv(again);
    out.pass = a == b;
    out.detail = out.pass ? std::to_string(a.size()) + " bytes identical"
                          : "grids differ";
    return out;
}

}  // namespace

int main() {
    std::vector<Outcome> results(10);
    auto guard = [&](int idx, auto&& fn) {
        try {
            results[idx] = fn();
        } catch (const std::exception& e) {
            results[idx].pass = false;
            results[idx].detail = std::string("exception: ") + e.what();
        }
        if (results[idx].title.empty()) {
            static const char* kTitles[10] = {
                "reverse-mode gradient matches central differences",
                "fixed-point Jacobian matches finite differences",
                "Newton agrees with forward iteration",
                "denoising contracts within the certified rate",
                "masked weights stay exactly zero",
                "accepted rewards strictly increase",
                "adaptive scales stay in [0.5, 2.0]",
                "benchmark margins hold",
                "ablation grid is complete and ordered",
                "benchmark rerun is byte-identical",
            };
            results[idx].title = kTitles[idx];
        }
    };

    guard(0, criterion_gradient);
    guard(1, criterion_jacobian);
    guard(2, criterion_newton);
    guard(3, criterion_denoising);
    guard(4, criterion_mask);

    // the comparison grid feeds criteria 6, 7, 8, and 10
    GridReport comparison;
    double comparison_seconds = 0.0;
    bool comparison_ok = false;
    try {
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
        auto t0 = Clock::now();
        comparison = run_comparison(
            {ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3, ScenarioKind::S4},
            {Learner::Jgd, Learner::Gd, Learner::Simple, Learner::Hebbian}, seeds);
        comparison_seconds = since(t0);
        comparison_ok = true;
    } catch (const std::exception& e) {
        for (int idx : {5, 6, 7, 9}) {
            results[idx].pass = false;
            results[idx].detail = std::string("benchmark failed: ") + e.what();
        }
    }

    GridReport ablation;
    guard(8, [&] { return criterion_ablation(ablation); });

    if (comparison_ok) {
        std::vector<const GridReport*> reports = {&comparison};
        if (!ablation.cells.empty()) reports.push_back(&ablation);
        guard(5, [&] { return criterion_monotone(reports); });
        guard(6, [&] { return criterion_clip(reports); });
        guard(7, [&] { return criterion_benchmark(comparison, comparison_seconds); });
        guard(9, [&] { return criterion_reproducible(comparison); });
    }

    int failures = 0;
    for (int i = 0; i < 10; ++i) {
        const Outcome& r = results[i];
        bool pass = r.pass && (r.limit == 0.0 || r.seconds < r.limit);
        if (!pass) ++failures;
        std::printf("[%2d] %s  %s", i + 1, pass ? "PASS" : "FAIL", r.title.c_str());
        if (!r.detail.empty()) std::printf("  (%s)", r.detail.c_str());
        std::printf("  [%.2fs", r.seconds);
        if (r.limit > 0.0) std::printf(" / %.0fs", r.limit);
        std::printf("]\n");
        if (r.pass && r.limit > 0.0 && r.seconds >= r.limit)
            std::printf("     over budget\n");
    }
    std::printf("acceptance: %d/10 criteria passed\n", 10 - failures);
    return failures;
}
