#include <cmath>

#include "afcm/errors.hpp"
#include "afcm/scenarios.hpp"
#include "afcm/solver.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace afcm;

namespace {

DynamicsConfig plain_map() {
    DynamicsConfig d;
    d.use_residual = false;
    d.alpha = 1.0;
    return d;
}

}  // namespace

TEST_CASE("residual vanishes at the scalar fixed point") {
    double x_star = oracle::bisect(
        [](double x) { return 1.0 / (1.0 + std::exp(-x)) - x; }, 0.5, 1.0);
    WeightSystem ws{Mat(1, 1)};
    Vec f = residual({x_star}, ws);
    CHECK(std::abs(f[0]) < 1e-12);
    // away from the fixed point it does not
    CHECK(std::abs(residual({0.2}, ws)[0]) > 1e-2);
}

TEST_CASE("jacobian matches finite differences") {
    for (std::size_t n : {1u, 3u, 5u, 8u}) {
        for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
            DetRng rng(seed * 977 + n);
            Mat w = oracle::rand_weights(rng, n, -1.0, 1.0);
            WeightSystem ws(w);
            Vec h = oracle::rand_state(rng, n, 0.05, 0.95);

            DynamicsConfig dyn;
            Mat j = jacobian(h, ws, dyn);
            Mat fd = oracle::fd_residual_jacobian(h, ws, dyn);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k)
                    CHECK(std::abs(j(i, k) - fd(i, k)) < 1e-6);
        }
    }
}

TEST_CASE("jacobian respects anchor and activation switches") {
    DetRng rng(42);
    Mat w = oracle::rand_weights(rng, 4, -0.8, 0.8);
    WeightSystem ws(w);
    Vec h = oracle::rand_state(rng, 4, -0.4, 0.4);

    DynamicsConfig na;
    na.use_anchor = false;
    Mat fd = oracle::fd_residual_jacobian(h, ws, na);
    Mat j = jacobian(h, ws, na);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(j(i, k) - fd(i, k)) < 1e-6);

    DynamicsConfig th;
    th.activation = Activation::Tanh;
    fd = oracle::fd_residual_jacobian(h, ws, th);
    j = jacobian(h, ws, th);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(j(i, k) - fd(i, k)) < 1e-6);
}

TEST_CASE("scalar jacobian frozen value") {
    // at the n=1 fixed point: J = s'(x*) - 1 = x*(1 - x*) - 1
    double x_star = oracle::bisect(
        [](double x) { return 1.0 / (1.0 + std::exp(-x)) - x; }, 0.5, 1.0);
    WeightSystem ws{Mat(1, 1)};
    Mat j = jacobian({x_star}, ws);
    CHECK(j(0, 0) == doctest::Approx(x_star * (1.0 - x_star) - 1.0).epsilon(1e-12));
    CHECK(j(0, 0) == doctest::Approx(-0.7753).epsilon(1e-3));
}

TEST_CASE("newton agrees with long forward iteration on contractive systems") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ScenarioSpec spec = gen_stress(ScenarioKind::S3, seed);
        WeightSystem ws(spec.w_initial);

        FixedPointResult fp = newton_fixed_point(spec.h0, ws, {}, spec.dynamics);
        CHECK(fp.method == SolveMethod::Newton);
        CHECK(fp.iters <= 20);
        CHECK(fp.residual_norm < 1e-8);

        IterateResult it =
            iterate_attractor(spec.h0, ws, spec.dynamics, 20000, 1e-12);
        REQUIRE(it.converged);
        CHECK(norm2_diff(fp.h_star, it.state) < 1e-6);
    }
}

TEST_CASE("newton returns immediately when already solved") {
    ScenarioSpec spec = gen_stress(ScenarioKind::S3, 4);
    WeightSystem ws(spec.w_initial);
    FixedPointResult first = newton_fixed_point(spec.h0, ws, {}, spec.dynamics);
    NewtonConfig cfg;
    FixedPointResult again = newton_fixed_point(first.h_star, ws, cfg, spec.dynamics);
    CHECK(again.iters == 0);
    CHECK(again.h_star == first.h_star);
}

TEST_CASE("newton budget exhaustion falls back to plain iteration") {
    ScenarioSpec spec = gen_stress(ScenarioKind::S3, 6);
    WeightSystem ws(spec.w_initial);
    NewtonConfig cfg;
    cfg.max_iters = 1;
    cfg.epsilon = 1e-12;
    FixedPointResult fp = newton_fixed_point(spec.h0, ws, cfg, spec.dynamics);
    CHECK(fp.residual_norm < 1e-12);
    // one Newton iteration cannot certify 1e-12 from this start
    CHECK(fp.method == SolveMethod::FallbackIteration);
}

TEST_CASE("newton reports its best residual when both paths fail") {
    ScenarioSpec spec = gen_stress(ScenarioKind::S3, 3);
    WeightSystem ws(spec.w_initial);
    NewtonConfig cfg;
    cfg.max_iters = 1;
    cfg.fallback_steps = 1;
    cfg.epsilon = 1e-14;
    Vec far(spec.n, 0.02);
    double initial = norm2(residual(far, ws, spec.dynamics));
    try {
        newton_fixed_point(far, ws, cfg, spec.dynamics);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(std::isfinite(e.best_residual));
        CHECK(e.best_residual > 0.0);
        CHECK(e.best_residual <= initial + 1e-12);
    }
}

TEST_CASE("newton config validation") {
    NewtonConfig cfg;
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.epsilon = 1e-8;
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.max_iters = 10;
    cfg.damping = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("newton solves the unanchored map when asked") {
    DetRng rng(7);
    Mat w = oracle::rand_weights(rng, 4, -0.3, 0.3);
    WeightSystem ws(w);
    DynamicsConfig na = plain_map();
    na.use_anchor = false;

    FixedPointResult fp = newton_fixed_point(Vec(4, 0.5), ws, {}, na);
    CHECK(norm2(residual(fp.h_star, ws, na)) < 1e-8);

    FixedPointResult anchored = newton_fixed_point(Vec(4, 0.5), ws, {}, plain_map());
    CHECK(norm2_diff(fp.h_star, anchored.h_star) > 1e-3);
}

TEST_CASE("contraction certificate on closed-form cases") {
    WeightSystem zero{Mat(4, 4)};
    ContractionCertificate c = contraction_certificate(zero);
    CHECK(c.norm_converged);
    CHECK(c.operator_norm == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c.bound == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(c.contractive);

    // W = 3I gives ||W + I|| = 4 and bound exactly 1: not strictly below 1
    Mat three = Mat::identity(5);
    for (double& v : three.a) v *= 3.0;
    ContractionCertificate edge = contraction_certificate(WeightSystem{three});
    CHECK(edge.operator_norm == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(edge.bound == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(edge.contractive);
}

TEST_CASE("contraction certificate matches the Jacobi spectral norm") {
    for (std::uint64_t seed : {10u, 11u, 12u}) {
        DetRng rng(seed);
        Mat w = oracle::rand_weights(rng, 10, -0.5, 0.5);
        Mat a = w;
        for (std::size_t i = 0; i < 10; ++i) a(i, i) += 1.0;
        double ref = oracle::jacobi_spectral_norm(a);
        ContractionCertificate c = contraction_certificate(WeightSystem{w});
        CHECK(c.norm_converged);
        CHECK(c.operator_norm == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("contraction bound scales linearly with steepness") {
    WeightSystem zero{Mat(3, 3)};
    ContractionCertificate one = contraction_certificate(zero, 1.0);
    ContractionCertificate two = contraction_certificate(zero, 2.0);
    CHECK(two.bound == doctest::Approx(2.0 * one.bound).epsilon(1e-14));
    CHECK(contraction_certificate(zero, 3.9).contractive);
    CHECK_FALSE(contraction_certificate(zero, 4.0).contractive);
}

TEST_CASE("denoising trace contracts within the certified rate") {
    ScenarioSpec spec = gen_stress(ScenarioKind::S3, 5);
    WeightSystem ws(spec.w_initial);
    ContractionCertificate cert =
        contraction_certificate(ws, spec.dynamics.steepness);
    REQUIRE(cert.contractive);
    REQUIRE(spec.noise.has_value());

    std::vector<double> d =
        denoising_trace(spec.h_target, *spec.noise, ws, spec.dynamics, 50);
    REQUIRE(d.size() == 51);
    CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-9));
    for (std::size_t t = 0; t + 1 < d.size(); ++t)
        CHECK(d[t + 1] <= cert.rate * d[t] + 1e-12);
    CHECK(d[50] < 1e-3 * d[0]);
}

TEST_CASE("denoising trace demands a genuine fixed point") {
    ScenarioSpec spec = gen_stress(ScenarioKind::S3, 5);
    WeightSystem ws(spec.w_initial);
    Vec drifted = spec.h_target;
    drifted[0] += 0.3;
    CHECK_THROWS_AS(denoising_trace(drifted, *spec.noise, ws, spec.dynamics, 10),
                    PreconditionError);
}

TEST_CASE("zero noise stays at the fixed point") {
    ScenarioSpec spec = gen_stress(ScenarioKind::S3, 8);
    WeightSystem ws(spec.w_initial);
    Vec none(spec.n, 0.0);
    std::vector<double> d = denoising_trace(spec.h_target, none, ws, spec.dynamics, 20);
    for (double v : d) CHECK(v < 1e-7);
}
