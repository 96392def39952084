// Independent reference implementations used to freeze expected values in tests.
// These deliberately use different methods than the library (bisection instead of
// Newton, finite differences instead of reverse accumulation, Jacobi eigenvalues
// instead of power iteration) so agreement is evidence, not tautology.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "afcm/dynamics.hpp"
#include "afcm/learning.hpp"
#include "afcm/linalg.hpp"
#include "afcm/scenarios.hpp"
#include "afcm/solver.hpp"

namespace oracle {

// Root of f on [lo, hi] by bisection; requires a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-14) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    double fmid = f(mid);
    if ((flo <= 0.0) == (fmid <= 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Loss 0.5*||target - H_T||^2 after T forward steps, as a function of W.
inline double unroll_loss(const afcm::Mat& w, const afcm::WeightSystem& proto,
                          const afcm::Vec& h0, const afcm::Vec& target, int steps,
                          const afcm::DynamicsConfig& dyn) {
  afcm::WeightSystem ws = proto.with_weights(w);
  afcm::Vec h = afcm::forward_unroll(h0, ws, dyn, steps);
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    double d = target[i] - h[i];
    s += d * d;
  }
  return 0.5 * s;
}

// Central-difference gradient of the unroll loss with respect to every W entry.
inline afcm::Mat fd_unroll_gradient(const afcm::WeightSystem& ws, const afcm::Vec& h0,
                                    const afcm::Vec& target, int steps,
                                    const afcm::DynamicsConfig& dyn,
                                    double h = 1e-5) {
  const afcm::Mat& w0 = ws.weights();
  afcm::Mat g(w0.rows, w0.cols);
  for (std::size_t i = 0; i < w0.rows; ++i) {
    for (std::size_t j = 0; j < w0.cols; ++j) {
      afcm::Mat wp = w0;
      afcm::Mat wm = w0;
      wp(i, j) += h;
      wm(i, j) -= h;
      g(i, j) = (unroll_loss(wp, ws, h0, target, steps, dyn) -
                 unroll_loss(wm, ws, h0, target, steps, dyn)) /
                (2.0 * h);
    }
  }
  return g;
}

// Central-difference Jacobian of the fixed-point residual with respect to h.
inline afcm::Mat fd_residual_jacobian(const afcm::Vec& h, const afcm::WeightSystem& ws,
                                      const afcm::DynamicsConfig& dyn,
                                      double eps = 1e-6) {
  const std::size_t n = h.size();
  afcm::Mat j(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    afcm::Vec hp = h;
    afcm::Vec hm = h;
    hp[i] += eps;
    hm[i] -= eps;
    afcm::Vec fp = afcm::residual(hp, ws, dyn);
    afcm::Vec fm = afcm::residual(hm, ws, dyn);
    for (std::size_t k = 0; k < n; ++k) j(i, k) = (fp[k] - fm[k]) / (2.0 * eps);
  }
  return j;
}

// Largest singular value of A via cyclic Jacobi diagonalization of A^T A.
inline double jacobi_spectral_norm(const afcm::Mat& a) {
  const std::size_t n = a.cols;
  afcm::Mat s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows; ++k) acc += a(k, i) * a(k, j);
      s(i, j) = acc;
    }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(s(p, q)) < 1e-300) continue;
        double theta = 0.5 * std::atan2(2.0 * s(p, q), s(q, q) - s(p, p));
        double c = std::cos(theta);
        double t = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
          double skp = s(k, p);
          double skq = s(k, q);
          s(k, p) = c * skp - t * skq;
          s(k, q) = t * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double spk = s(p, k);
          double sqk = s(q, k);
          s(p, k) = c * spk - t * sqk;
          s(q, k) = t * spk + c * sqk;
        }
      }
    }
  }
  double lmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) lmax = std::max(lmax, s(i, i));
  return std::sqrt(std::max(0.0, lmax));
}

// Seeded dense random weights with zero diagonal, entries uniform in [lo, hi].
inline afcm::Mat rand_weights(afcm::DetRng& rng, std::size_t n, double lo, double hi) {
  afcm::Mat w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w(i, j) = rng.uniform(lo, hi);
  return w;
}

inline afcm::Vec rand_state(afcm::DetRng& rng, std::size_t n, double lo, double hi) {
  afcm::Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace oracle
