#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "boxdist/extended_real.hpp"
#include "boxdist/linalg.hpp"
#include "boxdist/sdp.hpp"

// Distinguishability measures between density operators.  All entropic
// quantities are in bits (base-2 logarithms).  Support violations yield
// +infinity through ExtendedReal rather than NaN.

namespace boxdist {

inline constexpr double kSupportLeakTol = 1e-9;  // tolerated mass outside a support
inline constexpr double kZeroOptTol = 1e-11;     // optima below this count as exact zero

inline double trace_distance(const HermitianOperator& rho, const HermitianOperator& sigma) {
  return 0.5 * trace_norm(HermitianOperator(rho.mat - sigma.mat, rho.dims, 1e-7));
}

// Squared-overlap convention: F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1^2,
// equal to 1 exactly when the states coincide.
inline double fidelity(const HermitianOperator& rho, const HermitianOperator& sigma) {
  const auto sqrt_fn = [](double x) { return std::sqrt(std::max(0.0, x)); };
  const HermitianOperator sr = spectral_fn(rho, sqrt_fn);
  const HermitianOperator ss = spectral_fn(sigma, sqrt_fn);
  const Eigen::JacobiSVD<ComplexMatrix> svd(sr.mat * ss.mat);
  const double root = svd.singularValues().sum();
  return root * root;
}

// Mass of rho outside the support of sigma.
inline double support_leak(const HermitianOperator& rho, const HermitianOperator& sigma,
                           double rank_tol = kRankTol) {
  const HermitianOperator proj = support_projector(sigma, rank_tol);
  return real_trace(rho.mat * (identity_matrix(rho.dim()) - proj.mat));
}

// -log2 trace(P_rho sigma) with P_rho the support projector of rho.
inline ExtendedReal state_dmin(const HermitianOperator& rho, const HermitianOperator& sigma) {
  const HermitianOperator proj = support_projector(rho);
  const double overlap = real_trace(proj.mat * sigma.mat);
  if (overlap <= kZeroOptTol) return ExtendedReal::pos_inf();
  return -std::log2(overlap);
}

// log2 of the smallest lambda with rho <= lambda sigma.
inline ExtendedReal state_dmax(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (support_leak(rho, sigma) > kSupportLeakTol) return ExtendedReal::pos_inf();
  const HermitianOperator inv_sqrt =
      spectral_fn(sigma, [](double x) { return 1.0 / std::sqrt(x); }, true);
  const HermitianOperator m(inv_sqrt.mat * rho.mat * inv_sqrt.mat, rho.dims, 1e-6);
  const double lam = std::max(eig_hermitian(m).values.maxCoeff(), 0.0);
  if (lam <= 0.0) return ExtendedReal::neg_inf();
  return std::log2(lam);
}

// Umegaki divergence trace(rho (log2 rho - log2 sigma)).
inline ExtendedReal rel_entropy(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (support_leak(rho, sigma) > kSupportLeakTol) return ExtendedReal::pos_inf();
  const auto log2_fn = [](double x) { return std::log2(x); };
  const HermitianOperator lr = spectral_fn(rho, log2_fn, true);
  const HermitianOperator ls = spectral_fn(sigma, log2_fn, true);
  return herm_inner(rho.mat, lr.mat) - herm_inner(rho.mat, ls.mat);
}

// Variance of the log-likelihood ratio under rho, in bits^2:
//   trace(rho (log2 rho - log2 sigma)^2) - D(rho||sigma)^2.
inline ExtendedReal rel_ent_variance(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (support_leak(rho, sigma) > kSupportLeakTol) return ExtendedReal::pos_inf();
  const auto log2_fn = [](double x) { return std::log2(x); };
  const HermitianOperator lr = spectral_fn(rho, log2_fn, true);
  const HermitianOperator ls = spectral_fn(sigma, log2_fn, true);
  const ComplexMatrix delta = lr.mat - ls.mat;
  const double mean = herm_inner(rho.mat, delta);
  const double second = real_trace(rho.mat * delta * delta);
  return second - mean * mean;
}

// Petz--Renyi divergence (1/(alpha-1)) log2 trace(rho^alpha sigma^(1-alpha)).
inline ExtendedReal renyi_petz(double alpha, const HermitianOperator& rho,
                               const HermitianOperator& sigma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("Renyi order must be positive");
  if (alpha == 1.0) return rel_entropy(rho, sigma);
  if (alpha > 1.0 && support_leak(rho, sigma) > kSupportLeakTol) return ExtendedReal::pos_inf();
  const HermitianOperator ra =
      spectral_fn(rho, [&](double x) { return std::pow(std::max(x, 0.0), alpha); }, true);
  const HermitianOperator sb =
      spectral_fn(sigma, [&](double x) { return std::pow(x, 1.0 - alpha); }, true);
  const double t = herm_inner(ra.mat, sb.mat);
  if (t <= kZeroOptTol) return ExtendedReal::pos_inf();  // orthogonal supports
  return std::log2(t) / (alpha - 1.0);
}

// Sandwiched Renyi divergence
//   (1/(alpha-1)) log2 trace( (sigma^((1-alpha)/2alpha) rho sigma^((1-alpha)/2alpha))^alpha ).
inline ExtendedReal renyi_sandwiched(double alpha, const HermitianOperator& rho,
                                     const HermitianOperator& sigma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("Renyi order must be positive");
  if (alpha == 1.0) return rel_entropy(rho, sigma);
  if (alpha > 1.0 && support_leak(rho, sigma) > kSupportLeakTol) return ExtendedReal::pos_inf();
  const double p = (1.0 - alpha) / (2.0 * alpha);
  const HermitianOperator sp = spectral_fn(sigma, [&](double x) { return std::pow(x, p); }, true);
  const HermitianOperator x(sp.mat * rho.mat * sp.mat, rho.dims, 1e-6);
  const HermitianOperator xa =
      spectral_fn(x, [&](double v) { return std::pow(std::max(v, 0.0), alpha); }, true);
  const double t = real_trace(xa.mat);
  if (t <= kZeroOptTol) return ExtendedReal::pos_inf();
  return std::log2(t) / (alpha - 1.0);
}

// Result of an SDP-backed divergence evaluation.
struct SmoothResult {
  ExtendedReal value;
  sdp::Solution solution;          // populated when an SDP was solved
  bool solver_used = false;
  bool threshold_inferred = false; // +inf concluded from an optimum below kZeroOptTol
};

// Hypothesis-testing divergence -log2 min{ tr(Omega sigma) :
//   0 <= Omega <= I, tr(Omega rho) >= 1 - eps }.
inline SmoothResult state_dmin_eps(const HermitianOperator& rho, const HermitianOperator& sigma,
                                   double eps, const sdp::SolverSettings& settings = {}) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("smoothing parameter must lie in [0, 1)");
  SmoothResult out;
  if (eps == 0.0) {  // optimum is the support projector of rho
    out.value = state_dmin(rho, sigma);
    out.threshold_inferred = out.value.is_pos_inf();
    return out;
  }
  const int d = rho.dim();
  sdp::ConicProgram prog;
  const int omega = prog.add_psd_hermitian(d, "test_op");
  const ComplexMatrix rho_m = rho.mat, sigma_m = sigma.mat;
  prog.minimize([=](const sdp::Point& p) { return sdp::scalar_matrix(herm_inner(p[omega], sigma_m)); });
  prog.add_psd("cap", [=](const sdp::Point& p) {
    return (identity_matrix(d) - p[omega]).eval();
  });
  prog.add_psd("hit", [=](const sdp::Point& p) {
    return sdp::scalar_matrix(herm_inner(p[omega], rho_m) - (1.0 - eps));
  });
  out.solution = sdp::solve(prog, settings);
  out.solver_used = true;
  if (!out.solution.objective.is_finite()) {
    out.value = ExtendedReal::pos_inf();
    return out;
  }
  const double beta = out.solution.objective.value;
  if (beta <= kZeroOptTol) {
    out.value = ExtendedReal::pos_inf();
    out.threshold_inferred = true;
  } else {
    out.value = -std::log2(beta);
  }
  return out;
}

// Smoothed max-divergence log2 min{ lambda : exists state Y within trace
// distance eps of rho with Y <= lambda sigma }.
inline SmoothResult state_dmax_eps(const HermitianOperator& rho, const HermitianOperator& sigma,
                                   double eps, const sdp::SolverSettings& settings = {}) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("smoothing parameter must lie in [0, 1)");
  SmoothResult out;
  if (eps == 0.0) {
    out.value = state_dmax(rho, sigma);
    return out;
  }
  const int d = rho.dim();
  sdp::ConicProgram prog;
  const int lam = prog.add_free_scalar("lambda");
  const int y = prog.add_psd_hermitian(d, "smoothed");
  const int z = prog.add_psd_hermitian(d, "excess");
  const ComplexMatrix rho_m = rho.mat, sigma_m = sigma.mat;
  prog.minimize([=](const sdp::Point& p) { return p[lam]; });
  prog.add_equality("unit_trace", [=](const sdp::Point& p) {
    return sdp::scalar_matrix(real_trace(p[y]) - 1.0);
  });
  prog.add_psd("cover", [=](const sdp::Point& p) {
    return (sdp::scalar_of(p[lam]) * sigma_m - p[y]).eval();
  });
  prog.add_psd("budget", [=](const sdp::Point& p) {
    return sdp::scalar_matrix(eps - real_trace(p[z]));
  });
  prog.add_psd("dominate", [=](const sdp::Point& p) {
    return (p[z] - rho_m + p[y]).eval();
  });
  out.solution = sdp::solve(prog, settings);
  out.solver_used = true;
  if (!out.solution.objective.is_finite()) {
    out.value = ExtendedReal::pos_inf();  // no smoothing fits under lambda sigma
    return out;
  }
  out.value = std::log2(std::max(out.solution.objective.value, 1e-300));
  return out;
}

}  // namespace boxdist
