#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "boxdist/qobjects.hpp"
#include "boxdist/rng.hpp"
#include "boxdist/state_div.hpp"

namespace boxdist {

// ---------------------------------------------------------------------------
// Divergence selection
// ---------------------------------------------------------------------------

// Which divergence an evaluator should lift from states to channels.  All are
// maximized over inputs except fidelity, which is minimized.
struct DivergenceSelector {
  enum class Kind { relative, petz, sandwiched, fidelity, dmin, dmax, trace, diamond };
  Kind kind = Kind::relative;
  double alpha = 0.0;

  static DivergenceSelector relative() { return {Kind::relative, 0.0}; }
  static DivergenceSelector petz(double a) { return {Kind::petz, a}; }
  static DivergenceSelector sandwiched(double a) { return {Kind::sandwiched, a}; }
  static DivergenceSelector fidelity() { return {Kind::fidelity, 0.0}; }
  static DivergenceSelector dmin() { return {Kind::dmin, 0.0}; }
  static DivergenceSelector dmax() { return {Kind::dmax, 0.0}; }
  static DivergenceSelector trace() { return {Kind::trace, 0.0}; }
  static DivergenceSelector diamond() { return {Kind::diamond, 0.0}; }

  bool minimizing() const { return kind == Kind::fidelity; }

  std::string str() const {
    switch (kind) {
      case Kind::relative: return "relative";
      case Kind::petz: return "petz(" + std::to_string(alpha) + ")";
      case Kind::sandwiched: return "sandwiched(" + std::to_string(alpha) + ")";
      case Kind::fidelity: return "fidelity";
      case Kind::dmin: return "dmin";
      case Kind::dmax: return "dmax";
      case Kind::trace: return "trace";
      case Kind::diamond: return "diamond";
    }
    return "?";
  }
};

inline ExtendedReal state_divergence(const DivergenceSelector& div, const HermitianOperator& rho,
                                     const HermitianOperator& sigma) {
  using K = DivergenceSelector::Kind;
  switch (div.kind) {
    case K::relative: return rel_entropy(rho, sigma);
    case K::petz: return renyi_petz(div.alpha, rho, sigma);
    case K::sandwiched: return renyi_sandwiched(div.alpha, rho, sigma);
    case K::fidelity: return ExtendedReal(fidelity(rho, sigma));
    case K::dmin: return state_dmin(rho, sigma);
    case K::dmax: return state_dmax(rho, sigma);
    case K::trace:
    case K::diamond: return ExtendedReal(trace_distance(rho, sigma));
  }
  throw std::logic_error("unknown divergence selector");
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct DivergenceReport {
  ExtendedReal value;

  // SDP-backed values.
  bool solver_used = false;
  double primal_value = 0.0;  // raw optimum before any log
  double dual_value = 0.0;
  double gap = 0.0;                      // |primal - dual| raw optima
  bool solver_declared_infinite = false; // infinity reported by solver status
  bool threshold_inferred = false;       // infinity inferred from a vanishing / huge optimum
  sdp::Solution primal;
  sdp::Solution dual;

  // Heuristic trace.
  int restarts = 0;
  HermitianOperator best_input;  // density operator of the best input found

  // Smoothing byproducts.
  Channel smoothed;                 // optimal nearby channel (max smoothing)
  HermitianOperator optimal_input;  // optimal program input on (reference, input)
  ComplexMatrix test_operator;      // optimal test on (reference, output) (min smoothing)
};

namespace detail_cd {

// Trace over the trailing factor of an (A, B)-indexed matrix, with no
// Hermiticity bookkeeping so it can run inside solver expressions.
inline ComplexMatrix trace_out_last(const ComplexMatrix& m, int da, int db) {
  ComplexMatrix out = ComplexMatrix::Zero(da, da);
  for (int a = 0; a < da; ++a)
    for (int ap = 0; ap < da; ++ap) {
      Complex acc = 0.0;
      for (int b = 0; b < db; ++b) acc += m(a * db + b, ap * db + b);
      out(a, ap) = acc;
    }
  return out;
}

inline void check_box_dims(const Channel& n, const Channel& m) {
  if (n.in_dim != m.in_dim || n.out_dim != m.out_dim)
    throw std::invalid_argument("the two channels must share input and output dimensions");
}

inline double finite_objective(const sdp::Solution& sol, const char* what) {
  if (!sol.usable())
    throw std::runtime_error(std::string(what) + ": solver failed (status not usable)");
  return sol.objective.as_double();
}

}  // namespace detail_cd

// ---------------------------------------------------------------------------
// Diamond distance
// ---------------------------------------------------------------------------

// Half the diamond norm of the difference, in [0, 1]: the largest bias any
// input state and joint measurement can extract when told one channel or the
// other acted.  Primal and dual programs are assembled independently.
inline DivergenceReport diamond_distance(const Channel& n, const Channel& m,
                                         const sdp::SolverSettings& settings = {}) {
  detail_cd::check_box_dims(n, m);
  const int da = n.in_dim, db = n.out_dim;
  const ComplexMatrix diff = n.choi.mat - m.choi.mat;

  sdp::ConicProgram primal;
  const int rho = primal.add_psd_hermitian(da, "input");
  const int omega = primal.add_psd_hermitian(da * db, "test");
  primal.maximize(
      [omega, diff](const sdp::Point& p) { return sdp::scalar_matrix(herm_inner(p[omega], diff)); });
  primal.add_equality("unit_trace",
                      [rho](const sdp::Point& p) { return sdp::scalar_matrix(p[rho].trace() - 1.0); });
  primal.add_psd("cap", [rho, omega, db](const sdp::Point& p) {
    return (kron(p[rho], identity_matrix(db)) - p[omega]).eval();
  });

  sdp::ConicProgram dual;
  const int mu = dual.add_nonneg_scalar("level");
  const int z = dual.add_psd_hermitian(da * db, "excess");
  dual.minimize([mu](const sdp::Point& p) { return p[mu]; });
  dual.add_psd("dominate", [z, diff](const sdp::Point& p) { return (p[z] - diff).eval(); });
  dual.add_psd("marginal", [mu, z, da, db](const sdp::Point& p) {
    return (sdp::scalar_of(p[mu]).real() * identity_matrix(da) -
            detail_cd::trace_out_last(p[z], da, db))
        .eval();
  });

  DivergenceReport rep;
  rep.solver_used = true;
  rep.primal = sdp::solve(primal, settings);
  rep.dual = sdp::solve(dual, settings);
  rep.primal_value = detail_cd::finite_objective(rep.primal, "diamond distance primal");
  rep.dual_value = detail_cd::finite_objective(rep.dual, "diamond distance dual");
  rep.gap = std::abs(rep.primal_value - rep.dual_value);
  rep.value = std::clamp(0.5 * (rep.primal_value + rep.dual_value), 0.0, 1.0);
  return rep;
}

inline double diamond_value(const Channel& n, const Channel& m,
                            const sdp::SolverSettings& settings = {}) {
  return diamond_distance(n, m, settings).value.as_double();
}

// ---------------------------------------------------------------------------
// Channel max-relative entropy (exact): attained at the maximally entangled
// input, so it reduces to the state quantity of the two Choi states.
// ---------------------------------------------------------------------------

inline ExtendedReal channel_dmax(const ChannelBox& box) {
  return state_dmax(choi_state(box.first), choi_state(box.second));
}

// ---------------------------------------------------------------------------
// Smooth channel min-relative entropy
// ---------------------------------------------------------------------------

// -log2 of the smallest false-alarm weight Tr[Omega Gamma^M] any input/test
// pair can reach while detecting the first channel with probability >= 1-eps.
// eps = 0 gives the (non-smoothed) channel min-relative entropy.
inline DivergenceReport channel_dmin_eps(const ChannelBox& box, double eps,
                                         const sdp::SolverSettings& settings = {}) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("smoothing parameter must lie in [0,1)");
  const int da = box.in_dim(), db = box.out_dim();
  const ComplexMatrix gn = box.first.choi.mat;
  const ComplexMatrix gm = box.second.choi.mat;

  DivergenceReport rep;
  ComplexMatrix rho_opt, omega_opt;

  if (eps == 0.0) {
    // At zero smoothing the detection constraint Tr[Omega Gamma^N] >= 1 sits
    // exactly on the boundary of what a capped test can reach, so the naive
    // program has an empty interior and interior-point iterations stall with
    // a sizable gap.  The constraint pins Omega to rho (x) I minus a
    // correction supported on ker(Gamma^N); optimizing over that face
    // directly restores strict feasibility on both sides.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gn);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("min-relative entropy: eigendecomposition failed");
    const double top = std::max(1.0, es.eigenvalues().maxCoeff());
    int kernel_dim = 0;
    while (kernel_dim < da * db && es.eigenvalues()(kernel_dim) <= 1e-9 * top) ++kernel_dim;
    const ComplexMatrix m_marg = detail_cd::trace_out_last(gm, da, db);

    if (kernel_dim == 0) {
      // Full-support first member: the test must equal rho (x) I, so the
      // false-alarm weight is the smallest eigenvalue of the second member's
      // input marginal (1 for a trace-preserving channel).
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> ms(m_marg);
      const double beta = std::max(ms.eigenvalues()(0), 1e-300);
      rep.primal_value = rep.dual_value = beta;
      rep.gap = 0.0;
      rep.value = std::max(0.0, -std::log2(beta));
      rho_opt = ms.eigenvectors().col(0) * ms.eigenvectors().col(0).adjoint();
      omega_opt = kron(rho_opt, identity_matrix(db));
    } else {
      const ComplexMatrix q = es.eigenvectors().leftCols(kernel_dim);
      ComplexMatrix g = q.adjoint() * gm * q;
      g = 0.5 * (g + g.adjoint()).eval();

      sdp::ConicProgram primal;
      const int rho = primal.add_psd_hermitian(da, "input");
      const int delta = primal.add_psd_hermitian(kernel_dim, "kernel_weight");
      primal.minimize([rho, delta, m_marg, g](const sdp::Point& p) {
        return sdp::scalar_matrix(herm_inner(p[rho], m_marg) - herm_inner(p[delta], g));
      });
      primal.add_equality("unit_trace", [rho](const sdp::Point& p) {
        return sdp::scalar_matrix(p[rho].trace() - 1.0);
      });
      primal.add_psd("nonneg_test", [rho, delta, q, db](const sdp::Point& p) {
        return (kron(p[rho], identity_matrix(db)) - q * p[delta] * q.adjoint()).eval();
      });

      sdp::ConicProgram dual;
      const int w = dual.add_psd_hermitian(da * db, "witness");
      const int nu = dual.add_free_hermitian(1, "level");
      dual.maximize([nu](const sdp::Point& p) { return p[nu]; });
      dual.add_psd("margin", [w, nu, m_marg, da, db](const sdp::Point& p) {
        return (m_marg - sdp::scalar_of(p[nu]).real() * identity_matrix(da) -
                detail_cd::trace_out_last(p[w], da, db))
            .eval();
      });
      dual.add_psd("kernel_dominate", [w, q, g](const sdp::Point& p) {
        return (q.adjoint() * p[w] * q - g).eval();
      });

      rep.solver_used = true;
      rep.primal = sdp::solve(primal, settings);
      rep.dual = sdp::solve(dual, settings);
      rep.primal_value =
          detail_cd::finite_objective(rep.primal, "min-relative entropy reduced primal");
      rep.dual_value = detail_cd::finite_objective(rep.dual, "min-relative entropy reduced dual");
      rep.gap = std::abs(rep.primal_value - rep.dual_value);

      const double beta = std::max(0.0, 0.5 * (rep.primal_value + rep.dual_value));
      if (beta <= 1e-9) {
        rep.threshold_inferred = true;
        rep.value = ExtendedReal::pos_inf();
        return rep;
      }
      rep.value = -std::log2(beta);
      rho_opt = rep.primal.var(rho);
      omega_opt = kron(rho_opt, identity_matrix(db)) -
                  q * rep.primal.var(delta) * q.adjoint();
    }
  } else {
    sdp::ConicProgram primal;
    const int rho = primal.add_psd_hermitian(da, "input");
    const int omega = primal.add_psd_hermitian(da * db, "test");
    primal.minimize(
        [omega, gm](const sdp::Point& p) { return sdp::scalar_matrix(herm_inner(p[omega], gm)); });
    primal.add_equality("unit_trace", [rho](const sdp::Point& p) {
      return sdp::scalar_matrix(p[rho].trace() - 1.0);
    });
    primal.add_psd("cap", [rho, omega, db](const sdp::Point& p) {
      return (kron(p[rho], identity_matrix(db)) - p[omega]).eval();
    });
    primal.add_psd("hit", [omega, gn, eps](const sdp::Point& p) {
      return sdp::scalar_matrix(herm_inner(p[omega], gn) - (1.0 - eps));
    });

    sdp::ConicProgram dual;
    const int lam = dual.add_nonneg_scalar("marginal_level");
    const int mu = dual.add_nonneg_scalar("hit_weight");
    const int y = dual.add_psd_hermitian(da * db, "slack");
    dual.maximize([lam, mu, eps](const sdp::Point& p) {
      return sdp::scalar_matrix((1.0 - eps) * sdp::scalar_of(p[mu]) - sdp::scalar_of(p[lam]));
    });
    dual.add_psd("dominated", [mu, y, gn, gm](const sdp::Point& p) {
      return (gm + p[y] - sdp::scalar_of(p[mu]).real() * gn).eval();
    });
    dual.add_psd("marginal_cap", [lam, y, da, db](const sdp::Point& p) {
      return (sdp::scalar_of(p[lam]).real() * identity_matrix(da) -
              detail_cd::trace_out_last(p[y], da, db))
          .eval();
    });

    rep.solver_used = true;
    rep.primal = sdp::solve(primal, settings);
    rep.dual = sdp::solve(dual, settings);
    rep.primal_value =
        detail_cd::finite_objective(rep.primal, "smooth min-relative entropy primal");

    if (rep.dual.status == sdp::SolveStatus::Unbounded) {
      // The detection weight can be raised without limit: optimum is 0.
      rep.dual_value = 0.0;
      rep.solver_declared_infinite = true;
      rep.value = ExtendedReal::pos_inf();
      return rep;
    }
    rep.dual_value = detail_cd::finite_objective(rep.dual, "smooth min-relative entropy dual");
    rep.gap = std::abs(rep.primal_value - rep.dual_value);

    const double beta = std::max(0.0, 0.5 * (rep.primal_value + rep.dual_value));
    if (beta <= 1e-9) {
      rep.threshold_inferred = true;
      rep.value = ExtendedReal::pos_inf();
      return rep;
    }
    rep.value = -std::log2(beta);
    rho_opt = rep.primal.var(rho);
    omega_opt = rep.primal.var(omega);
  }

  // Witness extraction: purify the optimal input and pull the test operator
  // back through it, clipping to a valid binary measurement.
  HermitianOperator rho_h(rho_opt, {da}, 1e-6);
  const ComplexMatrix sqrt_rho =
      spectral_fn(rho_h, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; }).mat;
  const ComplexMatrix isqrt_rho =
      spectral_fn(rho_h, [](double x) { return 1.0 / std::sqrt(x); }, true).mat;
  const ComplexMatrix wide = kron(sqrt_rho, identity_matrix(da));
  rep.optimal_input = HermitianOperator(
      (wide * entangled_projector(da).mat * wide).eval(), {da, da}, 1e-6);
  const ComplexMatrix lift = kron(isqrt_rho, identity_matrix(db));
  const HermitianOperator raw_test((lift * omega_opt * lift).eval(), {da * db}, 1e-6);
  rep.test_operator = spectral_fn(raw_test, [](double x) { return std::clamp(x, 0.0, 1.0); }).mat;
  return rep;
}

// ---------------------------------------------------------------------------
// Smooth channel max-relative entropy
// ---------------------------------------------------------------------------

// log2 of the smallest lambda such that some channel within diamond radius
// eps of the first member sits below lambda times the second.  The optimal
// nearby channel is returned in `smoothed`.
inline DivergenceReport channel_dmax_eps(const ChannelBox& box, double eps,
                                         const sdp::SolverSettings& settings = {}) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("smoothing parameter must lie in [0,1)");
  const int da = box.in_dim(), db = box.out_dim();

  if (eps == 0.0) {
    // Zero smoothing forces the nearby channel to be the first member itself.
    DivergenceReport rep;
    rep.value = channel_dmax(box);
    rep.smoothed = box.first;
    return rep;
  }

  const ComplexMatrix gn = box.first.choi.mat;
  const ComplexMatrix gm = box.second.choi.mat;

  // The dominance constraint forces the smoothed operator onto the support of
  // the second member, so a singular second member leaves the naive program
  // without interior (and infeasibility only weakly certified).  Optimizing
  // over that support face directly keeps both sides strictly feasible.
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gm);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("smooth max-relative entropy: eigendecomposition failed");
  const double top = std::max(1.0, es.eigenvalues().maxCoeff());
  int kernel_dim = 0;
  while (kernel_dim < da * db && es.eigenvalues()(kernel_dim) <= 1e-9 * top) ++kernel_dim;
  const int face_dim = da * db - kernel_dim;
  const ComplexMatrix v = es.eigenvectors().rightCols(face_dim);
  ComplexMatrix gm_face = v.adjoint() * gm * v;
  gm_face = 0.5 * (gm_face + gm_face.adjoint()).eval();

  sdp::ConicProgram primal;
  const int lam = primal.add_nonneg_scalar("level");
  const int y = primal.add_psd_hermitian(face_dim, "smoothed");
  const int z = primal.add_psd_hermitian(da * db, "excess");
  primal.minimize([lam](const sdp::Point& p) { return p[lam]; });
  primal.add_equality("unit_marginal", [y, v, da, db](const sdp::Point& p) {
    return (detail_cd::trace_out_last(v * p[y] * v.adjoint(), da, db) - identity_matrix(da))
        .eval();
  });
  primal.add_psd("cover", [lam, y, gm_face](const sdp::Point& p) {
    return (sdp::scalar_of(p[lam]).real() * gm_face - p[y]).eval();
  });
  primal.add_psd("budget", [z, da, db, eps](const sdp::Point& p) {
    return (eps * identity_matrix(da) - detail_cd::trace_out_last(p[z], da, db)).eval();
  });
  primal.add_psd("dominate", [y, z, v, gn](const sdp::Point& p) {
    return (p[z] - gn + v * p[y] * v.adjoint()).eval();
  });

  sdp::ConicProgram dual;
  const int big = dual.add_psd_hermitian(face_dim, "majorant");
  const int pen = dual.add_psd_hermitian(da, "penalty");
  const int pair = dual.add_psd_hermitian(da * db, "pairing");
  const int zr = dual.add_free_hermitian(da, "marginal_price");
  dual.maximize([pen, pair, zr, gn, eps](const sdp::Point& p) {
    return sdp::scalar_matrix(p[zr].trace() - eps * p[pen].trace() + herm_inner(p[pair], gn));
  });
  dual.add_psd("unit_pairing", [big, gm_face](const sdp::Point& p) {
    return sdp::scalar_matrix(1.0 - herm_inner(gm_face, p[big]));
  });
  dual.add_psd("pairing_cap", [pen, pair, db](const sdp::Point& p) {
    return (kron(p[pen], identity_matrix(db)) - p[pair]).eval();
  });
  dual.add_psd("majorize", [big, pair, zr, v, db](const sdp::Point& p) {
    return (p[big] -
            v.adjoint() * (kron(p[zr], identity_matrix(db)) + p[pair]) * v)
        .eval();
  });

  DivergenceReport rep;
  rep.solver_used = true;
  rep.primal = sdp::solve(primal, settings);
  rep.dual = sdp::solve(dual, settings);

  if (rep.primal.status == sdp::SolveStatus::Infeasible) {
    // No channel within the smoothing ball fits under any multiple of the
    // second member (support mismatch too large for the budget).
    rep.solver_declared_infinite = true;
    rep.value = ExtendedReal::pos_inf();
    return rep;
  }
  if (rep.dual.status == sdp::SolveStatus::Unbounded &&
      rep.primal.status != sdp::SolveStatus::Optimal) {
    // The independently assembled dual grows without bound, certifying the
    // same support mismatch from the other side.
    rep.solver_declared_infinite = true;
    rep.value = ExtendedReal::pos_inf();
    return rep;
  }
  rep.primal_value = detail_cd::finite_objective(rep.primal, "smooth max-relative entropy primal");
  rep.dual_value = detail_cd::finite_objective(rep.dual, "smooth max-relative entropy dual");
  rep.gap = std::abs(rep.primal_value - rep.dual_value);

  const double lambda = std::max(1.0, 0.5 * (rep.primal_value + rep.dual_value));
  if (lambda >= settings.unbounded_threshold) {
    rep.threshold_inferred = true;
    rep.value = ExtendedReal::pos_inf();
    return rep;
  }
  rep.value = std::log2(lambda);

  ChannelChecks repairing;
  repairing.repair = true;
  rep.smoothed =
      make_channel((v * rep.primal.var(y) * v.adjoint()).eval(), da, db, repairing);
  return rep;
}

// ---------------------------------------------------------------------------
// Heuristic channel divergences (multi-restart ascent over pure inputs)
// ---------------------------------------------------------------------------

namespace detail_cd {

struct AscentOutcome {
  ExtendedReal value;   // in the caller's sense (max or min)
  ComplexVector state;  // unit vector reaching it
};

// Local improvement of f(v) := objective(v/|v|) by projected finite-difference
// steps with backtracking.  `sign` is +1 to maximize, -1 to minimize.  An
// infinite objective value short-circuits: it cannot be improved.
inline AscentOutcome ascend(const std::function<ExtendedReal(const ComplexVector&)>& objective,
                            ComplexVector v, double sign) {
  constexpr int kMaxIters = 500;
  constexpr double kStepTol = 1e-9;
  constexpr double kProbe = 1e-5;

  v.normalize();
  ExtendedReal fv = objective(v);
  if (fv.infinite) return {fv, v};
  double cur = sign * fv.as_double();

  const int n = static_cast<int>(v.size());
  for (int iter = 0; iter < kMaxIters; ++iter) {
    ComplexVector grad = ComplexVector::Zero(n);
    bool blew_up = false;
    ComplexVector blow_point;
    const auto probe = [&](ComplexVector w) -> double {
      w.normalize();
      const ExtendedReal f = objective(w);
      if (f.infinite && sign * f.as_double() > 0) {
        blew_up = true;
        blow_point = w;
        return 0.0;
      }
      return sign * f.as_double();
    };
    for (int k = 0; k < n && !blew_up; ++k) {
      ComplexVector e = ComplexVector::Zero(n);
      e[k] = kProbe;
      const double dre = probe(v + e) - probe(v - e);
      e[k] = Complex(0.0, kProbe);
      const double dim = probe(v + e) - probe(v - e);
      grad[k] = Complex(dre, dim) / (2.0 * kProbe);
    }
    if (blew_up) {
      const ExtendedReal inf = sign > 0 ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
      return {inf, blow_point};
    }
    // The normalized objective is scale and phase invariant, so the gradient
    // is already tangent up to round-off; project the radial part anyway.
    grad -= grad.dot(v) * v;
    if (grad.norm() < 1e-12) break;

    double t = 1.0 / std::max(1.0, grad.norm());
    bool accepted = false;
    for (int cut = 0; cut < 40; ++cut, t *= 0.5) {
      ComplexVector w = (v + t * grad).normalized();
      const ExtendedReal fw = objective(w);
      if (fw.infinite && sign * fw.as_double() > 0) return {fw, w};
      const double val = sign * fw.as_double();
      if (val > cur + 1e-14) {
        const double step = (w - v).norm();
        v = std::move(w);
        cur = val;
        accepted = true;
        if (step < kStepTol) iter = kMaxIters;  // converged
        break;
      }
    }
    if (!accepted) break;
  }
  return {ExtendedReal(sign * cur), v};
}

inline ComplexVector heuristic_start(int restart, int da, Rng& rng) {
  const int n = da * da;
  ComplexVector v(n);
  if (restart == 0) {
    // Maximally entangled start.
    v.setZero();
    for (int i = 0; i < da; ++i) v[i * da + i] = 1.0;
  } else if (restart <= da) {
    // Classically correlated basis start |x, x>.
    v.setZero();
    const int x = restart - 1;
    v[x * da + x] = 1.0;
  } else {
    for (int k = 0; k < n; ++k) v[k] = Complex(rng.normal(), rng.normal());
  }
  return v.normalized();
}

}  // namespace detail_cd

// Best value of the selected divergence between the channel outputs over pure
// inputs psi on (reference, input) with the reference a copy of the input
// space.  A certified lower bound for the maximizing divergences (upper bound
// for fidelity), never claimed exact.  Deterministic given the seed.
inline DivergenceReport channel_div_heuristic(const DivergenceSelector& div, const ChannelBox& box,
                                              int restarts = 20, std::uint64_t seed = 20240214) {
  if (restarts < 1) throw std::invalid_argument("heuristic needs at least one restart");
  const int da = box.in_dim();
  const double sign = div.minimizing() ? -1.0 : 1.0;

  const auto objective = [&](const ComplexVector& v) -> ExtendedReal {
    const HermitianOperator psi(v * v.adjoint(), {da, da}, 1e-8);
    return state_divergence(div, apply_channel(box.first, psi), apply_channel(box.second, psi));
  };

  DivergenceReport rep;
  rep.restarts = restarts;
  bool have_best = false;
  ExtendedReal best;
  ComplexVector best_state;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(r));
    const detail_cd::AscentOutcome out =
        detail_cd::ascend(objective, detail_cd::heuristic_start(r, da, rng), sign);
    const bool better = !have_best || (sign > 0 ? best < out.value : out.value < best);
    if (better) {
      have_best = true;
      best = out.value;
      best_state = out.state;
    }
    if (best.infinite) break;  // nothing can improve on an infinite value
  }
  rep.value = best;
  rep.best_input = HermitianOperator(best_state * best_state.adjoint(), {da, da}, 1e-8);
  return rep;
}

// Channel fidelity: the worst-case output fidelity over pure inputs, found by
// the same local search (an upper bound on the true minimum).
inline double channel_fidelity_heuristic(const Channel& n0, const Channel& n1, int restarts = 20,
                                         std::uint64_t seed = 20240214) {
  detail_cd::check_box_dims(n0, n1);
  const DivergenceReport rep =
      channel_div_heuristic(DivergenceSelector::fidelity(), ChannelBox(n0, n1), restarts, seed);
  return std::clamp(rep.value.as_double(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Closed forms for structured boxes
// ---------------------------------------------------------------------------

// Classical-quantum boxes: every divergence here is extremal at a single
// input symbol, so the channel value is the best state value over symbols
// (worst for fidelity).
inline ExtendedReal cq_divergence(const CQBox& cq, const DivergenceSelector& div) {
  ExtendedReal best;
  for (int x = 0; x < cq.symbols(); ++x) {
    const HermitianOperator rho(cq.first_states[x], {}, 1e-8);
    const HermitianOperator sigma(cq.second_states[x], {}, 1e-8);
    const ExtendedReal v = state_divergence(div, rho, sigma);
    if (x == 0 || (div.minimizing() ? v < best : best < v)) best = v;
  }
  return best;
}

// Environment-seizable boxes hand the environment pair to the receiver, so
// the channel divergence collapses to the state divergence of that pair.
// Requires a passing retrieval witness.
inline ExtendedReal env_seizable_divergence(const EnvBox& e, const DivergenceSelector& div) {
  const SeizeCheck check = env_seize_check(e);
  if (!check.pass())
    throw std::invalid_argument("environment retrieval check failed (residuals " +
                                std::to_string(check.first_residual) + ", " +
                                std::to_string(check.second_residual) + ")");
  return state_divergence(div, e.env_first, e.env_second);
}

// Min-relative entropy between the identity and a unitary channel:
// -log2 d(0, conv spec(u))^2 by exact planar hull geometry, +inf when the
// hull contains the origin.  Robust where the generic program can only
// report "very large".
inline ExtendedReal unitary_dmin(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) throw std::invalid_argument("unitary must be square");
  const int d = static_cast<int>(u.rows());
  if (max_abs((u.adjoint() * u - identity_matrix(d)).eval()) > 1e-8)
    throw std::invalid_argument("matrix is not unitary within tolerance");

  Eigen::ComplexEigenSolver<ComplexMatrix> es(u, /*computeEigenvectors=*/false);
  const ComplexVector spec = es.eigenvalues();

  // Strict interior test: the origin is inside the hull exactly when no open
  // half-plane through it contains every eigenvalue, i.e. when the largest
  // angular gap between consecutive eigenvalues is below pi.
  std::vector<double> angles(d);
  for (int i = 0; i < d; ++i) angles[i] = std::arg(spec[i]);
  std::sort(angles.begin(), angles.end());
  double max_gap = angles.front() + 2.0 * M_PI - angles.back();
  for (int i = 1; i < d; ++i) max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  if (max_gap < M_PI - 1e-12) return ExtendedReal::pos_inf();

  // Otherwise the closest hull point lies on a vertex or an edge, and every
  // edge is a segment between two eigenvalues.
  double d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) d2 = std::min(d2, std::norm(spec[i]));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Complex p = spec[i], q = spec[j];
      const Complex dir = q - p;
      const double len2 = std::norm(dir);
      if (len2 < 1e-30) continue;
      const double t = std::clamp(-(p.real() * dir.real() + p.imag() * dir.imag()) / len2, 0.0, 1.0);
      d2 = std::min(d2, std::norm(p + t * dir));
    }
  if (d2 <= 1e-18) return ExtendedReal::pos_inf();
  return -std::log2(d2);
}

// ---------------------------------------------------------------------------
// Smoothing limits
// ---------------------------------------------------------------------------

struct SmoothingLimitRow {
  double eps = 0.0;
  ExtendedReal dmin_value;
  ExtendedReal dmax_value;
};

struct SmoothingLimitReport {
  std::vector<SmoothingLimitRow> rows;
  ExtendedReal dmin_exact;  // eps = 0 anchors
  ExtendedReal dmax_exact;
  bool dmin_monotone = true;  // nonincreasing as eps decreases
  bool dmax_monotone = true;  // nondecreasing as eps decreases
  double dmin_final_gap = 0.0;
  double dmax_final_gap = 0.0;
  bool pass = false;
};

namespace detail_cd {

// |a - b| treating two like infinities as coincident.
inline double ext_gap(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.infinite || b.infinite) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(a.value - b.value);
}

}  // namespace detail_cd

// Tabulates the smoothed quantities along a descending grid of smoothing
// parameters and checks that they approach the exact (eps = 0) values
// monotonically.
inline SmoothingLimitReport smoothing_limit_check(const ChannelBox& box,
                                                  const std::vector<double>& eps_grid,
                                                  const sdp::SolverSettings& settings = {},
                                                  double gap_tol = 1e-2) {
  if (eps_grid.empty()) throw std::invalid_argument("smoothing grid must be nonempty");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0 && eps_grid[i] < 1.0))
      throw std::invalid_argument("smoothing grid values must lie in (0,1)");
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
      throw std::invalid_argument("smoothing grid must be strictly descending");
  }

  SmoothingLimitReport rep;
  for (double eps : eps_grid) {
    SmoothingLimitRow row;
    row.eps = eps;
    row.dmin_value = channel_dmin_eps(box, eps, settings).value;
    row.dmax_value = channel_dmax_eps(box, eps, settings).value;
    rep.rows.push_back(row);
  }
  rep.dmin_exact = channel_dmin_eps(box, 0.0, settings).value;
  rep.dmax_exact = channel_dmax(box);

  constexpr double kSlack = 1e-6;  // solver noise allowance on monotonicity
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    // Descending grid: the min quantity may only decrease and the max
    // quantity only increase (IEEE rules handle infinite entries).
    if (rep.rows[i].dmin_value.as_double() > rep.rows[i - 1].dmin_value.as_double() + kSlack)
      rep.dmin_monotone = false;
    if (rep.rows[i].dmax_value.as_double() < rep.rows[i - 1].dmax_value.as_double() - kSlack)
      rep.dmax_monotone = false;
  }
  rep.dmin_final_gap = detail_cd::ext_gap(rep.rows.back().dmin_value, rep.dmin_exact);
  rep.dmax_final_gap = detail_cd::ext_gap(rep.rows.back().dmax_value, rep.dmax_exact);
  rep.pass = rep.dmin_monotone && rep.dmax_monotone && rep.dmin_final_gap <= gap_tol &&
             rep.dmax_final_gap <= gap_tol;
  return rep;
}

}  // namespace boxdist
