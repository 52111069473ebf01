#pragma once
// Transformations between channel boxes under superchannels: the optimal
// conversion-error program with an independently assembled dual, explicit
// one-shot distillation and dilution protocols together with the
// superchannels that witness them, tensor powers, and a suite of inequality
// checks relating the one-shot quantities.

#include <boxdist/channel_div.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace boxdist {

// ---------------------------------------------------------------------------
// Result types
// ---------------------------------------------------------------------------

// Raised when the exact constraint on the second member cannot be met by any
// superchannel (distinct from a numerical solver failure).
struct TransformInfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TransformResult {
  double epsilon_star = 0.0;     // smallest diamond error achievable on the first member
  Superchannel superchannel;     // optimizer; maps the second member exactly
  double primal_dual_gap = 0.0;  // |primal - dual| of the independently assembled pair
  bool inaccurate = false;       // extraction residuals stayed large after one tighter re-solve
  sdp::Solution primal, dual;
};

enum class ProtocolTask { distill, dilute };

// A one-shot protocol converting `source` into `target` (one of the two boxes
// is a standard box).  `log2M` is the certified program value; the stated
// target/source standard box is built from the constructed witness so the
// second member is matched exactly, which can differ from 2^log2M in the last
// solver digits.
struct ProtocolResult {
  ExtendedReal log2M;
  std::optional<Superchannel> superchannel;  // absent when log2M is infinite
  ProtocolTask task = ProtocolTask::distill;
  double epsilon = 0.0;
  ChannelBox source, target;
};

struct ProtocolCheck {
  double eps_first = 0.0;        // diamond residual on the first member
  double second_residual = 0.0;  // diamond residual on the second member
};

// One inequality evaluation.  The inequality is always oriented lhs <= rhs;
// `certified` marks reports whose every input is a certified program value or
// exact closed form (heuristic inputs downgrade the report to a consistency
// check with a looser pass tolerance).
struct BoundReport {
  std::string name;
  bool certified = false;
  ExtendedReal lhs, rhs;
  double slack = 0.0;  // rhs - lhs; +/-HUGE_VAL when one side is infinite
  bool pass = false;
  std::string detail;
};

enum class RenyiFamily { sandwiched, petz };

// ---------------------------------------------------------------------------
// Detail helpers
// ---------------------------------------------------------------------------

namespace detail_bt {

// Choi operator of Theta(X) as a linear function of the superchannel Choi
// `gt` (ordered factors (C,B,A,D)) for a fixed channel Choi `gx` on (A,B).
inline ComplexMatrix contract_with_box(const ComplexMatrix& gx, const ComplexMatrix& gt, int dc,
                                       int db, int da, int dd) {
  const auto idx = [&](int c, int b, int a, int d) { return ((c * db + b) * da + a) * dd + d; };
  ComplexMatrix out = ComplexMatrix::Zero(dc * dd, dc * dd);
  for (int c = 0; c < dc; ++c)
    for (int cp = 0; cp < dc; ++cp)
      for (int d = 0; d < dd; ++d)
        for (int dp = 0; dp < dd; ++dp) {
          Complex acc = 0;
          for (int app = 0; app < da; ++app)
            for (int bpp = 0; bpp < db; ++bpp)
              for (int a = 0; a < da; ++a)
                for (int b = 0; b < db; ++b)
                  acc += gx(app * db + bpp, a * db + b) * gt(idx(c, bpp, app, d), idx(cp, b, a, dp));
          out(c * dd + d, cp * dd + dp) = acc;
        }
  return out;
}

inline ComplexMatrix hermitized(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

// Adjoint of contract_with_box in its superchannel argument:
// <y, contract_with_box(gx, t)> == <contraction_adjoint(gx, y), t> for all
// Hermitian y on (C,D) and t on (C,B,A,D).
inline ComplexMatrix contraction_adjoint(const ComplexMatrix& gx, const ComplexMatrix& y, int dc,
                                         int db, int da, int dd) {
  const ComplexMatrix swap_ab = permutation_matrix({da, db}, {1, 0});
  const ComplexMatrix p_cdba = permutation_matrix({dc, dd, db, da}, {0, 2, 3, 1});
  return p_cdba * kron(y, (swap_ab * gx.transpose() * swap_ab.adjoint()).eval()) *
         p_cdba.adjoint();
}

// Orthonormal real basis of the Hermitian matrices of dimension n.
inline std::vector<ComplexMatrix> herm_basis(int n) {
  std::vector<ComplexMatrix> basis;
  basis.reserve(static_cast<std::size_t>(n) * n);
  const double s = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < n; ++k) {
    ComplexMatrix e = ComplexMatrix::Zero(n, n);
    e(k, k) = 1.0;
    basis.push_back(std::move(e));
  }
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      ComplexMatrix re = ComplexMatrix::Zero(n, n);
      re(k, l) = s;
      re(l, k) = s;
      basis.push_back(std::move(re));
      ComplexMatrix im = ComplexMatrix::Zero(n, n);
      im(k, l) = Complex(0.0, s);
      im(l, k) = Complex(0.0, -s);
      basis.push_back(std::move(im));
    }
  return basis;
}

// Coordinates of a Hermitian matrix in the herm_basis ordering.
inline Eigen::VectorXd herm_coords(const ComplexMatrix& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd x(static_cast<Eigen::Index>(n) * n);
  int idx = 0;
  for (int k = 0; k < n; ++k) x(idx++) = m(k, k).real();
  const double s = std::sqrt(2.0);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      x(idx++) = s * m(k, l).real();
      x(idx++) = s * m(k, l).imag();
    }
  return x;
}

// Kraus operators recovered from the spectral decomposition of the Choi.
inline std::vector<ComplexMatrix> kraus_from_channel(const Channel& ch, double tol = 1e-10) {
  const EigResult e = eig_hermitian(ch.choi);
  const double top = std::max(1e-30, e.values.maxCoeff());
  std::vector<ComplexMatrix> ks;
  for (int k = 0; k < e.values.size(); ++k) {
    if (e.values[k] <= tol * top) continue;
    ComplexMatrix km(ch.out_dim, ch.in_dim);
    for (int a = 0; a < ch.in_dim; ++a)
      for (int b = 0; b < ch.out_dim; ++b)
        km(b, a) = std::sqrt(e.values[k]) * e.vectors(a * ch.out_dim + b, k);
    ks.push_back(std::move(km));
  }
  return ks;
}

// Extended-real a + corr where an infinite correction dominates (a vacuous
// correction term makes the bound side trivial regardless of the other term).
inline ExtendedReal er_shift(const ExtendedReal& a, double corr) {
  if (std::isinf(corr)) return corr > 0 ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
  if (!a.is_finite()) return a;
  return ExtendedReal(a.value + corr);
}

inline ExtendedReal er_scale(const ExtendedReal& a, double k) {
  if (!a.is_finite()) return a;
  return ExtendedReal(a.value * k);
}

inline BoundReport finish_bound(std::string name, bool certified, ExtendedReal lhs,
                                ExtendedReal rhs, std::string detail) {
  BoundReport r;
  r.name = std::move(name);
  r.certified = certified;
  r.lhs = lhs;
  r.rhs = rhs;
  r.detail = std::move(detail);
  const double tol = certified ? 1e-6 : 1e-4;
  if (rhs.is_pos_inf() || lhs.is_neg_inf()) {
    r.pass = true;
    r.slack = HUGE_VAL;
  } else if (lhs.is_pos_inf() || rhs.is_neg_inf()) {
    r.pass = false;
    r.slack = -HUGE_VAL;
  } else {
    r.slack = rhs.value - lhs.value;
    r.pass = r.slack >= -tol;
  }
  return r;
}

// Diagonal-block decomposition of a classical-quantum Choi operator: the
// per-symbol output states, or nothing when an off-diagonal input block is
// present.
inline std::optional<std::vector<ComplexMatrix>> cq_blocks(const Channel& ch,
                                                           double tol = 1e-10) {
  const int da = ch.in_dim, db = ch.out_dim;
  const ComplexMatrix& g = ch.choi.mat;
  const double scale = std::max(1.0, max_abs(g));
  std::vector<ComplexMatrix> blocks(da);
  for (int x = 0; x < da; ++x)
    for (int y = 0; y < da; ++y) {
      if (x == y) {
        blocks[x] = g.block(x * db, y * db, db, db);
      } else if (max_abs(g.block(x * db, y * db, db, db)) > tol * scale) {
        return std::nullopt;
      }
    }
  return blocks;
}

inline std::optional<CQBox> as_cq_box(const ChannelBox& box, double tol = 1e-10) {
  auto f = cq_blocks(box.first, tol);
  auto s = cq_blocks(box.second, tol);
  if (!f || !s) return std::nullopt;
  return CQBox(std::move(*f), std::move(*s));
}

struct RenyiValue {
  ExtendedReal value;
  bool exact = false;  // closed form (classical-quantum structure) vs heuristic ascent
};

inline RenyiValue channel_renyi(const ChannelBox& box, const DivergenceSelector& div,
                                int restarts, std::uint64_t seed) {
  if (auto cq = as_cq_box(box)) return {cq_divergence(*cq, div), true};
  return {channel_div_heuristic(div, box, restarts, seed).value, false};
}

}  // namespace detail_bt

// ---------------------------------------------------------------------------
// Optimal box transformation error
// ---------------------------------------------------------------------------

// Smallest diamond error on the first member over all superchannels that map
// the second member of `source` exactly onto the second member of `target`.
// The primal optimizes the superchannel Choi directly; the dual is assembled
// independently from the adjoint maps, so agreement of the two values checks
// the formulation as well as the solver.
inline TransformResult transform_error(const ChannelBox& source, const ChannelBox& target,
                                       const sdp::SolverSettings& settings = {}) {
  const int da = source.in_dim(), db = source.out_dim();
  const int dc = target.in_dim(), dd = target.out_dim();
  const ComplexMatrix gn = source.first.choi.mat;
  const ComplexMatrix gm = source.second.choi.mat;
  const ComplexMatrix gk = target.first.choi.mat;
  const ComplexMatrix gl = target.second.choi.mat;
  const int tdim = dc * db * da * dd;

  // Permutations between the factor orders used below.
  const ComplexMatrix p_cba_cab = permutation_matrix({dc, db, da}, {0, 2, 1});      // (C,B,A)->(C,A,B)
  const ComplexMatrix p_cab_cba = permutation_matrix({dc, da, db}, {0, 2, 1});      // (C,A,B)->(C,B,A)
  const ComplexMatrix p_cabd = permutation_matrix({dc, da, db, dd}, {0, 2, 1, 3});  // (C,A,B,D)->(C,B,A,D)

  sdp::ConicProgram primal;
  const int th = primal.add_psd_hermitian(tdim, "map");
  const int zv = primal.add_psd_hermitian(dc * dd, "excess");
  const int tv = primal.add_nonneg_scalar("error");
  primal.minimize([tv](const sdp::Point& p) { return p[tv]; });
  primal.add_equality("second_exact", [=](const sdp::Point& p) {
    return (detail_bt::contract_with_box(gm, p[th], dc, db, da, dd) - gl).eval();
  });
  primal.add_equality("unit_marginal", [=](const sdp::Point& p) {
    return (detail_cd::trace_out_last(p[th], dc * db, da * dd) - identity_matrix(dc * db)).eval();
  });
  primal.add_equality("no_signal", [=](const sdp::Point& p) {
    const ComplexMatrix td = detail_cd::trace_out_last(p[th], dc * db * da, dd);  // (C,B,A)
    const ComplexMatrix tbd = detail_cd::trace_out_last(
        (p_cba_cab * td * p_cba_cab.adjoint()).eval(), dc * da, db);              // (C,A)
    const ComplexMatrix grown =
        p_cab_cba * kron(tbd, identity_matrix(db)) * p_cab_cba.adjoint() / static_cast<double>(db);
    return (td - grown).eval();
  });
  primal.add_psd("dominate", [=](const sdp::Point& p) {
    return (p[zv] - gk + detail_bt::contract_with_box(gn, p[th], dc, db, da, dd)).eval();
  });
  primal.add_psd("level", [=](const sdp::Point& p) {
    return (sdp::scalar_of(p[tv]).real() * identity_matrix(dc) -
            detail_cd::trace_out_last(p[zv], dc, dd))
        .eval();
  });

  sdp::ConicProgram dual;
  const int yv = dual.add_psd_hermitian(dc * dd, "witness");
  const int uv = dual.add_psd_hermitian(dc, "weight");
  const int wv = dual.add_free_hermitian(dc * dd, "exact_price");
  const int sv = dual.add_free_hermitian(dc * db, "marginal_price");
  const int vv = dual.add_free_hermitian(dc * db * da, "signal_price");
  dual.maximize([=](const sdp::Point& p) {
    return sdp::scalar_matrix(herm_inner(p[wv], gl) + p[sv].trace() + herm_inner(p[yv], gk));
  });
  dual.add_psd("unit_weight",
               [uv](const sdp::Point& p) { return sdp::scalar_matrix(1.0 - p[uv].trace()); });
  dual.add_psd("cap", [=](const sdp::Point& p) {
    return (kron(p[uv], identity_matrix(dd)) - p[yv]).eval();
  });
  // Independent assembly from the adjoint maps rather than by transposing the
  // primal's data.
  dual.add_psd("dominated", [=](const sdp::Point& p) {
    const ComplexMatrix cn_star = detail_bt::contraction_adjoint(gn, p[yv], dc, db, da, dd);
    const ComplexMatrix cm_star = detail_bt::contraction_adjoint(gm, p[wv], dc, db, da, dd);
    const ComplexMatrix s_grow = kron(p[sv], identity_matrix(da * dd));
    const ComplexMatrix v_grow = kron(p[vv], identity_matrix(dd));
    const ComplexMatrix v_tilde = p_cba_cab * p[vv] * p_cba_cab.adjoint();
    const ComplexMatrix phi_star =
        p_cabd *
        kron(detail_cd::trace_out_last(v_tilde, dc * da, db) / static_cast<double>(db),
             identity_matrix(db * dd)) *
        p_cabd.adjoint();
    return (-(cm_star + s_grow + v_grow - phi_star + cn_star)).eval();
  });

  // The primal's equality blocks overlap: the exactness block's output
  // marginal is already fixed by the unit-marginal and no-signaling blocks,
  // and the no-signaling block contains rows it satisfies identically.  The
  // price variables therefore move freely along the kernel of the stacked
  // adjoint map, the barrier KKT system is singular along those lines, and
  // iterates drift until they jam.  Pin each kernel direction to zero: it
  // changes no constraint, and for a consistent primal the objective is flat
  // along it as well.
  {
    const auto basis_w = detail_bt::herm_basis(dc * dd);
    const auto basis_s = detail_bt::herm_basis(dc * db);
    const auto basis_v = detail_bt::herm_basis(dc * db * da);
    const int nw = static_cast<int>(basis_w.size());
    const int ns = static_cast<int>(basis_s.size());
    const int nv = static_cast<int>(basis_v.size());
    const auto price_image = [&](const ComplexMatrix& w, const ComplexMatrix& s,
                                 const ComplexMatrix& vmat) {
      const ComplexMatrix v_tilde = p_cba_cab * vmat * p_cba_cab.adjoint();
      const ComplexMatrix phi_star =
          p_cabd *
          kron(detail_cd::trace_out_last(v_tilde, dc * da, db) / static_cast<double>(db),
               identity_matrix(db * dd)) *
          p_cabd.adjoint();
      return (detail_bt::contraction_adjoint(gm, w, dc, db, da, dd) +
              kron(s, identity_matrix(da * dd)) + kron(vmat, identity_matrix(dd)) - phi_star)
          .eval();
    };
    const ComplexMatrix zw = ComplexMatrix::Zero(dc * dd, dc * dd);
    const ComplexMatrix zs = ComplexMatrix::Zero(dc * db, dc * db);
    const ComplexMatrix zvm = ComplexMatrix::Zero(dc * db * da, dc * db * da);
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(tdim) * tdim, nw + ns + nv);
    for (int j = 0; j < nw; ++j)
      stacked.col(j) = detail_bt::herm_coords(price_image(basis_w[j], zs, zvm));
    for (int j = 0; j < ns; ++j)
      stacked.col(nw + j) = detail_bt::herm_coords(price_image(zw, basis_s[j], zvm));
    for (int j = 0; j < nv; ++j)
      stacked.col(nw + ns + j) = detail_bt::herm_coords(price_image(zw, zs, basis_v[j]));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
    const double sig_top = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    for (int j = 0; j < svd.singularValues().size(); ++j) {
      if (svd.singularValues()(j) > 1e-8 * std::max(1.0, sig_top)) continue;
      ComplexMatrix dw = zw, ds = zs, dv = zvm;
      for (int k = 0; k < nw; ++k) dw += svd.matrixV()(k, j) * basis_w[k];
      for (int k = 0; k < ns; ++k) ds += svd.matrixV()(nw + k, j) * basis_s[k];
      for (int k = 0; k < nv; ++k) dv += svd.matrixV()(nw + ns + k, j) * basis_v[k];
      dual.add_equality("price_pin_" + std::to_string(j),
                        [wv, sv, vv, dw, ds, dv](const sdp::Point& p) {
                          return sdp::scalar_matrix(herm_inner(dw, p[wv]) +
                                                    herm_inner(ds, p[sv]) +
                                                    herm_inner(dv, p[vv]));
                        });
    }
  }

  TransformResult res;
  res.primal = sdp::solve(primal, settings);
  if (res.primal.status == sdp::SolveStatus::Infeasible)
    throw TransformInfeasibleError(
        "box transformation: no superchannel maps the source's second member exactly onto the "
        "target's second member");
  res.dual = sdp::solve(dual, settings);
  const double pv = detail_cd::finite_objective(res.primal, "box transformation primal");
  const double dv = detail_cd::finite_objective(res.dual, "box transformation dual");
  res.primal_dual_gap = std::abs(pv - dv);
  res.epsilon_star = std::clamp(0.5 * (pv + dv), 0.0, 1.0);

  const auto extract = [&](const sdp::Solution& sol) {
    return Superchannel(dc, db, da, dd,
                        HermitianOperator(detail_bt::hermitized(sol.var(th)), {dc, db, da, dd},
                                          1e-5));
  };
  const auto defect_size = [&](const Superchannel& sc) {
    const SuperchannelDefects d = superchannel_defects(sc);
    const double second =
        max_abs(detail_bt::contract_with_box(gm, sc.choi.mat, dc, db, da, dd) - gl);
    return std::max({-d.psd, d.marginal, d.no_signal, second});
  };

  res.superchannel = extract(res.primal);
  if (defect_size(res.superchannel) > 1e-6) {
    // One tighter re-solve before conceding the extraction is inaccurate.
    sdp::SolverSettings tight = settings;
    tight.feasibility_tol = std::min(settings.feasibility_tol, 1e-10);
    tight.gap_tol = std::min(settings.gap_tol, 1e-10);
    tight.max_iterations = std::max(settings.max_iterations, 200);
    const sdp::Solution re = sdp::solve(primal, tight);
    if (re.usable()) {
      const Superchannel candidate = Superchannel(
          dc, db, da, dd,
          HermitianOperator(detail_bt::hermitized(re.var(th)), {dc, db, da, dd}, 1e-5));
      if (defect_size(candidate) < defect_size(res.superchannel)) {
        res.primal = re;
        res.superchannel = candidate;
        const double pv2 = res.primal.objective.as_double();
        res.primal_dual_gap = std::abs(pv2 - dv);
        res.epsilon_star = std::clamp(0.5 * (pv2 + dv), 0.0, 1.0);
      }
    }
    res.inaccurate = defect_size(res.superchannel) > 1e-6;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Distillation: box -> standard box
// ---------------------------------------------------------------------------

namespace detail_bt {

// Assembles the distillation superchannel from an optimal input state on
// (reference, channel-input) and a binary test on (reference, channel-output):
// the encoder prepares the purified input with the channel input leading and
// keeps the reference in memory; the decoder measures the test.
inline Superchannel distill_superchannel(const ChannelBox& box, const HermitianOperator& input,
                                         const ComplexMatrix& test_rb) {
  const int da = box.in_dim(), db = box.out_dim();
  const EigResult e = eig_hermitian(input);
  ComplexVector v = e.vectors.col(e.values.size() - 1);  // ascending order: top eigenvector
  const ComplexMatrix swap_ra = permutation_matrix({da, da}, {1, 0});
  ComplexMatrix pre_kraus(da * da, 1);
  pre_kraus.col(0) = (swap_ra * v).eval();
  const Channel pre = channel_from_kraus({pre_kraus});

  const ComplexMatrix swap_rb = permutation_matrix({da, db}, {1, 0});
  const ComplexMatrix lam_bm = (swap_rb * test_rb * swap_rb.adjoint()).eval();
  const Channel post = povm_channel({lam_bm, identity_matrix(db * da) - lam_bm});
  return superchannel_from_pre_post(pre, post, da, da);
}

}  // namespace detail_bt

// Exact one-shot distillation: the number of standard-box bits extractable
// with a perfect first-member outcome equals the (non-smoothed) channel
// min-relative entropy; the witnessing superchannel prepares the optimal
// purified input and measures the support projector of the first member's
// output.  An infinite value (perfectly distinguishable box) is returned as a
// sentinel with no superchannel.
inline ProtocolResult distill_exact(const ChannelBox& box,
                                    const sdp::SolverSettings& settings = {}) {
  const DivergenceReport rep = channel_dmin_eps(box, 0.0, settings);
  ProtocolResult out;
  out.task = ProtocolTask::distill;
  out.epsilon = 0.0;
  out.log2M = rep.value;
  out.source = box;
  if (!rep.value.is_finite()) return out;

  const HermitianOperator nout = apply_channel(box.first, rep.optimal_input);
  const HermitianOperator proj =
      spectral_fn(nout, [](double x) { return x > 1e-8 ? 1.0 : 0.0; });
  const double beta =
      std::clamp(herm_inner(proj.mat, apply_channel(box.second, rep.optimal_input).mat),
                 std::exp2(-rep.value.as_double()) * 0.5, 1.0);
  out.target = standard_box(1.0 / beta);
  out.superchannel = detail_bt::distill_superchannel(box, rep.optimal_input, proj.mat);
  return out;
}

// Approximate one-shot distillation at smoothing eps: the value is the smooth
// channel min-relative entropy, and the superchannel is built from the clipped
// optimal witness (input state and test operator).
inline ProtocolResult distill_eps(const ChannelBox& box, double eps,
                                  const sdp::SolverSettings& settings = {}) {
  if (eps == 0.0) return distill_exact(box, settings);
  const DivergenceReport rep = channel_dmin_eps(box, eps, settings);
  ProtocolResult out;
  out.task = ProtocolTask::distill;
  out.epsilon = eps;
  out.log2M = rep.value;
  out.source = box;
  if (!rep.value.is_finite()) return out;

  const double beta =
      std::clamp(herm_inner(rep.test_operator, apply_channel(box.second, rep.optimal_input).mat),
                 std::exp2(-rep.value.as_double()) * 0.5, 1.0);
  out.target = standard_box(1.0 / beta);
  out.superchannel = detail_bt::distill_superchannel(box, rep.optimal_input, rep.test_operator);
  return out;
}

// ---------------------------------------------------------------------------
// Dilution: standard box -> box
// ---------------------------------------------------------------------------

// Exact one-shot dilution: the standard-box cost equals the channel
// max-relative entropy.  The superchannel routes the target input into memory
// and, conditioned on the standard box's flag output, applies either the first
// member or the complementary channel (t*second - first)/(t - 1).
inline ProtocolResult dilute_exact(const ChannelBox& box,
                                   const sdp::SolverSettings& settings = {}) {
  (void)settings;
  const ExtendedReal val = channel_dmax(box);
  if (!val.is_finite())
    throw std::domain_error(
        "dilution needs a finite max-relative entropy (the second member must dominate the "
        "first)");
  const int da = box.in_dim(), db = box.out_dim();
  ProtocolResult out;
  out.task = ProtocolTask::dilute;
  out.epsilon = 0.0;
  out.log2M = val;
  out.target = box;

  const double t = std::exp2(val.as_double());
  out.source = standard_box(std::max(1.0, t));

  Channel complement;
  if (t <= 1.0 + 1e-9) {
    complement = box.first;
  } else {
    ComplexMatrix gp = (t * box.second.choi.mat - box.first.choi.mat) / (t - 1.0);
    ChannelChecks checks;
    checks.repair = true;
    complement = make_channel(detail_bt::hermitized(gp), da, db, checks);
  }

  const Channel pre = identity_channel(da);  // route the input into memory
  ComplexMatrix bra0 = ComplexMatrix::Zero(1, 2);
  bra0(0, 0) = 1.0;
  ComplexMatrix bra1 = ComplexMatrix::Zero(1, 2);
  bra1(0, 1) = 1.0;
  std::vector<ComplexMatrix> post_kraus;
  for (const ComplexMatrix& k : detail_bt::kraus_from_channel(box.first))
    post_kraus.push_back(kron(bra0, k));
  for (const ComplexMatrix& k : detail_bt::kraus_from_channel(complement))
    post_kraus.push_back(kron(bra1, k));
  const Channel post = channel_from_kraus(post_kraus);
  out.superchannel = superchannel_from_pre_post(pre, post, 1, da);
  return out;
}

// Approximate one-shot dilution at smoothing eps: the value is the smooth
// channel max-relative entropy, and the superchannel is the exact dilution of
// the extracted smoothed channel against the second member.
inline ProtocolResult dilute_eps(const ChannelBox& box, double eps,
                                 const sdp::SolverSettings& settings = {}) {
  if (eps == 0.0) return dilute_exact(box, settings);
  const DivergenceReport rep = channel_dmax_eps(box, eps, settings);
  ProtocolResult out;
  out.task = ProtocolTask::dilute;
  out.epsilon = eps;
  out.log2M = rep.value;
  out.target = box;
  if (!rep.value.is_finite()) return out;

  ProtocolResult inner;
  try {
    inner = dilute_exact(ChannelBox(rep.smoothed, box.second), settings);
  } catch (const std::domain_error&) {
    // Channel repair can push a sliver of the smoothed Choi outside the
    // second member's support; project it back and retry once.
    const HermitianOperator supp =
        spectral_fn(box.second.choi, [](double x) { return x > 1e-9 ? 1.0 : 0.0; });
    ChannelChecks checks;
    checks.repair = true;
    const Channel projected =
        make_channel((supp.mat * rep.smoothed.choi.mat * supp.mat).eval(), box.in_dim(),
                     box.out_dim(), checks);
    inner = dilute_exact(ChannelBox(projected, box.second), settings);
  }
  out.superchannel = inner.superchannel;
  out.source = inner.source;  // standard box matched exactly by the construction
  return out;
}

// ---------------------------------------------------------------------------
// Protocol verification and standard-box plumbing
// ---------------------------------------------------------------------------

// Diamond residuals of Theta applied to a source box against a target box.
inline ProtocolCheck verify_protocol(const Superchannel& theta, const ChannelBox& source,
                                     const ChannelBox& target,
                                     const sdp::SolverSettings& settings = {}) {
  return {diamond_value(apply_superchannel(theta, source.first), target.first, settings),
          diamond_value(apply_superchannel(theta, source.second), target.second, settings)};
}

// Exact conversion between standard boxes: a classical post-processing sends
// m_from bits down to m_to <= m_from bits with zero error on both members.
inline Superchannel standard_box_conversion(double m_from, double m_to) {
  if (m_from < 1.0 || m_to < 1.0)
    throw std::invalid_argument("standard-box parameters are at least 1");
  if (m_to > m_from + 1e-12)
    throw std::invalid_argument("a standard box cannot be boosted exactly");
  const double x =
      m_from <= 1.0 + 1e-15 ? 0.0 : (1.0 / m_to - 1.0 / m_from) / (1.0 - 1.0 / m_from);
  ComplexMatrix k_keep = ComplexMatrix::Zero(2, 2);
  k_keep(0, 0) = 1.0;
  ComplexMatrix k_down = ComplexMatrix::Zero(2, 2);
  k_down(0, 1) = std::sqrt(x);
  ComplexMatrix k_stay = ComplexMatrix::Zero(2, 2);
  k_stay(1, 1) = std::sqrt(1.0 - x);
  const Channel post = channel_from_kraus({k_keep, k_down, k_stay});
  return superchannel_from_pre_post(identity_channel(1), post, 1, 1);
}

// n-fold parallel copy of a box, with a cap on the resulting Choi dimension.
inline ChannelBox tensor_power_box(const ChannelBox& box, int n, long choi_dim_cap = 256) {
  if (n < 1) throw std::invalid_argument("tensor power needs n >= 1");
  long dim = 1;
  for (int i = 0; i < n; ++i) {
    dim *= static_cast<long>(box.in_dim()) * box.out_dim();
    if (dim > choi_dim_cap)
      throw std::invalid_argument("tensor power exceeds the Choi dimension cap");
  }
  Channel f = box.first, s = box.second;
  for (int i = 1; i < n; ++i) {
    f = tensor_channels(f, box.first);
    s = tensor_channels(s, box.second);
  }
  return ChannelBox(std::move(f), std::move(s));
}

// ---------------------------------------------------------------------------
// Inequality suite
// ---------------------------------------------------------------------------

// One-shot distillable bits cannot exceed the one-shot cost by more than the
// smoothing slack: dmin_eps1 <= dmax_eps2 + log2(1/(1 - eps1 - eps2)).
inline BoundReport bound_smooth_min_max(const ChannelBox& box, double eps1, double eps2,
                                        const sdp::SolverSettings& settings = {}) {
  if (!(eps1 >= 0.0 && eps2 >= 0.0 && eps1 + eps2 < 1.0))
    throw std::invalid_argument("smoothing budgets must be nonnegative with eps1 + eps2 < 1");
  const ExtendedReal lhs = channel_dmin_eps(box, eps1, settings).value;
  const ExtendedReal rhs =
      detail_bt::er_shift(channel_dmax_eps(box, eps2, settings).value,
                          std::log2(1.0 / (1.0 - eps1 - eps2)));
  return detail_bt::finish_bound(
      "smooth-min-vs-max", true, lhs, rhs,
      "smooth min-relative entropy against smooth max-relative entropy plus the budget term");
}

// Pseudo-continuity of the channel Renyi divergences: lowering the Renyi order
// from beta to alpha absorbs a perturbation of the first argument, up to a
// fidelity (sandwiched) or diamond-distance (Petz) correction.
inline BoundReport bound_pseudo_continuity(RenyiFamily kind, double alpha, const Channel& n0,
                                           const Channel& n1, const Channel& m, int restarts = 8,
                                           std::uint64_t seed = 811,
                                           const sdp::SolverSettings& settings = {}) {
  detail_cd::check_box_dims(n0, n1);
  detail_cd::check_box_dims(n0, m);
  if (!channel_dmax(ChannelBox(n0, m)).is_finite())
    throw std::invalid_argument(
        "pseudo-continuity needs the first channel dominated by the reference");
  using detail_bt::channel_renyi;
  using detail_bt::RenyiValue;
  if (kind == RenyiFamily::sandwiched) {
    if (!(alpha > 0.5 && alpha < 1.0))
      throw std::invalid_argument("sandwiched order must lie in (1/2, 1)");
    const double beta = alpha / (2.0 * alpha - 1.0);
    const RenyiValue top =
        channel_renyi(ChannelBox(n0, m), DivergenceSelector::sandwiched(beta), restarts, seed);
    const RenyiValue bot = channel_renyi(ChannelBox(n1, m), DivergenceSelector::sandwiched(alpha),
                                         restarts, seed + 1);
    double fid;
    bool fid_exact = false;
    if (auto cq = detail_bt::as_cq_box(ChannelBox(n0, n1))) {
      fid = cq_divergence(*cq, DivergenceSelector::fidelity()).as_double();
      fid_exact = true;
    } else {
      fid = channel_fidelity_heuristic(n0, n1, restarts, seed + 2);
    }
    const double corr = fid <= 0.0 ? -std::numeric_limits<double>::infinity()
                                   : (alpha / (1.0 - alpha)) * std::log2(fid);
    return detail_bt::finish_bound("pseudo-continuity-sandwiched",
                                   top.exact && bot.exact && fid_exact,
                                   detail_bt::er_shift(bot.value, corr), top.value,
                                   "order-lowered divergence plus the channel-fidelity term");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("order must lie in (0, 1)");
  const double beta = 2.0 - alpha;
  const RenyiValue top =
      channel_renyi(ChannelBox(n0, m), DivergenceSelector::petz(beta), restarts, seed);
  const RenyiValue bot =
      channel_renyi(ChannelBox(n1, m), DivergenceSelector::petz(alpha), restarts, seed + 1);
  const double dia = diamond_value(n0, n1, settings);
  const double inner = 1.0 - dia;
  const double corr = inner <= 0.0 ? -std::numeric_limits<double>::infinity()
                                   : (2.0 / (1.0 - alpha)) * std::log2(inner);
  return detail_bt::finish_bound("pseudo-continuity-petz", top.exact && bot.exact,
                                 detail_bt::er_shift(bot.value, corr), top.value,
                                 "order-lowered divergence plus the diamond-distance term");
}

// Converse for (n, m, eps) parallel transformations between boxes, in the
// multiplied-through form n*Dn >= m*Dm + (2 alpha/(1-alpha)) log2(1-eps),
// where Dn, Dm are the per-shot Renyi divergences of the tensor powers
// (single-letter closed forms when classical-quantum structure is detected).
inline BoundReport bound_parallel_converse(const ChannelBox& source, const ChannelBox& target,
                                           int n, int m, double eps, double alpha,
                                           int restarts = 8, std::uint64_t seed = 823,
                                           long choi_dim_cap = 256) {
  if (n < 1 || m < 1) throw std::invalid_argument("shot counts must be positive");
  if (!(alpha > 0.5 && alpha < 1.0)) throw std::invalid_argument("order must lie in (1/2, 1)");
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("error must lie in [0, 1)");
  const double beta = alpha / (2.0 * alpha - 1.0);

  const auto per_shot = [&](const ChannelBox& box, const DivergenceSelector& div, int shots,
                            std::uint64_t s) -> detail_bt::RenyiValue {
    if (auto cq = detail_bt::as_cq_box(box)) return {cq_divergence(*cq, div), true};  // additive
    const ChannelBox power = tensor_power_box(box, shots, choi_dim_cap);
    const ExtendedReal v = channel_div_heuristic(div, power, restarts, s).value;
    return {detail_bt::er_scale(v, 1.0 / shots), false};
  };
  const detail_bt::RenyiValue dn =
      per_shot(source, DivergenceSelector::sandwiched(beta), n, seed);
  const detail_bt::RenyiValue dm =
      per_shot(target, DivergenceSelector::sandwiched(alpha), m, seed + 7);

  const double corr =
      eps == 0.0 ? 0.0 : (2.0 * alpha / (1.0 - alpha)) * std::log2(1.0 - eps);
  const ExtendedReal lhs = detail_bt::er_shift(detail_bt::er_scale(dm.value, m), corr);
  const ExtendedReal rhs = detail_bt::er_scale(dn.value, n);
  return detail_bt::finish_bound(
      "parallel-converse", dn.exact && dm.exact, lhs, rhs,
      "n-shot source divergence against m-shot target divergence, multiplied-through form");
}

// Lower bound on the smooth max-relative entropy from a Renyi divergence of
// the stated family, with the order-dependent smoothing penalty.
inline BoundReport bound_smooth_dmax_lower(const ChannelBox& box, double alpha, double eps,
                                           RenyiFamily kind, int restarts = 8,
                                           std::uint64_t seed = 829,
                                           const sdp::SolverSettings& settings = {}) {
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("smoothing must lie in [0, 1)");
  detail_bt::RenyiValue dv;
  double corr;
  const char* name;
  if (kind == RenyiFamily::sandwiched) {
    if (!(alpha >= 0.5 && alpha < 1.0))
      throw std::invalid_argument("sandwiched order must lie in [1/2, 1)");
    dv = detail_bt::channel_renyi(box, DivergenceSelector::sandwiched(alpha), restarts, seed);
    corr = (2.0 * alpha / (alpha - 1.0)) * std::log2(1.0 / (1.0 - eps));
    name = "smooth-max-lower-sandwiched";
  } else {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("Petz order must lie in (0, 1)");
    dv = detail_bt::channel_renyi(box, DivergenceSelector::petz(alpha), restarts, seed);
    corr = (2.0 / (alpha - 1.0)) * std::log2(1.0 / (1.0 - eps));
    name = "smooth-max-lower-petz";
  }
  const ExtendedReal rhs = channel_dmax_eps(box, eps, settings).value;
  return detail_bt::finish_bound(name, dv.exact, detail_bt::er_shift(dv.value, corr), rhs,
                                 "Renyi divergence with the smoothing penalty against the "
                                 "smooth max-relative entropy");
}

// Upper bound on the smooth max-relative entropy of a classical-quantum box
// from the per-symbol Renyi value at order alpha > 1.
inline BoundReport bound_cq_smooth_dmax_upper(const CQBox& cq, double alpha, double eps,
                                              const sdp::SolverSettings& settings = {}) {
  if (!(alpha > 1.0)) throw std::invalid_argument("order must exceed 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("smoothing must lie in (0, 1)");
  const ExtendedReal lhs = channel_dmax_eps(cq.as_box(), eps, settings).value;
  const double corr = std::log2(1.0 / (eps * eps)) / (alpha - 1.0) +
                      std::log2(1.0 / (1.0 - eps * eps));
  const ExtendedReal rhs =
      detail_bt::er_shift(cq_divergence(cq, DivergenceSelector::sandwiched(alpha)), corr);
  return detail_bt::finish_bound(
      "cq-smooth-max-upper", true, lhs, rhs,
      "smooth max-relative entropy against the per-symbol Renyi value plus smoothing terms");
}

}  // namespace boxdist
