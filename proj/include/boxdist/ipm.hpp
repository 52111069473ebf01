#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxdist/linalg.hpp"

namespace boxdist::sdp {

enum class SolveStatus { Optimal, Inaccurate, Infeasible, Unbounded };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "?";
}

struct SolverSettings {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-7;
  int max_iterations = 100;
  double unbounded_threshold = 1e12;
  bool verbose = false;
};

// Real-embedded conic program in the standard form
//   minimize    c.x + c0
//   subject to  A x = b,   G x + s = h,   s in a product of PSD cones,
// where cone blocks are stored in scaled (svec) coordinates so that the
// Euclidean inner product of two svec vectors equals the trace pairing.
// `maximize` records that the original problem was a maximization whose
// objective was negated on entry (reported values are negated back by the
// caller).
struct RealConicProgram {
  RealVector c;
  double c0 = 0.0;
  bool maximize = false;
  RealMatrix A;
  RealVector b;
  RealMatrix G;
  RealVector h;
  std::vector<int> cone_dims;  // symmetric block sizes; 1 = scalar inequality

  int n_vars() const { return static_cast<int>(c.size()); }
  int n_eq_rows() const { return static_cast<int>(b.size()); }
  int cone_size() const { return static_cast<int>(h.size()); }

  void dump(std::ostream& os) const;
};

struct RealSolution {
  SolveStatus status = SolveStatus::Inaccurate;
  RealVector x, y, z, s;  // primal vars, equality duals, cone duals, slacks
  double pobj = 0, dobj = 0, gap = 0, relgap = 0, pres = 0, dres = 0;
  int iterations = 0;
};

namespace coneops {

inline int svec_len(int d) { return d * (d + 1) / 2; }

// Column-major lower-triangle packing with sqrt(2) on off-diagonal entries.
inline void svec_into(const RealMatrix& m, double* out) {
  const int d = static_cast<int>(m.rows());
  static const double rt2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    out[k++] = m(j, j);
    for (int i = j + 1; i < d; ++i) out[k++] = rt2 * m(i, j);
  }
}

inline RealVector svec(const RealMatrix& m) {
  RealVector v(svec_len(static_cast<int>(m.rows())));
  svec_into(m, v.data());
  return v;
}

inline RealMatrix smat(const double* v, int d) {
  static const double irt2 = 1.0 / std::sqrt(2.0);
  RealMatrix m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    m(j, j) = v[k++];
    for (int i = j + 1; i < d; ++i) {
      m(i, j) = irt2 * v[k];
      m(j, i) = irt2 * v[k];
      ++k;
    }
  }
  return m;
}

struct Layout {
  std::vector<int> dims;
  std::vector<int> offs;  // svec offset of each block
  int total = 0;          // total svec length
  int rank = 0;           // sum of block dimensions (Jordan rank)
};

inline Layout make_layout(const std::vector<int>& dims) {
  Layout l;
  l.dims = dims;
  l.offs.reserve(dims.size());
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("cone block dimension must be positive");
    l.offs.push_back(l.total);
    l.total += svec_len(d);
    l.rank += d;
  }
  return l;
}

// Identity element of the cone (svec of I in every block).
inline RealVector identity_element(const Layout& l) {
  RealVector e = RealVector::Zero(l.total);
  for (std::size_t k = 0; k < l.dims.size(); ++k) {
    int off = l.offs[k];
    for (int j = 0, d = l.dims[k]; j < d; ++j) {
      e[off] = 1.0;
      off += d - j;
    }
  }
  return e;
}

inline double min_eigenvalue(const Layout& l, const RealVector& v) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < l.dims.size(); ++k) {
    const int d = l.dims[k];
    if (d == 1) {
      m = std::min(m, v[l.offs[k]]);
    } else {
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(smat(v.data() + l.offs[k], d),
                                                   Eigen::EigenvaluesOnly);
      m = std::min(m, es.eigenvalues().minCoeff());
    }
  }
  return m;
}

}  // namespace coneops

namespace ipm_detail {

using coneops::Layout;

// Nesterov-Todd scaling per cone block.  R satisfies R' Z R = R^{-1} S R^{-T}
// = diag(lam); Ri = R^{-1} is obtained factor-free from the SVD identity.
struct BlockScaling {
  int d = 1;
  double w = 1.0;        // d == 1: W z = w z with w = sqrt(s/z)
  double lam1 = 1.0;     // d == 1: sqrt(s z)
  RealMatrix R, Ri, Wm, WmInv;  // d > 1; Wm = R R', WmInv = Ri' Ri
  RealVector lam;
};

// Cholesky factor with an eigenvalue-clamping fallback for matrices that
// have drifted marginally indefinite.
inline RealMatrix safe_cholesky(const RealMatrix& m) {
  Eigen::LLT<RealMatrix> llt(m);
  if (llt.info() == Eigen::Success) return RealMatrix(llt.matrixL());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m);
  const double floor = std::max(1e-14, 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff());
  RealMatrix fixed = es.eigenvectors() *
                     es.eigenvalues().cwiseMax(floor).asDiagonal() *
                     es.eigenvectors().transpose();
  Eigen::LLT<RealMatrix> llt2(fixed);
  if (llt2.info() != Eigen::Success)
    throw std::runtime_error("interior-point: cone iterate lost positive definiteness");
  return RealMatrix(llt2.matrixL());
}

struct Scaling {
  std::vector<BlockScaling> blocks;

  void compute(const Layout& l, const RealVector& s, const RealVector& z) {
    blocks.resize(l.dims.size());
    for (std::size_t k = 0; k < l.dims.size(); ++k) {
      BlockScaling& bs = blocks[k];
      const int d = l.dims[k];
      bs.d = d;
      if (d == 1) {
        const double sv = s[l.offs[k]], zv = z[l.offs[k]];
        if (sv <= 0 || zv <= 0)
          throw std::runtime_error("interior-point: scalar iterate left the cone");
        bs.w = std::sqrt(sv / zv);
        bs.lam1 = std::sqrt(sv * zv);
      } else {
        const RealMatrix S = coneops::smat(s.data() + l.offs[k], d);
        const RealMatrix Z = coneops::smat(z.data() + l.offs[k], d);
        const RealMatrix Ls = safe_cholesky(S);
        const RealMatrix Lz = safe_cholesky(Z);
        Eigen::JacobiSVD<RealMatrix> svd(Lz.transpose() * Ls,
                                         Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RealVector sig = svd.singularValues();
        const RealVector isqrt = sig.cwiseSqrt().cwiseInverse();
        bs.R = Ls * svd.matrixV() * isqrt.asDiagonal();
        bs.Ri = isqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
        bs.Wm = bs.R * bs.R.transpose();
        bs.WmInv = bs.Ri.transpose() * bs.Ri;
        bs.lam = sig;
      }
    }
  }

  // z-frame map: W z (per block R' Z R), landing on diag(lam) at the point.
  RealVector scale_z(const Layout& l, const RealVector& v) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      if (bs.d == 1) {
        out[l.offs[k]] = bs.w * v[l.offs[k]];
      } else {
        const RealMatrix M = coneops::smat(v.data() + l.offs[k], bs.d);
        coneops::svec_into(bs.R.transpose() * M * bs.R, out.data() + l.offs[k]);
      }
    }
    return out;
  }

  // s-frame map: W^{-T} s (per block R^{-1} S R^{-T}).
  RealVector scale_s(const Layout& l, const RealVector& v) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      if (bs.d == 1) {
        out[l.offs[k]] = v[l.offs[k]] / bs.w;
      } else {
        const RealMatrix M = coneops::smat(v.data() + l.offs[k], bs.d);
        coneops::svec_into(bs.Ri * M * bs.Ri.transpose(), out.data() + l.offs[k]);
      }
    }
    return out;
  }

  // W' u (per block R U R').
  RealVector apply_Wt(const Layout& l, const RealVector& v) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      if (bs.d == 1) {
        out[l.offs[k]] = bs.w * v[l.offs[k]];
      } else {
        const RealMatrix M = coneops::smat(v.data() + l.offs[k], bs.d);
        coneops::svec_into(bs.R * M * bs.R.transpose(), out.data() + l.offs[k]);
      }
    }
    return out;
  }

  // (W'W)^{-1} u (per block WmInv U WmInv).
  RealVector wtw_inv(const Layout& l, const RealVector& v) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      if (bs.d == 1) {
        out[l.offs[k]] = v[l.offs[k]] / (bs.w * bs.w);
      } else {
        const RealMatrix M = coneops::smat(v.data() + l.offs[k], bs.d);
        coneops::svec_into(bs.WmInv * M * bs.WmInv, out.data() + l.offs[k]);
      }
    }
    return out;
  }

  // (W'W) u (per block Wm U Wm).
  RealVector wtw(const Layout& l, const RealVector& v) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      if (bs.d == 1) {
        out[l.offs[k]] = v[l.offs[k]] * bs.w * bs.w;
      } else {
        const RealMatrix M = coneops::smat(v.data() + l.offs[k], bs.d);
        coneops::svec_into(bs.Wm * M * bs.Wm, out.data() + l.offs[k]);
      }
    }
    return out;
  }

  // Jordan product of two vectors already expressed in the scaled frame.
  RealVector jordan_product(const Layout& l, const RealVector& u, const RealVector& v) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      if (bs.d == 1) {
        out[l.offs[k]] = u[l.offs[k]] * v[l.offs[k]];
      } else {
        const RealMatrix U = coneops::smat(u.data() + l.offs[k], bs.d);
        const RealMatrix V = coneops::smat(v.data() + l.offs[k], bs.d);
        coneops::svec_into(0.5 * (U * V + V * U), out.data() + l.offs[k]);
      }
    }
    return out;
  }

  // Builds the scaled-frame complementarity target L_lam^{-1}(sigma mu I -
  // lam^2 - corr), exploiting that the scaled point is diagonal.
  RealVector target_direction(const Layout& l, double sigma_mu, const RealVector* corr) const {
    RealVector out(l.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      const int off = l.offs[k];
      if (bs.d == 1) {
        double u = sigma_mu - bs.lam1 * bs.lam1;
        if (corr) u -= (*corr)[off];
        out[off] = u / bs.lam1;
      } else {
        RealMatrix U = -(bs.lam.cwiseProduct(bs.lam)).asDiagonal().toDenseMatrix();
        U.diagonal().array() += sigma_mu;
        if (corr) U -= coneops::smat(corr->data() + off, bs.d);
        for (int i = 0; i < bs.d; ++i)
          for (int j = 0; j < bs.d; ++j) U(i, j) *= 2.0 / (bs.lam[i] + bs.lam[j]);
        coneops::svec_into(U, out.data() + off);
      }
    }
    return out;
  }

  // Largest t with lam + t * D staying in the cone, for a scaled direction D.
  double max_step(const Layout& l, const RealVector& dir) const {
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const BlockScaling& bs = blocks[k];
      const int off = l.offs[k];
      if (bs.d == 1) {
        const double d = dir[off];
        if (d < 0) step = std::min(step, -bs.lam1 / d);
      } else {
        RealMatrix D = coneops::smat(dir.data() + off, bs.d);
        const RealVector isqrt = bs.lam.cwiseSqrt().cwiseInverse();
        D = isqrt.asDiagonal() * D * isqrt.asDiagonal();
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(D, Eigen::EigenvaluesOnly);
        const double m = es.eigenvalues().minCoeff();
        if (m < 0) step = std::min(step, -1.0 / m);
      }
    }
    return step;
  }

  double gap_lambda() const {  // <s, z> computed as |lam|^2
    double g = 0;
    for (const auto& bs : blocks)
      g += bs.d == 1 ? bs.lam1 * bs.lam1 : bs.lam.squaredNorm();
    return g;
  }
};

// svec-coordinate matrix of the congruence U -> M U M for symmetric M.
inline RealMatrix sym_kron_map(const RealMatrix& m) {
  const int d = static_cast<int>(m.rows());
  const int len = coneops::svec_len(d);
  static const double rt2 = std::sqrt(2.0);
  RealMatrix k(len, len);
  int row = 0;
  for (int b = 0; b < d; ++b)
    for (int a = b; a < d; ++a) {
      const double rs = a == b ? 1.0 : rt2;
      int col = 0;
      for (int l = 0; l < d; ++l)
        for (int kk = l; kk < d; ++kk) {
          const double cs = kk == l ? 1.0 : rt2;
          k(row, col) = 0.5 * rs * cs * (m(a, kk) * m(b, l) + m(a, l) * m(b, kk));
          ++col;
        }
      ++row;
    }
  return k;
}

// Factorized KKT system for the current scaling:
//   [0 A' G'; A 0 0; G 0 -W'W] (dx, dy, dz) = (bx, by, bz)
// Primary path: elimination through H = G' (W'W)^{-1} G with monitored
// iterative refinement.  That elimination loses all accuracy near the cone
// boundary (intermediates are amplified by z/s before cancelling), so when
// the verified residual stays large the system is re-solved with a
// backward-stable LU factorization of the full KKT matrix.
class KktSolver {
 public:
  void factor(const RealConicProgram& p, const Layout& l, const Scaling* scal) {
    p_ = &p;
    l_ = &l;
    scal_ = scal;
    lu_ready_ = false;
    const int n = p.n_vars();
    Ghat_.resize(p.G.rows(), n);
    if (scal) {
      for (int j = 0; j < n; ++j) Ghat_.col(j) = scal->wtw_inv(l, p.G.col(j));
    } else {
      Ghat_ = p.G;
    }
    RealMatrix H = p.G.transpose() * Ghat_;
    H = 0.5 * (H + H.transpose()).eval();
    delta_ = 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt) {
      RealMatrix Hreg = H;
      Hreg.diagonal().array() += delta_;
      hllt_.compute(Hreg);
      if (hllt_.info() != Eigen::Success) {
        delta_ *= 100.0;
        continue;
      }
      if (p.n_eq_rows() > 0) {
        HinvAt_ = hllt_.solve(p.A.transpose());
        RealMatrix S = p.A * HinvAt_;
        S = 0.5 * (S + S.transpose()).eval();
        S.diagonal().array() += delta_;
        sllt_.compute(S);
        if (sllt_.info() != Eigen::Success) {
          delta_ *= 100.0;
          continue;
        }
      }
      return;
    }
    throw std::runtime_error("interior-point: KKT factorization failed");
  }

  void solve(const RealVector& bx, const RealVector& by, const RealVector& bz,
             RealVector& dx, RealVector& dy, RealVector& dz) const {
    const double bscale =
        1.0 + std::max({bx.size() ? bx.cwiseAbs().maxCoeff() : 0.0,
                        by.size() ? by.cwiseAbs().maxCoeff() : 0.0,
                        bz.size() ? bz.cwiseAbs().maxCoeff() : 0.0});
    solve_schur(bx, by, bz, dx, dy, dz);
    double res = residual_norm(bx, by, bz, dx, dy, dz);
    // Monitored refinement: keep corrections only while they help.
    for (int round = 0; round < 3 && res > 1e-13 * bscale; ++round) {
      RealVector r1, r2, r3;
      residuals(bx, by, bz, dx, dy, dz, r1, r2, r3);
      RealVector ex, ey, ez;
      solve_schur(r1, r2, r3, ex, ey, ez);
      const RealVector nx = dx + ex, ny = dy + ey, nz = dz + ez;
      const double nres = residual_norm(bx, by, bz, nx, ny, nz);
      if (nres >= res) break;
      dx = nx;
      dy = ny;
      dz = nz;
      res = nres;
    }
    if (res > 1e-9 * bscale) {
      RealVector lx, ly, lz;
      if (solve_lu(bx, by, bz, lx, ly, lz)) {
        const double lres = residual_norm(bx, by, bz, lx, ly, lz);
        if (lres < res) {
          dx = lx;
          dy = ly;
          dz = lz;
        }
      }
    }
  }

 private:
  void solve_schur(const RealVector& bx, const RealVector& by, const RealVector& bz,
                   RealVector& dx, RealVector& dy, RealVector& dz) const {
    const RealVector bz_t = scal_ ? scal_->wtw_inv(*l_, bz) : bz;
    const RealVector rhs_x = bx + p_->G.transpose() * bz_t;
    if (p_->n_eq_rows() > 0) {
      const RealVector t1 = hllt_.solve(rhs_x);
      dy = sllt_.solve(p_->A * t1 - by);
      dx = hllt_.solve(rhs_x - p_->A.transpose() * dy);
    } else {
      dy = RealVector::Zero(0);
      dx = hllt_.solve(rhs_x);
    }
    const RealVector gdx = p_->G * dx;
    dz = scal_ ? scal_->wtw_inv(*l_, gdx - bz) : RealVector(gdx - bz);
  }

  void residuals(const RealVector& bx, const RealVector& by, const RealVector& bz,
                 const RealVector& dx, const RealVector& dy, const RealVector& dz,
                 RealVector& r1, RealVector& r2, RealVector& r3) const {
    r1 = bx - (p_->A.transpose() * dy + p_->G.transpose() * dz);
    r2 = by - p_->A * dx;
    const RealVector wtwdz = scal_ ? scal_->wtw(*l_, dz) : dz;
    r3 = bz - (p_->G * dx - wtwdz);
  }

  double residual_norm(const RealVector& bx, const RealVector& by, const RealVector& bz,
                       const RealVector& dx, const RealVector& dy, const RealVector& dz) const {
    RealVector r1, r2, r3;
    residuals(bx, by, bz, dx, dy, dz, r1, r2, r3);
    return std::max({r1.size() ? r1.cwiseAbs().maxCoeff() : 0.0,
                     r2.size() ? r2.cwiseAbs().maxCoeff() : 0.0,
                     r3.size() ? r3.cwiseAbs().maxCoeff() : 0.0});
  }

  void build_lu() const {
    const int n = p_->n_vars();
    const int p = p_->n_eq_rows();
    const int m = p_->cone_size();
    const int total = n + p + m;
    kmat_ = RealMatrix::Zero(total, total);
    kmat_.block(0, n, n, p) = p_->A.transpose();
    kmat_.block(0, n + p, n, m) = p_->G.transpose();
    kmat_.block(n, 0, p, n) = p_->A;
    kmat_.block(n + p, 0, m, n) = p_->G;
    for (std::size_t k = 0; k < l_->dims.size(); ++k) {
      const int d = l_->dims[k];
      const int off = n + p + l_->offs[k];
      if (!scal_) {
        kmat_.block(off, off, coneops::svec_len(d), coneops::svec_len(d)) =
            -RealMatrix::Identity(coneops::svec_len(d), coneops::svec_len(d));
      } else if (d == 1) {
        const double w = scal_->blocks[k].w;
        kmat_(off, off) = -w * w;
      } else {
        kmat_.block(off, off, coneops::svec_len(d), coneops::svec_len(d)) =
            -sym_kron_map(scal_->blocks[k].Wm);
      }
    }
    RealMatrix kreg = kmat_;
    const double dreg = 1e-11 * (1.0 + kmat_.cwiseAbs().maxCoeff());
    kreg.diagonal().head(n).array() += dreg;
    kreg.diagonal().tail(p + m).array() -= dreg;
    lu_.compute(kreg);
    lu_ready_ = true;
  }

  bool solve_lu(const RealVector& bx, const RealVector& by, const RealVector& bz, RealVector& dx,
                RealVector& dy, RealVector& dz) const {
    const int n = p_->n_vars();
    const int p = p_->n_eq_rows();
    const int m = p_->cone_size();
    if (!lu_ready_) build_lu();
    RealVector rhs(n + p + m);
    rhs << bx, by, bz;
    RealVector sol = lu_.solve(rhs);
    // One refinement round against the unregularized matrix.
    sol += lu_.solve(rhs - kmat_ * sol);
    if (!sol.allFinite()) return false;
    dx = sol.head(n);
    dy = sol.segment(n, p);
    dz = sol.tail(m);
    return true;
  }

  const RealConicProgram* p_ = nullptr;
  const Layout* l_ = nullptr;
  const Scaling* scal_ = nullptr;
  RealMatrix Ghat_, HinvAt_;
  Eigen::LLT<RealMatrix> hllt_;
  Eigen::LLT<RealMatrix> sllt_;
  double delta_ = 0.0;
  mutable bool lu_ready_ = false;
  mutable RealMatrix kmat_;
  mutable Eigen::PartialPivLU<RealMatrix> lu_;
};

}  // namespace ipm_detail

// Primal-dual path-following solver with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step.
inline RealSolution solve_interior_point(const RealConicProgram& prog,
                                         const SolverSettings& settings = {}) {
  using namespace ipm_detail;
  if (prog.cone_dims.empty())
    throw std::invalid_argument("interior-point: program has no conic constraints");
  const coneops::Layout layout = coneops::make_layout(prog.cone_dims);
  if (layout.total != prog.cone_size() || prog.G.rows() != layout.total)
    throw std::invalid_argument("interior-point: cone layout does not match G/h");

  const int n = prog.n_vars();
  const int p = prog.n_eq_rows();
  const double norm_b = std::max(1.0, prog.b.size() ? prog.b.norm() : 0.0);
  const double norm_h = std::max(1.0, prog.h.norm());
  const double norm_c = std::max(1.0, prog.c.norm());

  RealSolution sol;
  sol.x = RealVector::Zero(n);
  sol.y = RealVector::Zero(p);

  // Initial point: least-squares solves with identity scaling, nudged into
  // the cone interior.
  KktSolver kkt;
  kkt.factor(prog, layout, nullptr);
  const RealVector e = coneops::identity_element(layout);
  {
    // The least-squares point can land exactly on the cone boundary, which
    // starts the iteration with a near-zero duality gap; require the initial
    // minimum eigenvalue to be a solid fraction of the iterate scale.
    const auto into_interior = [&](const RealVector& v) {
      const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
      const double alpha = -coneops::min_eigenvalue(layout, v);
      if (alpha < -0.1 * scale) return v;
      return RealVector(v + (alpha + scale) * e);
    };
    RealVector dx, dy, dz;
    kkt.solve(RealVector::Zero(n), prog.b, prog.h, dx, dy, dz);
    sol.x = dx;
    sol.s = into_interior(-dz);  // -dz = h - G x

    kkt.solve(-prog.c, RealVector::Zero(p), RealVector::Zero(layout.total), dx, dy, dz);
    sol.y = dy;
    sol.z = into_interior(dz);
  }

  RealSolution best = sol;
  double best_err = std::numeric_limits<double>::infinity();

  const int rank = layout.rank;
  Scaling scal;
  int stall_count = 0;
  double prev_mu = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    // Residuals and objective values.
    const RealVector rx = prog.A.transpose() * sol.y + prog.G.transpose() * sol.z + prog.c;
    const RealVector ry = prog.A * sol.x - prog.b;
    const RealVector rz = prog.G * sol.x + sol.s - prog.h;
    const double gap = sol.s.dot(sol.z);
    const double pobj = prog.c.dot(sol.x);
    const double dobj = -(prog.h.dot(sol.z) + (p ? prog.b.dot(sol.y) : 0.0));
    const double pres = std::max(p ? ry.norm() / norm_b : 0.0, rz.norm() / norm_h);
    const double dres = rx.norm() / norm_c;
    const double relgap = std::abs(pobj - dobj) / std::max(1.0, std::abs(pobj));

    sol.pobj = pobj + prog.c0;
    sol.dobj = dobj + prog.c0;
    sol.gap = gap;
    sol.relgap = relgap;
    sol.pres = pres;
    sol.dres = dres;
    sol.iterations = iter;

    if (settings.verbose) {
      // Plain iteration trace for debugging.
      std::fprintf(stderr, "ipm %3d  p=% .6e d=% .6e gap=%.3e pres=%.3e dres=%.3e\n", iter,
                   sol.pobj, sol.dobj, gap, pres, dres);
    }

    const double err = std::max({pres, dres, std::min(relgap, gap)});
    if (err < best_err) {
      best_err = err;
      best = sol;
    }

    if (pres <= settings.feasibility_tol && dres <= settings.feasibility_tol &&
        (relgap <= settings.gap_tol || gap <= settings.gap_tol * 1e-2)) {
      sol.status = SolveStatus::Optimal;
      return sol;
    }

    // Primal infeasibility certificate: (y, z) with A'y + G'z ~ 0, z in cone,
    // h.z + b.y < 0.
    {
      const double cert = -(prog.h.dot(sol.z) + (p ? prog.b.dot(sol.y) : 0.0));
      if (cert > settings.feasibility_tol) {
        const double res = (prog.A.transpose() * sol.y + prog.G.transpose() * sol.z).norm();
        if (res / cert <= settings.feasibility_tol * norm_c) {
          sol.status = SolveStatus::Infeasible;
          sol.y /= cert;
          sol.z /= cert;
          return sol;
        }
      }
    }
    // Dual infeasibility certificate (primal unbounded ray): x with A x ~ 0,
    // G x <= 0, c.x < 0.
    if (pobj < 0) {
      const double scale = -pobj;
      const RealVector xt = sol.x / scale;
      const RealVector gxt = prog.G * xt;
      const double eq_res = p ? (prog.A * xt).norm() : 0.0;
      const double cone_violation = std::max(0.0, coneops::min_eigenvalue(layout, -gxt) * -1.0);
      if (eq_res <= settings.feasibility_tol * norm_b &&
          cone_violation <= settings.feasibility_tol * norm_h) {
        sol.status = SolveStatus::Unbounded;
        return sol;
      }
    }
    if (-sol.pobj > settings.unbounded_threshold && pres <= settings.feasibility_tol) {
      sol.status = SolveStatus::Unbounded;
      return sol;
    }

    if (iter == settings.max_iterations) break;

    // Stalls are declared generously: infeasible instances hold mu constant
    // on purpose while the Farkas certificate grows across many iterations.
    const double mu = gap / rank;
    if (mu > 0.95 * prev_mu) {
      if (++stall_count >= 40) break;
    } else {
      stall_count = 0;
    }
    prev_mu = mu;

    scal.compute(layout, sol.s, sol.z);
    kkt.factor(prog, layout, &scal);

    // Predictor (affine scaling) direction.
    RealVector dxa, dya, dza;
    {
      const RealVector target = scal.target_direction(layout, 0.0, nullptr);
      const RealVector bz = -rz - scal.apply_Wt(layout, target);
      kkt.solve(-rx, -ry, bz, dxa, dya, dza);
    }
    RealVector dsa = -rz - prog.G * dxa;
    const RealVector dsa_sc = scal.scale_s(layout, dsa);
    const RealVector dza_sc = scal.scale_z(layout, dza);
    const double alpha_aff =
        std::min({1.0, scal.max_step(layout, dsa_sc), scal.max_step(layout, dza_sc)});
    const double gap_aff =
        (sol.s + alpha_aff * dsa).dot(sol.z + alpha_aff * dza);
    double sigma = std::pow(std::max(0.0, gap_aff / gap), 3.0);
    sigma = std::min(1.0, sigma);

    // Combined predictor-corrector direction.  The slack step follows from
    // the scaled complementarity equation W^{-T} ds + W dz = target.
    RealVector dx, dy, dz;
    const RealVector corr = scal.jordan_product(layout, dsa_sc, dza_sc);
    const RealVector target = scal.target_direction(layout, sigma * mu, &corr);
    {
      const double rscale = 1.0 - sigma;
      const RealVector bz = -rscale * rz - scal.apply_Wt(layout, target);
      kkt.solve(-rscale * rx, -rscale * ry, bz, dx, dy, dz);
    }
    const RealVector ds = scal.apply_Wt(layout, target - scal.scale_z(layout, dz));

    const RealVector ds_sc = scal.scale_s(layout, ds);
    const RealVector dz_sc = scal.scale_z(layout, dz);
    double alpha =
        std::min({1.0, 0.99 * scal.max_step(layout, ds_sc), 0.99 * scal.max_step(layout, dz_sc)});
    // Infeasible-path neighborhood: while the iterate is still infeasible,
    // keep the duality gap from collapsing faster than the residuals, else
    // the scaling turns singular before feasibility is reached.
    const double res_now = std::max(pres, dres);
    if (res_now > settings.feasibility_tol) {
      const double obj_scale = std::max(1.0, std::abs(pobj));
      for (int bt = 0; bt < 60 && alpha > 1e-8; ++bt) {
        const double gap_a = (sol.s + alpha * ds).dot(sol.z + alpha * dz);
        const double res_a = (1.0 - alpha * (1.0 - sigma)) * res_now;
        if (gap_a >= 0.01 * obj_scale * res_a) break;
        alpha *= 0.8;
      }
    }
    if (!(alpha > 1e-12)) break;

    if (settings.verbose) {
      const RealVector wtwdz = scal.wtw(layout, dz);
      const double kkt3 = (prog.G * dx - wtwdz -
                           (-(1.0 - sigma) * rz - scal.apply_Wt(layout, target)))
                              .norm();
      const double cons = (prog.G * dx + ds + (1.0 - sigma) * rz).norm();
      std::fprintf(stderr, "      alpha=%.3e sigma=%.3e aff=%.3e kkt3=%.3e cons=%.3e\n", alpha,
                   sigma, alpha_aff, kkt3, cons);
    }

    sol.x += alpha * dx;
    sol.y += alpha * dy;
    sol.s += alpha * ds;
    sol.z += alpha * dz;
  }

  // The iteration budget ran out (or the gap stalled) before the strict
  // in-loop certificate tolerance was met.  Diverging iterates still encode
  // approximate Farkas certificates; accept the final ray at a looser
  // relative tolerance so a genuinely infeasible or unbounded instance is
  // reported as such instead of as a meaningless midpoint iterate.  The
  // absolute floor on the certificate value keeps near-optimal iterates of
  // feasible problems (where both numerator and denominator vanish) from
  // being mistaken for rays.
  {
    const double loose = 1e-6;
    const double cert = -(prog.h.dot(sol.z) + (p ? prog.b.dot(sol.y) : 0.0));
    if (cert > 1.0) {
      const double res = (prog.A.transpose() * sol.y + prog.G.transpose() * sol.z).norm();
      if (res / cert <= loose * norm_c) {
        sol.status = SolveStatus::Infeasible;
        sol.y /= cert;
        sol.z /= cert;
        return sol;
      }
    }
    const double pobj = prog.c.dot(sol.x);
    if (pobj < -1.0) {
      const RealVector xt = sol.x / -pobj;
      const double eq_res = p ? (prog.A * xt).norm() : 0.0;
      const double cone_violation =
          std::max(0.0, coneops::min_eigenvalue(layout, -(prog.G * xt)) * -1.0);
      if (eq_res <= loose * norm_b && cone_violation <= loose * norm_h) {
        sol.status = SolveStatus::Unbounded;
        return sol;
      }
    }
  }

  best.status = SolveStatus::Inaccurate;
  return best;
}

inline void RealConicProgram::dump(std::ostream& os) const {
  os << "# real conic program\n";
  os << (maximize ? "maximize" : "minimize") << " (objective stored negated for maximize)\n";
  os << "vars " << n_vars() << "  eq_rows " << n_eq_rows() << "  cones";
  for (int d : cone_dims) os << ' ' << d;
  os << "\nc0 " << c0 << "\n";
  os << "c:";
  for (int i = 0; i < c.size(); ++i)
    if (c[i] != 0.0) os << ' ' << i << ':' << c[i];
  os << "\nA (row col value):\n";
  for (int r = 0; r < A.rows(); ++r)
    for (int cc = 0; cc < A.cols(); ++cc)
      if (A(r, cc) != 0.0) os << r << ' ' << cc << ' ' << A(r, cc) << '\n';
  os << "b (row value):\n";
  for (int r = 0; r < b.size(); ++r)
    if (b[r] != 0.0) os << r << ' ' << b[r] << '\n';
  os << "G (row col value):\n";
  for (int r = 0; r < G.rows(); ++r)
    for (int cc = 0; cc < G.cols(); ++cc)
      if (G(r, cc) != 0.0) os << r << ' ' << cc << ' ' << G(r, cc) << '\n';
  os << "h (row value):\n";
  for (int r = 0; r < h.size(); ++r)
    if (h[r] != 0.0) os << r << ' ' << h[r] << '\n';
}

}  // namespace boxdist::sdp
