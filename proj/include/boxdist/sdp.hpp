#pragma once

#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "boxdist/extended_real.hpp"
#include "boxdist/ipm.hpp"
#include "boxdist/linalg.hpp"
#include "boxdist/rng.hpp"

namespace boxdist::sdp {

// A point assigns one complex matrix to each variable block (scalars are
// 1x1 matrices).
using Point = std::vector<ComplexMatrix>;

// Affine Hermitian-valued function of the variable blocks.
using MatrixExpr = std::function<ComplexMatrix(const Point&)>;

inline Complex scalar_of(const ComplexMatrix& m) { return m(0, 0); }

inline ComplexMatrix scalar_matrix(Complex v) {
  ComplexMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

enum class BlockKind { FreeScalar, NonnegScalar, FreeHermitian, PsdHermitian };

struct VarBlock {
  BlockKind kind;
  int dim;  // matrix dimension (1 for scalars)
  std::string name;

  bool is_scalar() const { return kind == BlockKind::FreeScalar || kind == BlockKind::NonnegScalar; }
  int dof_count() const { return is_scalar() ? 1 : dim * dim; }
};

enum class Sense { Minimize, Maximize };

// Complex-Hermitian conic program builder.  Variables are Hermitian matrix
// blocks (or real scalars); constraints are affine matrix equalities
// (expr == 0) and semidefinite inequalities (expr >= 0); the objective is a
// real affine scalar.  Expressions are sampled on a basis of the variable
// space during assembly, so they only need to be evaluable, not symbolic.
class ConicProgram {
 public:
  int add_free_scalar(std::string name) { return add_block(BlockKind::FreeScalar, 1, std::move(name)); }
  int add_nonneg_scalar(std::string name) { return add_block(BlockKind::NonnegScalar, 1, std::move(name)); }
  int add_free_hermitian(int dim, std::string name) {
    return add_block(BlockKind::FreeHermitian, dim, std::move(name));
  }
  int add_psd_hermitian(int dim, std::string name) {
    return add_block(BlockKind::PsdHermitian, dim, std::move(name));
  }

  void minimize(MatrixExpr objective) { set_objective(Sense::Minimize, std::move(objective)); }
  void maximize(MatrixExpr objective) { set_objective(Sense::Maximize, std::move(objective)); }

  // expr(point) == 0 (as a Hermitian matrix identity).
  void add_equality(std::string name, MatrixExpr expr) {
    equalities_.push_back({std::move(name), std::move(expr)});
  }
  // expr(point) >= 0 (positive semidefinite).
  void add_psd(std::string name, MatrixExpr expr) {
    psds_.push_back({std::move(name), std::move(expr)});
  }

  struct NamedExpr {
    std::string name;
    MatrixExpr expr;
  };

  const std::vector<VarBlock>& blocks() const { return blocks_; }
  const std::vector<NamedExpr>& equalities() const { return equalities_; }
  const std::vector<NamedExpr>& psd_constraints() const { return psds_; }
  Sense sense() const { return sense_; }
  const MatrixExpr& objective() const {
    if (!objective_) throw std::logic_error("conic program has no objective");
    return objective_;
  }

  Point zero_point() const {
    Point p;
    p.reserve(blocks_.size());
    for (const auto& b : blocks_) p.emplace_back(ComplexMatrix::Zero(b.dim, b.dim));
    return p;
  }

 private:
  int add_block(BlockKind kind, int dim, std::string name) {
    if (dim <= 0) throw std::invalid_argument("variable block dimension must be positive");
    blocks_.push_back({kind, dim, std::move(name)});
    return static_cast<int>(blocks_.size()) - 1;
  }
  void set_objective(Sense s, MatrixExpr obj) {
    sense_ = s;
    objective_ = std::move(obj);
  }

  std::vector<VarBlock> blocks_;
  std::vector<NamedExpr> equalities_;
  std::vector<NamedExpr> psds_;
  Sense sense_ = Sense::Minimize;
  MatrixExpr objective_;
};

namespace embed_detail {

// One real degree of freedom of a Hermitian block: a diagonal entry or the
// real/imaginary part of an upper-triangular entry.
struct Dof {
  int row, col;
  bool imag;
};

inline std::vector<Dof> block_dofs(const VarBlock& b) {
  std::vector<Dof> dofs;
  if (b.is_scalar()) {
    dofs.push_back({0, 0, false});
    return dofs;
  }
  dofs.reserve(b.dof_count());
  for (int k = 0; k < b.dim; ++k) dofs.push_back({k, k, false});
  for (int k = 0; k < b.dim; ++k)
    for (int l = k + 1; l < b.dim; ++l) {
      dofs.push_back({k, l, false});
      dofs.push_back({k, l, true});
    }
  return dofs;
}

inline void set_dof(ComplexMatrix& m, const Dof& d, double v) {
  if (d.row == d.col) {
    m(d.row, d.col) = v;
  } else if (d.imag) {
    m(d.row, d.col) += Complex(0, v);
    m(d.col, d.row) += Complex(0, -v);
  } else {
    m(d.row, d.col) += v;
    m(d.col, d.row) += v;
  }
}

inline double get_dof(const ComplexMatrix& m, const Dof& d) {
  if (d.row == d.col) return m(d.row, d.col).real();
  return d.imag ? m(d.row, d.col).imag() : m(d.row, d.col).real();
}

// [[Re, -Im], [Im, Re]]: real-symmetric image of a Hermitian matrix, with
// doubled spectrum.
inline RealMatrix embed_hermitian(const ComplexMatrix& m) {
  const int d = static_cast<int>(m.rows());
  RealMatrix out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = m.real();
  out.topRightCorner(d, d) = -m.imag();
  out.bottomLeftCorner(d, d) = m.imag();
  out.bottomRightCorner(d, d) = m.real();
  return out;
}

// Inverse of embed_hermitian up to the J-invariance averaging that projects
// an arbitrary symmetric 2d x 2d matrix onto the embedded image.
inline ComplexMatrix unembed_hermitian(const RealMatrix& r) {
  const int d = static_cast<int>(r.rows()) / 2;
  const RealMatrix re = 0.5 * (r.topLeftCorner(d, d) + r.bottomRightCorner(d, d));
  const RealMatrix im = 0.5 * (r.bottomLeftCorner(d, d) - r.topRightCorner(d, d));
  ComplexMatrix out(d, d);
  out.real() = 0.5 * (re + re.transpose());
  out.imag() = 0.5 * (im - im.transpose());
  return out;
}

}  // namespace embed_detail

// Assembled real form of a ConicProgram plus the metadata needed to map
// solutions and dual multipliers back to complex blocks.
struct Embedding {
  struct EqInfo {
    std::string name;
    int dim;      // complex constraint dimension
    int row_off;  // first row in A (dim^2 rows)
  };
  struct PsdInfo {
    std::string name;
    int dim;       // complex constraint dimension
    int cone_idx;  // index into real.cone_dims
    int sv_off;    // svec offset in the cone vector
  };

  RealConicProgram real;
  std::vector<VarBlock> blocks;
  std::vector<int> block_dof_off;
  std::vector<EqInfo> eqs;
  std::vector<PsdInfo> psds;  // user constraints first, then variable cones
  std::size_t n_user_psd = 0;

  Point point_from_real(const RealVector& x) const {
    Point p;
    p.reserve(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      ComplexMatrix m = ComplexMatrix::Zero(blocks[k].dim, blocks[k].dim);
      const auto dofs = embed_detail::block_dofs(blocks[k]);
      for (std::size_t j = 0; j < dofs.size(); ++j)
        embed_detail::set_dof(m, dofs[j], x[block_dof_off[k] + static_cast<int>(j)]);
      p.push_back(std::move(m));
    }
    return p;
  }

  // Complex multiplier of equality constraint e, normalized so that the
  // Lagrangian term is trace(Y * expr(point)).
  ComplexMatrix eq_dual_from_real(std::size_t e, const RealVector& y) const {
    const EqInfo& info = eqs[e];
    const int m = info.dim;
    ComplexMatrix Y(m, m);
    int r = info.row_off;
    for (int k = 0; k < m; ++k) Y(k, k) = y[r++];
    for (int k = 0; k < m; ++k)
      for (int l = k + 1; l < m; ++l) {
        const double re = y[r++];
        const double im = y[r++];
        Y(k, l) = Complex(re, im) * 0.5;
        Y(l, k) = Complex(re, -im) * 0.5;
      }
    return Y;
  }

  // Complex multiplier of psd constraint i, normalized so that the
  // Lagrangian term is -trace(Lam * expr(point)) with Lam >= 0.
  ComplexMatrix psd_dual_from_real(std::size_t i, const RealVector& z) const {
    const PsdInfo& info = psds[i];
    const int edim = real.cone_dims[info.cone_idx];
    if (info.dim == 1) return scalar_matrix(z[info.sv_off]);
    const RealMatrix Zr = coneops::smat(z.data() + info.sv_off, edim);
    return 2.0 * embed_detail::unembed_hermitian(Zr);
  }
};

// Samples the program's expressions on the degree-of-freedom basis and
// produces the real conic form.  Throws if an expression is detectably
// non-affine or returns a non-Hermitian matrix.
inline Embedding embed_real(const ConicProgram& prog) {
  using namespace embed_detail;
  if (prog.blocks().empty()) throw std::invalid_argument("conic program has no variables");

  Embedding em;
  em.blocks = prog.blocks();
  int n = 0;
  for (const auto& b : em.blocks) {
    em.block_dof_off.push_back(n);
    n += b.dof_count();
  }

  // Collect constraint expressions: user equalities, user psd constraints,
  // then automatic cones for PsdHermitian / NonnegScalar variables.
  std::vector<ConicProgram::NamedExpr> psd_exprs(prog.psd_constraints());
  em.n_user_psd = psd_exprs.size();
  for (std::size_t k = 0; k < em.blocks.size(); ++k) {
    const VarBlock& b = em.blocks[k];
    if (b.kind == BlockKind::PsdHermitian || b.kind == BlockKind::NonnegScalar) {
      psd_exprs.push_back(
          {b.name + ":cone", [k](const Point& p) -> ComplexMatrix { return p[k]; }});
    }
  }
  const auto& eq_exprs = prog.equalities();

  Point point = prog.zero_point();

  struct Sampled {
    ComplexMatrix c0;
    std::vector<ComplexMatrix> cols;  // coefficient matrix per dof
    ComplexMatrix pred;               // affine prediction at the probe point
  };

  const auto check_herm = [](const ComplexMatrix& m, const std::string& where) {
    const double defect = hermiticity_defect(m);
    if (defect > 1e-8 * std::max(1.0, max_abs(m)))
      throw std::invalid_argument("expression '" + where + "' is not Hermitian-valued");
  };

  // Deterministic probe point for the affinity check.
  Rng rng(0x0b0cd157u);
  RealVector probe(n);
  for (int i = 0; i < n; ++i) probe[i] = rng.uniform(-1.0, 1.0);

  const auto sample = [&](const MatrixExpr& expr, const std::string& name) {
    Sampled s;
    s.c0 = expr(point);  // point is all-zero here
    check_herm(s.c0, name);
    s.c0 = 0.5 * (s.c0 + s.c0.adjoint()).eval();
    s.pred = s.c0;
    s.cols.reserve(n);
    int dof_idx = 0;
    for (std::size_t k = 0; k < em.blocks.size(); ++k) {
      const auto dofs = block_dofs(em.blocks[k]);
      for (const Dof& d : dofs) {
        set_dof(point[k], d, 1.0);
        ComplexMatrix c = expr(point) - s.c0;
        point[k].setZero();
        check_herm(c, name);
        c = 0.5 * (c + c.adjoint()).eval();
        s.pred += probe[dof_idx] * c;
        s.cols.push_back(std::move(c));
        ++dof_idx;
      }
    }
    return s;
  };

  const auto check_affine = [&](const Sampled& s, const MatrixExpr& expr, const std::string& name) {
    Point pp = prog.zero_point();
    for (std::size_t k = 0; k < em.blocks.size(); ++k) {
      const auto dofs = block_dofs(em.blocks[k]);
      for (std::size_t j = 0; j < dofs.size(); ++j)
        set_dof(pp[k], dofs[j], probe[em.block_dof_off[k] + static_cast<int>(j)]);
    }
    const ComplexMatrix actual = expr(pp);
    const double scale = std::max(1.0, max_abs(actual));
    if (max_abs(actual - s.pred) > 1e-6 * scale)
      throw std::invalid_argument("expression '" + name + "' is not affine");
  };

  // Objective.
  const Sampled obj = sample(prog.objective(), "objective");
  check_affine(obj, prog.objective(), "objective");
  if (obj.c0.rows() != 1)
    throw std::invalid_argument("objective must be a 1x1 expression");
  const double sense_sign = prog.sense() == Sense::Maximize ? -1.0 : 1.0;
  em.real.maximize = prog.sense() == Sense::Maximize;
  em.real.c0 = sense_sign * obj.c0(0, 0).real();
  em.real.c = RealVector::Zero(n);
  for (int j = 0; j < n; ++j) em.real.c[j] = sense_sign * obj.cols[j](0, 0).real();

  // Equalities: each complex m x m identity becomes m^2 real rows (diagonal,
  // then Re/Im of the upper triangle).
  int eq_rows = 0;
  std::vector<Sampled> eq_samples;
  eq_samples.reserve(eq_exprs.size());
  for (const auto& ne : eq_exprs) {
    Sampled s = sample(ne.expr, ne.name);
    check_affine(s, ne.expr, ne.name);
    const int m = static_cast<int>(s.c0.rows());
    em.eqs.push_back({ne.name, m, eq_rows});
    eq_rows += m * m;
    eq_samples.push_back(std::move(s));
  }
  em.real.A = RealMatrix::Zero(eq_rows, n);
  em.real.b = RealVector::Zero(eq_rows);
  for (std::size_t e = 0; e < eq_samples.size(); ++e) {
    const Sampled& s = eq_samples[e];
    const int m = em.eqs[e].dim;
    int r = em.eqs[e].row_off;
    const auto emit = [&](int row, const std::function<double(const ComplexMatrix&)>& comp) {
      em.real.b[row] = -comp(s.c0);
      for (int j = 0; j < n; ++j) em.real.A(row, j) = comp(s.cols[j]);
    };
    for (int k = 0; k < m; ++k) {
      emit(r++, [k](const ComplexMatrix& c) { return c(k, k).real(); });
    }
    for (int k = 0; k < m; ++k)
      for (int l = k + 1; l < m; ++l) {
        emit(r++, [k, l](const ComplexMatrix& c) { return c(k, l).real(); });
        emit(r++, [k, l](const ComplexMatrix& c) { return c(k, l).imag(); });
      }
  }

  // Semidefinite constraints: G x + s = h with s in the embedded cone.
  int sv_total = 0;
  std::vector<Sampled> psd_samples;
  psd_samples.reserve(psd_exprs.size());
  for (const auto& ne : psd_exprs) {
    Sampled s = sample(ne.expr, ne.name);
    check_affine(s, ne.expr, ne.name);
    const int m = static_cast<int>(s.c0.rows());
    const int edim = m == 1 ? 1 : 2 * m;
    em.psds.push_back({ne.name, m, static_cast<int>(em.real.cone_dims.size()), sv_total});
    em.real.cone_dims.push_back(edim);
    sv_total += coneops::svec_len(edim);
    psd_samples.push_back(std::move(s));
  }
  em.real.G = RealMatrix::Zero(sv_total, n);
  em.real.h = RealVector::Zero(sv_total);
  for (std::size_t i = 0; i < psd_samples.size(); ++i) {
    const Sampled& s = psd_samples[i];
    const Embedding::PsdInfo& info = em.psds[i];
    if (info.dim == 1) {
      em.real.h[info.sv_off] = s.c0(0, 0).real();
      for (int j = 0; j < n; ++j) em.real.G(info.sv_off, j) = -s.cols[j](0, 0).real();
    } else {
      RealVector buf(coneops::svec_len(2 * info.dim));
      coneops::svec_into(embed_detail::embed_hermitian(s.c0), buf.data());
      em.real.h.segment(info.sv_off, buf.size()) = buf;
      for (int j = 0; j < n; ++j) {
        coneops::svec_into(embed_detail::embed_hermitian(s.cols[j]), buf.data());
        em.real.G.col(j).segment(info.sv_off, buf.size()) = -buf;
      }
    }
  }

  return em;
}

// Solved program: user-sense objective value, complex variable values, and
// complex dual multipliers.  Duals always refer to the internal minimization
// form (a Maximize program is solved as minimize of the negated objective):
// stationarity reads  c_int + sum_eq <Y, .> - sum_psd <Lam, .> = 0.
struct Solution {
  SolveStatus status = SolveStatus::Inaccurate;
  ExtendedReal objective = 0.0;  // user sense; +/-inf for unbounded/infeasible
  double primal_objective = 0.0;  // user sense, finite iterate value
  double dual_objective = 0.0;    // user sense, finite iterate value
  Point variables;
  std::vector<ComplexMatrix> eq_duals;
  std::vector<ComplexMatrix> psd_duals;
  std::vector<std::string> eq_names;
  std::vector<std::string> psd_names;
  double pres = 0, dres = 0, relgap = 0;
  int iterations = 0;
  RealVector raw_x, raw_y, raw_z;

  const ComplexMatrix& var(int handle) const { return variables.at(handle); }
  double var_scalar(int handle) const { return variables.at(handle)(0, 0).real(); }

  const ComplexMatrix& eq_dual(const std::string& name) const {
    return eq_duals.at(find(eq_names, name));
  }
  const ComplexMatrix& psd_dual(const std::string& name) const {
    return psd_duals.at(find(psd_names, name));
  }

  bool usable() const { return status == SolveStatus::Optimal || status == SolveStatus::Inaccurate; }

 private:
  static std::size_t find(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw std::out_of_range("no constraint named '" + name + "'");
  }
};

inline Solution solve(const ConicProgram& prog, const SolverSettings& settings = {}) {
  const Embedding em = embed_real(prog);
  const RealSolution rs = solve_interior_point(em.real, settings);

  Solution sol;
  sol.status = rs.status;
  sol.pres = rs.pres;
  sol.dres = rs.dres;
  sol.relgap = rs.relgap;
  sol.iterations = rs.iterations;
  sol.raw_x = rs.x;
  sol.raw_y = rs.y;
  sol.raw_z = rs.z;

  const double user_sign = em.real.maximize ? -1.0 : 1.0;
  sol.primal_objective = user_sign * rs.pobj;
  sol.dual_objective = user_sign * rs.dobj;
  switch (rs.status) {
    case SolveStatus::Optimal:
    case SolveStatus::Inaccurate:
      sol.objective = 0.5 * (sol.primal_objective + sol.dual_objective);
      break;
    case SolveStatus::Unbounded:
      // Internal minimization diverges to -inf.
      sol.objective = em.real.maximize ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
      break;
    case SolveStatus::Infeasible:
      // inf over the empty set is +inf; sup over the empty set is -inf.
      sol.objective = em.real.maximize ? ExtendedReal::neg_inf() : ExtendedReal::pos_inf();
      break;
  }

  sol.variables = em.point_from_real(rs.x);
  for (std::size_t e = 0; e < em.eqs.size(); ++e) {
    sol.eq_names.push_back(em.eqs[e].name);
    sol.eq_duals.push_back(em.eq_dual_from_real(e, rs.y));
  }
  for (std::size_t i = 0; i < em.psds.size(); ++i) {
    sol.psd_names.push_back(em.psds[i].name);
    sol.psd_duals.push_back(em.psd_dual_from_real(i, rs.z));
  }
  return sol;
}

// Machine-checkable optimality certificate: re-embeds the program and tests
// primal feasibility, dual cone membership, stationarity, complementary
// slackness, and the duality gap of a claimed solution.
struct CertificateReport {
  bool ok = false;
  double max_eq_residual = 0;
  double min_primal_eigenvalue = 0;  // most negative eigenvalue over psd constraints
  double min_dual_eigenvalue = 0;
  double stationarity_residual = 0;
  double max_complementarity = 0;
  double duality_gap = 0;
  std::string failure;
};

inline CertificateReport verify_certificate(const ConicProgram& prog, const Solution& sol,
                                            double tol = 1e-6) {
  const Embedding em = embed_real(prog);
  CertificateReport rep;
  if (!sol.usable()) {
    rep.failure = "solution status is not optimal/inaccurate";
    return rep;
  }
  if (sol.raw_x.size() != em.real.c.size()) {
    rep.failure = "solution does not match program dimensions";
    return rep;
  }

  const Point point = em.point_from_real(sol.raw_x);
  const double obj_scale = 1.0 + std::abs(sol.primal_objective);

  // Primal feasibility.
  if (em.real.b.size() > 0)
    rep.max_eq_residual = (em.real.A * sol.raw_x - em.real.b).cwiseAbs().maxCoeff();
  double min_peig = std::numeric_limits<double>::infinity();
  const auto psd_exprs_value = [&](std::size_t i) -> ComplexMatrix {
    if (i < em.n_user_psd) return prog.psd_constraints()[i].expr(point);
    // Automatic variable cone: find which block it belongs to by name.
    std::size_t seen = em.n_user_psd;
    for (std::size_t k = 0; k < em.blocks.size(); ++k) {
      const auto kind = em.blocks[k].kind;
      if (kind == BlockKind::PsdHermitian || kind == BlockKind::NonnegScalar) {
        if (seen == i) return point[k];
        ++seen;
      }
    }
    throw std::logic_error("psd constraint index out of range");
  };
  for (std::size_t i = 0; i < em.psds.size(); ++i) {
    const ComplexMatrix val = psd_exprs_value(i);
    min_peig = std::min(min_peig, min_eigenvalue(HermitianOperator(val, {}, 1e-6)));
  }
  rep.min_primal_eigenvalue = min_peig;

  // Dual cone membership.
  double min_deig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < em.psds.size(); ++i) {
    const ComplexMatrix lam = em.psd_dual_from_real(i, sol.raw_z);
    min_deig = std::min(min_deig, min_eigenvalue(HermitianOperator(lam, {}, 1e-6)));
  }
  rep.min_dual_eigenvalue = min_deig;

  // Stationarity of the real embedding.
  rep.stationarity_residual =
      (em.real.c + em.real.A.transpose() * sol.raw_y + em.real.G.transpose() * sol.raw_z)
          .cwiseAbs()
          .maxCoeff();

  // Complementary slackness: <Lam_i, E_i(x)> ~ 0.
  for (std::size_t i = 0; i < em.psds.size(); ++i) {
    const ComplexMatrix val = psd_exprs_value(i);
    const ComplexMatrix lam = em.psd_dual_from_real(i, sol.raw_z);
    rep.max_complementarity =
        std::max(rep.max_complementarity, std::abs((lam * val).trace().real()));
  }

  rep.duality_gap = std::abs(sol.primal_objective - sol.dual_objective);

  const double data_scale = std::max(
      {1.0, em.real.b.size() ? em.real.b.cwiseAbs().maxCoeff() : 0.0, em.real.h.cwiseAbs().maxCoeff()});
  const double c_scale = 1.0 + em.real.c.cwiseAbs().maxCoeff();

  if (rep.max_eq_residual > tol * data_scale)
    rep.failure = "equality residual too large";
  else if (rep.min_primal_eigenvalue < -tol * data_scale)
    rep.failure = "primal iterate violates a semidefinite constraint";
  else if (rep.min_dual_eigenvalue < -tol * c_scale)
    rep.failure = "dual multiplier is not positive semidefinite";
  else if (rep.stationarity_residual > tol * c_scale)
    rep.failure = "stationarity residual too large";
  else if (rep.max_complementarity > tol * obj_scale * 10)
    rep.failure = "complementary slackness violated";
  else if (rep.duality_gap > tol * obj_scale * 10)
    rep.failure = "duality gap too large";
  else
    rep.ok = true;
  return rep;
}

}  // namespace boxdist::sdp
