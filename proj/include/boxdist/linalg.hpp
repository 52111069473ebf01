#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxdist {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-10;  // default Hermiticity tolerance
inline constexpr double kRankTol = 1e-10;       // default rank / support cutoff

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

// A Hermitian matrix tagged with a tensor-factor structure.  `dims` lists the
// subsystem dimensions in order; their product must equal the matrix size.
// Construction rejects matrices that are not Hermitian within tolerance
// (scaled by the largest entry once that exceeds 1) and stores the exactly
// symmetrized matrix.
struct HermitianOperator {
  ComplexMatrix mat;
  std::vector<int> dims;

  HermitianOperator() = default;

  // An empty dims list means a single factor of the full dimension.
  HermitianOperator(ComplexMatrix m, std::vector<int> subsystem_dims = {},
                    double tol = kHermitianTol)
      : dims(std::move(subsystem_dims)) {
    if (m.rows() != m.cols()) throw std::invalid_argument("HermitianOperator: matrix not square");
    if (dims.empty()) dims = {static_cast<int>(m.rows())};
    long prod = 1;
    for (int d : dims) {
      if (d <= 0) throw std::invalid_argument("HermitianOperator: nonpositive subsystem dim");
      prod *= d;
    }
    if (prod != m.rows())
      throw std::invalid_argument("HermitianOperator: subsystem dims do not factor the matrix size");
    const double scale = std::max(1.0, max_abs(m));
    if (hermiticity_defect(m) > tol * scale)
      throw std::invalid_argument("HermitianOperator: matrix not Hermitian within tolerance");
    mat = 0.5 * (m + m.adjoint().eval());
  }

  int dim() const { return static_cast<int>(mat.rows()); }
  int n_subsystems() const { return static_cast<int>(dims.size()); }

  // Same matrix, reinterpreted with a different factorization.
  HermitianOperator with_dims(std::vector<int> new_dims) const {
    return HermitianOperator(mat, std::move(new_dims));
  }
};

inline ComplexMatrix identity_matrix(int d) { return ComplexMatrix::Identity(d, d); }

// --- tensor index helpers -------------------------------------------------

namespace detail {

inline std::vector<long> index_strides(const std::vector<int>& dims) {
  std::vector<long> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    s[k] = s[k + 1] * dims[k + 1];
  return s;
}

inline void decompose(long flat, const std::vector<long>& strides, std::vector<int>& digits) {
  for (std::size_t k = 0; k < strides.size(); ++k) {
    digits[k] = static_cast<int>(flat / strides[k]);
    flat %= strides[k];
  }
}

inline long recompose(const std::vector<int>& digits, const std::vector<long>& strides) {
  long flat = 0;
  for (std::size_t k = 0; k < strides.size(); ++k) flat += digits[k] * strides[k];
  return flat;
}

}  // namespace detail

// Kronecker product; the row-index convention is (i_a * dim_b + i_b).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
  std::vector<int> dims = a.dims;
  dims.insert(dims.end(), b.dims.begin(), b.dims.end());
  return HermitianOperator(kron(a.mat, b.mat), std::move(dims));
}

// Partial trace keeping the listed subsystems (in their original order).
inline HermitianOperator partial_trace(const HermitianOperator& h, const std::vector<int>& keep) {
  const auto& dims = h.dims;
  const int n = h.n_subsystems();
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw std::invalid_argument("partial_trace: subsystem index out of range");
    if (kept[k]) throw std::invalid_argument("partial_trace: duplicate subsystem index");
    kept[k] = true;
  }
  for (std::size_t i = 1; i < keep.size(); ++i)
    if (keep[i] <= keep[i - 1])
      throw std::invalid_argument("partial_trace: keep list must be strictly increasing");

  std::vector<int> keep_dims, trace_dims;
  std::vector<int> keep_pos, trace_pos;
  for (int k = 0; k < n; ++k) {
    if (kept[k]) {
      keep_dims.push_back(dims[k]);
      keep_pos.push_back(k);
    } else {
      trace_dims.push_back(dims[k]);
      trace_pos.push_back(k);
    }
  }
  const long dk = std::accumulate(keep_dims.begin(), keep_dims.end(), 1L, std::multiplies<>());
  const long dt = std::accumulate(trace_dims.begin(), trace_dims.end(), 1L, std::multiplies<>());

  const auto strides = detail::index_strides(dims);
  const auto kstrides = detail::index_strides(keep_dims);
  const auto tstrides = detail::index_strides(trace_dims);

  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  std::vector<int> kd(keep_dims.size()), ld(keep_dims.size()), td(trace_dims.size());
  std::vector<int> full_r(n), full_c(n);
  for (long i = 0; i < dk; ++i) {
    detail::decompose(i, kstrides, kd);
    for (long j = 0; j < dk; ++j) {
      detail::decompose(j, kstrides, ld);
      Complex acc = 0.0;
      for (long t = 0; t < dt; ++t) {
        detail::decompose(t, tstrides, td);
        for (std::size_t p = 0; p < keep_pos.size(); ++p) {
          full_r[keep_pos[p]] = kd[p];
          full_c[keep_pos[p]] = ld[p];
        }
        for (std::size_t p = 0; p < trace_pos.size(); ++p) {
          full_r[trace_pos[p]] = td[p];
          full_c[trace_pos[p]] = td[p];
        }
        acc += h.mat(detail::recompose(full_r, strides), detail::recompose(full_c, strides));
      }
      out(i, j) = acc;
    }
  }
  return HermitianOperator(out, keep_dims.empty() ? std::vector<int>{1} : keep_dims);
}

// Transpose applied to the listed subsystems only (partial transpose).
// The result of a partial transpose of a Hermitian matrix is Hermitian.
inline HermitianOperator transpose_subsystems(const HermitianOperator& h,
                                              const std::vector<int>& subs) {
  const int n = h.n_subsystems();
  std::vector<bool> flip(n, false);
  for (int k : subs) {
    if (k < 0 || k >= n)
      throw std::invalid_argument("transpose_subsystems: subsystem index out of range");
    flip[k] = true;
  }
  const auto strides = detail::index_strides(h.dims);
  const long d = h.dim();
  ComplexMatrix out(d, d);
  std::vector<int> rd(n), cd(n);
  for (long r = 0; r < d; ++r) {
    detail::decompose(r, strides, rd);
    for (long c = 0; c < d; ++c) {
      detail::decompose(c, strides, cd);
      std::vector<int> nr = rd, nc = cd;
      for (int k = 0; k < n; ++k)
        if (flip[k]) std::swap(nr[k], nc[k]);
      out(detail::recompose(nr, strides), detail::recompose(nc, strides)) = h.mat(r, c);
    }
  }
  return HermitianOperator(out, h.dims);
}

// Reorders tensor factors: factor p of the result is factor perm[p] of the
// input.  perm must be a permutation of 0..n-1.
inline HermitianOperator permute_subsystems(const HermitianOperator& h,
                                            const std::vector<int>& perm) {
  const int n = h.n_subsystems();
  if (static_cast<int>(perm.size()) != n)
    throw std::invalid_argument("permute_subsystems: permutation has wrong length");
  std::vector<bool> seen(n, false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p])
      throw std::invalid_argument("permute_subsystems: not a permutation");
    seen[p] = true;
  }
  std::vector<int> new_dims(n);
  for (int p = 0; p < n; ++p) new_dims[p] = h.dims[perm[p]];

  const auto old_strides = detail::index_strides(h.dims);
  const auto new_strides = detail::index_strides(new_dims);
  const long d = h.dim();
  std::vector<long> map(d);
  std::vector<int> digits(n), nd(n);
  for (long r = 0; r < d; ++r) {
    detail::decompose(r, old_strides, digits);
    for (int p = 0; p < n; ++p) nd[p] = digits[perm[p]];
    map[r] = detail::recompose(nd, new_strides);
  }
  ComplexMatrix out(d, d);
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) out(map[r], map[c]) = h.mat(r, c);
  return HermitianOperator(out, new_dims);
}

// Unitary matrix realizing permute_subsystems, i.e. P * v reorders the
// factors of a product vector.
inline ComplexMatrix permutation_matrix(const std::vector<int>& dims, const std::vector<int>& perm) {
  std::vector<int> new_dims(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) new_dims[p] = dims[perm[p]];
  const auto old_strides = detail::index_strides(dims);
  const auto new_strides = detail::index_strides(new_dims);
  const long d = std::accumulate(dims.begin(), dims.end(), 1L, std::multiplies<>());
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  std::vector<int> digits(dims.size()), nd(dims.size());
  for (long r = 0; r < d; ++r) {
    detail::decompose(r, old_strides, digits);
    for (std::size_t p = 0; p < perm.size(); ++p) nd[p] = digits[perm[p]];
    out(detail::recompose(nd, new_strides), r) = 1.0;
  }
  return out;
}

// --- spectral operations --------------------------------------------------

struct EigResult {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns, orthonormal
};

inline EigResult eig_hermitian(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.mat);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: eigensolver failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline EigResult eig_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
  return eig_hermitian(HermitianOperator(m, {}, tol));
}

// Projector onto the span of eigenvectors with |eigenvalue| > rank_tol.
inline HermitianOperator support_projector(const HermitianOperator& h, double rank_tol = kRankTol) {
  const EigResult e = eig_hermitian(h);
  ComplexMatrix p = ComplexMatrix::Zero(h.dim(), h.dim());
  for (int k = 0; k < e.values.size(); ++k)
    if (std::abs(e.values[k]) > rank_tol)
      p += e.vectors.col(k) * e.vectors.col(k).adjoint();
  return HermitianOperator(p, h.dims, 1e-8);
}

inline int support_rank(const HermitianOperator& h, double rank_tol = kRankTol) {
  const EigResult e = eig_hermitian(h);
  int r = 0;
  for (int k = 0; k < e.values.size(); ++k)
    if (std::abs(e.values[k]) > rank_tol) ++r;
  return r;
}

// Applies f to the spectrum.  With on_support set, eigenvalues within
// rank_tol of zero map to zero without calling f (for functions such as
// log or inverse powers that are undefined at 0).
inline HermitianOperator spectral_fn(const HermitianOperator& h,
                                     const std::function<double(double)>& f,
                                     bool on_support = false, double rank_tol = kRankTol) {
  const EigResult e = eig_hermitian(h);
  ComplexMatrix out = ComplexMatrix::Zero(h.dim(), h.dim());
  for (int k = 0; k < e.values.size(); ++k) {
    const double lambda = e.values[k];
    if (on_support && std::abs(lambda) <= rank_tol) continue;
    out += f(lambda) * (e.vectors.col(k) * e.vectors.col(k).adjoint());
  }
  return HermitianOperator(out, h.dims, 1e-8);
}

struct Norms {
  double operator_norm;  // largest |eigenvalue|
  double trace_norm;     // sum of |eigenvalues|
};

inline Norms norms(const HermitianOperator& h) {
  const EigResult e = eig_hermitian(h);
  double op = 0.0, tr = 0.0;
  for (int k = 0; k < e.values.size(); ++k) {
    op = std::max(op, std::abs(e.values[k]));
    tr += std::abs(e.values[k]);
  }
  return {op, tr};
}

inline double operator_norm(const HermitianOperator& h) { return norms(h).operator_norm; }
inline double trace_norm(const HermitianOperator& h) { return norms(h).trace_norm; }

inline double min_eigenvalue(const HermitianOperator& h) {
  return eig_hermitian(h).values.minCoeff();
}

inline double real_trace(const ComplexMatrix& m) { return m.trace().real(); }

// Real Hilbert-Schmidt pairing Tr[A B] of two Hermitian matrices.
inline double herm_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a * b).trace().real();
}

}  // namespace boxdist
