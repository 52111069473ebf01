#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boxdist/linalg.hpp>
#include <boxdist/rng.hpp>

namespace testutil {

using boxdist::Complex;
using boxdist::ComplexMatrix;
using boxdist::Rng;

inline ComplexMatrix random_matrix(Rng& rng, int rows, int cols) {
  ComplexMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  return m;
}

inline ComplexMatrix random_hermitian(Rng& rng, int d) {
  ComplexMatrix m = random_matrix(rng, d, d);
  return (m + m.adjoint()).eval() / 2.0;
}

inline ComplexMatrix random_psd(Rng& rng, int d) {
  ComplexMatrix m = random_matrix(rng, d, d);
  return (m * m.adjoint()).eval();
}

inline ComplexMatrix random_density(Rng& rng, int d) {
  ComplexMatrix m = random_psd(rng, d);
  return m / m.trace().real();
}

inline Eigen::VectorXcd random_unit_vector(Rng& rng, int d) {
  Eigen::VectorXcd v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(rng.normal(), rng.normal());
  return v / v.norm();
}

// Random Kraus set of a channel din -> dout: Gaussian blocks normalized so
// that sum K^dag K = I.
inline std::vector<ComplexMatrix> random_kraus(Rng& rng, int din, int dout, int count) {
  std::vector<ComplexMatrix> ks;
  ComplexMatrix s = ComplexMatrix::Zero(din, din);
  for (int e = 0; e < count; ++e) {
    ks.push_back(random_matrix(rng, dout, din));
    s += ks.back().adjoint() * ks.back();
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(s);
  ComplexMatrix inv_sqrt = es.operatorInverseSqrt();
  for (ComplexMatrix& k : ks) k = (k * inv_sqrt).eval();
  return ks;
}

// Best false-alarm cost sum_i w_i q_i over tests 0 <= w <= 1 with detection
// sum_i w_i p_i >= 1 - eps, by the greedy likelihood-ratio ordering.
inline double classical_best_error(const std::vector<double>& p, const std::vector<double>& q,
                                   double eps) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ra = p[a] > 0 ? q[a] / p[a] : 1e300;
    const double rb = p[b] > 0 ? q[b] / p[b] : 1e300;
    return ra < rb;
  });
  double budget = 1.0 - eps, cost = 0.0;
  for (std::size_t i : idx) {
    if (budget <= 0) break;
    const double w = p[i] > 0 ? std::min(1.0, budget / p[i]) : 1.0;
    cost += w * q[i];
    budget -= w * p[i];
  }
  return cost;
}

// Smallest lambda admitting a subnormalized vector within total-variation eps
// of p that is entrywise below lambda q (classical bisection); returns log2.
inline double classical_smooth_max(const std::vector<double>& p, const std::vector<double>& q,
                                   double eps) {
  const auto feasible = [&](double lam) {
    double kept = 0;
    for (std::size_t i = 0; i < p.size(); ++i) kept += std::min(p[i], lam * q[i]);
    return lam >= 1.0 && kept >= 1.0 - eps;
  };
  double lo = 1.0, hi = 1.0;
  while (!feasible(hi)) {
    hi *= 2;
    if (hi > 1e24) throw std::runtime_error("classical smoothing oracle: no finite level");
  }
  if (feasible(lo)) return 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return std::log2(hi);
}

// Haar-ish random unitary from QR of a Gaussian matrix.
inline ComplexMatrix random_unitary(Rng& rng, int d) {
  ComplexMatrix m = random_matrix(rng, d, d);
  Eigen::HouseholderQR<ComplexMatrix> qr(m);
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    Complex ph = r(i, i) / std::abs(r(i, i));
    q.col(i) *= ph;
  }
  return q;
}

}  // namespace testutil
