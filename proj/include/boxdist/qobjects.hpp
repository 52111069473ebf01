#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "boxdist/linalg.hpp"

namespace boxdist {

inline constexpr double kCpTol = 1e-9;   // tolerated negative eigenvalue (relative)
inline constexpr double kTpTol = 1e-8;   // tolerated trace-preservation defect

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

inline void validate_density(const HermitianOperator& rho, double tol = kTpTol) {
  const double scale = std::max(1.0, max_abs(rho.mat));
  if (min_eigenvalue(rho) < -kCpTol * scale)
    throw std::invalid_argument("density operator has a negative eigenvalue");
  if (std::abs(real_trace(rho.mat) - 1.0) > tol * scale)
    throw std::invalid_argument("density operator does not have unit trace");
}

// Flag state of the two-outcome standard boxes: diag(1/m, 1 - 1/m), m >= 1.
inline HermitianOperator pi_state(double m) {
  if (!(m >= 1.0)) throw std::invalid_argument("flag-state parameter must be >= 1");
  ComplexMatrix p = ComplexMatrix::Zero(2, 2);
  p(0, 0) = 1.0 / m;
  p(1, 1) = 1.0 - 1.0 / m;
  return HermitianOperator(std::move(p), {2});
}

inline ComplexMatrix basis_state(int d, int k) {
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  m(k, k) = 1.0;
  return m;
}

// Projector onto the unnormalized maximally entangled vector sum_i |ii>.
inline HermitianOperator entangled_projector(int d) {
  ComplexMatrix g = ComplexMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i * d + i, j * d + j) = 1.0;
  return HermitianOperator(std::move(g), {d, d});
}

inline HermitianOperator maximally_entangled(int d) {
  HermitianOperator phi = entangled_projector(d);
  phi.mat /= static_cast<double>(d);
  return phi;
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

// Completely positive trace-preserving map A -> B, stored through its
// (unnormalized) Choi operator on factors (A, B):
//   choi[(a,b),(a',b')] = <b| N(|a><a'|) |b'>.
struct Channel {
  int in_dim = 0;
  int out_dim = 0;
  HermitianOperator choi;

  Channel() : choi(ComplexMatrix::Zero(1, 1), {1}) {}
  Channel(int din, int dout, HermitianOperator c) : in_dim(din), out_dim(dout), choi(std::move(c)) {}
};

struct ChannelChecks {
  bool validate = true;
  bool repair = false;  // project onto the valid set before validating
  double cp_tol = kCpTol;
  double tp_tol = kTpTol;
};

// Nearest-valid-channel projection: clip negative eigenvalues, then restore
// trace preservation by conjugating with R^{-1/2} (x) I where R is the input
// marginal.  Fails when an input direction is annihilated entirely.
inline ComplexMatrix repair_choi(const ComplexMatrix& choi, int in_dim, int out_dim) {
  HermitianOperator h(choi, {in_dim, out_dim}, 1e-5);
  const HermitianOperator clipped = spectral_fn(h, [](double x) { return x > 0.0 ? x : 0.0; });
  const HermitianOperator r = partial_trace(clipped, {0});
  if (min_eigenvalue(r) <= 1e-12)
    throw std::invalid_argument("channel repair failed: an input direction is annihilated");
  const HermitianOperator rinv =
      spectral_fn(r, [](double x) { return 1.0 / std::sqrt(x); });
  const ComplexMatrix w = kron(rinv.mat, identity_matrix(out_dim));
  return w * clipped.mat * w;
}

inline Channel make_channel(ComplexMatrix choi, int in_dim, int out_dim,
                            const ChannelChecks& checks = {}) {
  if (in_dim <= 0 || out_dim <= 0) throw std::invalid_argument("channel dimensions must be positive");
  if (checks.repair) choi = repair_choi(choi, in_dim, out_dim);
  HermitianOperator c(std::move(choi), {in_dim, out_dim});
  if (checks.validate) {
    const double scale = std::max(1.0, max_abs(c.mat));
    if (min_eigenvalue(c) < -checks.cp_tol * scale)
      throw std::invalid_argument("channel is not completely positive");
    const HermitianOperator marginal = partial_trace(c, {0});
    if (max_abs(marginal.mat - identity_matrix(in_dim)) > checks.tp_tol * scale)
      throw std::invalid_argument("channel is not trace preserving");
  }
  return Channel(in_dim, out_dim, std::move(c));
}

// Kraus operators are out_dim x in_dim.
inline Channel channel_from_kraus(const std::vector<ComplexMatrix>& kraus,
                                  const ChannelChecks& checks = {}) {
  if (kraus.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
  const int dout = static_cast<int>(kraus.front().rows());
  const int din = static_cast<int>(kraus.front().cols());
  ComplexMatrix choi = ComplexMatrix::Zero(din * dout, din * dout);
  for (const ComplexMatrix& k : kraus) {
    if (k.rows() != dout || k.cols() != din)
      throw std::invalid_argument("Kraus operators must share one shape");
    // vec(K) in the (a,b) index convention.
    ComplexVector v(din * dout);
    for (int a = 0; a < din; ++a)
      for (int b = 0; b < dout; ++b) v[a * dout + b] = k(b, a);
    choi += v * v.adjoint();
  }
  return make_channel(std::move(choi), din, dout, checks);
}

// Spectral Kraus decomposition of the Choi operator.
inline std::vector<ComplexMatrix> kraus_from_channel(const Channel& ch, double tol = kRankTol) {
  const EigResult eig = eig_hermitian(ch.choi);
  std::vector<ComplexMatrix> kraus;
  for (int i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] <= tol) continue;
    const double w = std::sqrt(eig.values[i]);
    ComplexMatrix k(ch.out_dim, ch.in_dim);
    for (int a = 0; a < ch.in_dim; ++a)
      for (int b = 0; b < ch.out_dim; ++b) k(b, a) = w * eig.vectors(a * ch.out_dim + b, i);
    kraus.push_back(std::move(k));
  }
  return kraus;
}

inline Channel identity_channel(int d) {
  return channel_from_kraus({ComplexMatrix::Identity(d, d)});
}

inline Channel unitary_channel(const ComplexMatrix& u) {
  return channel_from_kraus({u});
}

// omega -> trace(omega) * sigma.
inline Channel replacer_channel(int in_dim, const HermitianOperator& sigma) {
  const int dout = sigma.dim();
  ComplexMatrix choi = kron(identity_matrix(in_dim), sigma.mat);
  return make_channel(std::move(choi), in_dim, dout);
}

// omega -> sum_x <x|omega|x> rho_x  (classical input encoded in the basis).
inline Channel cq_channel(const std::vector<ComplexMatrix>& states, const ChannelChecks& checks = {}) {
  if (states.empty()) throw std::invalid_argument("classical-quantum channel needs output states");
  const int din = static_cast<int>(states.size());
  const int dout = static_cast<int>(states.front().rows());
  ComplexMatrix choi = ComplexMatrix::Zero(din * dout, din * dout);
  for (int x = 0; x < din; ++x) {
    if (states[x].rows() != dout || states[x].cols() != dout)
      throw std::invalid_argument("classical-quantum output states must share one dimension");
    choi.block(x * dout, x * dout, dout, dout) = states[x];
  }
  return make_channel(std::move(choi), din, dout, checks);
}

// omega -> sum_x trace(E_x omega) |x><x| for a POVM {E_x}.
inline Channel povm_channel(const std::vector<ComplexMatrix>& povm, const ChannelChecks& checks = {}) {
  if (povm.empty()) throw std::invalid_argument("measurement channel needs POVM elements");
  const int din = static_cast<int>(povm.front().rows());
  const int dout = static_cast<int>(povm.size());
  ComplexMatrix choi = ComplexMatrix::Zero(din * dout, din * dout);
  for (int x = 0; x < dout; ++x)
    for (int a = 0; a < din; ++a)
      for (int ap = 0; ap < din; ++ap) choi(a * dout + x, ap * dout + x) += povm[x](ap, a);
  return make_channel(std::move(choi), din, dout, checks);
}

inline Channel discard_channel(int d) {
  return make_channel(identity_matrix(d), d, 1);
}

// Applies the channel to the last tensor factor of `input`.
inline HermitianOperator apply_channel(const Channel& ch, const HermitianOperator& input) {
  if (input.dims.empty() || input.dims.back() != ch.in_dim)
    throw std::invalid_argument("channel input dimension does not match the state's last factor");
  const int a_dim = ch.in_dim;
  const int b_dim = ch.out_dim;
  const int t_dim = input.dim() / a_dim;
  const ComplexMatrix& rho = input.mat;
  const ComplexMatrix& g = ch.choi.mat;
  ComplexMatrix out = ComplexMatrix::Zero(t_dim * b_dim, t_dim * b_dim);
  for (int t = 0; t < t_dim; ++t)
    for (int tp = 0; tp < t_dim; ++tp)
      for (int b = 0; b < b_dim; ++b)
        for (int bp = 0; bp < b_dim; ++bp) {
          Complex acc = 0;
          for (int a = 0; a < a_dim; ++a)
            for (int ap = 0; ap < a_dim; ++ap)
              acc += rho(t * a_dim + a, tp * a_dim + ap) * g(a * b_dim + b, ap * b_dim + bp);
          out(t * b_dim + b, tp * b_dim + bp) = acc;
        }
  std::vector<int> dims(input.dims.begin(), input.dims.end() - 1);
  dims.push_back(b_dim);
  return HermitianOperator(std::move(out), std::move(dims), 1e-8);
}

// Choi state (normalized): (id (x) N) applied to the maximally entangled state.
inline HermitianOperator choi_state(const Channel& ch) {
  HermitianOperator s = ch.choi;
  s.mat /= static_cast<double>(ch.in_dim);
  return s;
}

// g . f (apply f first).
inline Channel compose(const Channel& g, const Channel& f) {
  if (f.out_dim != g.in_dim) throw std::invalid_argument("channel composition dimension mismatch");
  const int da = f.in_dim, dm = f.out_dim, dc = g.out_dim;
  const ComplexMatrix& gf = f.choi.mat;
  const ComplexMatrix& gg = g.choi.mat;
  ComplexMatrix out = ComplexMatrix::Zero(da * dc, da * dc);
  for (int a = 0; a < da; ++a)
    for (int ap = 0; ap < da; ++ap)
      for (int c = 0; c < dc; ++c)
        for (int cp = 0; cp < dc; ++cp) {
          Complex acc = 0;
          for (int m = 0; m < dm; ++m)
            for (int mp = 0; mp < dm; ++mp)
              acc += gf(a * dm + m, ap * dm + mp) * gg(m * dc + c, mp * dc + cp);
          out(a * dc + c, ap * dc + cp) = acc;
        }
  return Channel(da, dc, HermitianOperator(std::move(out), {da, dc}, 1e-8));
}

// f (x) g acting on (A1 (x) A2) -> (B1 (x) B2).
inline Channel tensor_channels(const Channel& f, const Channel& g) {
  HermitianOperator prod = kron(f.choi, g.choi);            // factors (A1, B1, A2, B2)
  prod = permute_subsystems(prod, {0, 2, 1, 3});            // -> (A1, A2, B1, B2)
  const int din = f.in_dim * g.in_dim;
  const int dout = f.out_dim * g.out_dim;
  return Channel(din, dout, prod.with_dims({din, dout}));
}

// ---------------------------------------------------------------------------
// Channel boxes
// ---------------------------------------------------------------------------

// A pair of channels with common input/output spaces: the "box" whose two
// members must be told apart.
struct ChannelBox {
  Channel first, second;

  ChannelBox() = default;
  ChannelBox(Channel n, Channel m) : first(std::move(n)), second(std::move(m)) {
    if (first.in_dim != second.in_dim || first.out_dim != second.out_dim)
      throw std::invalid_argument("the two channels of a box must share dimensions");
  }
  int in_dim() const { return first.in_dim; }
  int out_dim() const { return first.out_dim; }
};

// The two-outcome reference box carrying log2(m) bits: a pair of replacers
// preparing |0><0| and diag(1/m, 1-1/m).
inline ChannelBox standard_box(double m, int in_dim = 1) {
  return ChannelBox(replacer_channel(in_dim, HermitianOperator(basis_state(2, 0), {2})),
                    replacer_channel(in_dim, pi_state(m)));
}

inline ChannelBox replacer_box(int in_dim, const HermitianOperator& rho,
                               const HermitianOperator& sigma) {
  return ChannelBox(replacer_channel(in_dim, rho), replacer_channel(in_dim, sigma));
}

// Classical-quantum box: a shared classical input alphabet with one output
// state pair per symbol.
struct CQBox {
  std::vector<ComplexMatrix> first_states, second_states;

  CQBox(std::vector<ComplexMatrix> f, std::vector<ComplexMatrix> s)
      : first_states(std::move(f)), second_states(std::move(s)) {
    if (first_states.empty() || first_states.size() != second_states.size())
      throw std::invalid_argument("classical-quantum box needs matching state lists");
  }
  int symbols() const { return static_cast<int>(first_states.size()); }
  ChannelBox as_box(const ChannelChecks& checks = {}) const {
    return ChannelBox(cq_channel(first_states, checks), cq_channel(second_states, checks));
  }
};

// ---------------------------------------------------------------------------
// Superchannels
// ---------------------------------------------------------------------------

// Transformation of channels (A -> B) into channels (C -> D), realized as
// post . (N (x) id_M) . pre with an encoder pre: C -> A (x) M and a decoder
// post: B (x) M -> D.  Stored through its Choi operator on ordered factors
// (C, B, A, D):
//   choi[(c,b,a,d),(c',b',a',d')] with (c,b) bra-side inputs, (a,d) outputs.
struct Superchannel {
  int c_dim = 0, b_dim = 0, a_dim = 0, d_dim = 0;
  HermitianOperator choi;

  Superchannel() : choi(ComplexMatrix::Zero(1, 1), {1}) {}
  Superchannel(int dc, int db, int da, int dd, HermitianOperator c)
      : c_dim(dc), b_dim(db), a_dim(da), d_dim(dd), choi(std::move(c)) {}
};

struct SuperchannelDefects {
  double psd = 0;       // most negative eigenvalue of the Choi operator
  double marginal = 0;  // || trace_{A,D}(choi) - I_CB ||_max
  double no_signal = 0; // || trace_D(choi) - perm(trace_DB(choi) (x) I_B)/dB ||_max
  bool ok(double tol = 1e-7) const {
    return psd > -tol && marginal < tol && no_signal < tol;
  }
};

inline SuperchannelDefects superchannel_defects(const Superchannel& t) {
  SuperchannelDefects d;
  d.psd = min_eigenvalue(t.choi);
  const HermitianOperator cb = partial_trace(t.choi, {0, 1});
  d.marginal = max_abs(cb.mat - identity_matrix(t.c_dim * t.b_dim));
  const HermitianOperator cba = partial_trace(t.choi, {0, 1, 2});
  HermitianOperator ca = partial_trace(t.choi, {0, 2});           // factors (C, A)
  HermitianOperator grown = kron(ca, HermitianOperator(identity_matrix(t.b_dim), {t.b_dim}));
  grown = permute_subsystems(grown, {0, 2, 1});                   // (C,A,B) -> (C,B,A)
  d.no_signal = max_abs(cba.mat - grown.mat / static_cast<double>(t.b_dim));
  return d;
}

inline void validate_superchannel(const Superchannel& t, double tol = 1e-7) {
  const SuperchannelDefects d = superchannel_defects(t);
  if (!d.ok(tol)) throw std::invalid_argument("operator is not a valid superchannel");
}

// Builds the superchannel from its encoder and decoder.  `pre` maps C to
// A (x) M (factors in that order) and `post` maps B (x) M to D.
inline Superchannel superchannel_from_pre_post(const Channel& pre, const Channel& post, int a_dim,
                                               int m_dim) {
  if (pre.out_dim != a_dim * m_dim)
    throw std::invalid_argument("encoder output must factor as A (x) M");
  if (post.in_dim % m_dim != 0)
    throw std::invalid_argument("decoder input must factor as B (x) M");
  const int c_dim = pre.in_dim;
  const int b_dim = post.in_dim / m_dim;
  const int d_dim = post.out_dim;
  const ComplexMatrix& gpre = pre.choi.mat;    // indices (c, a*m)
  const ComplexMatrix& gpost = post.choi.mat;  // indices (b*m, d)
  const int n = c_dim * b_dim * a_dim * d_dim;
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  const auto idx = [&](int c, int b, int a, int dd) {
    return ((c * b_dim + b) * a_dim + a) * d_dim + dd;
  };
  for (int c = 0; c < c_dim; ++c)
    for (int cp = 0; cp < c_dim; ++cp)
      for (int b = 0; b < b_dim; ++b)
        for (int bp = 0; bp < b_dim; ++bp)
          for (int a = 0; a < a_dim; ++a)
            for (int ap = 0; ap < a_dim; ++ap)
              for (int dd = 0; dd < d_dim; ++dd)
                for (int dp = 0; dp < d_dim; ++dp) {
                  Complex acc = 0;
                  for (int m = 0; m < m_dim; ++m)
                    for (int mp = 0; mp < m_dim; ++mp)
                      acc += gpre(c * (a_dim * m_dim) + a * m_dim + m,
                                  cp * (a_dim * m_dim) + ap * m_dim + mp) *
                             gpost((b * m_dim + m) * d_dim + dd, (bp * m_dim + mp) * d_dim + dp);
                  out(idx(c, b, a, dd), idx(cp, bp, ap, dp)) = acc;
                }
  return Superchannel(c_dim, b_dim, a_dim, d_dim,
                      HermitianOperator(std::move(out), {c_dim, b_dim, a_dim, d_dim}, 1e-8));
}

inline Superchannel identity_superchannel(int in_dim, int out_dim) {
  return superchannel_from_pre_post(identity_channel(in_dim), identity_channel(out_dim), in_dim, 1);
}

// Output channel of the superchannel acting on `ch`.
inline Channel apply_superchannel(const Superchannel& t, const Channel& ch) {
  if (ch.in_dim != t.a_dim || ch.out_dim != t.b_dim)
    throw std::invalid_argument("superchannel expects a channel with matching dimensions");
  const int dc = t.c_dim, db = t.b_dim, da = t.a_dim, dd = t.d_dim;
  const ComplexMatrix& gn = ch.choi.mat;
  const ComplexMatrix& gt = t.choi.mat;
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
                  acc += gn(app * db + bpp, a * db + b) *
                         gt(idx(c, bpp, app, d), idx(cp, b, a, dp));
          out(c * dd + d, cp * dd + dp) = acc;
        }
  return Channel(dc, dd, HermitianOperator(std::move(out), {dc, dd}, 1e-8));
}

// ---------------------------------------------------------------------------
// Environment realizations
// ---------------------------------------------------------------------------

// Witness that the environment states can be recovered from the realized box:
// feeding `probe` to either member and decoding the (reference, output) pair
// should reproduce the corresponding environment state.
struct SeizeData {
  HermitianOperator probe;  // state on (reference, system input)
  Channel decoder;          // (reference (x) output) -> environment
};

// A box realized by one fixed joint channel P: A (x) E -> B whose two members
// differ only in the environment state fed into E.
struct EnvBox {
  Channel joint;  // input factors (A, E)
  int sys_dim = 0, env_dim = 0;
  HermitianOperator env_first, env_second;
  std::optional<SeizeData> seize;

  EnvBox(Channel p, int da, int de, HermitianOperator e1, HermitianOperator e2)
      : joint(std::move(p)), sys_dim(da), env_dim(de), env_first(std::move(e1)),
        env_second(std::move(e2)) {
    if (joint.in_dim != sys_dim * env_dim)
      throw std::invalid_argument("joint channel input must factor as A (x) E");
  }

  // Channel obtained by plugging `env` into the environment wire.
  Channel member(const HermitianOperator& env) const {
    const int da = sys_dim, de = env_dim, db = joint.out_dim;
    const ComplexMatrix& gp = joint.choi.mat;  // indices ((a,e), b)
    ComplexMatrix out = ComplexMatrix::Zero(da * db, da * db);
    for (int a = 0; a < da; ++a)
      for (int ap = 0; ap < da; ++ap)
        for (int b = 0; b < db; ++b)
          for (int bp = 0; bp < db; ++bp) {
            Complex acc = 0;
            for (int e = 0; e < de; ++e)
              for (int ep = 0; ep < de; ++ep)
                acc += env.mat(e, ep) * gp((a * de + e) * db + b, (ap * de + ep) * db + bp);
            out(a * db + b, ap * db + bp) = acc;
          }
    return Channel(da, db, HermitianOperator(std::move(out), {da, db}, 1e-8));
  }

  ChannelBox realize() const { return ChannelBox(member(env_first), member(env_second)); }
};

// Every box admits the trivial realization with a flag-qubit environment:
// P applies the first member when the flag is |0> and the second when |1>.
inline EnvBox env_realize(const ChannelBox& box) {
  const int da = box.in_dim();
  std::vector<ComplexMatrix> kraus;
  ComplexMatrix bra0 = ComplexMatrix::Zero(1, 2), bra1 = ComplexMatrix::Zero(1, 2);
  bra0(0, 0) = 1.0;
  bra1(0, 1) = 1.0;
  for (const ComplexMatrix& k : kraus_from_channel(box.first)) {
    ComplexMatrix big(k.rows(), da * 2);
    for (int a = 0; a < da; ++a) {
      big.col(a * 2 + 0) = k.col(a);
      big.col(a * 2 + 1).setZero();
    }
    kraus.push_back(std::move(big));
  }
  for (const ComplexMatrix& k : kraus_from_channel(box.second)) {
    ComplexMatrix big(k.rows(), da * 2);
    for (int a = 0; a < da; ++a) {
      big.col(a * 2 + 0).setZero();
      big.col(a * 2 + 1) = k.col(a);
    }
    kraus.push_back(std::move(big));
  }
  Channel joint = channel_from_kraus(kraus);
  return EnvBox(std::move(joint), da, 2, HermitianOperator(basis_state(2, 0), {2}),
                HermitianOperator(basis_state(2, 1), {2}));
}

struct SeizeCheck {
  double first_residual = 0;   // trace distance from the decoded first output to env_first
  double second_residual = 0;  // same for the second member
  bool pass(double tol = 1e-6) const { return first_residual <= tol && second_residual <= tol; }
};

inline SeizeCheck env_seize_check(const EnvBox& e) {
  if (!e.seize) throw std::invalid_argument("environment box carries no retrieval data");
  const SeizeData& s = *e.seize;
  if (s.probe.n_subsystems() != 2 || s.probe.dims[1] != e.sys_dim)
    throw std::invalid_argument("probe must be a two-factor state ending in the system input");
  validate_density(s.probe);
  const int dr = s.probe.dims[0];
  const int db = e.joint.out_dim;
  if (s.decoder.in_dim != dr * db || s.decoder.out_dim != e.env_dim)
    throw std::invalid_argument("decoder dimensions do not match the probe and environment");
  const auto residual = [&](const HermitianOperator& env) {
    const HermitianOperator joint_out = apply_channel(e.member(env), s.probe);
    const HermitianOperator decoded =
        apply_channel(s.decoder, joint_out.with_dims({dr * db}));
    return 0.5 * trace_norm(HermitianOperator(decoded.mat - env.mat, {e.env_dim}, 1e-7));
  };
  SeizeCheck out;
  out.first_residual = residual(e.env_first);
  out.second_residual = residual(e.env_second);
  return out;
}

// Replacer boxes are environment seizable: the joint channel discards the
// system input and forwards the environment, so feeding any input and
// tracing away the reference recovers the environment state exactly.
inline EnvBox replacer_env_box(int in_dim, const HermitianOperator& rho,
                               const HermitianOperator& sigma) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("replacer states must share dimension");
  Channel joint = tensor_channels(discard_channel(in_dim), identity_channel(rho.dim()));
  EnvBox box(std::move(joint), in_dim, rho.dim(), rho, sigma);
  box.seize = SeizeData{HermitianOperator(basis_state(in_dim, 0), {1, in_dim}),
                        identity_channel(rho.dim())};
  return box;
}

}  // namespace boxdist
