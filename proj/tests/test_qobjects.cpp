#include <catch2/catch_amalgamated.hpp>

#include <boxdist/qobjects.hpp>

#include "test_helpers.hpp"

using namespace boxdist;
using testutil::random_density;
using testutil::random_kraus;
using testutil::random_matrix;
using testutil::random_psd;
using testutil::random_unitary;

namespace {

HermitianOperator state(const ComplexMatrix& m, std::vector<int> dims) {
  return HermitianOperator(m, std::move(dims), 1e-8);
}

// Direct Kraus-sum evaluation, independent of the Choi machinery.
ComplexMatrix kraus_apply(const std::vector<ComplexMatrix>& ks, const ComplexMatrix& rho) {
  ComplexMatrix out = ComplexMatrix::Zero(ks.front().rows(), ks.front().rows());
  for (const ComplexMatrix& k : ks) out += k * rho * k.adjoint();
  return out;
}

}  // namespace

TEST_CASE("identity, unitary and replacer channels have the expected Choi operators") {
  Rng rng(11);

  const Channel id2 = identity_channel(2);
  CHECK(max_abs(id2.choi.mat - entangled_projector(2).mat) < 1e-12);

  const ComplexMatrix u = random_unitary(rng, 3);
  const Channel uc = unitary_channel(u);
  // choi[(a,b),(a',b')] = U(b,a) conj(U(b',a'))
  for (int a = 0; a < 3; ++a)
    for (int ap = 0; ap < 3; ++ap)
      for (int b = 0; b < 3; ++b)
        for (int bp = 0; bp < 3; ++bp)
          CHECK(std::abs(uc.choi.mat(a * 3 + b, ap * 3 + bp) - u(b, a) * std::conj(u(bp, ap))) <
                1e-12);

  const ComplexMatrix sigma = random_density(rng, 2);
  const Channel rep = replacer_channel(3, state(sigma, {2}));
  const ComplexMatrix in = random_density(rng, 3);
  const HermitianOperator out = apply_channel(rep, state(in, {3}));
  CHECK(max_abs(out.mat - sigma) < 1e-12);
}

TEST_CASE("Choi application agrees with the Kraus sum") {
  Rng rng(12);
  const auto ks = random_kraus(rng, 3, 2, 4);
  const Channel ch = channel_from_kraus(ks);
  REQUIRE(ch.in_dim == 3);
  REQUIRE(ch.out_dim == 2);

  const ComplexMatrix rho = random_density(rng, 3);
  const HermitianOperator got = apply_channel(ch, state(rho, {3}));
  CHECK(max_abs(got.mat - kraus_apply(ks, rho)) < 1e-10);
}

TEST_CASE("application to the last factor of a correlated state matches id (x) N") {
  Rng rng(13);
  const auto ks = random_kraus(rng, 2, 3, 3);
  const Channel ch = channel_from_kraus(ks);

  const ComplexMatrix rho = random_density(rng, 4 * 2);  // factors (T=4, A=2)
  std::vector<ComplexMatrix> lifted;
  for (const ComplexMatrix& k : ks) lifted.push_back(kron(identity_matrix(4), k));
  const ComplexMatrix expect = kraus_apply(lifted, rho);

  const HermitianOperator got = apply_channel(ch, state(rho, {4, 2}));
  REQUIRE(got.dims == std::vector<int>{4, 3});
  CHECK(max_abs(got.mat - expect) < 1e-10);
}

TEST_CASE("channel validation rejects broken Choi operators") {
  const ComplexMatrix good = entangled_projector(2).mat;
  CHECK_THROWS_AS(make_channel(2.0 * good, 2, 2), std::invalid_argument);  // not TP
  ComplexMatrix neg = ComplexMatrix::Zero(4, 4);
  neg(0, 0) = 2.0;
  neg(3, 3) = -1.0;
  neg(1, 1) = 1.0;
  neg(2, 2) = 2.0;
  CHECK_THROWS_AS(make_channel(neg, 2, 2), std::invalid_argument);  // not CP
  Rng rng(14);
  CHECK_NOTHROW(channel_from_kraus(random_kraus(rng, 3, 3, 2)));
}

TEST_CASE("Kraus extraction round-trips through the Choi operator") {
  Rng rng(15);
  const Channel ch = channel_from_kraus(random_kraus(rng, 2, 4, 3));
  const auto ks = kraus_from_channel(ch);
  const Channel back = channel_from_kraus(ks);
  CHECK(max_abs(back.choi.mat - ch.choi.mat) < 1e-9);
}

TEST_CASE("composition and tensor products match Kraus arithmetic") {
  Rng rng(16);
  const auto kf = random_kraus(rng, 2, 3, 2);
  const auto kg = random_kraus(rng, 3, 2, 2);
  const Channel f = channel_from_kraus(kf);
  const Channel g = channel_from_kraus(kg);

  const Channel gf = compose(g, f);
  std::vector<ComplexMatrix> prod;
  for (const ComplexMatrix& b : kg)
    for (const ComplexMatrix& a : kf) prod.push_back(b * a);
  const Channel oracle = channel_from_kraus(prod);
  CHECK(max_abs(gf.choi.mat - oracle.choi.mat) < 1e-10);

  const Channel fg = tensor_channels(f, g);
  std::vector<ComplexMatrix> kron_ks;
  for (const ComplexMatrix& a : kf)
    for (const ComplexMatrix& b : kg) kron_ks.push_back(kron(a, b));
  const Channel oracle2 = channel_from_kraus(kron_ks);
  REQUIRE(fg.in_dim == 6);
  REQUIRE(fg.out_dim == 6);
  CHECK(max_abs(fg.choi.mat - oracle2.choi.mat) < 1e-10);
}

TEST_CASE("the Choi state equals the channel acting on half of a maximally entangled pair") {
  Rng rng(17);
  const Channel ch = channel_from_kraus(random_kraus(rng, 3, 2, 3));
  const HermitianOperator via_apply = apply_channel(ch, maximally_entangled(3));
  CHECK(max_abs(via_apply.mat - choi_state(ch).mat) < 1e-10);
}

TEST_CASE("classical-quantum and measurement channels act as advertised") {
  Rng rng(18);
  std::vector<ComplexMatrix> states{random_density(rng, 2), random_density(rng, 2),
                                    random_density(rng, 2)};
  const Channel cq = cq_channel(states);
  ComplexMatrix in = ComplexMatrix::Zero(3, 3);
  in(0, 0) = 0.25;
  in(2, 2) = 0.75;
  in(0, 2) = in(2, 0) = 0.1;  // coherences must be ignored
  const HermitianOperator out = apply_channel(cq, state(in, {3}));
  CHECK(max_abs(out.mat - (0.25 * states[0] + 0.75 * states[2])) < 1e-12);

  ComplexMatrix e0 = random_psd(rng, 3);
  e0 = (e0 / (2.0 * operator_norm(e0))).eval();
  std::vector<ComplexMatrix> povm{e0, identity_matrix(3) - e0};
  const Channel meas = povm_channel(povm);
  const ComplexMatrix rho = random_density(rng, 3);
  const HermitianOperator probs = apply_channel(meas, state(rho, {3}));
  CHECK(std::abs(probs.mat(0, 0).real() - (e0 * rho).trace().real()) < 1e-12);
  CHECK(std::abs(probs.mat(1, 1).real() - ((identity_matrix(3) - e0) * rho).trace().real()) <
        1e-12);
  CHECK(std::abs(probs.mat(0, 1)) < 1e-12);
}

TEST_CASE("the identity superchannel leaves channels unchanged and validates") {
  Rng rng(19);
  const Superchannel id = identity_superchannel(2, 3);
  CHECK(superchannel_defects(id).ok(1e-9));

  const Channel ch = channel_from_kraus(random_kraus(rng, 2, 3, 2));
  const Channel out = apply_superchannel(id, ch);
  CHECK(max_abs(out.choi.mat - ch.choi.mat) < 1e-10);
}

TEST_CASE("superchannel application equals the explicit encoder/decoder circuit") {
  Rng rng(20);
  const int da = 2, db = 2, dm = 2, dc = 3, dd = 2;
  const Channel pre = channel_from_kraus(random_kraus(rng, dc, da * dm, 2));
  const Channel post = channel_from_kraus(random_kraus(rng, db * dm, dd, 2));
  const Superchannel theta = superchannel_from_pre_post(pre, post, da, dm);
  CHECK(superchannel_defects(theta).ok(1e-8));

  const Channel n = channel_from_kraus(random_kraus(rng, da, db, 2));
  const Channel via_choi = apply_superchannel(theta, n);
  const Channel via_circuit = compose(post, compose(tensor_channels(n, identity_channel(dm)), pre));
  CHECK(max_abs(via_choi.choi.mat - via_circuit.choi.mat) < 1e-9);

  // The output must itself be a channel.
  CHECK_NOTHROW(make_channel(via_choi.choi.mat, dc, dd));
}

TEST_CASE("causal-order violations are detected") {
  // Wiring that feeds the inner output B straight back into the inner input A
  // satisfies the trace conditions but signals from B to A.
  const int d = 2;
  HermitianOperator swapped = kron(entangled_projector(d), entangled_projector(d));
  // factors now (B, A, C, D); reorder to (C, B, A, D)
  swapped = permute_subsystems(swapped.with_dims({d, d, d, d}), {2, 0, 1, 3});
  const Superchannel bad(d, d, d, d, swapped);
  const SuperchannelDefects defects = superchannel_defects(bad);
  CHECK(defects.psd > -1e-9);
  CHECK(defects.marginal < 1e-9);
  CHECK(defects.no_signal > 0.4);
  CHECK_THROWS_AS(validate_superchannel(bad), std::invalid_argument);
}

TEST_CASE("standard boxes prepare the advertised flag states") {
  const ChannelBox box = standard_box(4.0);
  REQUIRE(box.in_dim() == 1);
  REQUIRE(box.out_dim() == 2);
  const HermitianOperator one = state(ComplexMatrix::Identity(1, 1), {1});
  const HermitianOperator first = apply_channel(box.first, one);
  const HermitianOperator second = apply_channel(box.second, one);
  CHECK(max_abs(first.mat - basis_state(2, 0)) < 1e-12);
  CHECK(std::abs(second.mat(0, 0).real() - 0.25) < 1e-12);
  CHECK(std::abs(second.mat(1, 1).real() - 0.75) < 1e-12);

  CHECK_THROWS_AS(pi_state(0.5), std::invalid_argument);
  CHECK(max_abs(pi_state(1.0).mat - basis_state(2, 0)) < 1e-12);
}

TEST_CASE("every box admits a flag-environment realization") {
  Rng rng(21);
  const ChannelBox box(channel_from_kraus(random_kraus(rng, 2, 3, 2)),
                       channel_from_kraus(random_kraus(rng, 2, 3, 2)));
  const EnvBox env = env_realize(box);
  const ChannelBox back = env.realize();
  CHECK(max_abs(back.first.choi.mat - box.first.choi.mat) < 1e-9);
  CHECK(max_abs(back.second.choi.mat - box.second.choi.mat) < 1e-9);
}

TEST_CASE("replacer boxes hand over their environment to the receiver") {
  Rng rng(22);
  const ComplexMatrix rho = random_density(rng, 3);
  const ComplexMatrix sigma = random_density(rng, 3);
  const EnvBox env = replacer_env_box(2, state(rho, {3}), state(sigma, {3}));

  const ChannelBox realized = env.realize();
  const ChannelBox direct = replacer_box(2, state(rho, {3}), state(sigma, {3}));
  CHECK(max_abs(realized.first.choi.mat - direct.first.choi.mat) < 1e-10);
  CHECK(max_abs(realized.second.choi.mat - direct.second.choi.mat) < 1e-10);

  // Feed any correlated input, discard the reference: the environment state
  // comes out unchanged, for both members.
  const ComplexMatrix tau = random_density(rng, 4 * 2);  // reference (x) system
  const HermitianOperator out1 = apply_channel(realized.first, state(tau, {4, 2}));
  const HermitianOperator decoded1 = partial_trace(out1, {1});
  CHECK(max_abs(decoded1.mat - rho) < 1e-10);
  const HermitianOperator out2 = apply_channel(realized.second, state(tau, {4, 2}));
  const HermitianOperator decoded2 = partial_trace(out2, {1});
  CHECK(max_abs(decoded2.mat - sigma) < 1e-10);
}

TEST_CASE("seize checks certify that the environment can be retrieved") {
  Rng rng(24);

  SECTION("built-in replacer witness passes") {
    const EnvBox env = replacer_env_box(2, state(random_density(rng, 3), {3}),
                                        state(random_density(rng, 3), {3}));
    const SeizeCheck check = env_seize_check(env);
    CHECK(check.first_residual < 1e-10);
    CHECK(check.second_residual < 1e-10);
    CHECK(check.pass());
  }

  SECTION("replacer witness with a correlated probe and explicit decoder passes") {
    const ComplexMatrix rho = random_density(rng, 3);
    const ComplexMatrix sigma = random_density(rng, 3);
    EnvBox env = replacer_env_box(2, state(rho, {3}), state(sigma, {3}));
    env.seize = SeizeData{state(random_density(rng, 2 * 2), {2, 2}),
                          tensor_channels(discard_channel(2), identity_channel(3))};
    CHECK(env_seize_check(env).pass());
  }

  SECTION("which-member measurement seizes a perfectly distinguishable box") {
    const ChannelBox box(replacer_channel(1, state(basis_state(2, 0), {2})),
                         replacer_channel(1, state(basis_state(2, 1), {2})));
    EnvBox env = env_realize(box);
    env.seize = SeizeData{state(ComplexMatrix::Identity(1, 1), {1, 1}),
                          povm_channel({basis_state(2, 0), basis_state(2, 1)})};
    const SeizeCheck check = env_seize_check(env);
    CHECK(check.first_residual < 1e-10);
    CHECK(check.second_residual < 1e-10);

    // The swapped decoder confuses the two environments completely.
    env.seize->decoder = povm_channel({basis_state(2, 1), basis_state(2, 0)});
    const SeizeCheck bad = env_seize_check(env);
    CHECK(bad.first_residual > 0.1);
    CHECK_FALSE(bad.pass());
  }

  SECTION("missing witness data is reported") {
    EnvBox env = env_realize(standard_box(2.0));
    env.seize.reset();
    CHECK_THROWS_AS(env_seize_check(env), std::invalid_argument);
  }
}

TEST_CASE("constructors can project nearly-valid operators back onto channels") {
  Rng rng(25);
  const Channel good = channel_from_kraus(random_kraus(rng, 2, 3, 2));

  // Perturb the Choi operator so that it is neither positive nor trace
  // preserving, at a scale far above the validation tolerances.
  const ComplexMatrix noise = random_matrix(rng, 6, 6);
  const ComplexMatrix broken = good.choi.mat + 1e-3 * (noise + noise.adjoint());
  CHECK_THROWS_AS(make_channel(broken, 2, 3), std::invalid_argument);

  ChannelChecks repairing;
  repairing.repair = true;
  const Channel fixed = make_channel(broken, 2, 3, repairing);
  CHECK(min_eigenvalue(fixed.choi) > -1e-12);
  CHECK(max_abs(partial_trace(fixed.choi, {0}).mat - identity_matrix(2)) < 1e-10);
  CHECK(max_abs(fixed.choi.mat - good.choi.mat) < 0.1);

  // Repair cannot resurrect an annihilated input direction.
  ComplexMatrix dead = ComplexMatrix::Zero(4, 4);
  dead(0, 0) = dead(1, 1) = 1.0;  // acts only on the first input basis state
  CHECK_THROWS_AS(make_channel(dead, 2, 2, repairing), std::invalid_argument);
}

TEST_CASE("boxes insist on matching member dimensions") {
  Rng rng(23);
  CHECK_THROWS_AS(ChannelBox(identity_channel(2), identity_channel(3)), std::invalid_argument);
  CHECK_THROWS_AS(CQBox({random_density(rng, 2)}, {}), std::invalid_argument);
  const CQBox cq({random_density(rng, 2), random_density(rng, 2)},
                 {random_density(rng, 2), random_density(rng, 2)});
  const ChannelBox asbox = cq.as_box();
  CHECK(asbox.in_dim() == 2);
  CHECK(asbox.out_dim() == 2);
}
