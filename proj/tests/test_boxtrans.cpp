#include <boxdist/boxtrans.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "test_helpers.hpp"

using namespace boxdist;
using Catch::Approx;
using testutil::Rng;

namespace {

HermitianOperator state(const ComplexMatrix& m) {
  return HermitianOperator(m, {static_cast<int>(m.rows())}, 1e-8);
}

Channel random_channel(Rng& rng, int din, int dout, int kraus_count = 2) {
  return channel_from_kraus(testutil::random_kraus(rng, din, dout, kraus_count));
}

// First member rank-deficient, second member with a full-rank Choi operator so
// max-type quantities stay finite.
ChannelBox random_finite_max_box(Rng& rng) {
  return ChannelBox(random_channel(rng, 2, 2, 2), random_channel(rng, 2, 2, 4));
}

Channel phase_channel(double theta) {
  ComplexMatrix u = ComplexMatrix::Identity(2, 2);
  u(1, 1) = std::polar(1.0, theta);
  return unitary_channel(u);
}

Channel pauli_x_channel() {
  ComplexMatrix x = ComplexMatrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  return unitary_channel(x);
}

// Exhaustive search over classical post-processings of the standard box: a
// 2x2 column-stochastic map T must carry the biased state exactly onto the
// more biased target, and the conversion error is how far T moves the sharp
// state.  Scanning the free column entry is an independent check on the
// superchannel program.
double brute_force_standard_error(double m_from, double m_to) {
  double best = 1.0;
  constexpr int grid = 20000;
  for (int i = 0; i <= grid; ++i) {
    const double a = static_cast<double>(i) / grid;  // T(0,0)
    const double b = (1.0 / m_to - a / m_from) / (1.0 - 1.0 / m_from);
    if (b < -1e-9 || b > 1.0 + 1e-9) continue;
    best = std::min(best, 1.0 - a);
  }
  return best;
}

// Scalar search for the smoothed distillable bits of the standard box: the
// optimal test on the flag output is diagonal, its miss entry is best set to
// zero, and the hit entry is pushed down to the allowed floor.
double standard_box_smooth_min_bits(double m, double eps) {
  double best = 1.0;
  constexpr int grid = 20000;
  for (int i = 0; i <= grid; ++i) {
    const double a = static_cast<double>(i) / grid;
    if (a < 1.0 - eps - 1e-12) continue;
    best = std::min(best, a / m);
  }
  return -std::log2(best);
}

double classical_renyi(const std::vector<double>& p, const std::vector<double>& q, double alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += std::pow(p[i], alpha) * std::pow(q[i], 1.0 - alpha);
  return std::log2(s) / (alpha - 1.0);
}

}  // namespace

TEST_CASE("the superchannel contraction matches the applied action and its adjoint") {
  Rng rng(51);
  const Channel pre = random_channel(rng, 2, 4, 2);
  const Channel post = random_channel(rng, 4, 2, 2);
  const Superchannel sc = superchannel_from_pre_post(pre, post, 2, 2);
  const Channel x = random_channel(rng, 2, 2, 3);

  const ComplexMatrix direct = apply_superchannel(sc, x).choi.mat;
  const ComplexMatrix contracted =
      detail_bt::contract_with_box(x.choi.mat, sc.choi.mat, 2, 2, 2, 2);
  CHECK(max_abs(direct - contracted) < 1e-11);

  // <y, C(t)> == <C*(y), t> pins the factor bookkeeping of the dual program.
  const ComplexMatrix y = testutil::random_hermitian(rng, 4);
  const ComplexMatrix t = testutil::random_hermitian(rng, 16);
  const double lhs = herm_inner(y, detail_bt::contract_with_box(x.choi.mat, t, 2, 2, 2, 2));
  const double rhs = herm_inner(detail_bt::contraction_adjoint(x.choi.mat, y, 2, 2, 2, 2), t);
  CHECK(lhs == Approx(rhs).margin(1e-9));
}

TEST_CASE("identical boxes convert with zero error") {
  Rng rng(52);
  const ChannelBox box = random_finite_max_box(rng);
  const TransformResult r = transform_error(box, box);
  CHECK(r.epsilon_star <= 1e-6);
  CHECK(r.primal_dual_gap <= 1e-6);
  CHECK_FALSE(r.inaccurate);
  const ProtocolCheck chk = verify_protocol(r.superchannel, box, box);
  CHECK(chk.eps_first <= 1e-5);
  CHECK(chk.second_residual <= 1e-6);
}

TEST_CASE("standard-box demotion matches a brute-force conversion search") {
  const TransformResult to4 = transform_error(standard_box(2.0), standard_box(4.0));
  const TransformResult to8 = transform_error(standard_box(2.0), standard_box(8.0));
  CHECK(to4.epsilon_star == Approx(brute_force_standard_error(2.0, 4.0)).margin(1e-4));
  CHECK(to8.epsilon_star == Approx(brute_force_standard_error(2.0, 8.0)).margin(1e-4));
  CHECK(to4.epsilon_star == Approx(0.5).margin(1e-5));
  CHECK(to8.epsilon_star == Approx(0.75).margin(1e-5));
  // Asking for more bits can only hurt.
  CHECK(to4.epsilon_star <= to8.epsilon_star + 1e-9);
  // The reverse direction is free.
  const TransformResult down = transform_error(standard_box(4.0), standard_box(2.0));
  CHECK(down.epsilon_star <= 1e-5);
}

TEST_CASE("a box converts freely into the standard box of its distillable bits") {
  Rng rng(53);
  const ChannelBox box(phase_channel(M_PI / 3.0), random_channel(rng, 2, 2, 4));
  const DivergenceReport rep = channel_dmin_eps(box, 0.0);
  REQUIRE(rep.value.is_finite());
  const TransformResult r = transform_error(box, standard_box(std::exp2(rep.value.as_double())));
  CHECK(r.epsilon_star <= 1e-5);
  CHECK(r.primal_dual_gap <= 1e-5);
}

TEST_CASE("exact distillation is witnessed by an explicit superchannel") {
  SECTION("the standard box distills its own bits") {
    const ChannelBox box = standard_box(4.0);
    const ProtocolResult res = distill_exact(box);
    REQUIRE(res.log2M.is_finite());
    CHECK(res.log2M.as_double() == Approx(2.0).margin(1e-6));
    REQUIRE(res.superchannel.has_value());
    CHECK(max_abs(res.target.second.choi.mat - pi_state(4.0).mat) < 1e-6);
    const ProtocolCheck chk = verify_protocol(*res.superchannel, box, res.target);
    CHECK(chk.eps_first <= 1e-6);
    CHECK(chk.second_residual <= 1e-6);
  }

  SECTION("an identical pair distills nothing") {
    Rng rng(54);
    const Channel n = random_channel(rng, 2, 2, 3);
    const ProtocolResult res = distill_exact(ChannelBox(n, n));
    REQUIRE(res.log2M.is_finite());
    CHECK(std::abs(res.log2M.as_double()) <= 1e-6);
    CHECK(max_abs(res.target.second.choi.mat - pi_state(1.0).mat) < 1e-5);
    REQUIRE(res.superchannel.has_value());
    const ProtocolCheck chk = verify_protocol(*res.superchannel, ChannelBox(n, n), res.target);
    CHECK(chk.eps_first <= 1e-6);
    CHECK(chk.second_residual <= 1e-6);
  }

  SECTION("a generic box distills exactly its program value") {
    Rng rng(55);
    const ChannelBox box = random_finite_max_box(rng);
    const ProtocolResult res = distill_exact(box);
    REQUIRE(res.log2M.is_finite());
    REQUIRE(res.superchannel.has_value());
    // The witnessed bit count agrees with the reported program value.
    const double witnessed = std::log2(1.0 / res.target.second.choi.mat(0, 0).real());
    CHECK(witnessed == Approx(res.log2M.as_double()).margin(1e-4));
    const ProtocolCheck chk = verify_protocol(*res.superchannel, box, res.target);
    CHECK(chk.eps_first <= 1e-6);
    CHECK(chk.second_residual <= 1e-6);
  }

  SECTION("a perfectly distinguishable box reports an infinite value") {
    const ProtocolResult res = distill_exact(ChannelBox(identity_channel(2), pauli_x_channel()));
    CHECK(res.log2M.is_pos_inf());
    CHECK_FALSE(res.superchannel.has_value());
  }
}

TEST_CASE("smoothed distillation trades error for bits") {
  SECTION("the standard box at half error doubles its bits") {
    const ChannelBox box = standard_box(2.0);
    const ProtocolResult res = distill_eps(box, 0.5);
    REQUIRE(res.log2M.is_finite());
    CHECK(res.log2M.as_double() == Approx(standard_box_smooth_min_bits(2.0, 0.5)).margin(1e-4));
    CHECK(res.log2M.as_double() == Approx(2.0).margin(1e-5));
    REQUIRE(res.superchannel.has_value());
    const ProtocolCheck chk = verify_protocol(*res.superchannel, box, res.target);
    CHECK(chk.eps_first <= 0.5 + 1e-5);
    CHECK(chk.second_residual <= 1e-6);
  }

  SECTION("smoothing never loses bits on a generic box") {
    Rng rng(56);
    const ChannelBox box = random_finite_max_box(rng);
    const ProtocolResult exact = distill_exact(box);
    const ProtocolResult res = distill_eps(box, 0.1);
    REQUIRE(res.log2M.is_finite());
    REQUIRE(exact.log2M.is_finite());
    CHECK(res.log2M.as_double() >= exact.log2M.as_double() - 1e-6);
    REQUIRE(res.superchannel.has_value());
    const ProtocolCheck chk = verify_protocol(*res.superchannel, box, res.target);
    CHECK(chk.eps_first <= 0.1 + 1e-5);
    CHECK(chk.second_residual <= 1e-6);
  }
}

TEST_CASE("exact dilution is witnessed by an explicit superchannel") {
  SECTION("replacer pairs cost their state-level value") {
    Rng rng(57);
    const ComplexMatrix rho = testutil::random_density(rng, 2);
    const ComplexMatrix sigma = testutil::random_density(rng, 2);
    const ChannelBox box = replacer_box(1, state(rho), state(sigma));
    const ExtendedReal expect = state_dmax(state(rho), state(sigma));
    REQUIRE(expect.is_finite());
    const ProtocolResult res = dilute_exact(box);
    CHECK(res.log2M.as_double() == Approx(expect.as_double()).margin(1e-9));
    REQUIRE(res.superchannel.has_value());
    CHECK(max_abs(apply_superchannel(*res.superchannel, res.source.first).choi.mat -
                  box.first.choi.mat) < 1e-8);
    CHECK(max_abs(apply_superchannel(*res.superchannel, res.source.second).choi.mat -
                  box.second.choi.mat) < 1e-8);
  }

  SECTION("an identical pair costs nothing") {
    Rng rng(58);
    const Channel n = random_channel(rng, 2, 2, 3);
    const ProtocolResult res = dilute_exact(ChannelBox(n, n));
    CHECK(std::abs(res.log2M.as_double()) <= 1e-6);
    REQUIRE(res.superchannel.has_value());
    CHECK(max_abs(apply_superchannel(*res.superchannel, res.source.first).choi.mat -
                  n.choi.mat) < 1e-8);
  }

  SECTION("a generic box is reproduced exactly from its standard cost") {
    Rng rng(59);
    const ChannelBox box = random_finite_max_box(rng);
    const ProtocolResult res = dilute_exact(box);
    REQUIRE(res.log2M.is_finite());
    REQUIRE(res.superchannel.has_value());
    CHECK(max_abs(apply_superchannel(*res.superchannel, res.source.first).choi.mat -
                  box.first.choi.mat) < 1e-8);
    CHECK(max_abs(apply_superchannel(*res.superchannel, res.source.second).choi.mat -
                  box.second.choi.mat) < 1e-8);
    const ProtocolCheck chk = verify_protocol(*res.superchannel, res.source, box);
    CHECK(chk.eps_first <= 1e-7);
    CHECK(chk.second_residual <= 1e-7);
  }

  SECTION("an undominated first member cannot be diluted") {
    const ChannelBox box = replacer_box(1, state(basis_state(2, 0)), state(basis_state(2, 1)));
    CHECK_THROWS_AS(dilute_exact(box), std::domain_error);
  }
}

TEST_CASE("smoothed dilution trades error for cost") {
  SECTION("smoothing never raises the cost") {
    Rng rng(60);
    const ChannelBox box = random_finite_max_box(rng);
    const ProtocolResult exact = dilute_exact(box);
    const ProtocolResult res = dilute_eps(box, 0.1);
    REQUIRE(res.log2M.is_finite());
    CHECK(res.log2M.as_double() <= exact.log2M.as_double() + 1e-6);
    REQUIRE(res.superchannel.has_value());
    const ProtocolCheck chk = verify_protocol(*res.superchannel, res.source, box);
    CHECK(chk.eps_first <= 0.1 + 1e-5);
    CHECK(chk.second_residual <= 1e-5);
  }

  SECTION("a support mismatch the budget cannot bridge reports an infinite cost") {
    const ChannelBox box(identity_channel(2), pauli_x_channel());
    const ProtocolResult res = dilute_eps(box, 0.1);
    CHECK(res.log2M.is_pos_inf());
    CHECK_FALSE(res.superchannel.has_value());
  }
}

TEST_CASE("standard-box conversions are exact classical post-processings") {
  const Superchannel conv = standard_box_conversion(8.0, 3.0);
  const ChannelBox from = standard_box(8.0);
  CHECK(max_abs(apply_superchannel(conv, from.first).choi.mat - basis_state(2, 0)) < 1e-12);
  CHECK(max_abs(apply_superchannel(conv, from.second).choi.mat - pi_state(3.0).mat) < 1e-12);

  const Superchannel same = standard_box_conversion(5.0, 5.0);
  CHECK(max_abs(apply_superchannel(same, from.second).choi.mat - from.second.choi.mat) < 1e-12);

  CHECK_THROWS_AS(standard_box_conversion(2.0, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(standard_box_conversion(0.5, 0.5), std::invalid_argument);
}

TEST_CASE("protocol verification flags a mismatched superchannel") {
  const ChannelBox box = standard_box(4.0);
  const Superchannel id = identity_superchannel(1, 2);
  const ProtocolCheck good = verify_protocol(id, box, box);
  CHECK(good.eps_first <= 1e-8);
  CHECK(good.second_residual <= 1e-8);

  const ChannelBox swapped(box.second, box.first);
  const ProtocolCheck bad = verify_protocol(id, box, swapped);
  CHECK(bad.eps_first >= 0.3);
  CHECK(bad.second_residual >= 0.3);
}

TEST_CASE("tensor powers scale the box") {
  Rng rng(61);
  const ChannelBox box = random_finite_max_box(rng);

  SECTION("one copy is the box itself") {
    const ChannelBox p1 = tensor_power_box(box, 1);
    CHECK(max_abs(p1.first.choi.mat - box.first.choi.mat) == 0.0);
    CHECK(max_abs(p1.second.choi.mat - box.second.choi.mat) == 0.0);
  }

  SECTION("the max-relative entropy is additive under copies") {
    const ExtendedReal single = channel_dmax(box);
    REQUIRE(single.is_finite());
    const ExtendedReal doubled = channel_dmax(tensor_power_box(box, 2));
    REQUIRE(doubled.is_finite());
    CHECK(doubled.as_double() == Approx(2.0 * single.as_double()).margin(1e-6));
  }

  SECTION("two copies of a quarter-phase box become perfectly distinguishable") {
    // One copy: the numerical range of diag(1, i) stays at distance
    // 1/sqrt(2) from the origin, so one bit is distillable.  Two copies ride
    // on diag(1, i, i, -1), whose hull contains the origin.
    ComplexMatrix u = ComplexMatrix::Identity(2, 2);
    u(1, 1) = Complex(0.0, 1.0);
    const ChannelBox quarter(identity_channel(2), unitary_channel(u));
    const DivergenceReport one = channel_dmin_eps(quarter, 0.0);
    REQUIRE(one.value.is_finite());
    CHECK(one.value.as_double() == Approx(1.0).margin(1e-5));
    const DivergenceReport two = channel_dmin_eps(tensor_power_box(quarter, 2), 0.0);
    CHECK(two.value.is_pos_inf());
  }

  SECTION("the dimension cap is enforced") {
    CHECK_THROWS_AS(tensor_power_box(box, 5), std::invalid_argument);
    CHECK_THROWS_AS(tensor_power_box(box, 2, 15), std::invalid_argument);
    CHECK_NOTHROW(tensor_power_box(box, 2, 16));
    CHECK_THROWS_AS(tensor_power_box(box, 0), std::invalid_argument);
  }
}

TEST_CASE("two-step conversions stay within the combined budget") {
  Rng rng(62);
  const ChannelBox source = standard_box(8.0);
  // A weakly distinguishable quantum target: the first member is a mixture
  // leaning heavily on the second.
  const Channel m_t = random_channel(rng, 2, 2, 4);
  const Channel other = random_channel(rng, 2, 2, 4);
  const Channel n_t =
      make_channel(0.85 * m_t.choi.mat + 0.15 * other.choi.mat, 2, 2);
  const ChannelBox target(n_t, m_t);

  const ProtocolResult d = distill_eps(source, 0.05);
  const ProtocolResult c = dilute_eps(target, 0.05);
  REQUIRE(d.log2M.is_finite());
  REQUIRE(c.log2M.is_finite());
  REQUIRE(d.superchannel.has_value());
  REQUIRE(c.superchannel.has_value());
  REQUIRE(d.log2M.as_double() >= c.log2M.as_double());

  const double m1 = 1.0 / d.target.second.choi.mat(0, 0).real();
  const double m2 = 1.0 / c.source.second.choi.mat(0, 0).real();
  REQUIRE(m1 >= m2 - 1e-9);
  const Superchannel mid = standard_box_conversion(m1, m2);

  const Channel first_chain = apply_superchannel(
      *c.superchannel, apply_superchannel(mid, apply_superchannel(*d.superchannel, source.first)));
  const Channel second_chain = apply_superchannel(
      *c.superchannel,
      apply_superchannel(mid, apply_superchannel(*d.superchannel, source.second)));
  const double err_first = diamond_value(first_chain, target.first);
  const double err_second = diamond_value(second_chain, target.second);
  CHECK(err_first <= 0.05 + 0.05 + 1e-4);
  CHECK(err_second <= 1e-5);

  // The one-shot optimum can only improve on the composed protocol.
  const TransformResult direct = transform_error(source, target);
  CHECK(direct.epsilon_star <= err_first + 1e-4);
}

TEST_CASE("the smoothed target consistency holds for the transformation program") {
  Rng rng(63);
  const ChannelBox box(phase_channel(M_PI / 2.5), random_channel(rng, 2, 2, 4));
  const DivergenceReport rep = channel_dmin_eps(box, 0.2);
  REQUIRE(rep.value.is_finite());
  const TransformResult r =
      transform_error(box, standard_box(std::exp2(rep.value.as_double())));
  CHECK(r.epsilon_star <= 0.2 + 1e-3);
}

TEST_CASE("the min-max smoothing inequality holds across box families") {
  SECTION("standard box values cross-check against scalar searches") {
    const BoundReport rep = bound_smooth_min_max(standard_box(3.0), 0.1, 0.1);
    CHECK(rep.pass);
    CHECK(rep.certified);
    REQUIRE(rep.lhs.is_finite());
    REQUIRE(rep.rhs.is_finite());
    CHECK(rep.lhs.as_double() == Approx(standard_box_smooth_min_bits(3.0, 0.1)).margin(1e-4));
    const double smax =
        testutil::classical_smooth_max({1.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}, 0.1);
    CHECK(rep.rhs.as_double() == Approx(smax + std::log2(1.0 / 0.8)).margin(5e-3));
  }

  SECTION("identical members keep both sides near the budget terms") {
    Rng rng(64);
    const Channel n = random_channel(rng, 2, 2, 3);
    const BoundReport rep = bound_smooth_min_max(ChannelBox(n, n), 0.1, 0.2);
    CHECK(rep.pass);
    REQUIRE(rep.lhs.is_finite());
    CHECK(rep.lhs.as_double() == Approx(-std::log2(0.9)).margin(1e-4));
  }

  SECTION("random boxes of mixed rank all pass") {
    Rng rng(65);
    for (int i = 0; i < 8; ++i) {
      const ChannelBox box = i % 2 == 0 ? random_finite_max_box(rng)
                                        : ChannelBox(random_channel(rng, 2, 2, 2),
                                                     random_channel(rng, 2, 2, 2));
      const BoundReport rep = bound_smooth_min_max(box, 0.1, 0.1);
      INFO("box " << i << " lhs " << rep.lhs.as_double() << " rhs " << rep.rhs.as_double());
      CHECK(rep.pass);
    }
  }

  SECTION("budgets summing past one are rejected") {
    CHECK_THROWS_AS(bound_smooth_min_max(standard_box(2.0), 0.6, 0.5), std::invalid_argument);
  }
}

TEST_CASE("order-lowering absorbs a perturbation of the first channel") {
  Rng rng(66);
  const ComplexMatrix r0 = testutil::random_density(rng, 2);
  const ComplexMatrix r1 = testutil::random_density(rng, 2);
  const ComplexMatrix sg = testutil::random_density(rng, 2);
  const Channel c0 = replacer_channel(1, state(r0));
  const Channel c1 = replacer_channel(1, state(r1));
  const Channel cs = replacer_channel(1, state(sg));

  SECTION("replacer channels reduce to certified state-level values") {
    const double alpha = 0.75;
    const double beta = alpha / (2.0 * alpha - 1.0);
    const BoundReport rep =
        bound_pseudo_continuity(RenyiFamily::sandwiched, alpha, c0, c1, cs);
    CHECK(rep.certified);
    CHECK(rep.pass);
    const double want_rhs = renyi_sandwiched(beta, state(r0), state(sg)).as_double();
    const double want_lhs = renyi_sandwiched(alpha, state(r1), state(sg)).as_double() +
                            (alpha / (1.0 - alpha)) * std::log2(fidelity(state(r0), state(r1)));
    CHECK(rep.rhs.as_double() == Approx(want_rhs).margin(1e-9));
    CHECK(rep.lhs.as_double() == Approx(want_lhs).margin(1e-9));
  }

  SECTION("the second family uses the diamond distance correction") {
    const double alpha = 0.6;
    const BoundReport rep = bound_pseudo_continuity(RenyiFamily::petz, alpha, c0, c1, cs);
    CHECK(rep.certified);
    CHECK(rep.pass);
    const double want_rhs = renyi_petz(2.0 - alpha, state(r0), state(sg)).as_double();
    const double td = trace_distance(state(r0), state(r1));
    const double want_lhs = renyi_petz(alpha, state(r1), state(sg)).as_double() +
                            (2.0 / (1.0 - alpha)) * std::log2(1.0 - td);
    CHECK(rep.rhs.as_double() == Approx(want_rhs).margin(1e-9));
    CHECK(rep.lhs.as_double() == Approx(want_lhs).margin(1e-6));
  }

  SECTION("an unperturbed channel reduces to order monotonicity") {
    Rng qrng(67);
    const Channel n = random_channel(qrng, 2, 2, 2);
    const Channel m = random_channel(qrng, 2, 2, 4);
    const BoundReport rep =
        bound_pseudo_continuity(RenyiFamily::sandwiched, 0.8, n, n, m, 12, 901);
    CHECK_FALSE(rep.certified);
    CHECK(rep.pass);
  }

  SECTION("generic quantum triples satisfy the inequality heuristically") {
    Rng qrng(68);
    const Channel n0 = random_channel(qrng, 2, 2, 2);
    const Channel n1 = random_channel(qrng, 2, 2, 2);
    const Channel m = random_channel(qrng, 2, 2, 4);
    const BoundReport rep =
        bound_pseudo_continuity(RenyiFamily::sandwiched, 0.75, n0, n1, m, 12, 907);
    CHECK_FALSE(rep.certified);
    INFO("lhs " << rep.lhs.as_double() << " rhs " << rep.rhs.as_double());
    CHECK(rep.pass);
  }

  SECTION("invalid orders and undominated references are rejected") {
    CHECK_THROWS_AS(bound_pseudo_continuity(RenyiFamily::sandwiched, 1.2, c0, c1, cs),
                    std::invalid_argument);
    CHECK_THROWS_AS(bound_pseudo_continuity(RenyiFamily::petz, 1.0, c0, c1, cs),
                    std::invalid_argument);
    // A reference without full support cannot dominate a full-support channel.
    const Channel bad = replacer_channel(1, state(basis_state(2, 0)));
    const Channel full = replacer_channel(1, state(pi_state(2.0).mat));
    CHECK_THROWS_AS(bound_pseudo_continuity(RenyiFamily::sandwiched, 0.75, full, c1, bad),
                    std::invalid_argument);
  }
}

TEST_CASE("the parallel converse bound separates possible from impossible rates") {
  const ComplexMatrix e0 = basis_state(2, 0);
  const ComplexMatrix mixed = 0.5 * ComplexMatrix::Identity(2, 2);
  const ChannelBox box = replacer_box(1, state(e0), state(mixed));
  // For a sharp state against the flat one, every Renyi order gives exactly
  // one bit, which makes both sides easy to pin down.

  SECTION("discarding a copy is always allowed") {
    const BoundReport rep = bound_parallel_converse(box, box, 2, 1, 0.1, 0.8);
    CHECK(rep.certified);
    CHECK(rep.pass);
    CHECK(rep.rhs.as_double() == Approx(2.0).margin(1e-9));
    CHECK(rep.lhs.as_double() ==
          Approx(1.0 + (2.0 * 0.8 / 0.2) * std::log2(0.9)).margin(1e-9));
  }

  SECTION("cloning a copy is refuted") {
    const BoundReport rep = bound_parallel_converse(box, box, 1, 2, 0.01, 0.8);
    CHECK(rep.certified);
    CHECK_FALSE(rep.pass);
    CHECK(rep.lhs.as_double() ==
          Approx(2.0 + (2.0 * 0.8 / 0.2) * std::log2(0.99)).margin(1e-9));
    CHECK(rep.rhs.as_double() == Approx(1.0).margin(1e-9));
  }

  SECTION("heuristic tensor-power evaluation keeps a generous slack") {
    Rng rng(69);
    const ChannelBox qbox = random_finite_max_box(rng);
    const BoundReport rep = bound_parallel_converse(qbox, qbox, 2, 1, 0.2, 0.8, 6, 911);
    CHECK_FALSE(rep.certified);
    INFO("lhs " << rep.lhs.as_double() << " rhs " << rep.rhs.as_double());
    CHECK(rep.pass);
  }

  SECTION("parameter validation") {
    CHECK_THROWS_AS(bound_parallel_converse(box, box, 0, 1, 0.1, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(bound_parallel_converse(box, box, 1, 1, 0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(bound_parallel_converse(box, box, 1, 1, 1.0, 0.8), std::invalid_argument);
  }
}

TEST_CASE("Renyi divergences bound the smooth max-relative entropy from below") {
  Rng rng(70);
  const ComplexMatrix rho = testutil::random_density(rng, 2);
  const ComplexMatrix sigma = testutil::random_density(rng, 2);
  const ChannelBox rbox = replacer_box(1, state(rho), state(sigma));

  SECTION("replacer boxes cross-check against state-level values") {
    const double alpha = 0.75, eps = 0.2;
    const BoundReport rep =
        bound_smooth_dmax_lower(rbox, alpha, eps, RenyiFamily::sandwiched);
    CHECK(rep.certified);
    CHECK(rep.pass);
    const double want_lhs =
        renyi_sandwiched(alpha, state(rho), state(sigma)).as_double() +
        (2.0 * alpha / (alpha - 1.0)) * std::log2(1.0 / (1.0 - eps));
    CHECK(rep.lhs.as_double() == Approx(want_lhs).margin(1e-9));
  }

  SECTION("the second family carries its own penalty") {
    const double alpha = 0.5, eps = 0.2;
    const BoundReport rep = bound_smooth_dmax_lower(rbox, alpha, eps, RenyiFamily::petz);
    CHECK(rep.certified);
    CHECK(rep.pass);
    const double want_lhs = renyi_petz(alpha, state(rho), state(sigma)).as_double() +
                            (2.0 / (alpha - 1.0)) * std::log2(1.0 / (1.0 - eps));
    CHECK(rep.lhs.as_double() == Approx(want_lhs).margin(1e-9));
  }

  SECTION("generic boxes pass with heuristic inputs") {
    Rng qrng(71);
    const ChannelBox box = random_finite_max_box(qrng);
    const BoundReport s =
        bound_smooth_dmax_lower(box, 0.75, 0.1, RenyiFamily::sandwiched, 10, 917);
    CHECK_FALSE(s.certified);
    CHECK(s.pass);
    const BoundReport p = bound_smooth_dmax_lower(box, 0.4, 0.1, RenyiFamily::petz, 10, 919);
    CHECK(p.pass);
  }

  SECTION("order validation") {
    CHECK_THROWS_AS(bound_smooth_dmax_lower(rbox, 1.0, 0.1, RenyiFamily::sandwiched),
                    std::invalid_argument);
    CHECK_THROWS_AS(bound_smooth_dmax_lower(rbox, 0.0, 0.1, RenyiFamily::petz),
                    std::invalid_argument);
  }
}

TEST_CASE("per-symbol Renyi values bound classical-quantum smoothing from above") {
  SECTION("diagonal symbols cross-check against classical searches") {
    const auto diag2 = [](double a, double b) {
      ComplexMatrix m = ComplexMatrix::Zero(2, 2);
      m(0, 0) = a;
      m(1, 1) = b;
      return m;
    };
    const std::vector<ComplexMatrix> firsts = {diag2(0.9, 0.1), diag2(0.2, 0.8)};
    const std::vector<ComplexMatrix> seconds = {diag2(0.3, 0.7), diag2(0.6, 0.4)};
    const CQBox cq(firsts, seconds);
    const double alpha = 2.0, eps = 0.3;
    const BoundReport rep = bound_cq_smooth_dmax_upper(cq, alpha, eps);
    CHECK(rep.certified);
    CHECK(rep.pass);

    const double want_lhs =
        std::max(testutil::classical_smooth_max({0.9, 0.1}, {0.3, 0.7}, eps),
                 testutil::classical_smooth_max({0.2, 0.8}, {0.6, 0.4}, eps));
    REQUIRE(rep.lhs.is_finite());
    CHECK(rep.lhs.as_double() == Approx(want_lhs).margin(5e-3));

    const double base = std::max(classical_renyi({0.9, 0.1}, {0.3, 0.7}, alpha),
                                 classical_renyi({0.2, 0.8}, {0.6, 0.4}, alpha));
    const double corr = std::log2(1.0 / (eps * eps)) / (alpha - 1.0) +
                        std::log2(1.0 / (1.0 - eps * eps));
    CHECK(rep.rhs.as_double() == Approx(base + corr).margin(1e-9));
  }

  SECTION("generic symbol states pass") {
    Rng rng(72);
    const std::vector<ComplexMatrix> firsts = {testutil::random_density(rng, 2),
                                               testutil::random_density(rng, 2)};
    const std::vector<ComplexMatrix> seconds = {testutil::random_density(rng, 2),
                                                testutil::random_density(rng, 2)};
    const CQBox cq(firsts, seconds);
    const BoundReport rep = bound_cq_smooth_dmax_upper(cq, 1.5, 0.2);
    CHECK(rep.certified);
    CHECK(rep.pass);
  }

  SECTION("parameter validation") {
    const CQBox cq({basis_state(2, 0)}, {0.5 * ComplexMatrix::Identity(2, 2)});
    CHECK_THROWS_AS(bound_cq_smooth_dmax_upper(cq, 1.0, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(bound_cq_smooth_dmax_upper(cq, 2.0, 0.0), std::invalid_argument);
  }
}
