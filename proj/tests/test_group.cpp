#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "fixtures.hpp"
#include "orbita/group.hpp"

using namespace orbita;
using fixtures::make_h;
using fixtures::make_shear;
using fixtures::Rng;

namespace {

JetMap diag_jet(Cplx a, Cplx b, int degree = 4) {
  CMat A = CMat::Zero(2, 2);
  A(0, 0) = a;
  A(1, 1) = b;
  return JetMap::linear(A, degree);
}

CVec c2(Cplx a, Cplx b) {
  CVec v(2);
  v << a, b;
  return v;
}

CVec c1(Cplx a) {
  CVec v(1);
  v << a;
  return v;
}

}  // namespace

TEST_CASE("make_group: refusals carry the offending data") {
  // Non-commuting pair (2z, w) and (z + w, w).
  JetMap f(2, 3), g(2, 3);
  f.add_coeff(0, {1, 0}, 2.0);
  f.add_coeff(1, {0, 1}, 1.0);
  g.add_coeff(0, {1, 0}, 1.0);
  g.add_coeff(0, {0, 1}, 1.0);
  g.add_coeff(1, {0, 1}, 1.0);
  try {
    make_group(2, 3, {f, g});
    FAIL("expected NotAbelian");
  } catch (const NotAbelian& e) {
    CHECK(e.first == 0);
    CHECK(e.second == 1);
    CHECK(e.defect > 0.1);
  }

  // Singular linear part: (z, z^2).
  JetMap s(2, 3);
  s.add_coeff(0, {1, 0}, 1.0);
  s.add_coeff(1, {2, 0}, 1.0);
  CHECK_THROWS_AS(make_group(2, 3, {s}), NotAnAutomorphismGerm);

  // A declared inverse that is not the inverse.
  JetMap two(1, 2);
  two.add_coeff(0, {1}, 2.0);
  CHECK_THROWS_AS(make_group(1, 2, {two}, {JetMap::identity(1, 2)}), Error);

  // Declared fixed point that no generator fixes: 2x - 1 fixes 1, not 0.
  JetMap affine(1, 2);
  affine.add_coeff(0, {1}, 2.0);
  affine.add_coeff(0, {0}, -1.0);
  try {
    make_group(1, 2, {affine}, {}, c1(0.0));
    FAIL("expected NoCommonFixedPoint");
  } catch (const NoCommonFixedPoint& e) {
    REQUIRE(e.residuals.size() == 1);
    CHECK(e.residuals[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("normalize_fixed_point: origin-anchored specs pass through unchanged") {
  const GroupSpec spec = make_group(2, 4, {diag_jet(2.0, 3.0)});
  const GroupSpec norm = normalize_fixed_point(spec);
  CHECK(norm.normalized);
  CHECK(max_coeff_distance(norm.generators[0], spec.generators[0]) == 0.0);
  REQUIRE(norm.fixed_point.has_value());
  CHECK(norm.fixed_point->norm() == 0.0);
}

TEST_CASE("normalize_fixed_point: affine map with declared fixed point") {
  // f(x) = 2(x-1)+1 = 2x - 1 fixes 1; conjugating the fix to 0 leaves 2x.
  JetMap affine(1, 3);
  affine.add_coeff(0, {1}, 2.0);
  affine.add_coeff(0, {0}, -1.0);
  const GroupSpec spec = make_group(1, 3, {affine}, {}, c1(1.0));
  const GroupSpec norm = normalize_fixed_point(spec);
  CHECK(norm.generators[0].term_count() == 1);
  CHECK(std::abs(norm.generators[0].coeff(0, {1}) - Cplx(2.0, 0.0)) < 1e-14);
  CHECK_FALSE(norm.generators[0].has_constant_term());
}

TEST_CASE("normalize_fixed_point: hidden fixed point is detected") {
  // Conjugate h by the translation to p = (1, -2); the normalizer must find p
  // from scratch and recover h exactly.
  const JetMap h = make_h(4);
  CVec p = c2(Cplx(1.0, 0.0), Cplx(-2.0, 0.0));
  const JetMap to_zero = JetMap::translation(-p, 4);
  const JetMap to_p = JetMap::translation(p, 4);
  const JetMap hidden = compose(to_p, compose(h, to_zero));
  CHECK(hidden.has_constant_term());

  const GroupSpec spec = make_group(2, 4, {hidden});
  const GroupSpec norm = normalize_fixed_point(spec);
  CHECK(max_coeff_distance(norm.generators[0], h) < 1e-9);
  CHECK_FALSE(norm.generators[0].has_constant_term());
}

TEST_CASE("normalize_fixed_point: translations share no fixed point") {
  JetMap t1 = JetMap::translation(c1(1.0), 2);
  JetMap t2 = JetMap::translation(c1(2.0), 2);
  const GroupSpec spec = make_group(1, 2, {t1, t2});
  try {
    normalize_fixed_point(spec);
    FAIL("expected NoCommonFixedPoint");
  } catch (const NoCommonFixedPoint& e) {
    REQUIRE(e.residuals.size() == 2);
    CHECK(e.residuals[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.residuals[1] == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("word realizer: frozen powers of the resonant map") {
  const GroupSpec spec = normalize_fixed_point(make_group(2, 4, {make_h(4)}));
  WordRealizer realizer(spec);

  CHECK(max_coeff_distance(realizer.realize({0}), JetMap::identity(2, 4)) == 0.0);

  // h^3 = (8z, 64w + 48 z^2): the quadratic coefficient follows c_k = k 4^(k-1).
  const JetMap& h3 = realizer.realize({3});
  CHECK(std::abs(h3.coeff(0, {1, 0}) - Cplx(8.0, 0.0)) < 1e-12);
  CHECK(std::abs(h3.coeff(1, {0, 1}) - Cplx(64.0, 0.0)) < 1e-12);
  CHECK(std::abs(h3.coeff(1, {2, 0}) - Cplx(48.0, 0.0)) < 1e-12);

  // h^-1 = (z/2, w/4 - z^2/16): c_{-1} = -1/16.
  const JetMap& hinv = realizer.realize({-1});
  CHECK(std::abs(hinv.coeff(0, {1, 0}) - Cplx(0.5, 0.0)) < 1e-12);
  CHECK(std::abs(hinv.coeff(1, {0, 1}) - Cplx(0.25, 0.0)) < 1e-12);
  CHECK(std::abs(hinv.coeff(1, {2, 0}) - Cplx(-0.0625, 0.0)) < 1e-12);

  // Realized words fix the origin exactly.
  for (int k = -3; k <= 3; ++k)
    CHECK(realizer.realize({k}).evaluate(CVec::Zero(2)).norm() == 0.0);
}

TEST_CASE("word realizer: cancellation, group law, and order independence") {
  // Two copies of the shear: the word (1,-1) collapses to the identity.
  const JetMap s = make_shear(4);
  const GroupSpec twin = normalize_fixed_point(make_group(2, 4, {s, s}));
  WordRealizer twin_realizer(twin);
  CHECK(max_coeff_distance(twin_realizer.realize({1, -1}), JetMap::identity(2, 4)) < 1e-12);

  Rng rng(2026);
  std::uniform_int_distribution<int> kdist(-2, 2);
  for (int trial = 0; trial < 8; ++trial) {
    const fixtures::CommutingPair pair = fixtures::commuting_pair(trial, rng);
    const int n = pair.f.dim();
    const int degree = pair.f.degree();
    const GroupSpec spec = normalize_fixed_point(make_group(n, degree, {pair.f, pair.g}));
    WordRealizer realizer(spec);

    const WordExp k1 = {kdist(rng), kdist(rng)};
    const WordExp k2 = {kdist(rng), kdist(rng)};
    const WordExp sum = {k1[0] + k2[0], k1[1] + k2[1]};

    // Group law: the realized sum equals the composition of the parts.
    const JetMap lhs = realizer.realize(sum);
    const JetMap rhs = compose(realizer.realize(k1), realizer.realize(k2));
    CHECK(max_coeff_distance(lhs, rhs) < 1e-10);

    // The Jacobians multiply accordingly.
    const CMat J_err = lhs.jacobian_at_zero() -
                       realizer.realize(k1).jacobian_at_zero() *
                           realizer.realize(k2).jacobian_at_zero();
    CHECK(J_err.cwiseAbs().maxCoeff() < 1e-12);

    // Commutativity: composing the generator powers in the opposite order
    // changes nothing.
    const JetMap reversed = compose(realizer.realize({0, k1[1]}), realizer.realize({k1[0], 0}));
    CHECK(max_coeff_distance(realizer.realize(k1), reversed) < 1e-10);
  }
}

TEST_CASE("sampled operators: frozen columns") {
  // Identity-only sample: a single column x and vec(I).
  const GroupSpec id_spec = normalize_fixed_point(make_group(2, 2, {JetMap::identity(2, 2)}));
  WordRealizer id_realizer(id_spec);
  const CVec x0 = c2(Cplx(0.3, 0.0), Cplx(-0.2, 0.1));
  const SampledOperators single =
      build_sampled_operators(id_realizer, x0, std::vector<WordExp>{{0}});
  REQUIRE(single.eval_matrix.cols() == 1);
  CHECK((single.eval_matrix.col(0) - x0).norm() == 0.0);
  CHECK(std::abs(single.derivative_matrix(0, 0) - Cplx(1, 0)) == 0.0);
  CHECK(std::abs(single.derivative_matrix(1, 0)) == 0.0);
  CHECK(std::abs(single.derivative_matrix(2, 0)) == 0.0);
  CHECK(std::abs(single.derivative_matrix(3, 0) - Cplx(1, 0)) == 0.0);

  // diag(2,3) at (1,1), budget 1: graded word order (0), (-1), (1).
  const GroupSpec diag_spec = normalize_fixed_point(make_group(2, 4, {diag_jet(2.0, 3.0)}));
  WordRealizer diag_realizer(diag_spec);
  const CVec ones = c2(1.0, 1.0);
  const SampledOperators ops = build_sampled_operators(diag_realizer, ones, 1);
  REQUIRE(ops.words.size() == 3);
  CHECK(ops.words[0] == WordExp{0});
  CHECK(ops.words[1] == WordExp{-1});
  CHECK(ops.words[2] == WordExp{1});
  CHECK((ops.eval_matrix.col(0) - c2(1.0, 1.0)).norm() < 1e-14);
  CHECK((ops.eval_matrix.col(1) - c2(0.5, 1.0 / 3.0)).norm() < 1e-14);
  CHECK((ops.eval_matrix.col(2) - c2(2.0, 3.0)).norm() < 1e-14);
  CHECK(std::abs(ops.derivative_matrix(0, 2) - Cplx(2, 0)) < 1e-14);
  CHECK(std::abs(ops.derivative_matrix(3, 2) - Cplx(3, 0)) < 1e-14);

  // The resonant map at budget 2 contains h^2(1,1) = (4, 24).
  const GroupSpec h_spec = normalize_fixed_point(make_group(2, 4, {make_h(4)}));
  WordRealizer h_realizer(h_spec);
  const SampledOperators h_ops = build_sampled_operators(h_realizer, ones, 2);
  REQUIRE(h_ops.words.size() == 5);
  CHECK(h_ops.words[4] == WordExp{2});
  CHECK((h_ops.eval_matrix.col(4) - c2(4.0, 24.0)).norm() < 1e-12);

  // Budget guard: three generators at budget 23 would need 47^3 > 1e5 words.
  const JetMap shear = make_shear(4);
  const GroupSpec wide = normalize_fixed_point(make_group(2, 4, {shear, shear, shear}));
  WordRealizer wide_realizer(wide);
  CHECK_THROWS_AS(build_sampled_operators(wide_realizer, ones, 23), BudgetExceeded);
}

TEST_CASE("kernel consistency: diagonal group agrees, resonance does not") {
  const CVec ones = c2(1.0, 1.0);

  const GroupSpec diag_spec = normalize_fixed_point(make_group(2, 4, {diag_jet(2.0, 3.0)}));
  WordRealizer diag_realizer(diag_spec);
  const KernelVerdict diag_verdict =
      kernel_consistency(build_sampled_operators(diag_realizer, ones, 1));
  CHECK(diag_verdict.consistent);
  CHECK(diag_verdict.null_dim_eval == 1);
  CHECK(diag_verdict.null_dim_deriv == 1);
  CHECK(diag_verdict.min_principal_cosine >= 1.0 - 1e-9);

  // The resonance detector on words {0, 1, 2}: the derivative kernel is
  // spanned by (8, -6, 1) (a Vandermonde relation of (2^k, 4^k)), and its
  // evaluation image is (0, 2) because the quadratic coefficients c_k = k 4^(k-1)
  // break the relation: 8 c_0 - 6 c_1 + c_2 = -6 + 8 = 2.
  const GroupSpec h_spec = normalize_fixed_point(make_group(2, 4, {make_h(4)}));
  WordRealizer h_realizer(h_spec);
  const SampledOperators h_ops =
      build_sampled_operators(h_realizer, ones, std::vector<WordExp>{{0}, {1}, {2}});
  const KernelVerdict v = kernel_consistency(h_ops);
  CHECK_FALSE(v.consistent);
  CHECK(v.null_dim_eval == 1);
  CHECK(v.null_dim_deriv == 1);
  CHECK(v.min_principal_cosine < 1.0 - 1e-4);
  CHECK(v.witness_side == "derivative");
  REQUIRE(v.witness.size() == 3);
  CHECK(std::abs(v.witness(0) - Cplx(8.0, 0.0)) < 1e-9);
  CHECK(std::abs(v.witness(1) - Cplx(-6.0, 0.0)) < 1e-9);
  CHECK(std::abs(v.witness(2) - Cplx(1.0, 0.0)) < 1e-9);
  CHECK(std::abs(v.witness_image(0)) < 1e-9);
  CHECK(std::abs(v.witness_image(1) - Cplx(2.0, 0.0)) < 1e-9);
  CHECK(v.witness_image_norm == doctest::Approx(2.0).epsilon(1e-9));

  // Identity-only group on C^1: both kernels trivial.
  const GroupSpec tiny = normalize_fixed_point(make_group(1, 2, {JetMap::identity(1, 2)}));
  WordRealizer tiny_realizer(tiny);
  const KernelVerdict trivial = kernel_consistency(
      build_sampled_operators(tiny_realizer, c1(0.7), std::vector<WordExp>{{0}}));
  CHECK(trivial.consistent);
  CHECK(trivial.null_dim_eval == 0);
  CHECK(trivial.null_dim_deriv == 0);

  // Fewer sampled words than the dimension is a contract violation.
  const GroupSpec id2 = normalize_fixed_point(make_group(2, 2, {JetMap::identity(2, 2)}));
  WordRealizer id2_realizer(id2);
  const SampledOperators thin =
      build_sampled_operators(id2_realizer, ones, std::vector<WordExp>{{0}});
  CHECK_THROWS_AS(kernel_consistency(thin), Error);
}

TEST_CASE("dominance report: diagonal dominant, resonant and scalar not") {
  const CVec ones = c2(1.0, 1.0);

  const GroupSpec diag_spec = normalize_fixed_point(make_group(2, 4, {diag_jet(2.0, 3.0)}));
  WordRealizer diag_realizer(diag_spec);
  const DominanceReport dom = dominance_report(diag_realizer, ones, 6);
  CHECK(dom.r == 2);
  CHECK(dom.r_tilde == 2);
  CHECK(dom.kernels.consistent);
  CHECK(dom.dominant);
  CHECK(dom.budget == 6);
  CHECK(dom.word_count == 13);

  // Scalar multiples of the identity: every orbit vector is collinear.
  const GroupSpec scalar_spec = normalize_fixed_point(make_group(2, 4, {diag_jet(2.0, 2.0)}));
  WordRealizer scalar_realizer(scalar_spec);
  const DominanceReport scalar = dominance_report(scalar_realizer, ones, 4);
  CHECK(scalar.r == 1);
  CHECK(scalar.r_tilde == 1);
  CHECK(scalar.kernels.consistent);  // the two kernels agree; rank is what fails
  CHECK_FALSE(scalar.dominant);

  // The resonant map has full rank but inconsistent kernels.
  const GroupSpec h_spec = normalize_fixed_point(make_group(2, 4, {make_h(4)}));
  WordRealizer h_realizer(h_spec);
  for (int budget = 2; budget <= 4; ++budget) {
    const DominanceReport res = dominance_report(h_realizer, ones, budget);
    CHECK(res.r == 2);
    CHECK(res.r_tilde == 2);
    CHECK_FALSE(res.kernels.consistent);
    CHECK_FALSE(res.dominant);
  }

  // At the origin every word evaluates to 0.
  const DominanceReport at_zero = dominance_report(h_realizer, CVec::Zero(2), 2);
  CHECK(at_zero.r == 0);
  CHECK_FALSE(at_zero.dominant);

  // The sampled rank is orbit-invariant: move the base point by a word.
  const CVec moved = diag_realizer.realize({2}).evaluate(ones);
  const DominanceReport dom_moved = dominance_report(diag_realizer, moved, 6);
  CHECK(dom_moved.r == dom.r);
  CHECK(dom_moved.r_tilde == dom.r_tilde);
}

TEST_CASE("dominance report: planted linear groups, in and out of the good set") {
  Rng rng(7101);
  const fixtures::PlantedGroup pg = fixtures::plant_abelian_group({2, 1}, 2, rng);
  std::vector<JetMap> gens;
  for (const CMat& A : pg.conjugated) gens.push_back(JetMap::linear(A, 3));
  const GroupSpec spec = normalize_fixed_point(make_group(3, 3, gens));
  WordRealizer realizer(spec);

  // Block-leading coordinates nonzero: the good stratum, where the planted
  // group is dominant.
  CVec u_good(3);
  u_good << Cplx(1.0, 0.0), Cplx(0.3, 0.1), Cplx(1.0, -0.2);
  const DominanceReport good = dominance_report(realizer, CVec(pg.Q * u_good), 2);
  CHECK(good.r == 3);
  CHECK(good.r_tilde == 3);
  CHECK(good.kernels.consistent);
  CHECK(good.dominant);

  // First block-leading coordinate zero: the orbit stays inside an invariant
  // plane, the evaluation kernel grows past the derivative kernel.
  CVec u_flat(3);
  u_flat << Cplx(0.0, 0.0), Cplx(0.7, 0.0), Cplx(1.0, 0.0);
  const DominanceReport flat = dominance_report(realizer, CVec(pg.Q * u_flat), 2);
  CHECK(flat.r < 3);
  CHECK_FALSE(flat.kernels.consistent);
  CHECK(flat.kernels.null_dim_eval > flat.kernels.null_dim_deriv);
  CHECK_FALSE(flat.dominant);
}

TEST_CASE("dominance report: a nonlinear conjugate of a linear group is seen through") {
  // f = phi^-1 . L . phi with phi tangent to the identity but nonlinear: the
  // derivative words are exactly the powers of L, so the derivative kernel
  // keeps every Vandermonde relation, while the curved orbit breaks them.
  Rng rng(515);
  const fixtures::CommutingPair pair = fixtures::conjugated_diag_pair(2, 5, rng);
  const GroupSpec spec = normalize_fixed_point(make_group(2, 5, {pair.f, pair.g}));
  WordRealizer realizer(spec);
  const CVec x = c2(Cplx(0.31, 0.12), Cplx(-0.22, 0.05));
  const DominanceReport rep = dominance_report(realizer, x, 2);
  CHECK(rep.r == 2);
  CHECK(rep.r_tilde == 2);
  CHECK_FALSE(rep.kernels.consistent);
  CHECK(rep.kernels.witness_image_norm > 1e-6);
  CHECK_FALSE(rep.dominant);
}
