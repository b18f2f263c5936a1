#include "orbita/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "orbita/linear_core.hpp"

namespace orbita {

namespace {

std::string word_to_string(const WordExp& w) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << w[i];
  os << ")";
  return os.str();
}

// Quadratic pair scans cap out here to keep worst-case budgets tractable; the
// graded word order makes the truncation deterministic.
constexpr int kMaxPairScan = 4000;

}  // namespace

LinearizationMap build_phi_x(const SampledOperators& ops, const Tolerances& tol) {
  const DominanceReport dom = dominance_report(ops, tol);
  if (!dom.dominant) {
    std::ostringstream os;
    os << "build_phi_x: group is not dominant at the base point (r = " << dom.r
       << ", r~ = " << dom.r_tilde << ", kernels "
       << (dom.kernels.consistent ? "consistent" : "inconsistent") << ", n = " << ops.n << ")";
    throw NotDominantAtPoint(os.str());
  }

  const int n = ops.n;
  const Eigen::Index s = ops.eval_matrix.cols();
  const CMat linear_cols = linearized_orbit_columns(ops);

  // Greedy volume maximization = the pivot order of column-pivoted QR.
  Eigen::ColPivHouseholderQR<CMat> qr(ops.eval_matrix);
  const auto perm = qr.colsPermutation().indices();

  LinearizationMap map;
  map.n = n;
  map.base_point = ops.base_point;
  CMat A(n, n), B(n, n);
  std::vector<bool> is_basis(static_cast<std::size_t>(s), false);
  for (int j = 0; j < n; ++j) {
    const Eigen::Index col = perm(j);
    A.col(j) = ops.eval_matrix.col(col);
    B.col(j) = linear_cols.col(col);
    map.basis_words.push_back(ops.words[static_cast<std::size_t>(col)]);
    is_basis[static_cast<std::size_t>(col)] = true;
  }

  Eigen::JacobiSVD<CMat> svd_A(A);
  const double a_max = svd_A.singularValues()(0);
  const double a_min = svd_A.singularValues()(n - 1);
  if (a_max <= 0.0 || a_min <= tol.inv * a_max)
    throw NotDominantAtPoint("build_phi_x: chosen basis evaluation matrix is singular");
  map.basis_condition = a_max / a_min;

  map.M = B * A.partialPivLu().inverse();

  Eigen::JacobiSVD<CMat> svd_M(map.M);
  map.sigma_min_M = svd_M.singularValues()(n - 1);
  if (map.sigma_min_M <= tol.inv * svd_M.singularValues()(0))
    throw IllDefinedLinearization("build_phi_x: assembled map is singular", map.sigma_min_M);

  map.basis_residual = (map.M * A - B).cwiseAbs().maxCoeff();

  for (Eigen::Index j = 0; j < s; ++j) {
    if (is_basis[static_cast<std::size_t>(j)]) continue;
    const CVec lhs = map.M * ops.eval_matrix.col(j);
    const CVec rhs = linear_cols.col(j);
    const double abs_err = (lhs - rhs).norm();
    const double rel_err = abs_err / (1.0 + rhs.norm());
    map.max_abs_residual = std::max(map.max_abs_residual, abs_err);
    if (rel_err > map.well_definedness_residual) {
      map.well_definedness_residual = rel_err;
      map.worst_word = ops.words[static_cast<std::size_t>(j)];
    }
  }

  if (map.well_definedness_residual > tol.residual) {
    std::ostringstream os;
    os << "build_phi_x: held-out word " << word_to_string(map.worst_word)
       << " has relative residual " << map.well_definedness_residual << " > " << tol.residual
       << " (the evaluation and derivative kernels disagree on the sampled span)";
    throw IllDefinedLinearization(os.str(), map.well_definedness_residual);
  }
  return map;
}

BijectionReport verify_orbit_bijection(const LinearizationMap& map, const SampledOperators& ops,
                                       double dedup) {
  BijectionReport rep;
  const CMat linear_cols = linearized_orbit_columns(ops);
  for (Eigen::Index j = 0; j < ops.eval_matrix.cols(); ++j) {
    const double err = (map.M * ops.eval_matrix.col(j) - linear_cols.col(j)).norm();
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_word = ops.words[static_cast<std::size_t>(j)];
    }
  }

  // Distinct orbit points must map to distinct linear-orbit points. The scan
  // dedups the source cloud first so repeated words do not count as collisions.
  std::vector<Eigen::Index> distinct;
  const Eigen::Index scan = std::min<Eigen::Index>(ops.eval_matrix.cols(), kMaxPairScan);
  for (Eigen::Index j = 0; j < scan; ++j) {
    bool fresh = true;
    for (const Eigen::Index i : distinct)
      if ((ops.eval_matrix.col(j) - ops.eval_matrix.col(i)).norm() <= dedup) {
        fresh = false;
        break;
      }
    if (fresh) distinct.push_back(j);
  }
  if (scan < ops.eval_matrix.cols())
    rep.note = "pair scan truncated to the first " + std::to_string(kMaxPairScan) + " words";
  rep.distinct_points = static_cast<int>(distinct.size());

  rep.min_source_separation = std::numeric_limits<double>::infinity();
  rep.min_image_separation = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < distinct.size(); ++a)
    for (std::size_t b = a + 1; b < distinct.size(); ++b) {
      const CVec diff = ops.eval_matrix.col(distinct[a]) - ops.eval_matrix.col(distinct[b]);
      rep.min_source_separation = std::min(rep.min_source_separation, diff.norm());
      rep.min_image_separation = std::min(rep.min_image_separation, (map.M * diff).norm());
    }
  if (distinct.size() < 2) {
    rep.min_source_separation = 0.0;
    rep.min_image_separation = 0.0;
    return rep;
  }
  // A linear map shrinks separations by at most sigma_min; flag anything that
  // fell below half that bound (a genuine collision, not round-off).
  rep.injective_on_sample =
      rep.min_image_separation > 0.5 * map.sigma_min_M * rep.min_source_separation;
  return rep;
}

PushforwardReport pushforward_orbit_check(const LinearizationMap& map, WordRealizer& realizer,
                                          const CVec& y, int budget) {
  const SampledOperators ops = build_sampled_operators(realizer, y, budget);
  PushforwardReport rep;
  rep.y = y;
  rep.z = map.M * y;
  const int n = ops.n;
  for (Eigen::Index j = 0; j < ops.eval_matrix.cols(); ++j) {
    const Eigen::Map<const CMat> J(ops.derivative_matrix.col(j).data(), n, n);
    const double err = (map.M * ops.eval_matrix.col(j) - J * rep.z).norm();
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_word = ops.words[static_cast<std::size_t>(j)];
    }
  }
  return rep;
}

ClosureCompatReport closure_compatibility_check(const LinearizationMap& map,
                                                const SampledOperators& ops,
                                                const std::vector<CVec>& candidates, double eps,
                                                double tol) {
  ClosureCompatReport rep;
  rep.eps = eps;
  Eigen::JacobiSVD<CMat> svd(map.M);
  const double M_norm = svd.singularValues()(0);
  rep.eps_mapped = M_norm * eps + tol;

  const CMat mapped_cloud = map.M * ops.eval_matrix;
  for (const CVec& y : candidates) {
    ++rep.checked;
    double d_cloud = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < ops.eval_matrix.cols(); ++j)
      d_cloud = std::min(d_cloud, (y - ops.eval_matrix.col(j)).norm());
    if (d_cloud > eps) {
      ++rep.out_of_scope;
      continue;
    }
    ++rep.in_scope;
    const CVec z = map.M * y;
    double d_mapped = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < mapped_cloud.cols(); ++j)
      d_mapped = std::min(d_mapped, (z - mapped_cloud.col(j)).norm());
    rep.max_mapped_distance = std::max(rep.max_mapped_distance, d_mapped);
    if (d_mapped > rep.eps_mapped) ++rep.violations;
  }
  return rep;
}

namespace {

bool is_affine(const JetMap& f) {
  for (int i = 0; i < f.dim(); ++i)
    for (const auto& [alpha, c] : f.component(i))
      if (total_degree(alpha) > 1) return false;
  return true;
}

// Applies one affine generator (or its inverse) exactly: x -> Ax + b, or the
// reverse solve for negative powers.
CVec apply_affine(const CMat& A, const CVec& b, const Eigen::PartialPivLU<CMat>& lu, int k,
                  CVec x) {
  for (int t = 0; t < k; ++t) x = A * x + b;
  for (int t = 0; t > k; --t) x = lu.solve(x - b);
  return x;
}

}  // namespace

AffineBaselineReport affine_baseline_check(const GroupSpec& affine_spec, int budget,
                                           unsigned long long seed) {
  const int n = affine_spec.n;
  const int m = static_cast<int>(affine_spec.generators.size());
  for (int i = 0; i < m; ++i)
    if (!is_affine(affine_spec.generators[i]))
      throw Error("affine_baseline_check: generator " + std::to_string(i) +
                  " carries terms of degree > 1");

  const GroupSpec normalized = normalize_fixed_point(affine_spec);
  AffineBaselineReport rep;
  rep.fixed_point = normalized.origin_shift;

  if (budget < 0) budget = default_budget(m);
  const std::vector<WordExp> words = enumerate_words(m, budget);
  WordRealizer realizer(normalized);

  // Original generators as exact affine data.
  std::vector<CMat> A(m);
  std::vector<CVec> b(m);
  std::vector<Eigen::PartialPivLU<CMat>> lu;
  lu.reserve(m);
  const Multi zero(n, 0);
  for (int i = 0; i < m; ++i) {
    A[i] = affine_spec.generators[i].jacobian_at_zero();
    b[i] = CVec(n);
    for (int c = 0; c < n; ++c) b[i](c) = affine_spec.generators[i].coeff(c, zero);
    lu.emplace_back(A[i]);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto random_point = [&]() {
    CVec x(n);
    for (int c = 0; c < n; ++c) x(c) = Cplx(unif(rng), unif(rng));
    return x;
  };

  const CVec& p = rep.fixed_point;
  for (int t = 0; t < 10; ++t) {
    const CVec x = random_point();
    for (const WordExp& w : words) {
      // The original affine action, applied exactly.
      CVec orig = x;
      for (int i = 0; i < m; ++i) orig = apply_affine(A[i], b[i], lu[i], w[i], orig);
      // The same word through the normalized linear group, conjugated back.
      const CVec via_linear = realizer.realize(w).evaluate(CVec(x - p)) + p;
      rep.max_pointwise_error = std::max(rep.max_pointwise_error, (orig - via_linear).norm());
    }
  }

  // The orbit isomorphism of the normalized group is the identity. Dominant
  // base points are generic; probe a few seeded ones.
  for (int t = 0; t < 10 && !rep.found_dominant_point; ++t) {
    const CVec x = random_point();
    try {
      const SampledOperators ops = build_sampled_operators(realizer, x, budget);
      const LinearizationMap map = build_phi_x(ops, normalized.tol);
      rep.found_dominant_point = true;
      rep.probe_used = x;
      rep.phi_x_identity_error = (map.M - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
    } catch (const NotDominantAtPoint&) {
      continue;
    }
  }

  rep.pass = rep.found_dominant_point && rep.max_pointwise_error <= 1e-10 &&
             rep.phi_x_identity_error <= 1e-10;
  return rep;
}

}  // namespace orbita
