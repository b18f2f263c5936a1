#include "orbita/group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace orbita {

namespace {

// Jacobian of a truncated polynomial map at an arbitrary point.
CMat jacobian_at(const JetMap& f, const CVec& p) {
  const int n = f.dim();
  std::vector<std::vector<Cplx>> pw(n, std::vector<Cplx>(f.degree() + 1, Cplx(1.0, 0.0)));
  for (int i = 0; i < n; ++i)
    for (int k = 1; k <= f.degree(); ++k) pw[i][k] = pw[i][k - 1] * p(i);

  CMat J = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [alpha, c] : f.component(i)) {
      for (int j = 0; j < n; ++j) {
        if (!alpha[j]) continue;
        Cplx mono = c * static_cast<double>(alpha[j]) * pw[j][alpha[j] - 1];
        for (int l = 0; l < n; ++l)
          if (l != j && alpha[l]) mono *= pw[l][alpha[l]];
        J(i, j) += mono;
      }
    }
  }
  return J;
}

CVec constant_term(const JetMap& f) {
  const Multi zero(f.dim(), 0);
  CVec c(f.dim());
  for (int i = 0; i < f.dim(); ++i) c(i) = f.coeff(i, zero);
  return c;
}

// Residual of the fixed-point equations g_i(p) - p, stacked over generators.
CVec stacked_residual(const std::vector<JetMap>& gens, const CVec& p) {
  const int n = static_cast<int>(p.size());
  CVec F(static_cast<Eigen::Index>(gens.size()) * n);
  for (std::size_t i = 0; i < gens.size(); ++i)
    F.segment(static_cast<Eigen::Index>(i) * n, n) = gens[i].evaluate(p) - p;
  return F;
}

// Damped Gauss-Newton on the stacked fixed-point equations, started at 0.
CVec detect_fixed_point(const std::vector<JetMap>& gens, int n) {
  CVec p = CVec::Zero(n);
  CVec F = stacked_residual(gens, p);
  const int kMaxSteps = 50;
  for (int step = 0; step < kMaxSteps && F.norm() > 1e-13; ++step) {
    CMat J(F.size(), n);
    for (std::size_t i = 0; i < gens.size(); ++i)
      J.middleRows(static_cast<Eigen::Index>(i) * n, n) =
          jacobian_at(gens[i], p) - CMat::Identity(n, n);
    const CVec delta = J.completeOrthogonalDecomposition().solve(F);
    if (!delta.allFinite()) break;
    double lambda = 1.0;
    CVec p_next = p - delta;
    CVec F_next = stacked_residual(gens, p_next);
    while (lambda > 1.0 / 64.0 && F_next.norm() >= F.norm()) {
      lambda *= 0.5;
      p_next = p - lambda * delta;
      F_next = stacked_residual(gens, p_next);
    }
    if (F_next.norm() >= F.norm()) break;  // stalled; report what we reached
    p = p_next;
    F = F_next;
  }
  return p;
}

// T_{-p} o f o T_{p}: the map x -> f(x + p) - p.
JetMap conjugate_by_translation(const JetMap& f, const CVec& p) {
  const JetMap to_p = JetMap::translation(p, f.degree());
  const JetMap from_p = JetMap::translation(-p, f.degree());
  return compose(from_p, compose(f, to_p));
}

void check_linear_part_invertible(const JetMap& f, double tol_inv, int index) {
  const CMat A = f.jacobian_at_zero();
  Eigen::JacobiSVD<CMat> svd(A);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(A.rows() - 1);
  if (smax <= 0.0 || smin <= tol_inv * smax)
    throw NotAnAutomorphismGerm("make_group: generator " + std::to_string(index) +
                                " has singular linear part (sigma_min/sigma_max = " +
                                std::to_string(smax > 0 ? smin / smax : 0.0) + ")");
}

int infer_budget(const std::vector<WordExp>& words) {
  int K = 0;
  for (const WordExp& w : words)
    for (int k : w) K = std::max(K, std::abs(k));
  return K;
}

// Orthonormal basis of the null space of M at a relative singular value cut.
CMat null_space_basis(const CMat& M, double rel_tol) {
  Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeFullV);
  const Eigen::Index kmin = std::min(M.rows(), M.cols());
  const double smax = kmin > 0 ? svd.singularValues()(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < kmin; ++i)
    if (svd.singularValues()(i) > rel_tol * smax && svd.singularValues()(i) > 0.0) ++rank;
  return svd.matrixV().rightCols(M.cols() - rank);
}

// Best inconsistency witness on one side: the combination of null-space basis
// columns of one operator that the other operator maps farthest from zero.
struct SideWitness {
  CVec alpha;
  double image_norm = 0.0;
};

SideWitness best_witness(const CMat& null_basis, const CMat& other_op) {
  SideWitness w;
  if (null_basis.cols() == 0) return w;
  const CMat C = other_op * null_basis;
  Eigen::JacobiSVD<CMat> svd(C, Eigen::ComputeFullV);
  w.alpha = null_basis * svd.matrixV().col(0);
  w.image_norm = svd.singularValues()(0);
  return w;
}

// Scales the witness so its highest-order word coefficient (last significant
// entry in the graded word order) equals 1 — a canonical, reproducible form.
void make_monic_in_top_word(CVec& alpha) {
  const double amax = alpha.cwiseAbs().maxCoeff();
  if (amax <= 0.0) return;
  for (Eigen::Index j = alpha.size() - 1; j >= 0; --j) {
    if (std::abs(alpha(j)) > 1e-8 * amax) {
      alpha /= alpha(j);
      return;
    }
  }
}

}  // namespace

GroupSpec make_group(int n, int degree, std::vector<JetMap> generators,
                     std::vector<JetMap> inverses, std::optional<CVec> fixed_point,
                     const Tolerances& tol) {
  if (n < 1 || n > kMaxDim)
    throw Error("make_group: dimension " + std::to_string(n) + " outside supported range 1.." +
                std::to_string(kMaxDim));
  if (degree < 1) throw Error("make_group: truncation degree must be >= 1");
  if (generators.empty()) throw Error("make_group: at least one generator required");
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].dim() != n || generators[i].degree() != degree)
      throw Error("make_group: generator " + std::to_string(i) + " has shape (" +
                  std::to_string(generators[i].dim()) + ", degree " +
                  std::to_string(generators[i].degree()) + "), expected (" + std::to_string(n) +
                  ", degree " + std::to_string(degree) + ")");
    check_linear_part_invertible(generators[i], tol.inv, static_cast<int>(i));
  }
  if (!inverses.empty()) {
    if (inverses.size() != generators.size())
      throw Error("make_group: inverse count " + std::to_string(inverses.size()) +
                  " does not match generator count " + std::to_string(generators.size()));
    for (std::size_t i = 0; i < inverses.size(); ++i) {
      if (inverses[i].dim() != n || inverses[i].degree() != degree)
        throw Error("make_group: inverse " + std::to_string(i) + " has mismatched shape");
      const double round_trip =
          max_coeff_distance(compose(generators[i], inverses[i]), JetMap::identity(n, degree));
      if (round_trip > 1e-8)
        throw Error("make_group: declared inverse " + std::to_string(i) +
                    " fails the round-trip test (residual " + std::to_string(round_trip) + ")");
    }
  }
  for (std::size_t i = 0; i < generators.size(); ++i)
    for (std::size_t j = i + 1; j < generators.size(); ++j) {
      const double defect = commutator_defect(generators[i], generators[j]);
      if (defect > tol.comm)
        throw NotAbelian("make_group: generators " + std::to_string(i) + " and " +
                             std::to_string(j) + " have commutator defect " +
                             std::to_string(defect),
                         static_cast<int>(i), static_cast<int>(j), defect);
    }
  if (fixed_point) {
    if (fixed_point->size() != n) throw Error("make_group: fixed point has wrong dimension");
    std::vector<double> residuals;
    bool bad = false;
    for (const JetMap& g : generators) {
      residuals.push_back((g.evaluate(*fixed_point) - *fixed_point).norm());
      bad = bad || residuals.back() > tol.fixed_point;
    }
    if (bad)
      throw NoCommonFixedPoint("make_group: declared fixed point is not fixed by every generator",
                               residuals);
  }

  GroupSpec spec;
  spec.n = n;
  spec.degree = degree;
  spec.generators = std::move(generators);
  spec.inverses = std::move(inverses);
  spec.fixed_point = std::move(fixed_point);
  spec.tol = tol;
  spec.normalized = false;
  return spec;
}

GroupSpec normalize_fixed_point(const GroupSpec& spec) {
  GroupSpec out = spec;
  out.normalized = true;

  bool has_constants = false;
  for (const JetMap& g : spec.generators) has_constants = has_constants || g.has_constant_term();
  const bool p_declared_nonzero = spec.fixed_point && spec.fixed_point->norm() > 0.0;

  if (!has_constants && !p_declared_nonzero) {
    // Already anchored at the origin; scrub sub-epsilon constants if any.
    for (JetMap& g : out.generators) g.drop_constant_term(1e-12);
    for (JetMap& g : out.inverses) g.drop_constant_term(1e-12);
    out.fixed_point = CVec::Zero(spec.n);
    out.origin_shift = CVec::Zero(spec.n);
    return out;
  }

  const CVec p = spec.fixed_point ? *spec.fixed_point : detect_fixed_point(spec.generators, spec.n);

  std::vector<double> residuals;
  double max_residual = 0.0;
  for (const JetMap& g : spec.generators) {
    residuals.push_back((g.evaluate(p) - p).norm());
    max_residual = std::max(max_residual, residuals.back());
  }
  if (max_residual > spec.tol.fixed_point) {
    std::ostringstream os;
    os << "normalize_fixed_point: no common fixed point within " << spec.tol.fixed_point
       << " (worst residual " << max_residual << " at candidate p)";
    throw NoCommonFixedPoint(os.str(), residuals);
  }

  // Conjugating moves the certified residual into the constant term, so the
  // strip threshold must cover it (sqrt(n) slack for the per-component bound).
  const double strip = 2.0 * std::sqrt(static_cast<double>(spec.n)) * max_residual + 1e-12;
  for (std::size_t i = 0; i < out.generators.size(); ++i) {
    out.generators[i] = conjugate_by_translation(spec.generators[i], p);
    out.generators[i].drop_constant_term(strip);
  }
  for (std::size_t i = 0; i < out.inverses.size(); ++i) {
    out.inverses[i] = conjugate_by_translation(spec.inverses[i], p);
    // The inverse's own fixed-point residual is amplified by its stretch.
    const double inv_norm = out.inverses[i].jacobian_at_zero().norm();
    out.inverses[i].drop_constant_term(strip * (1.0 + inv_norm));
  }
  out.fixed_point = CVec::Zero(spec.n);
  out.origin_shift = p;
  return out;
}

WordRealizer::WordRealizer(const GroupSpec& spec)
    : spec_(spec),
      inverses_(spec.generators.size()),
      inverse_ready_(spec.generators.size(), false),
      power_memo_(spec.generators.size()) {
  if (!spec.normalized)
    throw Error("WordRealizer: spec must be normalized (fixed point at the origin) first");
  if (!spec.inverses.empty()) {
    inverses_ = spec.inverses;
    std::fill(inverse_ready_.begin(), inverse_ready_.end(), true);
  }
}

const JetMap& WordRealizer::generator_inverse(int i) {
  if (!inverse_ready_[i]) {
    inverses_[i] = formal_inverse(spec_.generators[i], spec_.tol.inv);
    inverse_ready_[i] = true;
  }
  return inverses_[i];
}

const JetMap& WordRealizer::generator_power(int i, int k) {
  auto it = power_memo_[i].find(k);
  if (it != power_memo_[i].end()) return it->second;

  JetMap result = JetMap::identity(spec_.n, spec_.degree);
  if (k == 1) {
    result = spec_.generators[i];
  } else if (k == -1) {
    result = generator_inverse(i);
  } else if (k != 0) {
    // Repeated squaring on |k|, with the generator or its inverse as base.
    const int half = k / 2;
    const JetMap& h = generator_power(i, half);
    result = compose(h, h);
    if (k % 2 != 0) result = compose(result, generator_power(i, k - 2 * half));
  }
  return power_memo_[i].emplace(k, std::move(result)).first->second;
}

const JetMap& WordRealizer::realize(const WordExp& word) {
  if (word.size() != spec_.generators.size())
    throw Error("realize: word length " + std::to_string(word.size()) +
                " does not match generator count " + std::to_string(spec_.generators.size()));
  auto it = word_memo_.find(word);
  if (it != word_memo_.end()) return it->second;

  JetMap result = JetMap::identity(spec_.n, spec_.degree);
  for (std::size_t i = 0; i < word.size(); ++i)
    if (word[i] != 0) result = compose(result, generator_power(static_cast<int>(i), word[i]));
  return word_memo_.emplace(word, std::move(result)).first->second;
}

SampledOperators build_sampled_operators(WordRealizer& realizer, const CVec& x, int budget) {
  const int m = static_cast<int>(realizer.spec().generators.size());
  return build_sampled_operators(realizer, x, enumerate_words(m, budget));
}

SampledOperators build_sampled_operators(WordRealizer& realizer, const CVec& x,
                                         const std::vector<WordExp>& words) {
  const GroupSpec& spec = realizer.spec();
  const int n = spec.n;
  if (x.size() != n) throw Error("build_sampled_operators: base point has wrong dimension");
  if (words.empty()) throw Error("build_sampled_operators: empty word list");
  if (words.size() > kMaxWords)
    throw BudgetExceeded("build_sampled_operators: " + std::to_string(words.size()) +
                             " words exceed the sampling cap " + std::to_string(kMaxWords),
                         words.size());

  // Realization mutates the memo table, so it stays serial; the pure part
  // (evaluation and Jacobian extraction) is spread over threads.
  std::vector<const JetMap*> jets(words.size());
  for (std::size_t j = 0; j < words.size(); ++j) jets[j] = &realizer.realize(words[j]);

  SampledOperators ops;
  ops.base_point = x;
  ops.n = n;
  ops.words = words;
  ops.eval_matrix.resize(n, static_cast<Eigen::Index>(words.size()));
  ops.derivative_matrix.resize(static_cast<Eigen::Index>(n) * n,
                               static_cast<Eigen::Index>(words.size()));

  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(words.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t j = 0; j < s; ++j) {
    ops.eval_matrix.col(j) = jets[j]->evaluate(x);
    const CMat J = jets[j]->jacobian_at_zero();
    ops.derivative_matrix.col(j) = Eigen::Map<const CVec>(J.data(), J.size());
  }
  return ops;
}

CMat linearized_orbit_columns(const SampledOperators& ops) {
  return linearized_orbit_columns(ops, ops.base_point);
}

CMat linearized_orbit_columns(const SampledOperators& ops, const CVec& at) {
  const int n = ops.n;
  CMat cols(n, ops.derivative_matrix.cols());
  for (Eigen::Index j = 0; j < ops.derivative_matrix.cols(); ++j) {
    const Eigen::Map<const CMat> J(ops.derivative_matrix.col(j).data(), n, n);
    cols.col(j) = J * at;
  }
  return cols;
}

std::vector<CMat> generator_jacobians(const GroupSpec& spec) {
  std::vector<CMat> out;
  out.reserve(spec.generators.size());
  for (const JetMap& g : spec.generators) out.push_back(g.jacobian_at_zero());
  return out;
}

KernelVerdict kernel_consistency(const SampledOperators& ops, double kernel_rel,
                                 double angle_tol) {
  if (ops.eval_matrix.cols() < ops.n)
    throw Error("kernel_consistency: need at least n = " + std::to_string(ops.n) +
                " sampled words, got " + std::to_string(ops.eval_matrix.cols()));

  const CMat N_eval = null_space_basis(ops.eval_matrix, kernel_rel);
  const CMat N_deriv = null_space_basis(ops.derivative_matrix, kernel_rel);

  KernelVerdict v;
  v.null_dim_eval = static_cast<int>(N_eval.cols());
  v.null_dim_deriv = static_cast<int>(N_deriv.cols());

  bool aligned = (v.null_dim_eval == v.null_dim_deriv);
  if (aligned && v.null_dim_eval > 0) {
    Eigen::JacobiSVD<CMat> svd(N_eval.adjoint() * N_deriv);
    v.min_principal_cosine = svd.singularValues()(svd.singularValues().size() - 1);
    aligned = (1.0 - v.min_principal_cosine) <= angle_tol;
  }
  v.consistent = aligned;
  if (v.consistent) return v;

  // Witness: coefficients annihilated by one operator but visible to the
  // other. Both directions are tried; the louder image wins.
  const SideWitness from_deriv = best_witness(N_deriv, ops.eval_matrix);
  const SideWitness from_eval = best_witness(N_eval, ops.derivative_matrix);
  const bool deriv_side = from_deriv.image_norm >= from_eval.image_norm;
  v.witness_side = deriv_side ? "derivative" : "evaluation";
  v.witness = deriv_side ? from_deriv.alpha : from_eval.alpha;
  if (v.witness.size() > 0) {
    make_monic_in_top_word(v.witness);
    v.witness_image =
        deriv_side ? CVec(ops.eval_matrix * v.witness) : CVec(ops.derivative_matrix * v.witness);
    v.witness_image_norm = v.witness_image.norm();
  }
  return v;
}

DominanceReport dominance_report(const SampledOperators& ops, const Tolerances& tol) {
  DominanceReport rep;
  rep.n = ops.n;
  rep.budget = infer_budget(ops.words);
  rep.word_count = static_cast<int>(ops.words.size());
  rep.rank_eval = numerical_rank(ops.eval_matrix, tol.rank_rel);
  rep.rank_linear = numerical_rank(linearized_orbit_columns(ops), tol.rank_rel);
  rep.r = rep.rank_eval.rank;
  rep.r_tilde = rep.rank_linear.rank;
  rep.kernels = kernel_consistency(ops, tol.kernel_rel, tol.angle);
  rep.dominant = (rep.r == ops.n) && (rep.r_tilde == ops.n) && rep.kernels.consistent;
  return rep;
}

DominanceReport dominance_report(WordRealizer& realizer, const CVec& x, int budget,
                                 const Tolerances& tol) {
  const SampledOperators ops = build_sampled_operators(realizer, x, budget);
  DominanceReport rep = dominance_report(ops, tol);
  rep.budget = budget;
  return rep;
}

}  // namespace orbita
