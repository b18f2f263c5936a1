#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orbita/errors.hpp"
#include "orbita/jet.hpp"
#include "orbita/linear_core.hpp"
#include "orbita/types.hpp"

namespace orbita {

// Finitely generated abelian group of polynomial automorphism germs, given by
// generator jets. Generators may carry constant terms before fixed-point
// normalization (affine input); after normalize_fixed_point every generator
// fixes the origin exactly.
struct GroupSpec {
  int n = 0;
  int degree = 0;
  std::vector<JetMap> generators;
  // Explicit inverses, one per generator, or empty (inverses computed on
  // demand by formal inversion).
  std::vector<JetMap> inverses;
  // Declared common fixed point; unset means "0 if the generators already fix
  // it, otherwise detect one".
  std::optional<CVec> fixed_point;
  Tolerances tol;
  bool normalized = false;  // set once generators fix 0 with no constant terms
  // The common fixed point that normalization moved to the origin (zero when
  // the spec was already anchored there); empty until normalized.
  CVec origin_shift;
};

// Validates and packages a group: matching shapes, invertible linear parts,
// pairwise commutator defect within tol.comm, declared fixed point actually
// fixed by every generator.
GroupSpec make_group(int n, int degree, std::vector<JetMap> generators,
                     std::vector<JetMap> inverses = {},
                     std::optional<CVec> fixed_point = std::nullopt,
                     const Tolerances& tol = {});

// Finds the common fixed point p (declared, or detected by a damped Newton
// iteration from 0 on the stacked fixed-point equations), conjugates every
// generator by the translation taking p to 0, and strips the now-vanishing
// constant terms. Returns a spec with fixed_point = 0 and normalized = true.
// Throws NoCommonFixedPoint (with per-generator residuals) when no point
// fixes all generators within tol.fixed_point.
GroupSpec normalize_fixed_point(const GroupSpec& spec);

// Memoized realization of words as jets. A word is a signed exponent per
// generator; the realized jet is g_1^{k_1} o ... o g_m^{k_m}. Per-generator
// powers are built by repeated squaring (negative exponents through the
// inverse jet), and full words are cached by exponent tuple.
class WordRealizer {
 public:
  explicit WordRealizer(const GroupSpec& spec);

  const GroupSpec& spec() const { return spec_; }
  const JetMap& realize(const WordExp& word);
  // The inverse jet of one generator (explicit if supplied, formal otherwise).
  const JetMap& generator_inverse(int i);

 private:
  const JetMap& generator_power(int i, int k);

  GroupSpec spec_;
  std::vector<JetMap> inverses_;
  std::vector<bool> inverse_ready_;
  std::vector<std::map<int, JetMap>> power_memo_;  // per generator: k -> jet
  std::map<WordExp, JetMap> word_memo_;
};

// Finite sample of the evaluation and derivative functionals over a word set:
// column j of eval_matrix is w_j(x) (n x s), column j of derivative_matrix is
// the vectorized Jacobian of w_j at 0 (n^2 x s).
struct SampledOperators {
  CVec base_point;
  int n = 0;
  std::vector<WordExp> words;
  CMat eval_matrix;
  CMat derivative_matrix;
};

// Samples all words with |k_i| <= budget (graded order) at x. Refuses with
// BudgetExceeded when the word count would pass kMaxWords.
SampledOperators build_sampled_operators(WordRealizer& realizer, const CVec& x, int budget);
// Same, over an explicit word list (used to pin tests to a specific span).
SampledOperators build_sampled_operators(WordRealizer& realizer, const CVec& x,
                                         const std::vector<WordExp>& words);

// Verdict of the kernel comparison between the sampled evaluation and
// derivative operators. Inconsistency is witnessed by a coefficient vector in
// one null space whose image under the other operator is far from zero; the
// witness is scaled so its highest-order word coefficient equals 1.
struct KernelVerdict {
  bool consistent = false;
  int null_dim_eval = 0;
  int null_dim_deriv = 0;
  // Smallest cosine of a principal angle between the two null spaces (1 when
  // both are trivial).
  double min_principal_cosine = 1.0;
  // Which operator's null space the witness lives in: "derivative" means
  // witness is in null(derivative_matrix) but eval_matrix * witness != 0.
  std::string witness_side;
  CVec witness;
  CVec witness_image;
  double witness_image_norm = 0.0;
};

// Compares null(eval_matrix) and null(derivative_matrix) at relative SVD cut
// kernel_rel; consistent when dimensions agree and all principal angles have
// cosine >= 1 - angle_tol. Requires at least n sampled words.
KernelVerdict kernel_consistency(const SampledOperators& ops, double kernel_rel = 1e-9,
                                 double angle_tol = 1e-7);

// Point diagnosis of dominance: r = rank of the sampled orbit vectors w(x),
// r_tilde = rank of the linearized orbit vectors D_0 w * x, and the kernel
// comparison. Dominant at x iff r = r_tilde = n and the kernels agree.
struct DominanceReport {
  int n = 0;
  int budget = 0;
  int word_count = 0;
  int r = 0;
  int r_tilde = 0;
  RankResult rank_eval;
  RankResult rank_linear;
  KernelVerdict kernels;
  bool dominant = false;
};

DominanceReport dominance_report(const SampledOperators& ops, const Tolerances& tol = {});
DominanceReport dominance_report(WordRealizer& realizer, const CVec& x, int budget,
                                 const Tolerances& tol = {});

// Columns D_0 w_j * x of the linearized orbit sample (n x s).
CMat linearized_orbit_columns(const SampledOperators& ops);
// Same word Jacobians applied to an arbitrary point instead of the base point.
CMat linearized_orbit_columns(const SampledOperators& ops, const CVec& at);

// Jacobians of the generators (the linear group alongside the jets).
std::vector<CMat> generator_jacobians(const GroupSpec& spec);

}  // namespace orbita
