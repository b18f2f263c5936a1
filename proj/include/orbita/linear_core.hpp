#pragma once

#include <optional>
#include <vector>

#include "orbita/errors.hpp"
#include "orbita/types.hpp"

namespace orbita {

// Numerical rank decision with the singular values bracketing the cut, so a
// caller can audit how decisive the verdict was.
struct RankResult {
  int rank = 0;
  double sigma_max = 0.0;
  double sigma_accepted = 0.0;  // smallest singular value counted into the rank
  double sigma_rejected = 0.0;  // largest singular value below the cut (0 if none)
};

// Rank of the column space of `cols` at relative tolerance rel_tol.
RankResult numerical_rank(const CMat& cols, double rel_tol = 1e-9);

// Hermitian Gram determinant det[<v_i, v_j>] with <u,v> = sum u_k conj(v_k).
// Requires no more vectors than the ambient dimension.
Cplx gram_determinant(const CMat& cols);

// Simultaneous block-triangular normal form of a commuting family: a basis P
// such that every P^-1 A P is block diagonal with lower-triangular blocks,
// each block carrying a single eigenvalue per generator. Blocks are sorted
// lexicographically by their per-generator eigenvalue tuples.
struct BlockStructure {
  std::vector<int> eta;          // block sizes, in stored order
  std::vector<int> block_start;  // column offset of each block in P
  CMat P;                        // change of basis
  CMat P_inv;
  CMat eigenvalues;              // (generator) x (block) eigenvalue table
  double max_offpattern_residual = 0.0;  // max |offending entry| / ||A||, over generators
  double commutation_defect = 0.0;       // max relative pairwise commutator norm
};

BlockStructure simultaneous_block_triangularize(const std::vector<CMat>& generators,
                                                double tol_eig_rel = 1e-8,
                                                double tol_comm = 1e-10,
                                                double tol_pattern_rel = 1e-8);

// Canonical distinguished vectors: u0_tilde has a 1 in each block-leading
// coordinate (normal coordinates), v0 = P u0_tilde is the same point upstairs.
struct CanonicalVectors {
  CVec u0_tilde;
  CVec v0;
};

CanonicalVectors canonical_u0(const BlockStructure& bs);

// Stratum verdict in normal coordinates: IN_V when every block-leading
// coordinate is nonzero, IN_H(k) (1-indexed, smallest k) otherwise.
struct StratumVerdict {
  bool in_V = false;
  int h_block = -1;          // 1-indexed first vanishing block; -1 when in V
  double min_leading = 0.0;  // smallest block-leading coordinate magnitude
  CVec normal_coords;
};

StratumVerdict classify_stratum(const BlockStructure& bs, const CVec& u, double tol = 1e-9);

// Finitely generated abelian linear group with the derived span of its word
// set (an orthonormal basis of vect(L) in the vectorized inner product).
struct LinearGroupSpec {
  int n = 0;
  int budget = 0;
  std::vector<CMat> generators;
  std::vector<CMat> span_basis;           // orthonormal as vectors in C^(n^2)
  std::vector<WordExp> span_words;        // pivot words backing each basis element
};

// Default word budget: 6 for a single generator, 3 for up to three, 1 beyond.
int default_budget(int generator_count);

// Enumerates words (signed exponent tuples, |k_i| <= budget) in graded order:
// total |k| first, then lexicographic. Refuses when the count exceeds kMaxWords.
std::vector<WordExp> enumerate_words(int generator_count, int budget);

LinearGroupSpec make_linear_group(const std::vector<CMat>& generators, int budget = -1,
                                  double tol_comm = 1e-10, double span_rel_tol = 1e-10);

// Realizes the product of generator powers for one word.
CMat linear_word(const LinearGroupSpec& spec, const WordExp& word);

// Least-squares transition solve: find B in vect(L) with B u = v. Refuses
// (NotInOrbitSpan) when the residual exceeds tol * (1 + |v|).
struct TransitionSolve {
  CMat B;
  CVec coefficients;  // in the orthonormal span basis
  double residual = 0.0;
};

TransitionSolve solve_transition(const LinearGroupSpec& spec, const CVec& u, const CVec& v,
                                 double tol = 1e-8);

// Dominance of a linear group: vect(L) applied to the distinguished vector v0
// spans C^n. Optional probe cross-check against the V / H_k stratification.
struct LinearDominanceReport {
  bool dominant = false;
  RankResult rank_at_v0;
  int probes_in_V = 0;
  int probes_in_H = 0;
  int mismatches = 0;  // probes whose rank verdict contradicts their stratum
  std::vector<std::string> notes;
};

LinearDominanceReport linear_dominance(const LinearGroupSpec& spec, const BlockStructure& bs,
                                       int probes_per_stratum = 0, unsigned long long seed = 1,
                                       double rank_rel = 1e-9);

// Matrix of the evaluation map on the span: columns B_j x for the orthonormal
// span basis. Injectivity (trivial kernel) holds iff the rank equals the span
// dimension.
struct PsiSample {
  CMat matrix;  // n x span_dim
  RankResult rank;
  bool injective = false;
};

PsiSample psi_x_matrix(const LinearGroupSpec& spec, const CVec& x, double rank_rel = 1e-9);

}  // namespace orbita
