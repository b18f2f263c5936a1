#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace orbita {

using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

// Exponent multi-index of a monomial, one entry per variable.
using Multi = std::vector<int>;

// Word in the generators: one signed exponent per generator.
using WordExp = std::vector<int>;

// Tolerance knobs shared across the pipeline. Values marked "relative" scale
// with the data (matrix norm, largest singular value); the rest are absolute.
struct Tolerances {
  double rank_rel = 1e-9;     // SVD cut for numerical rank (relative)
  double kernel_rel = 1e-9;   // SVD cut for null-space extraction (relative)
  double eig_rel = 1e-8;      // eigenvalue clustering radius (relative to norm)
  double pattern_rel = 1e-8;  // accepted off-pattern residual (relative to norm)
  double comm = 1e-10;        // abelianness: pairwise commutator bound
  double inv = 1e-12;         // invertibility: smallest/largest singular value
  double solve = 1e-8;        // transition solve residual bound
  double angle = 1e-7;        // principal angle bound as 1 - cos(theta)
  double residual = 1e-8;     // linearization well-definedness bound
  double fixed_point = 1e-8;  // common fixed point agreement
  double dedup = 1e-12;       // orbit point dedup radius
  double stratum = 1e-9;      // block-leading coordinate threshold (V vs H_k)
};

// Maximum number of sampled words per operator build; larger requests refuse.
inline constexpr std::size_t kMaxWords = 100000;

// Ambient dimension guard for the linear normal-form machinery.
inline constexpr int kMaxDim = 16;

}  // namespace orbita
