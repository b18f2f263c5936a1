#include "orbita/linear_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace orbita {

namespace {

std::string dim_string(const CMat& A) {
  return std::to_string(A.rows()) + "x" + std::to_string(A.cols());
}

double frob(const CMat& A) { return A.norm(); }

// Lexicographic order on complex numbers by (re, im); used for deterministic
// pivot selection and block ordering.
bool cplx_lex_less(Cplx a, Cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Swaps the eigenvalues at positions (i, i+1) of an upper-triangular T by a
// unitary similarity, accumulating the rotation into U.
void schur_swap(CMat& T, CMat& U, int i) {
  const Cplx a = T(i, i);
  const Cplx b = T(i + 1, i + 1);
  const Cplx c = T(i, i + 1);
  // Eigenvector of [[a, c], [0, b]] for eigenvalue b.
  const Cplx v1 = c;
  const Cplx v2 = b - a;
  const double r = std::sqrt(std::norm(v1) + std::norm(v2));
  if (r < 1e-300) return;  // equal eigenvalues: nothing to move
  CMat G(2, 2);
  G(0, 0) = v1 / r;
  G(1, 0) = v2 / r;
  G(0, 1) = -std::conj(v2) / r;
  G(1, 1) = std::conj(v1) / r;

  const int n = static_cast<int>(T.rows());
  T.block(i, 0, 2, n) = G.adjoint() * T.block(i, 0, 2, n);
  T.block(0, i, n, 2) = T.block(0, i, n, 2) * G;
  U.block(0, i, n, 2) = U.block(0, i, n, 2) * G;
  T(i + 1, i) = Cplx(0.0, 0.0);
}

// Stable reorder: bubbles the selected eigenvalues to the leading positions.
void schur_select_to_top(CMat& T, CMat& U, std::vector<char>& selected) {
  const int n = static_cast<int>(T.rows());
  int target = 0;
  for (int j = 0; j < n; ++j) {
    if (!selected[j]) continue;
    for (int k = j; k > target; --k) {
      schur_swap(T, U, k - 1);
      std::swap(selected[k - 1], selected[k]);
    }
    ++target;
  }
}

// Pivot-gather clustering of a spectrum: walk eigenvalues in (re,im)-lex
// order; each unassigned eigenvalue starts a cluster and absorbs everything
// within tau of it. Refuses when two clusters come closer than the guard.
std::vector<int> cluster_spectrum(const CVec& eigs, double tau, double guard) {
  const int k = static_cast<int>(eigs.size());
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return cplx_lex_less(eigs(a), eigs(b)); });

  std::vector<int> cluster(k, -1);
  int next_id = 0;
  for (int oi = 0; oi < k; ++oi) {
    const int i = order[oi];
    if (cluster[i] >= 0) continue;
    const Cplx pivot = eigs(i);
    const int id = next_id++;
    for (int oj = oi; oj < k; ++oj) {
      const int j = order[oj];
      if (cluster[j] < 0 && std::abs(eigs(j) - pivot) <= tau) cluster[j] = id;
    }
  }

  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      if (cluster[i] == cluster[j]) continue;
      const double gap = std::abs(eigs(i) - eigs(j));
      if (gap < guard) {
        std::ostringstream os;
        os << "cluster_spectrum: ambiguous split, eigenvalue gap " << gap
           << " is below the guard " << guard;
        throw IllConditionedSpectrum(os.str(), gap);
      }
    }
  return cluster;
}

// Unit vector with a deterministic phase: the largest-magnitude entry is made
// real positive.
void canonicalize_phase(CVec& v) {
  int imax = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double m = std::abs(v(i));
    if (m > best) {
      best = m;
      imax = i;
    }
  }
  if (best == 0.0) return;
  v *= std::conj(v(imax)) / best;
  v.normalize();
}

// Orthonormal basis of the orthogonal complement of the unit vector x inside
// C^t, via a complex Householder reflection mapping x onto e_1.
CMat householder_complement(const CVec& x) {
  const int t = static_cast<int>(x.size());
  const Cplx x0 = x(0);
  const double ax0 = std::abs(x0);
  const Cplx phase = ax0 > 0 ? x0 / ax0 : Cplx(1.0, 0.0);
  const Cplx alpha = -phase;  // |x| = 1; opposite sign avoids cancellation
  CVec u = x;
  u(0) -= alpha;
  const double un2 = u.squaredNorm();
  CMat H = CMat::Identity(t, t);
  if (un2 > 0) H -= (2.0 / un2) * (u * u.adjoint());
  return H.rightCols(t - 1);
}

// Simultaneous unitary lower-triangularization of a commuting family with a
// single eigenvalue cluster per map: peel off common eigenvectors from the
// back of the flag, quotienting as we go.
CMat common_flag(const std::vector<CMat>& maps, double tau) {
  const int s = static_cast<int>(maps.front().rows());
  CMat basis(s, s);
  CMat W = CMat::Identity(s, s);  // remaining quotient space
  int t = s;
  int next_back = s - 1;
  while (t > 0) {
    if (t == 1) {
      CVec v = W.col(0);
      canonicalize_phase(v);
      basis.col(next_back--) = v;
      break;
    }
    // Intersect eigenspaces of the quotient maps.
    CMat E = CMat::Identity(t, t);
    for (const CMat& M : maps) {
      const CMat sub = (W * E).adjoint() * M * (W * E);
      const Cplx mu = sub.trace() / static_cast<double>(sub.rows());
      const CMat K = sub - mu * CMat::Identity(sub.rows(), sub.cols());
      Eigen::JacobiSVD<CMat> svd(K, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double cut = std::max(tau, 1e3 * std::numeric_limits<double>::epsilon() *
                                           std::max(1.0, sv.size() ? sv(0) : 0.0));
      int null_dim = 0;
      for (int i = static_cast<int>(sv.size()) - 1; i >= 0 && sv(i) <= cut; --i) ++null_dim;
      if (null_dim == static_cast<int>(sv.size())) continue;  // map is scalar here
      if (null_dim == 0)
        throw IllConditionedSpectrum(
            "common_flag: no joint eigenvector direction found (smallest singular value " +
                std::to_string(sv(sv.size() - 1)) + " above cut " + std::to_string(cut) + ")",
            sv(sv.size() - 1));
      E = E * svd.matrixV().rightCols(null_dim);
    }
    CVec v = W * E.col(0);
    canonicalize_phase(v);
    basis.col(next_back--) = v;
    // Shrink the quotient space to the complement of v inside W.
    const CVec vcoords = W.adjoint() * v;
    W = W * householder_complement(vcoords);
    --t;
  }
  return basis;
}

}  // namespace

RankResult numerical_rank(const CMat& cols, double rel_tol) {
  RankResult out;
  if (cols.size() == 0) return out;
  Eigen::JacobiSVD<CMat> svd(cols);
  const auto& sv = svd.singularValues();
  out.sigma_max = sv.size() ? sv(0) : 0.0;
  if (out.sigma_max <= 0.0) return out;
  const double cut = rel_tol * out.sigma_max;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) {
      out.rank = i + 1;
      out.sigma_accepted = sv(i);
    } else {
      out.sigma_rejected = sv(i);
      break;
    }
  }
  return out;
}

Cplx gram_determinant(const CMat& cols) {
  if (cols.cols() > cols.rows())
    throw std::invalid_argument("gram_determinant: " + std::to_string(cols.cols()) +
                                " vectors in dimension " + std::to_string(cols.rows()));
  const CMat G = cols.adjoint() * cols;  // G(i,j) = <v_j, v_i>; det unaffected
  return G.determinant();
}

BlockStructure simultaneous_block_triangularize(const std::vector<CMat>& generators,
                                                double tol_eig_rel, double tol_comm,
                                                double tol_pattern_rel) {
  if (generators.empty())
    throw std::invalid_argument("simultaneous_block_triangularize: no generators");
  const int n = static_cast<int>(generators.front().rows());
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument("simultaneous_block_triangularize: dimension " +
                                std::to_string(n) + " outside [1, " + std::to_string(kMaxDim) +
                                "]");
  for (const CMat& A : generators)
    if (A.rows() != n || A.cols() != n)
      throw std::invalid_argument("simultaneous_block_triangularize: generator shape " +
                                  dim_string(A) + " does not match dimension " +
                                  std::to_string(n));

  BlockStructure bs;
  // Abelianness gate with the offending pair reported.
  for (std::size_t i = 0; i < generators.size(); ++i)
    for (std::size_t j = i + 1; j < generators.size(); ++j) {
      const double defect = frob(generators[i] * generators[j] - generators[j] * generators[i]);
      const double scale = 1.0 + frob(generators[i]) * frob(generators[j]);
      bs.commutation_defect = std::max(bs.commutation_defect, defect / scale);
      if (defect > tol_comm * scale) {
        std::ostringstream os;
        os << "generators " << i << " and " << j << " do not commute: relative defect "
           << defect / scale << " exceeds " << tol_comm;
        throw NotAbelian(os.str(), static_cast<int>(i), static_cast<int>(j), defect / scale);
      }
    }

  // Stage 1: refine C^n into joint generalized eigenspaces. Every subspace in
  // the running decomposition is invariant under all generators, so each can
  // be split independently by the next generator's spectrum.
  std::vector<CMat> spaces{CMat::Identity(n, n)};
  for (const CMat& A : generators) {
    const double tau = tol_eig_rel * std::max(1e-300, frob(A));
    std::vector<CMat> refined;
    for (const CMat& Q : spaces) {
      const CMat M = Q.adjoint() * A * Q;
      Eigen::ComplexSchur<CMat> schur(M);
      CMat T = schur.matrixT();
      CMat U = schur.matrixU();
      const CVec eigs = T.diagonal();
      const std::vector<int> cluster = cluster_spectrum(eigs, tau, tau / 10.0);
      const int nclusters = 1 + *std::max_element(cluster.begin(), cluster.end());
      if (nclusters == 1) {
        refined.push_back(Q);
        continue;
      }
      for (int c = 0; c < nclusters; ++c) {
        CMat Tc = T;
        CMat Uc = U;
        std::vector<char> sel(cluster.size());
        int m = 0;
        for (std::size_t i = 0; i < cluster.size(); ++i) {
          sel[i] = cluster[i] == c;
          m += sel[i];
        }
        schur_select_to_top(Tc, Uc, sel);
        refined.push_back(Q * Uc.leftCols(m));
      }
    }
    spaces = std::move(refined);
  }

  // Stage 2: joint flag within each block so every generator restricts to a
  // lower-triangular matrix with a constant diagonal.
  struct Block {
    CMat basis;
    std::vector<Cplx> eigen_tuple;  // one eigenvalue per generator
  };
  const double tau_flag =
      tol_eig_rel * std::max(1e-300, [&] {
        double m = 0.0;
        for (const CMat& A : generators) m = std::max(m, frob(A));
        return m;
      }());
  std::vector<Block> blocks;
  for (const CMat& Q : spaces) {
    std::vector<CMat> restricted;
    restricted.reserve(generators.size());
    for (const CMat& A : generators) restricted.push_back(Q.adjoint() * A * Q);
    const CMat C = common_flag(restricted, tau_flag);
    Block blk;
    blk.basis = Q * C;
    for (const CMat& R : restricted) {
      const CMat Rt = C.adjoint() * R * C;
      blk.eigen_tuple.push_back(Rt.trace() / static_cast<double>(Rt.rows()));
    }
    blocks.push_back(std::move(blk));
  }

  // Stage 3: deterministic block order by the per-generator eigenvalue tuples.
  std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    for (std::size_t g = 0; g < a.eigen_tuple.size(); ++g) {
      if (a.eigen_tuple[g] == b.eigen_tuple[g]) continue;
      return cplx_lex_less(a.eigen_tuple[g], b.eigen_tuple[g]);
    }
    return false;
  });

  bs.P.resize(n, n);
  int offset = 0;
  for (const Block& blk : blocks) {
    const int w = static_cast<int>(blk.basis.cols());
    bs.P.middleCols(offset, w) = blk.basis;
    bs.block_start.push_back(offset);
    bs.eta.push_back(w);
    offset += w;
  }
  bs.P_inv = bs.P.partialPivLu().inverse();

  bs.eigenvalues.resize(static_cast<int>(generators.size()), static_cast<int>(blocks.size()));
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const CMat T = bs.P_inv * generators[g] * bs.P;
    const double scale = std::max(1e-300, frob(generators[g]));
    double worst = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const int s0 = bs.block_start[b];
      const int w = bs.eta[b];
      Cplx mu(0.0, 0.0);
      for (int i = 0; i < w; ++i) mu += T(s0 + i, s0 + i);
      bs.eigenvalues(static_cast<int>(g), static_cast<int>(b)) = mu / static_cast<double>(w);
    }
    // Off-pattern residual: anything outside the block-diagonal lower-
    // triangular mask.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bool inside = false;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          const int s0 = bs.block_start[b];
          const int w = bs.eta[b];
          if (i >= s0 && i < s0 + w && j >= s0 && j < s0 + w && i >= j) inside = true;
        }
        if (!inside) worst = std::max(worst, std::abs(T(i, j)));
      }
    bs.max_offpattern_residual = std::max(bs.max_offpattern_residual, worst / scale);
    if (worst > tol_pattern_rel * scale) {
      std::ostringstream os;
      os << "simultaneous_block_triangularize: generator " << g << " off-pattern residual "
         << worst / scale << " exceeds " << tol_pattern_rel;
      throw IllConditionedSpectrum(os.str(), worst / scale);
    }
  }
  return bs;
}

CanonicalVectors canonical_u0(const BlockStructure& bs) {
  const int n = static_cast<int>(bs.P.rows());
  CanonicalVectors cv;
  cv.u0_tilde = CVec::Zero(n);
  for (int start : bs.block_start) cv.u0_tilde(start) = Cplx(1.0, 0.0);
  cv.v0 = bs.P * cv.u0_tilde;
  return cv;
}

StratumVerdict classify_stratum(const BlockStructure& bs, const CVec& u, double tol) {
  if (u.size() != bs.P.rows())
    throw std::invalid_argument("classify_stratum: point dimension " + std::to_string(u.size()) +
                                " does not match " + std::to_string(bs.P.rows()));
  StratumVerdict v;
  v.normal_coords = bs.P_inv * u;
  v.in_V = true;
  v.min_leading = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < bs.block_start.size(); ++b) {
    const double lead = std::abs(v.normal_coords(bs.block_start[b]));
    v.min_leading = std::min(v.min_leading, lead);
    if (lead <= tol && v.in_V) {
      v.in_V = false;
      v.h_block = static_cast<int>(b) + 1;  // 1-indexed
    }
  }
  return v;
}

int default_budget(int generator_count) {
  if (generator_count <= 1) return 6;
  if (generator_count <= 3) return 3;
  return 1;
}

std::vector<WordExp> enumerate_words(int generator_count, int budget) {
  if (generator_count < 1) throw std::invalid_argument("enumerate_words: no generators");
  if (budget < 0) throw std::invalid_argument("enumerate_words: negative budget");
  double count = 1.0;
  for (int i = 0; i < generator_count; ++i) count *= 2.0 * budget + 1.0;
  if (count > static_cast<double>(kMaxWords))
    throw BudgetExceeded("enumerate_words: " + std::to_string(count) + " words exceed the cap of " +
                             std::to_string(kMaxWords),
                         static_cast<std::size_t>(count));

  std::vector<WordExp> words;
  words.reserve(static_cast<std::size_t>(count));
  WordExp w(generator_count, -budget);
  while (true) {
    words.push_back(w);
    int i = generator_count - 1;
    while (i >= 0 && w[i] == budget) w[i--] = -budget;
    if (i < 0) break;
    ++w[i];
  }
  std::sort(words.begin(), words.end(), [](const WordExp& a, const WordExp& b) {
    int ta = 0, tb = 0;
    for (int x : a) ta += std::abs(x);
    for (int x : b) tb += std::abs(x);
    if (ta != tb) return ta < tb;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  return words;
}

LinearGroupSpec make_linear_group(const std::vector<CMat>& generators, int budget,
                                  double tol_comm, double span_rel_tol) {
  if (generators.empty()) throw std::invalid_argument("make_linear_group: no generators");
  const int n = static_cast<int>(generators.front().rows());
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument("make_linear_group: dimension " + std::to_string(n) +
                                " outside [1, " + std::to_string(kMaxDim) + "]");
  LinearGroupSpec spec;
  spec.n = n;
  spec.generators = generators;
  spec.budget = budget >= 0 ? budget : default_budget(static_cast<int>(generators.size()));

  for (std::size_t i = 0; i < generators.size(); ++i) {
    const CMat& A = generators[i];
    if (A.rows() != n || A.cols() != n)
      throw std::invalid_argument("make_linear_group: generator " + std::to_string(i) +
                                  " has shape " + dim_string(A));
    Eigen::JacobiSVD<CMat> svd(A);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(n - 1);
    if (smax <= 0.0 || smin <= 1e-12 * smax)
      throw NotAnAutomorphismGerm("make_linear_group: generator " + std::to_string(i) +
                                  " is numerically singular");
    for (std::size_t j = i + 1; j < generators.size(); ++j) {
      const double defect = frob(generators[i] * generators[j] - generators[j] * generators[i]);
      const double scale = 1.0 + frob(generators[i]) * frob(generators[j]);
      if (defect > tol_comm * scale)
        throw NotAbelian("make_linear_group: generators " + std::to_string(i) + " and " +
                             std::to_string(j) + " do not commute (relative defect " +
                             std::to_string(defect / scale) + ")",
                         static_cast<int>(i), static_cast<int>(j), defect / scale);
    }
  }

  const std::vector<WordExp> words =
      enumerate_words(static_cast<int>(generators.size()), spec.budget);
  CMat stacked(n * n, static_cast<int>(words.size()));
  for (std::size_t w = 0; w < words.size(); ++w) {
    const CMat W = linear_word(spec, words[w]);
    stacked.col(static_cast<int>(w)) = Eigen::Map<const CVec>(W.data(), n * n);
  }

  Eigen::ColPivHouseholderQR<CMat> qr(stacked);
  qr.setThreshold(span_rel_tol);
  const int rank = static_cast<int>(qr.rank());
  const CMat thinQ = qr.householderQ() * CMat::Identity(n * n, rank);
  const auto& perm = qr.colsPermutation().indices();
  for (int j = 0; j < rank; ++j) {
    spec.span_basis.push_back(Eigen::Map<const CMat>(thinQ.col(j).data(), n, n));
    spec.span_words.push_back(words[static_cast<std::size_t>(perm(j))]);
  }
  return spec;
}

CMat linear_word(const LinearGroupSpec& spec, const WordExp& word) {
  if (word.size() != spec.generators.size())
    throw std::invalid_argument("linear_word: word arity " + std::to_string(word.size()) +
                                " does not match generator count " +
                                std::to_string(spec.generators.size()));
  CMat W = CMat::Identity(spec.n, spec.n);
  for (std::size_t g = 0; g < word.size(); ++g) {
    const int k = word[g];
    if (k == 0) continue;
    CMat base = k > 0 ? spec.generators[g] : spec.generators[g].partialPivLu().inverse();
    for (int i = 0; i < std::abs(k); ++i) W = W * base;
  }
  return W;
}

TransitionSolve solve_transition(const LinearGroupSpec& spec, const CVec& u, const CVec& v,
                                 double tol) {
  if (u.size() != spec.n || v.size() != spec.n)
    throw std::invalid_argument("solve_transition: point dimension mismatch");
  const int s = static_cast<int>(spec.span_basis.size());
  CMat S(spec.n, s);
  for (int j = 0; j < s; ++j) S.col(j) = spec.span_basis[j] * u;
  Eigen::JacobiSVD<CMat> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TransitionSolve out;
  out.coefficients = svd.solve(v);
  out.residual = (S * out.coefficients - v).norm();
  if (out.residual > tol * (1.0 + v.norm()))
    throw NotInOrbitSpan("solve_transition: target is outside vect(L)u, residual " +
                             std::to_string(out.residual),
                         out.residual);
  out.B = CMat::Zero(spec.n, spec.n);
  for (int j = 0; j < s; ++j) out.B += out.coefficients(j) * spec.span_basis[j];
  return out;
}

LinearDominanceReport linear_dominance(const LinearGroupSpec& spec, const BlockStructure& bs,
                                       int probes_per_stratum, unsigned long long seed,
                                       double rank_rel) {
  LinearDominanceReport rep;
  const CanonicalVectors cv = canonical_u0(bs);
  const int s = static_cast<int>(spec.span_basis.size());
  const auto span_image_rank = [&](const CVec& u) {
    CMat S(spec.n, s);
    for (int j = 0; j < s; ++j) S.col(j) = spec.span_basis[j] * u;
    return numerical_rank(S, rank_rel);
  };
  rep.rank_at_v0 = span_image_rank(cv.v0);
  rep.dominant = rep.rank_at_v0.rank == spec.n;

  if (probes_per_stratum > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> mod(0.5, 1.5);
    std::uniform_real_distribution<double> arg(0.0, 6.283185307179586);
    const int n = spec.n;
    const int nblocks = static_cast<int>(bs.eta.size());
    auto random_coords = [&](int vanish_block) {
      CVec c(n);
      for (int i = 0; i < n; ++i) c(i) = Cplx(unif(rng), unif(rng));
      for (int b = 0; b < nblocks; ++b) {
        const double m = mod(rng);
        const double a = arg(rng);
        c(bs.block_start[b]) = Cplx(m * std::cos(a), m * std::sin(a));
      }
      if (vanish_block >= 0) c(bs.block_start[vanish_block]) = Cplx(0.0, 0.0);
      return c;
    };
    for (int p = 0; p < probes_per_stratum; ++p) {
      const CVec u = bs.P * random_coords(-1);
      const bool full = span_image_rank(u).rank == spec.n;
      ++rep.probes_in_V;
      if (full != rep.dominant) {
        ++rep.mismatches;
        rep.notes.push_back("V probe " + std::to_string(p) + " contradicts dominance verdict");
      }
    }
    for (int b = 0; b < nblocks; ++b)
      for (int p = 0; p < probes_per_stratum; ++p) {
        const CVec u = bs.P * random_coords(b);
        const bool full = span_image_rank(u).rank == spec.n;
        ++rep.probes_in_H;
        if (full) {
          ++rep.mismatches;
          rep.notes.push_back("H_" + std::to_string(b + 1) + " probe " + std::to_string(p) +
                              " reached full rank");
        }
      }
    if (rep.mismatches > 0) rep.notes.emplace_back("InconsistentStratification");
  }
  return rep;
}

PsiSample psi_x_matrix(const LinearGroupSpec& spec, const CVec& x, double rank_rel) {
  if (x.size() != spec.n)
    throw std::invalid_argument("psi_x_matrix: point dimension mismatch");
  PsiSample out;
  const int s = static_cast<int>(spec.span_basis.size());
  out.matrix.resize(spec.n, s);
  for (int j = 0; j < s; ++j) out.matrix.col(j) = spec.span_basis[j] * x;
  out.rank = numerical_rank(out.matrix, rank_rel);
  out.injective = out.rank.rank == s;
  return out;
}

}  // namespace orbita
