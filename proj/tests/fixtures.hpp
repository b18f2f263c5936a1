#pragma once

// Shared deterministic fixtures for the unit tests and the acceptance suite.
// Everything is seeded; nothing here reads the clock or the environment.

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "orbita/jet.hpp"
#include "orbita/types.hpp"

namespace fixtures {

using orbita::CMat;
using orbita::Cplx;
using orbita::CVec;
using orbita::JetMap;
using orbita::Multi;

using Rng = std::mt19937_64;

inline double runif(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Cplx rc(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return {runif(rng, lo, hi), runif(rng, lo, hi)};
}

// The resonance workhorse: h(z,w) = (2z, 4w + z^2). lambda_2 = lambda_1^2, so
// no linear change of coordinates conjugates h to its linear part.
inline JetMap make_h(int degree = 4) {
  JetMap h(2, degree);
  h.add_coeff(0, {1, 0}, 2.0);
  h.add_coeff(1, {0, 1}, 4.0);
  h.add_coeff(1, {2, 0}, 1.0);
  return h;
}

// Triangular shear (z, w + z^2): unipotent, inverse flips the sign.
inline JetMap make_shear(int degree = 4) {
  JetMap s(2, degree);
  s.add_coeff(0, {1, 0}, 1.0);
  s.add_coeff(1, {0, 1}, 1.0);
  s.add_coeff(1, {2, 0}, 1.0);
  return s;
}

// Random diagonal linear map with eigenvalue moduli in [0.6, 1.8] and random
// phases; comfortably invertible.
inline CMat random_diag(int n, Rng& rng) {
  CMat A = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double mod = runif(rng, 0.6, 1.8);
    const double arg = runif(rng, 0.0, 6.283185307179586);
    A(i, i) = Cplx(mod * std::cos(arg), mod * std::sin(arg));
  }
  return A;
}

// Identity plus a few random higher-order terms with small coefficients; a
// polynomial change of coordinates tangent to the identity.
inline JetMap random_tangent_identity(int n, int degree, Rng& rng, int extra_terms = 3) {
  JetMap phi = JetMap::identity(n, degree);
  std::uniform_int_distribution<int> comp(0, n - 1);
  std::uniform_int_distribution<int> deg(2, std::min(3, degree));
  for (int t = 0; t < extra_terms; ++t) {
    const int target = comp(rng);
    const int total = deg(rng);
    // Random composition of `total` among n slots.
    Multi alpha(n, 0);
    for (int u = 0; u < total; ++u) alpha[comp(rng)] += 1;
    phi.add_coeff(target, alpha, 0.3 * rc(rng));
  }
  return phi;
}

// A commuting pair built from a shared polynomial conjugacy applied to two
// commuting (diagonal) linear maps: f = phi^-1 . L1 . phi, g = phi^-1 . L2 . phi.
struct CommutingPair {
  JetMap f, g;
};

inline CommutingPair conjugated_diag_pair(int n, int degree, Rng& rng) {
  const JetMap phi = random_tangent_identity(n, degree, rng);
  const JetMap phi_inv = orbita::formal_inverse(phi);
  const JetMap l1 = JetMap::linear(random_diag(n, rng), degree);
  const JetMap l2 = JetMap::linear(random_diag(n, rng), degree);
  return {orbita::compose(phi_inv, orbita::compose(l1, phi)),
          orbita::compose(phi_inv, orbita::compose(l2, phi))};
}

// Shear family pairs (z, w + p(z)) and (z, w + q(z)); these commute exactly.
inline CommutingPair shear_family_pair(int degree, Rng& rng) {
  JetMap f = JetMap::identity(2, degree);
  JetMap g = JetMap::identity(2, degree);
  for (int k = 2; k <= degree; ++k) {
    f.add_coeff(1, {k, 0}, 0.4 * rc(rng));
    g.add_coeff(1, {k, 0}, 0.4 * rc(rng));
  }
  return {f, g};
}

// A map paired with one of its own powers.
inline CommutingPair self_power_pair(int n, int degree, Rng& rng) {
  const JetMap phi = random_tangent_identity(n, degree, rng);
  const JetMap phi_inv = orbita::formal_inverse(phi);
  const JetMap l = JetMap::linear(random_diag(n, rng), degree);
  const JetMap f = orbita::compose(phi_inv, orbita::compose(l, phi));
  JetMap g = f;
  std::uniform_int_distribution<int> reps(1, 2);
  for (int r = reps(rng); r > 0; --r) g = orbita::compose(g, f);
  return {f, g};
}

// Commuting linear pairs: two polynomials in one random diagonalizable matrix.
inline CommutingPair linear_poly_pair(int n, int degree, Rng& rng) {
  const CMat D = random_diag(n, rng);
  CMat Q = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = rc(rng);
  Q += 3.0 * CMat::Identity(n, n);  // keep the conjugation well conditioned
  const CMat Qinv = Q.partialPivLu().inverse();
  const CMat A = Q * D * Qinv;
  const CMat B = Q * (D * D + 0.5 * CMat::Identity(n, n)) * Qinv;
  return {JetMap::linear(A, degree), JetMap::linear(B, degree)};
}

// ---- planted linear normal-form fixtures ----------------------------------

// All partitions of n in weakly decreasing order.
inline std::vector<std::vector<int>> partitions_of(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  // Depth-first enumeration with a running cap keeps parts sorted.
  auto rec = [&](auto&& self, int rest, int cap) -> void {
    if (rest == 0) {
      out.push_back(cur);
      return;
    }
    for (int part = std::min(rest, cap); part >= 1; --part) {
      cur.push_back(part);
      self(self, rest - part, part);
      cur.pop_back();
    }
  };
  rec(rec, n, n);
  return out;
}

// A commuting family planted inside the block-triangular pattern for a given
// partition, then hidden by a random well-conditioned conjugation.
//  - every block of every generator is mu*I + polynomial in the shift N,
//    so the generators commute exactly;
//  - generator 0 receives well-separated eigenvalue moduli across blocks, so
//    the planted partition is recoverable;
//  - generator 0 also gets a full subdiagonal, which makes the orbit of the
//    distinguished vector span each block (the planted groups are dominant).
struct PlantedGroup {
  std::vector<CMat> planted;     // block-pattern representatives
  std::vector<CMat> conjugated;  // Q . K . Q^-1, the test inputs
  CMat Q;
  std::vector<int> eta;  // planted partition (weakly decreasing)
};

inline PlantedGroup plant_abelian_group(const std::vector<int>& eta, int generators, Rng& rng) {
  const int n = std::accumulate(eta.begin(), eta.end(), 0);
  PlantedGroup pg;
  pg.eta = eta;
  for (int g = 0; g < generators; ++g) {
    CMat K = CMat::Zero(n, n);
    int off = 0;
    for (std::size_t b = 0; b < eta.size(); ++b) {
      const int w = eta[b];
      Cplx mu;
      if (g == 0) {
        // Separated moduli, random phase: distinct blocks stay distinct.
        const double mod = 0.5 + 0.45 * static_cast<double>(b);
        const double arg = runif(rng, 0.0, 6.283185307179586);
        mu = Cplx(mod * std::cos(arg), mod * std::sin(arg));
      } else {
        const double mod = runif(rng, 0.6, 1.8);
        const double arg = runif(rng, 0.0, 6.283185307179586);
        mu = Cplx(mod * std::cos(arg), mod * std::sin(arg));
      }
      for (int i = 0; i < w; ++i) K(off + i, off + i) = mu;
      for (int p = 1; p < w; ++p) {
        Cplx c = 0.5 * rc(rng);
        if (g == 0 && p == 1) c += Cplx(1.0, 0.0);  // full subdiagonal for spanning
        for (int i = 0; i + p < w; ++i) K(off + i + p, off + i) += c;
      }
      off += w;
    }
    pg.planted.push_back(K);
  }
  CMat Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = rc(rng);
  Q += 2.5 * CMat::Identity(n, n);  // keep the conjugation well conditioned
  pg.Q = Q;
  const CMat Qinv = Q.partialPivLu().inverse();
  for (const CMat& K : pg.planted) pg.conjugated.push_back(Q * K * Qinv);
  return pg;
}

// Mixed supply of commuting pairs for bulk property tests.
inline CommutingPair commuting_pair(int case_index, Rng& rng) {
  std::uniform_int_distribution<int> ndist(2, 4);
  switch (case_index % 4) {
    case 0:
      return conjugated_diag_pair(2, 5, rng);
    case 1:
      return shear_family_pair(5, rng);
    case 2:
      return self_power_pair(2, 4, rng);
    default:
      return linear_poly_pair(ndist(rng), 4, rng);
  }
}

}  // namespace fixtures
