#pragma once

#include <string>
#include <vector>

#include "orbita/errors.hpp"
#include "orbita/group.hpp"
#include "orbita/types.hpp"

namespace orbita {

// The linear map M realizing the orbit isomorphism at the base point: it sends
// each sampled orbit vector w(x) to the linearized orbit vector D_0 w * x.
// Built from n basis words, validated against every held-out word.
struct LinearizationMap {
  int n = 0;
  CVec base_point;
  CMat M;
  std::vector<WordExp> basis_words;
  // Max |M w_j(x) - D_0 w_j x| on the basis words (solve round-off only).
  double basis_residual = 0.0;
  // Max over held-out words of |M w(x) - D_0 w x| / (1 + |D_0 w x|).
  double well_definedness_residual = 0.0;
  // Same maximum without the normalization.
  double max_abs_residual = 0.0;
  WordExp worst_word;
  double basis_condition = 0.0;  // condition number of the inverted basis matrix
  double sigma_min_M = 0.0;
};

// Constructs the map from sampled operators. Requires dominance at the base
// point (NotDominantAtPoint otherwise); picks the n basis words greedily by
// evaluation-volume (column-pivoted QR order); refuses with
// IllDefinedLinearization when a held-out word's relative residual exceeds
// tol.residual.
LinearizationMap build_phi_x(const SampledOperators& ops, const Tolerances& tol = {});

// Checks M w(x) = D_0 w x over every sampled word, and that distinct orbit
// points keep distinct images (a linear map contracts by at most sigma_min).
struct BijectionReport {
  double max_error = 0.0;
  WordExp worst_word;
  int distinct_points = 0;
  double min_source_separation = 0.0;  // over distinct orbit points
  double min_image_separation = 0.0;
  bool injective_on_sample = true;
  std::string note;
};

BijectionReport verify_orbit_bijection(const LinearizationMap& map, const SampledOperators& ops,
                                       double dedup = 1e-12);

// Pushforward at an arbitrary point y: with z = M y, checks
// M w(y) = D_0 w z for every sampled word.
struct PushforwardReport {
  CVec y;
  CVec z;
  double max_error = 0.0;
  WordExp worst_word;
};

PushforwardReport pushforward_orbit_check(const LinearizationMap& map, WordRealizer& realizer,
                                          const CVec& y, int budget);

// Closure compatibility: candidates within eps of the sampled orbit cloud must
// land within |M|*eps + tol of the mapped cloud. Candidates farther than eps
// from the cloud are out of scope, not violations.
struct ClosureCompatReport {
  int checked = 0;
  int in_scope = 0;
  int out_of_scope = 0;
  int violations = 0;
  double eps = 0.0;
  double eps_mapped = 0.0;  // |M| * eps + tol
  double max_mapped_distance = 0.0;  // among in-scope candidates
};

ClosureCompatReport closure_compatibility_check(const LinearizationMap& map,
                                                const SampledOperators& ops,
                                                const std::vector<CVec>& candidates, double eps,
                                                double tol = 1e-8);

// Regression baseline for affine groups: after moving the common fixed point
// to the origin the group is linear, the original action factors exactly
// through the translation, and the orbit isomorphism is the identity.
struct AffineBaselineReport {
  CVec fixed_point;
  // Max over sampled words and seeded points of
  // |g_w(x) - (T_p . L_w . T_p^-1)(x)|.
  double max_pointwise_error = 0.0;
  double phi_x_identity_error = 0.0;  // max entry of |M - I|
  bool found_dominant_point = false;
  CVec probe_used;
  bool pass = false;
};

AffineBaselineReport affine_baseline_check(const GroupSpec& affine_spec, int budget = -1,
                                           unsigned long long seed = 1);

}  // namespace orbita
