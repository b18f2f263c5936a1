#pragma once

#include <optional>
#include <string>
#include <vector>

#include "orbita/group.hpp"
#include "orbita/linear_core.hpp"
#include "orbita/linearization.hpp"
#include "orbita/types.hpp"

namespace orbita {

// Axis-aligned polydisc |y_i - center_i| <= radius_i, the sampling region of
// the closure experiments.
struct Polydisc {
  CVec center;
  RVec radii;

  bool contains(const CVec& y, double slack = 0.0) const;
};

Polydisc unit_polydisc(const CVec& center);

// Deduplicated orbit sample: every budget word evaluated at the base point,
// points closer than the dedup radius to an earlier (graded-order) point
// dropped, surviving points tagged by their word.
struct OrbitSample {
  CVec base_point;
  int budget = 0;
  double dedup_radius = 0.0;
  std::vector<WordExp> words;  // one per retained column
  CMat points;                 // n x retained
};

OrbitSample sample_orbit(WordRealizer& realizer, const CVec& x, int budget, double dedup = 1e-12);

// Columns of `points` lying in the region (order preserved).
CMat restrict_to_region(const CMat& points, const Polydisc& region);

// Per-point stratum diagnosis: the sampled and linearized orbit ranks, the
// full-rank set memberships, and (when a normal form is supplied) the V / H_k
// verdict in normal coordinates.
struct StratumEntry {
  CVec x;
  int r = 0;        // rank of the sampled orbit vectors
  int r_tilde = 0;  // rank of the linearized orbit vectors
  RankResult rank_eval;
  RankResult rank_linear;
  // Gram determinant of the r greedy-pivot evaluation columns (the rank
  // witness of the sampled span).
  Cplx gram_det{0.0, 0.0};
  bool in_Omega_n = false;        // r = n
  bool in_Omega_tilde_n = false;  // r_tilde = n
  bool in_U = false;              // both
  std::optional<StratumVerdict> vh;  // against a supplied normal form
};

// r >= k, i.e. membership in the k-th rank stratum.
inline bool in_U_k(const StratumEntry& e, int k) { return e.r >= k; }

StratumEntry classify_point(WordRealizer& realizer, const CVec& x, int budget,
                            const Tolerances& tol = {},
                            const BlockStructure* normal_form = nullptr);

// Image compatibility of the full-rank sets: a probe has full sampled rank
// exactly when its image under the orbit isomorphism has full linearized rank.
struct OmegaImageReport {
  int probes = 0;
  int mismatches = 0;
  std::vector<std::string> details;  // one line per mismatch, with the
                                     // bracketing singular values
};

OmegaImageReport omega_image_check(const LinearizationMap& map, WordRealizer& realizer,
                                   const std::vector<CVec>& probes, int budget,
                                   const Tolerances& tol = {});

// Symmetric Hausdorff distance between two clouds restricted to the region.
// Throws EmptyRegion when either restriction is empty.
double closure_distance(const CMat& a, const CMat& b, const Polydisc& region);
double closure_distance(const OrbitSample& a, const OrbitSample& b, const Polydisc& region);

// Bounded-budget surrogate for relative minimality: every admissible orbit
// point y (in the full-rank set U and the region, including perturbed points
// snapped back to the orbit and any explicitly supplied candidates) must have
// its orbit's closure trace match the base orbit's within 4x the budget-
// truncation baseline delta(K) = closure_distance(sample at K, sample at K-1).
// Candidates outside U or outside the region are excluded, never failed.
struct MinimalityReport {
  int budget = 0;
  double delta_K = 0.0;
  double threshold = 0.0;  // 4 * delta_K
  int candidates = 0;
  int excluded = 0;  // region/U filter rejections (the H_k guard)
  double max_distance = 0.0;
  CVec worst_candidate;
  bool pass = false;
  std::string note;
};

MinimalityReport relative_minimality_experiment(WordRealizer& realizer, const CVec& x, int budget,
                                                const Polydisc& region, const Tolerances& tol = {},
                                                int perturbations = 4, unsigned long long seed = 1,
                                                const std::vector<CVec>& extra_candidates = {});

// Grid-cover surrogate for orbit density: eps_cover(K) = max over grid points
// of the distance to the budget-K orbit sample, tabulated over growing
// budgets. Verdicts are trends, not booleans.
struct DensityReport {
  std::vector<int> budgets;
  std::vector<double> eps_cover;
  int grid_points = 0;
  double grid_step = 0.0;
  std::string trend;  // "decreasing" | "flat" | "mixed"
};

DensityReport density_experiment(WordRealizer& realizer, const CVec& x, int max_budget,
                                 const Polydisc& region, double grid_step = 0.25);

// The evaluation grid used by density_experiment (exposed for tests).
CMat region_grid(const Polydisc& region, double grid_step);

}  // namespace orbita
