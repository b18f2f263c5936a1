#pragma once

#include <vector>

#include "orbita/types.hpp"

namespace orbita::kernels {

// Point-cloud primitives used by the orbit experiments. Points are matrix
// columns. Each kernel has an OpenMP-parallel entry point and a serial
// reference implementation; they agree bitwise because every reduction is a
// max/min (exactly associative and commutative on doubles) and the per-point
// inner loops run in a fixed order.

// Caps the OpenMP thread count for the parallel kernels (and everything else
// in the process); values < 1 leave the runtime default in place.
void set_jobs(int jobs);
int max_jobs();

// Directed Hausdorff distance: max over columns of `from` of the distance to
// the nearest column of `to`. Requires nonempty `to`.
double directed_max_min_distance(const CMat& from, const CMat& to);
double directed_max_min_distance_serial(const CMat& from, const CMat& to);

// max of the two directed distances; symmetric by construction.
double symmetric_hausdorff(const CMat& a, const CMat& b);

// For each column of `points`, the index of the nearest column of `cloud`
// (ties resolved to the lowest index). Requires nonempty `cloud`.
std::vector<int> nearest_indices(const CMat& points, const CMat& cloud);
std::vector<int> nearest_indices_serial(const CMat& points, const CMat& cloud);

}  // namespace orbita::kernels
