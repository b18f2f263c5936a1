#include "orbita/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace orbita::kernels {

namespace {

void check_nonempty(const CMat& to, const char* who) {
  if (to.cols() == 0) throw std::invalid_argument(std::string(who) + ": empty target cloud");
}

double min_distance_to(const CMat& cloud, const CVec& p) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < cloud.cols(); ++j)
    best = std::min(best, (cloud.col(j) - p).norm());
  return best;
}

int argmin_distance_to(const CMat& cloud, const CVec& p) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (Eigen::Index j = 0; j < cloud.cols(); ++j) {
    const double d = (cloud.col(j) - p).norm();
    if (d < best) {  // strict: ties keep the lowest index
      best = d;
      arg = static_cast<int>(j);
    }
  }
  return arg;
}

}  // namespace

void set_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs >= 1) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

int max_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double directed_max_min_distance_serial(const CMat& from, const CMat& to) {
  check_nonempty(to, "directed_max_min_distance");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < from.cols(); ++i)
    worst = std::max(worst, min_distance_to(to, from.col(i)));
  return worst;
}

double directed_max_min_distance(const CMat& from, const CMat& to) {
  check_nonempty(to, "directed_max_min_distance");
  double worst = 0.0;
  const Eigen::Index count = from.cols();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : worst)
#endif
  for (Eigen::Index i = 0; i < count; ++i)
    worst = std::max(worst, min_distance_to(to, from.col(i)));
  return worst;
}

double symmetric_hausdorff(const CMat& a, const CMat& b) {
  return std::max(directed_max_min_distance(a, b), directed_max_min_distance(b, a));
}

std::vector<int> nearest_indices_serial(const CMat& points, const CMat& cloud) {
  check_nonempty(cloud, "nearest_indices");
  std::vector<int> out(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    out[static_cast<std::size_t>(i)] = argmin_distance_to(cloud, points.col(i));
  return out;
}

std::vector<int> nearest_indices(const CMat& points, const CMat& cloud) {
  check_nonempty(cloud, "nearest_indices");
  std::vector<int> out(static_cast<std::size_t>(points.cols()));
  const Eigen::Index count = points.cols();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (Eigen::Index i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = argmin_distance_to(cloud, points.col(i));
  return out;
}

}  // namespace orbita::kernels
