#pragma once

#include <map>
#include <string>
#include <vector>

#include "orbita/errors.hpp"
#include "orbita/types.hpp"

namespace orbita {

// Graded lexicographic order on exponent multi-indices: lower total degree
// first, ties broken lexicographically. Gives every polynomial a canonical
// term order, which keeps serialization and iteration deterministic.
struct GradedLex {
  bool operator()(const Multi& a, const Multi& b) const;
};

// One scalar truncated polynomial: multi-index -> coefficient.
using Poly = std::map<Multi, Cplx, GradedLex>;

int total_degree(const Multi& a);

// Polynomial map C^n -> C^n truncated at a fixed total degree d, stored as one
// sparse monomial table per component. Group elements fix the origin and carry
// no constant term; constant terms are representable so translations and
// not-yet-normalized affine maps can pass through fixed-point normalization.
class JetMap {
 public:
  // Coefficients at or below this magnitude are dropped on insertion.
  static constexpr double kCoeffEps = 1e-14;

  JetMap() = default;
  JetMap(int n, int degree);

  static JetMap identity(int n, int degree);
  // Embeds a square matrix as the linear map x -> Ax.
  static JetMap linear(const CMat& A, int degree);
  // x -> x + t.
  static JetMap translation(const CVec& t, int degree);

  int dim() const { return n_; }
  int degree() const { return degree_; }

  // Inserts (adds) a coefficient; validates the multi-index shape and degree.
  void add_coeff(int component, const Multi& alpha, Cplx value);
  Cplx coeff(int component, const Multi& alpha) const;
  const Poly& component(int i) const { return comps_.at(i); }

  bool has_constant_term() const;
  // Removes constant terms no larger than eps; throws if one is larger.
  void drop_constant_term(double eps);

  CVec evaluate(const CVec& x) const;
  CMat jacobian_at_zero() const;

  // Keeps only the terms of exact total degree m.
  JetMap homogeneous_part(int m) const;

  JetMap& operator+=(const JetMap& other);
  JetMap& operator-=(const JetMap& other);
  JetMap& operator*=(Cplx scale);

  double max_coeff_magnitude() const;
  std::size_t term_count() const;

  std::string to_string() const;

 private:
  void check_component(int component) const;
  void check_multi(const Multi& alpha) const;

  int n_ = 0;
  int degree_ = 0;
  std::vector<Poly> comps_;
};

JetMap operator+(JetMap lhs, const JetMap& rhs);
JetMap operator-(JetMap lhs, const JetMap& rhs);

// Truncated product of scalar polynomials in n variables, degree cap d.
Poly poly_mul(const Poly& a, const Poly& b, int n, int d);

// Truncated composition f(g(x)); requires matching dimensions. The result is
// truncated at min(deg f, deg g).
JetMap compose(const JetMap& f, const JetMap& g);

// Degree-by-degree back-substitution for the inverse jet. Requires an
// invertible linear part (relative smallest singular value > tol_inv) and no
// constant term.
JetMap formal_inverse(const JetMap& f, double tol_inv = 1e-12);

// Largest coefficient magnitude of f o g - g o f; zero iff the jets commute
// at the shared truncation degree.
double commutator_defect(const JetMap& f, const JetMap& g);

// Largest coefficient magnitude of f - g (metric used by round-trip tests).
double max_coeff_distance(const JetMap& f, const JetMap& g);

}  // namespace orbita
