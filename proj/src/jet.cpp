#include "orbita/jet.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace orbita {

int total_degree(const Multi& a) {
  return std::accumulate(a.begin(), a.end(), 0);
}

bool GradedLex::operator()(const Multi& a, const Multi& b) const {
  const int da = total_degree(a);
  const int db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

std::string multi_to_string(const Multi& a) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
  os << ")";
  return os.str();
}

void insert_term(Poly& p, const Multi& alpha, Cplx value) {
  auto it = p.find(alpha);
  if (it == p.end()) {
    if (std::abs(value) > JetMap::kCoeffEps) p.emplace(alpha, value);
    return;
  }
  it->second += value;
  if (std::abs(it->second) <= JetMap::kCoeffEps) p.erase(it);
}

}  // namespace

JetMap::JetMap(int n, int degree) : n_(n), degree_(degree), comps_(n) {
  if (n < 1) throw std::invalid_argument("JetMap: dimension must be >= 1");
  if (degree < 1) throw std::invalid_argument("JetMap: degree must be >= 1");
}

JetMap JetMap::identity(int n, int degree) {
  JetMap f(n, degree);
  for (int i = 0; i < n; ++i) {
    Multi e(n, 0);
    e[i] = 1;
    f.add_coeff(i, e, Cplx(1.0, 0.0));
  }
  return f;
}

JetMap JetMap::linear(const CMat& A, int degree) {
  if (A.rows() != A.cols()) throw std::invalid_argument("JetMap::linear: square matrix required");
  JetMap f(static_cast<int>(A.rows()), degree);
  for (int i = 0; i < A.rows(); ++i) {
    for (int j = 0; j < A.cols(); ++j) {
      Multi e(A.cols(), 0);
      e[j] = 1;
      f.add_coeff(i, e, A(i, j));
    }
  }
  return f;
}

JetMap JetMap::translation(const CVec& t, int degree) {
  JetMap f = identity(static_cast<int>(t.size()), degree);
  const Multi zero(t.size(), 0);
  for (int i = 0; i < t.size(); ++i) f.add_coeff(i, zero, t(i));
  return f;
}

void JetMap::check_component(int component) const {
  if (component < 0 || component >= n_)
    throw std::invalid_argument("JetMap: component index " + std::to_string(component) +
                                " out of range for dimension " + std::to_string(n_));
}

void JetMap::check_multi(const Multi& alpha) const {
  if (static_cast<int>(alpha.size()) != n_)
    throw std::invalid_argument("JetMap: multi-index arity " + std::to_string(alpha.size()) +
                                " does not match dimension " + std::to_string(n_));
  for (int e : alpha)
    if (e < 0) throw std::invalid_argument("JetMap: negative exponent in " + multi_to_string(alpha));
  if (total_degree(alpha) > degree_)
    throw std::invalid_argument("JetMap: monomial " + multi_to_string(alpha) +
                                " exceeds truncation degree " + std::to_string(degree_));
}

void JetMap::add_coeff(int component, const Multi& alpha, Cplx value) {
  check_component(component);
  check_multi(alpha);
  insert_term(comps_[component], alpha, value);
}

Cplx JetMap::coeff(int component, const Multi& alpha) const {
  check_component(component);
  auto it = comps_[component].find(alpha);
  return it == comps_[component].end() ? Cplx(0.0, 0.0) : it->second;
}

bool JetMap::has_constant_term() const {
  const Multi zero(n_, 0);
  for (const Poly& p : comps_)
    if (p.count(zero)) return true;
  return false;
}

void JetMap::drop_constant_term(double eps) {
  const Multi zero(n_, 0);
  for (int i = 0; i < n_; ++i) {
    auto it = comps_[i].find(zero);
    if (it == comps_[i].end()) continue;
    if (std::abs(it->second) > eps)
      throw Error("drop_constant_term: component " + std::to_string(i) + " keeps constant " +
                  std::to_string(std::abs(it->second)) + " > " + std::to_string(eps));
    comps_[i].erase(it);
  }
}

CVec JetMap::evaluate(const CVec& x) const {
  if (x.size() != n_)
    throw std::invalid_argument("JetMap::evaluate: point dimension " + std::to_string(x.size()) +
                                " does not match map dimension " + std::to_string(n_));
  // Powers of each coordinate up to the truncation degree.
  std::vector<std::vector<Cplx>> pw(n_, std::vector<Cplx>(degree_ + 1, Cplx(1.0, 0.0)));
  for (int i = 0; i < n_; ++i)
    for (int k = 1; k <= degree_; ++k) pw[i][k] = pw[i][k - 1] * x(i);

  CVec out = CVec::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    Cplx acc(0.0, 0.0);
    for (const auto& [alpha, c] : comps_[i]) {
      Cplx mono(1.0, 0.0);
      for (int j = 0; j < n_; ++j)
        if (alpha[j]) mono *= pw[j][alpha[j]];
      acc += c * mono;
    }
    out(i) = acc;
  }
  return out;
}

CMat JetMap::jacobian_at_zero() const {
  CMat A = CMat::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      Multi e(n_, 0);
      e[j] = 1;
      auto it = comps_[i].find(e);
      if (it != comps_[i].end()) A(i, j) = it->second;
    }
  }
  return A;
}

JetMap JetMap::homogeneous_part(int m) const {
  JetMap out(n_, degree_);
  for (int i = 0; i < n_; ++i)
    for (const auto& [alpha, c] : comps_[i])
      if (total_degree(alpha) == m) out.comps_[i].emplace(alpha, c);
  return out;
}

JetMap& JetMap::operator+=(const JetMap& other) {
  if (other.n_ != n_ || other.degree_ != degree_)
    throw std::invalid_argument("JetMap: shape mismatch in addition");
  for (int i = 0; i < n_; ++i)
    for (const auto& [alpha, c] : other.comps_[i]) insert_term(comps_[i], alpha, c);
  return *this;
}

JetMap& JetMap::operator-=(const JetMap& other) {
  if (other.n_ != n_ || other.degree_ != degree_)
    throw std::invalid_argument("JetMap: shape mismatch in subtraction");
  for (int i = 0; i < n_; ++i)
    for (const auto& [alpha, c] : other.comps_[i]) insert_term(comps_[i], alpha, -c);
  return *this;
}

JetMap& JetMap::operator*=(Cplx scale) {
  for (int i = 0; i < n_; ++i) {
    Poly scaled;
    for (const auto& [alpha, c] : comps_[i]) {
      const Cplx v = c * scale;
      if (std::abs(v) > kCoeffEps) scaled.emplace(alpha, v);
    }
    comps_[i] = std::move(scaled);
  }
  return *this;
}

double JetMap::max_coeff_magnitude() const {
  double m = 0.0;
  for (const Poly& p : comps_)
    for (const auto& [alpha, c] : p) m = std::max(m, std::abs(c));
  return m;
}

std::size_t JetMap::term_count() const {
  std::size_t s = 0;
  for (const Poly& p : comps_) s += p.size();
  return s;
}

std::string JetMap::to_string() const {
  std::ostringstream os;
  for (int i = 0; i < n_; ++i) {
    os << "f_" << i << " =";
    bool first = true;
    for (const auto& [alpha, c] : comps_[i]) {
      os << (first ? " " : " + ") << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag()
         << "i)*x^" << multi_to_string(alpha);
      first = false;
    }
    if (first) os << " 0";
    os << "\n";
  }
  return os.str();
}

JetMap operator+(JetMap lhs, const JetMap& rhs) {
  lhs += rhs;
  return lhs;
}

JetMap operator-(JetMap lhs, const JetMap& rhs) {
  lhs -= rhs;
  return lhs;
}

Poly poly_mul(const Poly& a, const Poly& b, int n, int d) {
  Poly out;
  Multi gamma(n, 0);
  for (const auto& [alpha, ca] : a) {
    const int da = total_degree(alpha);
    for (const auto& [beta, cb] : b) {
      if (da + total_degree(beta) > d) break;  // graded order: later terms only grow
      for (int i = 0; i < n; ++i) gamma[i] = alpha[i] + beta[i];
      insert_term(out, gamma, ca * cb);
    }
  }
  return out;
}

JetMap compose(const JetMap& f, const JetMap& g) {
  if (f.dim() != g.dim())
    throw std::invalid_argument("compose: dimension mismatch " + std::to_string(f.dim()) + " vs " +
                                std::to_string(g.dim()));
  const int n = f.dim();
  const int d = std::min(f.degree(), g.degree());

  // Powers of each component of g, filled lazily up to the needed exponent.
  std::vector<std::vector<Poly>> pw(n);
  for (int j = 0; j < n; ++j) {
    Poly one;
    one.emplace(Multi(n, 0), Cplx(1.0, 0.0));
    pw[j].push_back(std::move(one));
  }
  auto power = [&](int j, int k) -> const Poly& {
    while (static_cast<int>(pw[j].size()) <= k) {
      if (pw[j].size() == 1) {
        // First power: g_j itself truncated to degree d.
        Poly base;
        for (const auto& [alpha, c] : g.component(j))
          if (total_degree(alpha) <= d) base.emplace(alpha, c);
        pw[j].push_back(std::move(base));
      } else {
        pw[j].push_back(poly_mul(pw[j].back(), pw[j][1], n, d));
      }
    }
    return pw[j][k];
  };

  JetMap out(n, d);
  for (int i = 0; i < n; ++i) {
    for (const auto& [alpha, c] : f.component(i)) {
      if (total_degree(alpha) > d && !g.has_constant_term()) continue;
      // Product over variables of g_j^(alpha_j), truncated as we go.
      Poly term;
      term.emplace(Multi(n, 0), c);
      for (int j = 0; j < n && !term.empty(); ++j)
        if (alpha[j]) term = poly_mul(term, power(j, alpha[j]), n, d);
      for (const auto& [gamma, v] : term) out.add_coeff(i, gamma, v);
    }
  }
  return out;
}

JetMap formal_inverse(const JetMap& f, double tol_inv) {
  if (f.has_constant_term())
    throw NotAnAutomorphismGerm("formal_inverse: map does not fix the origin");
  const CMat A = f.jacobian_at_zero();
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(A.rows() - 1);
  if (smax <= 0.0 || smin <= tol_inv * smax)
    throw NotAnAutomorphismGerm("formal_inverse: linear part is singular (sigma_min/sigma_max = " +
                                std::to_string(smax > 0 ? smin / smax : 0.0) + ")");

  const int n = f.dim();
  const int d = f.degree();
  const CMat Ainv = A.partialPivLu().inverse();

  JetMap g = JetMap::linear(Ainv, d);
  if (d == 1) return g;

  const JetMap id = JetMap::identity(n, d);
  for (int m = 2; m <= d; ++m) {
    // Residual of the current truncation; its degree-m part is what the next
    // homogeneous correction must cancel.
    const JetMap r = compose(f, g) - id;
    const JetMap rm = r.homogeneous_part(m);
    if (rm.term_count() == 0) continue;
    JetMap corr(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Cplx a = Ainv(i, j);
        if (std::abs(a) <= JetMap::kCoeffEps) continue;
        for (const auto& [alpha, c] : rm.component(j)) corr.add_coeff(i, alpha, -a * c);
      }
    g += corr;
  }
  return g;
}

double commutator_defect(const JetMap& f, const JetMap& g) {
  return (compose(f, g) - compose(g, f)).max_coeff_magnitude();
}

double max_coeff_distance(const JetMap& f, const JetMap& g) {
  return (f - g).max_coeff_magnitude();
}

}  // namespace orbita
