/// @file lattice.hpp
/// Flat 4-D lattice domains (torus / ball / annulus embedded in a padded box)
/// and algebra-valued lattice k-form fields.
///
/// Storage: site-major flat arrays, data[(s*comps + c)*cols + a], components
/// in lexicographic multi-index order.  Ball/annulus domains are cell-centered
/// (no site sits at the origin) inside a bounding box with a two-cell margin;
/// fields live on the whole box, the geometric domain is a site predicate.
/// Reductions come in two scopes:
///   * box scope  — every box site; used for inner products and quadratic
///     forms, where the exact discrete adjointness identities live;
///   * domain scope — sites inside the geometric region; used for reported
///     energies over balls/annuli (Riemann sums with cell measure h^4).
/// On the torus both scopes coincide.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "pym/algebra.hpp"

namespace pym {

enum class DomainKind { Torus, Ball, Annulus };

struct Domain {
  DomainKind kind = DomainKind::Torus;
  int n[4] = {0, 0, 0, 0};  // box sites per axis
  double h = 0;             // lattice spacing
  double L = 0;             // torus period (torus only)
  double R = 0;             // outer radius (ball/annulus)
  double rin = 0;           // inner radius (annulus)
  bool periodic = true;
  std::size_t nsites = 0;
  std::size_t stride[4] = {0, 0, 0, 0};

  static Domain torus(double period, int nn) {
    PYM_REQUIRE(period > 0 && nn >= 4, "torus: need period > 0 and n >= 4");
    Domain d;
    d.kind = DomainKind::Torus;
    d.L = period;
    d.h = period / nn;
    d.periodic = true;
    d.init_box(nn, nn, nn, nn);
    return d;
  }

  static Domain ball(double outer, double spacing) {
    PYM_REQUIRE(outer > 0 && spacing > 0 && outer / spacing >= 2,
                "ball: need R > 0 resolved by at least 4 sites per diameter");
    Domain d;
    d.kind = DomainKind::Ball;
    d.R = outer;
    d.h = spacing;
    d.periodic = false;
    const int half = int(std::ceil(outer / spacing)) + 2;  // two-cell margin
    d.init_box(2 * half, 2 * half, 2 * half, 2 * half);
    return d;
  }

  static Domain annulus(double inner, double outer, double spacing) {
    PYM_REQUIRE(inner > 0 && outer > inner, "annulus: need 0 < r < R");
    Domain d = ball(outer, spacing);
    d.kind = DomainKind::Annulus;
    d.rin = inner;
    return d;
  }

  void init_box(int n0, int n1, int n2, int n3) {
    n[0] = n0; n[1] = n1; n[2] = n2; n[3] = n3;
    stride[0] = 1;
    stride[1] = std::size_t(n0);
    stride[2] = stride[1] * std::size_t(n1);
    stride[3] = stride[2] * std::size_t(n2);
    nsites = stride[3] * std::size_t(n3);
  }

  std::size_t index(int i0, int i1, int i2, int i3) const {
    return std::size_t(i0) + stride[1] * std::size_t(i1) +
           stride[2] * std::size_t(i2) + stride[3] * std::size_t(i3);
  }

  void decompose(std::size_t s, int idx[4]) const {
    idx[0] = int(s % std::size_t(n[0])); s /= std::size_t(n[0]);
    idx[1] = int(s % std::size_t(n[1])); s /= std::size_t(n[1]);
    idx[2] = int(s % std::size_t(n[2])); s /= std::size_t(n[2]);
    idx[3] = int(s);
  }

  // Coordinate of a site.  Torus: x = i*h in [0,L).  Ball/annulus: cell
  // centers straddling the origin symmetrically, x = (i - n/2 + 1/2)*h.
  Eigen::Vector4d coord(std::size_t s) const {
    int idx[4];
    decompose(s, idx);
    Eigen::Vector4d x;
    for (int a = 0; a < 4; ++a)
      x[a] = periodic ? idx[a] * h : (idx[a] - n[a] / 2 + 0.5) * h;
    return x;
  }

  // Positively-oriented displacement to the nearest torus image (for radial
  // quantities measured from a point on the torus).
  Eigen::Vector4d separation(const Eigen::Vector4d& x, const Eigen::Vector4d& q) const {
    Eigen::Vector4d d = x - q;
    if (periodic)
      for (int a = 0; a < 4; ++a) {
        while (d[a] > 0.5 * L) d[a] -= L;
        while (d[a] < -0.5 * L) d[a] += L;
      }
    return d;
  }

  bool site_in_domain(std::size_t s) const {
    if (kind == DomainKind::Torus) return true;
    const double rr = coord(s).norm();
    if (kind == DomainKind::Ball) return rr < R;
    return rr > rin && rr < R;
  }

  std::vector<std::uint32_t> domain_sites() const {
    std::vector<std::uint32_t> out;
    for (std::size_t s = 0; s < nsites; ++s)
      if (site_in_domain(s)) out.push_back(std::uint32_t(s));
    return out;
  }
};

// ============================================================
// Lattice k-form fields
// ============================================================
struct LatticeForm {
  const Domain* dom = nullptr;
  int degree = 0;
  int cols = 1;  // algebra dimension, or 1 for real-valued fields
  std::vector<double> data;

  LatticeForm() = default;
  LatticeForm(const Domain& d, int k, int c)
      : dom(&d), degree(k), cols(c),
        data(d.nsites * std::size_t(forms::comps(k)) * std::size_t(c), 0.0) {}

  int comps() const { return forms::comps(degree); }
  std::size_t block() const { return std::size_t(comps()) * std::size_t(cols); }
  double* at(std::size_t s) { return data.data() + s * block(); }
  const double* at(std::size_t s) const { return data.data() + s * block(); }

  FormValue value(std::size_t s) const {
    FormValue v(comps(), cols);
    const double* p = at(s);
    for (int c = 0; c < comps(); ++c)
      for (int a = 0; a < cols; ++a) v(c, a) = p[std::size_t(c) * cols + a];
    return v;
  }
  void set_value(std::size_t s, const FormValue& v) {
    double* p = at(s);
    for (int c = 0; c < comps(); ++c)
      for (int a = 0; a < cols; ++a) p[std::size_t(c) * cols + a] = v(c, a);
  }

  void check_compatible(const LatticeForm& o, const char* what) const {
    PYM_REQUIRE(dom == o.dom && degree == o.degree && cols == o.cols, what);
  }

  // in-place linear algebra
  void axpy(double alpha, const LatticeForm& o) {
    check_compatible(o, "axpy: mismatched fields");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += alpha * o.data[i];
  }
  void scale(double alpha) {
    for (auto& v : data) v *= alpha;
  }

  // Zero the field outside the geometric domain (Dirichlet collar).
  void mask_to_domain() {
    if (dom->kind == DomainKind::Torus) return;
    for (std::size_t s = 0; s < dom->nsites; ++s)
      if (!dom->site_in_domain(s)) std::fill(at(s), at(s) + block(), 0.0);
  }
};

// Sample an analytic form field x -> FormValue (comps x cols).
inline LatticeForm sample(const Domain& d, int k, int cols,
                          const std::function<FormValue(const Eigen::Vector4d&)>& f) {
  LatticeForm out(d, k, cols);
  for (std::size_t s = 0; s < d.nsites; ++s) out.set_value(s, f(d.coord(s)));
  return out;
}

// Box-scope L2 inner product  h^4 sum_s <a(s), b(s)>.
inline double dot(const LatticeForm& a, const LatticeForm& b) {
  a.check_compatible(b, "dot: mismatched fields");
  double acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc * std::pow(a.dom->h, 4);
}
inline double norm_l2(const LatticeForm& a) { return std::sqrt(dot(a, a)); }

// Pointwise squared norm |a(s)|^2 as a real-valued 0-form field.
inline LatticeForm norm_sq_field(const LatticeForm& a) {
  LatticeForm out(*a.dom, 0, 1);
  const std::size_t blk = a.block();
  for (std::size_t s = 0; s < a.dom->nsites; ++s) {
    const double* p = a.at(s);
    double acc = 0;
    for (std::size_t i = 0; i < blk; ++i) acc += p[i] * p[i];
    out.at(s)[0] = acc;
  }
  return out;
}

// Domain-scope integral of a real-valued 0-form (Riemann sum, cell measure h^4).
inline double integrate(const LatticeForm& f) {
  PYM_REQUIRE(f.degree == 0 && f.cols == 1, "integrate: expects a scalar field");
  double acc = 0;
  for (std::size_t s = 0; s < f.dom->nsites; ++s)
    if (f.dom->site_in_domain(s)) acc += f.at(s)[0];
  return acc * std::pow(f.dom->h, 4);
}

// Domain-scope integral restricted by a predicate on the site coordinate.
inline double integrate_where(const LatticeForm& f,
                              const std::function<bool(const Eigen::Vector4d&)>& pred) {
  PYM_REQUIRE(f.degree == 0 && f.cols == 1, "integrate_where: expects a scalar field");
  double acc = 0;
  for (std::size_t s = 0; s < f.dom->nsites; ++s)
    if (f.dom->site_in_domain(s) && pred(f.dom->coord(s))) acc += f.at(s)[0];
  return acc * std::pow(f.dom->h, 4);
}

}  // namespace pym
