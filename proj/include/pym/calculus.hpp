/// @file calculus.hpp
/// Discrete exterior calculus on lattice forms: forward-difference d, its
/// exact adjoint d*, covariant versions twisted by a gauge potential, lattice
/// curvature, covariant gradients, and gauge transformations.
///
/// Sign conventions:
///   (d om)_J    = sum_{mu in J} insert_sign(mu, J\mu) D+_mu om_{J\mu}
///   (d* be)_I   = -sum_{mu notin I} insert_sign(mu, I) D-_mu be_{I u mu}
///   [A ^ om]_J  = sum_{mu in J} insert_sign(mu, J\mu) [A_mu, om_{J\mu}]
///   d_A om      = d om + [A ^ om]        (graded bracket wedge)
///   d_A* be     = d* be - sum_{mu notin I} sgn [A_mu, be_{I u mu}]
/// With these choices <d_A a, b> = <a, d_A* b> holds to machine precision in
/// the box-scope inner product (torus wrap or zero extension), because the
/// difference pair (D+, -D-) is exactly adjoint and the pointwise bracket
/// adjoint follows from ad-invariance of the algebra inner product.
#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include "pym/lattice.hpp"

namespace pym {

namespace detail {

// Iterate all sites; fn(s, sn) where sn = neighbor in +mu (SIZE_MAX if the
// zero-extended box ends) and likewise for the backward variant.
template <class F>
void sweep_forward(const Domain& d, int mu, F&& fn) {
  int idx[4];
  for (std::size_t s = 0; s < d.nsites; ++s) {
    d.decompose(s, idx);
    std::size_t sn;
    if (idx[mu] + 1 < d.n[mu]) sn = s + d.stride[mu];
    else if (d.periodic) sn = s - std::size_t(d.n[mu] - 1) * d.stride[mu];
    else sn = SIZE_MAX;
    fn(s, sn);
  }
}
template <class F>
void sweep_backward(const Domain& d, int mu, F&& fn) {
  int idx[4];
  for (std::size_t s = 0; s < d.nsites; ++s) {
    d.decompose(s, idx);
    std::size_t sn;
    if (idx[mu] >= 1) sn = s - d.stride[mu];
    else if (d.periodic) sn = s + std::size_t(d.n[mu] - 1) * d.stride[mu];
    else sn = SIZE_MAX;
    fn(s, sn);
  }
}

}  // namespace detail

/// Exterior derivative (forward differences).
inline LatticeForm d(const LatticeForm& om) {
  PYM_REQUIRE(om.degree <= 3, "d: top-degree form");
  const Domain& dm = *om.dom;
  LatticeForm out(dm, om.degree + 1, om.cols);
  const double invh = 1.0 / dm.h;
  const int cc = om.cols;
  for (int j = 0; j < forms::comps(om.degree + 1); ++j) {
    const int mj = forms::mask(om.degree + 1, j);
    for (int mu = 0; mu < 4; ++mu) {
      if (!(mj & (1 << mu))) continue;
      const int mi = mj & ~(1 << mu);
      const double sgn = forms::insert_sign(mu, mi);
      const int ci = forms::index_of(mi);
      detail::sweep_forward(dm, mu, [&](std::size_t s, std::size_t sn) {
        double* o = out.at(s) + std::size_t(j) * cc;
        const double* p = om.at(s) + std::size_t(ci) * cc;
        if (sn == SIZE_MAX) {
          for (int a = 0; a < cc; ++a) o[a] += sgn * (-p[a]) * invh;
        } else {
          const double* pn = om.at(sn) + std::size_t(ci) * cc;
          for (int a = 0; a < cc; ++a) o[a] += sgn * (pn[a] - p[a]) * invh;
        }
      });
    }
  }
  return out;
}

/// Codifferential: exact box-scope adjoint of d (backward differences).
inline LatticeForm d_star(const LatticeForm& be) {
  PYM_REQUIRE(be.degree >= 1, "d_star: needs degree >= 1");
  const Domain& dm = *be.dom;
  LatticeForm out(dm, be.degree - 1, be.cols);
  const double invh = 1.0 / dm.h;
  const int cc = be.cols;
  for (int i = 0; i < forms::comps(be.degree - 1); ++i) {
    const int mi = forms::mask(be.degree - 1, i);
    for (int mu = 0; mu < 4; ++mu) {
      if (mi & (1 << mu)) continue;
      const double sgn = -double(forms::insert_sign(mu, mi));
      const int cj = forms::index_of(mi | (1 << mu));
      detail::sweep_backward(dm, mu, [&](std::size_t s, std::size_t sn) {
        double* o = out.at(s) + std::size_t(i) * cc;
        const double* p = be.at(s) + std::size_t(cj) * cc;
        if (sn == SIZE_MAX) {
          for (int a = 0; a < cc; ++a) o[a] += sgn * p[a] * invh;
        } else {
          const double* pn = be.at(sn) + std::size_t(cj) * cc;
          for (int a = 0; a < cc; ++a) o[a] += sgn * (p[a] - pn[a]) * invh;
        }
      });
    }
  }
  return out;
}

/// Pointwise graded bracket wedge [A ^ om] for a gauge potential A (1-form).
inline LatticeForm bracket_wedge(const LieAlgebra& g, const LatticeForm& A,
                                 const LatticeForm& om) {
  PYM_REQUIRE(A.degree == 1 && A.cols == g.dim && om.cols == g.dim,
              "bracket_wedge: A must be a g-valued 1-form matching om");
  PYM_REQUIRE(A.dom == om.dom, "bracket_wedge: domain mismatch");
  PYM_REQUIRE(om.degree <= 3, "bracket_wedge: degree overflow");
  const Domain& dm = *A.dom;
  LatticeForm out(dm, om.degree + 1, om.cols);
  const int cc = om.cols;
  for (int j = 0; j < forms::comps(om.degree + 1); ++j) {
    const int mj = forms::mask(om.degree + 1, j);
    for (int mu = 0; mu < 4; ++mu) {
      if (!(mj & (1 << mu))) continue;
      const int mi = mj & ~(1 << mu);
      const double sgn = forms::insert_sign(mu, mi);
      const int ci = forms::index_of(mi);
      for (std::size_t s = 0; s < dm.nsites; ++s)
        g.bracket_acc(A.at(s) + std::size_t(mu) * cc,
                      om.at(s) + std::size_t(ci) * cc,
                      out.at(s) + std::size_t(j) * cc, sgn);
    }
  }
  return out;
}

/// Pointwise adjoint of om -> [A ^ om]:  (out)_I = -sum sgn [A_mu, be_{I u mu}].
inline LatticeForm bracket_wedge_adjoint(const LieAlgebra& g, const LatticeForm& A,
                                         const LatticeForm& be) {
  PYM_REQUIRE(A.degree == 1 && A.cols == g.dim && be.cols == g.dim,
              "bracket_wedge_adjoint: A must be a g-valued 1-form matching be");
  PYM_REQUIRE(A.dom == be.dom, "bracket_wedge_adjoint: domain mismatch");
  PYM_REQUIRE(be.degree >= 1, "bracket_wedge_adjoint: needs degree >= 1");
  const Domain& dm = *A.dom;
  LatticeForm out(dm, be.degree - 1, be.cols);
  const int cc = be.cols;
  for (int i = 0; i < forms::comps(be.degree - 1); ++i) {
    const int mi = forms::mask(be.degree - 1, i);
    for (int mu = 0; mu < 4; ++mu) {
      if (mi & (1 << mu)) continue;
      const double sgn = -double(forms::insert_sign(mu, mi));
      const int cj = forms::index_of(mi | (1 << mu));
      for (std::size_t s = 0; s < dm.nsites; ++s)
        g.bracket_acc(A.at(s) + std::size_t(mu) * cc,
                      be.at(s) + std::size_t(cj) * cc,
                      out.at(s) + std::size_t(i) * cc, sgn);
    }
  }
  return out;
}

/// Covariant exterior derivative d_A om = d om + [A ^ om].
inline LatticeForm covariant_d(const LieAlgebra& g, const LatticeForm& A,
                               const LatticeForm& om) {
  LatticeForm out = d(om);
  const LatticeForm br = bracket_wedge(g, A, om);
  out.axpy(1.0, br);
  return out;
}

/// Covariant codifferential: exact box-scope adjoint of covariant_d.
inline LatticeForm covariant_d_star(const LieAlgebra& g, const LatticeForm& A,
                                    const LatticeForm& be) {
  LatticeForm out = d_star(be);
  const LatticeForm br = bracket_wedge_adjoint(g, A, be);
  out.axpy(1.0, br);
  return out;
}

/// Lattice curvature F = dA + A ^ A  (pointwise quadratic term [A_mu, A_nu]).
inline LatticeForm curvature(const LieAlgebra& g, const LatticeForm& A) {
  PYM_REQUIRE(A.degree == 1 && A.cols == g.dim, "curvature: expects gauge potential");
  LatticeForm F = d(A);
  const Domain& dm = *A.dom;
  const int cc = A.cols;
  for (int j = 0; j < 6; ++j) {
    const int mj = forms::mask(2, j);
    int mu = -1, nu = -1;
    for (int a = 0; a < 4; ++a)
      if (mj & (1 << a)) (mu < 0 ? mu : nu) = a;
    for (std::size_t s = 0; s < dm.nsites; ++s)
      g.bracket_acc(A.at(s) + std::size_t(mu) * cc, A.at(s) + std::size_t(nu) * cc,
                    F.at(s) + std::size_t(j) * cc, 1.0);
  }
  return F;
}

/// Componentwise squared forward gradient sum_mu |D+_mu om|^2 as a scalar field.
inline LatticeForm grad_sq_field(const LatticeForm& om) {
  const Domain& dm = *om.dom;
  LatticeForm out(dm, 0, 1);
  const double invh = 1.0 / dm.h;
  const std::size_t blk = om.block();
  for (int mu = 0; mu < 4; ++mu)
    detail::sweep_forward(dm, mu, [&](std::size_t s, std::size_t sn) {
      const double* p = om.at(s);
      double acc = 0;
      if (sn == SIZE_MAX) {
        for (std::size_t i = 0; i < blk; ++i) acc += p[i] * p[i];
      } else {
        const double* pn = om.at(sn);
        for (std::size_t i = 0; i < blk; ++i) {
          const double dd = pn[i] - p[i];
          acc += dd * dd;
        }
      }
      out.at(s)[0] += acc * invh * invh;
    });
  return out;
}

/// Covariant squared gradient sum_mu |D+_mu om + [A_mu, om]|^2 (base-point
/// bracket; first-order accurate like the difference itself).
inline LatticeForm covariant_grad_sq_field(const LieAlgebra& g, const LatticeForm& A,
                                           const LatticeForm& om) {
  PYM_REQUIRE(A.dom == om.dom && om.cols == g.dim, "covariant_grad_sq_field: mismatch");
  const Domain& dm = *om.dom;
  LatticeForm out(dm, 0, 1);
  const double invh = 1.0 / dm.h;
  const int cc = om.cols;
  const int nc = om.comps();
  std::vector<double> buf(std::size_t(cc), 0.0);
  for (int mu = 0; mu < 4; ++mu)
    detail::sweep_forward(dm, mu, [&](std::size_t s, std::size_t sn) {
      const double* p = om.at(s);
      const double* pn = sn == SIZE_MAX ? nullptr : om.at(sn);
      const double* a = A.at(s) + std::size_t(mu) * cc;
      double acc = 0;
      for (int c = 0; c < nc; ++c) {
        std::fill(buf.begin(), buf.end(), 0.0);
        g.bracket_acc(a, p + std::size_t(c) * cc, buf.data());
        for (int i = 0; i < cc; ++i) {
          const double base = p[std::size_t(c) * cc + i];
          const double diff = (pn ? pn[std::size_t(c) * cc + i] - base : -base) * invh;
          const double v = diff + buf[std::size_t(i)];
          acc += v * v;
        }
      }
      out.at(s)[0] += acc;
    });
  return out;
}

// ============================================================
// Gauge transformations
// ============================================================
/// Per-site group elements in the defining representation.
struct GroupField {
  const Domain* dom = nullptr;
  int n = 0;
  std::vector<Eigen::MatrixXcd> g;

  double max_unitarity_defect() const {
    double worst = 0;
    for (const auto& m : g)
      worst = std::max(worst, (m.adjoint() * m - Eigen::MatrixXcd::Identity(n, n)).norm());
    return worst;
  }
};

/// Exponentiate an algebra-valued 0-form into a group field.
inline GroupField exp_field(const LieAlgebra& g, const LatticeForm& phi) {
  PYM_REQUIRE(phi.degree == 0 && phi.cols == g.dim, "exp_field: expects g-valued 0-form");
  GroupField out;
  out.dom = phi.dom;
  out.n = g.n;
  out.g.resize(phi.dom->nsites);
  for (std::size_t s = 0; s < phi.dom->nsites; ++s)
    out.g[s] = g.to_matrix(phi.value(s).row(0).transpose()).exp();
  return out;
}

/// A^g = g^-1 A g + g^-1 D+ g.  At a non-periodic box edge the logarithmic
/// derivative term is dropped (neighbor clamped), matching the zero-extension
/// convention of the plain operators.
inline LatticeForm gauge_transform(const LieAlgebra& g, const LatticeForm& A,
                                   const GroupField& gf, double* proj_defect = nullptr) {
  PYM_REQUIRE(A.degree == 1 && A.cols == g.dim, "gauge_transform: expects gauge potential");
  PYM_REQUIRE(A.dom == gf.dom, "gauge_transform: domain mismatch");
  const Domain& dm = *A.dom;
  LatticeForm out(dm, 1, g.dim);
  const double invh = 1.0 / dm.h;
  double worst = 0;
  for (int mu = 0; mu < 4; ++mu)
    detail::sweep_forward(dm, mu, [&](std::size_t s, std::size_t sn) {
      const Eigen::MatrixXcd& gs = gf.g[s];
      const Eigen::MatrixXcd ginv = gs.adjoint();  // unitary inverse
      Eigen::MatrixXcd am = g.to_matrix(
          Eigen::Map<const Eigen::VectorXd>(A.at(s) + std::size_t(mu) * g.dim, g.dim));
      Eigen::MatrixXcd res = ginv * am * gs;
      if (sn != SIZE_MAX) res += ginv * (gf.g[sn] - gs) * invh;
      double defect = 0;
      const Eigen::VectorXd coeff = g.from_matrix(res, &defect);
      worst = std::max(worst, defect);
      double* o = out.at(s) + std::size_t(mu) * g.dim;
      for (int a = 0; a < g.dim; ++a) o[a] = coeff[a];
    });
  if (proj_defect) *proj_defect = worst;
  return out;
}

/// Conjugate any g-valued form pointwise: om -> g^-1 om g.
inline LatticeForm conjugate_field(const LieAlgebra& g, const LatticeForm& om,
                                   const GroupField& gf) {
  PYM_REQUIRE(om.cols == g.dim && om.dom == gf.dom, "conjugate_field: mismatch");
  LatticeForm out(*om.dom, om.degree, om.cols);
  for (std::size_t s = 0; s < om.dom->nsites; ++s) {
    const Eigen::MatrixXcd ginv = gf.g[s].adjoint();
    for (int c = 0; c < om.comps(); ++c) {
      const Eigen::MatrixXcd m = g.to_matrix(
          Eigen::Map<const Eigen::VectorXd>(om.at(s) + std::size_t(c) * g.dim, g.dim));
      const Eigen::VectorXd coeff = g.from_matrix(ginv * m * gf.g[s]);
      double* o = out.at(s) + std::size_t(c) * g.dim;
      for (int a = 0; a < g.dim; ++a) o[a] = coeff[a];
    }
  }
  return out;
}

}  // namespace pym
