/// @file functional.hpp
/// The p-energy of a lattice gauge potential and its variational calculus:
///   E_p(A)      = integral (1 + |F_A|^2)^{p/2}
///   dE_p(A)[a]  = p integral rho_p(F) <F, d_A a>,        rho_p = (1+|F|^2)^{p/2-1}
///   residual    = d_A* ( rho_p(F) F )   (vanishes at critical points)
///   Q(A,a)      = p integral rho_p ( |d_A a|^2 + <F,[a,a]>
///                                    + (p-2) <F, d_A a>^2 / (1+|F|^2) )
///   Qfrak       = Q + p integral rho_p |d_A* a|^2
///   Qcal        = integral |d_A a|^2 + |d_A* a|^2 + rho_p <F,[a,a]>
/// Q is the exact second derivative of the discrete energy along straight
/// lines (the discrete curvature is polynomial in A, so the continuum algebra
/// transfers verbatim), which is what the finite-difference oracles check.
/// Integrals are domain-scope; on ball/annulus domains the collar carries
/// zero weight and the reported gradient is exactly the gradient of the
/// reported energy.
#pragma once

#include "pym/calculus.hpp"

namespace pym {

/// Scalar kernels shared by the energy and the comparison lemmas.  Arguments
/// named t2 take |F|^2, arguments named t take |F|.
struct ScalarKernels {
  double p;
  explicit ScalarKernels(double pp) : p(pp) {
    PYM_REQUIRE(pp >= 2.0 && pp < 3.0, "kernels: p must lie in [2,3)");
  }
  double H2(double t2) const { return std::pow(1.0 + t2, 0.5 * p); }
  double rho(double t2) const { return std::pow(1.0 + t2, 0.5 * p - 1.0); }
  double H(double t) const { return H2(t * t); }
  double V(double t) const { return t * std::pow(1.0 + t * t, 0.25 * (p - 2.0)); }
  // f(Q) = Q(1+Q)^{p/2-1} + (2 - (1+Q)^{p/2})/p, the energy-comparison kernel.
  double f_of_Q(double q) const {
    return q * std::pow(1.0 + q, 0.5 * p - 1.0) + (2.0 - std::pow(1.0 + q, 0.5 * p)) / p;
  }
};

/// Domain-scope weight (1 inside the geometric domain, 0 on the collar).
inline LatticeForm domain_weight(const Domain& d) {
  LatticeForm w(d, 0, 1);
  for (std::size_t s = 0; s < d.nsites; ++s) w.at(s)[0] = d.site_in_domain(s) ? 1.0 : 0.0;
  return w;
}

inline double ym_p_energy(const LieAlgebra& g, const LatticeForm& A, double p) {
  const ScalarKernels k(p);
  const LatticeForm F = curvature(g, A);
  double acc = 0;
  const std::size_t blk = F.block();
  for (std::size_t s = 0; s < F.dom->nsites; ++s) {
    if (!F.dom->site_in_domain(s)) continue;
    const double* q = F.at(s);
    double f2 = 0;
    for (std::size_t i = 0; i < blk; ++i) f2 += q[i] * q[i];
    acc += k.H2(f2);
  }
  return acc * std::pow(A.dom->h, 4);
}

/// rho_p(F) F with the domain weight folded in (the field whose covariant
/// codifferential is the Euler-Lagrange residual).
inline LatticeForm weighted_curvature(const LieAlgebra& g, const LatticeForm& A, double p) {
  const ScalarKernels k(p);
  LatticeForm F = curvature(g, A);
  const std::size_t blk = F.block();
  for (std::size_t s = 0; s < F.dom->nsites; ++s) {
    double* q = F.at(s);
    if (!F.dom->site_in_domain(s)) {
      std::fill(q, q + blk, 0.0);
      continue;
    }
    double f2 = 0;
    for (std::size_t i = 0; i < blk; ++i) f2 += q[i] * q[i];
    const double r = k.rho(f2);
    for (std::size_t i = 0; i < blk; ++i) q[i] *= r;
  }
  return F;
}

/// First variation dE_p(A)[a] = p <rho_p F, d_A a>  (exact derivative of the
/// discrete energy along A + t a).
inline double first_variation(const LieAlgebra& g, const LatticeForm& A,
                              const LatticeForm& a, double p) {
  const LatticeForm rf = weighted_curvature(g, A, p);
  const LatticeForm da = covariant_d(g, A, a);
  return p * dot(rf, da);
}

/// Euler-Lagrange residual d_A*(rho_p F); the L2 gradient of E_p is p times
/// this field.
inline LatticeForm el_residual(const LieAlgebra& g, const LatticeForm& A, double p) {
  return covariant_d_star(g, A, weighted_curvature(g, A, p));
}

/// Non-divergence rewrite of the critical-point equation:
///   d_A* F = (p-2)/2 * star( d|F|^2 ^ star F ) / (1 + |F|^2).
/// Returns both sides as 1-form fields (left: rho_p d_A* F, right: rho_p times
/// the quasilinear term) so that left - right tracks the divergence-form
/// residual up to an O(h) product-rule defect on smooth fields.
struct ResidualSplit {
  LatticeForm divergence_form;    // d_A*(rho_p F)
  LatticeForm principal;          // rho_p d_A* F
  LatticeForm quasilinear;        // rho_p (p-2)/2 star(d|F|^2 ^ star F)/(1+|F|^2)
  double split_defect_l2 = 0;     // || divergence_form - (principal - quasilinear) ||
};

inline ResidualSplit el_residual_split(const LieAlgebra& g, const LatticeForm& A, double p) {
  const ScalarKernels k(p);
  const Domain& dm = *A.dom;
  ResidualSplit out{el_residual(g, A, p), LatticeForm(), LatticeForm(), 0.0};

  const LatticeForm F = curvature(g, A);
  // principal part: rho_p * d_A* F
  LatticeForm dsF = covariant_d_star(g, A, F);
  LatticeForm f2 = norm_sq_field(F);
  out.principal = LatticeForm(dm, 1, F.cols);
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    const double r = k.rho(f2.at(s)[0]);
    const double* src = dsF.at(s);
    double* dst = out.principal.at(s);
    for (std::size_t i = 0; i < dsF.block(); ++i) dst[i] = r * src[i];
  }
  // quasilinear part: rho_p (p-2)/2 * star( d|F|^2 ^ star F ) / (1+|F|^2)
  const LatticeForm df2 = d(f2);  // real-valued 1-form
  out.quasilinear = LatticeForm(dm, 1, F.cols);
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    const FormValue sF = hodge(2, F.value(s));       // 2-form (g-valued)
    FormValue w = zero_value(3, F.cols);             // d|F|^2 ^ star F (3-form)
    const double* dv = df2.at(s);
    for (int j = 0; j < 6; ++j) {
      const int mj = forms::mask(2, j);
      for (int mu = 0; mu < 4; ++mu) {
        if (mj & (1 << mu)) continue;
        w.row(forms::index_of(mj | (1 << mu))) +=
            double(forms::insert_sign(mu, mj)) * dv[mu] * sF.row(j);
      }
    }
    const FormValue sw = hodge(3, w);  // 1-form
    const double scale = k.rho(f2.at(s)[0]) * 0.5 * (p - 2.0) / (1.0 + f2.at(s)[0]);
    out.quasilinear.set_value(s, scale * sw);
  }
  // defect of the product rule (O(h) on smooth fields); measured domain-scope
  LatticeForm diff = out.divergence_form;
  diff.axpy(-1.0, out.principal);
  diff.axpy(1.0, out.quasilinear);
  LatticeForm d2 = norm_sq_field(diff);
  out.split_defect_l2 = std::sqrt(integrate(d2));
  return out;
}

// ============================================================
// Second-variation quadratic forms
// ============================================================
namespace detail {
struct QTerms {
  double weighted_deriv = 0;   // integral rho |d_A a|^2
  double weighted_bracket = 0; // integral rho <F,[a,a]>
  double weighted_align = 0;   // integral rho (p-2) <F, d_A a>^2/(1+|F|^2)
  double weighted_costar = 0;  // integral rho |d_A* a|^2
  double plain_deriv = 0;      // integral |d_A a|^2
  double plain_costar = 0;     // integral |d_A* a|^2
};

inline QTerms q_terms(const LieAlgebra& g, const LatticeForm& A, const LatticeForm& a,
                      double p) {
  PYM_REQUIRE(a.degree == 1 && a.cols == g.dim, "Q: perturbation must be a g-valued 1-form");
  const ScalarKernels k(p);
  const Domain& dm = *A.dom;
  const LatticeForm F = curvature(g, A);
  const LatticeForm da = covariant_d(g, A, a);
  const LatticeForm dsa = covariant_d_star(g, A, a);
  const LatticeForm br = bracket_wedge(g, a, a);  // [a,a], components 2[a_mu,a_nu]
  QTerms t;
  const std::size_t blk2 = F.block();
  const double h4 = std::pow(dm.h, 4);
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    if (!dm.site_in_domain(s)) continue;
    const double *f = F.at(s), *dav = da.at(s), *brv = br.at(s), *dsv = dsa.at(s);
    double f2 = 0, da2 = 0, fda = 0, fbr = 0, ds2 = 0;
    for (std::size_t i = 0; i < blk2; ++i) {
      f2 += f[i] * f[i];
      da2 += dav[i] * dav[i];
      fda += f[i] * dav[i];
      fbr += f[i] * brv[i];
    }
    for (std::size_t i = 0; i < dsa.block(); ++i) ds2 += dsv[i] * dsv[i];
    const double r = k.rho(f2);
    t.weighted_deriv += h4 * r * da2;
    t.weighted_bracket += h4 * r * fbr;
    t.weighted_align += h4 * r * (p - 2.0) * fda * fda / (1.0 + f2);
    t.weighted_costar += h4 * r * ds2;
    t.plain_deriv += h4 * da2;
    t.plain_costar += h4 * ds2;
  }
  return t;
}
}  // namespace detail

/// Q(A,a): second derivative of E_p along A + t a (carries the overall p).
inline double Q_form(const LieAlgebra& g, const LatticeForm& A, const LatticeForm& a,
                     double p) {
  const auto t = detail::q_terms(g, A, a, p);
  return p * (t.weighted_deriv + t.weighted_bracket + t.weighted_align);
}

/// Gauge-fixed extension: Qfrak = Q + p integral rho_p |d_A* a|^2.
inline double Q_frak_form(const LieAlgebra& g, const LatticeForm& A, const LatticeForm& a,
                          double p) {
  const auto t = detail::q_terms(g, A, a, p);
  return p * (t.weighted_deriv + t.weighted_bracket + t.weighted_align + t.weighted_costar);
}

/// Comparison form: Qcal = integral |d_A a|^2 + |d_A* a|^2 + rho_p <F,[a,a]>
/// (derivative terms unweighted, no overall p).
inline double Q_cal_form(const LieAlgebra& g, const LatticeForm& A, const LatticeForm& a,
                         double p) {
  const auto t = detail::q_terms(g, A, a, p);
  return t.plain_deriv + t.plain_costar + t.weighted_bracket;
}

// ============================================================
// Gradient flow (steepest descent with Armijo backtracking)
// ============================================================
struct FlowOptions {
  double p = 2.0;
  int max_steps = 200;
  int max_backtracks = 40;
  double armijo_c = 1e-4;
  double target_residual_factor = 1e-6;  // stop when ||res|| < factor*(1+||F||)
};

struct FlowStepLog {
  int step;
  double energy;
  double residual_l2;
  double step_size;
};

enum class FlowStatus { Converged, StepBudget, Diverged };

struct FlowResult {
  LatticeForm A;
  FlowStatus status = FlowStatus::StepBudget;
  std::vector<FlowStepLog> log;
  double final_energy = 0;
  double final_residual = 0;
};

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "converged";
    case FlowStatus::StepBudget: return "step_budget";
    case FlowStatus::Diverged: return "diverged";
  }
  return "?";
}

/// Minimize E_p from A0.  The descent direction is the exact L2 gradient
/// p * d_A*(rho_p F); the initial trial step is 1/(1 + sup rho_p|F|), halved
/// on Armijo failure.  A step that still increases the energy after the
/// backtracking budget reports Diverged rather than silently accepting.
inline FlowResult flow(const LieAlgebra& g, const LatticeForm& A0, const FlowOptions& opt) {
  FlowResult out;
  out.A = A0;
  double energy = ym_p_energy(g, out.A, opt.p);
  const ScalarKernels k(opt.p);
  for (int step = 0; step < opt.max_steps; ++step) {
    LatticeForm res = el_residual(g, out.A, opt.p);
    const double res_norm = norm_l2(res);
    // sup rho_p |F| for the step heuristic
    const LatticeForm F = curvature(g, out.A);
    const LatticeForm f2 = norm_sq_field(F);
    double sup_rf = 0;
    for (std::size_t s = 0; s < F.dom->nsites; ++s)
      if (F.dom->site_in_domain(s))
        sup_rf = std::max(sup_rf, k.rho(f2.at(s)[0]) * std::sqrt(f2.at(s)[0]));
    double tau = 1.0 / (1.0 + sup_rf);

    const double fnorm = std::sqrt(integrate(f2));
    out.log.push_back({step, energy, res_norm, tau});
    if (res_norm < opt.target_residual_factor * (1.0 + fnorm)) {
      out.status = FlowStatus::Converged;
      out.final_energy = energy;
      out.final_residual = res_norm;
      return out;
    }

    const double grad_sq = res_norm * res_norm * opt.p * opt.p;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
      LatticeForm trial = out.A;
      trial.axpy(-tau * opt.p, res);
      const double etrial = ym_p_energy(g, trial, opt.p);
      if (etrial <= energy - opt.armijo_c * tau * grad_sq) {
        out.A = std::move(trial);
        energy = etrial;
        out.log.back().step_size = tau;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      out.status = FlowStatus::Diverged;
      out.final_energy = energy;
      out.final_residual = res_norm;
      return out;
    }
  }
  out.status = FlowStatus::StepBudget;
  out.final_energy = energy;
  LatticeForm res = el_residual(g, out.A, opt.p);
  out.final_residual = norm_l2(res);
  return out;
}

}  // namespace pym
