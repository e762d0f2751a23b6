/// @file neck.hpp
/// Neck-region analysis: the exponent/constant stack for weighted decay
/// estimates, interpolation weights between a concentration scale and the
/// neck radius, the curvature endomorphism entering second-order barrier
/// operators, radial supersolution checks, pointwise decay envelopes,
/// dyadic energy profiles, and weighted coercivity diagnostics.
///
/// Conventions. All radial quantities are measured from an explicit center.
/// Annulus weights are defined for r <= |x| <= R only and evaluation outside
/// that range is a precondition error. Fitted constants are reported, not
/// asserted; callers decide what "stable" means for a given sweep.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pym/calculus.hpp"
#include "pym/functional.hpp"
#include "pym/lattice.hpp"

namespace pym {

// ============================================================
// Exponent and constant stack
// ============================================================

/// Decay modulus mu(p) = max(2 - p/2 + 1/(2(p-1)), 1) for p in [2,3).
/// mu(2) = 3/2, nonincreasing in p, with floor 1.
inline double neck_mu(double p) {
  PYM_REQUIRE(p >= 2.0 && p < 3.0, "neck_mu: p must lie in [2,3)");
  return std::max(2.0 - 0.5 * p + 0.5 / (p - 1.0), 1.0);
}

/// kappa_beta(p, beta) = 2(p-1)(1-beta)_+.
inline double neck_kappa_beta(double p, double beta) {
  PYM_REQUIRE(p >= 1.0, "neck_kappa_beta: p must be >= 1");
  return 2.0 * (p - 1.0) * std::max(1.0 - beta, 0.0);
}

/// kappa(p, gamma) = (p-1)(2-gamma)_+ = kappa_beta(p, gamma/2).
inline double neck_kappa(double p, double gamma) {
  return neck_kappa_beta(p, 0.5 * gamma);
}

/// Decay exponent gamma(p): the solution of
///   mu(p) = kappa(p, gamma) / (1 - control (p-2) - (p-2)^2)
/// in closed form gamma = 2 - mu(p) (1 - control (p-2) - (p-2)^2) / (p-1).
/// gamma(2) = 1/2 for every admissible control constant.
inline double neck_gamma(double p, double control = 1.0) {
  PYM_REQUIRE(p >= 2.0 && p < 3.0, "neck_gamma: p must lie in [2,3)");
  const double ctrl = 1.0 - control * (p - 2.0) - (p - 2.0) * (p - 2.0);
  PYM_REQUIRE(ctrl > 0.0, "neck_gamma: p too large for the configured control constant");
  const double gamma = 2.0 - neck_mu(p) * ctrl / (p - 1.0);
  PYM_REQUIRE(gamma > 0.0 && gamma < 2.0, "neck_gamma: exponent left (0,2)");
  return gamma;
}

/// Roots of the radial indicial polynomial
///   q(X) = X(2-X) - 2(p-2) X(X+1) - eps
///        = -(1+2(p-2)) X^2 + 2(3-p) X - eps.
/// Closed form delta_pm = (3-p)/(1+2(p-2)) (1 -+ sqrt(1 - eps(1+2(p-2))/(3-p)^2))
/// together with independently bisected roots for cross-validation.
struct IndicialRoots {
  double minus = 0, plus = 0;            // closed-form roots
  double root_minus = 0, root_plus = 0;  // bisection on q
};

namespace detail {
inline double indicial_poly(double p, double eps, double x) {
  return x * (2.0 - x) - 2.0 * (p - 2.0) * x * (x + 1.0) - eps;
}
inline double bisect_indicial(double p, double eps, double lo, double hi, bool ascending) {
  // sign convention: q crosses from negative to positive on an ascending
  // bracket and back down on a descending one
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double qm = detail::indicial_poly(p, eps, mid);
    const bool go_right = ascending ? (qm < 0.0) : (qm >= 0.0);
    if (go_right) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

inline IndicialRoots neck_delta(double eps, double p) {
  PYM_REQUIRE(p >= 2.0 && p < 3.0, "neck_delta: p must lie in [2,3)");
  PYM_REQUIRE(eps >= 0.0, "neck_delta: eps must be >= 0");
  const double a = 1.0 + 2.0 * (p - 2.0);
  const double vertex = (3.0 - p) / a;
  const double disc = 1.0 - eps * a / ((3.0 - p) * (3.0 - p));
  PYM_REQUIRE(disc >= 0.0, "neck_delta: eps too large, the indicial roots are complex");
  IndicialRoots out;
  out.minus = vertex * (1.0 - std::sqrt(disc));
  out.plus = vertex * (1.0 + std::sqrt(disc));
  out.root_minus = detail::bisect_indicial(p, eps, -vertex - 1.0, vertex, true);
  out.root_plus = detail::bisect_indicial(p, eps, vertex, 2.0 * vertex + 1.0, false);
  return out;
}

/// Barrier exponents sigma_pm = (1 + 1/gamma) delta_pm - 2; (-2, 4) at (0, 2).
inline std::pair<double, double> neck_sigma(double eps, double p, double control = 1.0) {
  const double gamma = neck_gamma(p, control);
  const IndicialRoots d = neck_delta(eps, p);
  const double slope = 1.0 + 1.0 / gamma;
  return {slope * d.minus - 2.0, slope * d.plus - 2.0};
}

/// Weight-flattening exponent eps_p = 4 - delta_plus(0,p)/gamma(p) >= 0,
/// vanishing exactly at p = 2.
inline double neck_eps_p(double p, double control = 1.0) {
  const double gamma = neck_gamma(p, control);
  return 4.0 - neck_delta(0.0, p).plus / gamma;
}

/// Everything above, evaluated once.
struct NeckConstants {
  double p = 2, eps = 0, control = 1;
  double mu = 0, gamma = 0, kappa_gamma = 0;
  double delta_minus = 0, delta_plus = 0;
  double sigma_minus = 0, sigma_plus = 0;
  double eps_p = 0;
};

inline NeckConstants neck_constants(double p, double eps, double control = 1.0) {
  NeckConstants c;
  c.p = p;
  c.eps = eps;
  c.control = control;
  c.mu = neck_mu(p);
  c.gamma = neck_gamma(p, control);
  c.kappa_gamma = neck_kappa(p, c.gamma);
  const IndicialRoots d = neck_delta(eps, p);
  c.delta_minus = d.minus;
  c.delta_plus = d.plus;
  const auto s = neck_sigma(eps, p, control);
  c.sigma_minus = s.first;
  c.sigma_plus = s.second;
  c.eps_p = neck_eps_p(p, control);
  return c;
}

// ============================================================
// Interpolation weights
// ============================================================

/// Annulus weight omega_{p,R,r}(rho) = rho^{-2} ((rho/R)^2 + (r/rho)^{2-eps_p})
/// for r <= rho <= R.  At p = 2 this is rho^{-2}((rho/R)^2 + (r/rho)^2) and is
/// bounded by 2/rho^2.
inline double weight_omega(double p, double R, double r, double rho, double control = 1.0) {
  PYM_REQUIRE(r > 0.0 && r < R, "weight_omega: need 0 < r < R");
  PYM_REQUIRE(rho >= r && rho <= R, "weight_omega: evaluated outside the annulus");
  const double e = neck_eps_p(p, control);
  const double s = rho / R;
  return (s * s + std::pow(r / rho, 2.0 - e)) / (rho * rho);
}

inline double weight_omega2(double R, double r, double rho) {
  PYM_REQUIRE(r > 0.0 && r < R, "weight_omega2: need 0 < r < R");
  PYM_REQUIRE(rho >= r && rho <= R, "weight_omega2: evaluated outside the annulus");
  const double s = rho / R, t = r / rho;
  return (s * s + t * t) / (rho * rho);
}

/// Two-scale weight omega_{eta,k} interpolating between the neck radius eta
/// and the concentration scale delta_k (0 < delta_k < eta^2):
///   rho >= eta            : eta^{-2} (1 + (delta_k/eta^2)^2)
///   delta_k/eta <= rho <= eta : rho^{-2} ((rho/eta)^2 + (delta_k/(eta rho))^2)
///   rho <= delta_k/eta    : (eta^2/delta_k^2) ((delta_k/eta^2)^2
///                             + (1 + 1/eta^2)^2 / (1 + rho^2/delta_k^2)^2)
/// Continuous at both seams; converges pointwise to 1/eta^2 as delta_k -> 0.
inline double weight_eta_k(double eta, double delta_k, double rho) {
  PYM_REQUIRE(eta > 0.0, "weight_eta_k: eta must be positive");
  PYM_REQUIRE(delta_k > 0.0 && delta_k < eta * eta, "weight_eta_k: need 0 < delta_k < eta^2");
  PYM_REQUIRE(rho >= 0.0, "weight_eta_k: negative radius");
  const double de2 = delta_k / (eta * eta);
  if (rho >= eta) return (1.0 + de2 * de2) / (eta * eta);
  if (rho >= delta_k / eta) {
    const double s = rho / eta, t = delta_k / (eta * rho);
    return (s * s + t * t) / (rho * rho);
  }
  const double bump = 1.0 + 1.0 / (eta * eta);
  const double den = 1.0 + rho * rho / (delta_k * delta_k);
  return (eta * eta) / (delta_k * delta_k) * (de2 * de2 + bump * bump / (den * den));
}

/// Degenerate-scale limit of weight_eta_k: the constant 1/eta^2.
inline double weight_eta_inf(double eta) {
  PYM_REQUIRE(eta > 0.0, "weight_eta_inf: eta must be positive");
  return 1.0 / (eta * eta);
}

/// Blown-up limit weight on the concentration frame (radius measured in the
/// rescaled coordinate): eta^{-2}(1 + rho^{-2})^2 outside radius 1/eta, frozen
/// at its seam value (1+eta^2)^2/eta^2 inside.
inline double weight_hat_eta_inf(double eta, double rho) {
  PYM_REQUIRE(eta > 0.0, "weight_hat_eta_inf: eta must be positive");
  PYM_REQUIRE(rho >= 0.0, "weight_hat_eta_inf: negative radius");
  if (rho >= 1.0 / eta) {
    const double u = 1.0 + 1.0 / (rho * rho);
    return u * u / (eta * eta);
  }
  const double v = 1.0 + eta * eta;
  return v * v / (eta * eta);
}

// ============================================================
// Radial supersolution check
// ============================================================

/// Normalized residual of the barrier operator on rho^{-sigma}:
///   rho^{sigma+2} (Delta + (p-2) A : grad^2 - eps rho^{-2}) rho^{-sigma}
///     = sigma(2-sigma) - eps + (p-2) sigma (tr A - (sigma+2) <xhat, A xhat>)
/// which is radius-free.  The curvature term ranges over
/// [-2(p-2)sigma(sigma+1), +2(p-2)sigma] for sigma >= 0 because the feasible
/// set {0 <= <xhat,A xhat> <= tr A <= 2} is a triangle and the term is linear.
/// The worst-case lower bound vanishes exactly at sigma = delta_pm(eps, p).
struct SupersolutionReport {
  double sigma = 0;
  double flat_part = 0;               // sigma(2-sigma) - eps
  double lower = 0, upper = 0;        // worst-case bounds on the residual
  bool nonneg_worst_case = false;     // lower >= 0: supersolution for any curvature
  double sampled_min = 0, sampled_max = 0;
  bool sampled_within_bounds = true;
  int nsamples = 0;
};

inline SupersolutionReport supersolution_check(
    double p, double eps, double sigma,
    const std::vector<std::pair<FormValue, Eigen::Vector4d>>& samples = {}) {
  PYM_REQUIRE(p >= 2.0 && p < 3.0, "supersolution_check: p must lie in [2,3)");
  PYM_REQUIRE(eps >= 0.0, "supersolution_check: eps must be >= 0");
  SupersolutionReport rep;
  rep.sigma = sigma;
  rep.flat_part = sigma * (2.0 - sigma) - eps;
  // curvature term at the triangle vertices (trace, radial part):
  // (0,0), (2,0), (2,2)
  const double c = (p - 2.0) * sigma;
  const double v0 = 0.0;
  const double v1 = 2.0 * c;
  const double v2 = -2.0 * c * (sigma + 1.0);
  rep.lower = rep.flat_part + std::min({v0, v1, v2});
  rep.upper = rep.flat_part + std::max({v0, v1, v2});
  rep.nonneg_worst_case = rep.lower >= 0.0;
  rep.nsamples = int(samples.size());
  bool first = true;
  for (const auto& [Fv, x] : samples) {
    PYM_REQUIRE(x.norm() > 0.0, "supersolution_check: zero direction");
    const Eigen::Vector4d xhat = x / x.norm();
    const Eigen::Matrix4d endo = curvature_endo(Fv);
    const double res = rep.flat_part +
                       c * (endo.trace() - (sigma + 2.0) * xhat.dot(endo * xhat));
    rep.sampled_min = first ? res : std::min(rep.sampled_min, res);
    rep.sampled_max = first ? res : std::max(rep.sampled_max, res);
    first = false;
  }
  if (!first) {
    const double slack = 1e-12 * (1.0 + std::abs(rep.lower) + std::abs(rep.upper));
    rep.sampled_within_bounds =
        rep.sampled_min >= rep.lower - slack && rep.sampled_max <= rep.upper + slack;
  }
  return rep;
}

// ============================================================
// Pointwise decay envelope
// ============================================================

/// Fit of the envelope |F| <= fitted * E * omega_{p,R,r} on the annulus,
/// with E the curvature L2 norm over the padded annulus B_{2R} \ B_{r/2}.
struct PointwiseBound {
  double energy = 0;    // E
  double fitted = 0;    // sup |F| / (E omega); 0 when E = 0
  double rho_at_sup = 0;
};

inline PointwiseBound pointwise_bound_check(const LatticeForm& F, double p, double r,
                                            double R, const Eigen::Vector4d& center,
                                            double control = 1.0) {
  PYM_REQUIRE(F.degree == 2, "pointwise_bound_check: F must be a 2-form");
  PYM_REQUIRE(r > 0.0 && R >= 8.0 * r,
              "pointwise_bound_check: annulus too thin, need R >= 8r (four dyadic radii)");
  const Domain& dm = *F.dom;
  const double h4 = std::pow(dm.h, 4);
  double e2 = 0;
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    if (!dm.site_in_domain(s)) continue;
    const double rho = (dm.coord(s) - center).norm();
    if (rho <= 0.5 * r || rho >= 2.0 * R) continue;
    double f2 = 0;
    const double* v = F.at(s);
    for (std::size_t i = 0; i < F.block(); ++i) f2 += v[i] * v[i];
    e2 += h4 * f2;
  }
  PointwiseBound out;
  out.energy = std::sqrt(e2);
  if (out.energy == 0.0) return out;
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    if (!dm.site_in_domain(s)) continue;
    const double rho = (dm.coord(s) - center).norm();
    if (rho < r || rho > R) continue;
    double f2 = 0;
    const double* v = F.at(s);
    for (std::size_t i = 0; i < F.block(); ++i) f2 += v[i] * v[i];
    const double ratio = std::sqrt(f2) / (out.energy * weight_omega(p, R, r, rho, control));
    if (ratio > out.fitted) {
      out.fitted = ratio;
      out.rho_at_sup = rho;
    }
  }
  return out;
}

/// Radial-profile variant: |F|(rho) given as a function, quadrature on a
/// log-uniform grid.
template <class Profile>
inline PointwiseBound pointwise_bound_radial(const Profile& absF, double p, double r,
                                             double R, double control = 1.0,
                                             int bins = 4096) {
  PYM_REQUIRE(r > 0.0 && R >= 8.0 * r,
              "pointwise_bound_radial: annulus too thin, need R >= 8r (four dyadic radii)");
  PYM_REQUIRE(bins >= 16, "pointwise_bound_radial: too few bins");
  constexpr double kSphere3 = 2.0 * 9.869604401089358;  // vol(S^3)
  const double lo = 0.5 * r, hi = 2.0 * R;
  const double step = std::log(hi / lo) / bins;
  double e2 = 0;
  for (int i = 0; i < bins; ++i) {
    const double a = lo * std::exp(step * i), b = lo * std::exp(step * (i + 1));
    const double mid = std::sqrt(a * b), f = absF(mid);
    e2 += f * f * kSphere3 * mid * mid * mid * (b - a);
  }
  PointwiseBound out;
  out.energy = std::sqrt(e2);
  if (out.energy == 0.0) return out;
  const double stepw = std::log(R / r) / bins;
  for (int i = 0; i <= bins; ++i) {
    const double rho = r * std::exp(stepw * i);
    const double rc = std::min(std::max(rho, r), R);
    const double ratio = absF(rc) / (out.energy * weight_omega(p, R, r, rc, control));
    if (ratio > out.fitted) {
      out.fitted = ratio;
      out.rho_at_sup = rc;
    }
  }
  return out;
}

// ============================================================
// Dyadic energy profile
// ============================================================

/// Shellwise curvature L2 norms over [rho_j, min(2 rho_j, R)), rho_j = r 2^j.
struct DyadicProfile {
  std::vector<double> radii;     // inner radius of each shell
  std::vector<double> shell_l2;  // ||F||_{L2(shell)}
  double sup = 0;
};

inline DyadicProfile dyadic_profile(const LatticeForm& F, double r, double R,
                                    const Eigen::Vector4d& center) {
  PYM_REQUIRE(F.degree == 2, "dyadic_profile: F must be a 2-form");
  PYM_REQUIRE(r > 0.0 && 2.0 * r < R, "dyadic_profile: need 0 < 2r < R");
  const Domain& dm = *F.dom;
  const double h4 = std::pow(dm.h, 4);
  DyadicProfile out;
  for (double rho = r; rho < R; rho *= 2.0) out.radii.push_back(rho);
  out.shell_l2.assign(out.radii.size(), 0.0);
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    if (!dm.site_in_domain(s)) continue;
    const double rho = (dm.coord(s) - center).norm();
    if (rho < r || rho >= R) continue;
    const int j = std::min(int(std::floor(std::log2(rho / r))),
                           int(out.radii.size()) - 1);
    double f2 = 0;
    const double* v = F.at(s);
    for (std::size_t i = 0; i < F.block(); ++i) f2 += v[i] * v[i];
    out.shell_l2[std::size_t(j)] += h4 * f2;
  }
  for (double& e : out.shell_l2) {
    e = std::sqrt(e);
    out.sup = std::max(out.sup, e);
  }
  return out;
}

/// Radial-profile variant with per-shell log-midpoint quadrature.
template <class Profile>
inline DyadicProfile dyadic_profile_radial(const Profile& absF, double r, double R,
                                           int bins_per_shell = 256) {
  PYM_REQUIRE(r > 0.0 && 2.0 * r < R, "dyadic_profile_radial: need 0 < 2r < R");
  PYM_REQUIRE(bins_per_shell >= 4, "dyadic_profile_radial: too few bins");
  constexpr double kSphere3 = 2.0 * 9.869604401089358;
  DyadicProfile out;
  for (double rho = r; rho < R; rho *= 2.0) {
    const double outer = std::min(2.0 * rho, R);
    const double step = std::log(outer / rho) / bins_per_shell;
    double e2 = 0;
    for (int i = 0; i < bins_per_shell; ++i) {
      const double a = rho * std::exp(step * i), b = rho * std::exp(step * (i + 1));
      const double mid = std::sqrt(a * b), f = absF(mid);
      e2 += f * f * kSphere3 * mid * mid * mid * (b - a);
    }
    out.radii.push_back(rho);
    out.shell_l2.push_back(std::sqrt(e2));
    out.sup = std::max(out.sup, out.shell_l2.back());
  }
  return out;
}

// ============================================================
// Weighted coercivity diagnostics
// ============================================================

/// Stability integrand against the weighted mass on a neck annulus:
///   lhs = integral rho_p (|d_A a|^2 + |d_A* a|^2 + <F, [a,a]>)
///   rhs = integral |a|^2 omega_{R,r}
/// for perturbations a supported in {r <= |x - center| <= R}.
struct NeckPositivity {
  double lhs = 0, rhs = 0, ratio = 0;
};

inline NeckPositivity neck_positivity_check(const LieAlgebra& g, const LatticeForm& A,
                                            double p, const LatticeForm& a, double r,
                                            double R, const Eigen::Vector4d& center) {
  PYM_REQUIRE(a.degree == 1 && a.cols == g.dim,
              "neck_positivity_check: perturbation must be a g-valued 1-form");
  PYM_REQUIRE(A.dom == a.dom, "neck_positivity_check: domain mismatch");
  PYM_REQUIRE(r > 0.0 && r < R, "neck_positivity_check: need 0 < r < R");
  const Domain& dm = *a.dom;
  const double h4 = std::pow(dm.h, 4);
  double rhs = 0;
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    const double rho = (dm.coord(s) - center).norm();
    double a2 = 0;
    const double* v = a.at(s);
    for (std::size_t i = 0; i < a.block(); ++i) a2 += v[i] * v[i];
    if (rho < r || rho > R) {
      PYM_REQUIRE(a2 == 0.0,
                  "neck_positivity_check: perturbation must vanish outside the annulus");
      continue;
    }
    if (!dm.site_in_domain(s)) continue;
    rhs += h4 * a2 * weight_omega2(R, r, rho);
  }
  PYM_REQUIRE(rhs > 0.0, "neck_positivity_check: perturbation vanishes identically");
  const auto t = detail::q_terms(g, A, a, p);
  NeckPositivity out;
  out.lhs = t.weighted_deriv + t.weighted_costar + t.weighted_bracket;
  out.rhs = rhs;
  out.ratio = out.lhs / out.rhs;
  return out;
}

/// Weighted Poincare-type fit on the annulus, connection-free:
///   integral |a|^2 omega_{R,r} <= fitted (||d a||^2 + ||d* a||^2)
/// for 1-forms supported in the annulus.
struct GaffneyHardy {
  double weighted_l2 = 0;  // integral |a|^2 omega_{R,r}
  double deriv = 0;        // ||d a||^2 + ||d* a||^2
  double fitted = 0;       // ratio
};

inline GaffneyHardy gaffney_hardy_neck(const LatticeForm& a, double r, double R,
                                       const Eigen::Vector4d& center) {
  PYM_REQUIRE(a.degree == 1, "gaffney_hardy_neck: needs a 1-form");
  PYM_REQUIRE(r > 0.0 && r < R, "gaffney_hardy_neck: need 0 < r < R");
  const Domain& dm = *a.dom;
  const double h4 = std::pow(dm.h, 4);
  GaffneyHardy out;
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    const double rho = (dm.coord(s) - center).norm();
    double a2 = 0;
    const double* v = a.at(s);
    for (std::size_t i = 0; i < a.block(); ++i) a2 += v[i] * v[i];
    if (rho < r || rho > R) {
      PYM_REQUIRE(a2 == 0.0,
                  "gaffney_hardy_neck: form must vanish outside the annulus");
      continue;
    }
    out.weighted_l2 += h4 * a2 * weight_omega2(R, r, rho);
  }
  const LatticeForm da = d(a);
  const LatticeForm dsa = d_star(a);
  out.deriv = dot(da, da) + dot(dsa, dsa);
  PYM_REQUIRE(out.deriv > 0.0, "gaffney_hardy_neck: form vanishes identically");
  out.fitted = out.weighted_l2 / out.deriv;
  return out;
}

/// Hardy quotient for compactly supported scalar functions:
///   integral f^2/|x - center|^2  /  ||grad f||^2,
/// at most 1 + O(h) on lattice samples.
struct HardyRatio {
  double weighted = 0;  // integral f^2 / rho^2
  double deriv = 0;     // ||d f||^2
  double ratio = 0;
};

inline HardyRatio hardy_ratio(const LatticeForm& f, const Eigen::Vector4d& center) {
  PYM_REQUIRE(f.degree == 0 && f.cols == 1, "hardy_ratio: needs a scalar 0-form");
  const Domain& dm = *f.dom;
  const double h4 = std::pow(dm.h, 4);
  HardyRatio out;
  for (std::size_t s = 0; s < dm.nsites; ++s) {
    const double r2 = (dm.coord(s) - center).squaredNorm();
    const double v = f.at(s)[0];
    if (v != 0.0) {
      PYM_REQUIRE(r2 > 0.0, "hardy_ratio: support touches the center");
      out.weighted += h4 * v * v / r2;
    }
  }
  const LatticeForm df = d(f);
  out.deriv = dot(df, df);
  PYM_REQUIRE(out.deriv > 0.0, "hardy_ratio: function vanishes identically");
  out.ratio = out.weighted / out.deriv;
  return out;
}

}  // namespace pym
