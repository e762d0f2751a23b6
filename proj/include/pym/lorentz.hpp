/// @file lorentz.hpp
/// Lorentz quasi-norms of sampled scalar data via decreasing rearrangement:
/// exact per-step integration of ||f||_{P,Q} = || t^{1/P} f*(t) ||_{L^Q(dt/t)},
/// the sup-form and averaged weak norms, the L^{2,1}/L^{2,infty} duality
/// pairing, and the annulus quantization diagnostic that compares L^2,
/// weak-L^2 and L^{2,1} curvature norms against the dyadic-shell supremum.

#pragma once

#include <algorithm>
#include <limits>
#include <utility>

#include "pym/lattice.hpp"

namespace pym {

// ============================================================
// Sampled data and rearrangement
// ============================================================
/// Finitely many (value, cell measure) samples of a scalar field.
struct SampledFunction {
  std::vector<double> values;
  std::vector<double> measures;

  void add(double v, double m) {
    PYM_REQUIRE(std::isfinite(v) && m > 0, "SampledFunction: finite value, positive measure");
    values.push_back(v);
    measures.push_back(m);
  }
  double total_measure() const {
    double t = 0;
    for (const double m : measures) t += m;
    return t;
  }
};

/// Pointwise norm of a lattice field restricted to pred, one sample per
/// in-domain site with measure h^4.
template <class PredFn>
SampledFunction sampled_norm(const LatticeForm& f, PredFn&& pred) {
  SampledFunction out;
  const Domain& d = *f.dom;
  const double cell = std::pow(d.h, 4);
  for (std::size_t s = 0; s < d.nsites; ++s) {
    if (!d.site_in_domain(s) || !pred(d.coord(s))) continue;
    const double* p = f.at(s);
    double q = 0;
    for (std::size_t i = 0; i < f.block(); ++i) q += p[i] * p[i];
    out.add(std::sqrt(q), cell);
  }
  return out;
}
inline SampledFunction sampled_norm(const LatticeForm& f) {
  return sampled_norm(f, [](const Eigen::Vector4d&) { return true; });
}

/// Decreasing rearrangement as steps: value[i] on t in [t_hi[i-1], t_hi[i]).
/// Zero values are dropped (they carry no mass in any Lorentz integral);
/// equal values merge into one step.
struct Rearrangement {
  std::vector<double> value;  // strictly decreasing
  std::vector<double> t_hi;   // cumulative measure at the end of each step
  double t_lo(std::size_t i) const { return i == 0 ? 0.0 : t_hi[i - 1]; }
};

inline Rearrangement rearrangement(const SampledFunction& f) {
  PYM_REQUIRE(f.values.size() == f.measures.size(), "rearrangement: ragged samples");
  std::vector<std::pair<double, double>> vm;
  vm.reserve(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double v = std::abs(f.values[i]);
    if (v > 0) vm.emplace_back(v, f.measures[i]);
  }
  std::sort(vm.begin(), vm.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  Rearrangement r;
  double acc = 0;
  for (const auto& [v, m] : vm) {
    acc += m;
    if (!r.value.empty() && r.value.back() == v)
      r.t_hi.back() = acc;
    else {
      r.value.push_back(v);
      r.t_hi.push_back(acc);
    }
  }
  return r;
}

/// Distribution function: measure of { |f| > lam }.
inline double distribution(const Rearrangement& r, double lam) {
  double d = 0;
  for (std::size_t i = 0; i < r.value.size(); ++i)
    if (r.value[i] > lam) d = r.t_hi[i];
  return d;
}

// ============================================================
// Lorentz quasi-norms
// ============================================================
/// || t^{1/P} f*(t) ||_{L^Q(dt/t)} with exact integration over the steps.
/// Q = infinity gives the sup form sup_t t^{1/P} f*(t).
inline double lorentz_norm(const Rearrangement& r, double P, double Q) {
  PYM_REQUIRE(P > 1.0 && std::isfinite(P), "lorentz_norm: P in (1, inf)");
  PYM_REQUIRE(Q > 0.0, "lorentz_norm: Q in (0, inf]");
  if (r.value.empty()) return 0.0;
  if (std::isinf(Q)) {
    double sup = 0;
    for (std::size_t i = 0; i < r.value.size(); ++i)
      sup = std::max(sup, r.value[i] * std::pow(r.t_hi[i], 1.0 / P));
    return sup;
  }
  // sum_i v_i^Q * (P/Q) * (t_i^{Q/P} - t_{i-1}^{Q/P})
  const double e = Q / P;
  double acc = 0;
  for (std::size_t i = 0; i < r.value.size(); ++i)
    acc += std::pow(r.value[i], Q) *
           (std::pow(r.t_hi[i], e) - std::pow(r.t_lo(i), e));
  return std::pow(acc * P / Q, 1.0 / Q);
}
inline double lorentz_norm(const SampledFunction& f, double P, double Q) {
  return lorentz_norm(rearrangement(f), P, Q);
}

/// Averaged weak norm sup_t t^{1/P - 1} int_0^t f*(s) ds; equivalent to the
/// sup form with constants [1, P/(P-1)].
inline double averaged_weak_norm(const Rearrangement& r, double P) {
  PYM_REQUIRE(P > 1.0 && std::isfinite(P), "averaged_weak_norm: P in (1, inf)");
  double sup = 0, integral = 0;
  for (std::size_t i = 0; i < r.value.size(); ++i) {
    // t^{1/P - 1} * int_0^t f* is maximized over the step at its right end:
    // the integrand value v_i there is below the running average.
    integral += r.value[i] * (r.t_hi[i] - r.t_lo(i));
    sup = std::max(sup, integral * std::pow(r.t_hi[i], 1.0 / P - 1.0));
  }
  return sup;
}
inline double averaged_weak_norm(const SampledFunction& f, double P) {
  return averaged_weak_norm(rearrangement(f), P);
}

// ============================================================
// Duality pairing
// ============================================================
struct DualityCheck {
  double pairing = 0;        // |sum f g measure|
  double bound_product = 0;  // ||f||_{2,1} ||g||_{2,infty}
  double ratio = 0;          // pairing / product (0 when product is 0)
};

/// Site-aligned pairing against the L^{2,1} x weak-L^2 product.  The sharp
/// comparison |int f g| <= int f* g* <= ||f||_{2,1} ||g||_{2,infty} makes the
/// ratio at most 1.
inline DualityCheck duality_pairing_check(const SampledFunction& f,
                                          const SampledFunction& g) {
  PYM_REQUIRE(f.values.size() == g.values.size(), "duality_pairing_check: site mismatch");
  DualityCheck out;
  double acc = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    PYM_REQUIRE(f.measures[i] == g.measures[i],
                "duality_pairing_check: measure mismatch");
    acc += f.values[i] * g.values[i] * f.measures[i];
  }
  out.pairing = std::abs(acc);
  out.bound_product = lorentz_norm(f, 2.0, 1.0) *
                      lorentz_norm(g, 2.0, std::numeric_limits<double>::infinity());
  out.ratio = out.bound_product > 0 ? out.pairing / out.bound_product : 0.0;
  return out;
}

// ============================================================
// Annulus quantization diagnostic
// ============================================================
/// Curvature norms over the neck annulus B_R \ B_r around q:  the dyadic
/// supremum sup_rho ||F||_{L^2(B_2rho \ B_rho)} over rho in [r, R/2], the
/// weak-L^2 norm on the full annulus, and the L^2 / L^{2,1} norms on the
/// middle annulus B_{R/2} \ B_{2r}, each as a ratio to the dyadic sup.
/// Bounded ratios under neck lengthening (r -> 0) are the quantization
/// signature: no logarithm accumulates across the dyadic shells.
struct NeckQuantizationReport {
  double dyadic_sup = 0;
  double rho_at_sup = 0;
  double l2w_full = 0;  // L^{2,infty}(B_R \ B_r)
  double l2_mid = 0;    // L^2(B_{R/2} \ B_{2r})
  double l21_mid = 0;   // L^{2,1}(B_{R/2} \ B_{2r})
  double ratio_l2w = 0;
  double ratio_l2 = 0;
  double ratio_l21 = 0;

  void finish() {
    if (dyadic_sup > 0) {
      ratio_l2w = l2w_full / dyadic_sup;
      ratio_l2 = l2_mid / dyadic_sup;
      ratio_l21 = l21_mid / dyadic_sup;
    }
  }
};

namespace detail {
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class SampleFn>
NeckQuantizationReport quantization_from_sampler(double r, double R,
                                                 SampleFn&& annulus_samples) {
  PYM_REQUIRE(r > 0 && R > 4.0 * r, "neck quantization: need 0 < 4r < R");
  NeckQuantizationReport rep;
  for (double rho = r; rho <= 0.5 * R * (1.0 + 1e-12); rho *= 2.0) {
    const double outer = std::min(2.0 * rho, R);
    const SampledFunction shell = annulus_samples(rho, outer);
    double e2 = 0;
    for (std::size_t i = 0; i < shell.values.size(); ++i)
      e2 += shell.values[i] * shell.values[i] * shell.measures[i];
    if (std::sqrt(e2) > rep.dyadic_sup) {
      rep.dyadic_sup = std::sqrt(e2);
      rep.rho_at_sup = rho;
    }
  }
  const SampledFunction full = annulus_samples(r, R);
  rep.l2w_full = lorentz_norm(full, 2.0, kInf);
  const SampledFunction mid = annulus_samples(2.0 * r, 0.5 * R);
  double e2 = 0;
  for (std::size_t i = 0; i < mid.values.size(); ++i)
    e2 += mid.values[i] * mid.values[i] * mid.measures[i];
  rep.l2_mid = std::sqrt(e2);
  rep.l21_mid = lorentz_norm(mid, 2.0, 1.0);
  rep.finish();
  return rep;
}
}  // namespace detail

/// Stored-field version: samples |F| on the lattice cells of the annuli.
inline NeckQuantizationReport neck_quantization_diagnostic(
    const LatticeForm& F, const Eigen::Vector4d& q, double r, double R) {
  return detail::quantization_from_sampler(r, R, [&](double a, double b) {
    return sampled_norm(F, [&](const Eigen::Vector4d& x) {
      const double rr = (x - q).norm();
      return rr >= a && rr < b;
    });
  });
}

/// Radial-profile version for extreme neck ratios: |F|(x) = profile(|x|),
/// integrated on fine radial shells (bins log-uniform per dyadic block), so
/// arbitrarily long necks cost only 1-D work.
template <class ProfileFn>
NeckQuantizationReport neck_quantization_radial(ProfileFn&& profile, double r,
                                                double R, int bins_per_dyad = 256) {
  PYM_REQUIRE(bins_per_dyad >= 8, "neck_quantization_radial: bins");
  constexpr double two_pi2 = 2.0 * 9.869604401089358;
  return detail::quantization_from_sampler(r, R, [&](double a, double b) {
    SampledFunction out;
    const int nb = int(std::ceil(std::log2(b / a) * double(bins_per_dyad)));
    const double step = std::pow(b / a, 1.0 / double(nb));
    double lo = a;
    for (int i = 0; i < nb; ++i) {
      const double hi = std::min(lo * step, b);
      const double mid = 0.5 * (lo + hi);
      const double vol = two_pi2 * 0.25 * (std::pow(hi, 4) - std::pow(lo, 4));
      out.add(profile(mid), vol);
      lo = hi;
    }
    return out;
  });
}

}  // namespace pym
