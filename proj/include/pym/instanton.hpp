/// @file instanton.hpp
/// The standard SU(2) bubble: analytic potentials, closed-form curvature
/// magnitude and ball energies, a smooth cutoff gluing the bubble to the flat
/// connection across an annulus, streaming multiscale quadrature for the
/// energies of concentrating families, bubble-scale detection, and the
/// energy-identity / exponent-schedule bookkeeping for those families.
///
/// Conventions (orthonormal basis T_a with <X,Y> = -tr(XY)):
///   centered potential  A_mu = sqrt(2) eta^a_{mu nu} x_nu / (r^2 + l^2) T_a
///     (smooth at the center; tail ~ sqrt(6)/r is pure-gauge-like)
///   flat asymptote      w_mu = sqrt(2) eta^a_{mu nu} x_nu / r^2 T_a
///     (the l -> 0 limit of the potential; zero curvature away from x = 0)
///   decaying potential  A_mu = sqrt(2) l^2 etabar^a_{mu nu} x_nu
///                                / (r^2 (r^2 + l^2)) T_a
///     (the same connection written in the gauge that kills the tail; related
///      to the centered form by an l-independent transition rotation)
///   curvature           F_{mu nu} = -2 sqrt(2) l^2/(r^2+l^2)^2 eta^a_{mu nu}
///   |F|^2 = 48 l^4/(r^2+l^2)^4,   integral over R^4 = 8 pi^2.
///
/// Gluing: chi * A_centered + (1 - chi) * w.  The difference
/// A_centered - w = -sqrt(2) l^2 eta x / (r^2 (r^2 + l^2)) decays like l^2/r^3,
/// so the annulus picks up only O((l/eta)^4) energy; beyond 2 eta the glued
/// potential is exactly the flat pure-gauge w (zero curvature).  In the
/// rotated gauge the same glued connection reads chi * A_decaying, which is
/// bitwise zero beyond 2 eta and is the numerically stable presentation away
/// from the center; energy quadrature uses whichever presentation keeps the
/// sampled potential small.
///
/// Scaling: A_l(x) = l^{-1} A_1(x/l), and the discrete energy on a lattice
/// with spacing l*h equals the discrete energy of A_1 on spacing h exactly,
/// so concentrating families are evaluated in the rescaled frame xi = x/l.

#pragma once

#include "pym/functional.hpp"

namespace pym {

/// Self-dual ('t Hooft) symbols; index 3 plays the role of the distinguished
/// fourth coordinate.  bar = true flips to the anti-self-dual family.
inline double thooft(int a, int mu, int nu, bool bar = false) {
  PYM_REQUIRE(a >= 0 && a < 3 && mu >= 0 && mu < 4 && nu >= 0 && nu < 4,
              "thooft: index range");
  const double s4 = bar ? -1.0 : 1.0;
  if (mu == 3 && nu == 3) return 0.0;
  if (nu == 3) return s4 * (a == mu ? 1.0 : 0.0);
  if (mu == 3) return -s4 * (a == nu ? 1.0 : 0.0);
  // spatial: epsilon_{a mu nu}; a distinct triple of {0,1,2} is a cyclic
  // permutation exactly when mu = a + 1 (mod 3)
  if (a == mu || a == nu || mu == nu) return 0.0;
  return (mu - a + 3) % 3 == 1 ? 1.0 : -1.0;
}

/// Analytic bubble profile at scale lambda centered at `center`.
struct BubbleProfile {
  double lambda = 1.0;
  Eigen::Vector4d center = Eigen::Vector4d::Zero();

  double f2(double r2) const {
    const double d = r2 + lambda * lambda;
    return 48.0 * std::pow(lambda, 4) / (d * d * d * d);
  }

  // closed-form integral of |F|^2 over the centered ball of radius rho
  double energy_in_ball(double rho) const {
    const double l2 = lambda * lambda;
    auto G = [l2](double u) {
      return -0.5 / ((u + l2) * (u + l2)) + l2 / (3.0 * std::pow(u + l2, 3));
    };
    constexpr double pi2 = 9.869604401089358;
    return 48.0 * l2 * l2 * pi2 * (G(rho * rho) - G(0.0));
  }
  static double total_energy() { return 8.0 * 9.869604401089358; }

  // radius enclosing the given energy fraction (bisection on the closed form)
  double radius_at_fraction(double frac) const {
    PYM_REQUIRE(frac > 0 && frac < 1, "radius_at_fraction: frac in (0,1)");
    const double target = frac * total_energy();
    double lo = 0, hi = lambda;
    while (energy_in_ball(hi) < target) hi *= 2;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (energy_in_ball(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  // potential smooth at the center (tail ~ sqrt(6)/r)
  FormValue potential(const Eigen::Vector4d& xin) const {
    const Eigen::Vector4d x = xin - center;
    const double den = x.squaredNorm() + lambda * lambda;
    FormValue v = zero_value(1, 3);
    for (int mu = 0; mu < 4; ++mu)
      for (int a = 0; a < 3; ++a) {
        double acc = 0;
        for (int nu = 0; nu < 4; ++nu) acc += thooft(a, mu, nu) * x[nu];
        v(mu, a) = std::sqrt(2.0) * acc / den;
      }
    return v;
  }

  // flat pure-gauge asymptote of `potential` (its lambda -> 0 limit); zero
  // curvature away from the center, singular at the center itself
  FormValue flat_asymptote(const Eigen::Vector4d& xin) const {
    const Eigen::Vector4d x = xin - center;
    const double r2 = x.squaredNorm();
    PYM_REQUIRE(r2 > 0, "flat_asymptote: undefined at the center");
    FormValue v = zero_value(1, 3);
    for (int mu = 0; mu < 4; ++mu)
      for (int a = 0; a < 3; ++a) {
        double acc = 0;
        for (int nu = 0; nu < 4; ++nu) acc += thooft(a, mu, nu) * x[nu];
        v(mu, a) = std::sqrt(2.0) * acc / r2;
      }
    return v;
  }

  // same connection in the tail-killing gauge (decays like l^2/r^3)
  FormValue decaying_potential(const Eigen::Vector4d& xin) const {
    const Eigen::Vector4d x = xin - center;
    const double r2 = x.squaredNorm();
    PYM_REQUIRE(r2 > 0, "decaying_potential: undefined at the center");
    const double l2 = lambda * lambda;
    const double den = r2 * (r2 + l2);
    FormValue v = zero_value(1, 3);
    for (int mu = 0; mu < 4; ++mu)
      for (int a = 0; a < 3; ++a) {
        double acc = 0;
        for (int nu = 0; nu < 4; ++nu) acc += thooft(a, mu, nu, true) * x[nu];
        v(mu, a) = std::sqrt(2.0) * l2 * acc / den;
      }
    return v;
  }

  // closed-form curvature of `potential`
  FormValue curvature(const Eigen::Vector4d& xin) const {
    const Eigen::Vector4d x = xin - center;
    const double den = x.squaredNorm() + lambda * lambda;
    const double amp = -2.0 * std::sqrt(2.0) * lambda * lambda / (den * den);
    FormValue v = zero_value(2, 3);
    for (int j = 0; j < 6; ++j) {
      const int mj = forms::mask(2, j);
      int mu = -1, nu = -1;
      for (int b = 0; b < 4; ++b)
        if (mj & (1 << b)) (mu < 0 ? mu : nu) = b;
      for (int a = 0; a < 3; ++a) v(j, a) = amp * thooft(a, mu, nu);
    }
    return v;
  }
};

/// C^2 cutoff: 1 on [0, eta], quintic smoothstep down to 0 at 2 eta.
struct Cutoff {
  double eta = 0.25;
  double chi(double r) const {
    if (r <= eta) return 1.0;
    if (r >= 2.0 * eta) return 0.0;
    const double u = (r - eta) / eta;
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
  }
  double dchi(double r) const {
    if (r <= eta || r >= 2.0 * eta) return 0.0;
    const double u = (r - eta) / eta;
    return -u * u * (30.0 - 60.0 * u + 30.0 * u * u) / eta;
  }
};

/// Glued potential chi * A + (1 - chi) * w: equals the bubble potential for
/// r <= eta, interpolates along the flat asymptote across the annulus, and is
/// the pure-gauge w (zero curvature) beyond 2 eta.  Smooth at the center.
inline FormValue glued_potential(const BubbleProfile& b, const Cutoff& cut,
                                 const Eigen::Vector4d& x) {
  const double r = (x - b.center).norm();
  if (r <= cut.eta) return b.potential(x);
  FormValue v = b.flat_asymptote(x);
  const double c = cut.chi(r);
  if (c > 0) {
    FormValue core = b.potential(x);
    core *= c;
    v *= 1.0 - c;
    v += core;
  }
  return v;
}

/// The same glued connection in the tail-killing gauge: chi * A_decaying,
/// bitwise zero beyond 2 eta.  Numerically preferable away from the center
/// (the sampled potential is O(l^2/r^3) instead of O(1/r)); unusable through
/// the center, where this presentation blows up.
inline FormValue glued_decaying(const BubbleProfile& b, const Cutoff& cut,
                                const Eigen::Vector4d& x) {
  const double r = (x - b.center).norm();
  if (r >= 2.0 * cut.eta) return zero_value(1, 3);
  FormValue v = b.decaying_potential(x);
  v *= cut.chi(r);
  return v;
}

// ============================================================
// Sampled lattice fields
// ============================================================
/// Bubble potential sampled on a stored lattice; requires the lattice to
/// resolve the concentration scale (lambda >= 4 h).
inline LatticeForm sample_bubble(const Domain& d, const BubbleProfile& b) {
  PYM_REQUIRE(b.lambda >= 4.0 * d.h, "sample_bubble: lattice must resolve lambda");
  return sample(d, 1, 3,
                [&](const Eigen::Vector4d& x) { return b.potential(x); });
}

/// Add a glued bubble to a stored background potential.  The inserted bump is
/// the centered presentation inside eta, rides the flat asymptote across the
/// annulus, and contributes zero curvature beyond 2 eta.
inline void add_glued_bubble(LatticeForm& bg, const BubbleProfile& b,
                             const Cutoff& cut) {
  PYM_REQUIRE(bg.degree == 1 && bg.cols == 3, "add_glued_bubble: potential field");
  PYM_REQUIRE(b.lambda >= 4.0 * bg.dom->h,
              "add_glued_bubble: lattice must resolve lambda");
  PYM_REQUIRE(b.lambda <= 0.25 * cut.eta + 1e-12,
              "add_glued_bubble: scale must sit inside the annulus");
  for (std::size_t s = 0; s < bg.dom->nsites; ++s) {
    FormValue v = bg.value(s);
    v += glued_potential(b, cut, bg.dom->coord(s));
    bg.set_value(s, v);
  }
}

/// Glued connection sampled in the tail-killing gauge (for neck-region
/// domains that exclude the bubble center).
inline LatticeForm sample_glued_decaying(const Domain& d, const BubbleProfile& b,
                                         const Cutoff& cut) {
  return sample(d, 1, 3,
                [&](const Eigen::Vector4d& x) { return glued_decaying(b, cut, x); });
}

// ============================================================
// Streaming discrete-curvature quadrature
// ============================================================
/// Visit every cell x_i = (i - half + 1/2) h, i in [0, 2 half)^4, with
/// pred(x) true; compute |F_disc(x)|^2 from five on-the-fly evaluations of
/// the analytic potential (forward differences plus the site bracket) and
/// hand (x, f2) to the reducer.  Arbitrarily large lattices cost no memory.
template <class PotFn, class PredFn, class ReduceFn>
void streaming_reduce(const LieAlgebra& g, PotFn&& pot, double h, long half,
                      PredFn&& pred, ReduceFn&& reduce) {
  PYM_REQUIRE(h > 0 && half >= 1, "streaming_reduce: bad lattice");
  const long n = 2 * half;
  const double invh = 1.0 / h;
  Eigen::Vector4d x;
  std::array<FormValue, 5> av;  // A(x), A(x + h e_mu)
  for (long i3 = 0; i3 < n; ++i3) {
    x[3] = (double(i3) - double(half) + 0.5) * h;
    for (long i2 = 0; i2 < n; ++i2) {
      x[2] = (double(i2) - double(half) + 0.5) * h;
      for (long i1 = 0; i1 < n; ++i1) {
        x[1] = (double(i1) - double(half) + 0.5) * h;
        for (long i0 = 0; i0 < n; ++i0) {
          x[0] = (double(i0) - double(half) + 0.5) * h;
          if (!pred(x)) continue;
          av[0] = pot(x);
          for (int mu = 0; mu < 4; ++mu) {
            Eigen::Vector4d xs = x;
            xs[mu] += h;
            av[std::size_t(mu) + 1] = pot(xs);
          }
          double f2 = 0;
          for (int j = 0; j < 6; ++j) {
            const int mj = forms::mask(2, j);
            int mu = -1, nu = -1;
            for (int b = 0; b < 4; ++b)
              if (mj & (1 << b)) (mu < 0 ? mu : nu) = b;
            // F_{mu nu} = D+_mu A_nu - D+_nu A_mu + [A_mu, A_nu]
            Eigen::Vector3d fj =
                (av[std::size_t(mu) + 1].row(nu) - av[0].row(nu)) * invh -
                (av[std::size_t(nu) + 1].row(mu) - av[0].row(mu)) * invh;
            double br[3] = {0, 0, 0};
            Eigen::Vector3d amu = av[0].row(mu), anu = av[0].row(nu);
            g.bracket_acc(amu.data(), anu.data(), br);
            for (int a = 0; a < 3; ++a) {
              const double c = fj[a] + br[a];
              f2 += c * c;
            }
          }
          reduce(x, f2);
        }
      }
    }
  }
}

/// Radial energy binning (for bubble-scale detection).
struct RadialHistogram {
  double r_max = 0;
  std::vector<double> energy;  // uniform bins on [0, r_max]
  void init(int bins, double rmax) {
    r_max = rmax;
    energy.assign(std::size_t(bins), 0.0);
  }
  void add(double r, double e) {
    if (energy.empty() || r >= r_max) return;
    energy[std::size_t(r / r_max * double(energy.size()))] += e;
  }
  double total() const {
    double t = 0;
    for (const double e : energy) t += e;
    return t;
  }
  // smallest radius whose enclosed energy reaches `target` (linear
  // interpolation inside the crossing bin); numerical_error if never reached
  double radius_enclosing(double target) const {
    PYM_REQUIRE(target > 0, "radius_enclosing: positive target");
    double acc = 0;
    for (std::size_t i = 0; i < energy.size(); ++i) {
      if (acc + energy[i] >= target) {
        const double part = (target - acc) / (energy[i] > 0 ? energy[i] : 1.0);
        return r_max * (double(i) + part) / double(energy.size());
      }
      acc += energy[i];
    }
    throw numerical_error("radius_enclosing: no bubble at this threshold");
  }
  // radius below which the given fraction of the recorded energy sits
  double radius_at_fraction(double frac) const {
    const double t = total();
    PYM_REQUIRE(t > 0, "radius_at_fraction: empty histogram");
    return radius_enclosing(frac * t);
  }
};

/// Sum kernel(|F_disc|^2) h^4 over pred(x), optionally binning cell energies
/// by |x| into `hist`.
template <class PotFn, class PredFn, class KernelFn>
double streaming_energy(const LieAlgebra& g, PotFn&& pot, double h, long half,
                        PredFn&& pred, KernelFn&& kernel,
                        RadialHistogram* hist = nullptr) {
  double acc = 0;
  const double cellvol = h * h * h * h;
  streaming_reduce(g, pot, h, half, pred, [&](const Eigen::Vector4d& x, double f2) {
    const double cell = kernel(f2) * cellvol;
    acc += cell;
    if (hist) hist->add(x.norm(), cell);
  });
  return acc;
}

// ============================================================
// Bubble-scale detection
// ============================================================
/// Smallest radius around the histogram center enclosing curvature energy
/// eps0 / 2.  Monotone nondecreasing in eps0; throws numerical_error
/// ("no bubble") if the recorded energy never reaches the threshold.
inline double detect_bubble_scale(const RadialHistogram& hist, double eps0) {
  PYM_REQUIRE(eps0 > 0, "detect_bubble_scale: positive threshold");
  if (!(hist.total() >= 0.5 * eps0))
    throw numerical_error("detect_bubble_scale: no bubble at this threshold");
  return hist.radius_enclosing(0.5 * eps0);
}

/// Same detector on a stored curvature field: bin |F|^2 h^4 by distance from
/// q, then locate the eps0 / 2 crossing.
inline double detect_bubble_scale(const LatticeForm& F, const Eigen::Vector4d& q,
                                  double eps0) {
  PYM_REQUIRE(F.degree == 2, "detect_bubble_scale: curvature field");
  const Domain& d = *F.dom;
  const double cellvol = std::pow(d.h, 4);
  double rmax = 0;
  for (std::size_t s = 0; s < d.nsites; ++s)
    if (d.site_in_domain(s)) rmax = std::max(rmax, (d.coord(s) - q).norm());
  RadialHistogram hist;
  hist.init(1024, rmax * (1.0 + 1e-9) + 1e-300);
  for (std::size_t s = 0; s < d.nsites; ++s) {
    if (!d.site_in_domain(s)) continue;
    const double* p = F.at(s);
    double f2 = 0;
    for (std::size_t i = 0; i < F.block(); ++i) f2 += p[i] * p[i];
    hist.add((d.coord(s) - q).norm(), f2 * cellvol);
  }
  return detect_bubble_scale(hist, eps0);
}

// ============================================================
// Multiscale glued-bubble energies
// ============================================================
/// Quadrature layout for a concentrating bubble at scale lambda glued to the
/// flat connection at cut.eta: a rescaled-frame core ball |xi| < S where
/// chi = 1 (centered presentation, spacing core_h), then dyadic rescaled
/// shells out to the glue boundary in the tail-killing gauge (m cells per
/// shell inner radius).  Everything is evaluated in the xi = x/lambda frame,
/// where the discrete energy is exactly scale-invariant.
struct GluedEnergyParams {
  double eta = 0.25;     // cutoff radius (flat beyond 2 eta)
  double core_S = 4.0;   // core half-extent in rescaled units
  double core_h = 0.25;  // rescaled core spacing
  int shell_m = 16;      // cells per shell inner radius
  double eps0 = 4.0 * 9.869604401089358;  // detection threshold (half the
                                          // bubble energy)
};

struct GluedEnergyBreakdown {
  double core = 0;
  std::vector<double> shells;
  double total = 0;
};

namespace detail {
// p-excess kernel in the rescaled frame:  integral over x of
// ((1+|F|^2)^{p/2} - 1) equals integral over xi of
// lambda^4 ((1 + lambda^-4 f2hat)^{p/2} - 1).  p = 2 reduces to f2hat.
inline double rescaled_excess(double f2hat, double lambda, double p) {
  if (p == 2.0) return f2hat;
  const double l4 = std::pow(lambda, 4);
  return l4 * (std::pow(1.0 + f2hat / l4, 0.5 * p) - 1.0);
}
}  // namespace detail

/// Energy of the glued bubble at scale lambda:  integral of
/// (1+|F|^2)^{p/2} - 1  (p = 2 gives the squared curvature norm).  The core
/// is the centered presentation (chi = 1 there); the shells evaluate the
/// same connection in the tail-killing gauge, where the sampled potential is
/// small enough that the lattice error stays below the glue defect.
inline GluedEnergyBreakdown glued_bubble_energy(const LieAlgebra& g, double lambda,
                                                double p, const GluedEnergyParams& par,
                                                RadialHistogram* core_hist = nullptr) {
  PYM_REQUIRE(lambda > 0 && lambda * par.core_S <= par.eta + 1e-12,
              "glued_bubble_energy: core must sit inside the chi = 1 region");
  GluedEnergyBreakdown out;
  const BubbleProfile unit{1.0, Eigen::Vector4d::Zero()};
  const Cutoff cut{par.eta};

  // core: rescaled centered presentation on |xi| < S
  const double S = par.core_S;
  auto core_pot = [&](const Eigen::Vector4d& xi) { return unit.potential(xi); };
  const long core_half = long(std::ceil(S / par.core_h)) + 2;
  out.core = streaming_energy(
      g, core_pot, par.core_h, core_half,
      [S](const Eigen::Vector4d& xi) { return xi.norm() < S; },
      [&](double f2) { return detail::rescaled_excess(f2, lambda, p); }, core_hist);
  out.total = out.core;

  // dyadic shells S <= |xi| < 2 eta / lambda in the tail-killing gauge, with
  // the cutoff applied in physical radius r = lambda |xi|
  auto shell_pot = [&](const Eigen::Vector4d& xi) {
    FormValue v = unit.decaying_potential(xi);
    v *= cut.chi(lambda * xi.norm());
    return v;
  };
  double inner = S;
  const double outermost = 2.0 * par.eta / lambda;
  while (inner < outermost * (1.0 - 1e-12)) {
    const double outer = std::min(2.0 * inner, outermost);
    const double h = inner / double(par.shell_m);
    const long half = long(std::ceil(outer / h)) + 2;
    const double e = streaming_energy(
        g, shell_pot, h, half,
        [inner, outer](const Eigen::Vector4d& xi) {
          const double r = xi.norm();
          return r >= inner && r < outer;
        },
        [&](double f2) { return detail::rescaled_excess(f2, lambda, p); });
    out.shells.push_back(e);
    out.total += e;
    inner = outer;
  }
  return out;
}

/// Same energy with the core pair (h, h/2) extrapolated: the core error is
/// cleanly O(h^2) (the O(h) term cancels by parity on the symmetric cell
/// centers), so (4 E(h/2) - E(h)) / 3 removes it.
inline GluedEnergyBreakdown glued_bubble_energy_extrapolated(
    const LieAlgebra& g, double lambda, double p, const GluedEnergyParams& par,
    RadialHistogram* core_hist = nullptr) {
  GluedEnergyBreakdown coarse = glued_bubble_energy(g, lambda, p, par, core_hist);
  GluedEnergyParams fine = par;
  fine.core_h = 0.5 * par.core_h;
  const BubbleProfile unit{1.0, Eigen::Vector4d::Zero()};
  const double S = par.core_S;
  auto core_pot = [&](const Eigen::Vector4d& xi) { return unit.potential(xi); };
  const long half = long(std::ceil(S / fine.core_h)) + 2;
  const double core_fine = streaming_energy(
      g, core_pot, fine.core_h, half,
      [S](const Eigen::Vector4d& xi) { return xi.norm() < S; },
      [&](double f2) { return detail::rescaled_excess(f2, lambda, p); });
  GluedEnergyBreakdown out = coarse;
  out.core = (4.0 * core_fine - coarse.core) / 3.0;
  out.total = out.core;
  for (const double e : out.shells) out.total += e;
  return out;
}

// ============================================================
// Concentrating-family experiments
// ============================================================
/// One member of a concentrating family: nb identical bubbles at scale
/// lambda_k glued to the flat background at separated centers.  Disjoint
/// glue supports make the region quadratures exactly additive, so the total
/// is the background energy plus the per-bubble contributions.
struct FamilyMember {
  int k = 0;
  double lambda = 0;
  double p = 2;
  double background_energy = 0;
  std::vector<double> bubble_parts;
  double total = 0;
  double defect = 0;          // |total - background - nb * 8 pi^2|
  double scale_detected = 0;  // eps0/2-crossing radius, mapped to a scale
};

struct FamilyResult {
  std::vector<FamilyMember> members;
  bool defects_strictly_decreasing = true;
  double final_defect_rel = 0;  // vs 8 pi^2
  bool scales_within_factor_two = true;
};

namespace detail {
inline void family_epilogue(FamilyResult& r) {
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    auto& m = r.members[i];
    const double parts = m.background_energy +
        double(m.bubble_parts.size()) * BubbleProfile::total_energy();
    m.defect = std::abs(m.total - parts);
    if (i > 0 && !(m.defect < r.members[i - 1].defect))
      r.defects_strictly_decreasing = false;
    if (!m.bubble_parts.empty() &&
        !(m.scale_detected > 0.5 * m.lambda && m.scale_detected < 2.0 * m.lambda))
      r.scales_within_factor_two = false;
  }
  if (!r.members.empty()) {
    r.final_defect_rel = r.members.back().defect / BubbleProfile::total_energy();
    if (r.members.back().bubble_parts.size() > 1)
      r.final_defect_rel /= double(r.members.back().bubble_parts.size());
  }
}
}  // namespace detail

/// Fixed exponent p = 2: totals of the concentrating family lambda_k = 2^-k
/// against background-plus-bubbles, with the defect per member.  nb = 0 is
/// the no-concentration family (flat background only, defect identically
/// zero); nb = 2 models two bubbles at separated centers, whose parts add
/// exactly because the glue supports are disjoint.
inline FamilyResult energy_identity_check(const LieAlgebra& g, int kmin, int kmax,
                                          const GluedEnergyParams& par, int nb = 1) {
  PYM_REQUIRE(nb >= 0, "energy_identity_check: bubble count");
  FamilyResult r;
  double core_cache = -1;  // p = 2 core is lambda-independent in the xi frame
  std::vector<double> shell_ref;
  RadialHistogram hist;
  for (int k = kmin; k <= kmax; ++k) {
    const double lambda = std::pow(2.0, -k);
    FamilyMember m;
    m.k = k;
    m.lambda = lambda;
    m.p = 2.0;
    m.background_energy = 0;  // flat background
    for (int b = 0; b < nb; ++b) {
      GluedEnergyBreakdown bd;
      if (core_cache < 0) {
        hist.init(2048, par.core_S);
        bd = glued_bubble_energy(g, lambda, 2.0, par, &hist);
        core_cache = bd.core;
      } else {
        bd = glued_bubble_energy(g, lambda, 2.0, par, nullptr);
        bd.core = core_cache;  // identical by exact scale invariance
        bd.total = bd.core;
        for (const double e : bd.shells) bd.total += e;
      }
      m.bubble_parts.push_back(bd.total);
    }
    m.total = m.background_energy;
    for (const double e : m.bubble_parts) m.total += e;
    if (nb > 0)
      m.scale_detected = lambda * detect_bubble_scale(hist, par.eps0);
    r.members.push_back(m);
  }
  detail::family_epilogue(r);
  return r;
}

// ============================================================
// Exponent-schedule bookkeeping
// ============================================================
/// Concentration scale / exponent pairing delta_k = 2^-k eta^2,
/// p_k = 2 + 1/log(1/delta_k)^q.  q = 1 balances the product
/// (p_k - 2) log(1/delta_k) at exactly 1; q = 1/2 makes it grow like
/// sqrt(log) and must be flagged.
struct ScheduleRow {
  int k = 0;
  double delta = 0;           // prescribed scale
  double p = 2;               // exponent
  double delta_detected = 0;  // eps0/2-crossing scale of the member
  double product_prescribed = 0;  // (p - 2) log(1/delta)
  double product_detected = 0;    // (p - 2) log(1/delta_detected)
  double holder_lhs = 0;  // int_B |F|^2 over the detected ball
  double holder_rhs = 0;  // (int_B |F|^p)^{2/p} vol(B)^{(p-2)/p}
};

struct ScheduleReport {
  std::vector<ScheduleRow> rows;
  double bound = 0;  // admissibility bound on the product
  bool products_bounded = true;
  bool holder_all_ok = true;
};

/// Product bound and interpolation sanity for a concentration schedule.  The
/// detected scale comes from the eps0/2 energy radius of the member (in the
/// rescaled frame the crossing radius is scale-free, so detected / prescribed
/// is a constant ratio).  The interpolation check verifies, cell by summed
/// cell, int_B |F|^2 <= (int_B |F|^p)^{2/p} vol(B)^{(p-2)/p} on the detected
/// ball with the discrete measure.
inline ScheduleReport p_schedule_check(const LieAlgebra& g, int kmin, int kmax,
                                       double bound, const GluedEnergyParams& par,
                                       double q = 1.0) {
  PYM_REQUIRE(kmin >= 1 && kmax >= kmin, "p_schedule_check: k range");
  PYM_REQUIRE(par.eta * par.eta * std::pow(2.0, -kmin) < 1.0,
              "p_schedule_check: need delta < 1");
  ScheduleReport rep;
  rep.bound = bound;
  const BubbleProfile unit{1.0, Eigen::Vector4d::Zero()};

  // one rescaled-frame histogram serves every member (exact scale invariance)
  RadialHistogram hist;
  hist.init(2048, par.core_S);
  const double S = par.core_S;
  auto pot = [&](const Eigen::Vector4d& xi) { return unit.potential(xi); };
  const long half = long(std::ceil(S / par.core_h)) + 2;
  streaming_energy(
      g, pot, par.core_h, half,
      [S](const Eigen::Vector4d& xi) { return xi.norm() < S; },
      [](double f2) { return f2; }, &hist);
  const double rho_star = detect_bubble_scale(hist, par.eps0);

  for (int k = kmin; k <= kmax; ++k) {
    ScheduleRow row;
    row.k = k;
    row.delta = std::pow(2.0, -k) * par.eta * par.eta;
    const double lg = std::log(1.0 / row.delta);
    row.p = 2.0 + 1.0 / std::pow(lg, q);
    row.delta_detected = row.delta * rho_star;
    row.product_prescribed = (row.p - 2.0) * lg;
    row.product_detected = (row.p - 2.0) * std::log(1.0 / row.delta_detected);
    if (!(row.product_detected <= bound) || !(row.product_prescribed <= bound))
      rep.products_bounded = false;

    // interpolation instance on the detected ball, rescaled frame (the
    // lambda powers cancel between the two sides)
    double i2 = 0, ip = 0, vol = 0;
    const double cellvol = std::pow(par.core_h, 4);
    const long bhalf = long(std::ceil(rho_star / par.core_h)) + 2;
    streaming_reduce(g, pot, par.core_h, bhalf,
                     [rho_star](const Eigen::Vector4d& xi) {
                       return xi.norm() < rho_star;
                     },
                     [&](const Eigen::Vector4d&, double f2) {
                       i2 += f2 * cellvol;
                       ip += std::pow(f2, 0.5 * row.p) * cellvol;
                       vol += cellvol;
                     });
    row.holder_lhs = i2;
    row.holder_rhs = std::pow(ip, 2.0 / row.p) *
                     std::pow(vol, (row.p - 2.0) / row.p);
    if (!(row.holder_lhs <= row.holder_rhs * (1.0 + 1e-12)))
      rep.holder_all_ok = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace pym
