/// @file test_instanton.cpp
/// Bubble potentials against closed forms, 't Hooft symbol structure,
/// streaming quadrature against stored-lattice operators, concentrating
/// families, scale detection, and the exponent-schedule bookkeeping.

#include <catch2/catch_amalgamated.hpp>

#include "pym/calculus.hpp"
#include "pym/instanton.hpp"

using namespace pym;

namespace {

constexpr double kBubbleEnergy = 78.95683520871486;  // 8 pi^2

// permutation sign of (i,j,k,l) as indices 0..3; 0 on repeats
double eps4(int i, int j, int k, int l) {
  const int v[4] = {i, j, k, l};
  double sign = 1.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      if (v[a] == v[b]) return 0.0;
      if (v[a] > v[b]) sign = -sign;
    }
  return sign;
}

// forward-difference curvature of an analytic potential at one point
template <class PotFn>
FormValue discrete_curvature_at(const LieAlgebra& g, PotFn&& pot,
                                const Eigen::Vector4d& x, double h) {
  std::array<FormValue, 5> av;
  av[0] = pot(x);
  for (int mu = 0; mu < 4; ++mu) {
    Eigen::Vector4d xs = x;
    xs[mu] += h;
    av[std::size_t(mu) + 1] = pot(xs);
  }
  FormValue f = zero_value(2, 3);
  for (int j = 0; j < 6; ++j) {
    const int mj = forms::mask(2, j);
    int mu = -1, nu = -1;
    for (int b = 0; b < 4; ++b)
      if (mj & (1 << b)) (mu < 0 ? mu : nu) = b;
    Eigen::Vector3d fj =
        (av[std::size_t(mu) + 1].row(nu) - av[0].row(nu)) / h -
        (av[std::size_t(nu) + 1].row(mu) - av[0].row(mu)) / h;
    double br[3] = {0, 0, 0};
    Eigen::Vector3d amu = av[0].row(mu), anu = av[0].row(nu);
    g.bracket_acc(amu.data(), anu.data(), br);
    for (int a = 0; a < 3; ++a) f(j, a) = fj[a] + br[a];
  }
  return f;
}

Eigen::Vector4d random_point(Rng& rng, double rlo, double rhi) {
  Eigen::Vector4d x;
  for (;;) {
    for (int a = 0; a < 4; ++a) x[a] = rng.uniform(-rhi, rhi);
    const double r = x.norm();
    if (r >= rlo && r <= rhi) return x;
  }
}

}  // namespace

TEST_CASE("thooft symbols: antisymmetry, duality, explicit table") {
  // independent reconstruction: eta^a_{mu nu} = eps_{a mu nu} (spatial)
  //   + delta_{a mu} delta_{nu 3} - delta_{a nu} delta_{mu 3}, bar flips the
  // sign of the distinguished-coordinate terms
  for (int bar = 0; bar <= 1; ++bar)
    for (int a = 0; a < 3; ++a)
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
          double want = 0;
          if (mu < 3 && nu < 3)
            want = eps4(a, mu, nu, 3);
          else if (nu == 3 && mu < 3)
            want = (bar ? -1.0 : 1.0) * (a == mu ? 1.0 : 0.0);
          else if (mu == 3 && nu < 3)
            want = (bar ? -1.0 : 1.0) * -(a == nu ? 1.0 : 0.0);
          CHECK(thooft(a, mu, nu, bar != 0) == want);
          CHECK(thooft(a, mu, nu, bar != 0) == -thooft(a, nu, mu, bar != 0));
        }

  // self-duality: eta = +(1/2) eps eta, etabar = -(1/2) eps etabar
  for (int bar = 0; bar <= 1; ++bar)
    for (int a = 0; a < 3; ++a)
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
          double dual = 0;
          for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s)
              dual += 0.5 * eps4(mu, nu, r, s) * thooft(a, r, s, bar != 0);
          CHECK(dual == (bar ? -1.0 : 1.0) * thooft(a, mu, nu, bar != 0));
        }

  CHECK_THROWS_AS(thooft(3, 0, 1), precondition_error);
}

TEST_CASE("ball energy closed form matches radial quadrature") {
  const BubbleProfile b{0.7, Eigen::Vector4d::Zero()};
  // independent 1-D Simpson quadrature of |F|^2 * 2 pi^2 r^3
  auto quad = [&](double rho) {
    const int n = 4000;
    const double dr = rho / n;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      auto f = [&](double r) {
        constexpr double two_pi2 = 2.0 * 9.869604401089358;
        return b.f2(r * r) * two_pi2 * r * r * r;
      };
      const double r0 = i * dr, r1 = r0 + dr;
      acc += dr / 6.0 * (f(r0) + 4.0 * f(0.5 * (r0 + r1)) + f(r1));
    }
    return acc;
  };
  for (const double rho : {0.3, 0.7, 1.5, 4.0}) {
    const double closed = b.energy_in_ball(rho);
    CHECK(closed == Catch::Approx(quad(rho)).epsilon(1e-9));
  }
  // monotone in the radius, saturating at the full bubble energy
  double prev = 0;
  for (double rho = 0.5; rho < 40.0; rho *= 2) {
    const double e = b.energy_in_ball(rho);
    CHECK(e > prev);
    CHECK(e < BubbleProfile::total_energy());
    prev = e;
  }
  CHECK(b.energy_in_ball(200.0) ==
        Catch::Approx(BubbleProfile::total_energy()).epsilon(1e-6));
  CHECK(BubbleProfile::total_energy() == Catch::Approx(kBubbleEnergy).epsilon(1e-14));

  // radius_at_fraction inverts the closed form
  for (const double frac : {0.1, 0.25, 0.5, 0.9}) {
    const double r = b.radius_at_fraction(frac);
    CHECK(b.energy_in_ball(r) ==
          Catch::Approx(frac * BubbleProfile::total_energy()).epsilon(1e-10));
  }
}

TEST_CASE("potential presentations: curvature magnitude and asymptote") {
  const LieAlgebra& g = LieAlgebra::su2();
  const BubbleProfile b{0.8, Eigen::Vector4d(0.1, -0.2, 0.05, 0.0)};
  Rng rng(61001);

  // closed-form curvature has |F|^2 = f2 and is self-dual component-wise
  for (int t = 0; t < 20; ++t) {
    const Eigen::Vector4d x = b.center + random_point(rng, 0.05, 2.0);
    const FormValue f = b.curvature(x);
    double f2 = 0;
    for (int j = 0; j < 6; ++j)
      for (int a = 0; a < 3; ++a) f2 += f(j, a) * f(j, a);
    CHECK(f2 == Catch::Approx(b.f2((x - b.center).squaredNorm())).epsilon(1e-12));
  }

  // discrete curvature of the centered presentation converges to the closed
  // form (forward stencil: first order)
  double sup_h = 0, sup_h2 = 0;
  for (int t = 0; t < 30; ++t) {
    const Eigen::Vector4d x = b.center + random_point(rng, 0.2, 1.5);
    auto pot = [&](const Eigen::Vector4d& y) { return b.potential(y); };
    const FormValue exact = b.curvature(x);
    const double e1 = (discrete_curvature_at(g, pot, x, 0.05) - exact).norm();
    const double e2 = (discrete_curvature_at(g, pot, x, 0.025) - exact).norm();
    sup_h = std::max(sup_h, e1);
    sup_h2 = std::max(sup_h2, e2);
  }
  CHECK(sup_h2 < sup_h);
  const double slope = std::log2(sup_h / sup_h2);
  CHECK(slope > 0.7);
  CHECK(slope < 2.5);

  // the decaying presentation carries the same curvature magnitude (gauge
  // rotation): discrete |F|^2 of both presentations converge to each other.
  // The centered presentation rides the O(1/r) tail, so its pointwise error
  // is O(h |w|^2); halving h must roughly halve the gap.
  const BubbleProfile c{0.1, Eigen::Vector4d::Zero()};
  const Cutoff cut{0.4};
  double gap_c = 0, gap_f = 0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Vector4d x = random_point(rng, 0.3, 0.6);
    auto pa = [&](const Eigen::Vector4d& y) { return glued_potential(c, cut, y); };
    auto pb = [&](const Eigen::Vector4d& y) { return glued_decaying(c, cut, y); };
    const double fa = discrete_curvature_at(g, pa, x, 0.002).squaredNorm();
    const double fb = discrete_curvature_at(g, pb, x, 0.002).squaredNorm();
    CHECK(fa == Catch::Approx(fb).margin(1e-9).epsilon(0.10));
    gap_c += std::abs(discrete_curvature_at(g, pa, x, 0.008).squaredNorm() -
                      discrete_curvature_at(g, pb, x, 0.008).squaredNorm());
    gap_f += std::abs(discrete_curvature_at(g, pa, x, 0.004).squaredNorm() -
                      discrete_curvature_at(g, pb, x, 0.004).squaredNorm());
  }
  CHECK(gap_f < 0.75 * gap_c);

  // flat asymptote: zero curvature away from the center, and the scaled
  // potential approaches it as lambda -> 0
  for (int t = 0; t < 10; ++t) {
    const Eigen::Vector4d x = random_point(rng, 0.5, 1.5);
    auto flat = [&](const Eigen::Vector4d& y) {
      return BubbleProfile{1.0, Eigen::Vector4d::Zero()}.flat_asymptote(y);
    };
    const double r3 = std::pow(x.norm(), 3);
    CHECK(discrete_curvature_at(g, flat, x, 0.01).norm() < 6.0 * 0.01 / r3);
    const FormValue small =
        BubbleProfile{1e-4, Eigen::Vector4d::Zero()}.potential(x);
    const FormValue lim = flat(x);
    CHECK((small - lim).norm() < 1e-6 * (1.0 + lim.norm()));
  }
}

TEST_CASE("cutoff: plateau, support, derivative consistency") {
  const Cutoff cut{0.3};
  CHECK(cut.chi(0.0) == 1.0);
  CHECK(cut.chi(0.3) == 1.0);
  CHECK(cut.chi(0.6) == 0.0);
  CHECK(cut.chi(0.9) == 0.0);
  double prev = 1.0;
  for (double r = 0.3; r <= 0.6; r += 0.01) {
    const double c = cut.chi(r);
    CHECK(c <= prev + 1e-12);
    prev = c;
  }
  // dchi matches a centered difference and vanishes at the seams
  for (double r = 0.32; r < 0.58; r += 0.03) {
    const double fd = (cut.chi(r + 1e-6) - cut.chi(r - 1e-6)) / 2e-6;
    CHECK(cut.dchi(r) == Catch::Approx(fd).margin(1e-5));
  }
  CHECK(cut.dchi(0.3) == 0.0);
  CHECK(cut.dchi(0.6) == 0.0);
}

TEST_CASE("glued potential: core bitwise, exterior pure gauge / zero") {
  const BubbleProfile b{0.05, Eigen::Vector4d(0.2, 0.0, -0.1, 0.0)};
  const Cutoff cut{0.25};
  Rng rng(61002);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector4d x = b.center + random_point(rng, 0.01, 0.8);
    const double r = (x - b.center).norm();
    const FormValue gl = glued_potential(b, cut, x);
    const FormValue gd = glued_decaying(b, cut, x);
    if (r <= cut.eta) {
      CHECK((gl - b.potential(x)).norm() == 0.0);  // untouched inside
      CHECK((gd - b.decaying_potential(x)).norm() == 0.0);
    }
    if (r >= 2.0 * cut.eta) {
      CHECK((gl - b.flat_asymptote(x)).norm() == 0.0);  // flat presentation
      CHECK(gd.norm() == 0.0);                          // bitwise zero
    }
  }
}

TEST_CASE("streaming quadrature equals stored-lattice curvature energy") {
  const LieAlgebra& g = LieAlgebra::su2();
  const Domain d = Domain::ball(1.0, 0.125);
  const BubbleProfile b{0.6, Eigen::Vector4d::Zero()};
  const LatticeForm A = sample_bubble(d, b);
  const LatticeForm F = curvature(g, A);
  // restrict to sites whose forward neighbors stay on the stored box
  const double lim = (double(d.n[0]) / 2.0 - 1.5) * d.h;
  auto pred = [lim](const Eigen::Vector4d& x) {
    return x.cwiseAbs().maxCoeff() < lim;
  };
  double stored = 0;
  for (std::size_t s = 0; s < d.nsites; ++s) {
    if (!pred(d.coord(s))) continue;
    const double* p = F.at(s);
    double f2 = 0;
    for (std::size_t i = 0; i < F.block(); ++i) f2 += p[i] * p[i];
    stored += f2;
  }
  stored *= std::pow(d.h, 4);
  const double streamed = streaming_energy(
      g, [&](const Eigen::Vector4d& x) { return b.potential(x); }, d.h,
      d.n[0] / 2, pred, [](double f2) { return f2; });
  CHECK(streamed == Catch::Approx(stored).epsilon(1e-12));
}

TEST_CASE("discrete bubble energy: accuracy and refinement gain") {
  const LieAlgebra& g = LieAlgebra::su2();
  const BubbleProfile unit{1.0, Eigen::Vector4d::Zero()};
  auto pot = [&](const Eigen::Vector4d& x) { return unit.potential(x); };
  auto ball_energy = [&](double R, double h) {
    const long half = long(std::ceil(R / h)) + 2;
    return streaming_energy(
        g, pot, h, half,
        [R](const Eigen::Vector4d& x) { return x.norm() < R; },
        [](double f2) { return f2; });
  };

  // full-energy check at five cells per scale
  const double e6 = ball_energy(6.0, 0.2);
  CHECK(std::abs(e6 - kBubbleEnergy) / kBubbleEnergy < 0.02);

  // refinement halving improves the closed-form ball error by >= 1.8x
  const double target = unit.energy_in_ball(4.5);
  const double err_c = std::abs(ball_energy(4.5, 1.0 / 3.0) - target);
  const double err_f = std::abs(ball_energy(4.5, 1.0 / 6.0) - target);
  CHECK(err_f < err_c);
  CHECK(err_c / err_f > 1.8);
}

TEST_CASE("discrete energy is exactly scale invariant") {
  const LieAlgebra& g = LieAlgebra::su2();
  const BubbleProfile unit{1.0, Eigen::Vector4d::Zero()};
  const BubbleProfile small{0.5, Eigen::Vector4d::Zero()};
  const long half = 14;
  const double e_unit = streaming_energy(
      g, [&](const Eigen::Vector4d& x) { return unit.potential(x); }, 0.25, half,
      [](const Eigen::Vector4d& x) { return x.norm() < 3.0; },
      [](double f2) { return f2; });
  const double e_small = streaming_energy(
      g, [&](const Eigen::Vector4d& x) { return small.potential(x); }, 0.125, half,
      [](const Eigen::Vector4d& x) { return x.norm() < 1.5; },
      [](double f2) { return f2; });
  CHECK(e_small == Catch::Approx(e_unit).epsilon(1e-12));
}

TEST_CASE("bubble-scale detection against the closed-form crossing") {
  const BubbleProfile b{0.5, Eigen::Vector4d::Zero()};

  // histogram fed from the closed form: detected radius = analytic crossing
  RadialHistogram hist;
  hist.init(4096, 4.0);
  for (std::size_t i = 0; i < 4096; ++i) {
    const double r0 = 4.0 * double(i) / 4096.0, r1 = 4.0 * double(i + 1) / 4096.0;
    hist.energy[i] = b.energy_in_ball(r1) - b.energy_in_ball(r0);
  }
  const double eps0 = 0.5 * BubbleProfile::total_energy();
  const double want = b.radius_at_fraction(0.25);  // eps0/2 = quarter energy
  CHECK(detect_bubble_scale(hist, eps0) == Catch::Approx(want).margin(0.01));

  // monotone in the threshold
  CHECK(detect_bubble_scale(hist, eps0) <= detect_bubble_scale(hist, 1.5 * eps0));
  // threshold above the recorded energy: no bubble
  CHECK_THROWS_AS(detect_bubble_scale(hist, 3.0 * BubbleProfile::total_energy()),
                  numerical_error);

  // stored-field path: sampled closed-form curvature, off-center bubble
  const Eigen::Vector4d q(0.3, -0.2, 0.1, 0.0);
  const BubbleProfile c{0.5, q};
  const Domain d = Domain::ball(2.0, 0.1);
  const LatticeForm F = sample(d, 2, 3,
      [&](const Eigen::Vector4d& x) { return c.curvature(x); });
  const double det = detect_bubble_scale(F, q, eps0);
  CHECK(det == Catch::Approx(want).margin(0.05));
  // translation equivariance: centered bubble detects the same radius
  const BubbleProfile c0{0.5, Eigen::Vector4d::Zero()};
  const LatticeForm F0 = sample(d, 2, 3,
      [&](const Eigen::Vector4d& x) { return c0.curvature(x); });
  const double det0 = detect_bubble_scale(F0, Eigen::Vector4d::Zero(), eps0);
  CHECK(det == Catch::Approx(det0).margin(0.02));

  // zero field: no bubble at any threshold
  LatticeForm Z(d, 2, 3);
  CHECK_THROWS_AS(detect_bubble_scale(Z, Eigen::Vector4d::Zero(), 1e-6),
                  numerical_error);
}

TEST_CASE("sampled fields: resolution guards and core agreement") {
  const Domain d = Domain::ball(0.3, 0.025);  // box corners reach |x| ~ 0.675
  const BubbleProfile b{0.1, Eigen::Vector4d::Zero()};
  const Cutoff cut{0.7};  // chi = 1 over the whole stored box

  CHECK_THROWS_AS(sample_bubble(d, BubbleProfile{0.05, Eigen::Vector4d::Zero()}),
                  precondition_error);

  const LatticeForm A = sample_bubble(d, b);
  LatticeForm G(d, 1, 3);
  add_glued_bubble(G, b, cut);
  double diff = 0;
  for (std::size_t i = 0; i < A.data.size(); ++i)
    diff = std::max(diff, std::abs(A.data[i] - G.data[i]));
  CHECK(diff == 0.0);

  // scale too fat for the annulus
  LatticeForm G2(d, 1, 3);
  CHECK_THROWS_AS(add_glued_bubble(G2, BubbleProfile{0.11, Eigen::Vector4d::Zero()},
                                   Cutoff{0.4}),
                  precondition_error);
}

TEST_CASE("concentrating family: defect decreases, scale tracks") {
  const LieAlgebra& g = LieAlgebra::su2();
  GluedEnergyParams par;
  par.eta = 0.25;
  par.core_S = 2.0;
  par.core_h = 0.25;
  par.shell_m = 8;

  CHECK_THROWS_AS(glued_bubble_energy(g, 0.2, 2.0, par), precondition_error);

  const FamilyResult r = energy_identity_check(g, 3, 5, par);
  REQUIRE(r.members.size() == 3);
  CHECK(r.defects_strictly_decreasing);
  CHECK(r.final_defect_rel < 0.02);
  CHECK(r.scales_within_factor_two);
  for (const auto& m : r.members) {
    CHECK(m.background_energy == 0.0);
    CHECK(m.bubble_parts.size() == 1);
    CHECK(m.total == Catch::Approx(m.bubble_parts[0]));
  }

  // no concentration: defect identically zero
  const FamilyResult r0 = energy_identity_check(g, 3, 4, par, 0);
  for (const auto& m : r0.members) {
    CHECK(m.total == 0.0);
    CHECK(m.defect == 0.0);
  }

  // two separated bubbles: parts additive
  const FamilyResult r2 = energy_identity_check(g, 4, 4, par, 2);
  REQUIRE(r2.members.size() == 1);
  const auto& m2 = r2.members[0];
  REQUIRE(m2.bubble_parts.size() == 2);
  CHECK(m2.total ==
        Catch::Approx(m2.bubble_parts[0] + m2.bubble_parts[1]).epsilon(1e-12));
  CHECK(m2.defect < 2.0 * r.members[1].defect + 1e-9);
}

TEST_CASE("core extrapolation removes the quadratic resolution error") {
  const LieAlgebra& g = LieAlgebra::su2();
  GluedEnergyParams par;
  par.eta = 0.25;
  par.core_S = 2.0;
  par.core_h = 0.25;
  par.shell_m = 8;
  const GluedEnergyBreakdown plain = glued_bubble_energy(g, 1.0 / 16.0, 2.0, par);
  const GluedEnergyBreakdown rich =
      glued_bubble_energy_extrapolated(g, 1.0 / 16.0, 2.0, par);
  const double core_exact =
      BubbleProfile{1.0, Eigen::Vector4d::Zero()}.energy_in_ball(par.core_S);
  CHECK(std::abs(rich.core - core_exact) < 0.2 * std::abs(plain.core - core_exact));
}

TEST_CASE("exponent schedule: balanced product, flagged variant, interpolation") {
  const LieAlgebra& g = LieAlgebra::su2();
  GluedEnergyParams par;
  par.eta = 0.25;
  par.core_S = 2.0;
  par.core_h = 0.25;

  const ScheduleReport rep = p_schedule_check(g, 1, 8, 1.25, par);
  REQUIRE(rep.rows.size() == 8);
  CHECK(rep.products_bounded);
  CHECK(rep.holder_all_ok);
  for (const auto& row : rep.rows) {
    CHECK(row.product_prescribed == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(row.product_detected <= 1.25);
    CHECK(row.p > 2.0);
    CHECK(row.p < 3.0);
    CHECK(row.delta_detected > 0.0);
    CHECK(row.holder_lhs > 0.0);
    CHECK(row.holder_lhs <= row.holder_rhs * (1.0 + 1e-12));
  }
  // detected scale is a fixed multiple of the prescribed one
  const double ratio0 = rep.rows[0].delta_detected / rep.rows[0].delta;
  for (const auto& row : rep.rows)
    CHECK(row.delta_detected / row.delta == Catch::Approx(ratio0).epsilon(1e-12));

  // too-slow schedule p = 2 + 1/sqrt(log): product grows, must be flagged
  const ScheduleReport slow = p_schedule_check(g, 1, 8, 1.25, par, 0.5);
  CHECK_FALSE(slow.products_bounded);
  double prev = 0;
  for (const auto& row : slow.rows) {
    CHECK(row.product_prescribed > prev);
    prev = row.product_prescribed;
  }
}
