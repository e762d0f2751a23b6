/// @file test_neck.cpp
/// Neck analysis: the exponent stack has exact rational values at p = 2 and
/// obeys Vieta identities away from it; the interpolation weights are
/// continuous across their seams and bounded by 2/rho^2; the curvature
/// endomorphism has the exact trace 2|F|^2/(1+|F|^2) and sits between 0 and 1;
/// radial barriers change sign exactly at the indicial roots; and the weighted
/// coercivity diagnostics stay positive on neck-supported perturbations.

#include <catch2/catch_amalgamated.hpp>

#include "pym/instanton.hpp"
#include "pym/neck.hpp"

using namespace pym;

namespace {

// clamped quintic smoothstep: exactly 0 below 0, exactly 1 above 1
double sstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

// radial plateau bump, exactly 0 outside [lo, hi]
double plateau(double rho, double lo, double hi, double wlo, double whi) {
  return sstep((rho - lo) / wlo) * sstep((hi - rho) / whi);
}

FormValue random_two_form(Rng& rng, double scale) {
  FormValue v(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) v(i, j) = scale * rng.normal();
  return v;
}

Eigen::Vector4d random_direction(Rng& rng) {
  Eigen::Vector4d x;
  for (int i = 0; i < 4; ++i) x[i] = rng.normal();
  return x / x.norm();
}

}  // namespace

// ============================================================
// Exponent and constant stack
// ============================================================

TEST_CASE("decay modulus and kappa ladder") {
  CHECK(neck_mu(2.0) == 1.5);
  CHECK(neck_mu(2.5) == Catch::Approx(13.0 / 12.0).epsilon(1e-15));
  // nonincreasing, floored at 1
  double prev = neck_mu(2.0);
  for (int i = 1; i <= 100; ++i) {
    const double p = 2.0 + 0.00999 * i;
    const double m = neck_mu(p);
    CHECK(m <= prev + 1e-15);
    CHECK(m >= 1.0);
    prev = m;
  }
  CHECK(neck_mu(2.9) == 1.0);
  CHECK_THROWS_AS(neck_mu(1.99), precondition_error);
  CHECK_THROWS_AS(neck_mu(3.0), precondition_error);

  CHECK(neck_kappa(2.0, 1.0) == 1.0);
  CHECK(neck_kappa(2.0, 2.0) == 0.0);
  CHECK(neck_kappa(2.0, 2.5) == 0.0);  // clamped
  CHECK(neck_kappa_beta(2.0, 1.0) == 0.0);
  Rng rng(81001);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform(2.0, 2.9);
    const double ga = rng.uniform(-0.5, 3.0);
    CHECK(neck_kappa(p, ga) == Catch::Approx(neck_kappa_beta(p, 0.5 * ga)).margin(1e-15));
    CHECK(neck_kappa(p, ga) >= 0.0);
  }
}

TEST_CASE("decay exponent: exact value at p = 2 and defining relation") {
  for (double control : {0.0, 1.0, 5.0})
    CHECK(neck_gamma(2.0, control) == 0.5);  // exact: 2 - (3/2)*1/1

  // gamma solves mu = kappa(p, gamma) / (1 - control (p-2) - (p-2)^2)
  Rng rng(81002);
  for (int i = 0; i < 300; ++i) {
    const double p = rng.uniform(2.0, 2.35);
    const double control = rng.uniform(0.0, 1.5);
    const double ctrl = 1.0 - control * (p - 2.0) - (p - 2.0) * (p - 2.0);
    if (ctrl <= 0.05) continue;
    const double ga = neck_gamma(p, control);
    CHECK(std::abs(neck_mu(p) - neck_kappa(p, ga) / ctrl) < 1e-12);
    CHECK(ga > 0.0);
    CHECK(ga < 2.0);
  }
  // exponent improves (grows) just above p = 2 at the default control constant
  for (double p : {2.01, 2.05, 2.1, 2.2}) CHECK(neck_gamma(p, 1.0) > 0.5);
  // control denominator must stay positive: at control = 1 it dies near 2.618
  CHECK_THROWS_AS(neck_gamma(2.7, 1.0), precondition_error);
  // continuity: gamma -> 1/2 as p -> 2+
  CHECK(std::abs(neck_gamma(2.0 + 1e-9, 1.0) - 0.5) < 1e-8);
}

TEST_CASE("indicial roots: exact endpoints, Vieta identities, bisection agrees") {
  const IndicialRoots r0 = neck_delta(0.0, 2.0);
  CHECK(r0.minus == 0.0);
  CHECK(r0.plus == 2.0);
  CHECK(std::abs(r0.root_minus) < 1e-12);
  CHECK(std::abs(r0.root_plus - 2.0) < 1e-12);

  // at eps = 0 the top root is 2(3-p)/(1+2(p-2))
  for (double p : {2.0, 2.1, 2.2, 2.3, 2.4}) {
    const double expect = 2.0 * (3.0 - p) / (1.0 + 2.0 * (p - 2.0));
    CHECK(neck_delta(0.0, p).plus == Catch::Approx(expect).epsilon(1e-14));
    CHECK(neck_delta(0.0, p).minus == 0.0);
  }

  // Vieta: product eps/a, sum 2(3-p)/a with a = 1+2(p-2); bisection tracks
  for (double p : {2.0, 2.05, 2.1, 2.2, 2.3, 2.4}) {
    const double a = 1.0 + 2.0 * (p - 2.0);
    const double cap = (3.0 - p) * (3.0 - p) / a;  // discriminant limit
    for (double eps : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
      if (eps >= cap) {
        CHECK_THROWS_AS(neck_delta(eps, p), precondition_error);
        continue;
      }
      const IndicialRoots d = neck_delta(eps, p);
      CHECK(std::abs(d.minus * d.plus - eps / a) < 1e-12);
      CHECK(std::abs(d.minus + d.plus - 2.0 * (3.0 - p) / a) < 1e-12);
      CHECK(std::abs(d.root_minus - d.minus) < 1e-12);
      CHECK(std::abs(d.root_plus - d.plus) < 1e-12);
      CHECK(d.minus <= d.plus);
    }
  }
  CHECK_THROWS_AS(neck_delta(-0.1, 2.0), precondition_error);
}

TEST_CASE("barrier exponents and the weight-flattening exponent") {
  const auto s = neck_sigma(0.0, 2.0);
  CHECK(s.first == -2.0);  // (1 + 1/gamma) delta - 2 = 3*0 - 2
  CHECK(s.second == 4.0);  // 3*2 - 2
  CHECK(neck_eps_p(2.0) == 0.0);
  for (double p : {2.05, 2.1, 2.2, 2.3}) {
    CHECK(neck_eps_p(p) > 0.0);
    CHECK(std::isfinite(neck_eps_p(p)));
  }
  // aggregate mirrors the individual calls
  const NeckConstants c = neck_constants(2.2, 0.05, 1.0);
  CHECK(c.mu == neck_mu(2.2));
  CHECK(c.gamma == neck_gamma(2.2, 1.0));
  CHECK(c.kappa_gamma == neck_kappa(2.2, c.gamma));
  CHECK(c.delta_minus == neck_delta(0.05, 2.2).minus);
  CHECK(c.delta_plus == neck_delta(0.05, 2.2).plus);
  CHECK(c.sigma_minus == neck_sigma(0.05, 2.2, 1.0).first);
  CHECK(c.sigma_plus == neck_sigma(0.05, 2.2, 1.0).second);
  CHECK(c.eps_p == neck_eps_p(2.2, 1.0));
}

// ============================================================
// Weights
// ============================================================

TEST_CASE("annulus weight: closed value at the geometric mean, 2/rho^2 bound") {
  const double r = 0.05, R = 1.7;
  // at rho = sqrt(rR) both summands equal 1/R^2
  CHECK(weight_omega2(R, r, std::sqrt(r * R)) ==
        Catch::Approx(2.0 / (R * R)).epsilon(1e-14));
  Rng rng(81003);
  for (int i = 0; i < 10000; ++i) {
    const double rho = r * std::exp(rng.uniform() * std::log(R / r));
    const double w = weight_omega2(R, r, rho);
    CHECK(w <= 2.0 / (rho * rho) * (1.0 + 1e-14));
    CHECK(w > 0.0);
    // p = 2 instance of the general weight is the same function
    CHECK(weight_omega(2.0, R, r, rho) == Catch::Approx(w).epsilon(1e-13));
  }
  CHECK_THROWS_AS(weight_omega2(R, r, 0.5 * r), precondition_error);
  CHECK_THROWS_AS(weight_omega2(R, r, 1.1 * R), precondition_error);
  CHECK_THROWS_AS(weight_omega(2.2, R, r, 0.5 * r), precondition_error);
  // p > 2 flattens the inner tail: exponent 2 - eps_p < 2
  const double w23 = weight_omega(2.3, R, r, 2.0 * r);
  CHECK(w23 > 0.0);
  CHECK(std::isfinite(w23));
}

TEST_CASE("two-scale weight: seam continuity and degenerate limit") {
  for (double eta : {0.25, 0.5}) {
    for (double frac : {0.25, 0.0625}) {
      const double dk = frac * eta * eta;
      // outer seam at rho = eta
      const double senter = (1.0 + std::pow(dk / (eta * eta), 2)) / (eta * eta);
      CHECK(weight_eta_k(eta, dk, eta) == Catch::Approx(senter).epsilon(1e-12));
      CHECK(weight_eta_k(eta, dk, eta * (1.0 - 1e-9)) ==
            Catch::Approx(senter).epsilon(1e-6));
      CHECK(weight_eta_k(eta, dk, eta * (1.0 + 1e-9)) ==
            Catch::Approx(senter).epsilon(1e-6));
      // inner seam at rho = dk/eta
      const double rin = dk / eta;
      const double sinner =
          (eta * eta) / (dk * dk) * (std::pow(dk / (eta * eta), 2) + 1.0);
      CHECK(weight_eta_k(eta, dk, rin) == Catch::Approx(sinner).epsilon(1e-12));
      CHECK(weight_eta_k(eta, dk, rin * (1.0 - 1e-9)) ==
            Catch::Approx(sinner).epsilon(1e-6));
      CHECK(weight_eta_k(eta, dk, rin * (1.0 + 1e-9)) ==
            Catch::Approx(sinner).epsilon(1e-6));
      // center value is finite (the scale caps the singularity)
      CHECK(std::isfinite(weight_eta_k(eta, dk, 0.0)));
      CHECK(weight_eta_k(eta, dk, 0.0) > sinner);
    }
    // pointwise degenerate limit: 1/eta^2 at every fixed radius
    for (double rho : {0.1, 0.6 * eta, 1.5 * eta}) {
      double dk = 0.25 * eta * eta;
      double prev_gap = std::abs(weight_eta_k(eta, dk, rho) - weight_eta_inf(eta));
      for (int j = 0; j < 12; ++j) {
        dk *= 0.25;
        const double gap = std::abs(weight_eta_k(eta, dk, rho) - weight_eta_inf(eta));
        CHECK(gap <= prev_gap * (1.0 + 1e-12));
        prev_gap = gap;
      }
      CHECK(prev_gap < 1e-4 * weight_eta_inf(eta));
    }
  }
  CHECK_THROWS_AS(weight_eta_k(0.5, 0.25, 0.1), precondition_error);  // dk = eta^2
  CHECK_THROWS_AS(weight_eta_k(0.5, -0.1, 0.1), precondition_error);
  CHECK_THROWS_AS(weight_eta_k(0.5, 0.1, -1.0), precondition_error);

  // blown-up limit weight: continuous at rho = 1/eta, constant inside
  for (double eta : {0.25, 0.5, 1.0}) {
    const double seam = (1.0 + eta * eta) * (1.0 + eta * eta) / (eta * eta);
    CHECK(weight_hat_eta_inf(eta, 1.0 / eta) == Catch::Approx(seam).epsilon(1e-12));
    CHECK(weight_hat_eta_inf(eta, 0.0) == Catch::Approx(seam).epsilon(1e-12));
    CHECK(weight_hat_eta_inf(eta, 1.0 / eta * (1.0 + 1e-9)) ==
          Catch::Approx(seam).epsilon(1e-6));
    // decays to 1/eta^2 at large radius
    CHECK(weight_hat_eta_inf(eta, 1e6) == Catch::Approx(1.0 / (eta * eta)).epsilon(1e-9));
  }
}

// ============================================================
// Curvature endomorphism
// ============================================================

TEST_CASE("curvature endomorphism: trace identity, 0 <= A <= 1, abelian value") {
  Rng rng(81004);
  for (int i = 0; i < 200; ++i) {
    const FormValue Fv = random_two_form(rng, std::exp(rng.uniform(-2.0, 2.0)));
    const double f2 = norm_sq(Fv);
    const Eigen::Matrix4d endo = curvature_endo(Fv);
    CHECK((endo - endo.transpose()).norm() < 1e-13 * (1.0 + endo.norm()));
    CHECK(endo.trace() == Catch::Approx(2.0 * f2 / (1.0 + f2)).epsilon(1e-12));
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(endo);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-12);
    const Eigen::Vector4d x = random_direction(rng);
    const double axx = x.dot(endo * x);
    CHECK(axx > -1e-12);
    CHECK(axx < endo.trace() + 1e-12);
  }

  // single-component field f e^{01} T_1: the endomorphism is
  // f^2/(1+f^2) on span{e_0, e_1}, zero on span{e_2, e_3}
  const double f = 0.8;
  FormValue Fv = zero_value(2, 3);
  Fv(forms::index_of(0b0011), 0) = f;
  const Eigen::Matrix4d endo = curvature_endo(Fv);
  const double lam = f * f / (1.0 + f * f);
  Eigen::Matrix4d expect = Eigen::Matrix4d::Zero();
  expect(0, 0) = expect(1, 1) = lam;
  CHECK((endo - expect).norm() < 1e-15);

  // self-dual instanton curvature: isotropic (all four directions equal)
  const BubbleProfile bp{0.3, Eigen::Vector4d::Zero()};
  for (int i = 0; i < 20; ++i) {
    Eigen::Vector4d x;
    for (int k = 0; k < 4; ++k) x[k] = rng.uniform(-0.8, 0.8);
    const Eigen::Matrix4d e2 = curvature_endo(bp.curvature(x));
    const double iso = 0.25 * e2.trace();
    CHECK((e2 - iso * Eigen::Matrix4d::Identity()).norm() < 1e-12 * (1.0 + e2.norm()));
  }

  CHECK_THROWS_AS(curvature_endo(zero_value(1, 3)), precondition_error);
}

// ============================================================
// Supersolution check
// ============================================================

TEST_CASE("radial barrier: worst-case residual vanishes exactly at the roots") {
  // p = 2: no curvature contribution, the residual is sigma(2-sigma) - eps
  for (double sigma : {0.0, 2.0}) {
    const auto rep = supersolution_check(2.0, 0.0, sigma);
    CHECK(rep.lower == 0.0);
    CHECK(rep.upper == 0.0);
    CHECK(rep.nonneg_worst_case);
  }
  CHECK(supersolution_check(2.0, 0.9, 1.0).lower == Catch::Approx(0.1).margin(1e-14));

  // p > 2: the worst-case lower bound is the indicial polynomial, so it is
  // zero at delta_pm, positive strictly between, negative outside
  for (double p : {2.1, 2.25, 2.4}) {
    for (double eps : {0.0, 0.02, 0.08}) {
      const IndicialRoots d = neck_delta(eps, p);
      CHECK(std::abs(supersolution_check(p, eps, d.minus).lower) < 1e-12);
      CHECK(std::abs(supersolution_check(p, eps, d.plus).lower) < 1e-12);
      const double mid = 0.5 * (d.minus + d.plus);
      if (d.plus - d.minus > 1e-6) {
        CHECK(supersolution_check(p, eps, mid).lower > 0.0);
        CHECK(supersolution_check(p, eps, mid).nonneg_worst_case);
      }
      CHECK_FALSE(supersolution_check(p, eps, d.plus + 0.3).nonneg_worst_case);
    }
  }

  // two-sided bound brackets every sampled curvature residual
  Rng rng(81005);
  const BubbleProfile bp{0.2, Eigen::Vector4d::Zero()};
  std::vector<std::pair<FormValue, Eigen::Vector4d>> samples;
  for (int i = 0; i < 300; ++i) {
    if (i % 3 == 0) {
      Eigen::Vector4d x;
      for (int k = 0; k < 4; ++k) x[k] = rng.uniform(-0.6, 0.6);
      samples.emplace_back(bp.curvature(x), random_direction(rng));
    } else {
      samples.emplace_back(random_two_form(rng, std::exp(rng.uniform(-1.5, 1.5))),
                           random_direction(rng));
    }
  }
  for (double sigma : {0.1, 0.5, 1.7}) {
    const auto rep = supersolution_check(2.3, 0.02, sigma, samples);
    CHECK(rep.nsamples == 300);
    CHECK(rep.sampled_within_bounds);
    CHECK(rep.sampled_min >= rep.lower - 1e-12);
    CHECK(rep.sampled_max <= rep.upper + 1e-12);
  }
  CHECK_THROWS_AS(
      supersolution_check(2.2, 0.0, 1.0,
                          {{zero_value(2, 3), Eigen::Vector4d::Zero()}}),
      precondition_error);
}

// ============================================================
// Pointwise decay envelope
// ============================================================

TEST_CASE("decay envelope: concentrating tails fit, borderline profiles do not") {
  const double R = 1.0;
  // concentrating bubble tail at scale lambda = r: the fitted constant
  // converges under r -> r/2 (consecutive ratios shrink toward 1), because
  // the tail genuinely obeys the weighted envelope
  std::vector<double> fitted;
  for (double r : {R / 8.0, R / 16.0, R / 32.0, R / 64.0}) {
    const double lam = r;
    const auto pb = pointwise_bound_radial(
        [&](double rho) {
          const double q = rho * rho + lam * lam;
          return std::sqrt(48.0) * lam * lam / (q * q);
        },
        2.0, r, R);
    CHECK(pb.energy > 0.0);
    CHECK(pb.fitted > 0.0);
    fitted.push_back(pb.fitted);
  }
  for (std::size_t i = 0; i + 2 < fitted.size(); ++i)
    CHECK(fitted[i + 2] / fitted[i + 1] < fitted[i + 1] / fitted[i]);
  CHECK(fitted.back() / fitted[fitted.size() - 2] < 1.15);

  // borderline 1/rho^2 profile: saturates unweighted regularity but not the
  // neck envelope; its fitted constant keeps growing under r -> r/2
  std::vector<double> border;
  for (double r : {R / 8.0, R / 16.0, R / 32.0, R / 64.0}) {
    border.push_back(
        pointwise_bound_radial([](double rho) { return 1.0 / (rho * rho); }, 2.0,
                               r, R)
            .fitted);
  }
  CHECK(border[1] > 1.4 * border[0]);
  CHECK(border[2] > 1.4 * border[1]);
  CHECK(border[3] > 1.4 * border[2]);

  // stored-field version on a sampled instanton curvature
  const Domain dom = Domain::ball(1.0, 1.0 / 16.0);
  const BubbleProfile bp{0.1, Eigen::Vector4d::Zero()};
  LatticeForm F = sample(dom, 2, 3,
                         [&](const Eigen::Vector4d& x) { return bp.curvature(x); });
  const auto pb = pointwise_bound_check(F, 2.0, 0.1, 0.8, Eigen::Vector4d::Zero());
  CHECK(pb.energy > 0.0);
  CHECK(pb.fitted > 0.0);
  CHECK(pb.rho_at_sup >= 0.1);
  CHECK(pb.rho_at_sup <= 0.8);

  // zero field reports a zero fit; thin annuli are rejected
  LatticeForm Z(dom, 2, 3);
  CHECK(pointwise_bound_check(Z, 2.0, 0.1, 0.8, Eigen::Vector4d::Zero()).energy == 0.0);
  CHECK(pointwise_bound_check(Z, 2.0, 0.1, 0.8, Eigen::Vector4d::Zero()).fitted == 0.0);
  CHECK_THROWS_AS(pointwise_bound_check(F, 2.0, 0.2, 0.8, Eigen::Vector4d::Zero()),
                  precondition_error);
}

TEST_CASE("dyadic profile: U-shape on neck data and exact scaling identity") {
  // composite radial field: concentrating tail + order-one background; the
  // shell norms dip in the neck between the two scales
  const double r = 0.01, R = 1.28;
  const auto absF = [](double rho) {
    const double lam = 0.01;
    const double q = rho * rho + lam * lam;
    return std::sqrt(48.0) * lam * lam / (q * q) + 1.0;
  };
  const DyadicProfile prof = dyadic_profile_radial(absF, r, R);
  REQUIRE(prof.radii.size() >= 5);
  const auto it = std::min_element(prof.shell_l2.begin(), prof.shell_l2.end());
  const std::size_t argmin = std::size_t(it - prof.shell_l2.begin());
  CHECK(argmin > 0);
  CHECK(argmin + 1 < prof.shell_l2.size());
  CHECK(prof.shell_l2.front() > 3.0 * (*it));
  CHECK(prof.shell_l2.back() > 3.0 * (*it));
  CHECK(prof.sup == *std::max_element(prof.shell_l2.begin(), prof.shell_l2.end()));

  // scaling identity: F_s(rho) = F(rho/s)/s^2 on (sr, sR) has the same shells
  const double s = 3.7;
  const DyadicProfile scaled = dyadic_profile_radial(
      [&](double rho) { return absF(rho / s) / (s * s); }, s * r, s * R);
  REQUIRE(scaled.shell_l2.size() == prof.shell_l2.size());
  for (std::size_t j = 0; j < prof.shell_l2.size(); ++j)
    CHECK(scaled.shell_l2[j] == Catch::Approx(prof.shell_l2[j]).epsilon(1e-12));

  // stored field: zero input gives all-zero shells; thin annulus rejected
  const Domain dom = Domain::ball(0.6, 0.05);
  LatticeForm Z(dom, 2, 3);
  const DyadicProfile zp = dyadic_profile(Z, 0.05, 0.5, Eigen::Vector4d::Zero());
  for (double e : zp.shell_l2) CHECK(e == 0.0);
  CHECK_THROWS_AS(dyadic_profile(Z, 0.3, 0.5, Eigen::Vector4d::Zero()),
                  precondition_error);

  // stored vs radial agreement on a smooth profile (quadrature vs lattice sum)
  const Domain fine = Domain::ball(0.6, 0.025);
  LatticeForm F = sample(fine, 2, 3, [](const Eigen::Vector4d& x) {
    FormValue v = zero_value(2, 3);
    const double rho2 = x.squaredNorm();
    v(0, 0) = 1.0 / (0.01 + rho2);
    return v;
  });
  const DyadicProfile lat = dyadic_profile(F, 0.1, 0.55, Eigen::Vector4d::Zero());
  const DyadicProfile rad = dyadic_profile_radial(
      [](double rho) { return 1.0 / (0.01 + rho * rho); }, 0.1, 0.55);
  REQUIRE(lat.shell_l2.size() == rad.shell_l2.size());
  for (std::size_t j = 0; j < lat.shell_l2.size(); ++j)
    CHECK(lat.shell_l2[j] == Catch::Approx(rad.shell_l2[j]).epsilon(0.08));
}

// ============================================================
// Weighted coercivity
// ============================================================

namespace {

// g-valued 1-form supported on {lo <= |x| <= hi}, smooth random bump data
LatticeForm random_neck_form(Rng& rng, const Domain& dom, int cols, double lo,
                             double hi) {
  double c[4][3][3];
  for (auto& mu : c)
    for (auto& a : mu)
      for (double& v : a) v = rng.uniform(-1.0, 1.0);
  LatticeForm f(dom, 1, cols);
  for (std::size_t s = 0; s < dom.nsites; ++s) {
    const Eigen::Vector4d x = dom.coord(s);
    const double rho = x.norm();
    const double b = plateau(rho, lo, hi, 0.3 * (hi - lo), 0.3 * (hi - lo));
    if (b == 0.0) continue;
    double* v = f.at(s);
    for (int mu = 0; mu < 4; ++mu)
      for (int a = 0; a < cols; ++a)
        v[std::size_t(mu * cols + a)] =
            b * (c[mu][a % 3][0] + c[mu][a % 3][1] * std::sin(3.0 * x[mu]) +
                 c[mu][a % 3][2] * x[(mu + 1) % 4]);
  }
  return f;
}

}  // namespace

TEST_CASE("neck positivity: flat and glued backgrounds, quadratic homogeneity") {
  const Domain dom = Domain::ball(0.52, 0.05);
  const double r = 0.2, R = 0.45;
  Rng rng(81006);

  // flat background: the form reduces to a Hardy-type quotient, ratio ~ 1/2
  const LieAlgebra su2 = LieAlgebra::su2();
  LatticeForm flatA(dom, 1, 3);
  double worst_flat = 1e30;
  for (int i = 0; i < 8; ++i) {
    const LatticeForm a = random_neck_form(rng, dom, 3, r, R);
    const auto np = neck_positivity_check(su2, flatA, 2.0, a, r, R,
                                          Eigen::Vector4d::Zero());
    CHECK(np.lhs > 0.0);
    CHECK(np.rhs > 0.0);
    worst_flat = std::min(worst_flat, np.ratio);
  }
  CHECK(worst_flat > 0.3);

  // glued bubble tail: stays uniformly positive on the neck annulus
  const BubbleProfile bp{0.04, Eigen::Vector4d::Zero()};
  const Cutoff cut{0.45};
  const LatticeForm gluedA = sample_glued_decaying(dom, bp, cut);
  double worst_neck = 1e30;
  for (int i = 0; i < 8; ++i) {
    const LatticeForm a = random_neck_form(rng, dom, 3, r, R);
    const auto np = neck_positivity_check(su2, gluedA, 2.0, a, r, R,
                                          Eigen::Vector4d::Zero());
    worst_neck = std::min(worst_neck, np.ratio);
    // quadratic homogeneity: scaling a leaves the ratio unchanged
    if (i == 0) {
      LatticeForm a2 = a;
      a2.scale(2.0);
      const auto np2 = neck_positivity_check(su2, gluedA, 2.0, a2, r, R,
                                             Eigen::Vector4d::Zero());
      CHECK(np2.lhs == Catch::Approx(4.0 * np.lhs).epsilon(1e-12));
      CHECK(np2.ratio == Catch::Approx(np.ratio).epsilon(1e-12));
    }
  }
  CHECK(worst_neck > 0.2);

  // support violation and zero perturbation are rejected
  LatticeForm bad(dom, 1, 3);
  for (std::size_t s = 0; s < dom.nsites; ++s) bad.at(s)[0] = 1.0;
  CHECK_THROWS_AS(neck_positivity_check(su2, flatA, 2.0, bad, r, R,
                                        Eigen::Vector4d::Zero()),
                  precondition_error);
  LatticeForm zero(dom, 1, 3);
  CHECK_THROWS_AS(neck_positivity_check(su2, flatA, 2.0, zero, r, R,
                                        Eigen::Vector4d::Zero()),
                  precondition_error);
}

TEST_CASE("weighted annulus coercivity: fitted constants stay below 8") {
  const Domain dom = Domain::ball(0.55, 0.05);
  const double r = 0.15, R = 0.5;
  Rng rng(81007);
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    const LatticeForm a = random_neck_form(rng, dom, 1, r, R);
    const auto gh = gaffney_hardy_neck(a, r, R, Eigen::Vector4d::Zero());
    CHECK(gh.deriv > 0.0);
    worst = std::max(worst, gh.fitted);
  }
  CHECK(worst < 8.0);

  // single-shell bump and an exact form
  LatticeForm shell = sample(dom, 1, 1, [&](const Eigen::Vector4d& x) {
    FormValue v(4, 1);
    const double b = plateau(x.norm(), 0.2, 0.4, 0.07, 0.07);
    for (int mu = 0; mu < 4; ++mu) v(mu, 0) = b * (mu == 0 ? 1.0 : 0.3);
    return v;
  });
  CHECK(gaffney_hardy_neck(shell, r, R, Eigen::Vector4d::Zero()).fitted < 8.0);

  LatticeForm bump0 = sample(dom, 0, 1, [&](const Eigen::Vector4d& x) {
    FormValue v(1, 1);
    v(0, 0) = plateau(x.norm(), 0.2, 0.42, 0.08, 0.08);
    return v;
  });
  LatticeForm exact = d(bump0);
  exact.mask_to_domain();
  CHECK(gaffney_hardy_neck(exact, r, R, Eigen::Vector4d::Zero()).fitted < 8.0);

  // support violation rejected
  LatticeForm bad(dom, 1, 1);
  for (std::size_t s = 0; s < dom.nsites; ++s) bad.at(s)[0] = 1.0;
  CHECK_THROWS_AS(gaffney_hardy_neck(bad, r, R, Eigen::Vector4d::Zero()),
                  precondition_error);
}

TEST_CASE("Hardy quotient: at most 1 + O(h), approached by the critical profile") {
  const double h = 0.1;
  const Domain dom = Domain::ball(1.0, h);
  Rng rng(81008);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    double c[6];
    for (double& v : c) v = rng.uniform(-1.0, 1.0);
    const double lo = rng.uniform(0.1, 0.3);
    const double hi = rng.uniform(0.6, 0.9);
    LatticeForm f(dom, 0, 1);
    for (std::size_t s = 0; s < dom.nsites; ++s) {
      const Eigen::Vector4d x = dom.coord(s);
      const double b = plateau(x.norm(), lo, hi, 0.3 * (hi - lo), 0.3 * (hi - lo));
      if (b == 0.0) continue;
      f.at(s)[0] = b * (c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2] +
                        c[4] * x[3] + c[5] * std::sin(2.0 * x[0] * x[1]));
    }
    const auto hr = hardy_ratio(f, Eigen::Vector4d::Zero());
    worst = std::max(worst, hr.ratio);
  }
  CHECK(worst <= 1.0 + 5.0 * h);

  // near-critical profile 1/rho with smooth cutoffs: still below the bound;
  // on a unit ball the cutoff cost keeps the quotient well under 1
  LatticeForm ext(dom, 0, 1);
  for (std::size_t s = 0; s < dom.nsites; ++s) {
    const double rho = dom.coord(s).norm();
    const double b = plateau(rho, 0.2, 0.9, 0.2, 0.3);
    if (b > 0.0) ext.at(s)[0] = b / rho;
  }
  const auto hr = hardy_ratio(ext, Eigen::Vector4d::Zero());
  CHECK(hr.ratio > 0.1);
  CHECK(hr.ratio <= 1.0 + 5.0 * h);

  // the constant 1 is sharp, but only across enormous scale separations:
  // radial quadrature of the same profile with eight decades between the
  // cutoffs pushes the quotient above 0.9
  {
    const double a = 1e-8, b = 1.0;
    const int n = 40000;
    const double du = std::log(b / a) / n;
    double lhs = 0, rhs = 0;
    for (int i = 0; i < n; ++i) {
      const double rho = a * std::exp(du * (i + 0.5));
      const double diff = 1e-4 * rho;
      const auto f = [&](double t) {
        return plateau(std::log(t / a) / std::log(b / a), 0.0, 1.0, 0.15, 0.15) / t;
      };
      const double fv = f(rho);
      const double fp = (f(rho + diff) - f(rho - diff)) / (2.0 * diff);
      lhs += fv * fv * rho * rho * du;    // f^2/rho^2 * rho^3, drho = rho du
      rhs += fp * fp * rho * rho * rho * rho * du;
    }
    CHECK(lhs / rhs > 0.9);
    CHECK(lhs / rhs < 1.0);
  }

  LatticeForm zero(dom, 0, 1);
  CHECK_THROWS_AS(hardy_ratio(zero, Eigen::Vector4d::Zero()), precondition_error);
}
