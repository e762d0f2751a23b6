/// @file spectral.hpp
/// Weighted stability spectra: sparse weak-form assembly of the second
/// variation quadratic forms, generalized eigenproblems against a positive
/// weight pairing, Morse index / nullity / extended index with auditable zero
/// tolerances, invariance of the counts under a change of weight, and the
/// weighted lower-bound diagnostic for neck configurations.
///
/// Counting is exact where it matters: index and nullity come from matrix
/// inertia (LDLt signs of stiffness - sigma mass), not from iterative
/// eigenvalue lists.  Eigenvalue lists use a dense solve below a dof
/// threshold and shift-invert Lanczos above it.
#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pym/functional.hpp"
#include "pym/neck.hpp"

namespace pym {

using SparseMat = Eigen::SparseMatrix<double>;

// ============================================================
// Weights and dof layout
// ============================================================

/// Positive scalar weight per box site (units 1/length^2); only the values at
/// in-domain sites enter any pairing.
struct WeightField {
  const Domain* dom = nullptr;
  std::vector<double> w;

  static WeightField uniform(const Domain& d, double c = 1.0) {
    PYM_REQUIRE(c > 0.0, "WeightField: constant must be positive");
    WeightField out;
    out.dom = &d;
    out.w.assign(d.nsites, c);
    return out;
  }
  template <class Fn>
  static WeightField sample(const Domain& d, const Fn& fn) {
    WeightField out;
    out.dom = &d;
    out.w.resize(d.nsites);
    for (std::size_t s = 0; s < d.nsites; ++s) out.w[s] = fn(d.coord(s));
    return out;
  }
};

/// Two-scale neck weight as a field: weight_eta_k at radius |x - center|.
inline WeightField two_scale_weight(const Domain& d, double eta, double delta_k,
                                    const Eigen::Vector4d& center) {
  return WeightField::sample(d, [&](const Eigen::Vector4d& x) {
    return weight_eta_k(eta, delta_k, (x - center).norm());
  });
}

/// Coefficient layout for g-valued 1-forms restricted to in-domain sites
/// (zero Dirichlet data outside).  dof = slot*4*cols + mu*cols + color.
struct DofLayout {
  const Domain* dom = nullptr;
  int cols = 0;
  int per_site = 0;
  std::vector<std::uint32_t> sites;  // selected box sites, ascending
  std::vector<std::int32_t> slot;    // box site -> selection slot, or -1

  std::size_t ndof() const { return sites.size() * std::size_t(per_site); }

  Eigen::VectorXd pack(const LatticeForm& a) const {
    PYM_REQUIRE(a.dom == dom && a.degree == 1 && a.cols == cols,
                "DofLayout: form does not match the layout");
    const Eigen::Index n = Eigen::Index(ndof());
    Eigen::VectorXd x(n);
    for (std::size_t t = 0; t < sites.size(); ++t) {
      const double* v = a.at(sites[t]);
      for (int i = 0; i < per_site; ++i) x[Eigen::Index(t * std::size_t(per_site)) + i] = v[i];
    }
    return x;
  }
  LatticeForm unpack(const Eigen::VectorXd& x) const {
    PYM_REQUIRE(x.size() == Eigen::Index(ndof()), "DofLayout: wrong coefficient count");
    LatticeForm a(*dom, 1, cols);
    for (std::size_t t = 0; t < sites.size(); ++t) {
      double* v = a.at(sites[t]);
      for (int i = 0; i < per_site; ++i) v[i] = x[Eigen::Index(t * std::size_t(per_site)) + i];
    }
    return a;
  }
};

inline DofLayout make_layout(const Domain& d, int cols) {
  DofLayout out;
  out.dom = &d;
  out.cols = cols;
  out.per_site = 4 * cols;
  out.slot.assign(d.nsites, -1);
  for (std::size_t s = 0; s < d.nsites; ++s)
    if (d.site_in_domain(s)) {
      out.slot[s] = std::int32_t(out.sites.size());
      out.sites.push_back(std::uint32_t(s));
    }
  return out;
}

// ============================================================
// Assembly
// ============================================================

enum class StabilityForm { Q, Qfrak, Qcal };

struct StabilityProblem {
  DofLayout layout;
  SparseMat stiffness, mass;
  double sym_defect = 0;  // ||S - S^T||_F / ||S||_F before symmetrization
  double p = 2;
  StabilityForm form = StabilityForm::Qcal;
};

namespace detail {

// neighbor of s in +mu (SIZE_MAX when the zero-extended box ends)
inline std::size_t neighbor_fwd(const Domain& d, std::size_t s, int mu) {
  int idx[4];
  d.decompose(s, idx);
  if (idx[mu] + 1 < d.n[mu]) return s + d.stride[mu];
  if (d.periodic) return s - std::size_t(d.n[mu] - 1) * d.stride[mu];
  return SIZE_MAX;
}
inline std::size_t neighbor_bwd(const Domain& d, std::size_t s, int mu) {
  int idx[4];
  d.decompose(s, idx);
  if (idx[mu] >= 1) return s - d.stride[mu];
  if (d.periodic) return s + std::size_t(d.n[mu] - 1) * d.stride[mu];
  return SIZE_MAX;
}

// Sparse covariant exterior derivative on layout coefficients: rows are the
// 6*cols two-form components at each selected site, mirroring the field
// operator (forward differences + pointwise bracket with A).
inline SparseMat d_matrix(const LieAlgebra& g, const LatticeForm& A,
                          const DofLayout& lay) {
  const Domain& dm = *lay.dom;
  const int cc = lay.cols;
  const double invh = 1.0 / dm.h;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(lay.sites.size() * 150);
  const auto dof = [&](std::int32_t t, int comp, int c) {
    return int(t) * lay.per_site + comp * cc + c;
  };
  for (std::size_t t = 0; t < lay.sites.size(); ++t) {
    const std::size_t s = lay.sites[t];
    for (int j = 0; j < 6; ++j) {
      const int mj = forms::mask(2, j);
      const int row0 = (int(t) * 6 + j) * cc;
      for (int mu = 0; mu < 4; ++mu) {
        if (!(mj & (1 << mu))) continue;
        const int mi = mj & ~(1 << mu);
        const double sgn = forms::insert_sign(mu, mi);
        const int ci = forms::index_of(mi);  // the remaining axis of the 1-form
        // forward difference sgn*(a(s+mu) - a(s))/h
        for (int c = 0; c < cc; ++c)
          trip.emplace_back(row0 + c, dof(std::int32_t(t), ci, c), -sgn * invh);
        const std::size_t sn = neighbor_fwd(dm, s, mu);
        if (sn != SIZE_MAX && lay.slot[sn] >= 0)
          for (int c = 0; c < cc; ++c)
            trip.emplace_back(row0 + c, dof(lay.slot[sn], ci, c), sgn * invh);
        // bracket sgn*[A_mu(s), a_ci(s)]
        const double* Amu = A.at(s) + std::size_t(mu) * cc;
        for (const auto& nz : g.f_sparse)
          trip.emplace_back(row0 + nz.c, dof(std::int32_t(t), ci, nz.b),
                            sgn * nz.v * Amu[nz.a]);
      }
    }
  }
  SparseMat out(Eigen::Index(lay.sites.size() * 6 * std::size_t(cc)),
                Eigen::Index(lay.ndof()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Sparse covariant codifferential: rows are the cols zero-form components at
// each selected site (backward differences + pointwise bracket adjoint).
inline SparseMat dstar_matrix(const LieAlgebra& g, const LatticeForm& A,
                              const DofLayout& lay) {
  const Domain& dm = *lay.dom;
  const int cc = lay.cols;
  const double invh = 1.0 / dm.h;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(lay.sites.size() * 60);
  const auto dof = [&](std::int32_t t, int comp, int c) {
    return int(t) * lay.per_site + comp * cc + c;
  };
  for (std::size_t t = 0; t < lay.sites.size(); ++t) {
    const std::size_t s = lay.sites[t];
    const int row0 = int(t) * cc;
    for (int mu = 0; mu < 4; ++mu) {
      const double sgn = -double(forms::insert_sign(mu, 0));  // = -1
      // backward difference sgn*(a_mu(s) - a_mu(s-mu))/h
      for (int c = 0; c < cc; ++c)
        trip.emplace_back(row0 + c, dof(std::int32_t(t), mu, c), sgn * invh);
      const std::size_t sn = neighbor_bwd(dm, s, mu);
      if (sn != SIZE_MAX && lay.slot[sn] >= 0)
        for (int c = 0; c < cc; ++c)
          trip.emplace_back(row0 + c, dof(lay.slot[sn], mu, c), -sgn * invh);
      // bracket sgn*[A_mu(s), a_mu(s)]
      const double* Amu = A.at(s) + std::size_t(mu) * cc;
      for (const auto& nz : g.f_sparse)
        trip.emplace_back(row0 + nz.c, dof(std::int32_t(t), mu, nz.b),
                          sgn * nz.v * Amu[nz.a]);
    }
  }
  SparseMat out(Eigen::Index(lay.sites.size() * std::size_t(cc)),
                Eigen::Index(lay.ndof()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace detail

/// Weak-form assembly: stiffness satisfies x' S x = form(A, unpack(x), p) and
/// mass satisfies x' M x = integral |a|^2 w, both on the Dirichlet dof space.
inline StabilityProblem assemble(const LieAlgebra& g, const LatticeForm& A, double p,
                                 const WeightField& w, StabilityForm form) {
  PYM_REQUIRE(A.degree == 1 && A.cols == g.dim, "assemble: A must be a gauge potential");
  PYM_REQUIRE(w.dom == A.dom, "assemble: weight/domain mismatch");
  const Domain& dm = *A.dom;
  StabilityProblem pb;
  pb.layout = make_layout(dm, g.dim);
  pb.p = p;
  pb.form = form;
  const DofLayout& lay = pb.layout;
  const int cc = g.dim;
  const double h4 = std::pow(dm.h, 4);
  const ScalarKernels kern(p);

  const LatticeForm F = curvature(g, A);
  const LatticeForm f2 = norm_sq_field(F);

  const SparseMat Gd = detail::d_matrix(g, A, lay);
  const SparseMat Gs = detail::dstar_matrix(g, A, lay);

  // row weights on the two-form side: plain h^4 (Qcal) or rho h^4 plus the
  // rank-one alignment block (Q, Qfrak)
  std::vector<Eigen::Triplet<double>> wtrip;
  const bool weighted = (form != StabilityForm::Qcal);
  for (std::size_t t = 0; t < lay.sites.size(); ++t) {
    const std::size_t s = lay.sites[t];
    const double ff = f2.at(s)[0];
    const double rho = kern.rho(ff);
    const int row0 = int(t) * 6 * cc;
    const double diag = weighted ? rho * h4 : h4;
    for (int i = 0; i < 6 * cc; ++i) wtrip.emplace_back(row0 + i, row0 + i, diag);
    if (weighted && p != 2.0) {
      // (p-2) rho <F, da>^2/(1+|F|^2): outer product of the curvature value
      const double cal = (p - 2.0) * rho * h4 / (1.0 + ff);
      const double* fv = F.at(s);
      for (int i = 0; i < 6 * cc; ++i)
        for (int j = 0; j < 6 * cc; ++j) {
          const double v = cal * fv[i] * fv[j];
          if (v != 0.0) wtrip.emplace_back(row0 + i, row0 + j, v);
        }
    }
  }
  SparseMat W(Gd.rows(), Gd.rows());
  W.setFromTriplets(wtrip.begin(), wtrip.end());

  // pointwise bracket term rho <F, [a,a]>: local 12x12-ish blocks; the
  // quadratic form coefficient of x_{mu,a} x_{nu,b} (mu<nu in comp j) is
  // 2 rho h^4 f_{abc} F^c_j, split symmetrically
  std::vector<Eigen::Triplet<double>> btrip;
  for (std::size_t t = 0; t < lay.sites.size(); ++t) {
    const std::size_t s = lay.sites[t];
    const double wb = kern.rho(f2.at(s)[0]) * h4;
    const double* fv = F.at(s);
    const int base = int(t) * lay.per_site;
    for (int j = 0; j < 6; ++j) {
      const int mj = forms::mask(2, j);
      int mu = -1, nu = -1;
      for (int a = 0; a < 4; ++a)
        if (mj & (1 << a)) (mu < 0 ? mu : nu) = a;
      for (const auto& nz : g.f_sparse) {
        const double v = wb * nz.v * fv[std::size_t(j) * cc + std::size_t(nz.c)];
        if (v == 0.0) continue;
        btrip.emplace_back(base + mu * cc + nz.a, base + nu * cc + nz.b, v);
        btrip.emplace_back(base + nu * cc + nz.b, base + mu * cc + nz.a, v);
      }
    }
  }
  SparseMat B(Eigen::Index(lay.ndof()), Eigen::Index(lay.ndof()));
  B.setFromTriplets(btrip.begin(), btrip.end());

  SparseMat S;
  if (form == StabilityForm::Qcal) {
    S = SparseMat(Gd.transpose() * W * Gd) + SparseMat(h4 * Gs.transpose() * Gs) + B;
  } else {
    S = SparseMat(Gd.transpose() * W * Gd) + B;
    if (form == StabilityForm::Qfrak) {
      std::vector<Eigen::Triplet<double>> strip;
      for (std::size_t t = 0; t < lay.sites.size(); ++t) {
        const double rho = kern.rho(f2.at(lay.sites[t])[0]);
        for (int i = 0; i < cc; ++i)
          strip.emplace_back(int(t) * cc + i, int(t) * cc + i, rho * h4);
      }
      SparseMat Ws(Gs.rows(), Gs.rows());
      Ws.setFromTriplets(strip.begin(), strip.end());
      S = S + SparseMat(Gs.transpose() * Ws * Gs);
    }
    S = p * S;
  }

  const SparseMat ST = SparseMat(S.transpose());
  const double snorm = S.norm();
  pb.sym_defect = snorm > 0 ? SparseMat(S - ST).norm() / snorm : 0.0;
  pb.stiffness = 0.5 * (S + ST);

  std::vector<Eigen::Triplet<double>> mtrip;
  for (std::size_t t = 0; t < lay.sites.size(); ++t) {
    const double ws = w.w[lay.sites[t]];
    PYM_REQUIRE(ws > 0.0, "assemble: weight must be positive on the domain");
    for (int i = 0; i < lay.per_site; ++i)
      mtrip.emplace_back(int(t) * lay.per_site + i, int(t) * lay.per_site + i, ws * h4);
  }
  pb.mass = SparseMat(Eigen::Index(lay.ndof()), Eigen::Index(lay.ndof()));
  pb.mass.setFromTriplets(mtrip.begin(), mtrip.end());
  return pb;
}

// ============================================================
// Generalized eigensolves and inertia counting
// ============================================================

struct SpectralReport {
  std::vector<double> eigenvalues;  // k lowest, ascending
  int index = 0, nullity = 0, extended_index = 0;
  double tol_zero = 0;
  int index_tol_up = 0, nullity_tol_up = 0;      // counts at tol * 10
  int index_tol_down = 0, nullity_tol_down = 0;  // counts at tol / 10
  bool dense = false;
  double residual = 0;  // worst relative eigenpair residual (iterative path)
  std::size_t ndof = 0;
};

struct SolveOptions {
  int dense_threshold = 6000;
  bool tol_sweep = true;   // also count at tol*10 and tol/10
  int lanczos_steps = 140; // plain Lanczos budget for scale/lambda_min estimates
};

namespace detail {

// #eigenvalues of (S, M) strictly below sigma, by LDLt inertia of S - sigma M.
inline int inertia_below(const SparseMat& S, const SparseMat& M, double sigma,
                         double scale) {
  SparseMat K = S - sigma * M;
  for (int attempt = 0;; ++attempt) {
    Eigen::SimplicialLDLT<SparseMat> ldlt(K);
    if (ldlt.info() == Eigen::Success) {
      const auto& D = ldlt.vectorD();
      int nneg = 0;
      for (Eigen::Index i = 0; i < D.size(); ++i)
        if (D[i] < 0.0) ++nneg;
      return nneg;
    }
    if (attempt >= 3) throw numerical_error("inertia: LDLt factorization failed");
    sigma += (attempt + 1) * 1e-10 * scale;  // nudge off a pivot breakdown
    K = S - sigma * M;
  }
}

// Lanczos with full reorthogonalization for an operator self-adjoint in the
// inner product <x,y>_M = x' M y (M SPD diagonal).  Returns Ritz values
// ascending along with the Ritz basis.
struct LanczosResult {
  std::vector<double> ritz;
  Eigen::MatrixXd basis;  // columns are Ritz vectors in dof space
};

template <class Op>
LanczosResult lanczos_m(const Op& op, const Eigen::VectorXd& mdiag, int steps,
                        std::uint64_t seed) {
  const Eigen::Index n = mdiag.size();
  const int m = int(std::min<Eigen::Index>(steps, n));
  Eigen::MatrixXd V(n, m);
  Eigen::VectorXd alpha(m), beta(m);
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  v /= std::sqrt(v.dot(mdiag.asDiagonal() * v));
  int used = 0;
  Eigen::VectorXd w;
  for (int j = 0; j < m; ++j) {
    V.col(j) = v;
    ++used;
    w = op(v);
    alpha[j] = w.dot(mdiag.asDiagonal() * v);
    // full reorthogonalization against all previous Lanczos vectors (twice)
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i)
        w -= V.col(i) * (w.dot(mdiag.asDiagonal() * V.col(i)));
    const double b = std::sqrt(std::max(0.0, w.dot(mdiag.asDiagonal() * w)));
    beta[j] = b;
    if (b < 1e-13 || j + 1 == m) break;
    v = w / b;
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(used, used);
  for (int j = 0; j < used; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < used) T(j, j + 1) = T(j + 1, j) = beta[j];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  LanczosResult out;
  out.ritz.assign(es.eigenvalues().data(), es.eigenvalues().data() + used);
  out.basis = V.leftCols(used) * es.eigenvectors();
  return out;
}

inline bool mass_is_diagonal(const SparseMat& M) {
  for (int k = 0; k < M.outerSize(); ++k)
    for (SparseMat::InnerIterator it(M, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

inline void count_against(const std::vector<double>& ev, double tol, int* index,
                          int* nullity) {
  *index = 0;
  *nullity = 0;
  for (double l : ev) {
    if (l < -tol) ++*index;
    else if (l <= tol) ++*nullity;
  }
}

}  // namespace detail

/// k lowest generalized eigenvalues of stiffness x = lambda mass x, plus exact
/// index/nullity counts against tol_zero (default 1e-7 x top eigenvalue
/// magnitude).  Dense below opt.dense_threshold dofs; above it, counts come
/// from LDLt inertia and the eigenvalue list from shift-invert Lanczos (the
/// sparse path requires a diagonal mass).
inline SpectralReport solve(const StabilityProblem& pb, int k, double tol_zero = 0.0,
                            const SolveOptions& opt = {}) {
  const Eigen::Index n = pb.stiffness.rows();
  PYM_REQUIRE(pb.mass.rows() == n && pb.stiffness.cols() == n && pb.mass.cols() == n,
              "solve: stiffness/mass shape mismatch");
  PYM_REQUIRE(k >= 1 && Eigen::Index(k) <= n, "solve: k out of range");
  SpectralReport rep;
  rep.ndof = std::size_t(n);

  if (n <= Eigen::Index(opt.dense_threshold)) {
    rep.dense = true;
    const Eigen::MatrixXd Sd(pb.stiffness), Md(pb.mass);
    const Eigen::LLT<Eigen::MatrixXd> llt(Md);
    PYM_REQUIRE(llt.info() == Eigen::Success, "solve: mass is not positive definite");
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Sd, Md);
    PYM_REQUIRE(es.info() == Eigen::Success, "solve: dense eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = std::max(std::abs(ev[0]), std::abs(ev[n - 1]));
    rep.tol_zero = tol_zero > 0.0 ? tol_zero : 1e-7 * top;
    std::vector<double> all(ev.data(), ev.data() + n);
    detail::count_against(all, rep.tol_zero, &rep.index, &rep.nullity);
    detail::count_against(all, 10.0 * rep.tol_zero, &rep.index_tol_up, &rep.nullity_tol_up);
    detail::count_against(all, 0.1 * rep.tol_zero, &rep.index_tol_down,
                          &rep.nullity_tol_down);
    rep.extended_index = rep.index + rep.nullity;
    rep.eigenvalues.assign(all.begin(), all.begin() + k);
    return rep;
  }

  PYM_REQUIRE(detail::mass_is_diagonal(pb.mass),
              "solve: sparse path requires a diagonal mass (weight pairing)");
  Eigen::VectorXd mdiag = pb.mass.diagonal();
  for (Eigen::Index i = 0; i < n; ++i)
    PYM_REQUIRE(mdiag[i] > 0.0, "solve: mass is not positive definite");

  // scale and lambda_min estimates from plain Lanczos on M^{-1} S
  const auto plain = detail::lanczos_m(
      [&](const Eigen::VectorXd& x) {
        return Eigen::VectorXd((pb.stiffness * x).cwiseQuotient(mdiag));
      },
      mdiag, opt.lanczos_steps, 0x5eedULL);
  const double top =
      std::max(std::abs(plain.ritz.front()), std::abs(plain.ritz.back()));
  rep.tol_zero = tol_zero > 0.0 ? tol_zero : 1e-7 * top;

  // exact counts by inertia
  rep.index = detail::inertia_below(pb.stiffness, pb.mass, -rep.tol_zero, top);
  rep.nullity = detail::inertia_below(pb.stiffness, pb.mass, rep.tol_zero, top) - rep.index;
  rep.extended_index = rep.index + rep.nullity;
  if (opt.tol_sweep) {
    rep.index_tol_up = detail::inertia_below(pb.stiffness, pb.mass, -10.0 * rep.tol_zero, top);
    rep.nullity_tol_up =
        detail::inertia_below(pb.stiffness, pb.mass, 10.0 * rep.tol_zero, top) -
        rep.index_tol_up;
    rep.index_tol_down =
        detail::inertia_below(pb.stiffness, pb.mass, -0.1 * rep.tol_zero, top);
    rep.nullity_tol_down =
        detail::inertia_below(pb.stiffness, pb.mass, 0.1 * rep.tol_zero, top) -
        rep.index_tol_down;
  } else {
    rep.index_tol_up = rep.index;
    rep.nullity_tol_up = rep.nullity;
    rep.index_tol_down = rep.index;
    rep.nullity_tol_down = rep.nullity;
  }

  // eigenvalue list by shift-invert Lanczos at sigma strictly below
  // lambda_min (certified by an inertia probe, since the Lanczos estimate
  // only bounds lambda_min from above); keeping sigma close maximizes the
  // spectral separation of the transformed problem
  const double lmin_est = plain.ritz.front();
  double off = std::max(1e-2 * std::abs(lmin_est), 1e-4 * top);
  double sigma = lmin_est - off;
  for (int guard = 0;
       guard < 10 && detail::inertia_below(pb.stiffness, pb.mass, sigma, top) > 0;
       ++guard) {
    off *= 4.0;
    sigma = lmin_est - off;
  }
  SparseMat K = pb.stiffness - sigma * pb.mass;
  Eigen::SimplicialLDLT<SparseMat> ldlt(K);
  if (ldlt.info() != Eigen::Success)
    throw numerical_error("solve: shift-invert factorization failed");
  const auto si = detail::lanczos_m(
      [&](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(ldlt.solve(pb.mass * x));
      },
      mdiag, std::min(std::max(60, 2 * k + 30), int(n)), 0xfacadeULL);
  // theta = 1/(lambda - sigma): largest theta are the lowest lambda
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < int(si.ritz.size()); ++i) order.emplace_back(si.ritz[i], i);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const int kk = std::min<int>(k, int(order.size()));
  for (int i = 0; i < kk; ++i) {
    const double theta = order[std::size_t(i)].first;
    PYM_REQUIRE(theta > 0.0, "solve: shift-invert produced a nonpositive pole");
    const double lam = sigma + 1.0 / theta;
    rep.eigenvalues.push_back(lam);
    const Eigen::VectorXd x = si.basis.col(order[std::size_t(i)].second);
    const Eigen::VectorXd r = pb.stiffness * x - lam * (pb.mass * x);
    const double denom = (pb.stiffness * x).norm() + std::abs(lam) * (pb.mass * x).norm();
    if (denom > 0.0) rep.residual = std::max(rep.residual, r.norm() / denom);
  }
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());
  return rep;
}

// ============================================================
// Weight invariance of the counts
// ============================================================

/// Index and nullity must agree across every positive weight pairing for the
/// same stiffness; per-weight eigenvalue lists may differ.
struct SylvesterReport {
  int index = -1, nullity = -1;  // common counts when consistent
  bool consistent = false;
  std::vector<SpectralReport> reports;
  std::string diff;  // per-weight counts on mismatch
};

inline SylvesterReport sylvester_invariance(const StabilityProblem& pb,
                                            const std::vector<WeightField>& weights,
                                            int k, double tol_zero = 0.0,
                                            const SolveOptions& opt = {}) {
  PYM_REQUIRE(weights.size() >= 2, "sylvester_invariance: need at least two weights");
  const DofLayout& lay = pb.layout;
  PYM_REQUIRE(lay.dom != nullptr, "sylvester_invariance: problem has no layout");
  const double h4 = std::pow(lay.dom->h, 4);
  SylvesterReport out;
  for (const WeightField& wf : weights) {
    PYM_REQUIRE(wf.dom == lay.dom, "sylvester_invariance: weight/domain mismatch");
    StabilityProblem cur;
    cur.layout = pb.layout;
    cur.stiffness = pb.stiffness;
    cur.p = pb.p;
    cur.form = pb.form;
    std::vector<Eigen::Triplet<double>> mtrip;
    for (std::size_t t = 0; t < lay.sites.size(); ++t) {
      const double ws = wf.w[lay.sites[t]];
      PYM_REQUIRE(ws > 0.0, "sylvester_invariance: weight must be positive");
      for (int i = 0; i < lay.per_site; ++i)
        mtrip.emplace_back(int(t) * lay.per_site + i, int(t) * lay.per_site + i,
                           ws * h4);
    }
    cur.mass = SparseMat(Eigen::Index(lay.ndof()), Eigen::Index(lay.ndof()));
    cur.mass.setFromTriplets(mtrip.begin(), mtrip.end());
    out.reports.push_back(solve(cur, k, tol_zero, opt));
  }
  out.index = out.reports.front().index;
  out.nullity = out.reports.front().nullity;
  out.consistent = true;
  for (std::size_t i = 1; i < out.reports.size(); ++i)
    if (out.reports[i].index != out.index || out.reports[i].nullity != out.nullity)
      out.consistent = false;
  if (!out.consistent) {
    out.diff = "index/nullity per weight:";
    for (const auto& r : out.reports)
      out.diff += " (" + std::to_string(r.index) + "," + std::to_string(r.nullity) + ")";
    out.index = -1;
    out.nullity = -1;
  }
  return out;
}

// ============================================================
// Weighted lower-bound diagnostic
// ============================================================

/// Bottom of the spectrum of the stability form paired against the two-scale
/// weight, compared with the fitted constant of the pointwise premise
/// (1+|F|^2)^{(p-2)/2} |F| <= mu0 * weight.
struct LowerBoundReport {
  double lambda_min = 0;
  double mu0_fit = 0;
  double bound_ratio = 0;  // -lambda_min / mu0_fit (when mu0_fit > 0)
  bool pass = false;       // lambda_min >= -mu0_fit (small slack)
};

inline LowerBoundReport spectrum_lower_bound_check(const LieAlgebra& g,
                                                   const LatticeForm& A, double p,
                                                   double eta, double delta_k,
                                                   const Eigen::Vector4d& center,
                                                   const SolveOptions& opt = {}) {
  const WeightField wf = two_scale_weight(*A.dom, eta, delta_k, center);
  const StabilityProblem pb = assemble(g, A, p, wf, StabilityForm::Qcal);
  SolveOptions o = opt;
  o.tol_sweep = false;
  const SpectralReport rep = solve(pb, 1, 0.0, o);
  LowerBoundReport out;
  out.lambda_min = rep.eigenvalues.front();

  const LatticeForm F = curvature(g, A);
  const LatticeForm f2 = norm_sq_field(F);
  const ScalarKernels kern(p);
  for (std::size_t t = 0; t < pb.layout.sites.size(); ++t) {
    const std::size_t s = pb.layout.sites[t];
    const double ff = f2.at(s)[0];
    out.mu0_fit = std::max(out.mu0_fit, kern.rho(ff) * std::sqrt(ff) / wf.w[s]);
  }
  out.bound_ratio = out.mu0_fit > 0.0 ? -out.lambda_min / out.mu0_fit : 0.0;
  out.pass = out.lambda_min >= -out.mu0_fit * (1.0 + 1e-9) - 1e-12;
  return out;
}

}  // namespace pym
