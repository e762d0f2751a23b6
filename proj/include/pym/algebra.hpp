/// @file algebra.hpp
/// Pointwise kernel: su(n) Lie algebra in an orthonormal basis, exterior-form
/// component tables on R^4, wedge / Hodge / interior products, and the
/// curvature endomorphism that weights the quasilinear terms.
///
/// Conventions (used by every module above this one):
///   * inner product on the algebra: <X,Y> = -tr(XY) in the defining
///     representation; generators are orthonormal for it (su(2): -i sigma_a/sqrt2).
///   * a g-valued k-form value is a comps(k) x dim real matrix, rows indexed
///     by lexicographic multi-indices, columns by algebra basis coefficients.
///   * |omega|^2 = sum over rows/columns of squares (both bases orthonormal).
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "pym/core.hpp"

namespace pym {

// ============================================================
// Lie algebra descriptor
// ============================================================
struct LieAlgebra {
  int n = 0;    // defining representation dimension
  int dim = 0;  // algebra dimension, n^2 - 1
  std::vector<Eigen::MatrixXcd> basis;  // orthonormal generators T_a
  // Dense structure constants [T_a,T_b] = f[a][b][c] T_c, plus a sparse list
  // (a,b,c,value) for hot loops.
  std::vector<double> f_dense;
  struct Nz { int a, b, c; double v; };
  std::vector<Nz> f_sparse;

  double f(int a, int b, int c) const { return f_dense[(a * dim + b) * dim + c]; }

  // [x,y] in coefficients; out may not alias x or y.  out += scale*[x,y].
  void bracket_acc(const double* x, const double* y, double* out,
                   double scale = 1.0) const {
    for (const auto& nz : f_sparse) out[nz.c] += scale * nz.v * x[nz.a] * y[nz.b];
  }

  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    PYM_REQUIRE(x.size() == dim && y.size() == dim, "bracket: wrong coefficient size");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    bracket_acc(x.data(), y.data(), out.data());
    return out;
  }

  Eigen::MatrixXcd to_matrix(const Eigen::VectorXd& x) const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < dim; ++a) m += x[a] * basis[a];
    return m;
  }

  // Orthogonal projection of an n x n matrix onto the algebra; *defect (if
  // non-null) receives the Frobenius norm of what was cut (anti-hermitian
  // traceless part is kept exactly).
  Eigen::VectorXd from_matrix(const Eigen::MatrixXcd& m, double* defect = nullptr) const {
    Eigen::VectorXd x(dim);
    for (int a = 0; a < dim; ++a) x[a] = -(m * basis[a]).trace().real();
    if (defect) *defect = (m - to_matrix(x)).norm();
    return x;
  }

  static const LieAlgebra& su2();
  static LieAlgebra su(int nn);
};

inline LieAlgebra LieAlgebra::su(int nn) {
  PYM_REQUIRE(nn >= 2, "su(n): need n >= 2");
  LieAlgebra g;
  g.n = nn;
  g.dim = nn * nn - 1;
  const std::complex<double> I(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // Generalized Gell-Mann family lambda with tr(lambda_a lambda_b) = 2 delta_ab;
  // generators T_a = -i lambda_a / sqrt2 are orthonormal for <X,Y> = -tr(XY).
  for (int j = 0; j < nn; ++j)
    for (int k = j + 1; k < nn; ++k) {
      Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(nn, nn);
      sym(j, k) = sym(k, j) = 1.0;
      Eigen::MatrixXcd asym = Eigen::MatrixXcd::Zero(nn, nn);
      asym(j, k) = -I;
      asym(k, j) = I;
      g.basis.push_back(-I * inv_sqrt2 * sym);
      g.basis.push_back(-I * inv_sqrt2 * asym);
    }
  for (int l = 1; l < nn; ++l) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(nn, nn);
    const double s = std::sqrt(2.0 / double(l * (l + 1)));
    for (int j = 0; j < l; ++j) d(j, j) = s;
    d(l, l) = -double(l) * s;
    g.basis.push_back(-I * inv_sqrt2 * d);
  }
  PYM_REQUIRE(int(g.basis.size()) == g.dim, "su(n): basis count mismatch");
  // Structure constants from commutators of the stored matrices.
  g.f_dense.assign(std::size_t(g.dim) * g.dim * g.dim, 0.0);
  for (int a = 0; a < g.dim; ++a)
    for (int b = 0; b < g.dim; ++b) {
      const Eigen::MatrixXcd c = g.basis[a] * g.basis[b] - g.basis[b] * g.basis[a];
      for (int cdx = 0; cdx < g.dim; ++cdx) {
        double v = -(c * g.basis[cdx]).trace().real();
        if (std::abs(v) < 1e-14) v = 0.0;
        g.f_dense[(a * g.dim + b) * g.dim + cdx] = v;
        if (v != 0.0) g.f_sparse.push_back({a, b, cdx, v});
      }
    }
  return g;
}

inline const LieAlgebra& LieAlgebra::su2() {
  static const LieAlgebra g = [] {
    LieAlgebra s = su(2);
    // Reorder to the conventional (sigma1, sigma2, sigma3) labelling:
    // su(2) construction above yields [-i/sqrt2 * sigma1, -i/sqrt2 * sigma2,
    // -i/sqrt2 * sigma3] already (one off-diagonal pair + one diagonal).
    return s;
  }();
  return g;
}

// ============================================================
// Exterior-form component tables on R^4
// ============================================================
// Components are stored in lexicographic multi-index order; masks are 4-bit
// subsets of {0,1,2,3}.
namespace forms {

inline constexpr int comps_table[5] = {1, 4, 6, 4, 1};
inline int comps(int k) {
  PYM_REQUIRE(k >= 0 && k <= 4, "form degree out of range");
  return comps_table[k];
}

struct Tables {
  std::array<std::vector<int>, 5> mask_of;          // degree -> list of masks (lex order)
  std::array<int, 16> index_of_mask{};              // mask -> component index
  std::array<std::array<int, 16>, 16> wedge_sgn{};  // (maskI, maskJ) -> sign or 0

  Tables() {
    for (int k = 0; k <= 4; ++k) {
      // lexicographic enumeration of k-subsets of {0,1,2,3}
      std::vector<int> idx(k);
      for (int i = 0; i < k; ++i) idx[i] = i;
      while (true) {
        int m = 0;
        for (int i : idx) m |= 1 << i;
        mask_of[k].push_back(m);
        if (k == 0) break;
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == 4 - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
      }
    }
    for (int k = 0; k <= 4; ++k)
      for (int i = 0; i < int(mask_of[k].size()); ++i)
        index_of_mask[mask_of[k][std::size_t(i)]] = i;
    for (int mi = 0; mi < 16; ++mi)
      for (int mj = 0; mj < 16; ++mj) {
        if (mi & mj) { wedge_sgn[mi][mj] = 0; continue; }
        // parity of the shuffle (I, J) -> sorted(I u J)
        int sgn = 1;
        for (int j = 0; j < 4; ++j)
          if (mj & (1 << j)) {
            int above = 0;
            for (int i = j + 1; i < 4; ++i)
              if (mi & (1 << i)) ++above;
            if (above & 1) sgn = -sgn;
          }
        wedge_sgn[mi][mj] = sgn;
      }
  }
};

inline const Tables& tables() {
  static const Tables t;
  return t;
}

inline int mask(int k, int i) { return tables().mask_of[k][std::size_t(i)]; }
inline int index_of(int m) { return tables().index_of_mask[std::size_t(m)]; }
inline int wedge_sign(int maskI, int maskJ) { return tables().wedge_sgn[std::size_t(maskI)][std::size_t(maskJ)]; }
// Hodge pairs: star(e^I) = hodge_sign(I) e^{I^c}.
inline int comask(int m) { return 0xF & ~m; }
inline int hodge_sign(int m) { return wedge_sign(m, comask(m)); }
// Sign picked up when inserting direction mu in front of multi-index mask J
// (mu not in J): e^mu ^ e^J = insert_sign * e^{J u mu}.
inline int insert_sign(int mu, int maskJ) { return wedge_sign(1 << mu, maskJ); }

}  // namespace forms

// ============================================================
// Pointwise form values
// ============================================================
// FormValue: comps(k) x dim matrix (dim = algebra dim, or 1 for scalar forms).
using FormValue = Eigen::MatrixXd;

inline FormValue zero_value(int k, int dim) {
  return FormValue::Zero(forms::comps(k), dim);
}

inline double norm_sq(const FormValue& v) { return v.squaredNorm(); }
inline double inner(const FormValue& a, const FormValue& b) {
  return (a.array() * b.array()).sum();
}

enum class WedgePairing { Bracket, Inner, Matrix };

/// Wedge of two form values of degrees ka, kb.
///  - Bracket: [A ^ B], graded bracket; g-valued in, g-valued out.
///  - Inner:   <A ^ B>, real-valued out (1 column).
///  - Matrix:  A ^ B with matrix multiplication in the defining rep, projected
///             back onto the algebra; *defect reports what the projection cut
///             (zero whenever the result lies in g, e.g. a ^ a for odd a).
inline FormValue wedge(const LieAlgebra& g, int ka, const FormValue& A, int kb,
                       const FormValue& B, WedgePairing pairing,
                       double* defect = nullptr) {
  PYM_REQUIRE(ka + kb <= 4, "wedge: degree overflow");
  const int cc = pairing == WedgePairing::Inner ? 1 : g.dim;
  FormValue out = zero_value(ka + kb, cc);
  std::vector<Eigen::MatrixXcd> mat;  // Matrix pairing scratch
  if (pairing == WedgePairing::Matrix)
    mat.assign(std::size_t(forms::comps(ka + kb)), Eigen::MatrixXcd::Zero(g.n, g.n));
  for (int i = 0; i < forms::comps(ka); ++i) {
    const int mi = forms::mask(ka, i);
    for (int j = 0; j < forms::comps(kb); ++j) {
      const int mj = forms::mask(kb, j);
      const int sgn = forms::wedge_sign(mi, mj);
      if (sgn == 0) continue;
      const int k = forms::index_of(mi | mj);
      switch (pairing) {
        case WedgePairing::Bracket: {
          Eigen::VectorXd br = g.bracket(A.row(i).transpose(), B.row(j).transpose());
          out.row(k) += double(sgn) * br.transpose();
          break;
        }
        case WedgePairing::Inner:
          out(k, 0) += double(sgn) * A.row(i).dot(B.row(j));
          break;
        case WedgePairing::Matrix:
          mat[std::size_t(k)] += double(sgn) * g.to_matrix(A.row(i).transpose()) *
                                 g.to_matrix(B.row(j).transpose());
          break;
      }
    }
  }
  if (pairing == WedgePairing::Matrix) {
    double total_defect = 0.0;
    for (int k = 0; k < forms::comps(ka + kb); ++k) {
      double d = 0.0;
      out.row(k) = g.from_matrix(mat[std::size_t(k)], &d).transpose();
      total_defect += d * d;
    }
    if (defect) *defect = std::sqrt(total_defect);
  } else if (defect) {
    *defect = 0.0;
  }
  return out;
}

/// Hodge star on values: (star v)_{I^c} = hodge_sign(I) v_I.
inline FormValue hodge(int k, const FormValue& v) {
  PYM_REQUIRE(v.rows() == forms::comps(k), "hodge: wrong component count");
  FormValue out(forms::comps(4 - k), v.cols());
  for (int i = 0; i < forms::comps(k); ++i) {
    const int m = forms::mask(k, i);
    out.row(forms::index_of(forms::comask(m))) = double(forms::hodge_sign(m)) * v.row(i);
  }
  return out;
}

/// Interior product with a real vector X: (iota_X v)_J = sum_mu X_mu sgn v_{mu u J}.
inline FormValue interior(const Eigen::Vector4d& X, int k, const FormValue& v) {
  PYM_REQUIRE(k >= 1, "interior: degree must be >= 1");
  PYM_REQUIRE(v.rows() == forms::comps(k), "interior: wrong component count");
  FormValue out = zero_value(k - 1, int(v.cols()));
  for (int j = 0; j < forms::comps(k - 1); ++j) {
    const int mj = forms::mask(k - 1, j);
    for (int mu = 0; mu < 4; ++mu) {
      if (mj & (1 << mu)) continue;
      const int sgn = forms::insert_sign(mu, mj);
      out.row(j) += double(sgn) * X[mu] * v.row(forms::index_of(mj | (1 << mu)));
    }
  }
  return out;
}

/// Curvature endomorphism of a 2-form value F (6 x dim):
///   Amat_{ab} = <dx^a ^ star F, dx^b ^ star F> / (1 + |F|^2).
/// Symmetric PSD, trace = 2|F|^2/(1+|F|^2), operator norm < 1.
inline Eigen::Matrix4d curvature_endo(const FormValue& F) {
  PYM_REQUIRE(F.rows() == 6, "curvature_endo: expects a 2-form value");
  const FormValue sF = hodge(2, F);
  // dx^a ^ star F: 3-form with components (insert a into 2-masks).
  std::array<FormValue, 4> w;
  for (int a = 0; a < 4; ++a) {
    w[a] = zero_value(3, int(F.cols()));
    for (int j = 0; j < 6; ++j) {
      const int mj = forms::mask(2, j);
      if (mj & (1 << a)) continue;
      w[a].row(forms::index_of(mj | (1 << a))) +=
          double(forms::insert_sign(a, mj)) * sF.row(j);
    }
  }
  Eigen::Matrix4d out;
  const double denom = 1.0 + norm_sq(F);
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) {
      const double v = inner(w[a], w[b]) / denom;
      out(a, b) = v;
      out(b, a) = v;
    }
  return out;
}

/// Random algebra-valued form value with entries ~ scale * normal.
inline FormValue random_value(Rng& rng, int k, int dim, double scale = 1.0) {
  FormValue v(forms::comps(k), dim);
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) v(i, j) = scale * rng.normal();
  return v;
}

}  // namespace pym
