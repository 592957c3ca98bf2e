#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace maup {

/// Step used for central differences at z: base step scaled by max(1, |z|_inf).
inline double fd_scale(const Vec& z, double h) { return h * std::max(1.0, sup_norm(z)); }

/// Central-difference gradient, O(h^2) truncation.
inline Vec fd_gradient(const ScalarField& f, const Vec& z, double h = 1e-5) {
  const double hh = fd_scale(z, h);
  Vec g(z.size());
  Vec w = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = w[i];
    w[i] = zi + hh;
    const double fp = f(w);
    w[i] = zi - hh;
    const double fm = f(w);
    w[i] = zi;
    g[i] = (fp - fm) / (2.0 * hh);
  }
  return g;
}

/// Central-difference Jacobian; J(a, l) = dF^a / dz_l.
inline Mat fd_jacobian(const VectorField& F, const Vec& z, double h = 1e-5) {
  const double hh = fd_scale(z, h);
  Vec w = z;
  Mat J;
  for (Eigen::Index l = 0; l < z.size(); ++l) {
    const double zl = w[l];
    w[l] = zl + hh;
    const Vec fp = F(w);
    w[l] = zl - hh;
    const Vec fm = F(w);
    w[l] = zl;
    if (l == 0) J.resize(fp.size(), z.size());
    J.col(l) = (fp - fm) / (2.0 * hh);
  }
  return J;
}

/// Vector-field commutator [u, v]^a = u^l d_l v^a - v^l d_l u^a by central differences.
inline Vec commutator(const VectorField& u, const VectorField& v, const Vec& z, double h = 1e-5) {
  return fd_jacobian(v, z, h) * u(z) - fd_jacobian(u, z, h) * v(z);
}

/// Antisymmetric rank-3 array on R^N stored on strictly increasing triples
/// a < b < c in lexicographic order; the accessor resolves permutation signs.
class Trivector {
public:
  explicit Trivector(Eigen::Index n)
      : n_(n), c_(static_cast<std::size_t>(n >= 3 ? n * (n - 1) * (n - 2) / 6 : 0), 0.0) {}

  Eigen::Index dim() const { return n_; }

  double& at(Eigen::Index a, Eigen::Index b, Eigen::Index c) { return c_[index(a, b, c)]; }

  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    if (a == b || b == c || a == c) return 0.0;
    double sign = 1.0;
    if (a > b) { std::swap(a, b); sign = -sign; }
    if (b > c) { std::swap(b, c); sign = -sign; }
    if (a > b) { std::swap(a, b); sign = -sign; }
    return sign * c_[index(a, b, c)];
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  template <typename F>
  void for_each_triple(F&& f) const {
    for (Eigen::Index a = 0; a < n_; ++a)
      for (Eigen::Index b = a + 1; b < n_; ++b)
        for (Eigen::Index c = b + 1; c < n_; ++c) f(a, b, c, c_[index(a, b, c)]);
  }

private:
  // position of (a,b,c), a<b<c, in lexicographic enumeration of triples
  std::size_t index(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    const auto rem2 = [](Eigen::Index k) { return k * (k - 1) / 2; };
    const auto rem3 = [&](Eigen::Index k) { return k * (k - 1) * (k - 2) / 6; };
    const std::size_t skip_a = static_cast<std::size_t>(rem3(n_) - rem3(n_ - a));
    const std::size_t skip_b = static_cast<std::size_t>(rem2(n_ - a - 1) - rem2(n_ - b));
    return skip_a + skip_b + static_cast<std::size_t>(c - b - 1);
  }

  Eigen::Index n_;
  std::vector<double> c_;
};

/// Bivector wedge of two vectors: (u ^ v)^{ab} = u^a v^b - u^b v^a.
inline Mat wedge(const Vec& u, const Vec& v) { return u * v.transpose() - v * u.transpose(); }

/// Trivector wedge of a bivector and a vector:
/// (L ^ E)^{abc} = L^{ab} E^c + L^{bc} E^a + L^{ca} E^b.
inline Trivector wedge(const Mat& L, const Vec& E) {
  Trivector T(L.rows());
  for (Eigen::Index a = 0; a < L.rows(); ++a)
    for (Eigen::Index b = a + 1; b < L.rows(); ++b)
      for (Eigen::Index c = b + 1; c < L.rows(); ++c)
        T.at(a, b, c) = L(a, b) * E[c] + L(b, c) * E[a] + L(c, a) * E[b];
  return T;
}

/// Schouten self-bracket of a bivector field by central differences:
/// [L, L]^{abc} = 2 sum_l (L^{la} d_l L^{bc} + L^{lb} d_l L^{ca} + L^{lc} d_l L^{ab}).
inline Trivector schouten_self(const BivectorField& L, const Vec& z, double h = 1e-5) {
  const Eigen::Index N = z.size();
  const double hh = fd_scale(z, h);
  const Mat L0 = L(z);
  std::vector<Mat> dL(static_cast<std::size_t>(N));
  Vec w = z;
  for (Eigen::Index l = 0; l < N; ++l) {
    const double zl = w[l];
    w[l] = zl + hh;
    const Mat Lp = L(w);
    w[l] = zl - hh;
    const Mat Lm = L(w);
    w[l] = zl;
    dL[static_cast<std::size_t>(l)] = (Lp - Lm) / (2.0 * hh);
  }
  Trivector T(N);
  for (Eigen::Index a = 0; a < N; ++a)
    for (Eigen::Index b = a + 1; b < N; ++b)
      for (Eigen::Index c = b + 1; c < N; ++c) {
        double s = 0.0;
        for (Eigen::Index l = 0; l < N; ++l) {
          const Mat& D = dL[static_cast<std::size_t>(l)];
          s += L0(l, a) * D(b, c) + L0(l, b) * D(c, a) + L0(l, c) * D(a, b);
        }
        T.at(a, b, c) = 2.0 * s;
      }
  return T;
}

/// Lie derivative of a bivector field along a vector field:
/// (lie_E L)^{ab} = E^l d_l L^{ab} - L^{lb} d_l E^a - L^{al} d_l E^b.
inline Mat lie_derivative(const BivectorField& L, const VectorField& E, const Vec& z,
                          double h = 1e-5) {
  const Eigen::Index N = z.size();
  const double hh = fd_scale(z, h);
  const Mat L0 = L(z);
  const Vec E0 = E(z);
  Mat out = Mat::Zero(N, N);
  Vec w = z;
  for (Eigen::Index l = 0; l < N; ++l) {
    const double zl = w[l];
    w[l] = zl + hh;
    const Mat Lp = L(w);
    const Vec Ep = E(w);
    w[l] = zl - hh;
    const Mat Lm = L(w);
    const Vec Em = E(w);
    w[l] = zl;
    const Mat dLl = (Lp - Lm) / (2.0 * hh);
    const Vec dEl = (Ep - Em) / (2.0 * hh);
    out += E0[l] * dLl;
    out -= L0.col(l) * dEl.transpose();        // -L^{al} d_l E^b
    out += dEl * L0.col(l).transpose();        // -L^{lb} d_l E^a = +d_l E^a L^{bl}
  }
  return out;
}

struct JacobiResiduals {
  double r1;  // |[L,L] - 2 L^E|_inf
  double r2;  // |lie_E L|_inf
};

/// Both residuals vanish exactly when (L, E) is a Jacobi pair.
inline JacobiResiduals jacobi_residuals(const BivectorField& L, const VectorField& E,
                                        const Vec& z, double h = 1e-5) {
  const Trivector S = schouten_self(L, z, h);
  const Trivector W = wedge(L(z), E(z));
  double r1 = 0.0;
  S.for_each_triple([&](Eigen::Index a, Eigen::Index b, Eigen::Index c, double v) {
    r1 = std::max(r1, std::abs(v - 2.0 * W(a, b, c)));
  });
  const double r2 = sup_norm(lie_derivative(L, E, z, h));
  return {r1, r2};
}

}  // namespace maup
