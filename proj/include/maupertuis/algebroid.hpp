#pragma once

#include <string>
#include <utility>
#include <vector>

#include "calculus.hpp"
#include "core.hpp"

namespace maup {

/// Anchor coefficients: q -> m x n matrix rho^i_a.
using AnchorField = std::function<Mat(const Vec&)>;
/// Structure coefficients: q -> n matrices; entry g is the n x n matrix
/// C^g_{ab}, antisymmetric in (a, b).
using StructureField = std::function<std::vector<Mat>(const Vec&)>;
using DomainPredicate = std::function<bool(const Vec&)>;

/// Coefficient data of a vector-bundle bracket structure over an m-dimensional
/// base chart with n-dimensional fibers. Coefficients are defined on an open
/// neighborhood of the chart; `domain` is the membership test applied to
/// user-supplied points and monitored during integration (finite-difference
/// probes deliberately bypass it).
struct AlgebroidModel {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  AnchorField anchor;
  StructureField structure;
  DomainPredicate domain;

  Eigen::Index dim() const { return m + n; }

  bool in_domain(const Vec& q) const { return !domain || domain(q); }

  void require_domain(const Vec& q) const {
    if (!in_domain(q)) throw DomainError("base point outside the model domain");
  }
};

/// Fiberwise-linear Poisson tensor on the dual bundle as a full antisymmetric
/// N x N matrix over packed coordinates z = (q, y), N = m + n:
///   {q^i, q^j} = 0,  {q^i, y_a} = rho^i_a(q),  {y_a, y_b} = -C^g_{ab}(q) y_g.
/// The upper triangle is authoritative; the lower is its exact negation.
inline Mat poisson_matrix(const AlgebroidModel& M, const Vec& z) {
  const Eigen::Index m = M.m, n = M.n;
  const Vec q = z.head(m);
  const Vec y = z.tail(n);
  Mat P = Mat::Zero(m + n, m + n);
  if (m > 0) {
    const Mat rho = M.anchor(q);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index a = 0; a < n; ++a) {
        P(i, m + a) = rho(i, a);
        P(m + a, i) = -rho(i, a);
      }
  }
  const std::vector<Mat> C = M.structure(q);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double v = 0.0;
      for (Eigen::Index g = 0; g < n; ++g) v -= C[static_cast<std::size_t>(g)](a, b) * y[g];
      P(m + a, m + b) = v;
      P(m + b, m + a) = -v;
    }
  return P;
}

inline Mat poisson_matrix(const AlgebroidModel& M, const PhasePoint& p) {
  M.require_domain(p.q);
  return poisson_matrix(M, p.packed());
}

/// {F, G}(z) = grad F . Pi . grad G with central-difference gradients.
inline double poisson_bracket(const ScalarField& F, const ScalarField& G,
                              const AlgebroidModel& M, const Vec& z, double h = 1e-5) {
  const Vec gF = fd_gradient(F, z, h);
  const Vec gG = fd_gradient(G, z, h);
  return gF.dot(poisson_matrix(M, z) * gG);
}

/// Section of the bundle: fiber components as functions of the base point.
struct Section {
  std::function<Vec(const Vec&)> components;  // q -> n-vector X^a(q)
};

/// Fiberwise-linear function of a section: hat(X)(q, y) = sum_a X^a(q) y_a.
inline double hat(const Section& X, const PhasePoint& p) { return X.components(p.q).dot(p.y); }

inline ScalarField hat_field(const Section& X, Eigen::Index m) {
  return [X, m](const Vec& z) { return X.components(z.head(m)).dot(z.tail(z.size() - m)); };
}

/// Bracket of sections, with the sign pinned so that
/// {hat X, hat Y} = -hat([X, Y]) holds for the Poisson tensor above:
///   [X, Y]^g = X^a Y^b C^g_{ab} + rho(X)(Y^g) - rho(Y)(X^g),
/// where rho(X) f = sum_i (rho^i_a X^a) d f / d q^i (central differences).
inline Vec section_bracket(const AlgebroidModel& M, const Section& X, const Section& Y,
                           const Vec& q, double h = 1e-5) {
  const Eigen::Index n = M.n;
  const Vec Xq = X.components(q);
  const Vec Yq = Y.components(q);
  const std::vector<Mat> C = M.structure(q);
  Vec out(n);
  for (Eigen::Index g = 0; g < n; ++g) out[g] = Xq.dot(C[static_cast<std::size_t>(g)] * Yq);
  if (M.m > 0) {
    const Mat rho = M.anchor(q);
    const Vec vX = rho * Xq;  // base component of the image of X under the anchor
    const Vec vY = rho * Yq;
    const double hh = fd_scale(q, h);
    Vec w = q;
    for (Eigen::Index i = 0; i < M.m; ++i) {
      const double qi = w[i];
      w[i] = qi + hh;
      const Vec Yp = Y.components(w);
      const Vec Xp = X.components(w);
      w[i] = qi - hh;
      const Vec Ym = Y.components(w);
      const Vec Xm = X.components(w);
      w[i] = qi;
      out += vX[i] * (Yp - Ym) / (2.0 * hh);
      out -= vY[i] * (Xp - Xm) / (2.0 * hh);
    }
  }
  return out;
}

/// Fiber-scaling (Euler) vector field: z = (q, y) -> (0, y), packed.
inline Vec liouville(const Vec& z, Eigen::Index m) {
  Vec v = Vec::Zero(z.size());
  v.tail(z.size() - m) = z.tail(z.size() - m);
  return v;
}

inline Vec liouville(const PhasePoint& p) { return liouville(p.packed(), p.base_dim()); }

}  // namespace maup
