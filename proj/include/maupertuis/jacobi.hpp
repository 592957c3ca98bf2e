#pragma once

#include <cmath>
#include <utility>

#include "algebroid.hpp"
#include "calculus.hpp"
#include "core.hpp"
#include "dynamics.hpp"

namespace maup {

/// Bivector + curl vector pair (Lambda, E) evaluated at a point.
struct JacobiPair {
  Mat lambda;
  Vec E;
};

/// Kinetic pair: Lambda = Pi + Delta ^ X_kappa, E = -X_kappa.
/// Compatibility demands [Lambda, Lambda] = 2 Lambda ^ E and L_E Lambda = 0;
/// both vanish exactly when the structure constants close a Lie bracket.
inline JacobiPair kinetic_jacobi_pair(const AlgebroidModel& M, const MetricModel& g,
                                      const Vec& z) {
  const Vec Xk = poisson_matrix(M, z) * kinetic_gradient(g, z, M.m);
  JacobiPair out;
  out.lambda = poisson_matrix(M, z) + wedge(liouville(z, M.m), Xk);
  out.E = -Xk;
  return out;
}

inline JacobiPair kinetic_jacobi_pair(const AlgebroidModel& M, const MetricModel& g,
                                      const PhasePoint& p) {
  M.require_domain(p.q);
  return kinetic_jacobi_pair(M, g, p.packed());
}

inline std::pair<BivectorField, VectorField> kinetic_jacobi_fields(const AlgebroidModel& M,
                                                                   const MetricModel& g) {
  BivectorField L = [M, g](const Vec& z) { return kinetic_jacobi_pair(M, g, z).lambda; };
  VectorField E = [M, g](const Vec& z) { return kinetic_jacobi_pair(M, g, z).E; };
  return {L, E};
}

/// Fixed-energy pair: Lambda_e = Pi + s Delta ^ X_H, E_e = -s X_H with
/// s = 1 / (2(e - V)). Defined on {V < e}; evaluation beyond the boundary
/// throws EnergyDomainError.
inline JacobiPair energy_jacobi_pair(const AlgebroidModel& M, const MetricModel& g,
                                     const Potential& V, double e, const Vec& z) {
  const double gap = e - V.value(z.head(M.m));
  if (!(gap > 0.0)) throw EnergyDomainError("energy pair undefined where V(q) >= e");
  const double s = 1.0 / (2.0 * gap);
  const Vec XH = poisson_matrix(M, z) * mechanical_gradient(g, V, z, M.m);
  JacobiPair out;
  out.lambda = poisson_matrix(M, z) + s * wedge(liouville(z, M.m), XH);
  out.E = -s * XH;
  return out;
}

inline std::pair<BivectorField, VectorField> energy_jacobi_fields(const AlgebroidModel& M,
                                                                  const MetricModel& g,
                                                                  const Potential& V, double e) {
  BivectorField L = [M, g, V, e](const Vec& z) {
    return energy_jacobi_pair(M, g, V, e, z).lambda;
  };
  VectorField E = [M, g, V, e](const Vec& z) { return energy_jacobi_pair(M, g, V, e, z).E; };
  return {L, E};
}

/// |y . g(q) y - 2(e - V(q))|: zero exactly on the level-e sphere bundle.
inline double sphere_membership(const MetricModel& g, const Potential& V, double e,
                                const PhasePoint& p) {
  return std::abs(p.y.dot(g.cometric(p.q) * p.y) - 2.0 * (e - V.value(p.q)));
}

/// i(d kappa) Lambda + (1 - 2 kappa) X_kappa, as a vector of components
/// (contraction over the first slot). Identically zero for the kinetic pair.
inline Vec tangency_defect(const AlgebroidModel& M, const MetricModel& g, const Vec& z) {
  const Vec gk = kinetic_gradient(g, z, M.m);
  const Vec Xk = poisson_matrix(M, z) * gk;
  const JacobiPair jp = kinetic_jacobi_pair(M, g, z);
  return Vec(jp.lambda.transpose() * gk + (1.0 - 2.0 * kinetic_energy(g, z, M.m)) * Xk);
}

/// The bracket induced on sphere-bundle restrictions, computed two ways that
/// must agree for arbitrary extensions:
///   way_a = Lambda(dG1, dG2) + G1 E(G2) - G2 E(G1)   (pair form)
///   way_b = {G1, G2} + X_k(G1)(G2 - Delta G2) - X_k(G2)(G1 - Delta G1)
struct RestrictedBracket {
  double way_a;
  double way_b;
};

inline RestrictedBracket restricted_bracket(const AlgebroidModel& M, const MetricModel& g,
                                            const ScalarField& G1, const ScalarField& G2,
                                            const Vec& z, double h = 1e-5) {
  const Vec d1 = fd_gradient(G1, z, h);
  const Vec d2 = fd_gradient(G2, z, h);
  const Mat P = poisson_matrix(M, z);
  const Vec Xk = P * kinetic_gradient(g, z, M.m);
  const Vec D = liouville(z, M.m);
  const JacobiPair jp = kinetic_jacobi_pair(M, g, z);
  const double g1 = G1(z), g2 = G2(z);
  RestrictedBracket out;
  out.way_a = d1.dot(jp.lambda * d2) + g1 * jp.E.dot(d2) - g2 * jp.E.dot(d1);
  out.way_b = d1.dot(P * d2) + Xk.dot(d1) * (g2 - D.dot(d2)) - Xk.dot(d2) * (g1 - D.dot(d1));
  return out;
}

/// Homogenization check: on the extended space w = (q, y, t) the scaled pair
///   Lt = exp(-t) [ Lambda(beta)  -E(beta) ; E(beta)^T  0 ]
/// is an honest Poisson bivector, and pulling functions back through
/// (q, y, t) -> (q, exp(t) y) must reproduce the linear bracket at the scaled
/// point. Returns (bracket at scaled point, extended-bivector value).
struct PoissonizationCheck {
  double lhs;
  double rhs;
};

inline PoissonizationCheck poissonization_check(const AlgebroidModel& M, const MetricModel& g,
                                                const ScalarField& F, const ScalarField& G,
                                                const Vec& beta, double t, double h = 1e-5) {
  const Eigen::Index N = beta.size();
  const Eigen::Index m = M.m;
  Vec psi = beta;
  psi.tail(N - m) *= std::exp(t);
  PoissonizationCheck out;
  out.lhs = fd_gradient(F, psi, h).dot(poisson_matrix(M, psi) * fd_gradient(G, psi, h));

  const JacobiPair jp = kinetic_jacobi_pair(M, g, beta);
  Mat Lt = Mat::Zero(N + 1, N + 1);
  Lt.topLeftCorner(N, N) = jp.lambda;
  Lt.col(N).head(N) = -jp.E;
  Lt.row(N).head(N) = jp.E.transpose();
  Lt *= std::exp(-t);

  auto lift = [m, N](const ScalarField& f) {
    return [f, m, N](const Vec& w) {
      Vec v = w.head(N);
      v.tail(N - m) *= std::exp(w[N]);
      return f(v);
    };
  };
  Vec w(N + 1);
  w.head(N) = beta;
  w[N] = t;
  out.rhs = fd_gradient(lift(F), w, h).dot(Lt * fd_gradient(lift(G), w, h));
  return out;
}

}  // namespace maup
