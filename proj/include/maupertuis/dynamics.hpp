#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "algebroid.hpp"
#include "calculus.hpp"
#include "core.hpp"

namespace maup {

/// Fiber cometric g^{ab}(q), symmetric positive definite, with optional exact
/// partial derivatives (list over i of the matrices d g^{ab} / d q^i).
/// When `partials` is empty the q-gradient of kinetic terms falls back to
/// central differences.
struct MetricModel {
  std::function<Mat(const Vec&)> cometric;
  std::function<std::vector<Mat>(const Vec&)> partials;
};

/// Potential on the base; `gradient` may be empty (central-difference fallback).
struct Potential {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

inline Potential zero_potential() {
  return {[](const Vec&) { return 0.0; }, [](const Vec& q) { return Vec::Zero(q.size()); }};
}

/// kappa(q, y) = y . g(q) . y / 2.
inline double kinetic_energy(const MetricModel& g, const PhasePoint& p) {
  return 0.5 * p.y.dot(g.cometric(p.q) * p.y);
}

inline double kinetic_energy(const MetricModel& g, const Vec& z, Eigen::Index m) {
  return kinetic_energy(g, PhasePoint::unpack(z, m));
}

/// H = kappa + V(q).
inline double mechanical_hamiltonian(const MetricModel& g, const Potential& V,
                                     const PhasePoint& p) {
  return kinetic_energy(g, p) + V.value(p.q);
}

inline ScalarField kinetic_function(const MetricModel& g, Eigen::Index m) {
  return [g, m](const Vec& z) { return kinetic_energy(g, z, m); };
}

inline ScalarField mechanical_function(const MetricModel& g, const Potential& V, Eigen::Index m) {
  return [g, V, m](const Vec& z) {
    return kinetic_energy(g, z, m) + V.value(z.head(m));
  };
}

/// Packed gradient of kappa; exact in y, exact in q when metric partials are
/// available, otherwise central differences in q.
inline Vec kinetic_gradient(const MetricModel& g, const Vec& z, Eigen::Index m, double h = 1e-5) {
  const Eigen::Index n = z.size() - m;
  const Vec q = z.head(m);
  const Vec y = z.tail(n);
  Vec grad = Vec::Zero(z.size());
  grad.tail(n) = g.cometric(q) * y;
  if (m > 0) {
    if (g.partials) {
      const std::vector<Mat> dg = g.partials(q);
      for (Eigen::Index i = 0; i < m; ++i)
        grad[i] = 0.5 * y.dot(dg[static_cast<std::size_t>(i)] * y);
    } else {
      const double hh = fd_scale(z, h);
      Vec w = q;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double qi = w[i];
        w[i] = qi + hh;
        const double kp = 0.5 * y.dot(g.cometric(w) * y);
        w[i] = qi - hh;
        const double km = 0.5 * y.dot(g.cometric(w) * y);
        w[i] = qi;
        grad[i] = (kp - km) / (2.0 * hh);
      }
    }
  }
  return grad;
}

inline Vec potential_gradient(const Potential& V, const Vec& q, double h = 1e-5) {
  if (V.gradient) return V.gradient(q);
  return fd_gradient([&V](const Vec& w) { return V.value(w); }, q, h);
}

inline Vec mechanical_gradient(const MetricModel& g, const Potential& V, const Vec& z,
                               Eigen::Index m, double h = 1e-5) {
  Vec grad = kinetic_gradient(g, z, m, h);
  if (m > 0) grad.head(m) += potential_gradient(V, z.head(m), h);
  return grad;
}

/// X_F = Pi grad F, so that dG/dt = {G, F} along the flow of X_F.
inline Vec hamiltonian_vector_field(const ScalarField& F, const AlgebroidModel& M, const Vec& z,
                                    double h = 1e-5) {
  return poisson_matrix(M, z) * fd_gradient(F, z, h);
}

/// X_kappa as a closure (exact kinetic gradient path).
inline VectorField kinetic_field(const AlgebroidModel& M, const MetricModel& g) {
  return [M, g](const Vec& z) {
    return Vec(poisson_matrix(M, z) * kinetic_gradient(g, z, M.m));
  };
}

/// X_H for H = kappa + V.
inline VectorField mechanical_field(const AlgebroidModel& M, const MetricModel& g,
                                    const Potential& V) {
  return [M, g, V](const Vec& z) {
    return Vec(poisson_matrix(M, z) * mechanical_gradient(g, V, z, M.m));
  };
}

inline bool in_energy_domain(const Potential& V, double e, const Vec& q) {
  return V.value(q) < e;
}

/// Conformally rescaled cometric g^{ab} / (2(e - V)) on {V < e}; evaluation
/// throws EnergyDomainError at or beyond the boundary. Partials are composed
/// exactly when both the metric partials and the potential gradient exist.
inline MetricModel jacobi_metric(const MetricModel& g, const Potential& V, double e) {
  auto factor = [V, e](const Vec& q) {
    const double gap = e - V.value(q);
    if (!(gap > 0.0))
      throw EnergyDomainError("potential reaches the energy level: V(q) >= e");
    return 1.0 / (2.0 * gap);
  };
  MetricModel out;
  out.cometric = [g, factor](const Vec& q) { return Mat(factor(q) * g.cometric(q)); };
  if (g.partials && V.gradient) {
    out.partials = [g, V, factor](const Vec& q) {
      const double lam = factor(q);
      const Vec dV = V.gradient(q);
      const Mat base = g.cometric(q);
      std::vector<Mat> dg = g.partials(q);
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        auto& gi = dg[static_cast<std::size_t>(i)];
        // d/dq^i [lam g] = lam dg + 2 lam^2 dV_i g
        gi = lam * gi + (2.0 * lam * lam * dV[i]) * base;
      }
      return dg;
    };
  }
  return out;
}

/// Rescales the fiber coordinate onto |y|_g^2 = 2(e - V(q)).
inline PhasePoint sphere_projection(const MetricModel& g, const Potential& V, double e,
                                    const PhasePoint& p) {
  const double gap = e - V.value(p.q);
  if (!(gap > 0.0))
    throw EnergyDomainError("cannot project: V(q) >= e");
  const double n2 = p.y.dot(g.cometric(p.q) * p.y);
  if (!(n2 > 1e-14))
    throw DegenerateFiberError("cannot project a (near-)zero fiber vector");
  return PhasePoint(p.q, std::sqrt(2.0 * gap / n2) * p.y);
}

enum class ExitReason { completed, domain_exit, energy_boundary };

inline const char* to_string(ExitReason r) {
  switch (r) {
    case ExitReason::completed: return "completed";
    case ExitReason::domain_exit: return "domain-exit";
    case ExitReason::energy_boundary: return "energy-boundary";
  }
  return "unknown";
}

/// Sampled integral curve. `dz` stores the field value at each sample so the
/// curve admits cubic Hermite dense evaluation. `conserved[k]` is the sample
/// series of the k-th requested functional.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> z;
  std::vector<Vec> dz;
  std::vector<double> H;
  std::vector<std::vector<double>> conserved;
  ExitReason exit = ExitReason::completed;
  std::string exit_message;

  std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
  std::string method = "rk4";  // "rk4" fixed step | "rk45" adaptive Dormand-Prince
  double step = 1e-3;          // rk4 step; rk45 initial step
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  double max_step = 0.1;
  int stride = 1;  // record every stride-th accepted step (last always recorded)
  DomainPredicate domain;                 // checked on accepted states
  ScalarField hamiltonian;                // recorded per sample when set
  std::vector<ScalarField> conserved;     // recorded per sample
  std::function<Vec(const Vec&)> post_step;  // optional stabilization map
};

namespace detail {

inline Vec rk4_step(const VectorField& f, const Vec& z, double t, double h) {
  (void)t;
  const Vec k1 = f(z);
  const Vec k2 = f(z + 0.5 * h * k1);
  const Vec k3 = f(z + 0.5 * h * k2);
  const Vec k4 = f(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4); returns (z5, error estimate sup-normalized).
struct Dopri45Result {
  Vec z;
  double err;
};

inline Dopri45Result dopri45_step(const VectorField& f, const Vec& z, double h, const Vec& k1,
                                  double abs_tol, double rel_tol) {
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  const Vec k2 = f(z + h * (a21 * k1));
  const Vec k3 = f(z + h * (a31 * k1 + a32 * k2));
  const Vec k4 = f(z + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vec k5 = f(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vec k6 = f(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  const Vec z5 = z + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vec k7 = f(z5);
  const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  double err = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double sc = abs_tol + rel_tol * std::max(std::abs(z[i]), std::abs(z5[i]));
    err = std::max(err, std::abs(errv[i]) / sc);
  }
  return {z5, err};
}

}  // namespace detail

/// Integrates dz/dt = f(z) over [t0, t1]. Samples are recorded at accepted
/// steps (every `stride`-th, plus the endpoint). A domain violation or a
/// DomainError thrown by the field truncates the trajectory with a flagged
/// exit reason; no silent projection is applied.
inline Trajectory integrate(const VectorField& f, const Vec& z0, double t0, double t1,
                            const IntegrateOptions& opts = {}) {
  if (!(t1 >= t0)) throw ConfigError("integration interval must satisfy t1 >= t0");
  if (!(opts.step > 0.0)) throw ConfigError("integration step must be positive");
  if (opts.method != "rk4" && opts.method != "rk45")
    throw ConfigError("unknown integrator method: " + opts.method);

  Trajectory traj;
  traj.conserved.resize(opts.conserved.size());

  auto record = [&](double t, const Vec& z, const Vec& dz) {
    traj.t.push_back(t);
    traj.z.push_back(z);
    traj.dz.push_back(dz);
    if (opts.hamiltonian) traj.H.push_back(opts.hamiltonian(z));
    for (std::size_t k = 0; k < opts.conserved.size(); ++k)
      traj.conserved[k].push_back(opts.conserved[k](z));
  };

  Vec z = z0;
  double t = t0;
  // A bad initial state propagates to the caller; only mid-run failures
  // truncate.
  record(t, z, f(z));
  if (t1 == t0) return traj;

  long accepted = 0;
  auto accept = [&](double tn, Vec zn) -> bool {
    if (opts.post_step) zn = opts.post_step(zn);
    if (opts.domain && !opts.domain(zn)) {
      traj.exit = ExitReason::domain_exit;
      traj.exit_message = "state left the model domain at t = " + std::to_string(tn);
      return false;
    }
    z = zn;
    t = tn;
    ++accepted;
    return true;
  };

  try {
    if (opts.method == "rk4") {
      const double span = t1 - t0;
      const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(span / opts.step - 1e-12)));
      const double h = span / static_cast<double>(nsteps);
      for (long k = 0; k < nsteps; ++k) {
        const double tn = (k + 1 == nsteps) ? t1 : t0 + h * static_cast<double>(k + 1);
        Vec zn = detail::rk4_step(f, z, t, h);
        if (!accept(tn, std::move(zn))) break;
        if (accepted % opts.stride == 0 || k + 1 == nsteps) record(t, z, f(z));
      }
    } else {
      double h = std::min(opts.step, opts.max_step);
      Vec k1 = f(z);
      while (t < t1 - 1e-14 * std::max(1.0, std::abs(t1))) {
        h = std::min(h, t1 - t);
        const auto res = detail::dopri45_step(f, z, h, k1, opts.abs_tol, opts.rel_tol);
        if (res.err <= 1.0) {
          if (!accept(t + h, res.z)) break;
          k1 = f(z);
          if (accepted % opts.stride == 0 || !(t < t1 - 1e-14 * std::max(1.0, std::abs(t1))))
            record(t, z, k1);
        }
        const double fac =
            0.9 * std::pow(std::max(res.err, 1e-10), -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::min(h, opts.max_step);
        if (!(h > 1e-15)) throw ConfigError("adaptive step underflow");
      }
    }
  } catch (const EnergyDomainError& ex) {
    traj.exit = ExitReason::energy_boundary;
    traj.exit_message = ex.what();
  } catch (const DomainError& ex) {
    traj.exit = ExitReason::domain_exit;
    traj.exit_message = ex.what();
  }
  return traj;
}

/// Cubic Hermite dense evaluation between stored samples.
inline Vec evaluate_at(const Trajectory& traj, double t) {
  if (traj.size() == 0) throw ConfigError("cannot evaluate an empty trajectory");
  if (t <= traj.t.front()) return traj.z.front();
  if (t >= traj.t.back()) return traj.z.back();
  const auto it = std::upper_bound(traj.t.begin(), traj.t.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - traj.t.begin()) - 1;
  const double t0 = traj.t[k], t1 = traj.t[k + 1];
  const double dt = t1 - t0;
  const double s = (t - t0) / dt;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
               h11 = s3 - s2;
  return h00 * traj.z[k] + (h10 * dt) * traj.dz[k] + h01 * traj.z[k + 1] +
         (h11 * dt) * traj.dz[k + 1];
}

/// Time reparametrization h(s) with h' = 2(e - V(q(s))), h(0) = 0, computed by
/// a fourth-order pass over the sampled curve (Hermite dense states feed an
/// RK4 quadrature on each interval). Strictly increasing on {V < e}.
inline std::vector<double> reparametrize(const Trajectory& c, const Potential& V, double e,
                                         Eigen::Index m) {
  auto rate = [&](const Vec& z) {
    const double gap = e - V.value(z.head(m));
    if (!(gap > 0.0)) throw EnergyDomainError("reparametrization reached V >= e");
    return 2.0 * gap;
  };
  std::vector<double> h(c.size(), 0.0);
  for (std::size_t k = 0; k + 1 < c.size(); ++k) {
    const double dt = c.t[k + 1] - c.t[k];
    const double f0 = rate(c.z[k]);
    const double fm = rate(evaluate_at(c, c.t[k] + 0.5 * dt));
    const double f1 = rate(c.z[k + 1]);
    h[k + 1] = h[k] + dt * (f0 + 4.0 * fm + f1) / 6.0;  // Simpson on the interval
  }
  return h;
}

}  // namespace maup
