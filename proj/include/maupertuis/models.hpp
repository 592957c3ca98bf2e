#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "algebroid.hpp"
#include "core.hpp"
#include "dynamics.hpp"

namespace maup {

enum class ConservedKind {
  casimir,    // brackets to zero against everything
  invariant,  // conserved along X_H for this bundle's H
  monitored   // recorded but not asserted (not conserved in general)
};

/// Named functional of the packed state, recorded per sample by integrate()
/// and asserted (kind-dependent) by the test suites.
struct ConservedQuantity {
  std::string name;
  ScalarField value;
  ConservedKind kind = ConservedKind::invariant;
};

/// Known-good number shipped with a bundle so reports can print expected vs
/// computed side by side.
struct ReferenceValue {
  std::string name;
  double value;
  std::string note;
};

/// A ready-to-run system: coefficient data plus defaults and check metadata.
/// Immutable after construction; shareable across threads.
struct SystemBundle {
  std::string name;
  AlgebroidModel model;
  MetricModel metric;
  Potential potential;
  double default_energy = 0.5;
  PhasePoint default_state;
  bool default_on_sphere = false;
  bool has_potential = false;  // false when V is identically zero
  // Predicate on the packed state used while integrating. Wider tolerance
  // band than model.domain: constraint surfaces drift at integrator-error
  // scale and input-strict bands would falsely truncate.
  std::function<bool(const Vec&)> flow_domain;
  std::vector<ConservedQuantity> conserved;
  std::vector<ReferenceValue> reference;
  std::function<PhasePoint(Rng&)> sample;

  ScalarField hamiltonian_function() const {
    return mechanical_function(metric, potential, model.m);
  }
  VectorField field() const { return mechanical_field(model, metric, potential); }
};

namespace detail {

inline std::vector<Mat> zero_structure(Eigen::Index n) {
  return std::vector<Mat>(static_cast<std::size_t>(n), Mat::Zero(n, n));
}

inline std::vector<Mat> so3_structure() {
  // [e1,e2]=e3 cyclic: C^g(a,b) = epsilon_{g a b}
  std::vector<Mat> C(3, Mat::Zero(3, 3));
  C[0](1, 2) = 1.0;
  C[0](2, 1) = -1.0;
  C[1](2, 0) = 1.0;
  C[1](0, 2) = -1.0;
  C[2](0, 1) = 1.0;
  C[2](1, 0) = -1.0;
  return C;
}

inline Vec box_sample(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

// Records whether the bundled initial point sits on the default-energy
// sphere bundle (|y|_g^2 = 2(e - V)), so tests know which defaults may be
// used without projection.
inline void mark_default_sphere(SystemBundle& b) {
  const PhasePoint& p = b.default_state;
  const double n2 = p.y.dot(b.metric.cometric(p.q) * p.y);
  b.default_on_sphere =
      std::abs(n2 - 2.0 * (b.default_energy - b.potential.value(p.q))) < 1e-9;
}

}  // namespace detail

/// rho = identity, C = 0: the canonical symplectic structure on T*R^m.
inline SystemBundle canonical_cotangent(Eigen::Index m, Potential V, MetricModel g,
                                        std::string name = "cotangent-custom") {
  if (m < 1) throw ConfigError("canonical cotangent model needs base dimension >= 1");
  SystemBundle b;
  b.name = std::move(name);
  b.model.m = m;
  b.model.n = m;
  b.model.anchor = [m](const Vec&) { return Mat(Mat::Identity(m, m)); };
  const auto C0 = detail::zero_structure(m);
  b.model.structure = [C0](const Vec&) { return C0; };
  b.metric = std::move(g);
  b.potential = std::move(V);
  b.default_state = PhasePoint(Vec::Zero(m), Vec::Unit(m, 0));
  b.default_energy = 0.5;
  b.sample = [m](Rng& rng) {
    return PhasePoint(detail::box_sample(rng, m, -0.5, 0.5), detail::box_sample(rng, m, -2, 2));
  };
  detail::mark_default_sphere(b);
  return b;
}

inline MetricModel identity_metric(Eigen::Index n) {
  MetricModel g;
  g.cometric = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  g.partials = [n](const Vec& q) {
    return std::vector<Mat>(static_cast<std::size_t>(q.size()), Mat::Zero(n, n));
  };
  return g;
}

/// Planar harmonic oscillator: flat metric, V = |q|^2 / 2. Solutions are
/// unit-frequency sinusoids, so the default state has period 2 pi.
inline SystemBundle oscillator() {
  Potential V{[](const Vec& q) { return 0.5 * q.squaredNorm(); }, [](const Vec& q) { return q; }};
  SystemBundle b = canonical_cotangent(2, std::move(V), identity_metric(2), "oscillator");
  b.default_energy = 1.0;
  b.default_state = PhasePoint((Vec(2) << 1, 0).finished(), (Vec(2) << 0, 1).finished());
  b.has_potential = true;
  detail::mark_default_sphere(b);
  b.conserved.push_back({"angular_momentum",
                         [](const Vec& z) { return z[0] * z[3] - z[1] * z[2]; },
                         ConservedKind::invariant});
  b.reference.push_back({"oscillation_period", 2.0 * M_PI, "closed-form linear solution"});
  return b;
}

/// Upper half-plane with cometric q2^2 * I (curvature -1). Domain q2 > 0.
inline SystemBundle hyperbolic_plane(Potential V = zero_potential()) {
  SystemBundle b;
  b.name = "hyperbolic";
  b.model.m = 2;
  b.model.n = 2;
  b.model.anchor = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  const auto C0 = detail::zero_structure(2);
  b.model.structure = [C0](const Vec&) { return C0; };
  b.model.domain = [](const Vec& q) { return q[1] > 0.0; };
  b.metric.cometric = [](const Vec& q) { return Mat(q[1] * q[1] * Mat::Identity(2, 2)); };
  b.metric.partials = [](const Vec& q) {
    std::vector<Mat> dg(2, Mat::Zero(2, 2));
    dg[1] = 2.0 * q[1] * Mat::Identity(2, 2);
    return dg;
  };
  b.potential = std::move(V);
  b.default_energy = 0.5;
  b.default_state = PhasePoint((Vec(2) << 0, 1).finished(), (Vec(2) << 1, 0).finished());
  b.flow_domain = [](const Vec& z) { return z[1] > 0.0; };
  b.conserved.push_back({"horizontal_momentum", [](const Vec& z) { return z[2]; },
                         ConservedKind::invariant});
  b.reference.push_back(
      {"gaussian_curvature", -1.0, "constant negative curvature of the half-plane"});
  b.sample = [](Rng& rng) {
    Vec q(2);
    q[0] = rng.uniform(-1.0, 1.0);
    q[1] = rng.uniform(0.5, 2.0);
    return PhasePoint(q, detail::box_sample(rng, 2, -2, 2));
  };
  detail::mark_default_sphere(b);
  return b;
}

/// Free rigid body on so(3)*: point base, cyclic structure constants,
/// cometric diag(1/I1, 1/I2, 1/I3).
inline SystemBundle so3_rigid_body(double I1 = 1, double I2 = 2, double I3 = 3) {
  if (!(I1 > 0.0) || !(I2 > 0.0) || !(I3 > 0.0))
    throw ConfigError("rigid body needs positive moments of inertia");
  SystemBundle b;
  b.name = "rigid-body";
  b.model.m = 0;
  b.model.n = 3;
  b.model.anchor = [](const Vec&) { return Mat(Mat::Zero(0, 3)); };
  const auto C = detail::so3_structure();
  b.model.structure = [C](const Vec&) { return C; };
  Mat g0 = Mat::Zero(3, 3);
  g0(0, 0) = 1.0 / I1;
  g0(1, 1) = 1.0 / I2;
  g0(2, 2) = 1.0 / I3;
  b.metric.cometric = [g0](const Vec&) { return g0; };
  b.metric.partials = [](const Vec&) { return std::vector<Mat>{}; };
  b.potential = zero_potential();
  b.default_energy = 0.5;
  b.default_state = PhasePoint(Vec::Zero(0), (Vec(3) << 0.3, 0.4, 0.5).finished());
  b.conserved.push_back({"momentum_norm_squared",
                         [](const Vec& z) { return z.squaredNorm(); }, ConservedKind::casimir});
  b.reference.push_back(
      {"reeb_component_1", 1.0 / 6.0, "first component of -X_kappa at y=(0,1,1), I=(1,2,3)"});
  b.sample = [](Rng& rng) {
    return PhasePoint(Vec::Zero(0), detail::box_sample(rng, 3, -2, 2));
  };
  detail::mark_default_sphere(b);
  return b;
}

/// Heavy top: base S^2 in ambient coordinates, anchor rho(q)v = q x v written
/// as rho^i_a = -eps_{iak} q^k, so(3) structure, V = m g l (q . a).
inline SystemBundle heavy_top(double I1 = 1, double I2 = 2, double I3 = 3, double mass = 1,
                              double gravity = 1, double length = 1,
                              Vec a = (Vec(3) << 0, 0, 1).finished()) {
  if (!(I1 > 0.0) || !(I2 > 0.0) || !(I3 > 0.0))
    throw ConfigError("heavy top needs positive moments of inertia");
  if (!(mass > 0.0) || !(gravity > 0.0) || !(length > 0.0))
    throw ConfigError("heavy top needs positive mass, gravity and length");
  if (a.size() != 3 || std::abs(a.norm() - 1.0) > 1e-9)
    throw ConfigError("heavy top axis must be a unit 3-vector");
  const double mgl = mass * gravity * length;
  SystemBundle b;
  b.name = "heavy-top";
  b.model.m = 3;
  b.model.n = 3;
  b.model.anchor = [](const Vec& q) {
    Mat R = Mat::Zero(3, 3);
    // -eps_{iak} q^k: column a of R is q x e_a
    R(0, 1) = -q[2];
    R(0, 2) = q[1];
    R(1, 0) = q[2];
    R(1, 2) = -q[0];
    R(2, 0) = -q[1];
    R(2, 1) = q[0];
    return R;
  };
  const auto C = detail::so3_structure();
  b.model.structure = [C](const Vec&) { return C; };
  b.model.domain = [](const Vec& q) { return std::abs(q.squaredNorm() - 1.0) < 1e-9; };
  Mat g0 = Mat::Zero(3, 3);
  g0(0, 0) = 1.0 / I1;
  g0(1, 1) = 1.0 / I2;
  g0(2, 2) = 1.0 / I3;
  b.metric.cometric = [g0](const Vec&) { return g0; };
  b.metric.partials = [](const Vec&) { return std::vector<Mat>(3, Mat::Zero(3, 3)); };
  b.potential = {[mgl, a](const Vec& q) { return mgl * q.dot(a); },
                 [mgl, a](const Vec&) { return Vec(mgl * a); }};
  b.has_potential = true;
  b.default_energy = 2.0 * mgl;
  b.default_state = PhasePoint((Vec(3) << 0, 0, 1).finished(),
                               (Vec(3) << 0.4, 0.3, 0.5).finished());
  b.flow_domain = [](const Vec& z) {
    return std::abs(z.head(3).squaredNorm() - 1.0) < 1e-6;
  };
  b.conserved.push_back({"base_norm_squared",
                         [](const Vec& z) { return z.head(3).squaredNorm(); },
                         ConservedKind::casimir});
  b.conserved.push_back({"gravity_momentum",
                         [](const Vec& z) { return z.head(3).dot(z.tail(3)); },
                         ConservedKind::monitored});
  b.reference.push_back({"potential_at_alignment", mgl, "V where q equals the axis a"});
  b.sample = [](Rng& rng) {
    Vec q(3);
    do {
      q = detail::box_sample(rng, 3, -1, 1);
    } while (q.norm() < 0.2);
    q /= q.norm();
    return PhasePoint(q, detail::box_sample(rng, 3, -2, 2));
  };
  detail::mark_default_sphere(b);
  return b;
}

/// Potential of one variable with optional derivative, for the pendula chart.
struct Potential1D {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

inline Potential1D cosine_well() {
  return {[](double u) { return 0.5 * (1.0 - std::cos(u)); },
          [](double u) { return 0.5 * std::sin(u); }};
}

/// Coupled planar pendula reduced to the difference angle psi: coordinates
/// (psi, p_psi, y) with {psi, p_psi} = 1 and y central,
/// H = (p_psi^2 + y^2)/2 + V(sqrt(2) psi). Works on the universal cover of
/// the circle chart.
inline SystemBundle coupled_pendula(Potential1D V = cosine_well()) {
  SystemBundle b;
  b.name = "pendula";
  b.model.m = 1;
  b.model.n = 2;
  b.model.anchor = [](const Vec&) { return Mat((Mat(1, 2) << 1, 0).finished()); };
  const auto C0 = detail::zero_structure(2);
  b.model.structure = [C0](const Vec&) { return C0; };
  b.metric = identity_metric(2);
  const double r2 = std::sqrt(2.0);
  b.potential = {[V, r2](const Vec& q) { return V.value(r2 * q[0]); },
                 [V, r2](const Vec& q) {
                   return Vec((Vec(1) << r2 * V.derivative(r2 * q[0])).finished());
                 }};
  b.has_potential = true;
  b.default_energy = 1.5;
  b.default_state = PhasePoint((Vec(1) << 0.3).finished(), (Vec(2) << 0.7, 0.4).finished());
  b.conserved.push_back({"central_momentum", [](const Vec& z) { return z[2]; },
                         ConservedKind::casimir});
  b.reference.push_back({"central_momentum_rate", 0.0, "dy/dt vanishes along every flow"});
  b.sample = [](Rng& rng) {
    return PhasePoint((Vec(1) << rng.uniform(-M_PI, M_PI)).finished(),
                      detail::box_sample(rng, 2, -2, 2));
  };
  detail::mark_default_sphere(b);
  return b;
}

/// Constant-table system for config-defined runs: rho (m x n), structure
/// matrices C^g (each n x n antisymmetric), constant cometric. V = 0.
inline SystemBundle inline_system(Eigen::Index m, Eigen::Index n, Mat rho, std::vector<Mat> C,
                                  Mat g0) {
  if (n < 1) throw ConfigError("inline system needs fiber dimension >= 1");
  if (rho.rows() != m || rho.cols() != n)
    throw ConfigError("inline anchor table must be base_dim x fiber_dim");
  if (static_cast<Eigen::Index>(C.size()) != n)
    throw ConfigError("inline structure table needs one matrix per fiber index");
  for (const Mat& Cg : C) {
    if (Cg.rows() != n || Cg.cols() != n)
      throw ConfigError("inline structure matrices must be fiber_dim x fiber_dim");
    if (sup_norm(Mat(Cg + Cg.transpose())) > 1e-12)
      throw ConfigError("inline structure matrices must be antisymmetric");
  }
  if (g0.rows() != n || g0.cols() != n || sup_norm(Mat(g0 - g0.transpose())) > 1e-12)
    throw ConfigError("inline cometric must be a symmetric fiber_dim x fiber_dim matrix");
  if (Eigen::LLT<Mat>(g0).info() != Eigen::Success)
    throw ConfigError("inline cometric must be positive definite");
  SystemBundle b;
  b.name = "inline";
  b.model.m = m;
  b.model.n = n;
  b.model.anchor = [rho](const Vec&) { return rho; };
  b.model.structure = [C](const Vec&) { return C; };
  b.metric.cometric = [g0](const Vec&) { return g0; };
  b.metric.partials = [m, n](const Vec&) {
    return std::vector<Mat>(static_cast<std::size_t>(m), Mat::Zero(n, n));
  };
  b.potential = zero_potential();
  b.default_state = PhasePoint(Vec::Zero(m), Vec::Unit(n, 0));
  b.sample = [m, n](Rng& rng) {
    return PhasePoint(detail::box_sample(rng, m, -0.5, 0.5), detail::box_sample(rng, n, -2, 2));
  };
  detail::mark_default_sphere(b);
  return b;
}

inline std::vector<std::string> registered_systems() {
  return {"oscillator", "hyperbolic", "rigid-body", "heavy-top", "pendula", "cotangent-custom"};
}

namespace detail {

inline double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("parameter '" + key + "' is not a number: " + text);
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size())
    throw ConfigError("parameter '" + key + "' is not a number: " + text);
  return v;
}

inline Vec parse_vector(const std::string& key, const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(parse_number(key, item));
  if (vals.empty()) throw ConfigError("parameter '" + key + "' is empty");
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

inline void reject_unknown(const std::map<std::string, std::string>& params,
                           std::initializer_list<const char*> allowed,
                           const std::string& system) {
  for (const auto& kv : params) {
    bool ok = false;
    for (const char* a : allowed)
      if (kv.first == a) ok = true;
    if (!ok)
      throw ConfigError("unknown parameter '" + kv.first + "' for system '" + system + "'");
  }
}

}  // namespace detail

/// Looks up a bundled system by registered name, applying textual parameters
/// (the CLI/config surface). Unknown names or parameters raise ConfigError.
inline SystemBundle make_system(const std::string& name,
                                const std::map<std::string, std::string>& params = {}) {
  auto get = [&params](const char* key) -> const std::string* {
    auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
  };
  if (name == "oscillator") {
    detail::reject_unknown(params, {}, name);
    return oscillator();
  }
  if (name == "hyperbolic") {
    detail::reject_unknown(params, {}, name);
    return hyperbolic_plane();
  }
  if (name == "rigid-body") {
    detail::reject_unknown(params, {"I"}, name);
    Vec I = (Vec(3) << 1, 2, 3).finished();
    if (const auto* s = get("I")) {
      I = detail::parse_vector("I", *s);
      if (I.size() != 3) throw ConfigError("parameter 'I' needs three components");
    }
    return so3_rigid_body(I[0], I[1], I[2]);
  }
  if (name == "heavy-top") {
    detail::reject_unknown(params, {"I", "mass", "gravity", "length", "mgl", "a"}, name);
    Vec I = (Vec(3) << 1, 2, 3).finished();
    double mass = 1, gravity = 1, length = 1;
    Vec a = (Vec(3) << 0, 0, 1).finished();
    if (const auto* s = get("I")) {
      I = detail::parse_vector("I", *s);
      if (I.size() != 3) throw ConfigError("parameter 'I' needs three components");
    }
    if (const auto* s = get("mgl")) {
      mass = detail::parse_number("mgl", *s);
      gravity = length = 1.0;
    }
    if (const auto* s = get("mass")) mass = detail::parse_number("mass", *s);
    if (const auto* s = get("gravity")) gravity = detail::parse_number("gravity", *s);
    if (const auto* s = get("length")) length = detail::parse_number("length", *s);
    if (const auto* s = get("a")) {
      a = detail::parse_vector("a", *s);
      if (a.size() != 3) throw ConfigError("parameter 'a' needs three components");
    }
    return heavy_top(I[0], I[1], I[2], mass, gravity, length, a);
  }
  if (name == "pendula") {
    detail::reject_unknown(params, {}, name);
    return coupled_pendula();
  }
  if (name == "cotangent-custom") {
    detail::reject_unknown(params, {"dim"}, name);
    Eigen::Index dim = 2;
    if (const auto* s = get("dim")) {
      const double d = detail::parse_number("dim", *s);
      dim = static_cast<Eigen::Index>(d);
      if (dim < 1 || static_cast<double>(dim) != d)
        throw ConfigError("parameter 'dim' must be a positive integer");
    }
    return canonical_cotangent(dim, zero_potential(), identity_metric(dim));
  }
  std::string known;
  for (const auto& s : registered_systems()) known += (known.empty() ? "" : ", ") + s;
  throw ConfigError("unknown system '" + name + "' (known: " + known + ")");
}

/// Gaussian curvature for cometrics conformal to flat, w(q) * I: with the
/// metric conformal factor e^{2 phi} = 1/w, K = -e^{-2 phi} (lap phi)
/// = -w * lap phi. Second derivatives by five-point central differences.
inline double gaussian_curvature(const MetricModel& g, const Vec& q, double h = 1e-3) {
  if (q.size() != 2) throw ConfigError("curvature oracle needs a 2-dimensional base");
  const Mat G = g.cometric(q);
  const double scale = std::max(1.0, sup_norm(G));
  if (std::abs(G(0, 1)) > 1e-8 * scale || std::abs(G(1, 0)) > 1e-8 * scale ||
      std::abs(G(0, 0) - G(1, 1)) > 1e-8 * scale || !(G(0, 0) > 0.0))
    throw ConfigError("curvature oracle needs a conformal cometric w(q) * identity");
  auto phi = [&g](const Vec& w) { return -0.5 * std::log(g.cometric(w)(0, 0)); };
  const double hh = h * std::max(1.0, sup_norm(q));
  double lap = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    Vec w = q;
    double vals[5];
    for (int k = -2; k <= 2; ++k) {
      w[axis] = q[axis] + k * hh;
      vals[k + 2] = phi(w);
    }
    lap += (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * hh * hh);
  }
  return -G(0, 0) * lap;
}

}  // namespace maup
