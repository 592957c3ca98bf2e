#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace maup {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Scalar/vector/bivector fields over packed phase coordinates z = (q, y).
using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using BivectorField = std::function<Mat(const Vec&)>;

/// Base point outside the chart domain of a model.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Base point at or beyond the energy boundary V(q) >= e.
class EnergyDomainError : public DomainError {
public:
  explicit EnergyDomainError(const std::string& what) : DomainError(what) {}
};

/// Fiber metric degenerate at the evaluation point (e.g. projecting y = 0).
class DegenerateFiberError : public std::runtime_error {
public:
  explicit DegenerateFiberError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run configuration (unknown system, malformed tables, bad keys).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Point of the dual bundle in packed order (q^1..q^m, y_1..y_n).
struct PhasePoint {
  Vec q;
  Vec y;

  PhasePoint() = default;
  PhasePoint(Vec q_in, Vec y_in) : q(std::move(q_in)), y(std::move(y_in)) {}

  Eigen::Index base_dim() const { return q.size(); }
  Eigen::Index fiber_dim() const { return y.size(); }
  Eigen::Index dim() const { return q.size() + y.size(); }

  Vec packed() const {
    Vec z(dim());
    z.head(q.size()) = q;
    z.tail(y.size()) = y;
    return z;
  }

  static PhasePoint unpack(const Vec& z, Eigen::Index m) {
    return PhasePoint(z.head(m), z.tail(z.size() - m));
  }
};

inline double sup_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }
inline double sup_norm(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// Seeded generator with a fixed 53-bit uniform mapping so that sequences are
/// reproducible bit-for-bit (std::uniform_real_distribution is not portable).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  int uniform_int(int n) {
    int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace maup
