#include <catch2/catch_amalgamated.hpp>
#include <maupertuis/verify.hpp>

using maup::CheckResult;
using maup::Mat;
using maup::SystemBundle;
using maup::Vec;
using maup::VerifyOptions;
using maup::VerifyReport;
using Catch::Matchers::WithinAbs;

namespace {

const CheckResult* find_check(const VerifyReport& rep, const std::string& name) {
  for (const auto& c : rep.checks)
    if (c.name == name) return &c;
  return nullptr;
}

// Rotation-group tables plus one off-pattern entry. Rescaling a cyclic
// constant would still close (any antisymmetric cyclic table does); an entry
// outside the cyclic pattern does not.
SystemBundle corrupted_so3() {
  std::vector<Mat> C(3, Mat::Zero(3, 3));
  C[0](1, 2) = 1.0;
  C[0](2, 1) = -1.0;
  C[0](0, 1) = 0.1;
  C[0](1, 0) = -0.1;
  C[1](2, 0) = 1.0;
  C[1](0, 2) = -1.0;
  C[2](0, 1) = 1.0;
  C[2](1, 0) = -1.0;
  Mat g0 = Mat::Zero(3, 3);
  g0(0, 0) = 1.0;
  g0(1, 1) = 0.5;
  g0(2, 2) = 1.0 / 3.0;
  return maup::inline_system(0, 3, Mat::Zero(0, 3), C, g0);
}

}  // namespace

TEST_CASE("full check suite passes on the bundled systems", "[verify]") {
  VerifyOptions opts;
  opts.samples = 15;
  for (const auto& name : maup::registered_systems()) {
    const VerifyReport rep = maup::run_checks(maup::make_system(name), opts);
    INFO(name);
    for (const auto& c : rep.checks) {
      INFO(c.name << " max " << c.max_residual << " tol " << c.tolerance);
      CHECK(c.pass);
    }
    CHECK(rep.all_pass());
    CHECK(rep.system == maup::make_system(name).name);
    CHECK(rep.samples == 15);
    CHECK(rep.seed == 42);
  }
}

TEST_CASE("report is deterministic for a fixed seed", "[verify]") {
  VerifyOptions opts;
  opts.samples = 10;
  opts.seed = 7;
  const VerifyReport a = maup::run_checks(maup::so3_rigid_body(), opts);
  const VerifyReport b = maup::run_checks(maup::so3_rigid_body(), opts);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].name == b.checks[i].name);
    CHECK(a.checks[i].max_residual == b.checks[i].max_residual);
    CHECK(a.checks[i].mean_residual == b.checks[i].mean_residual);
  }
}

TEST_CASE("options are validated", "[verify]") {
  VerifyOptions opts;
  opts.samples = 0;
  CHECK_THROWS_AS(maup::run_checks(maup::oscillator(), opts), maup::ConfigError);
  opts.samples = 5;
  opts.fd_step = 0.0;
  CHECK_THROWS_AS(maup::run_checks(maup::oscillator(), opts), maup::ConfigError);
}

TEST_CASE("tolerance override loosens only the finite-difference checks", "[verify]") {
  VerifyOptions opts;
  opts.samples = 5;
  opts.tolerance = 1e-3;
  const VerifyReport rep = maup::run_checks(maup::oscillator(), opts);
  const auto* fd = find_check(rep, "jacobi_pair_r1");
  REQUIRE(fd != nullptr);
  CHECK(fd->tolerance == 1e-3);
  const auto* alg = find_check(rep, "scaling_law");
  REQUIRE(alg != nullptr);
  CHECK(alg->tolerance == 1e-9);
}

TEST_CASE("conditional checks appear exactly where they apply", "[verify]") {
  VerifyOptions opts;
  opts.samples = 5;
  const VerifyReport rigid = maup::run_checks(maup::so3_rigid_body(), opts);
  CHECK(find_check(rigid, "casimir_brackets") != nullptr);
  CHECK(find_check(rigid, "gaussian_curvature") == nullptr);

  const VerifyReport osc = maup::run_checks(maup::oscillator(), opts);
  CHECK(find_check(osc, "casimir_brackets") == nullptr);

  const VerifyReport hyp = maup::run_checks(maup::hyperbolic_plane(), opts);
  CHECK(find_check(hyp, "gaussian_curvature") != nullptr);
}

TEST_CASE("curvature formula discrepancy is reported, not asserted", "[verify]") {
  VerifyOptions opts;
  opts.samples = 5;
  const VerifyReport rep = maup::run_checks(maup::hyperbolic_plane(), opts);
  REQUIRE(rep.all_pass());
  bool found = false;
  for (const auto& n : rep.notes)
    if (n.name == "curvature_closed_form_gap") {
      found = true;
      CHECK_THAT(n.value, WithinAbs(0.5, 1e-6));
    }
  CHECK(found);
}

TEST_CASE("a non-closing structure table fails the compatibility residuals", "[verify]") {
  VerifyOptions opts;
  opts.samples = 10;
  const VerifyReport rep = maup::run_checks(corrupted_so3(), opts);
  CHECK_FALSE(rep.all_pass());

  const auto* r1 = find_check(rep, "jacobi_pair_r1");
  REQUIRE(r1 != nullptr);
  CHECK_FALSE(r1->pass);
  CHECK(r1->max_residual > 1e-2);

  const auto* anti = find_check(rep, "structure_antisymmetry");
  REQUIRE(anti != nullptr);
  CHECK(anti->pass);
}

TEST_CASE("random polynomials honor their bounds", "[verify]") {
  maup::Rng rng(123);
  for (int k = 0; k < 20; ++k) {
    const maup::Polynomial p = maup::random_polynomial(rng, 3, 3, 6);
    REQUIRE(!p.terms.empty());
    for (const auto& t : p.terms) {
      REQUIRE(t.expo.size() == 3);
      int deg = 0;
      for (int e : t.expo) {
        CHECK(e >= 0);
        deg += e;
      }
      CHECK(deg <= 3);
    }
    Vec z(3);
    z << 0.5, -1.0, 2.0;
    CHECK_THAT(p.field()(z), WithinAbs(p(z), 0.0));
  }
}

TEST_CASE("random sections produce one component polynomial per fiber index", "[verify]") {
  maup::Rng rng(5);
  const maup::Section s = maup::random_section(rng, 2, 3);
  Vec q(2);
  q << 0.3, -0.7;
  CHECK(s.components(q).size() == 3);
}

TEST_CASE("energy-domain samples stay strictly inside the accessible region", "[verify]") {
  const SystemBundle b = maup::oscillator();
  maup::Rng rng(99);
  for (int k = 0; k < 50; ++k) {
    const maup::PhasePoint p = maup::energy_domain_sample(b, b.default_energy, rng);
    CHECK(b.potential.value(p.q) < b.default_energy);
    CHECK(p.y.dot(b.metric.cometric(p.q) * p.y) > 0.0);
  }
}
