#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "json.hpp"
#include "tempo/errors.hpp"
#include "tempo/flow.hpp"
#include "tempo/kahler.hpp"
#include "tempo/rng.hpp"

using namespace tempo;
using kahler::ObservableFunction;
using kahler::ProjectivePoint;
using kahler::ProjectiveTangent;
using kahler::QuantumSystem;

namespace {

constexpr double kTwoPi = 6.283185307179586;
const std::complex<double> I(0.0, 1.0);

CMat qubit_h() {
  CMat h = CMat::Zero(2, 2);
  h(1, 1) = 1.0;
  return h;
}

CMat qutrit_h() {
  CMat h = CMat::Zero(3, 3);
  h(1, 1) = 1.0;
  h(2, 2) = 3.0;
  return h;
}

CVec cvec2(std::complex<double> a, std::complex<double> b) {
  CVec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("projective representatives are normalized and phase-fixed") {
  const CVec raw = cvec2({0.3, 0.4}, {-1.2, 0.9});
  const auto p = ProjectivePoint::from(raw);
  const CVec& v = p.representative();
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));
  // Largest-modulus component is exactly real positive.
  CHECK(v[1].imag() == 0.0);
  CHECK(v[1].real() > 0.0);
  // The same ray under any phase yields the same representative.
  const auto p2 = ProjectivePoint::from(std::exp(I * 1.234) * raw);
  CHECK((p.representative() - p2.representative()).norm() <= 1e-14);
}

TEST_CASE("phase fixing breaks modulus ties toward the lowest index") {
  const auto p = ProjectivePoint::from(cvec2({0.0, 1.0}, {1.0, 0.0}));
  CHECK(p.representative()[0].imag() == 0.0);
  CHECK(p.representative()[0].real() > 0.0);
}

TEST_CASE("projective distance ignores phase and separates rays") {
  const CVec e0 = cvec2(1, 0), e1 = cvec2(0, 1);
  CHECK(kahler::projective_distance(e0, e1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(kahler::projective_distance(e0, std::exp(I * 0.7) * e0) <= 1e-15);
  Rng rng(5);
  const auto a = kahler::random_state(4, rng);
  CHECK(kahler::projective_distance(a, a) == 0.0);
}

TEST_CASE("quantum systems reject non-Hermitian matrices and tiny dimensions") {
  CHECK_THROWS_AS(QuantumSystem(1, CMat::Identity(1, 1)), ConfigError);
  CMat bad = CMat::Zero(2, 2);
  bad(0, 1) = 1.0;  // not Hermitian
  CHECK_THROWS_AS(QuantumSystem(2, bad), ConfigError);
  CHECK_THROWS_AS(QuantumSystem(3, qubit_h()), DimensionMismatch);
}

TEST_CASE("quantum system JSON round trip") {
  const auto doc = nlohmann::json::parse(
      R"({"dim": 2, "matrix": [[0,0],[0,0],[0,0],[1,0]]})");
  const auto qs = kahler::quantum_system_from_json(doc);
  CHECK(qs.dim == 2);
  CHECK((qs.hamiltonian - qubit_h()).norm() == 0.0);
  CHECK_THROWS_AS(
      kahler::quantum_system_from_json(nlohmann::json::parse(R"({"dim": 2})")),
      ConfigError);
  CHECK_THROWS_AS(kahler::quantum_system_from_json(nlohmann::json::parse(
                      R"({"dim": 2, "matrix": [[0,0],[1,0],[0,0],[1,0]]})")),
                  ConfigError);  // not Hermitian
}

TEST_CASE("exact qubit evolution matches the hand-written phase formula") {
  // For H = diag(0, 1): psi(s) = (a, b e^{-is}) up to global phase.  This
  // pins the eigensolver route against an independent closed form.
  const CVec psi0 = cvec2({0.6, 0.0}, {0.0, 0.8});
  for (double s : {0.0, 0.3, 1.7, 4.4, 12.0}) {
    const CVec via_solver = kahler::evolve_exact(qubit_h(), psi0, s);
    const CVec by_hand = cvec2(psi0[0], psi0[1] * std::exp(-I * s));
    CHECK(kahler::projective_distance(via_solver, by_hand) <= 1e-13);
  }
}

TEST_CASE("horizontal tangents and the Kahler pairing") {
  Rng rng(11);
  const auto psi = kahler::random_state(3, rng);
  CVec raw(3);
  for (int i = 0; i < 3; ++i) raw[i] = {rng.normal(), rng.normal()};
  const auto X = ProjectiveTangent::horizontal(psi, raw);
  // Horizontality: orthogonal to the complex line through psi.
  CHECK(std::abs(psi.representative().dot(X.vector())) <= 1e-12);

  const auto Y = ProjectiveTangent::horizontal(psi, CVec::Unit(3, 0));
  const auto [g, omega] = kahler::kahler_forms(X, Y);
  // The pairing is the real/imaginary split of the Hermitian product.
  const std::complex<double> ip = X.vector().dot(Y.vector());
  CHECK(g == doctest::Approx(ip.real()).epsilon(1e-13));
  CHECK(omega == doctest::Approx(ip.imag()).epsilon(1e-13));

  SUBCASE("J is an isometry intertwining both forms") {
    const auto [g_j, omega_j] = kahler::kahler_forms(X.j(), Y.j());
    CHECK(g_j == doctest::Approx(g).epsilon(1e-12));
    CHECK(omega_j == doctest::Approx(omega).epsilon(1e-12));
    // Compatibility: g(X, Y) = Omega(X, JY).
    const auto [g_mixed, omega_mixed] = kahler::kahler_forms(X, Y.j());
    CHECK(omega_mixed == doctest::Approx(g).epsilon(1e-12));
    CHECK(g_mixed == doctest::Approx(-omega).epsilon(1e-12));
  }

  SUBCASE("non-horizontal vectors are rejected") {
    CHECK_THROWS_AS(ProjectiveTangent(psi, psi.representative()), ValidationFailed);
  }
}

TEST_CASE("kahler identity residuals vanish to near machine precision") {
  for (int dim : {2, 3, 5}) {
    const auto r = kahler::kahler_identity_residuals(dim, 50, 2026);
    CHECK(r.max() <= 1e-12);
  }
}

TEST_CASE("projective flow of an expectation function tracks exp(-isF)") {
  Rng rng(23);
  for (int dim : {2, 3}) {
    const QuantumSystem qs(dim, kahler::random_hermitian(dim, rng));
    const CMat F = kahler::random_hermitian(dim, rng);
    const auto psi0 = kahler::random_state(dim, rng);
    const auto obs = ObservableFunction::expectation(F, "F");
    const std::vector<double> grid = {0.0, 0.5, 1.0, 2.0, 4.0};
    const auto sampled =
        kahler::projective_flow_sampled(qs, obs, psi0, grid, flow::IntegratorConfig{});
    REQUIRE(sampled.outcome.verdict == flow::Verdict::Completed);
    for (std::size_t i = 0; i < sampled.states.size(); ++i) {
      const CVec exact =
          kahler::evolve_exact(F, psi0.representative(), sampled.parameters[i]);
      CHECK(kahler::projective_distance(sampled.states[i].representative(), exact) <=
            1e-8);
    }
  }
}

TEST_CASE("flow representatives stay unit and phase-fixed at every sample") {
  Rng rng(9);
  const QuantumSystem qs(3, qutrit_h());
  const auto obs = ObservableFunction::expectation(qutrit_h(), "h");
  const auto psi0 = kahler::random_state(3, rng);
  const auto sampled = kahler::projective_flow_sampled(
      qs, obs, psi0, {0.0, 1.0, 3.0}, flow::IntegratorConfig{});
  for (const auto& p : sampled.states) {
    CHECK(p.representative().norm() == doctest::Approx(1.0).epsilon(1e-12));
    const auto refixed = ProjectivePoint::from(p.representative());
    CHECK((refixed.representative() - p.representative()).norm() <= 1e-12);
  }
}

TEST_CASE("expectation flows are Killing; Weinberg flows are not") {
  Rng rng(31);
  const auto psi = kahler::random_state(3, rng);
  const CMat F = kahler::random_hermitian(3, rng);
  const double expectation_residual =
      kahler::killing_residual(ObservableFunction::expectation(F, "F"), psi, 4);
  CHECK(expectation_residual <= 1e-5);
  const double square_residual = kahler::killing_residual(
      ObservableFunction::weinberg_square(F, "square(F)"), psi, 4);
  CHECK(square_residual >= 1e-3);
  const double product_residual = kahler::killing_residual(
      ObservableFunction::weinberg_product(qutrit_h(), F, "product"), psi, 4);
  CHECK(product_residual >= 1e-3);
}

TEST_CASE("the field norm is constant along an expectation flow") {
  Rng rng(13);
  const auto psi0 = kahler::random_state(2, rng);
  std::vector<double> grid(9);
  for (int i = 0; i < 9; ++i) grid[i] = 2.0 * kTwoPi * i / 8.0;
  const double drift = kahler::killing_norm_constancy(
      ObservableFunction::expectation(qubit_h(), "h"), psi0, grid, {});
  CHECK(drift <= 1e-8);
  CHECK_THROWS_AS(kahler::killing_norm_constancy(
                      ObservableFunction::weinberg_square(qubit_h(), "sq"), psi0,
                      grid, {}),
                  KindMismatch);
}

TEST_CASE("observable function kinds are enforced") {
  const auto expectation = ObservableFunction::expectation(qubit_h(), "h");
  CHECK(expectation.matrix().rows() == 2);
  const auto square = ObservableFunction::weinberg_square(qubit_h(), "sq");
  CHECK_THROWS_AS(square.matrix(), KindMismatch);
  // Values: <H> on |1> is 1; <H>^2 is 1.
  const CVec e1 = cvec2(0, 1);
  CHECK(expectation.value(e1) == doctest::Approx(1.0));
  CHECK(square.value(e1) == doctest::Approx(1.0));
}

TEST_CASE("charts embed and invert exactly around their anchor") {
  Rng rng(41);
  for (int dim : {2, 3, 5}) {
    const auto psi = kahler::random_state(dim, rng);
    const auto chart = kahler::chart_at(psi);
    const Vec u = kahler::chart_coords(chart, psi.representative());
    CHECK(kahler::chart_contains(chart, u));
    const CVec back = kahler::chart_embed(chart, u);
    CHECK(back.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kahler::projective_distance(back, psi.representative()) <= 1e-13);
  }
}

TEST_CASE("chart fields carry closed-form gradients that match finite differences") {
  Rng rng(17);
  const auto psi = kahler::random_state(3, rng);
  const auto chart = kahler::chart_at(psi);
  const auto field =
      kahler::chart_field(chart, ObservableFunction::expectation(qutrit_h(), "h"));
  const Vec u = kahler::chart_coords(chart, psi.representative());
  const Vec grad = field.gradient(u);
  // Central finite differences of the chart evaluator.
  const double eps = 1e-6;
  for (int i = 0; i < u.size(); ++i) {
    Vec up = u, dn = u;
    up[i] += eps;
    dn[i] -= eps;
    CHECK(grad[i] == doctest::Approx((field(up) - field(dn)) / (2 * eps))
                         .epsilon(1e-5));
  }
}

TEST_CASE("chart bracket reproduces the qubit Bloch rate d<sigma_y>/ds") {
  // H = diag(0,1) in the chart over component 0 with u = (x, y):
  // the embedded state is (s, x + i y), s = sqrt(1 - x^2 - y^2);
  // h(u) = x^2 + y^2, <sigma_y>(u) = 2 s y, and along the Schrodinger flow
  // d<sigma_y>/ds = -2 s x.  The chart system's bracket must reproduce this.
  const QuantumSystem qs(2, qubit_h());
  Vec u(2);
  u << 0.3, 0.2;
  const auto chart = kahler::chart_at(ProjectivePoint::from(cvec2(1, 0)));
  const auto sys = kahler::chart_system(qs, chart);
  CMat sigma_y = CMat::Zero(2, 2);
  sigma_y(0, 1) = -I;
  sigma_y(1, 0) = I;
  const auto t_field =
      kahler::chart_field(chart, ObservableFunction::expectation(sigma_y, "sy"));
  const double s = std::sqrt(1.0 - 0.09 - 0.04);
  CHECK(t_field(u) == doctest::Approx(2 * s * 0.2).epsilon(1e-13));
  const double bracket =
      geometry::poisson_bracket(sys, sys.hamiltonian(), t_field, u);
  CHECK(bracket == doctest::Approx(-2 * s * 0.3).epsilon(1e-11));
}

TEST_CASE("pauli-like basis generalizes the Pauli matrices") {
  const auto basis2 = kahler::pauli_like_basis(2);
  REQUIRE(basis2.size() == 3);
  CMat sx = CMat::Zero(2, 2), sy = CMat::Zero(2, 2), sz = CMat::Zero(2, 2);
  sx(0, 1) = 1;
  sx(1, 0) = 1;
  sy(0, 1) = -I;
  sy(1, 0) = I;
  sz(0, 0) = 1;
  sz(1, 1) = -1;
  CHECK((basis2[0] - sx).norm() <= 1e-15);
  CHECK((basis2[1] - sy).norm() <= 1e-15);
  CHECK((basis2[2] - sz).norm() <= 1e-15);

  const auto basis3 = kahler::pauli_like_basis(3);
  REQUIRE(basis3.size() == 8);
  for (std::size_t a = 0; a < basis3.size(); ++a) {
    CHECK(std::abs(basis3[a].trace()) <= 1e-14);
    CHECK((basis3[a] - basis3[a].adjoint()).norm() <= 1e-14);
    for (std::size_t b = 0; b < basis3.size(); ++b) {
      const double want = a == b ? 2.0 : 0.0;
      CHECK(std::abs((basis3[a] * basis3[b]).trace().real() - want) <= 1e-12);
    }
  }
}

TEST_CASE("qubit demo: recurrence defeats every Pauli-type candidate") {
  const QuantumSystem qs(2, qubit_h());
  std::vector<ObservableFunction> candidates;
  const auto basis = kahler::pauli_like_basis(2);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    candidates.push_back(
        ObservableFunction::expectation(basis[i], "pauli_" + std::to_string(i + 1)));
  }
  candidates.push_back(
      ObservableFunction::expectation(CMat::Identity(2, 2), "identity"));
  Rng rng(2718);
  for (int i = 0; i < 3; ++i) {
    candidates.push_back(ObservableFunction::expectation(
        kahler::random_hermitian(2, rng), "random_" + std::to_string(i + 1)));
  }
  kahler::PauliDemoConfig cfg;
  cfg.seed = 99;
  const auto report = kahler::pauli_obstruction_demo(qs, candidates, 1e-3, cfg);
  CHECK(report.pass);
  CHECK(report.recurrence_T == doctest::Approx(kTwoPi).epsilon(1e-6));
  CHECK(report.recurrence_distance <= cfg.recurrence_eps);
  for (const auto& row : report.candidates) {
    CHECK(row.failed);
    // At the recurrence the orbit is back while any clock must have advanced
    // by T: the deviation at s = T is essentially T for a true candidate.
    CHECK(row.return_deviation >= 1.0);
  }
}

TEST_CASE("weinberg candidates are rejected by the demo precondition") {
  const QuantumSystem qs(2, qubit_h());
  std::vector<ObservableFunction> candidates;
  candidates.push_back(ObservableFunction::weinberg_square(qubit_h(), "sq"));
  CHECK_THROWS_AS(kahler::pauli_obstruction_demo(qs, candidates, 1e-3, {}),
                  KindMismatch);
}
