#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "tempo/errors.hpp"
#include "tempo/expr.hpp"

using tempo::ParseError;
using tempo::Vec;
using tempo::expr::Expression;

namespace {

Vec state(double q, double p) {
  Vec x(2);
  x << q, p;
  return x;
}

const std::vector<std::string> kQP = {"q", "p"};

}  // namespace

TEST_CASE("arithmetic, precedence, and literals") {
  CHECK(Expression::parse("p^2 / 2", kQP).evaluate(state(3, 4)) == doctest::Approx(8.0));
  CHECK(Expression::parse("q + p * 3", kQP).evaluate(state(1, 2)) ==
        doctest::Approx(7.0));
  CHECK(Expression::parse("(q + p) * 3", kQP).evaluate(state(1, 2)) ==
        doctest::Approx(9.0));
  // Right-associative power, unary minus binds the whole power.
  CHECK(Expression::parse("2^3^2", {}).evaluate(Vec(0)) == doctest::Approx(512.0));
  CHECK(Expression::parse("-q^2", kQP).evaluate(state(3, 0)) == doctest::Approx(-9.0));
  CHECK(Expression::parse("1e-3 * p", kQP).evaluate(state(0, 2)) ==
        doctest::Approx(2e-3));
  CHECK(Expression::parse("0.5", {}).evaluate(Vec(0)) == doctest::Approx(0.5));
}

TEST_CASE("functions") {
  CHECK(Expression::parse("exp(p)", kQP).evaluate(state(0, 1.3)) ==
        doctest::Approx(std::exp(1.3)));
  CHECK(Expression::parse("log(exp(p))", kQP).evaluate(state(0, 0.7)) ==
        doctest::Approx(0.7));
  CHECK(Expression::parse("sin(q)^2 + cos(q)^2", kQP).evaluate(state(1.234, 0)) ==
        doctest::Approx(1.0));
  CHECK(Expression::parse("q * exp(-p)", kQP).evaluate(state(2, 1)) ==
        doctest::Approx(2 * std::exp(-1.0)));
}

TEST_CASE("parse errors carry a byte position") {
  CHECK_THROWS_AS(Expression::parse("q +", kQP), ParseError);
  CHECK_THROWS_AS(Expression::parse("(q + p", kQP), ParseError);
  CHECK_THROWS_AS(Expression::parse("q @ p", kQP), ParseError);
  try {
    Expression::parse("q + zz", kQP);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("unknown identifiers are rejected, known ones bound by position") {
  CHECK_THROWS_AS(Expression::parse("x", kQP), ParseError);
  const Expression second = Expression::parse("p", kQP);
  CHECK(second.evaluate(state(5, 7)) == doctest::Approx(7.0));
}

TEST_CASE("symbolic derivative matches closed forms") {
  const Expression f = Expression::parse("q * exp(-p)", kQP);
  const Expression dq = f.derivative(0);
  const Expression dp = f.derivative(1);
  for (double q : {-1.5, 0.0, 2.0}) {
    for (double p : {-0.5, 0.3, 1.7}) {
      const Vec x = state(q, p);
      CHECK(dq.evaluate(x) == doctest::Approx(std::exp(-p)).epsilon(1e-14));
      CHECK(dp.evaluate(x) == doctest::Approx(-q * std::exp(-p)).epsilon(1e-14));
    }
  }
  // Chain + power rule through a nested composite.
  const Expression g = Expression::parse("sin(q^2)", kQP);
  const Expression gq = g.derivative(0);
  const Vec x = state(0.8, 0.0);
  CHECK(gq.evaluate(x) == doctest::Approx(2 * 0.8 * std::cos(0.64)).epsilon(1e-14));
}

TEST_CASE("as_field exposes a closed-form gradient") {
  const auto field = Expression::parse("p^2 / 2 - cos(q)", kQP).as_field("h");
  CHECK(field.gradient_mode() == tempo::geometry::GradientMode::ClosedForm);
  const Vec x = state(1.1, -0.4);
  const Vec grad = field.gradient(x);
  CHECK(grad[0] == doctest::Approx(std::sin(1.1)).epsilon(1e-14));
  CHECK(grad[1] == doctest::Approx(-0.4).epsilon(1e-14));
  CHECK(field(x) == doctest::Approx(0.08 - std::cos(1.1)).epsilon(1e-14));
}

TEST_CASE("evaluate validates the argument dimension") {
  const Expression f = Expression::parse("q + p", kQP);
  CHECK_THROWS_AS(f.evaluate(Vec(3)), tempo::DimensionMismatch);
}
