#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "spatfactor/errors.hpp"
#include "spatfactor/rng.hpp"
#include "spatfactor/spatial.hpp"

using namespace spatfactor;
using namespace spatfactor::spatial;
using Eigen::MatrixXd;

TEST_CASE("distance matrix examples") {
  SUBCASE("3-4-5 triangle") {
    MatrixXd coords(2, 2);
    coords << 0, 0, 3, 4;
    MatrixXd D = distance_matrix(coords);
    CHECK(D(0, 1) == doctest::Approx(5.0));
    CHECK(D(1, 0) == doctest::Approx(5.0));
    CHECK(D(0, 0) == 0.0);
  }
  SUBCASE("single point") {
    MatrixXd coords(1, 2);
    coords << 1, 1;
    MatrixXd D = distance_matrix(coords);
    CHECK(D.rows() == 1);
    CHECK(D(0, 0) == 0.0);
  }
  SUBCASE("unit grid diagonal") {
    MatrixXd coords(4, 2);
    coords << 0, 0, 0, 1, 1, 0, 1, 1;
    MatrixXd D = distance_matrix(coords);
    CHECK(D(0, 3) == doctest::Approx(std::sqrt(2.0)));
  }
  SUBCASE("duplicate points rejected") {
    MatrixXd coords(2, 2);
    coords << 1, 2, 1, 2;
    CHECK_THROWS_AS(distance_matrix(coords), DataError);
  }
}

TEST_CASE("build_F examples") {
  MatrixXd D(2, 2);
  D << 0, 5, 5, 0;
  SUBCASE("rho=0.8") {
    MatrixXd F = build_F(Kind::continuous_exponential, 0.8, D);
    CHECK(F(0, 0) == 1.0);
    CHECK(F(0, 1) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  }
  SUBCASE("independent is identity") {
    MatrixXd D3 = MatrixXd::Zero(3, 3);
    CHECK(build_F(Kind::independent, 0.8, D3).isApprox(MatrixXd::Identity(3, 3)));
  }
  SUBCASE("large rho limit") {
    MatrixXd F = build_F(Kind::continuous_exponential, 50.0, D / 5.0);
    CHECK(F(0, 1) < 2e-22);
  }
}

TEST_CASE("F positive semidefinite on random configurations") {
  RngStream rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    int m = 10 + trial * 10;
    MatrixXd coords(m, 2);
    for (int i = 0; i < m; ++i) {
      coords(i, 0) = rng.uniform(0, 10);
      coords(i, 1) = rng.uniform(0, 10);
    }
    MatrixXd D = distance_matrix(coords);
    MatrixXd F = build_F(Kind::continuous_exponential, rng.uniform(0.1, 2.0), D);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(F);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("interval logit transform") {
  SUBCASE("midpoint maps to zero") {
    CHECK(interval_logit(0.5, 0.0, 1.0) == doctest::Approx(0.0));
    CHECK(interval_logit(3.0, 1.0, 5.0) == doctest::Approx(0.0));
  }
  SUBCASE("round trip") {
    CHECK(interval_logit_inv(interval_logit(0.3, 0.0, 1.0), 0.0, 1.0) ==
          doctest::Approx(0.3).epsilon(1e-12));
    for (double a : {0.001, 0.5}) {
      for (double b : {2.0, 7.5}) {
        for (double frac : {0.01, 0.25, 0.5, 0.9, 0.999}) {
          double x = a + frac * (b - a);
          CHECK(interval_logit_inv(interval_logit(x, a, b), a, b) ==
                doctest::Approx(x).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("log jacobian differences (symbolic evaluation)") {
    // log|dh^{-1}/dDelta| = Delta - 2 ln(1+e^Delta) up to a constant:
    // at Delta=0 the raw value is ln(1/4); at Delta=2 it is 2 - 2 ln(1+e^2)
    double d0 = interval_log_jacobian(0.0);
    double d2 = interval_log_jacobian(2.0);
    double expect = std::log(0.25) - (2.0 - 2.0 * std::log(1.0 + std::exp(2.0)));
    CHECK(d0 - d2 == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("x outside the interval rejected") {
    CHECK_THROWS_AS(interval_logit(1.5, 0.0, 1.0), NumericError);
    CHECK_THROWS_AS(interval_logit(0.0, 0.0, 1.0), NumericError);
  }
}

TEST_CASE("default rho upper bound uses the 0.01 correlation floor") {
  MatrixXd coords(3, 2);
  coords << 0, 0, 0, 2, 0, 7;
  MatrixXd D = distance_matrix(coords);
  // min positive distance is 2
  CHECK(default_rho_upper(D) == doctest::Approx(-std::log(0.01) / 2.0));
}
