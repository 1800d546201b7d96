#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "spatfactor/errors.hpp"
#include "spatfactor/temporal.hpp"

using namespace spatfactor;
using namespace spatfactor::temporal;
using Eigen::MatrixXd;

namespace {

MatrixXd dense(const Eigen::SparseMatrix<double>& S) { return MatrixXd(S); }

// leave-one-out identity: Hplus . H_{-t,t} + Hstar = H_{t,t}
double reconstruct_diag(const MatrixXd& H, const CondCoeffs& cc, int t) {
  double acc = cc.hstar;
  for (const auto& [pos, val] : cc.hplus) {
    int orig = pos < t ? pos : pos + 1;
    acc += val * H(orig, t);
  }
  return acc;
}

}  // namespace

TEST_CASE("build_H matches the stated examples") {
  SUBCASE("ar1 rho=0.5 T=3") {
    Spec s = Spec::regular(Kind::ar1, 0.5, 3);
    MatrixXd H = build_H(s);
    MatrixXd expect(3, 3);
    expect << 1, .5, .25, .5, 1, .5, .25, .5, 1;
    CHECK((H - expect).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("independent is the identity") {
    Spec s = Spec::regular(Kind::independent, 0.0, 4);
    CHECK(build_H(s).isApprox(MatrixXd::Identity(4, 4)));
  }
  SUBCASE("sar1 rho=0.5 d=2 T=4 by enumeration") {
    Spec s = Spec::regular(Kind::sar1, 0.5, 4, 2);
    MatrixXd H = build_H(s);
    // oracle: enumerate |t-t'| multiples of d
    MatrixXd expect = MatrixXd::Identity(4, 4);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        int lag = std::abs(a - b);
        if (lag > 0 && lag % 2 == 0) expect(a, b) = std::pow(0.5, lag / 2);
      }
    CHECK((H - expect).cwiseAbs().maxCoeff() < 1e-15);
    MatrixXd direct(4, 4);
    direct << 1, 0, .5, 0, 0, 1, 0, .5, .5, 0, 1, 0, 0, .5, 0, 1;
    CHECK((H - direct).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("exponential uses rho = exp(-psi)") {
    Spec s = Spec::regular(Kind::exponential, 1.2, 3);
    MatrixXd H = build_H(s);
    CHECK(H(0, 1) == doctest::Approx(std::exp(-1.2)).epsilon(1e-14));
    CHECK(H(0, 2) == doctest::Approx(std::exp(-2.4)).epsilon(1e-14));
  }
  SUBCASE("rho outside (0,1) rejected") {
    Spec s;
    s.kind = Kind::ar1;
    s.psi = 1.0;  // rho = 1
    s.timepoints = {1.0, 2.0};
    CHECK_THROWS_AS(build_H(s), NumericError);
    s.psi = std::nan("");
    CHECK_THROWS_AS(build_H(s), NumericError);
  }
}

TEST_CASE("closed factors match the stated examples") {
  SUBCASE("ar1 rho=0.5 T=3 precision") {
    Spec s = Spec::regular(Kind::ar1, 0.5, 3);
    Factors f = closed_factors(s);
    MatrixXd expect(3, 3);
    expect << 1, -.5, 0, -.5, 1.25, -.5, 0, -.5, 1;
    expect /= 0.75;
    CHECK((dense(f.precision) - expect).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(f.logdet == doctest::Approx(2.0 * std::log(0.75)).epsilon(1e-12));
    // dense-inverse oracle
    MatrixXd Hinv = build_H(s).inverse();
    CHECK((dense(f.precision) - Hinv).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("sar1 rho=0.5 d=2 T=5 diagonal pattern") {
    Spec s = Spec::regular(Kind::sar1, 0.5, 5, 2);
    Factors f = closed_factors(s);
    MatrixXd P = dense(f.precision);
    const double c = 1.0 / 0.75;
    CHECK(P(0, 0) == doctest::Approx(c));
    CHECK(P(1, 1) == doctest::Approx(c));
    CHECK(P(2, 2) == doctest::Approx(c * 1.25));
    CHECK(P(3, 3) == doctest::Approx(c));
    CHECK(P(4, 4) == doctest::Approx(c));
    CHECK(P(0, 2) == doctest::Approx(-0.5 * c));
    CHECK(P(1, 3) == doctest::Approx(-0.5 * c));
    CHECK(P(0, 1) == 0.0);
    MatrixXd Hinv = build_H(s).inverse();
    CHECK((P - Hinv).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("non-equispaced grids must take the dense fallback") {
    Spec s;
    s.kind = Kind::ar1;
    s.psi = 0.5;
    s.equispaced = false;
    s.timepoints = {1.0, 2.0, 3.7};
    CHECK_THROWS_AS(closed_factors(s), NumericError);
    Factors f = dense_factors(s);
    MatrixXd H = build_H(s);
    CHECK((dense(f.precision) - H.inverse()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(f.logdet == doctest::Approx(std::log(H.determinant())).epsilon(1e-10));
  }
}

TEST_CASE("conditional coefficients match the stated examples") {
  Spec s = Spec::regular(Kind::ar1, 0.5, 10);
  SUBCASE("interior t (1-based t=5)") {
    CondCoeffs cc = conditional_coeffs(s, 4);
    REQUIRE(cc.hplus.size() == 2);
    CHECK(cc.hplus[0].first == 3);
    CHECK(cc.hplus[0].second == doctest::Approx(0.4));
    CHECK(cc.hplus[1].first == 4);
    CHECK(cc.hplus[1].second == doctest::Approx(0.4));
    CHECK(cc.hstar == doctest::Approx(0.6));
  }
  SUBCASE("edge t=1") {
    CondCoeffs cc = conditional_coeffs(s, 0);
    REQUIRE(cc.hplus.size() == 1);
    CHECK(cc.hplus[0].first == 0);
    CHECK(cc.hplus[0].second == doctest::Approx(0.5));
    CHECK(cc.hstar == doctest::Approx(0.75));
  }
  SUBCASE("identity Hplus.H_{-t,t} + Hstar = 1 for every kind and t") {
    for (Kind kind : {Kind::ar1, Kind::exponential, Kind::sar1, Kind::sexponential}) {
      int d = (kind == Kind::sar1 || kind == Kind::sexponential) ? 3 : 1;
      double psi = (kind == Kind::ar1 || kind == Kind::sar1) ? 0.6 : 0.9;
      Spec sp = Spec::regular(kind, psi, 11, d);
      MatrixXd H = build_H(sp);
      for (int t = 0; t < 11; ++t) {
        CondCoeffs cc = conditional_coeffs(sp, t);
        CHECK(reconstruct_diag(H, cc, t) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("t out of range") {
    CHECK_THROWS_AS(conditional_coeffs(s, -1), NumericError);
    CHECK_THROWS_AS(conditional_coeffs(s, 10), NumericError);
  }
}

TEST_CASE("closed forms agree with dense oracles over the full grid") {
  for (Kind kind : {Kind::ar1, Kind::exponential, Kind::sar1, Kind::sexponential}) {
    const bool seasonal = kind == Kind::sar1 || kind == Kind::sexponential;
    for (int d : {1, 2, 3}) {
      if (!seasonal && d > 1) continue;
      for (double rho : {0.1, 0.5, 0.9}) {
        double psi = (kind == Kind::ar1 || kind == Kind::sar1) ? rho : -std::log(rho);
        for (int T : {2, 3, 5, 8, 17, 50}) {
          Spec s = Spec::regular(kind, psi, T, seasonal ? d : 1);
          MatrixXd H = build_H(s);
          Factors f = closed_factors(s);
          MatrixXd Hinv = H.llt().solve(MatrixXd::Identity(T, T));
          REQUIRE((dense(f.precision) - Hinv).cwiseAbs().maxCoeff() < 1e-10);
          double logdet_dense =
              2.0 * MatrixXd(H.llt().matrixL()).diagonal().array().log().sum();
          REQUIRE(f.logdet == doctest::Approx(logdet_dense).epsilon(1e-10));
          MatrixXd R = dense(f.rooti);
          REQUIRE((R * R.transpose() - dense(f.precision)).cwiseAbs().maxCoeff() <
                  1e-10);
          // rooti upper triangular with positive diagonal
          for (int a = 0; a < T; ++a) {
            REQUIRE(R(a, a) > 0.0);
            for (int b = 0; b < a; ++b) REQUIRE(R(a, b) == 0.0);
          }
          for (int t = 0; t < T; ++t) {
            CondCoeffs fast = conditional_coeffs(s, t);
            CondCoeffs slow = conditional_coeffs_dense(H, t);
            REQUIRE(fast.hstar == doctest::Approx(slow.hstar).epsilon(1e-10));
            Eigen::VectorXd vfast = Eigen::VectorXd::Zero(T - 1);
            Eigen::VectorXd vslow = Eigen::VectorXd::Zero(T - 1);
            for (auto& [p, v] : fast.hplus) vfast[p] = v;
            for (auto& [p, v] : slow.hplus) vslow[p] = v;
            REQUIRE((vfast - vslow).cwiseAbs().maxCoeff() < 1e-10);
          }
          // H positive definite: smallest eigenvalue > 0
          Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
          REQUIRE(es.eigenvalues().minCoeff() > 0.0);
        }
      }
    }
  }
}

TEST_CASE("sar1 with d=1 equals ar1") {
  Spec a = Spec::regular(Kind::ar1, 0.7, 12);
  Spec s = Spec::regular(Kind::sar1, 0.7, 12, 1);
  CHECK(build_H(a) == build_H(s));
}

TEST_CASE("d larger than T-1 yields a block-identity-like H, still handled") {
  Spec s = Spec::regular(Kind::sar1, 0.5, 3, 5);
  MatrixXd H = build_H(s);
  CHECK(H.isApprox(MatrixXd::Identity(3, 3)));
  Factors f = closed_factors(s);
  CHECK(dense(f.precision).isApprox(MatrixXd::Identity(3, 3)));
  CHECK(f.logdet == doctest::Approx(0.0));
}
