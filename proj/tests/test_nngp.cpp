#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "spatfactor/nngp.hpp"
#include "spatfactor/rng.hpp"
#include "spatfactor/spatial.hpp"

using namespace spatfactor;
using namespace spatfactor::nngp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd line_coords(int m) {
  MatrixXd coords(m, 2);
  for (int i = 0; i < m; ++i) {
    coords(i, 0) = i + 1.0;
    coords(i, 1) = 0.0;
  }
  return coords;
}

MatrixXd random_coords(int m, std::uint64_t seed) {
  RngStream rng(seed);
  MatrixXd coords(m, 2);
  for (int i = 0; i < m; ++i) {
    coords(i, 0) = rng.uniform(0, 10);
    coords(i, 1) = rng.uniform(0, 10);
  }
  return coords;
}

}  // namespace

TEST_CASE("graph construction on a line") {
  MatrixXd coords = line_coords(5);
  NeighborGraph g = build_graph(coords, 2);
  CHECK(g.neighbors[0].empty());
  CHECK(g.neighbors[1] == std::vector<int>{0});
  CHECK(g.neighbors[2] == std::vector<int>{1, 0});
  CHECK(g.neighbors[3] == std::vector<int>{2, 1});
  CHECK(g.neighbors[4] == std::vector<int>{3, 2});
  // reverse is the exact transpose relation
  CHECK(g.reverse[0] == std::vector<int>{1, 2});
  CHECK(g.reverse[2] == std::vector<int>{3, 4});
  CHECK(g.reverse[3] == std::vector<int>{4});
  CHECK(g.reverse[4].empty());
  for (int i = 0; i < 5; ++i)
    for (std::size_t a = 0; a < g.reverse[i].size(); ++a)
      CHECK(g.neighbors[g.reverse[i][a]][g.reverse_pos[i][a]] == i);
}

TEST_CASE("saturated h gives all predecessors; DAG property holds") {
  MatrixXd coords = random_coords(8, 3);
  NeighborGraph g = build_graph(coords, 7);
  for (int i = 0; i < 8; ++i) {
    CHECK(static_cast<int>(g.neighbors[i].size()) == i);
    for (int n : g.neighbors[i]) CHECK(n < i);
  }
}

TEST_CASE("distance ties break toward the lower index") {
  MatrixXd coords(4, 2);
  coords << 0, 0, 2, 0, 4, 0, 2, 2;  // point 3 is distance sqrt(8),2,sqrt(8) from 0,1,2
  NeighborGraph g = build_graph(coords, 2);
  CHECK(g.neighbors[3][0] == 1);
  CHECK(g.neighbors[3][1] == 0);  // tie between 0 and 2 -> lower index
}

TEST_CASE("local factors: two points") {
  MatrixXd coords = line_coords(2);
  NeighborGraph g = build_graph(coords, 1);
  ExpKernel kernel{coords, 0.8};
  LocalFactors lf = local_factors(g, kernel);
  CHECK(lf.f[0] == 1.0);
  CHECK(lf.b[1][0] == doctest::Approx(std::exp(-0.8)).epsilon(1e-9));
  CHECK(lf.f[1] == doctest::Approx(1.0 - std::exp(-1.6)).epsilon(1e-9));
}

TEST_CASE("saturated joint density equals the full GP at random points") {
  const int m = 5;
  MatrixXd coords = random_coords(m, 11);
  const double rho = 0.6;
  NeighborGraph g = build_graph(coords, m - 1);
  ExpKernel kernel{coords, rho};
  LocalFactors lf = local_factors(g, kernel);
  MatrixXd D = spatial::distance_matrix(coords);
  MatrixXd F = spatial::build_F(spatial::Kind::continuous_exponential, rho, D);

  RngStream rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd x = rng.normal_vector(m);
    // NNGP log density through the factors
    double ld = 0.0;
    for (int i = 0; i < m; ++i) {
      double mean = 0.0;
      for (std::size_t a = 0; a < g.neighbors[i].size(); ++a)
        mean += lf.b[i][a] * x[g.neighbors[i][a]];
      double r = x[i] - mean;
      ld += -0.5 * std::log(2 * M_PI * lf.f[i]) - 0.5 * r * r / lf.f[i];
    }
    // dense GP oracle
    Eigen::LLT<MatrixXd> llt(F);
    double logdet = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    double quad = x.dot(llt.solve(x));
    double ld_full = -0.5 * (m * std::log(2 * M_PI) + logdet + quad);
    REQUIRE(ld == doctest::Approx(ld_full).epsilon(1e-7));
  }
}

TEST_CASE("sparse precision properties") {
  SUBCASE("m=1 gives [1]") {
    MatrixXd coords = line_coords(1);
    NeighborGraph g = build_graph(coords, 1);
    ExpKernel kernel{coords, 0.5};
    LocalFactors lf = local_factors(g, kernel);
    auto P = sparse_precision(g, lf);
    CHECK(P.rows() == 1);
    CHECK(MatrixXd(P)(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("saturated h equals dense inverse; symmetric PD") {
    const int m = 6;
    MatrixXd coords = random_coords(m, 21);
    const double rho = 0.9;
    NeighborGraph g = build_graph(coords, m - 1);
    ExpKernel kernel{coords, rho};
    LocalFactors lf = local_factors(g, kernel);
    MatrixXd P = MatrixXd(sparse_precision(g, lf));
    MatrixXd D = spatial::distance_matrix(coords);
    MatrixXd F = spatial::build_F(spatial::Kind::continuous_exponential, rho, D);
    MatrixXd Finv = F.llt().solve(MatrixXd::Identity(m, m));
    CHECK((P - Finv).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::LLT<MatrixXd>(P).info() == Eigen::Success);
  }
  SUBCASE("nnz bound m=900 h=15") {
    MatrixXd coords(900, 2);
    for (int i1 = 0; i1 < 30; ++i1)
      for (int i2 = 0; i2 < 30; ++i2) {
        coords(30 * i1 + i2, 0) = i1;
        coords(30 * i1 + i2, 1) = i2;
      }
    NeighborGraph g = build_graph(coords, 15);
    ExpKernel kernel{coords, 0.8};
    LocalFactors lf = local_factors(g, kernel);
    auto P = sparse_precision(g, lf);
    CHECK(P.nonZeros() <= 900 * (15 * 16 + 1));
    CHECK(P.nonZeros() <= 216900);
  }
}

TEST_CASE("nngp logdet") {
  SUBCASE("saturated equals dense, O=1 kappa=2") {
    const int m = 5;
    MatrixXd coords = random_coords(m, 31);
    const double rho = 0.4;
    NeighborGraph g = build_graph(coords, m - 1);
    ExpKernel kernel{coords, rho};
    LocalFactors lf = local_factors(g, kernel);
    MatrixXd kappa(1, 1);
    kappa << 2.0;
    MatrixXd D = spatial::distance_matrix(coords);
    MatrixXd F = spatial::build_F(spatial::Kind::continuous_exponential, rho, D);
    double expect = std::log((2.0 * F).determinant());
    CHECK(nngp_logdet(lf, kappa) == doctest::Approx(expect).epsilon(1e-8));
  }
  SUBCASE("m=1 O=1 kappa=1 gives 0") {
    MatrixXd coords = line_coords(1);
    NeighborGraph g = build_graph(coords, 1);
    ExpKernel kernel{coords, 0.5};
    LocalFactors lf = local_factors(g, kernel);
    CHECK(nngp_logdet(lf, MatrixXd::Identity(1, 1)) == doctest::Approx(0.0));
  }
  SUBCASE("O=2 identity kappa doubles the f contribution") {
    MatrixXd coords = line_coords(4);
    NeighborGraph g = build_graph(coords, 2);
    ExpKernel kernel{coords, 0.7};
    LocalFactors lf = local_factors(g, kernel);
    CHECK(nngp_logdet(lf, MatrixXd::Identity(2, 2)) ==
          doctest::Approx(2.0 * lf.sum_log_f()).epsilon(1e-12));
  }
}

TEST_CASE("storage audit: kernel evaluations bounded by m h^2 + m h") {
  const int m = 40, h = 5;
  MatrixXd coords = random_coords(m, 41);
  NeighborGraph g = build_graph(coords, h);
  ExpKernel kernel{coords, 0.8};
  local_factors(g, kernel);
  CHECK(kernel.evals <= static_cast<long>(m) * h * h + static_cast<long>(m) * h);
}

TEST_CASE("kriging factors") {
  const int m = 5;
  MatrixXd coords = line_coords(m);
  SUBCASE("neighbors of a new point near s_3") {
    MatrixXd pt(1, 2);
    pt << 3.1, 0.0;  // nearest: 3 (index 2), then 4 (index 3)
    auto kf = krige_factors(coords, pt, 2, 0.5);
    REQUIRE(kf[0].neighbors.size() == 2);
    CHECK(kf[0].neighbors[0] == 2);
    CHECK(kf[0].neighbors[1] == 3);
    CHECK(kf[0].f > 0.0);
    CHECK(kf[0].f <= 1.0);
  }
  SUBCASE("h >= m matches full-GP kriging") {
    MatrixXd pts(2, 2);
    pts << 2.6, 0.4, 4.2, -0.3;
    const double rho = 0.7;
    auto kf = krige_factors(coords, pts, 10, rho);
    MatrixXd D = spatial::distance_matrix(coords);
    MatrixXd F = spatial::build_F(spatial::Kind::continuous_exponential, rho, D);
    Eigen::LLT<MatrixXd> llt(F);
    for (int p = 0; p < 2; ++p) {
      VectorXd fcross(m);
      for (int i = 0; i < m; ++i)
        fcross[i] = std::exp(-rho * (coords.row(i) - pts.row(p)).norm());
      VectorXd b_full = llt.solve(fcross);
      double f_full = 1.0 - b_full.dot(fcross);
      // reorder the kriged b by neighbor index for comparison
      VectorXd b_sparse = VectorXd::Zero(m);
      for (std::size_t a = 0; a < kf[p].neighbors.size(); ++a)
        b_sparse[kf[p].neighbors[a]] = kf[p].b[a];
      REQUIRE((b_sparse - b_full).cwiseAbs().maxCoeff() < 1e-8);
      REQUIRE(kf[p].f == doctest::Approx(f_full).epsilon(1e-8));
    }
  }
  SUBCASE("coincident point flagged degenerate") {
    MatrixXd pt(1, 2);
    pt << 2.0, 0.0;
    auto kf = krige_factors(coords, pt, 2, 0.5);
    CHECK(kf[0].degenerate);
    CHECK(kf[0].f == 0.0);
    CHECK(kf[0].neighbors[0] == 1);
  }
}
