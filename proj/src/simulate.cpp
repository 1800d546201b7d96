#include "spatfactor/simulate.hpp"

#include <cmath>

#include "spatfactor/errors.hpp"
#include "spatfactor/psbp.hpp"
#include "spatfactor/rng.hpp"
#include "spatfactor/spatial.hpp"
#include "spatfactor/temporal.hpp"

namespace spatfactor::sim {

namespace {
using Eigen::MatrixXd;
using Eigen::VectorXd;
}  // namespace

Eigen::MatrixXd grid_coords(int side) {
  MatrixXd coords(side * side, 2);
  for (int i1 = 0; i1 < side; ++i1)
    for (int i2 = 0; i2 < side; ++i2) {
      coords(side * i1 + i2, 0) = i1 + 1;
      coords(side * i1 + i2, 1) = i2 + 1;
    }
  return coords;
}

Result simulate(const Design& dz) {
  const int m = static_cast<int>(dz.coords.rows());
  if (m < 1) throw DataError("simulate: no locations");
  if (!(dz.sigma2 >= 0.0)) throw DataError("simulate: sigma2 must be >= 0");
  const int k = dz.k, O = dz.O, T = dz.T, mO = m * O;
  ChainRng rng(dz.seed);

  Result res;
  res.truth.psi = dz.psi;
  res.truth.rho = dz.rho;
  res.truth.sigma2 = dz.sigma2;

  // eta ~ N(0, H ⊗ Upsilon)
  temporal::Spec ts = temporal::Spec::regular(dz.temporal_kind, dz.psi, T,
                                              dz.seasonal_period);
  MatrixXd H = temporal::build_H(ts);
  MatrixXd Ups = dz.Upsilon.size() ? dz.Upsilon : MatrixXd::Identity(k, k);
  MatrixXd cholH = H.llt().matrixL();
  MatrixXd cholU = Ups.llt().matrixL();
  auto& er = rng.stream("sim_eta");
  MatrixXd Z(T, k);
  for (int t = 0; t < T; ++t) Z.row(t) = er.normal_vector(k).transpose();
  res.truth.eta = cholH * Z * cholU.transpose();

  // labels per design
  res.truth.labels.resize(mO, k);
  res.truth.atoms.resize(k);
  auto& cr = rng.stream("sim_clusters");
  if (dz.mode == Design::Mode::fixed_groups) {
    if (dz.group_atoms.rows() != k || dz.group_atoms.cols() < 1)
      throw DataError("simulate: group_atoms must be k x G");
    const int G = static_cast<int>(dz.group_atoms.cols());
    res.truth.group.resize(m);
    for (int i = 0; i < m; ++i) res.truth.group[i] = cr.uniform_int(G);
    for (int j = 0; j < k; ++j) {
      res.truth.atoms[j] = dz.group_atoms.row(j).transpose();
      for (int i = 0; i < m; ++i)
        for (int o = 0; o < O; ++o)
          res.truth.labels(widx(i, o, m), j) = res.truth.group[i];
    }
  } else {
    // PSBP assignment: alpha from the spatial GP, weights, multinomial labels
    MatrixXd D = spatial::distance_matrix(dz.coords);
    MatrixXd F = spatial::build_F(spatial::Kind::continuous_exponential, dz.rho, D);
    F.diagonal().array() += spatial::kCholJitter;
    MatrixXd cholF = F.llt().matrixL();
    MatrixXd kap = dz.kappa.size() ? dz.kappa : MatrixXd::Identity(O, O);
    MatrixXd cholKap = kap.llt().matrixL();
    for (int j = 0; j < k; ++j) {
      int nj = dz.cluster_counts.empty()
                   ? 1 + cr.uniform_int(dz.count_upper)
                   : dz.cluster_counts[j];
      if (nj < 1) throw DataError("simulate: cluster count must be >= 1");
      res.truth.atoms[j] = VectorXd(nj);
      for (int l = 0; l < nj; ++l) res.truth.atoms[j][l] = cr.normal();
      if (nj == 1) {
        for (int s = 0; s < mO; ++s) res.truth.labels(s, j) = 0;
        continue;
      }
      std::vector<VectorXd> alpha(nj - 1);
      for (int l = 0; l < nj - 1; ++l) {
        MatrixXd Zl(O, m);
        for (int i = 0; i < m; ++i) Zl.col(i) = cr.normal_vector(O);
        MatrixXd A = cholKap * Zl * cholF.transpose();
        alpha[l] = Eigen::Map<VectorXd>(A.data(), mO);
      }
      for (int i = 0; i < m; ++i)
        for (int o = 0; o < O; ++o) {
          VectorXd asite(nj - 1);
          for (int l = 0; l < nj - 1; ++l) asite[l] = alpha[l][aidx(i, o, O)];
          VectorXd wsite = psbp::weights_from_alpha(asite, nj);
          double target = cr.uniform(), acc = 0.0;
          int lab = nj - 1;
          for (int l = 0; l < nj; ++l) {
            acc += wsite[l];
            if (target <= acc) {
              lab = l;
              break;
            }
          }
          res.truth.labels(widx(i, o, m), j) = lab;
        }
    }
  }

  // outcomes
  MatrixXd Lambda(mO, k);
  for (int j = 0; j < k; ++j)
    for (int s = 0; s < mO; ++s)
      Lambda(s, j) = res.truth.atoms[j][res.truth.labels(s, j)];
  auto& yr = rng.stream("sim_noise");
  MatrixXd Y = Lambda * res.truth.eta.transpose();
  const double sd = std::sqrt(dz.sigma2);
  if (sd > 0)
    for (int s = 0; s < mO; ++s)
      for (int t = 0; t < T; ++t) Y(s, t) += yr.normal(0.0, sd);

  res.data.coords = dz.coords;
  res.data.O = O;
  res.data.y = std::move(Y);
  res.data.equispaced = true;
  res.data.timepoints.resize(T);
  for (int t = 0; t < T; ++t) res.data.timepoints[t] = t + 1.0;
  return res;
}

}  // namespace spatfactor::sim
