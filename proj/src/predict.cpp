#include "spatfactor/predict.hpp"

#include <cmath>

#include "spatfactor/errors.hpp"
#include "spatfactor/psbp.hpp"
#include "spatfactor/spatial.hpp"

namespace spatfactor::predict {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> resolve_iters(const std::vector<int>& req, long W) {
  if (!req.empty()) {
    for (int w : req)
      if (w < 0 || w >= W) throw DataError("prediction: iteration index out of range");
    return req;
  }
  std::vector<int> all(W);
  for (long w = 0; w < W; ++w) all[w] = static_cast<int>(w);
  return all;
}

RngStream iter_stream(std::uint64_t seed, int w) {
  return RngStream(splitmix64(seed ^ splitmix64(0x5eedULL + w)));
}

// correlation between two time points at |lag| index units
double h_entry(const temporal::Spec& ts, double rho, double lag) {
  lag = std::fabs(lag);
  if (lag == 0.0) return 1.0;
  if (ts.seasonal()) {
    const double d = ts.seasonal_period;
    const double ratio = lag / d;
    const double rounded = std::round(ratio);
    if (std::fabs(ratio - rounded) > 1e-9) return 0.0;
    return std::pow(rho, rounded);
  }
  return std::pow(rho, lag);
}

// loadings at the observed sites for stored iteration w
MatrixXd lambda_at(const gibbs::PosteriorStore& store, int w) {
  const int mO = store.m * store.O;
  if (!store.clustering()) return store.lambda[w];
  MatrixXd Lambda(mO, store.k);
  for (int j = 0; j < store.k; ++j)
    for (int s = 0; s < mO; ++s)
      Lambda(s, j) = store.theta[w][j][store.labels[w](s, j)];
  return Lambda;
}

}  // namespace

Draws predict_future(const gibbs::PosteriorStore& store, const ModelSpec& spec,
                     const Dataset& data, const TimeRequest& req,
                     std::uint64_t seed) {
  if (req.q < 1) throw DataError("predict_future: horizon must be >= 1");
  if (!req.X_new.empty() &&
      (static_cast<int>(req.X_new.size()) != req.q ||
       (store.p > 0 && req.X_new[0].cols() != store.p)))
    throw DataError("predict_future: covariate shape mismatch");
  const int T = store.T, k = store.k, q = req.q;
  const int mO = store.m * store.O;
  const bool indep = spec.temporal.kind == temporal::Kind::independent;
  const auto iters = resolve_iters(req.iters, store.W());

  Draws out;
  out.y.reserve(iters.size());
  for (int w : iters) {
    RngStream rng = iter_stream(seed, w);
    MatrixXd eta_new(q, k);
    MatrixXd cholU = store.Upsilon[w].llt().matrixL();
    if (indep) {
      for (int a = 0; a < q; ++a)
        eta_new.row(a) = (cholU * rng.normal_vector(k)).transpose();
    } else {
      temporal::Spec ts = spec.temporal;
      ts.psi = store.psi[w];
      const double rho = ts.rho();
      // cross-correlations against observed times, index lags
      MatrixXd Hcross(q, T), Hnew(q, q);
      for (int a = 0; a < q; ++a) {
        for (int t = 0; t < T; ++t) {
          double lag = ts.equispaced
                           ? static_cast<double>(T + a - t)
                           : (ts.timepoints[T - 1] + (a + 1.0)) - ts.timepoints[t];
          Hcross(a, t) = h_entry(ts, rho, lag);
        }
        for (int b = 0; b < q; ++b) Hnew(a, b) = h_entry(ts, rho, a - b);
      }
      MatrixXd B;  // q x T
      if (ts.equispaced) {
        temporal::Factors tf = temporal::closed_factors(ts);
        B = Hcross * tf.precision;
      } else {
        MatrixXd H = temporal::build_H(ts);
        B = H.llt().solve(Hcross.transpose()).transpose();
      }
      MatrixXd Hstar = Hnew - B * Hcross.transpose();
      Hstar.diagonal().array() += spatial::kCholJitter;
      Eigen::LLT<MatrixXd> llt(Hstar);
      if (llt.info() != Eigen::Success)
        throw NumericError("predict_future: conditional variance not PD");
      MatrixXd cholS = llt.matrixL();
      MatrixXd Z(q, k);
      for (int a = 0; a < q; ++a) Z.row(a) = rng.normal_vector(k).transpose();
      eta_new = B * store.eta[w] + cholS * Z * cholU.transpose();
    }
    MatrixXd Lambda = lambda_at(store, w);
    MatrixXd Y(mO, q);
    for (int a = 0; a < q; ++a) {
      VectorXd mean = Lambda * eta_new.row(a).transpose();
      if (!req.X_new.empty() && store.p > 0)
        mean += req.X_new[a] * store.beta[w];
      for (int s = 0; s < mO; ++s)
        Y(s, a) = mean[s] + rng.normal(0.0, std::sqrt(store.sigma2[w][s]));
    }
    out.y.push_back(std::move(Y));
  }
  return out;
}

Draws predict_locations(const gibbs::PosteriorStore& store, const ModelSpec& spec,
                        const Dataset& data, const SpaceRequest& req,
                        std::uint64_t seed) {
  const int r = static_cast<int>(req.new_coords.rows());
  if (r < 1) throw DataError("predict_locations: no target locations");
  if (!req.X_new.empty() &&
      (static_cast<int>(req.X_new.size()) != store.T ||
       (store.p > 0 && req.X_new[0].cols() != store.p)))
    throw DataError("predict_locations: covariate shape mismatch");
  const int m = store.m, O = store.O, k = store.k, T = store.T;
  const bool indep = spec.spatial.kind == spatial::Kind::independent;
  const bool nngp = variant_is_nngp(spec.variant);
  const auto iters = resolve_iters(req.iters, store.W());

  // coincidences with reference sites are degenerate: latent copied verbatim
  std::vector<int> coincident(r, -1);
  for (int p = 0; p < r; ++p)
    for (int i = 0; i < m; ++i)
      if ((data.coords.row(i) - req.new_coords.row(p)).norm() == 0.0) {
        coincident[p] = i;
        break;
      }

  MatrixXd Dcross(r, m), Dnew(r, r);
  for (int p = 0; p < r; ++p) {
    for (int i = 0; i < m; ++i)
      Dcross(p, i) = (req.new_coords.row(p) - data.coords.row(i)).norm();
    for (int p2 = 0; p2 < r; ++p2)
      Dnew(p, p2) = (req.new_coords.row(p) - req.new_coords.row(p2)).norm();
  }
  const MatrixXd Dref = spatial::distance_matrix(data.coords);

  Draws out;
  out.y.reserve(iters.size());
  for (int w : iters) {
    RngStream rng = iter_stream(seed, w);
    const double rho = indep ? 0.0 : store.rho[w];
    MatrixXd cholKappa = store.kappa[w].llt().matrixL();

    // kriging machinery shared by the alpha (clustering) and lambda
    // (baseline) latents; draws an O x r matrix given the O x m reference
    auto krige_draw = [&](const MatrixXd& A, bool add_noise) {
      MatrixXd out_new(O, r);
      if (indep) {
        for (int p = 0; p < r; ++p)
          out_new.col(p) = coincident[p] >= 0
                               ? A.col(coincident[p])
                               : MatrixXd(cholKappa * rng.normal_vector(O));
        return out_new;
      }
      if (nngp) {
        auto kf = nngp::krige_factors(data.coords, req.new_coords, spec.h, rho);
        for (int p = 0; p < r; ++p) {
          if (coincident[p] >= 0) {
            out_new.col(p) = A.col(coincident[p]);
            continue;
          }
          VectorXd mean = VectorXd::Zero(O);
          for (int a = 0; a < static_cast<int>(kf[p].neighbors.size()); ++a)
            mean += kf[p].b[a] * A.col(kf[p].neighbors[a]);
          out_new.col(p) = mean;
          if (add_noise)
            out_new.col(p) += std::sqrt(kf[p].f) * (cholKappa * rng.normal_vector(O));
        }
        return out_new;
      }
      // full GP: joint conditional over all r new sites
      MatrixXd F = spatial::build_F(spatial::Kind::continuous_exponential, rho, Dref);
      F.diagonal().array() += spatial::kCholJitter;
      Eigen::LLT<MatrixXd> llt(F);
      if (llt.info() != Eigen::Success)
        throw NumericError("predict_locations: reference F not PD");
      MatrixXd Fcross = (-rho * Dcross.array()).exp().matrix();  // r x m
      MatrixXd B = llt.solve(Fcross.transpose()).transpose();    // r x m
      MatrixXd Fnew = (-rho * Dnew.array()).exp().matrix();
      MatrixXd Fstar = Fnew - B * Fcross.transpose();
      Fstar.diagonal().array() += spatial::kCholJitter;
      MatrixXd mean = A * B.transpose();  // O x r
      out_new = mean;
      if (add_noise) {
        Eigen::LLT<MatrixXd> lltS(Fstar);
        if (lltS.info() != Eigen::Success)
          throw NumericError("predict_locations: kriging variance not PD");
        MatrixXd Z(O, r);
        for (int p = 0; p < r; ++p) Z.col(p) = rng.normal_vector(O);
        out_new += cholKappa * Z * MatrixXd(lltS.matrixL()).transpose();
      }
      for (int p = 0; p < r; ++p)
        if (coincident[p] >= 0) out_new.col(p) = A.col(coincident[p]);
      return out_new;
    };

    MatrixXd Lambda_new(r * O, k);
    if (store.clustering()) {
      for (int j = 0; j < k; ++j) {
        const int Lj = store.L[w][j];
        // kriged alpha surfaces for the stick-breaking levels
        std::vector<MatrixXd> alpha_new(Lj - 1);
        for (int l = 0; l < Lj - 1; ++l) {
          Eigen::Map<const MatrixXd> A(store.alpha[w][j][l].data(), O, m);
          alpha_new[l] = krige_draw(A, true);
        }
        for (int p = 0; p < r; ++p)
          for (int o = 0; o < O; ++o) {
            VectorXd asite(Lj - 1);
            for (int l = 0; l < Lj - 1; ++l) asite[l] = alpha_new[l](o, p);
            VectorXd wsite = psbp::weights_from_alpha(asite, Lj);
            double target = rng.uniform();
            double acc = 0.0;
            int lab = Lj - 1;
            for (int l = 0; l < Lj; ++l) {
              acc += wsite[l];
              if (target <= acc) {
                lab = l;
                break;
              }
            }
            Lambda_new(widx(p, o, r), j) = store.theta[w][j][lab];
          }
      }
    } else {
      for (int j = 0; j < k; ++j) {
        MatrixXd A(O, m);
        for (int i = 0; i < m; ++i)
          for (int o = 0; o < O; ++o) A(o, i) = store.lambda[w](widx(i, o, m), j);
        MatrixXd lam_new = krige_draw(A, true);
        for (int p = 0; p < r; ++p)
          for (int o = 0; o < O; ++o)
            Lambda_new(widx(p, o, r), j) = lam_new(o, p);
      }
    }

    // sigma^2 at new sites comes from its prior
    VectorXd sigma2_new(r * O);
    for (int s = 0; s < r * O; ++s)
      sigma2_new[s] = rng.inverse_gamma(spec.priors.a, spec.priors.b);

    MatrixXd Y(r * O, T);
    for (int t = 0; t < T; ++t) {
      VectorXd mean = Lambda_new * store.eta[w].row(t).transpose();
      if (!req.X_new.empty() && store.p > 0) mean += req.X_new[t] * store.beta[w];
      for (int s = 0; s < r * O; ++s)
        Y(s, t) = mean[s] + rng.normal(0.0, std::sqrt(sigma2_new[s]));
    }
    out.y.push_back(std::move(Y));
  }
  return out;
}

}  // namespace spatfactor::predict
