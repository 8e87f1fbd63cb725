#pragma once

// Distance-aware output heads: a random-Fourier-feature Gaussian process
// layer and a Normal-Inverse-Gamma evidential layer, with their losses.

#include "pcuq/diffcore.hpp"
#include "pcuq/network.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace pcuq {

/// Frozen random projection. Effective frequencies are sqrt(2 gamma) * weight,
/// so Phi(h) . Phi(h') approximates exp(-gamma |h - h'|^2).
struct RFFProjection {
  Matrix weight;  // input_dim x feature_count, standard normal
  RowVector phase;  // feature_count, uniform [0, 2 pi)
  double gamma = 1.0;

  Index input_dim() const { return weight.rows(); }
  Index feature_count() const { return weight.cols(); }
  Matrix frequencies() const;
};

RFFProjection make_rff_projection(Index input_dim, Index feature_count, double gamma, std::mt19937_64& rng);

/// Phi = sqrt(2/D) cos(h * sqrt(2 gamma) W + b), one row per row of h.
Matrix random_features(const Matrix& h, const RFFProjection& projection);

struct GPPosterior {
  Vector beta;
  Matrix covariance;
  double noise_variance = 1.0;
};

/// (I + Phi^T Phi / noise_variance)^{-1}; identity for an empty Phi.
Matrix posterior_covariance(const Matrix& phi_train, double noise_variance);

struct GaussianPrediction {
  Vector mean;
  Vector variance;  // Phi Sigma Phi^T + noise, per row
  Vector epistemic;  // Phi Sigma Phi^T, per row
};

GaussianPrediction gp_predict(const Matrix& phi, const GPPosterior& posterior);

/// 0.5 [log(2 pi var) + (y - mean)^2 / var]. Throws for var <= 0.
double gaussian_nll(double y, double mean, double variance);

struct NIGParams {
  double gamma = 0.0;
  double nu = 1.0;
  double alpha = 2.0;
  double beta = 1.0;
};

/// Linear map to four raw outputs, in the order (gamma, nu, alpha, beta).
struct NIGHead {
  Matrix weight;  // input_dim x 4
  RowVector bias;  // 4
};

NIGParams nig_from_raw(double raw_gamma, double raw_nu, double raw_alpha, double raw_beta);
std::vector<NIGParams> nig_output(const Matrix& h, const NIGHead& head);

struct PredictiveMoments {
  double mean = 0.0;
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double total = 0.0;
};

/// Throws std::domain_error when alpha <= 1 or nu, beta <= 0.
PredictiveMoments nig_predictive(const NIGParams& p);

struct EvidentialLoss {
  double nle = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// Student-t negative log evidence plus lambda * |y - gamma| (2 nu + alpha).
EvidentialLoss evidential_loss(double y, const NIGParams& p, double lambda);

double softplus(double x);

// ---- graph forms (per-row columns, N x 1) ---------------------------------

namespace graph {

ad::Var gaussian_nll(const ad::Var& y, const ad::Var& mean, const ad::Var& variance);

struct NIGVars {
  ad::Var gamma;
  ad::Var nu;
  ad::Var alpha;
  ad::Var beta;
};

NIGVars nig_activation(const ad::Var& raw_gamma, const ad::Var& raw_nu, const ad::Var& raw_alpha,
                       const ad::Var& raw_beta);

/// Per-row evidential NLL, regularizer, and total.
struct EvidentialVars {
  ad::Var nle;
  ad::Var reg;
  ad::Var total;
};

EvidentialVars evidential_loss(const ad::Var& y, const NIGVars& p, double lambda);

}  // namespace graph

}  // namespace pcuq
