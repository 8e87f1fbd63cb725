#include "pcuq/heads.hpp"

#include "pcuq/special.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pcuq {

Matrix RFFProjection::frequencies() const { return std::sqrt(2.0 * gamma) * weight; }

RFFProjection make_rff_projection(Index input_dim, Index feature_count, double gamma, std::mt19937_64& rng) {
  if (input_dim < 1 || feature_count < 1) throw std::invalid_argument("RFFProjection: dims must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("RFFProjection: gamma must be > 0");
  RFFProjection p;
  p.gamma = gamma;
  p.weight.resize(input_dim, feature_count);
  std::normal_distribution<double> normal;
  for (Index j = 0; j < feature_count; ++j) {
    for (Index i = 0; i < input_dim; ++i) p.weight(i, j) = normal(rng);
  }
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  p.phase.resize(feature_count);
  for (Index j = 0; j < feature_count; ++j) p.phase(j) = uni(rng);
  return p;
}

Matrix random_features(const Matrix& h, const RFFProjection& projection) {
  if (h.cols() != projection.input_dim()) {
    std::ostringstream os;
    os << "random_features: expected dim " << projection.input_dim() << ", got " << h.cols();
    throw std::invalid_argument(os.str());
  }
  Matrix z = h * projection.frequencies();
  z.rowwise() += projection.phase;
  const double scale = std::sqrt(2.0 / static_cast<double>(projection.feature_count()));
  return (scale * z.array().cos()).matrix();
}

Matrix posterior_covariance(const Matrix& phi_train, double noise_variance) {
  if (!(noise_variance > 0.0)) throw std::invalid_argument("posterior_covariance: noise variance must be > 0");
  if (!phi_train.allFinite()) throw std::invalid_argument("posterior_covariance: non-finite features");
  const Index d = phi_train.cols();
  Matrix precision = Matrix::Identity(d, d);
  if (phi_train.rows() > 0) {
    precision.selfadjointView<Eigen::Lower>().rankUpdate(phi_train.transpose(), 1.0 / noise_variance);
    precision = precision.selfadjointView<Eigen::Lower>();
  }
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw std::runtime_error("posterior_covariance: precision not positive definite");
  Matrix sigma = llt.solve(Matrix::Identity(d, d));
  return 0.5 * (sigma + sigma.transpose());
}

GaussianPrediction gp_predict(const Matrix& phi, const GPPosterior& posterior) {
  if (phi.cols() != posterior.beta.size() || posterior.covariance.rows() != phi.cols()) {
    throw std::invalid_argument("gp_predict: feature dimension mismatch");
  }
  GaussianPrediction out;
  out.mean = phi * posterior.beta;
  out.epistemic = (phi * posterior.covariance).cwiseProduct(phi).rowwise().sum();
  out.variance = out.epistemic.array() + posterior.noise_variance;
  return out;
}

double gaussian_nll(double y, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_nll: variance must be > 0");
  const double r = y - mean;
  return 0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

// Keeps alpha strictly above 1 after rounding when softplus underflows.
constexpr double kAlphaShift = 1.0 + 1e-9;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

NIGParams nig_from_raw(double raw_gamma, double raw_nu, double raw_alpha, double raw_beta) {
  return NIGParams{raw_gamma, softplus(raw_nu), softplus(raw_alpha) + kAlphaShift, softplus(raw_beta)};
}

std::vector<NIGParams> nig_output(const Matrix& h, const NIGHead& head) {
  if (h.cols() != head.weight.rows() || head.weight.cols() != 4 || head.bias.size() != 4) {
    throw std::invalid_argument("nig_output: dimension mismatch");
  }
  Matrix raw = h * head.weight;
  raw.rowwise() += head.bias;
  std::vector<NIGParams> out;
  out.reserve(static_cast<std::size_t>(raw.rows()));
  for (Index i = 0; i < raw.rows(); ++i) out.push_back(nig_from_raw(raw(i, 0), raw(i, 1), raw(i, 2), raw(i, 3)));
  return out;
}

PredictiveMoments nig_predictive(const NIGParams& p) {
  if (!(p.alpha > 1.0)) throw std::domain_error("nig_predictive: alpha must be > 1");
  if (!(p.nu > 0.0) || !(p.beta > 0.0)) throw std::domain_error("nig_predictive: nu and beta must be > 0");
  PredictiveMoments m;
  m.mean = p.gamma;
  m.aleatoric = p.beta / (p.alpha - 1.0);
  m.epistemic = p.beta / (p.nu * (p.alpha - 1.0));
  m.total = p.beta * (1.0 + p.nu) / (p.nu * (p.alpha - 1.0));
  return m;
}

EvidentialLoss evidential_loss(double y, const NIGParams& p, double lambda) {
  if (!(p.nu > 0.0) || !(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw std::domain_error("evidential_loss: nu, alpha, beta must be > 0");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("evidential_loss: lambda must be >= 0");
  const double omega = 2.0 * p.beta * (1.0 + p.nu);
  const double r = y - p.gamma;
  EvidentialLoss l;
  l.nle = 0.5 * std::log(std::numbers::pi / p.nu) - p.alpha * std::log(omega) +
          (p.alpha + 0.5) * std::log(r * r * p.nu + omega) + log_gamma(p.alpha) - log_gamma(p.alpha + 0.5);
  l.reg = std::abs(r) * (2.0 * p.nu + p.alpha);
  l.total = l.nle + lambda * l.reg;
  return l;
}

namespace graph {

ad::Var gaussian_nll(const ad::Var& y, const ad::Var& mean, const ad::Var& variance) {
  const ad::Var r = y - mean;
  return 0.5 * (ad::log(2.0 * std::numbers::pi * variance) + ad::square(r) / variance);
}

NIGVars nig_activation(const ad::Var& raw_gamma, const ad::Var& raw_nu, const ad::Var& raw_alpha,
                       const ad::Var& raw_beta) {
  return NIGVars{raw_gamma, ad::softplus(raw_nu), ad::softplus(raw_alpha) + kAlphaShift, ad::softplus(raw_beta)};
}

EvidentialVars evidential_loss(const ad::Var& y, const NIGVars& p, double lambda) {
  const ad::Var omega = 2.0 * p.beta * (1.0 + p.nu);
  const ad::Var r = y - p.gamma;
  const ad::Var nle = 0.5 * ad::log(std::numbers::pi / p.nu) - p.alpha * ad::log(omega) +
                      (p.alpha + 0.5) * ad::log(ad::square(r) * p.nu + omega) + ad::log_gamma(p.alpha) -
                      ad::log_gamma(p.alpha + 0.5);
  const ad::Var reg = ad::abs(r) * (2.0 * p.nu + p.alpha);
  return EvidentialVars{nle, reg, nle + lambda * reg};
}

}  // namespace graph

}  // namespace pcuq
