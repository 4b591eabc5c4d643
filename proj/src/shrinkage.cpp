#include "bsts/shrinkage.hpp"

#include "bsts/linalg.hpp"
#include "bsts/random.hpp"

#include <algorithm>
#include <cmath>

namespace bsts {

namespace {

constexpr double kScaleFloor = 1e-12;
constexpr double kScaleCeiling = 1e12;

double clamp_scale(double v, Index& events) {
  if (!(v >= kScaleFloor)) {  // also catches NaN
    ++events;
    return kScaleFloor;
  }
  if (v > kScaleCeiling) {
    ++events;
    return kScaleCeiling;
  }
  return v;
}

}  // namespace

void SsvsHyper::validate() const {
  if (!(a1 > 0 && a2 > 0 && b1 > 0 && b2 > 0 && sigma_shape > 0 && sigma_scale > 0)) {
    throw ConfigError("ssvs: hyperparameters a1, a2, b1, b2, sigma_shape, sigma_scale must be positive");
  }
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("ssvs: spike factor c must lie in (0, 1)");
}

Vector sample_fast_gaussian(const Matrix& phi, const Vector& d, const Vector& alpha, Rng& rng) {
  const Index T = phi.rows();
  const Index K = phi.cols();
  if (d.size() != K || alpha.size() != T) throw DimensionError("fast sampler: dimension mismatch");
  const Vector d_sqrt = d.cwiseSqrt();
  const Vector u = d_sqrt.cwiseProduct(draw_normal_vector(K, rng));
  const Vector delta = draw_normal_vector(T, rng);
  const Vector xi = phi * u + delta;

  const Matrix phi_scaled = phi * d_sqrt.asDiagonal();
  Matrix system = Matrix::Identity(T, T);
  system.selfadjointView<Eigen::Lower>().rankUpdate(phi_scaled);
  Eigen::LLT<Matrix, Eigen::Lower> llt(system);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("fast sampler: (Phi D Phi' + I) not positive definite", -1);
  }
  const Vector w = llt.solve(alpha - xi);
  return u + d.cwiseProduct(phi.transpose() * w);
}

Vector sample_beta_horseshoe(const Vector& y_star, const Matrix& X, const HorseshoeState& hs,
                             double sigma_y2, Rng& rng) {
  if (X.rows() != y_star.size() || hs.lambda2.size() != X.cols()) {
    throw DimensionError("sample_beta_horseshoe: dimension mismatch");
  }
  if (!(sigma_y2 > 0.0) || !(hs.nu2 > 0.0) || !std::isfinite(hs.nu2) ||
      !hs.lambda2.allFinite() || (hs.lambda2.array() <= 0.0).any()) {
    throw NumericalError("sample_beta_horseshoe: scales must be positive and finite");
  }
  const double sigma = std::sqrt(sigma_y2);
  const Matrix phi = X / sigma;
  const Vector d = sigma_y2 * hs.nu2 * hs.lambda2;
  const Vector alpha = y_star / sigma;
  return sample_fast_gaussian(phi, d, alpha, rng);
}

HorseshoeState sample_horseshoe_scales(const Vector& beta, double sigma_y2, HorseshoeState hs,
                                       Rng& rng) {
  const Index K = beta.size();
  if (hs.lambda2.size() != K || hs.aux_local.size() != K) {
    throw DimensionError("sample_horseshoe_scales: dimension mismatch");
  }
  const Vector beta2 = beta.array().square();
  for (Index j = 0; j < K; ++j) {
    const double rate = 1.0 / hs.aux_local(j) + beta2(j) / (2.0 * sigma_y2 * hs.nu2);
    hs.lambda2(j) = clamp_scale(draw_inv_gamma(1.0, rate, rng), hs.clamp_events);
    hs.aux_local(j) = clamp_scale(draw_inv_gamma(1.0, 1.0 + 1.0 / hs.lambda2(j), rng),
                                  hs.clamp_events);
  }
  const double ss = (beta2.array() / hs.lambda2.array()).sum();
  const double rate = 1.0 / hs.aux_global + ss / (2.0 * sigma_y2);
  hs.nu2 = clamp_scale(draw_inv_gamma(0.5 * static_cast<double>(K + 1), rate, rng),
                       hs.clamp_events);
  hs.aux_global = clamp_scale(draw_inv_gamma(1.0, 1.0 + 1.0 / hs.nu2, rng), hs.clamp_events);
  return hs;
}

double sample_sigma2_horseshoe(const Vector& y_star, const Matrix& X, const Vector& beta,
                               const HorseshoeState& hs, const HorseshoeHyper& hyper, Rng& rng) {
  const double T = static_cast<double>(y_star.size());
  const double K = static_cast<double>(beta.size());
  const double rss = (y_star - X * beta).squaredNorm();
  const double prior_ss = (beta.array().square() / hs.lambda2.array()).sum() / hs.nu2;
  return draw_inv_gamma(hyper.sigma_shape + 0.5 * (T + K),
                        hyper.sigma_scale + 0.5 * rss + 0.5 * prior_ss, rng);
}

Eigen::VectorXi sample_ssvs_gamma(const Vector& beta, const SsvsState& state, Rng& rng) {
  const Index K = beta.size();
  if (state.delta2.size() != K) throw DimensionError("sample_ssvs_gamma: dimension mismatch");
  Eigen::VectorXi gamma(K);
  const double c = state.spike_factor;
  const double log_pi = std::log(state.pi0);
  const double log_1mpi = std::log1p(-state.pi0);
  for (Index j = 0; j < K; ++j) {
    const double b2 = beta(j) * beta(j);
    const double v = state.delta2(j);
    const double lp1 = log_pi - 0.5 * std::log(v) - 0.5 * b2 / v;
    const double lp0 = log_1mpi - 0.5 * std::log(c * v) - 0.5 * b2 / (c * v);
    const double p1 = 1.0 / (1.0 + std::exp(lp0 - lp1));
    gamma(j) = draw_bernoulli(p1, rng) ? 1 : 0;
  }
  return gamma;
}

double sample_ssvs_pi0(const Eigen::VectorXi& gamma, double b1, double b2, Rng& rng) {
  const double n1 = static_cast<double>(gamma.sum());
  const double K = static_cast<double>(gamma.size());
  return draw_beta(b1 + n1, b2 + K - n1, rng);
}

Vector sample_ssvs_beta(const Matrix& xtx, const Vector& xty, const Eigen::VectorXi& gamma,
                        const Vector& delta2, double spike_factor, double sigma_y2, Rng& rng) {
  const Index K = xty.size();
  if (xtx.rows() != K || xtx.cols() != K || gamma.size() != K || delta2.size() != K) {
    throw DimensionError("sample_ssvs_beta: dimension mismatch");
  }
  Matrix precision = xtx / sigma_y2;
  for (Index j = 0; j < K; ++j) {
    const double prior_var = gamma(j) == 1 ? delta2(j) : spike_factor * delta2(j);
    precision(j, j) += 1.0 / prior_var;
  }
  return sample_precision_gaussian(PrecisionGaussian<double>{precision, xty / sigma_y2}, rng);
}

Vector sample_ssvs_delta2(const Vector& beta, const Eigen::VectorXi& gamma, double spike_factor,
                          double a1, double a2, Rng& rng) {
  const Index K = beta.size();
  Vector out(K);
  for (Index j = 0; j < K; ++j) {
    const double s = gamma(j) == 1 ? 1.0 : spike_factor;
    out(j) = draw_inv_gamma(a1 + 0.5, a2 + beta(j) * beta(j) / (2.0 * s), rng);
  }
  return out;
}

double sample_sigma2_ssvs(const Vector& y_star, const Matrix& X, const Vector& beta,
                          const SsvsHyper& hyper, Rng& rng) {
  const double T = static_cast<double>(y_star.size());
  const double rss = (y_star - X * beta).squaredNorm();
  return draw_inv_gamma(hyper.sigma_shape + 0.5 * T, hyper.sigma_scale + 0.5 * rss, rng);
}

SsvsStepResult sample_ssvs_step(const Vector& y_star, const Matrix& X, const Vector& beta,
                                const SsvsState& state, double sigma_y2, const SsvsHyper& hyper,
                                Rng& rng, const Matrix* xtx) {
  const Index K = X.cols();
  if (X.rows() != y_star.size() || beta.size() != K || state.gamma.size() != K ||
      state.delta2.size() != K) {
    throw DimensionError("sample_ssvs_step: dimension mismatch");
  }
  Matrix local_xtx;
  if (xtx == nullptr) {
    local_xtx = X.transpose() * X;
    xtx = &local_xtx;
  }
  SsvsStepResult out{Vector(), state, sigma_y2};
  out.state.gamma = sample_ssvs_gamma(beta, out.state, rng);
  out.state.pi0 = sample_ssvs_pi0(out.state.gamma, hyper.b1, hyper.b2, rng);
  const Vector xty = X.transpose() * y_star;
  out.beta = sample_ssvs_beta(*xtx, xty, out.state.gamma, out.state.delta2,
                              out.state.spike_factor, sigma_y2, rng);
  out.state.delta2 = sample_ssvs_delta2(out.beta, out.state.gamma, out.state.spike_factor,
                                        hyper.a1, hyper.a2, rng);
  out.sigma_y2 = sample_sigma2_ssvs(y_star, X, out.beta, hyper, rng);
  return out;
}

Vector column_norms2(const Matrix& X) { return X.colwise().squaredNorm().transpose(); }

Vector savs_sparsify(const Vector& beta, const Vector& col_norms2) {
  if (beta.size() != col_norms2.size()) throw DimensionError("savs_sparsify: dimension mismatch");
  Vector phi = Vector::Zero(beta.size());
  for (Index j = 0; j < beta.size(); ++j) {
    const double b = beta(j);
    if (b == 0.0) continue;
    const double n = col_norms2(j);
    if (!(n > 0.0)) throw DimensionError("savs_sparsify: column norms must be positive");
    const double kappa = 1.0 / (b * b);
    const double excess = std::abs(b) * n - kappa;
    if (excess > 0.0) phi(j) = std::copysign(excess / n, b);
  }
  return phi;
}

InclusionSummary inclusion_frequencies(const Matrix& indicators, const Matrix& coefficients) {
  if (indicators.rows() == 0) throw DimensionError("inclusion probabilities: no draws");
  if (coefficients.rows() != indicators.rows() || coefficients.cols() != indicators.cols()) {
    throw DimensionError("inclusion probabilities: shape mismatch");
  }
  const Index M = indicators.rows();
  const Index K = indicators.cols();
  InclusionSummary out{Vector::Zero(K), Vector::Zero(K)};
  for (Index j = 0; j < K; ++j) {
    double count = 0.0;
    double sign_sum = 0.0;
    for (Index m = 0; m < M; ++m) {
      if (indicators(m, j) != 0.0) {
        count += 1.0;
        const double b = coefficients(m, j);
        sign_sum += (b > 0.0) - (b < 0.0);
      }
    }
    out.probability(j) = count / static_cast<double>(M);
    out.sign_mean(j) = count > 0.0 ? sign_sum / count : 0.0;
  }
  return out;
}

Vector model_size_distribution(const Matrix& indicators) {
  if (indicators.rows() == 0) throw DimensionError("model size distribution: no draws");
  const Index K = indicators.cols();
  Vector out = Vector::Zero(K + 1);
  for (Index m = 0; m < indicators.rows(); ++m) {
    const Index size = (indicators.row(m).array() != 0.0).count();
    out(size) += 1.0;
  }
  return out / static_cast<double>(indicators.rows());
}

}  // namespace bsts
