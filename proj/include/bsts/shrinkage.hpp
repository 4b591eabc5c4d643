#pragma once

// Regression-coefficient samplers: horseshoe (fast Gaussian sampler plus
// auxiliary inverse-gamma scale updates), hierarchical SSVS, and SAVS
// sparsification of individual draws.

#include "bsts/common.hpp"

namespace bsts {

struct HorseshoeState {
  Vector lambda2;     // local scales
  double nu2 = 1.0;   // global scale
  Vector aux_local;   // c_j in lambda_j^2 | c_j ~ IG(1/2, 1/c_j), c_j ~ IG(1/2, 1)
  double aux_global = 1.0;
  Index clamp_events = 0;

  static HorseshoeState initial(Index K) {
    return {Vector::Ones(K), 1.0, Vector::Ones(K), 1.0, 0};
  }
};

struct HorseshoeHyper {
  // sigma_y^2 ~ IG(sigma_shape, sigma_scale)
  double sigma_shape = 0.01;
  double sigma_scale = 0.01;
};

struct SsvsState {
  Eigen::VectorXi gamma;  // inclusion indicators
  Vector delta2;          // slab variances
  double pi0 = 0.5;
  double spike_factor = 1e-4;

  static SsvsState initial(Index K, double spike_factor) {
    return {Eigen::VectorXi::Ones(K), Vector::Ones(K), 0.5, spike_factor};
  }
};

struct SsvsHyper {
  double a1 = 5.0;  // delta_j^2 ~ IG(a1, a2)
  double a2 = 4.0;
  double b1 = 1.0;  // pi0 ~ Beta(b1, b2)
  double b2 = 1.0;
  double c = 1e-4;  // spike variance factor
  double sigma_shape = 0.01;
  double sigma_scale = 0.01;

  void validate() const;
};

struct RegressionDraw {
  Vector beta;
  Vector beta_sparse;  // empty unless SAVS ran
  double sigma_y2 = 1.0;
};

// Exact draw from N(Sigma Phi' alpha, Sigma), Sigma = (Phi'Phi + D^-1)^-1, using
// the T x T augmentation: u ~ N(0, D), delta ~ N(0, I), xi = Phi u + delta,
// (Phi D Phi' + I) w = alpha - xi, theta = u + D Phi' w.
Vector sample_fast_gaussian(const Matrix& phi, const Vector& d, const Vector& alpha, Rng& rng);

// beta ~ N(A^-1 X'y*, sigma^2 A^-1), A = X'X + (nu^2 diag(lambda^2))^-1.
Vector sample_beta_horseshoe(const Vector& y_star, const Matrix& X, const HorseshoeState& hs,
                             double sigma_y2, Rng& rng);

// Local and global scales given beta, with lambda_j, nu ~ C+(0, 1) written as
// inverse-gamma mixtures. Draws are clamped to [1e-12, 1e12]; clamps are counted.
HorseshoeState sample_horseshoe_scales(const Vector& beta, double sigma_y2, HorseshoeState hs,
                                       Rng& rng);

// sigma^2 | rest under the horseshoe, where beta's prior scales with sigma^2.
double sample_sigma2_horseshoe(const Vector& y_star, const Matrix& X, const Vector& beta,
                               const HorseshoeState& hs, const HorseshoeHyper& hyper, Rng& rng);

// SSVS building blocks, in the order the sampler applies them.
Eigen::VectorXi sample_ssvs_gamma(const Vector& beta, const SsvsState& state, Rng& rng);
double sample_ssvs_pi0(const Eigen::VectorXi& gamma, double b1, double b2, Rng& rng);
// beta ~ N(A^-1 X'y*/sigma^2, A^-1), A = X'X/sigma^2 + D^-1.
Vector sample_ssvs_beta(const Matrix& xtx, const Vector& xty, const Eigen::VectorXi& gamma,
                        const Vector& delta2, double spike_factor, double sigma_y2, Rng& rng);
Vector sample_ssvs_delta2(const Vector& beta, const Eigen::VectorXi& gamma, double spike_factor,
                          double a1, double a2, Rng& rng);
double sample_sigma2_ssvs(const Vector& y_star, const Matrix& X, const Vector& beta,
                          const SsvsHyper& hyper, Rng& rng);

struct SsvsStepResult {
  Vector beta;
  SsvsState state;
  double sigma_y2 = 1.0;
};

// One sweep: gamma | beta, pi0 | gamma, beta | gamma, delta^2 | beta, sigma^2 | beta.
// `beta` is the previous coefficient draw. `xtx` may be passed to skip recomputing X'X.
SsvsStepResult sample_ssvs_step(const Vector& y_star, const Matrix& X, const Vector& beta,
                                const SsvsState& state, double sigma_y2, const SsvsHyper& hyper,
                                Rng& rng, const Matrix* xtx = nullptr);

Vector column_norms2(const Matrix& X);

// phi_j = sign(b_j) * max(|b_j| n_j - 1/b_j^2, 0) / n_j with n_j = ||X_j||^2.
Vector savs_sparsify(const Vector& beta, const Vector& col_norms2);

struct InclusionSummary {
  Vector probability;  // share of draws in which the variable is included
  Vector sign_mean;    // mean sign of the coefficient over the including draws, 0 if never
};

// Rows are draws. A variable counts as included in a draw when its indicator is nonzero.
InclusionSummary inclusion_frequencies(const Matrix& indicators, const Matrix& coefficients);

// Probability of each model size 0..K across draws.
Vector model_size_distribution(const Matrix& indicators);

}  // namespace bsts
