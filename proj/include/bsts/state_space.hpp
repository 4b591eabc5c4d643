#pragma once

// Non-centred local linear trend:
//
//   y_t = tau0 + t*alpha0 + sigma_tau * tau~_t + sigma_alpha * A~_t + eps_t
//   tau~_t = tau~_{t-1} + u_t,  alpha~_t = alpha~_{t-1} + v_t,  A~_t = sum_{s<=t} alpha~_s
//
// with u, v standard normal and tau~_0 = alpha~_0 = 0.

#include "bsts/common.hpp"
#include "bsts/linalg.hpp"

#include <optional>
#include <utility>

namespace bsts {

struct NcssStates {
  Vector tau_tilde;  // standardised trend path
  Vector a_tilde;    // cumulated standardised drift path

  Index length() const { return tau_tilde.size(); }
  static NcssStates zeros(Index T) { return {Vector::Zero(T), Vector::Zero(T)}; }
};

struct ThetaParams {
  double tau0 = 0.0;
  double alpha0 = 0.0;
  double sigma_tau = 0.0;
  double sigma_alpha = 0.0;

  Eigen::Vector4d as_vector() const { return {tau0, alpha0, sigma_tau, sigma_alpha}; }
  static ThetaParams from_vector(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

// theta ~ N(theta_mean, diag(theta_var)), order (tau0, alpha0, sigma_tau, sigma_alpha).
struct StatePriorConfig {
  Eigen::Vector4d theta_mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d theta_var = Eigen::Vector4d(10.0, 10.0, 1.0, 1.0);

  // Intercept block V = diag(0.1, 0.1) with unit variance on the state SDs.
  static StatePriorConfig appendix_preset() {
    StatePriorConfig c;
    c.theta_var = Eigen::Vector4d(0.1, 0.1, 1.0, 1.0);
    return c;
  }

  void validate() const;
};

// tau0 + t*alpha0 + sigma_tau*tau~_t + sigma_alpha*A~_t for t = 1..T.
Vector trend_path(const ThetaParams& theta, const NcssStates& states);

// Posterior precision of xi in interleaved order (tau~_1, A~_1, tau~_2, A~_2, ...),
// bandwidth 4.
BandedMatrix<double> state_posterior_precision(Index T, const ThetaParams& theta, double sigma_y2);

PrecisionGaussian<double> state_posterior(const Vector& y_hat, const ThetaParams& theta,
                                          double sigma_y2);

// Joint draw of both state paths given y_hat = y - X beta.
NcssStates sample_states(const Vector& y_hat, const ThetaParams& theta, double sigma_y2, Rng& rng);

// Conjugate draw of theta from the regression of (y - x_beta) on [1, t, tau~, A~].
ThetaParams sample_theta(const Vector& y, const Vector& x_beta, const NcssStates& states,
                         double sigma_y2, const StatePriorConfig& prior, Rng& rng);

// Flips (sigma_i, path_i) jointly with probability 1/2 for each component.
std::pair<ThetaParams, NcssStates> permute_signs(ThetaParams theta, NcssStates states, Rng& rng);

double observation_loglik(const Vector& y_hat, const ThetaParams& theta, const NcssStates& states,
                          double sigma_y2);

// Centred level tau_t and drift alpha_t implied by a non-centred draw.
struct CentredStates {
  Vector level;
  Vector drift;
};
CentredStates to_centred(const ThetaParams& theta, const NcssStates& states);

struct SavageDickeyResult {
  double ratio = 0.0;        // > 1 favours sigma != 0
  double numerator = 0.0;    // prior density at zero
  double denominator = 0.0;  // posterior density estimate at zero
  double bandwidth = 0.0;
  bool denominator_underflow = false;
};

// Prior N(0, prior_var) density at zero over a Gaussian-kernel estimate of
// the posterior density at zero, using the sign-symmetrised draws {+-|s|}.
// Bandwidth defaults to Silverman's rule on the symmetrised set.
SavageDickeyResult savage_dickey(double prior_var, const Vector& sigma_draws,
                                 std::optional<double> bandwidth = std::nullopt);

}  // namespace bsts
