#include "bsts/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace bsts {

void StatePriorConfig::validate() const {
  for (int i = 0; i < 4; ++i) {
    if (!(theta_var(i) > 0.0) || !std::isfinite(theta_var(i))) {
      throw ConfigError("state prior: theta_var entries must be positive and finite");
    }
    if (!std::isfinite(theta_mean(i))) throw ConfigError("state prior: theta_mean must be finite");
  }
}

Vector trend_path(const ThetaParams& theta, const NcssStates& states) {
  const Index T = states.length();
  const Vector t = Vector::LinSpaced(T, 1.0, static_cast<double>(T));
  return (theta.tau0 + theta.alpha0 * t.array() + theta.sigma_tau * states.tau_tilde.array() +
          theta.sigma_alpha * states.a_tilde.array())
      .matrix();
}

BandedMatrix<double> state_posterior_precision(Index T, const ThetaParams& theta, double sigma_y2) {
  if (T < 3) throw DimensionError("state sampler: T must be >= 3");
  if (!(sigma_y2 > 0.0)) throw NumericalError("state sampler: sigma_y2 must be positive");
  // Prior precisions of the two paths: H'H (tridiagonal) and (H^2)'H^2 (pentadiagonal).
  const auto level_prior = gram(build_first_difference<double>(T));
  const auto drift_prior = gram(build_second_difference<double>(T));

  const double w_tau = theta.sigma_tau * theta.sigma_tau / sigma_y2;
  const double w_alpha = theta.sigma_alpha * theta.sigma_alpha / sigma_y2;
  const double w_cross = theta.sigma_tau * theta.sigma_alpha / sigma_y2;

  BandedMatrix<double> k(2 * T, 4, 4);
  for (Index i = 0; i < T; ++i) {
    for (Index j = std::max<Index>(0, i - 2); j <= std::min<Index>(T - 1, i + 2); ++j) {
      if (std::abs(i - j) <= 1) k.coeffRef(2 * i, 2 * j) = level_prior(i, j);
      k.coeffRef(2 * i + 1, 2 * j + 1) = drift_prior(i, j);
    }
    k.coeffRef(2 * i, 2 * i) += w_tau;
    k.coeffRef(2 * i + 1, 2 * i + 1) += w_alpha;
    k.coeffRef(2 * i, 2 * i + 1) = w_cross;
    k.coeffRef(2 * i + 1, 2 * i) = w_cross;
  }
  return k;
}

PrecisionGaussian<double> state_posterior(const Vector& y_hat, const ThetaParams& theta,
                                          double sigma_y2) {
  const Index T = y_hat.size();
  auto precision = state_posterior_precision(T, theta, sigma_y2);
  const Vector t = Vector::LinSpaced(T, 1.0, static_cast<double>(T));
  const Vector resid = y_hat.array() - theta.tau0 - theta.alpha0 * t.array();
  Vector shift(2 * T);
  for (Index i = 0; i < T; ++i) {
    shift(2 * i) = theta.sigma_tau * resid(i) / sigma_y2;
    shift(2 * i + 1) = theta.sigma_alpha * resid(i) / sigma_y2;
  }
  return {std::move(precision), std::move(shift)};
}

NcssStates sample_states(const Vector& y_hat, const ThetaParams& theta, double sigma_y2, Rng& rng) {
  const Index T = y_hat.size();
  const Vector xi = sample_precision_gaussian(state_posterior(y_hat, theta, sigma_y2), rng);
  NcssStates out{Vector(T), Vector(T)};
  for (Index i = 0; i < T; ++i) {
    out.tau_tilde(i) = xi(2 * i);
    out.a_tilde(i) = xi(2 * i + 1);
  }
  return out;
}

ThetaParams sample_theta(const Vector& y, const Vector& x_beta, const NcssStates& states,
                         double sigma_y2, const StatePriorConfig& prior, Rng& rng) {
  const Index T = y.size();
  if (x_beta.size() != T || states.length() != T || states.a_tilde.size() != T) {
    throw DimensionError("sample_theta: inconsistent lengths");
  }
  if (!(sigma_y2 > 0.0)) throw NumericalError("sample_theta: sigma_y2 must be positive");
  Eigen::Matrix<double, Eigen::Dynamic, 4> design(T, 4);
  design.col(0).setOnes();
  design.col(1) = Vector::LinSpaced(T, 1.0, static_cast<double>(T));
  design.col(2) = states.tau_tilde;
  design.col(3) = states.a_tilde;

  const Eigen::Vector4d prior_prec = prior.theta_var.cwiseInverse();
  Matrix precision = design.transpose() * design / sigma_y2;
  precision.diagonal() += prior_prec;
  const Vector shift = prior_prec.cwiseProduct(prior.theta_mean) +
                       design.transpose() * (y - x_beta) / sigma_y2;
  const Vector draw = sample_precision_gaussian(PrecisionGaussian<double>{precision, shift}, rng);
  return ThetaParams::from_vector(draw);
}

std::pair<ThetaParams, NcssStates> permute_signs(ThetaParams theta, NcssStates states, Rng& rng) {
  if (draw_bernoulli(0.5, rng)) {
    theta.sigma_tau = -theta.sigma_tau;
    states.tau_tilde = -states.tau_tilde;
  }
  if (draw_bernoulli(0.5, rng)) {
    theta.sigma_alpha = -theta.sigma_alpha;
    states.a_tilde = -states.a_tilde;
  }
  return {std::move(theta), std::move(states)};
}

double observation_loglik(const Vector& y_hat, const ThetaParams& theta, const NcssStates& states,
                          double sigma_y2) {
  const Vector resid = y_hat - trend_path(theta, states);
  const double n = static_cast<double>(y_hat.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma_y2) -
         0.5 * resid.squaredNorm() / sigma_y2;
}

CentredStates to_centred(const ThetaParams& theta, const NcssStates& states) {
  const Index T = states.length();
  CentredStates out{trend_path(theta, states), Vector(T)};
  double previous = 0.0;
  for (Index t = 0; t < T; ++t) {
    const double alpha_tilde = states.a_tilde(t) - previous;
    previous = states.a_tilde(t);
    out.drift(t) = theta.alpha0 + theta.sigma_alpha * alpha_tilde;
  }
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double h = pos - static_cast<double>(lo);
  return (1.0 - h) * sorted[lo] + h * sorted[hi];
}

}  // namespace

SavageDickeyResult savage_dickey(double prior_var, const Vector& sigma_draws,
                                 std::optional<double> bandwidth) {
  if (!(prior_var > 0.0)) throw DimensionError("savage_dickey: prior_var must be positive");
  if (sigma_draws.size() < 1000) {
    throw DimensionError("savage_dickey: need at least 1000 draws, got " +
                         std::to_string(sigma_draws.size()));
  }
  if (bandwidth && !(*bandwidth > 0.0)) {
    throw DimensionError("savage_dickey: bandwidth must be positive");
  }
  SavageDickeyResult out;
  out.numerator = 1.0 / std::sqrt(2.0 * std::numbers::pi * prior_var);

  const Vector abs_draws = sigma_draws.cwiseAbs();
  const double n_half = static_cast<double>(abs_draws.size());
  if (bandwidth) {
    out.bandwidth = *bandwidth;
  } else {
    // Symmetrised set {+|s|, -|s|}: mean zero, second moment mean(s^2).
    const double sd = std::sqrt(2.0 * abs_draws.squaredNorm() / (2.0 * n_half - 1.0));
    std::vector<double> sym;
    sym.reserve(2 * abs_draws.size());
    for (Index i = 0; i < abs_draws.size(); ++i) {
      sym.push_back(abs_draws(i));
      sym.push_back(-abs_draws(i));
    }
    std::sort(sym.begin(), sym.end());
    const double iqr = quantile_sorted(sym, 0.75) - quantile_sorted(sym, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    out.bandwidth = 0.9 * spread * std::pow(2.0 * n_half, -0.2);
  }
  if (!(out.bandwidth > 0.0)) {
    // Every draw is exactly zero: the posterior is a point mass at the null.
    out.denominator = std::numeric_limits<double>::infinity();
    out.ratio = 0.0;
    return out;
  }
  // Kernel estimate at zero; both halves of the symmetric set contribute equally.
  double acc = 0.0;
  for (Index i = 0; i < abs_draws.size(); ++i) {
    const double z = abs_draws(i) / out.bandwidth;
    acc += std::exp(-0.5 * z * z);
  }
  out.denominator = acc / (n_half * out.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  if (!(out.denominator > 0.0)) {
    out.denominator_underflow = true;
    out.ratio = std::numeric_limits<double>::infinity();
    return out;
  }
  out.ratio = out.numerator / out.denominator;
  return out;
}

}  // namespace bsts
