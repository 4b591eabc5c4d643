#include "bsts/forecast.hpp"
#include "bsts/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace bsts;

namespace {

PredictiveDraws gaussian_pred(Index M, double mu, double var, Rng& rng) {
  PredictiveDraws p{Vector(M), Vector::Constant(M, mu), Vector::Constant(M, var)};
  for (Index m = 0; m < M; ++m) p.draws(m) = mu + std::sqrt(var) * draw_normal(rng);
  return p;
}

// Hand-built posterior with flat trend draws.
PosteriorDraws flat_posterior(Index M, Index T, Index K, double tau0, double alpha0, Rng& rng) {
  PosteriorDraws d;
  d.prior_kind = PriorKind::Horseshoe;
  d.n_chains = 1;
  d.draws_per_chain = M;
  d.T = T;
  d.K = K;
  d.tau_tilde = Matrix::NullaryExpr(M, T, [&] { return draw_normal(rng); });
  d.a_tilde = Matrix::NullaryExpr(M, T, [&] { return draw_normal(rng); });
  d.theta = Matrix(M, 4);
  d.theta.col(0).setConstant(tau0);
  d.theta.col(1).setConstant(alpha0);
  d.theta.col(2).setZero();
  d.theta.col(3).setZero();
  d.beta = Matrix::NullaryExpr(M, K, [&] { return 1.0 + 0.1 * draw_normal(rng); });
  d.sigma_y2 = Vector::Constant(M, 0.25);
  return d;
}

}  // namespace

TEST_CASE("predictive mean with frozen trend") {
  Rng rng = make_stream(1);
  const Index T = 20, K = 3;
  const auto d = flat_posterior(4000, T, K, 0.5, 0.1, rng);
  Vector x(K);
  x << 1.0, -0.5, 2.0;
  const auto p = predictive_draws(d, x, rng);
  const double expected = 0.5 + 21 * 0.1 + x.dot(d.beta.colwise().mean().transpose());
  CHECK(p.cond_means.mean() == doctest::Approx(expected).epsilon(1e-12));
  // draws around cond_means with sd 0.5
  CHECK(std::abs(p.mean() - p.cond_means.mean()) < 4 * 0.5 / std::sqrt(4000.0));
  CHECK((p.cond_vars.array() == 0.25).all());

  const auto p0 = predictive_draws(d, Vector::Zero(K), rng);
  CHECK(p0.cond_means.mean() == doctest::Approx(0.5 + 2.1));
}

TEST_CASE("predictive draws extend the state paths") {
  Rng rng = make_stream(2);
  const Index M = 200000, T = 5;
  PosteriorDraws d = flat_posterior(1, T, 0, 0.0, 0.0, rng);
  d.tau_tilde = Matrix::Zero(1, T);
  d.a_tilde = Matrix::Zero(1, T);
  d.tau_tilde(0, T - 1) = 1.0;
  d.a_tilde(0, T - 2) = 1.0;
  d.a_tilde(0, T - 1) = 3.0;  // slope 2, so A_{T+1} = 5 + noise
  d.theta.row(0) << 0.0, 0.0, 1.0, 0.5;
  d.sigma_y2 = Vector::Constant(1, 1e-6);
  double sum = 0.0, sq = 0.0;
  for (Index i = 0; i < M; ++i) {
    const double v = predictive_draws(d, Vector(), rng).cond_means(0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / M, var = sq / M - mean * mean;
  // 1 * (1 + u) + 0.5 * (5 + v): mean 3.5, variance 1.25
  CHECK(mean == doctest::Approx(3.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.25).epsilon(0.02));
}

TEST_CASE("predictive draws reject wrong dimensions") {
  Rng rng = make_stream(3);
  const auto d = flat_posterior(10, 8, 3, 0, 0, rng);
  CHECK_THROWS_AS(predictive_draws(d, Vector::Zero(2), rng), DimensionError);
  CHECK_THROWS_AS(predictive_draws(d, Vector::Zero(3), true, rng), DimensionError);
}

TEST_CASE("rmsfe examples") {
  Vector a(2), b(2);
  a << 1.0, 2.0;
  CHECK(rt_rmsfe(a, a) == 0.0);
  b << 4.0, 6.0;
  CHECK(rt_rmsfe(a, b) == doctest::Approx(std::sqrt(12.5)));
  CHECK(rt_rmsfe(Vector::Constant(1, 2.0), Vector::Constant(1, -1.5)) == doctest::Approx(3.5));
  CHECK_THROWS_AS(rt_rmsfe(Vector(), Vector()), DimensionError);
  CHECK_THROWS_AS(rt_rmsfe(a, Vector::Zero(3)), DimensionError);

  // order of quarters does not matter
  Vector p(4), r(4);
  p << 0.3, -1.0, 2.0, 0.1;
  r << 0.0, 0.5, 1.0, -0.4;
  CHECK(rt_rmsfe(p.reverse(), r.reverse()) == doctest::Approx(rt_rmsfe(p, r)).epsilon(1e-15));
}

TEST_CASE("log score examples") {
  PredictiveDraws one{Vector::Zero(1), Vector::Zero(1), Vector::Ones(1)};
  CHECK(log_predictive_density(one, 0.0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(log_predictive_density(one, 0.0) == doctest::Approx(-0.9189).epsilon(1e-4));
  CHECK(log_predictive_density(one, 10.0) == doctest::Approx(-50.0).epsilon(0.02));
  // far enough that the plain density underflows
  CHECK(std::isfinite(log_predictive_density(one, 60.0)));

  Rng rng = make_stream(4);
  PredictiveDraws mix{Vector(3), Vector(3), Vector(3)};
  mix.cond_means << -1.0, 0.2, 3.0;
  mix.cond_vars << 0.5, 1.0, 2.0;
  mix.draws = mix.cond_means;
  PredictiveDraws dup{Vector(6), Vector(6), Vector(6)};
  dup.cond_means << mix.cond_means, mix.cond_means;
  dup.cond_vars << mix.cond_vars, mix.cond_vars;
  dup.draws = dup.cond_means;
  for (double y : {-2.0, 0.0, 1.7, 9.0}) {
    CHECK(std::abs(log_predictive_density(dup, y) - log_predictive_density(mix, y)) < 1e-12);
  }

  double direct = 0.0;
  for (int m = 0; m < 3; ++m) {
    const double v = mix.cond_vars(m), d = 0.4 - mix.cond_means(m);
    direct += std::exp(-0.5 * d * d / v) / std::sqrt(2 * std::numbers::pi * v) / 3.0;
  }
  CHECK(log_predictive_density(mix, 0.4) == doctest::Approx(std::log(direct)).epsilon(1e-13));

  Vector realised(2);
  realised << 0.0, 0.4;
  CHECK(rt_lpds({one, mix}, realised) ==
        doctest::Approx(0.5 * (log_predictive_density(one, 0.0) + std::log(direct))));
}

TEST_CASE("crps examples") {
  Rng rng = make_stream(5);
  PredictiveDraws point{Vector::Constant(50, 1.5), Vector::Constant(50, 1.5), Vector::Constant(50, 1.0)};
  CHECK(crps(point, -0.25, rng) == 1.75);
  CHECK(crps(point, 1.5, rng) == 0.0);

  const auto normal = gaussian_pred(100000, 0.0, 1.0, rng);
  const double closed = 2.0 / std::sqrt(2 * std::numbers::pi) - 1.0 / std::sqrt(std::numbers::pi);
  CHECK(closed == doctest::Approx(0.2337).epsilon(1e-3));
  CHECK(std::abs(crps(normal, 0.0, rng) - closed) < 0.01);

  // closed form at an off-centre outcome: y(2Phi(y)-1) + 2phi(y) - 1/sqrt(pi)
  const double y = 1.3;
  const double off = y * std::erf(y / std::sqrt(2.0)) + 2 * std::exp(-0.5 * y * y) / std::sqrt(2 * std::numbers::pi) -
                     1.0 / std::sqrt(std::numbers::pi);
  CHECK(std::abs(crps(normal, y, rng) - off) < 0.01);

  for (int i = 0; i < 50; ++i) {
    const auto p = gaussian_pred(5, draw_normal(rng), 1.0, rng);
    CHECK(crps(p, draw_normal(rng), rng) >= 0.0);
  }

  PredictiveDraws single{Vector::Zero(1), Vector::Zero(1), Vector::Ones(1)};
  CHECK_THROWS_AS(crps(single, 0.0, rng), DimensionError);

  // printed variant halves the first term
  Rng r1 = make_stream(6), r2 = make_stream(6);
  const auto p = gaussian_pred(1000, 0.0, 1.0, rng);
  const double e = crps(p, 0.7, r1, CrpsForm::Energy);
  const double h = crps(p, 0.7, r2, CrpsForm::HalvedFirstTerm);
  double to_obs = 0.0;
  for (Index m = 0; m < p.size(); ++m) to_obs += std::abs(p.draws(m) - 0.7);
  to_obs /= p.size();
  CHECK(e - h == doctest::Approx(0.5 * to_obs).epsilon(1e-12));
}

TEST_CASE("predictive draws are consistent with their components") {
  Rng rng = make_stream(7);
  const auto d = flat_posterior(50000, 10, 2, 0.0, 0.0, rng);
  const auto p = predictive_draws(d, Vector::Ones(2), rng);
  // the draw noise has sd 0.5 about each component mean
  CHECK(std::abs(p.draws.mean() - p.cond_means.mean()) < 4 * 0.5 / std::sqrt(50000.0));
}

TEST_CASE("ar2 baseline on known AR(2)") {
  Rng rng = make_stream(8);
  const Index T = 500;
  Vector y(T);
  y(0) = 0.0;
  y(1) = 0.0;
  for (Index t = 2; t < T; ++t) y(t) = 0.5 * y(t - 1) + 0.3 * y(t - 2) + draw_normal(rng);

  // OLS oracle
  const Index n = T - 2;
  Matrix Z(n, 3);
  Z.col(0).setOnes();
  Z.col(1) = y.segment(1, n);
  Z.col(2) = y.segment(0, n);
  const Vector ols = Z.colPivHouseholderQr().solve(y.tail(n));

  const auto fit = ar2_baseline(y, rng);
  CHECK(!fit.ridge_applied);
  CHECK(std::abs(fit.coef_mean(1) - 0.5) < 3 * fit.coef_sd(1));
  CHECK(std::abs(fit.coef_mean(2) - 0.3) < 3 * fit.coef_sd(2));
  CHECK(fit.coef_mean(1) == doctest::Approx(ols(1)).epsilon(1e-3));
  CHECK(fit.coef_mean(2) == doctest::Approx(ols(2)).epsilon(1e-3));
  const double expected = ols(0) + ols(1) * y(T - 1) + ols(2) * y(T - 2);
  CHECK(std::abs(fit.predictive.mean() - expected) < 0.1);
}

TEST_CASE("ar2 baseline on white noise covers zero") {
  int covered = 0;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng = make_stream(9, {static_cast<std::uint64_t>(rep)});
    const Vector y = draw_normal_vector(200, rng);
    const auto fit = ar2_baseline(y, rng, 200);
    for (int j = 1; j < 3; ++j) covered += std::abs(fit.coef_mean(j)) < 1.96 * fit.coef_sd(j);
  }
  // 95% intervals over 40 coefficients
  CHECK(covered >= 34);
}

TEST_CASE("ar2 baseline edge cases") {
  Rng rng = make_stream(10);
  const auto fit = ar2_baseline(Vector::Constant(30, 2.5), rng);
  CHECK(fit.ridge_applied);
  CHECK(fit.predictive.mean() == doctest::Approx(2.5).epsilon(1e-3));
  CHECK_THROWS_AS(ar2_baseline(Vector::Zero(9), rng), DimensionError);
}

TEST_CASE("realtime evaluation with a dogmatic oracle model") {
  Rng rng = make_stream(11);
  const Index T = 30;
  // two series, the outcome loads on the latest month of the first
  std::vector<MonthlySeries> series(2);
  series[0].name = "a";
  series[1].name = "b";
  for (auto& s : series) s.values = draw_normal_vector(3 * T, rng);
  QuarterlyPanel panel;
  panel.X = skip_sample(series, T);
  panel.columns = skip_sample_columns(series);
  panel.series = {"a", "b"};
  panel.y = 2.0 * panel.X.col(0);

  VintageCalendar cal;
  cal.series = {{"a", Transform::None, PubLag::Current}, {"b", Transform::None, PubLag::Current}};
  cal.entries.push_back({0, 1, "start", {}});
  cal.entries.push_back({1, 4, "end", {Release{{"a", "b"}, std::nullopt, {1, 2, 3}}}});

  ModelConfig config;
  config.prior_kind = PriorKind::Ssvs;
  config.mcmc.n_iter = 400;
  config.mcmc.n_burn = 200;
  config.mcmc.thin = 2;
  config.mcmc.n_chains = 1;
  config.state_prior.theta_var = Eigen::Vector4d::Constant(1e-10);
  config.fixed_beta = Vector::Zero(6);

  EvaluationOptions opts;
  opts.priors = {PriorKind::Ssvs};
  opts.include_ar2 = false;
  opts.first_target = 24;
  opts.last_target = 29;

  // The truth on the standardised scale: beta_0 = 2 sd, tau0 = 2 mean (training constants).
  for (Index t = opts.first_target; t <= opts.last_target; ++t) {
    auto c = config;
    const auto std_panel = standardise(panel, t);
    (*c.fixed_beta)(0) = 2.0 * std_panel.col_sds(0);
    c.state_prior.theta_mean(0) = 2.0 * std_panel.col_means(0);
    opts.first_target = opts.last_target = t;
    const auto res = run_realtime_evaluation(panel, cal, c, opts);
    CHECK(res.n_vintages == 2);
    CHECK(res.scores.size() == 2);
    CHECK(res.at(1, "ssvs").rt_rmsfe < 0.02);
    // vintage 0 sees only the mean
    CHECK(std::abs(res.at(0, "ssvs").rt_rmsfe - std::abs(panel.y(t) - 2.0 * std_panel.col_means(0))) < 0.02);
  }
}

TEST_CASE("realtime evaluation structure") {
  Rng rng = make_stream(12);
  const Index T = 26;
  std::vector<MonthlySeries> series(1);
  series[0].name = "a";
  series[0].values = draw_normal_vector(3 * T, rng);
  QuarterlyPanel panel;
  panel.X = skip_sample(series, T);
  panel.columns = skip_sample_columns(series);
  panel.series = {"a"};
  panel.y = panel.X.col(0) + 0.3 * draw_normal_vector(T, rng);

  ModelConfig config;
  config.mcmc.n_iter = 300;
  config.mcmc.n_burn = 100;
  config.mcmc.thin = 2;
  config.mcmc.n_chains = 1;
  EvaluationOptions opts;
  opts.first_target = 24;
  opts.last_target = 25;
  VintageCalendar cal;
  cal.series = {{"a", Transform::None, PubLag::Current}};
  cal.entries.push_back({0, 1, "start", {}});
  cal.entries.push_back({1, 2, "m1", {Release{{"a"}, std::nullopt, {1}}}});
  cal.entries.push_back({2, 4, "all", {Release{{"a"}, std::nullopt, {1, 2, 3}}}});

  const auto res = run_realtime_evaluation(panel, cal, config, opts);
  CHECK(res.models == std::vector<std::string>{"horseshoe", "horseshoe-savs", "ssvs", "ar2"});
  CHECK(res.records.size() == 2 * 3 * 4);
  CHECK(res.scores.size() == 3 * 4);
  for (const auto& s : res.scores) {
    CHECK(s.rt_rmsfe >= 0.0);
    CHECK(s.rt_crps >= 0.0);
    CHECK(std::isfinite(s.rt_lpds));
  }
  // AR(2) ignores the regressors
  CHECK(res.at(0, "ar2").rt_rmsfe == res.at(2, "ar2").rt_rmsfe);
  CHECK(res.at(0, "ar2").rt_crps == res.at(2, "ar2").rt_crps);

  // deterministic under a fixed seed
  const auto again = run_realtime_evaluation(panel, cal, config, opts);
  CHECK(again.at(2, "ssvs").rt_lpds == res.at(2, "ssvs").rt_lpds);

  opts.last_target = T;
  CHECK_THROWS_AS(run_realtime_evaluation(panel, cal, config, opts), DimensionError);
}
