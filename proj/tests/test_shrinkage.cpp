#include "bsts/random.hpp"
#include "bsts/shrinkage.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <vector>

using namespace bsts;

namespace {

Matrix random_design(Index T, Index K, Rng& rng) {
  return Matrix::NullaryExpr(T, K, [&] { return draw_normal(rng); });
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("fast horseshoe sampler matches direct Cholesky sampling") {
  Rng setup = make_stream(20);
  const Index T = 20, K = 5;
  const Matrix X = random_design(T, K, setup);
  const Vector y = X * Vector::LinSpaced(K, 1.0, -1.0) + draw_normal_vector(T, setup);
  HorseshoeState hs = HorseshoeState::initial(K);
  hs.lambda2 << 0.5, 2.0, 0.1, 1.0, 3.0;
  hs.nu2 = 0.8;
  const double s2 = 1.3;

  const Matrix a = X.transpose() * X + (hs.nu2 * hs.lambda2).cwiseInverse().asDiagonal().toDenseMatrix();
  const Matrix a_inv = a.inverse();
  const Vector mean = a_inv * X.transpose() * y;
  const Matrix cov = s2 * a_inv;

  Rng rng = make_stream(21);
  const auto m = oracle::empirical_moments(K, 100000, [&] { return sample_beta_horseshoe(y, X, hs, s2, rng); });
  CHECK(oracle::mean_z(m, mean, cov) < 4.0);
  CHECK(oracle::max_rel_cov_error(m, cov) < 0.05);
}

TEST_CASE("fast sampler limits") {
  Rng rng = make_stream(22);
  const Index T = 30;
  const Matrix X = Matrix::Ones(T, 1);
  const Vector y = 2.0 + draw_normal_vector(T, rng).array();
  SUBCASE("vanishing shrinkage gives least squares") {
    HorseshoeState hs = HorseshoeState::initial(1);
    hs.lambda2(0) = 1e10;
    Vector draws(20000);
    for (Index i = 0; i < draws.size(); ++i) draws(i) = sample_beta_horseshoe(y, X, hs, 1.0, rng)(0);
    const double sd = std::sqrt((draws.array() - draws.mean()).square().mean());
    CHECK(std::abs(draws.mean() - y.mean()) < 4.0 * sd / std::sqrt(20000.0));
    CHECK(sd == doctest::Approx(1.0 / std::sqrt(static_cast<double>(T))).epsilon(0.03));
  }
  SUBCASE("total shrinkage gives zero") {
    HorseshoeState hs = HorseshoeState::initial(1);
    hs.lambda2(0) = 1e-12;
    hs.nu2 = 1.0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) worst = std::max(worst, std::abs(sample_beta_horseshoe(y, X, hs, 1.0, rng)(0)));
    CHECK(worst < 1e-4);
  }
  SUBCASE("bad scales are rejected") {
    HorseshoeState hs = HorseshoeState::initial(1);
    hs.lambda2(0) = -1.0;
    CHECK_THROWS_AS(sample_beta_horseshoe(y, X, hs, 1.0, rng), NumericalError);
    CHECK_THROWS_AS(sample_beta_horseshoe(y.head(5), X, HorseshoeState::initial(1), 1.0, rng),
                    DimensionError);
  }
}

TEST_CASE("horseshoe scales revert to the prior when beta is zero") {
  // Single conditional draws from the initial state. Iterating with beta held at
  // zero would target p(lambda | beta = 0), which piles up at zero.
  Rng rng = make_stream(23);
  const HorseshoeState start = HorseshoeState::initial(1);
  std::vector<double> lambda2;
  for (int i = 0; i < 40000; ++i) {
    lambda2.push_back(sample_horseshoe_scales(Vector::Zero(1), 1.0, start, rng).lambda2(0));
  }
  // lambda ~ C+(0, 1): quartiles of lambda^2 are tan^2(pi/8) and tan^2(3pi/8).
  const double med = median(lambda2);
  CHECK(med > 0.1716);
  CHECK(med < 5.828);
}

TEST_CASE("horseshoe prior predictive is heavy tailed") {
  Rng rng = make_stream(24);
  HorseshoeState hs = HorseshoeState::initial(1);
  const int n = 200000;
  double m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = std::sqrt(hs.nu2 * hs.lambda2(0)) * draw_normal(rng);
    hs = sample_horseshoe_scales(Vector::Constant(1, b), 1.0, hs, rng);
    m2 += b * b;
    m4 += b * b * b * b;
  }
  m2 /= n;
  m4 /= n;
  CHECK(m4 / (m2 * m2) > 10.0);
}

TEST_CASE("horseshoe scale draws are clamped and counted") {
  Rng rng = make_stream(25);
  HorseshoeState hs = HorseshoeState::initial(2);
  hs = sample_horseshoe_scales(Vector::Constant(2, 1e12), 1.0, hs, rng);
  CHECK(hs.clamp_events > 0);
  CHECK(hs.lambda2.maxCoeff() <= 1e12);
  CHECK(hs.nu2 <= 1e12);
}

TEST_CASE("horseshoe Gibbs matches grid quadrature on a K=2 problem") {
  Rng setup = make_stream(26);
  const Index T = 10;
  const Matrix X = random_design(T, 2, setup);
  const Vector y = X * Eigen::Vector2d(1.5, 0.0) + draw_normal_vector(T, setup);

  // p(y | lambda, nu) with beta integrated out, sigma^2 = 1, on a log grid.
  const Matrix xtx = X.transpose() * X;
  const Vector xty = X.transpose() * y;
  const double yty = y.squaredNorm();
  const int n = 90;
  const double lo = -9.0, hi = 7.0, step = (hi - lo) / (n - 1);
  auto half_cauchy_log = [](double log_s) {  // density of log s when s ~ C+(0, 1)
    const double s = std::exp(log_s);
    return std::log(2.0 / M_PI) + log_s - std::log1p(s * s);
  };
  double total = 0.0;
  Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
  std::vector<double> logw;
  std::vector<Eigen::Vector2d> means;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        const double l1 = lo + a * step, l2 = lo + b * step, lv = lo + c * step;
        const double v1 = std::exp(2 * (l1 + lv)), v2 = std::exp(2 * (l2 + lv));
        Eigen::Matrix2d prec = xtx;
        prec(0, 0) += 1.0 / v1;
        prec(1, 1) += 1.0 / v2;
        const Eigen::Vector2d mu = prec.inverse() * xty;
        // log N(y; 0, I + X D X') via the determinant lemma and Woodbury.
        const double logdet = std::log(prec.determinant()) + std::log(v1) + std::log(v2);
        const double quad = yty - xty.dot(mu);
        logw.push_back(-0.5 * logdet - 0.5 * quad + half_cauchy_log(l1) + half_cauchy_log(l2) +
                       half_cauchy_log(lv));
        means.push_back(mu);
      }
    }
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double w = std::exp(logw[i] - mx);
    total += w;
    weighted += w * means[i];
  }
  const Eigen::Vector2d grid_mean = weighted / total;

  Rng rng = make_stream(27);
  HorseshoeState hs = HorseshoeState::initial(2);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  const int burn = 2000, iters = 200000;
  for (int i = 0; i < burn + iters; ++i) {
    const Vector beta = sample_beta_horseshoe(y, X, hs, 1.0, rng);
    hs = sample_horseshoe_scales(beta, 1.0, hs, rng);
    if (i >= burn) sum += beta;
  }
  const Eigen::Vector2d chain_mean = sum / iters;
  CHECK(std::abs(chain_mean(0) - grid_mean(0)) < 0.03);
  CHECK(std::abs(chain_mean(1) - grid_mean(1)) < 0.03);
}

TEST_CASE("horseshoe sigma^2 update") {
  Rng rng = make_stream(28);
  const Index T = 40, K = 3;
  const Matrix X = random_design(T, K, rng);
  const Vector beta(Eigen::Vector3d(0.5, 0.0, -0.2));
  const Vector y = X * beta + draw_normal_vector(T, rng);
  HorseshoeState hs = HorseshoeState::initial(K);
  const HorseshoeHyper hyper;
  const double shape = hyper.sigma_shape + 0.5 * (T + K);
  const double scale = hyper.sigma_scale + 0.5 * (y - X * beta).squaredNorm() + 0.5 * beta.squaredNorm();
  double inv_sum = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) inv_sum += 1.0 / sample_sigma2_horseshoe(y, X, beta, hs, hyper, rng);
  CHECK(inv_sum / n == doctest::Approx(shape / scale).epsilon(0.01));
}

TEST_CASE("ssvs pi0 update with no included variables") {
  Rng rng = make_stream(29);
  const Eigen::VectorXi gamma = Eigen::VectorXi::Zero(10);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = sample_ssvs_pi0(gamma, 1.0, 1.0, rng);
    sum += p;
    sum2 += p * p;
  }
  // Beta(1, 11): mean 1/12, variance 11 / (144 * 13).
  const double mean = sum / n, var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(1.0 / 12.0).epsilon(0.01));
  CHECK(var == doctest::Approx(11.0 / (144.0 * 13.0)).epsilon(0.03));
}

TEST_CASE("ssvs beta recovers the signal when gamma is the truth") {
  Rng rng = make_stream(30);
  const Index T = 100, K = 6;
  const Matrix X = random_design(T, K, rng);
  Vector truth = Vector::Zero(K);
  truth << 1.0, -0.5, 0.25, 0, 0, 0;
  const Vector y = X * truth + 0.5 * draw_normal_vector(T, rng);
  Eigen::VectorXi gamma(K);
  gamma << 1, 1, 1, 0, 0, 0;
  const Matrix xtx = X.transpose() * X;
  const Vector xty = X.transpose() * y;
  const Vector delta2 = Vector::Ones(K);
  const auto m = oracle::empirical_moments(K, 20000, [&] {
    return sample_ssvs_beta(xtx, xty, gamma, delta2, 1e-8, 0.25, rng);
  });
  for (Index j = 0; j < 3; ++j) CHECK(std::abs(m.mean(j) - truth(j)) < 3.0 * std::sqrt(m.cov(j, j)));
  for (Index j = 3; j < K; ++j) CHECK(std::abs(m.mean(j)) < 1e-3);
}

TEST_CASE("ssvs sigma^2 with zero target") {
  Rng rng = make_stream(31);
  const Index T = 30, K = 2;
  const Matrix X = random_design(T, K, rng);
  const SsvsHyper hyper;
  const Vector y0 = Vector::Zero(T);
  for (const Vector& beta : {Vector(Vector::Zero(K)), Vector(Eigen::Vector2d(0.3, -0.4))}) {
    const double shape = hyper.sigma_shape + 0.5 * T;
    const double scale = hyper.sigma_scale + 0.5 * (X * beta).squaredNorm();
    double inv_sum = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) inv_sum += 1.0 / sample_sigma2_ssvs(y0, X, beta, hyper, rng);
    CHECK(inv_sum / n == doctest::Approx(shape / scale).epsilon(0.01));
  }
}

TEST_CASE("ssvs delta^2 update is inverse gamma") {
  Rng rng = make_stream(32);
  const Vector beta(Eigen::Vector2d(0.8, 0.01));
  Eigen::VectorXi gamma(2);
  gamma << 1, 0;
  const double c = 1e-2;
  Eigen::Vector2d inv_sum = Eigen::Vector2d::Zero();
  const int n = 50000;
  for (int i = 0; i < n; ++i) inv_sum += sample_ssvs_delta2(beta, gamma, c, 5.0, 4.0, rng).cwiseInverse();
  CHECK(inv_sum(0) / n == doctest::Approx(5.5 / (4.0 + 0.32)).epsilon(0.01));
  CHECK(inv_sum(1) / n == doctest::Approx(5.5 / (4.0 + 0.0001 / (2 * c))).epsilon(0.01));
}

TEST_CASE("ssvs gamma step agrees with exhaustive enumeration") {
  Rng setup = make_stream(33);
  const Index T = 15, K = 2;
  const Matrix X = random_design(T, K, setup);
  const Vector y = X * Eigen::Vector2d(0.6, 0.0) + draw_normal_vector(T, setup);
  SsvsState state = SsvsState::initial(K, 0.05);
  state.pi0 = 0.4;
  const double s2 = 1.0;

  // p(gamma | y) with delta^2, pi0, sigma^2 fixed: beta integrated in closed form.
  std::array<double, 4> post{};
  double norm = 0.0;
  for (int g = 0; g < 4; ++g) {
    const int g0 = g & 1, g1 = (g >> 1) & 1;
    Vector d(2);
    d << (g0 ? 1.0 : state.spike_factor) * state.delta2(0), (g1 ? 1.0 : state.spike_factor) * state.delta2(1);
    const Matrix cov = s2 * Matrix::Identity(T, T) + X * d.asDiagonal() * X.transpose();
    const Eigen::LLT<Matrix> llt(cov);
    const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    const double loglik = -0.5 * logdet - 0.5 * y.dot(llt.solve(y));
    const int n1 = g0 + g1;
    post[g] = std::exp(loglik + n1 * std::log(state.pi0) + (K - n1) * std::log(1 - state.pi0));
    norm += post[g];
  }
  for (auto& p : post) p /= norm;

  Rng rng = make_stream(34);
  const Matrix xtx = X.transpose() * X;
  const Vector xty = X.transpose() * y;
  Vector beta = Vector::Zero(K);
  std::array<double, 4> freq{};
  const int burn = 1000, iters = 200000;
  for (int i = 0; i < burn + iters; ++i) {
    state.gamma = sample_ssvs_gamma(beta, state, rng);
    beta = sample_ssvs_beta(xtx, xty, state.gamma, state.delta2, state.spike_factor, s2, rng);
    if (i >= burn) freq[state.gamma(0) + 2 * state.gamma(1)] += 1.0 / iters;
  }
  for (int g = 0; g < 4; ++g) CHECK(std::abs(freq[g] - post[g]) < 0.02);
}

TEST_CASE("ssvs full step keeps state well formed") {
  Rng rng = make_stream(35);
  const Index T = 40, K = 8;
  const Matrix X = random_design(T, K, rng);
  const Vector y = X.col(0) + draw_normal_vector(T, rng);
  SsvsState state = SsvsState::initial(K, 1e-4);
  Vector beta = Vector::Zero(K);
  double s2 = 1.0;
  const SsvsHyper hyper;
  for (int i = 0; i < 200; ++i) {
    auto r = sample_ssvs_step(y, X, beta, state, s2, hyper, rng);
    beta = r.beta;
    state = r.state;
    s2 = r.sigma_y2;
    CHECK(state.pi0 > 0.0);
    CHECK(state.pi0 < 1.0);
    CHECK((state.delta2.array() > 0).all());
    CHECK(((state.gamma.array() == 0) || (state.gamma.array() == 1)).all());
    CHECK(s2 > 0.0);
  }
  SsvsHyper bad;
  bad.c = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("SAVS hand-computed examples") {
  const Vector norms = Vector::Constant(3, 100.0);
  const Vector phi = savs_sparsify(Eigen::Vector3d(0.0, 0.05, 2.0), norms);
  CHECK(phi(0) == 0.0);
  CHECK(phi(1) == 0.0);
  CHECK(phi(2) == doctest::Approx(1.9975).epsilon(1e-14));
  CHECK(savs_sparsify(Vector::Constant(1, -2.0), Vector::Constant(1, 100.0))(0) ==
        doctest::Approx(-1.9975).epsilon(1e-14));
}

TEST_CASE("SAVS shrinks toward zero and keeps signs") {
  Rng rng = make_stream(36);
  for (int i = 0; i < 10000; ++i) {
    const double b = 3.0 * draw_normal(rng);
    const double n = std::exp(6.0 * draw_uniform(rng) - 1.0);
    const double phi = savs_sparsify(Vector::Constant(1, b), Vector::Constant(1, n))(0);
    CHECK(std::abs(phi) <= std::abs(b));
    CHECK((phi == 0.0 || std::signbit(phi) == std::signbit(b)));
    // Threshold at |b|^3 n = 1.
    const double cube = std::abs(b) * std::abs(b) * std::abs(b) * n;
    if (cube < 1.0 - 1e-9) CHECK(phi == 0.0);
    if (cube > 1.0 + 1e-9) CHECK(phi != 0.0);
  }
}

TEST_CASE("inclusion frequencies and model sizes") {
  Matrix ind = Matrix::Zero(1000, 3);
  Matrix coef = Matrix::Zero(1000, 3);
  ind.col(0).setOnes();
  coef.col(0).setConstant(-1.0);
  ind.col(1).head(250).setOnes();
  coef.col(1).head(250).setConstant(2.0);
  const auto s = inclusion_frequencies(ind, coef);
  CHECK(s.probability(0) == 1.0);
  CHECK(s.probability(1) == 0.25);
  CHECK(s.probability(2) == 0.0);
  CHECK(s.sign_mean(0) == -1.0);
  CHECK(s.sign_mean(1) == 1.0);
  CHECK(s.sign_mean(2) == 0.0);

  const Vector sizes = model_size_distribution(ind);
  CHECK(sizes.size() == 4);
  CHECK(sizes.sum() == doctest::Approx(1.0));
  CHECK(sizes(1) == 0.75);
  CHECK(sizes(2) == 0.25);

  CHECK_THROWS_AS(inclusion_frequencies(Matrix(0, 3), Matrix(0, 3)), DimensionError);
}
