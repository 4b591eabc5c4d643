#include "bsts/simstudy.hpp"
#include "bsts/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace bsts;

namespace {

// Ljung-Box statistic over lags 1..h.
double ljung_box(const Vector& e, int h) {
  const Index n = e.size();
  const Vector c = e.array() - e.mean();
  const double c0 = c.squaredNorm();
  double q = 0.0;
  for (int k = 1; k <= h; ++k) {
    const double rk = c.head(n - k).dot(c.tail(n - k)) / c0;
    q += rk * rk / static_cast<double>(n - k);
  }
  return static_cast<double>(n) * (n + 2.0) * q;
}

}  // namespace

TEST_CASE("make_beta") {
  Rng rng = make_stream(1);
  const Vector s = make_beta(Density::Sparse, 8, 2.0 / 3.0, rng);
  Vector expected(8);
  expected << 1.0, 0.5, 1.0 / 3.0, 0.25, 0.2, 0.0, 0.0, 0.0;
  CHECK(s == expected);
  CHECK_THROWS_AS(make_beta(Density::Sparse, 5, 0.5, rng), DimensionError);

  const Vector all = make_beta(Density::Dense, 50, 1.0, rng);
  CHECK((all.array() == 1.0 / 3.0).all());

  const Vector d = make_beta(Density::Dense, 3000, 2.0 / 3.0, rng);
  const double frac = static_cast<double>((d.array() != 0.0).count()) / 3000.0;
  CHECK(std::abs(frac - 2.0 / 3.0) < 0.03);
  CHECK(((d.array() == 0.0) || (d.array() == 1.0 / 3.0)).all());
}

TEST_CASE("covariate covariance") {
  const Matrix S = covariate_covariance(6, 0.5);
  CHECK(S(0, 2) == 0.25);
  CHECK(S(2, 0) == 0.25);
  CHECK(S.diagonal().isOnes());
  CHECK(S(1, 5) == doctest::Approx(0.0625));
}

TEST_CASE("dgp covariates have unit variance and the stated autocorrelation") {
  DgpSpec spec;
  spec.T = 400;
  spec.K = 30;
  Rng rng = make_stream(2);
  const auto d = generate_dgp(spec, rng);
  CHECK(d.X.rows() == 400);
  CHECK(d.X.cols() == 30);
  for (Index j = 0; j < d.X.cols(); ++j) {
    const double var = (d.X.col(j).array() - d.X.col(j).mean()).square().sum() / 399.0;
    CHECK(std::abs(var - 1.0) < 0.25);
  }
  // offsets 0 and 1 of one series are adjacent months
  double c01 = 0.0, c02 = 0.0;
  for (Index k = 0; k < 10; ++k) {
    c01 += d.X.col(3 * k).dot(d.X.col(3 * k + 1)) / 400.0;
    c02 += d.X.col(3 * k).dot(d.X.col(3 * k + 2)) / 400.0;
  }
  CHECK(std::abs(c01 / 10 - 0.5) < 0.05);
  CHECK(std::abs(c02 / 10 - 0.25) < 0.05);
}

TEST_CASE("constant-trend regime leaves white noise") {
  DgpSpec spec;
  spec.K = 30;
  spec.regime = {0.0, 0.0};
  int accepted = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(3, {static_cast<std::uint64_t>(r)});
    const auto d = generate_dgp(spec, rng);
    const Vector resid = d.y - d.X * d.beta;  // trend is identically zero here
    CHECK(d.trend.isZero());
    accepted += ljung_box(resid, 10) < 18.307;  // chi-square(10) 95% point
  }
  CHECK(accepted >= 0.9 * reps);
}

TEST_CASE("dgp is deterministic under a fixed seed") {
  DgpSpec spec;
  spec.K = 12;
  spec.density = Density::Dense;
  spec.regime = {0.5, 0.5};
  Rng a = make_stream(4), b = make_stream(4);
  const auto da = generate_dgp(spec, a);
  const auto db = generate_dgp(spec, b);
  CHECK(da.y == db.y);
  CHECK(da.X == db.X);
  CHECK(da.beta == db.beta);

  spec.K = 10;
  CHECK_THROWS_AS(generate_dgp(spec, a), ConfigError);
}

TEST_CASE("root mean bias") {
  const Vector truth = Vector::LinSpaced(4, 0.0, 1.0);
  CHECK(root_mean_bias({truth, truth}, truth) == 0.0);

  Vector e = Vector::Zero(4);
  e(0) = 0.1;
  CHECK(root_mean_bias({truth + e}, truth) == doctest::Approx(0.1));

  Vector e1 = Vector::Zero(4), e3 = Vector::Zero(4);
  e1(1) = 0.1;                    // squared norm 0.01
  e3(2) = std::sqrt(0.03);        // squared norm 0.03
  CHECK(root_mean_bias({truth + e1, truth + e3}, truth) == doctest::Approx(std::sqrt(0.02)));
  CHECK(std::sqrt(0.02) == doctest::Approx(0.1414).epsilon(1e-3));

  CHECK_THROWS_AS(root_mean_bias({}, truth), DimensionError);
  CHECK_THROWS_AS(root_mean_bias({Vector::Zero(3)}, truth), DimensionError);
}

TEST_CASE("summaries are recomputable from replications") {
  std::vector<ReplicationRecord> recs;
  for (int r = 0; r < 4; ++r) {
    ReplicationRecord x;
    x.prior = "ssvs";
    x.regime = {0.5, 0.0};
    x.rep = r;
    x.sq_error = 0.01 * (r + 1);
    x.ds_tau = 2.0 * r;
    x.ds_alpha = 0.5;
    recs.push_back(x);
  }
  recs[3].status = "numerical failure";
  const auto cells = summarise(recs);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].n_ok == 3);
  CHECK(cells[0].root_mean_bias == doctest::Approx(std::sqrt(0.06 / 3)));
  CHECK(cells[0].ds_tau == doctest::Approx(2.0));
}

TEST_CASE("table run structure") {
  StudyGrid g;
  g.T = 40;
  g.K = 9;
  g.n_reps = 2;
  g.regimes = {{0.5, 0.0}, {0.0, 0.0}};
  g.model.mcmc.n_iter = 1200;
  g.model.mcmc.n_burn = 200;
  g.model.mcmc.thin = 1;
  g.model.mcmc.n_chains = 1;
  const auto res = run_study(g, 11);
  CHECK(res.records.size() == 2 * 2 * 2 * 3);
  CHECK(res.cells.size() == 2 * 2 * 3);
  for (const auto& r : res.records) {
    CHECK(r.status == "ok");
    CHECK(r.ds_tau > 0.0);
  }
  // horseshoe-savs shares the horseshoe chain
  const auto hs = res.replications("horseshoe", {0.5, 0.0}, Density::Dense);
  const auto savs = res.replications("horseshoe-savs", {0.5, 0.0}, Density::Dense);
  REQUIRE(hs.size() == 2);
  CHECK(hs[0]->ds_tau == savs[0]->ds_tau);

  const auto again = run_study(g, 11);
  CHECK(again.cell("ssvs", {0.0, 0.0}, Density::Sparse).root_mean_bias ==
        res.cell("ssvs", {0.0, 0.0}, Density::Sparse).root_mean_bias);

  const auto dir = std::filesystem::temp_directory_path() / "bsts_test_simstudy";
  std::filesystem::create_directories(dir);
  write_study_csv(dir / "study.csv", res);
  std::ifstream in(dir / "study.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "statistic,prior,sparse[0.5;0],sparse[0;0],dense[0.5;0],dense[0;0]");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3 + 2 + 2);

  g.model.mcmc.n_iter = 600;
  CHECK_THROWS_AS(run_study(g, 1), ConfigError);
}

TEST_CASE("synthetic nowcast data reproduces its design through the calendar") {
  const auto cal = builtin_calendar();
  NowcastDgpSpec spec;
  spec.quarters = 20;
  Rng rng = make_stream(12);
  const auto data = synthetic_nowcast_data(cal, spec, rng);
  CHECK(data.quarterly.values.size() == 21);
  CHECK(std::isnan(data.quarterly.values(20)));
  const auto panel = build_panel(data.monthly, data.quarterly, cal);
  CHECK(panel.series.size() == 13 + 3);
  CHECK(panel.X.cols() == data.beta.size());
  CHECK(std::find(panel.series.begin(), panel.series.end(), "gt_2") != panel.series.end());
  CHECK(panel.X.allFinite());
  // transforms undo the level construction, so the loadings explain y up to trend and noise
  const Vector resid = panel.y.head(20) - panel.X.topRows(20) * data.beta;
  const Vector diffs = resid.tail(19) - resid.head(19);
  CHECK(std::sqrt(diffs.squaredNorm() / 19) < 0.7);
  CHECK((data.beta.array() != 0.0).count() == 6);

  for (Index v = 0; v + 1 < cal.size(); ++v) {
    CHECK(masked_columns(panel, cal, static_cast<int>(v + 1)).size() <=
          masked_columns(panel, cal, static_cast<int>(v)).size());
  }
}
