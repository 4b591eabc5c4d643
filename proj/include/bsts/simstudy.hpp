#pragma once

// Simulation protocol for the coefficient-bias / Savage-Dickey table, and a
// synthetic mixed-frequency dataset for exercising the nowcasting pipeline.

#include "bsts/common.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/midas.hpp"
#include "bsts/state_space.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bsts {

struct Regime {
  double sigma_tau = 0.0;
  double sigma_alpha = 0.0;

  std::string label() const;  // "(0.5,0)"
};

// The four (sigma_tau, sigma_alpha) settings, in table column order.
std::vector<Regime> default_regimes();

enum class Density { Sparse, Dense };
std::string to_string(Density d);
Density parse_density(const std::string& text);

struct DgpSpec {
  Index T = 150;
  Index K = 300;  // regressor columns; a multiple of 3 (one monthly series per 3 columns)
  Regime regime{0.5, 0.0};
  Density density = Density::Sparse;
  double p_d = 2.0 / 3.0;
  double ar_decay = 0.5;
  double sigma_y = 1.0;

  void validate() const;
};

// Sparse: (1, 1/2, 1/3, 1/4, 1/5, 0, ...). Dense: each entry 1/3 w.p. p_d.
Vector make_beta(Density density, Index K, double p_d, Rng& rng);

// Sigma_ij = decay^|i-j| over `months` monthly observations of one covariate.
Matrix covariate_covariance(Index months, double decay);

struct DgpDraw {
  Vector y;
  Matrix X;
  Vector beta;
  NcssStates states;
  Vector trend;
};

// Monthly covariates ~ N(0, Sigma) independently per series, skip-sampled;
// trend from the non-centred local linear trend with tau0 = alpha0 = 0.
DgpDraw generate_dgp(const DgpSpec& spec, Rng& rng);

// sqrt((1/n_reps) sum_r ||beta_hat_r - beta_true_r||^2)
double root_mean_bias(const std::vector<Vector>& beta_hats, const std::vector<Vector>& beta_true);
double root_mean_bias(const std::vector<Vector>& beta_hats, const Vector& beta_true);

struct StudyGrid {
  std::string name = "desk";
  Index T = 150;
  Index K = 60;
  int n_reps = 10;
  double p_d = 2.0 / 3.0;
  double sigma_y = 1.0;
  std::vector<Regime> regimes = default_regimes();
  std::vector<Density> densities{Density::Sparse, Density::Dense};
  std::vector<PriorKind> priors{PriorKind::Horseshoe, PriorKind::HorseshoeSavs, PriorKind::Ssvs};
  ModelConfig model;  // prior_kind is overridden per run
  int n_threads = 0;  // 0: hardware concurrency

  static StudyGrid desk();
  static StudyGrid full();
  void validate() const;
};

struct ReplicationRecord {
  std::string prior;
  Regime regime;
  Density density = Density::Sparse;
  int rep = 0;
  double sq_error = 0.0;  // ||beta_hat - beta||^2
  double ds_tau = 0.0;
  double ds_alpha = 0.0;
  std::string status = "ok";  // otherwise the error message
};

struct CellSummary {
  std::string prior;
  Regime regime;
  Density density = Density::Sparse;
  double root_mean_bias = 0.0;
  double ds_tau = 0.0;    // mean over replications
  double ds_alpha = 0.0;
  int n_ok = 0;
};

struct SimResult {
  std::vector<ReplicationRecord> records;  // ordered by (density, regime, rep, prior)
  std::vector<CellSummary> cells;          // ordered by (density, regime, prior)

  const CellSummary& cell(const std::string& prior, const Regime& regime, Density density) const;
  std::vector<const ReplicationRecord*> replications(const std::string& prior, const Regime& regime,
                                                     Density density) const;
};

// Recomputes cell aggregates from the replication records.
std::vector<CellSummary> summarise(const std::vector<ReplicationRecord>& records);

SimResult run_study(const StudyGrid& grid, std::uint64_t seed);

// Prior rows, regime columns, one block per statistic.
void write_study_csv(const std::filesystem::path& path, const SimResult& result);
void write_replications_csv(const std::filesystem::path& path, const SimResult& result);

// --- synthetic nowcasting data ---------------------------------------------

struct NowcastDgpSpec {
  Index quarters = 60;   // observed quarters; one extra unobserved quarter is appended
  int n_google = 3;      // gt_* wildcards expand to gt_1..gt_n
  Index start_month = 2004 * 12;
  double sigma_y = 0.3;
  double trend_sd = 0.05;
};

struct NowcastData {
  MonthlyData monthly;
  QuarterlyData quarterly;  // last value NaN
  Vector beta;              // on the raw skip-sampled columns, in panel order
};

// Raw monthly levels whose calendar transforms give AR(1) signals; the outcome
// loads on the latest months of a few early and late-published series so
// later vintages carry more information.
NowcastData synthetic_nowcast_data(const VintageCalendar& calendar, const NowcastDgpSpec& spec, Rng& rng);

}  // namespace bsts
