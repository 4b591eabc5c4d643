#pragma once

// One-step-ahead predictive draws, real-time point and density scores, the
// AR(2) benchmark, and the rolling vintage evaluation.

#include "bsts/common.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/midas.hpp"

#include <map>
#include <string>
#include <vector>

namespace bsts {

// Draws of y_{T+1} with the Gaussian component each was drawn from.
struct PredictiveDraws {
  Vector draws;
  Vector cond_means;
  Vector cond_vars;

  Index size() const { return draws.size(); }
  double mean() const { return draws.mean(); }
  void validate() const;
};

// Extends each stored state path one step, then y ~ N(x'beta + tau_{T+1}, sigma_y^2).
// Uses the SAVS coefficients under horseshoe-savs.
PredictiveDraws predictive_draws(const PosteriorDraws& draws, const Vector& x_next, Rng& rng);
// Same, with the coefficient choice made explicit.
PredictiveDraws predictive_draws(const PosteriorDraws& draws, const Vector& x_next, bool sparse,
                                 Rng& rng);

double rt_rmsfe(const Vector& point_forecasts, const Vector& realised);

// log of the equal-weight Gaussian mixture density at `realised`.
double log_predictive_density(const PredictiveDraws& pred, double realised);
double rt_lpds(const std::vector<PredictiveDraws>& preds, const Vector& realised);

enum class CrpsForm {
  Energy,         // E|Y - y| - 1/2 E|Y - Y'|
  HalvedFirstTerm,  // 1/2 E|Y - y| - 1/2 E|Y - Y'|
};

// Y and Y' are paired through two independent permutations of the draws.
double crps(const PredictiveDraws& pred, double realised, Rng& rng, CrpsForm form = CrpsForm::Energy);
double rt_crps(const std::vector<PredictiveDraws>& preds, const Vector& realised, Rng& rng,
               CrpsForm form = CrpsForm::Energy);

struct Ar2Fit {
  PredictiveDraws predictive;
  Eigen::Vector3d coef_mean;  // intercept, phi1, phi2
  Eigen::Vector3d coef_sd;
  bool ridge_applied = false;
};

// Conjugate normal-inverse-gamma AR(2) with intercept: beta | s2 ~ N(0, 100 s2 I),
// s2 ~ IG(0.01, 0.01). A ridge is added when Z'Z is numerically singular.
Ar2Fit ar2_baseline(const Vector& y, Rng& rng, Index n_draws = 2000);

struct EvaluationOptions {
  std::vector<PriorKind> priors{PriorKind::Horseshoe, PriorKind::HorseshoeSavs, PriorKind::Ssvs};
  bool include_ar2 = true;
  Index first_target = 0;  // first quarter (row) to nowcast
  Index last_target = 0;   // last quarter (row), inclusive
  CrpsForm crps_form = CrpsForm::Energy;
  Index ar2_draws = 2000;
};

struct ForecastRecord {
  Index target = 0;
  int vintage = 0;
  std::string model;
  double point = 0.0;
  double realised = 0.0;
  double log_score = 0.0;
  double crps = 0.0;
};

struct VintageScores {
  int vintage = 0;
  std::string model;
  double rt_rmsfe = 0.0;
  double rt_lpds = 0.0;
  double rt_crps = 0.0;
};

struct EvaluationResult {
  std::vector<std::string> models;
  int n_vintages = 0;
  std::vector<ForecastRecord> records;  // ordered by (target, vintage, model)
  std::vector<VintageScores> scores;    // ordered by (vintage, model)

  const VintageScores& at(int vintage, const std::string& model) const;
};

// Rolling nowcasts over targets [first_target, last_target]. For each target
// the models are re-estimated on all earlier rows (standardised on those rows)
// and the fit is reused across vintages; the target row is masked per vintage.
// `panel` holds raw (unstandardised) regressors.
EvaluationResult run_realtime_evaluation(const QuarterlyPanel& panel, const VintageCalendar& calendar,
                                         const ModelConfig& config, const EvaluationOptions& options);

void write_scores_csv(const std::filesystem::path& path, const EvaluationResult& result);
void write_records_csv(const std::filesystem::path& path, const EvaluationResult& result);

std::string model_name(PriorKind kind);

}  // namespace bsts
