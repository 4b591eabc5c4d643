#include "bsts/forecast.hpp"

#include "bsts/random.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>

namespace bsts {

void PredictiveDraws::validate() const {
  if (draws.size() != cond_means.size() || draws.size() != cond_vars.size()) {
    throw DimensionError("predictive draws: component lengths differ");
  }
  if (draws.size() == 0) throw DimensionError("predictive draws: empty");
  if ((cond_vars.array() <= 0.0).any()) throw NumericalError("predictive draws: non-positive variance");
}

PredictiveDraws predictive_draws(const PosteriorDraws& draws, const Vector& x_next, Rng& rng) {
  return predictive_draws(draws, x_next, draws.prior_kind == PriorKind::HorseshoeSavs, rng);
}

PredictiveDraws predictive_draws(const PosteriorDraws& draws, const Vector& x_next, bool sparse,
                                 Rng& rng) {
  if (x_next.size() != draws.K) {
    throw DimensionError("predictive_draws: x_next has " + std::to_string(x_next.size()) +
                         " entries, model has " + std::to_string(draws.K));
  }
  if (draws.size() == 0) throw DimensionError("predictive_draws: no stored draws");
  if (sparse && draws.beta_sparse.rows() != draws.size()) {
    throw DimensionError("predictive_draws: no SAVS draws stored");
  }
  const Index M = draws.size();
  const Index T = draws.T;
  PredictiveDraws out{Vector(M), Vector(M), Vector(M)};
  for (Index m = 0; m < M; ++m) {
    const ThetaParams th = draws.theta_at(m);
    const double a_last = draws.a_tilde(m, T - 1);
    const double alpha_last = a_last - (T >= 2 ? draws.a_tilde(m, T - 2) : 0.0);
    const double tau_next = draws.tau_tilde(m, T - 1) + draw_normal(rng);
    const double a_next = a_last + alpha_last + draw_normal(rng);
    const double trend = th.tau0 + static_cast<double>(T + 1) * th.alpha0 + th.sigma_tau * tau_next +
                         th.sigma_alpha * a_next;
    const double reg = draws.K > 0 ? x_next.dot(sparse ? Vector(draws.beta_sparse.row(m).transpose())
                                                       : Vector(draws.beta.row(m).transpose()))
                                   : 0.0;
    out.cond_means(m) = trend + reg;
    out.cond_vars(m) = draws.sigma_y2(m);
    out.draws(m) = out.cond_means(m) + std::sqrt(out.cond_vars(m)) * draw_normal(rng);
  }
  return out;
}

double rt_rmsfe(const Vector& point_forecasts, const Vector& realised) {
  if (point_forecasts.size() != realised.size()) throw DimensionError("rt_rmsfe: length mismatch");
  if (realised.size() == 0) throw DimensionError("rt_rmsfe: empty input");
  return std::sqrt((point_forecasts - realised).squaredNorm() / static_cast<double>(realised.size()));
}

double log_predictive_density(const PredictiveDraws& pred, double realised) {
  pred.validate();
  const Index M = pred.size();
  Vector logs(M);
  for (Index m = 0; m < M; ++m) {
    const double v = pred.cond_vars(m);
    const double d = realised - pred.cond_means(m);
    logs(m) = -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * d * d / v;
  }
  const double mx = logs.maxCoeff();
  return mx + std::log((logs.array() - mx).exp().sum()) - std::log(static_cast<double>(M));
}

double rt_lpds(const std::vector<PredictiveDraws>& preds, const Vector& realised) {
  if (preds.size() != static_cast<std::size_t>(realised.size())) {
    throw DimensionError("rt_lpds: length mismatch");
  }
  if (preds.empty()) throw DimensionError("rt_lpds: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    sum += log_predictive_density(preds[i], realised(static_cast<Index>(i)));
  }
  return sum / static_cast<double>(preds.size());
}

double crps(const PredictiveDraws& pred, double realised, Rng& rng, CrpsForm form) {
  const Index M = pred.size();
  if (M < 2) throw DimensionError("crps: need at least 2 draws");
  std::vector<Index> a(static_cast<std::size_t>(M)), b(static_cast<std::size_t>(M));
  std::iota(a.begin(), a.end(), Index{0});
  std::iota(b.begin(), b.end(), Index{0});
  std::shuffle(a.begin(), a.end(), rng);
  std::shuffle(b.begin(), b.end(), rng);
  double to_obs = 0.0, between = 0.0;
  for (Index m = 0; m < M; ++m) {
    const double ya = pred.draws(a[static_cast<std::size_t>(m)]);
    const double yb = pred.draws(b[static_cast<std::size_t>(m)]);
    to_obs += std::abs(ya - realised);
    between += std::abs(ya - yb);
  }
  to_obs /= static_cast<double>(M);
  between /= static_cast<double>(M);
  const double w = form == CrpsForm::Energy ? 1.0 : 0.5;
  return w * to_obs - 0.5 * between;
}

double rt_crps(const std::vector<PredictiveDraws>& preds, const Vector& realised, Rng& rng,
               CrpsForm form) {
  if (preds.size() != static_cast<std::size_t>(realised.size())) {
    throw DimensionError("rt_crps: length mismatch");
  }
  if (preds.empty()) throw DimensionError("rt_crps: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += crps(preds[i], realised(static_cast<Index>(i)), rng, form);
  return sum / static_cast<double>(preds.size());
}

Ar2Fit ar2_baseline(const Vector& y, Rng& rng, Index n_draws) {
  const Index T = y.size();
  if (T < 10) throw DimensionError("ar2_baseline: need at least 10 observations");
  if (!y.allFinite()) throw DataError("ar2_baseline: y has missing values");
  if (n_draws < 1) throw DimensionError("ar2_baseline: need at least one draw");
  const Index n = T - 2;
  Matrix Z(n, 3);
  Z.col(0).setOnes();
  Z.col(1) = y.segment(1, n);
  Z.col(2) = y.segment(0, n);
  const Vector target = y.tail(n);

  const double prior_var = 100.0, a0 = 0.01, b0 = 0.01;
  Ar2Fit fit;
  Matrix ztz = Z.transpose() * Z;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(ztz);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-10 * std::max(hi, 1.0))) {
    fit.ridge_applied = true;
    ztz.diagonal().array() += 1e-6 * std::max(hi, 1.0);
  }
  Matrix prec = ztz;
  prec.diagonal().array() += 1.0 / prior_var;
  const Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success) throw NumericalError("ar2_baseline: posterior precision not positive definite");
  const Vector mean = llt.solve(Z.transpose() * target);
  const double an = a0 + 0.5 * static_cast<double>(n);
  const double bn = b0 + 0.5 * std::max(0.0, target.squaredNorm() - mean.dot(prec * mean));
  const Matrix vn = llt.solve(Matrix::Identity(3, 3));
  const Matrix vn_chol = Eigen::LLT<Matrix>(vn).matrixL();

  fit.coef_mean = mean;
  for (int j = 0; j < 3; ++j) fit.coef_sd(j) = std::sqrt(bn / (an - 1.0) * vn(j, j));

  const Eigen::Vector3d z_next(1.0, y(T - 1), y(T - 2));
  fit.predictive = {Vector(n_draws), Vector(n_draws), Vector(n_draws)};
  for (Index m = 0; m < n_draws; ++m) {
    const double s2 = draw_inv_gamma(an, bn, rng);
    const Vector beta = mean + std::sqrt(s2) * (vn_chol * draw_normal_vector(3, rng));
    fit.predictive.cond_means(m) = z_next.dot(beta);
    fit.predictive.cond_vars(m) = s2;
    fit.predictive.draws(m) = fit.predictive.cond_means(m) + std::sqrt(s2) * draw_normal(rng);
  }
  return fit;
}

std::string model_name(PriorKind kind) { return to_string(kind); }

const VintageScores& EvaluationResult::at(int vintage, const std::string& model) const {
  for (const auto& s : scores) {
    if (s.vintage == vintage && s.model == model) return s;
  }
  throw DimensionError("no scores for vintage " + std::to_string(vintage) + ", model " + model);
}

EvaluationResult run_realtime_evaluation(const QuarterlyPanel& panel, const VintageCalendar& calendar,
                                         const ModelConfig& config, const EvaluationOptions& options) {
  config.validate();
  calendar.validate();
  if (options.first_target < 12 || options.last_target < options.first_target ||
      options.last_target >= panel.rows()) {
    throw DimensionError("evaluation window must satisfy 12 <= first <= last < T (T = " +
                         std::to_string(panel.rows()) + ")");
  }
  if (!panel.y.head(options.last_target + 1).allFinite()) {
    throw DataError("evaluation window: y has missing values");
  }
  if (panel.standardised()) throw DataError("evaluation expects raw regressors; destandardise first");

  EvaluationResult result;
  result.n_vintages = calendar.size();
  for (auto k : options.priors) result.models.push_back(model_name(k));
  if (options.include_ar2) result.models.push_back("ar2");

  // Fit each distinct chain once per target: horseshoe and horseshoe-savs share one.
  const bool want_hs = std::any_of(options.priors.begin(), options.priors.end(),
                                   [](PriorKind k) { return k != PriorKind::Ssvs; });
  const bool want_ssvs = std::find(options.priors.begin(), options.priors.end(), PriorKind::Ssvs) !=
                         options.priors.end();

  for (Index target = options.first_target; target <= options.last_target; ++target) {
    QuarterlyPanel train = panel;
    train = standardise(std::move(train), target);
    const Vector y_train = panel.y.head(target);
    const Matrix X_train = train.X.topRows(target);
    const std::uint64_t target_key = static_cast<std::uint64_t>(target);

    auto fit = [&](PriorKind kind) {
      ModelConfig c = config;
      c.prior_kind = kind;
      c.mcmc.seed = make_stream(config.mcmc.seed, {target_key, static_cast<std::uint64_t>(kind)})();
      return run_gibbs(y_train, X_train, c);
    };
    PosteriorDraws hs, ssvs;
    if (want_hs) hs = fit(PriorKind::HorseshoeSavs);
    if (want_ssvs) ssvs = fit(PriorKind::Ssvs);

    PredictiveDraws ar2_pred;
    if (options.include_ar2) {
      Rng rng = make_stream(config.mcmc.seed, {target_key, 99});
      auto ar = ar2_baseline(y_train, rng, options.ar2_draws);
      if (ar.ridge_applied) std::cerr << "warning: AR(2) design near-singular at target " << target << "; ridge applied\n";
      ar2_pred = std::move(ar.predictive);
    }

    const double realised = panel.y(target);
    for (int v = 0; v < calendar.size(); ++v) {
      const Vector x_next = mask_unpublished(train, calendar, v, target).X.row(target).transpose();
      for (std::size_t mi = 0; mi < result.models.size(); ++mi) {
        const auto& name = result.models[mi];
        Rng rng = make_stream(config.mcmc.seed, {target_key, static_cast<std::uint64_t>(v), mi + 1});
        PredictiveDraws pred;
        if (name == "ar2") {
          pred = ar2_pred;
        } else if (name == "ssvs") {
          pred = predictive_draws(ssvs, x_next, false, rng);
        } else {
          pred = predictive_draws(hs, x_next, name == "horseshoe-savs", rng);
        }
        // AR(2) scores must not depend on the vintage, so its CRPS pairing uses a fixed stream.
        Rng crps_rng = name == "ar2" ? make_stream(config.mcmc.seed, {target_key, 98})
                                     : make_stream(config.mcmc.seed, {target_key, static_cast<std::uint64_t>(v), mi + 101});
        result.records.push_back({target, v, name, pred.mean(), realised,
                                  log_predictive_density(pred, realised),
                                  crps(pred, realised, crps_rng, options.crps_form)});
      }
    }
  }

  for (int v = 0; v < calendar.size(); ++v) {
    for (const auto& name : result.models) {
      double se = 0.0, ls = 0.0, cr = 0.0;
      Index n = 0;
      for (const auto& r : result.records) {
        if (r.vintage != v || r.model != name) continue;
        se += (r.point - r.realised) * (r.point - r.realised);
        ls += r.log_score;
        cr += r.crps;
        ++n;
      }
      const double nn = static_cast<double>(n);
      result.scores.push_back({v, name, std::sqrt(se / nn), ls / nn, cr / nn});
    }
  }
  return result;
}

void write_scores_csv(const std::filesystem::path& path, const EvaluationResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "vintage,model,metric,value\n";
  for (const auto& s : result.scores) {
    out << s.vintage << "," << s.model << ",rt_rmsfe," << csv::num(s.rt_rmsfe) << "\n";
    out << s.vintage << "," << s.model << ",rt_lpds," << csv::num(s.rt_lpds) << "\n";
    out << s.vintage << "," << s.model << ",rt_crps," << csv::num(s.rt_crps) << "\n";
  }
}

void write_records_csv(const std::filesystem::path& path, const EvaluationResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "target,vintage,model,point,realised,log_score,crps\n";
  for (const auto& r : result.records) {
    out << r.target << "," << r.vintage << "," << r.model << "," << csv::num(r.point) << ","
        << csv::num(r.realised) << "," << csv::num(r.log_score) << "," << csv::num(r.crps) << "\n";
  }
}

}  // namespace bsts
