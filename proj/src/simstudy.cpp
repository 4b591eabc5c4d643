#include "bsts/simstudy.hpp"

#include "bsts/random.hpp"
#include "csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace bsts {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::string Regime::label() const {
  std::ostringstream s;
  s << "(" << sigma_tau << "," << sigma_alpha << ")";
  return s.str();
}

std::vector<Regime> default_regimes() { return {{0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}, {0.0, 0.0}}; }

std::string to_string(Density d) { return d == Density::Sparse ? "sparse" : "dense"; }

Density parse_density(const std::string& text) {
  if (text == "sparse") return Density::Sparse;
  if (text == "dense") return Density::Dense;
  throw ConfigError("unknown density '" + text + "' (expected sparse or dense)");
}

void DgpSpec::validate() const {
  if (T < 10) throw ConfigError("dgp: T must be at least 10");
  if (K < 3 || K % 3 != 0) throw ConfigError("dgp: K must be a positive multiple of 3, got " + std::to_string(K));
  if (!(p_d > 0.0 && p_d < 1.0) && !(p_d == 1.0)) throw ConfigError("dgp: p_d must lie in (0, 1]");
  if (!(std::abs(ar_decay) < 1.0)) throw ConfigError("dgp: ar_decay must lie in (-1, 1)");
  if (!(sigma_y > 0.0)) throw ConfigError("dgp: sigma_y must be positive");
  if (regime.sigma_tau < 0.0 || regime.sigma_alpha < 0.0) throw ConfigError("dgp: state SDs must be non-negative");
}

Vector make_beta(Density density, Index K, double p_d, Rng& rng) {
  if (density == Density::Sparse) {
    if (K < 6) throw DimensionError("make_beta: sparse design needs K >= 6, got " + std::to_string(K));
    Vector b = Vector::Zero(K);
    for (int j = 0; j < 5; ++j) b(j) = 1.0 / (j + 1);
    return b;
  }
  if (K < 1) throw DimensionError("make_beta: K must be positive");
  Vector b(K);
  for (Index j = 0; j < K; ++j) b(j) = draw_bernoulli(p_d, rng) ? 1.0 / 3.0 : 0.0;
  return b;
}

Matrix covariate_covariance(Index months, double decay) {
  Matrix S(months, months);
  for (Index i = 0; i < months; ++i) {
    for (Index j = 0; j < months; ++j) S(i, j) = std::pow(decay, static_cast<double>(std::abs(i - j)));
  }
  return S;
}

DgpDraw generate_dgp(const DgpSpec& spec, Rng& rng) {
  spec.validate();
  const Index n_series = spec.K / 3;
  const Index months = 3 * spec.T;
  const Matrix L = covariate_covariance(months, spec.ar_decay).llt().matrixL();
  std::vector<MonthlySeries> series(static_cast<std::size_t>(n_series));
  for (Index k = 0; k < n_series; ++k) {
    auto& s = series[static_cast<std::size_t>(k)];
    s.name = "x" + std::to_string(k + 1);
    s.values = L * draw_normal_vector(months, rng);
  }
  DgpDraw out;
  out.X = skip_sample(series, spec.T);
  out.beta = make_beta(spec.density, spec.K, spec.p_d, rng);

  out.states = NcssStates::zeros(spec.T);
  double tau = 0.0, alpha = 0.0, a = 0.0;
  for (Index t = 0; t < spec.T; ++t) {
    tau += draw_normal(rng);
    alpha += draw_normal(rng);
    a += alpha;
    out.states.tau_tilde(t) = tau;
    out.states.a_tilde(t) = a;
  }
  out.trend = trend_path({0.0, 0.0, spec.regime.sigma_tau, spec.regime.sigma_alpha}, out.states);
  out.y = out.trend + out.X * out.beta + spec.sigma_y * draw_normal_vector(spec.T, rng);
  return out;
}

double root_mean_bias(const std::vector<Vector>& beta_hats, const std::vector<Vector>& beta_true) {
  if (beta_hats.empty()) throw DimensionError("root_mean_bias: need at least one replication");
  if (beta_hats.size() != beta_true.size()) throw DimensionError("root_mean_bias: replication count mismatch");
  double sum = 0.0;
  for (std::size_t r = 0; r < beta_hats.size(); ++r) {
    if (beta_hats[r].size() != beta_true[r].size()) {
      throw DimensionError("root_mean_bias: replication " + std::to_string(r) + " has length " +
                           std::to_string(beta_hats[r].size()) + ", truth has " +
                           std::to_string(beta_true[r].size()));
    }
    sum += (beta_hats[r] - beta_true[r]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(beta_hats.size()));
}

double root_mean_bias(const std::vector<Vector>& beta_hats, const Vector& beta_true) {
  return root_mean_bias(beta_hats, std::vector<Vector>(beta_hats.size(), beta_true));
}

StudyGrid StudyGrid::desk() {
  StudyGrid g;
  g.model.mcmc.n_iter = 6000;
  g.model.mcmc.n_burn = 2000;
  g.model.mcmc.thin = 4;
  g.model.mcmc.n_chains = 1;
  return g;
}

StudyGrid StudyGrid::full() {
  StudyGrid g;
  g.name = "full";
  g.K = 300;
  g.n_reps = 20;
  return g;
}

void StudyGrid::validate() const {
  DgpSpec probe;
  probe.T = T;
  probe.K = K;
  probe.p_d = p_d;
  probe.sigma_y = sigma_y;
  probe.validate();
  if (n_reps < 1) throw ConfigError("simulate: n_reps must be at least 1");
  if (regimes.empty() || densities.empty() || priors.empty()) {
    throw ConfigError("simulate: regimes, densities and priors must be non-empty");
  }
  if (std::find(densities.begin(), densities.end(), Density::Sparse) != densities.end() && K < 6) {
    throw ConfigError("simulate: sparse design needs K >= 6");
  }
  model.validate();
  const auto kept = static_cast<Index>(model.mcmc.kept()) * model.mcmc.n_chains;
  if (kept < 1000) {
    throw ConfigError("simulate: Savage-Dickey needs at least 1000 kept draws, settings keep " +
                      std::to_string(kept));
  }
}

namespace {

bool same_regime(const Regime& a, const Regime& b) {
  return a.sigma_tau == b.sigma_tau && a.sigma_alpha == b.sigma_alpha;
}

struct Task {
  std::size_t density;
  std::size_t regime;
  int rep;
};

std::vector<ReplicationRecord> run_task(const StudyGrid& grid, const Task& task, std::uint64_t seed) {
  const Density density = grid.densities[task.density];
  const Regime regime = grid.regimes[task.regime];
  DgpSpec spec;
  spec.T = grid.T;
  spec.K = grid.K;
  spec.regime = regime;
  spec.density = density;
  spec.p_d = grid.p_d;
  spec.sigma_y = grid.sigma_y;
  Rng rng = make_stream(seed, {static_cast<std::uint64_t>(density), task.regime, static_cast<std::uint64_t>(task.rep)});

  std::vector<ReplicationRecord> out;
  for (auto kind : grid.priors) {
    ReplicationRecord r;
    r.prior = to_string(kind);
    r.regime = regime;
    r.density = density;
    r.rep = task.rep;
    out.push_back(r);
  }
  auto fail_all = [&](const std::string& msg, bool horseshoe_family) {
    for (std::size_t i = 0; i < grid.priors.size(); ++i) {
      if ((grid.priors[i] != PriorKind::Ssvs) == horseshoe_family) out[i].status = msg;
    }
  };

  DgpDraw dgp;
  try {
    dgp = generate_dgp(spec, rng);
  } catch (const std::exception& e) {
    fail_all(e.what(), true);
    fail_all(e.what(), false);
    return out;
  }
  const double prior_tau = grid.model.state_prior.theta_var(2);
  const double prior_alpha = grid.model.state_prior.theta_var(3);

  auto fit = [&](PriorKind kind, std::uint64_t key) {
    ModelConfig c = grid.model;
    c.prior_kind = kind;
    c.mcmc.seed = make_stream(seed, {static_cast<std::uint64_t>(density), task.regime,
                                     static_cast<std::uint64_t>(task.rep), key})();
    return run_gibbs(dgp.y, dgp.X, c);
  };
  auto record = [&](std::size_t i, const PosteriorDraws& d, bool sparse) {
    const Vector beta_hat = (sparse ? d.beta_sparse : d.beta).colwise().mean().transpose();
    out[i].sq_error = (beta_hat - dgp.beta).squaredNorm();
    out[i].ds_tau = savage_dickey(prior_tau, d.theta.col(2)).ratio;
    out[i].ds_alpha = savage_dickey(prior_alpha, d.theta.col(3)).ratio;
  };

  const bool want_hs = std::any_of(grid.priors.begin(), grid.priors.end(),
                                   [](PriorKind k) { return k != PriorKind::Ssvs; });
  if (want_hs) {
    try {
      const auto d = fit(PriorKind::HorseshoeSavs, 1);
      for (std::size_t i = 0; i < grid.priors.size(); ++i) {
        if (grid.priors[i] != PriorKind::Ssvs) record(i, d, grid.priors[i] == PriorKind::HorseshoeSavs);
      }
    } catch (const std::exception& e) {
      fail_all(e.what(), true);
    }
  }
  for (std::size_t i = 0; i < grid.priors.size(); ++i) {
    if (grid.priors[i] != PriorKind::Ssvs) continue;
    try {
      record(i, fit(PriorKind::Ssvs, 2), false);
    } catch (const std::exception& e) {
      out[i].status = e.what();
    }
  }
  return out;
}

}  // namespace

std::vector<CellSummary> summarise(const std::vector<ReplicationRecord>& records) {
  std::vector<CellSummary> cells;
  for (const auto& r : records) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
      return c.prior == r.prior && c.density == r.density && same_regime(c.regime, r.regime);
    });
    if (it == cells.end()) {
      cells.push_back({r.prior, r.regime, r.density, 0.0, 0.0, 0.0, 0});
      it = cells.end() - 1;
    }
    if (r.status != "ok") continue;
    it->root_mean_bias += r.sq_error;
    it->ds_tau += r.ds_tau;
    it->ds_alpha += r.ds_alpha;
    ++it->n_ok;
  }
  for (auto& c : cells) {
    if (c.n_ok == 0) {
      c.root_mean_bias = c.ds_tau = c.ds_alpha = kNaN;
      continue;
    }
    const double n = c.n_ok;
    c.root_mean_bias = std::sqrt(c.root_mean_bias / n);
    c.ds_tau /= n;
    c.ds_alpha /= n;
  }
  return cells;
}

const CellSummary& SimResult::cell(const std::string& prior, const Regime& regime, Density density) const {
  for (const auto& c : cells) {
    if (c.prior == prior && c.density == density && same_regime(c.regime, regime)) return c;
  }
  throw DimensionError("no simulation cell for " + prior + " " + to_string(density) + " " + regime.label());
}

std::vector<const ReplicationRecord*> SimResult::replications(const std::string& prior, const Regime& regime,
                                                              Density density) const {
  std::vector<const ReplicationRecord*> out;
  for (const auto& r : records) {
    if (r.prior == prior && r.density == density && same_regime(r.regime, regime)) out.push_back(&r);
  }
  return out;
}

SimResult run_study(const StudyGrid& grid, std::uint64_t seed) {
  grid.validate();
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < grid.densities.size(); ++d) {
    for (std::size_t g = 0; g < grid.regimes.size(); ++g) {
      for (int r = 0; r < grid.n_reps; ++r) tasks.push_back({d, g, r});
    }
  }
  std::vector<std::vector<ReplicationRecord>> slots(tasks.size());
  int workers = grid.n_threads;
  if (workers <= 0) {
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::max(1, hw / grid.model.mcmc.n_chains);
  }
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) slots[i] = run_task(grid, tasks[i], seed);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  SimResult result;
  for (auto& s : slots) {
    for (auto& r : s) result.records.push_back(std::move(r));
  }
  result.cells = summarise(result.records);
  return result;
}

namespace {

std::string column_name(Density d, const Regime& r) {
  std::ostringstream s;
  s << to_string(d) << "[" << r.sigma_tau << ";" << r.sigma_alpha << "]";
  return s.str();
}

}  // namespace

void write_study_csv(const std::filesystem::path& path, const SimResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::pair<Density, Regime>> columns;
  std::vector<std::string> priors;
  for (const auto& c : result.cells) {
    const bool seen = std::any_of(columns.begin(), columns.end(), [&](const auto& col) {
      return col.first == c.density && same_regime(col.second, c.regime);
    });
    if (!seen) columns.emplace_back(c.density, c.regime);
    if (std::find(priors.begin(), priors.end(), c.prior) == priors.end()) priors.push_back(c.prior);
  }
  out << "statistic,prior";
  for (const auto& [d, r] : columns) out << "," << column_name(d, r);
  out << "\n";
  auto block = [&](const std::string& stat, auto value, bool skip_savs) {
    for (const auto& p : priors) {
      if (skip_savs && p == to_string(PriorKind::HorseshoeSavs)) continue;
      out << stat << "," << p;
      for (const auto& [d, r] : columns) out << "," << csv::num(value(result.cell(p, r, d)));
      out << "\n";
    }
  };
  block("bias", [](const CellSummary& c) { return c.root_mean_bias; }, false);
  // horseshoe-savs shares the horseshoe state posterior
  block("ds_tau", [](const CellSummary& c) { return c.ds_tau; }, true);
  block("ds_alpha", [](const CellSummary& c) { return c.ds_alpha; }, true);
}

void write_replications_csv(const std::filesystem::path& path, const SimResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "density,sigma_tau,sigma_alpha,rep,prior,sq_error,ds_tau,ds_alpha,status\n";
  for (const auto& r : result.records) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << to_string(r.density) << "," << csv::num(r.regime.sigma_tau) << "," << csv::num(r.regime.sigma_alpha)
        << "," << r.rep << "," << r.prior << "," << csv::num(r.sq_error) << "," << csv::num(r.ds_tau) << ","
        << csv::num(r.ds_alpha) << "," << status << "\n";
  }
}

// --- synthetic nowcasting data ---------------------------------------------

NowcastData synthetic_nowcast_data(const VintageCalendar& calendar, const NowcastDgpSpec& spec, Rng& rng) {
  if (spec.quarters < 12) throw ConfigError("synthetic data: need at least 12 quarters");
  if (spec.n_google < 1) throw ConfigError("synthetic data: n_google must be at least 1");
  calendar.validate();
  std::vector<std::string> names;
  for (const auto& s : calendar.series) {
    if (!s.name.empty() && s.name.back() == '*') {
      const std::string stem = s.name.substr(0, s.name.size() - 1);
      for (int g = 1; g <= spec.n_google; ++g) names.push_back(stem + std::to_string(g));
    } else {
      names.push_back(s.name);
    }
  }
  const Index Q = spec.quarters + 1;
  const Index months = 3 * Q + 1;  // one leading month feeds the differencing transforms
  const double innov = std::sqrt(1.0 - 0.25);

  NowcastData out;
  out.monthly.origin_month = spec.start_month - 1;
  std::vector<MonthlySeries> signals;
  for (const auto& name : names) {
    Vector x(months);
    x(0) = draw_normal(rng);
    for (Index t = 1; t < months; ++t) x(t) = 0.5 * x(t - 1) + innov * draw_normal(rng);
    MonthlySeries raw;
    raw.name = name;
    raw.first_month = 0;
    const Transform tr = calendar.spec_for(name).transform;
    if (tr == Transform::MonthlyChange || tr == Transform::GrowthRate) {
      raw.values.resize(months);
      raw.values(0) = 100.0;
      for (Index t = 1; t < months; ++t) {
        raw.values(t) = tr == Transform::MonthlyChange ? raw.values(t - 1) + x(t)
                                                       : raw.values(t - 1) * (1.0 + x(t) / 100.0);
      }
    } else {
      raw.values = x;
    }
    out.monthly.series.push_back(raw);
    MonthlySeries sig;
    sig.name = name;
    sig.values = x.tail(months - 1);
    signals.push_back(sig);
  }

  const Matrix X = skip_sample(signals, Q);
  out.beta = Vector::Zero(X.cols());
  // offset 0 is the last month of the quarter
  const std::vector<std::pair<std::string, std::pair<int, double>>> loads{
      {"gt_1", {0, 0.4}}, {"fedfunds", {1, 0.3}}, {"indpro", {0, 0.5}}, {"indpro", {1, 0.3}},
      {"unrate", {2, -0.4}}, {"pce", {0, 0.4}}};
  for (const auto& [series, load] : loads) {
    const auto it = std::find(names.begin(), names.end(), series);
    if (it == names.end()) continue;
    out.beta(3 * (it - names.begin()) + load.first) = load.second;
  }
  Vector trend(Q);
  double level = 0.5;
  for (Index q = 0; q < Q; ++q) {
    level += spec.trend_sd * draw_normal(rng);
    trend(q) = level;
  }
  out.quarterly.values = trend + X * out.beta + spec.sigma_y * draw_normal_vector(Q, rng);
  out.quarterly.values(Q - 1) = kNaN;
  out.quarterly.first_month = spec.start_month;
  for (Index q = 0; q < Q; ++q) out.quarterly.labels.push_back(format_month(spec.start_month + 3 * q));
  return out;
}

}  // namespace bsts
