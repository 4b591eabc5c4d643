#include "bsts/gibbs.hpp"

#include "bsts/random.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>
#include <vector>

namespace bsts {

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Ssvs: return "ssvs";
    case PriorKind::Horseshoe: return "horseshoe";
    case PriorKind::HorseshoeSavs: return "horseshoe-savs";
  }
  return "unknown";
}

PriorKind parse_prior_kind(std::string_view name) {
  if (name == "ssvs") return PriorKind::Ssvs;
  if (name == "horseshoe") return PriorKind::Horseshoe;
  if (name == "horseshoe-savs") return PriorKind::HorseshoeSavs;
  throw ConfigError("unknown prior '" + std::string(name) +
                    "' (expected ssvs, horseshoe or horseshoe-savs)");
}

void McmcSettings::validate() const {
  if (!(n_burn >= 0 && n_iter > n_burn)) throw ConfigError("mcmc: need n_iter > n_burn >= 0");
  if (thin < 1) throw ConfigError("mcmc: thin must be >= 1");
  if (n_chains < 1) throw ConfigError("mcmc: n_chains must be >= 1");
  if (kept() < 1) throw ConfigError("mcmc: (n_iter - n_burn) / thin must keep at least one draw");
}

void ModelConfig::validate() const {
  mcmc.validate();
  state_prior.validate();
  ssvs.validate();
  if (!(horseshoe.sigma_shape > 0 && horseshoe.sigma_scale > 0)) {
    throw ConfigError("horseshoe: sigma_shape and sigma_scale must be positive");
  }
}

NcssStates PosteriorDraws::states_at(Index m) const {
  return {tau_tilde.row(m).transpose(), a_tilde.row(m).transpose()};
}

Vector PosteriorDraws::coefficients_at(Index m) const {
  if (prior_kind == PriorKind::HorseshoeSavs) return beta_sparse.row(m).transpose();
  return beta.row(m).transpose();
}

Matrix PosteriorDraws::coefficients() const {
  return prior_kind == PriorKind::HorseshoeSavs ? beta_sparse : beta;
}

namespace {

bool is_horseshoe(PriorKind k) { return k != PriorKind::Ssvs; }

PosteriorDraws allocate(const ModelConfig& config, Index M, Index T, Index K) {
  PosteriorDraws d;
  d.prior_kind = config.prior_kind;
  d.n_chains = 1;
  d.draws_per_chain = M;
  d.T = T;
  d.K = K;
  d.tau_tilde.resize(M, T);
  d.a_tilde.resize(M, T);
  d.theta.resize(M, 4);
  d.beta.resize(M, K);
  d.sigma_y2.resize(M);
  if (is_horseshoe(config.prior_kind)) {
    d.beta_sparse.resize(M, K);
    d.lambda2.resize(M, K);
    d.nu2.resize(M);
  } else {
    d.gamma.resize(M, K);
    d.delta2.resize(M, K);
    d.pi0.resize(M);
  }
  return d;
}

void check_finite(bool ok, const char* what, int iteration) {
  if (!ok) {
    throw NumericalError(std::string("non-finite ") + what + " at iteration " +
                         std::to_string(iteration));
  }
}

PosteriorDraws run_chain(const Vector& y, const Matrix& X, const ModelConfig& config, int chain,
                         const GibbsObserver& observer) {
  const Index T = y.size();
  const Index K = X.cols();
  const auto& mcmc = config.mcmc;
  Rng rng = make_stream(mcmc.seed, {static_cast<std::uint64_t>(chain)});
  PosteriorDraws out = allocate(config, mcmc.kept(), T, K);

  ThetaParams theta = ThetaParams::from_vector(config.state_prior.theta_mean);
  NcssStates states = NcssStates::zeros(T);
  Vector beta = config.fixed_beta ? *config.fixed_beta : Vector::Zero(K);
  Vector beta_sparse = beta;
  double sigma_y2 = 1.0;
  HorseshoeState hs = HorseshoeState::initial(K);
  SsvsState ssvs = SsvsState::initial(K, config.ssvs.c);
  const Matrix xtx = X.transpose() * X;
  const Vector norms2 = column_norms2(X);
  const bool horseshoe = is_horseshoe(config.prior_kind);

  auto notify = [&](int it, GibbsStep step) {
    if (observer) observer(chain, it, step);
  };

  Index kept = 0;
  for (int it = 0; it < mcmc.n_iter; ++it) {
    try {
      const Vector x_beta = K > 0 ? Vector(X * beta) : Vector(Vector::Zero(T));

      states = sample_states(y - x_beta, theta, sigma_y2, rng);
      notify(it, GibbsStep::States);

      theta = sample_theta(y, x_beta, states, sigma_y2, config.state_prior, rng);
      notify(it, GibbsStep::Theta);

      std::tie(theta, states) = permute_signs(std::move(theta), std::move(states), rng);
      notify(it, GibbsStep::SignPermutation);

      const Vector y_star = y - trend_path(theta, states);
      if (K > 0 && !config.fixed_beta) {
        if (horseshoe) {
          beta = sample_beta_horseshoe(y_star, X, hs, sigma_y2, rng);
          hs = sample_horseshoe_scales(beta, sigma_y2, std::move(hs), rng);
          beta_sparse = savs_sparsify(beta, norms2);
          notify(it, GibbsStep::Regression);
          sigma_y2 = sample_sigma2_horseshoe(y_star, X, beta, hs, config.horseshoe, rng);
        } else {
          auto step = sample_ssvs_step(y_star, X, beta, ssvs, sigma_y2, config.ssvs, rng, &xtx);
          beta = std::move(step.beta);
          ssvs = std::move(step.state);
          notify(it, GibbsStep::Regression);
          sigma_y2 = step.sigma_y2;
        }
      } else {
        if (K > 0 && horseshoe) beta_sparse = savs_sparsify(beta, norms2);
        notify(it, GibbsStep::Regression);
        const double rss = (y_star - (K > 0 ? Vector(X * beta) : Vector(Vector::Zero(T)))).squaredNorm();
        const auto& shape = horseshoe ? config.horseshoe.sigma_shape : config.ssvs.sigma_shape;
        const auto& scale = horseshoe ? config.horseshoe.sigma_scale : config.ssvs.sigma_scale;
        sigma_y2 = draw_inv_gamma(shape + 0.5 * static_cast<double>(T), scale + 0.5 * rss, rng);
      }
      notify(it, GibbsStep::ObservationVariance);
    } catch (const FactorizationError& e) {
      throw FactorizationError(std::string(e.what()) + " (chain " + std::to_string(chain) +
                                   ", iteration " + std::to_string(it) + ")",
                               e.pivot());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (chain " + std::to_string(chain) +
                           ", iteration " + std::to_string(it) + ")");
    }

    check_finite(states.tau_tilde.allFinite() && states.a_tilde.allFinite(), "states", it);
    check_finite(theta.as_vector().allFinite(), "theta", it);
    check_finite(beta.allFinite(), "beta", it);
    check_finite(std::isfinite(sigma_y2) && sigma_y2 > 0.0, "sigma_y2", it);

    if (it >= mcmc.n_burn && (it - mcmc.n_burn + 1) % mcmc.thin == 0 && kept < out.size()) {
      out.tau_tilde.row(kept) = states.tau_tilde.transpose();
      out.a_tilde.row(kept) = states.a_tilde.transpose();
      out.theta.row(kept) = theta.as_vector().transpose();
      out.beta.row(kept) = beta.transpose();
      out.sigma_y2(kept) = sigma_y2;
      if (horseshoe) {
        out.beta_sparse.row(kept) = beta_sparse.transpose();
        out.lambda2.row(kept) = hs.lambda2.transpose();
        out.nu2(kept) = hs.nu2;
      } else {
        out.gamma.row(kept) = ssvs.gamma.cast<double>().transpose();
        out.delta2.row(kept) = ssvs.delta2.transpose();
        out.pi0(kept) = ssvs.pi0;
      }
      ++kept;
    }
  }
  out.clamp_events = hs.clamp_events;
  return out;
}

template <typename M>
void stack_rows(M& dst, const M& src, Index row) {
  if (src.size() == 0 && dst.size() == 0) return;
  dst.middleRows(row, src.rows()) = src;
}

PosteriorDraws merge_chains(const std::vector<PosteriorDraws>& chains) {
  const auto& first = chains.front();
  const Index per = first.draws_per_chain;
  const Index M = per * static_cast<Index>(chains.size());
  PosteriorDraws out = first;
  out.n_chains = static_cast<Index>(chains.size());
  auto grow = [M](auto& m) {
    if (m.size() > 0 || m.cols() > 0) m.conservativeResize(M, m.cols());
  };
  grow(out.tau_tilde);
  grow(out.a_tilde);
  grow(out.theta);
  grow(out.beta);
  grow(out.beta_sparse);
  grow(out.lambda2);
  grow(out.gamma);
  grow(out.delta2);
  auto grow_vec = [M](Vector& v) {
    if (v.size() > 0) v.conservativeResize(M);
  };
  grow_vec(out.sigma_y2);
  grow_vec(out.nu2);
  grow_vec(out.pi0);
  out.clamp_events = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    const Index row = static_cast<Index>(c) * per;
    stack_rows(out.tau_tilde, ch.tau_tilde, row);
    stack_rows(out.a_tilde, ch.a_tilde, row);
    stack_rows(out.theta, ch.theta, row);
    stack_rows(out.beta, ch.beta, row);
    if (ch.beta_sparse.rows() > 0) stack_rows(out.beta_sparse, ch.beta_sparse, row);
    if (ch.lambda2.rows() > 0) stack_rows(out.lambda2, ch.lambda2, row);
    if (ch.gamma.rows() > 0) stack_rows(out.gamma, ch.gamma, row);
    if (ch.delta2.rows() > 0) stack_rows(out.delta2, ch.delta2, row);
    out.sigma_y2.segment(row, per) = ch.sigma_y2;
    if (ch.nu2.size() > 0) out.nu2.segment(row, per) = ch.nu2;
    if (ch.pi0.size() > 0) out.pi0.segment(row, per) = ch.pi0;
    out.clamp_events += ch.clamp_events;
  }
  return out;
}

}  // namespace

PosteriorDraws run_gibbs(const Vector& y, const Matrix& X, const ModelConfig& config,
                         const GibbsObserver& observer) {
  config.validate();
  if (X.rows() != y.size()) throw DimensionError("run_gibbs: X rows must equal length of y");
  if (y.size() < 3) throw DimensionError("run_gibbs: need at least 3 observations");
  if (!y.allFinite()) throw DataError("run_gibbs: y contains missing or non-finite values");
  if (!X.allFinite()) throw DataError("run_gibbs: X contains missing or non-finite values");
  if (config.fixed_beta && config.fixed_beta->size() != X.cols()) {
    throw ConfigError("run_gibbs: fixed_beta length must equal the number of regressors");
  }

  const int n = config.mcmc.n_chains;
  std::vector<PosteriorDraws> chains(static_cast<std::size_t>(n));
  if (n == 1) {
    chains[0] = run_chain(y, X, config, 0, observer);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      workers.emplace_back([&, c] {
        try {
          chains[static_cast<std::size_t>(c)] = run_chain(y, X, config, c, observer);
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return merge_chains(chains);
}

Vector insample_onestep_errors(const Vector& y, const Matrix& X, const ModelConfig& config,
                               int refit_stride, Index min_train) {
  if (refit_stride < 1) throw ConfigError("insample_onestep_errors: refit_stride must be >= 1");
  const Index T = y.size();
  if (min_train < 3 || min_train >= T) {
    throw DimensionError("insample_onestep_errors: need 3 <= min_train < T");
  }
  Vector cumulative(T - min_train);
  double running = 0.0;
  PosteriorDraws fit;
  Index fit_rows = 0;
  for (Index t = min_train; t < T; ++t) {
    if ((t - min_train) % refit_stride == 0) {
      fit = run_gibbs(y.head(t), X.topRows(t), config);
      fit_rows = t;
    }
    // Target index t (0-based) is time t+1; the fit ends at time fit_rows.
    const double horizon = static_cast<double>(t + 1 - fit_rows);
    const double time = static_cast<double>(t + 1);
    double mean = 0.0;
    for (Index m = 0; m < fit.size(); ++m) {
      const ThetaParams th = fit.theta_at(m);
      const double a_last = fit.a_tilde(m, fit_rows - 1);
      const double slope = a_last - (fit_rows >= 2 ? fit.a_tilde(m, fit_rows - 2) : 0.0);
      double trend = th.tau0 + time * th.alpha0 + th.sigma_tau * fit.tau_tilde(m, fit_rows - 1) +
                     th.sigma_alpha * (a_last + horizon * slope);
      if (X.cols() > 0) trend += X.row(t).dot(fit.coefficients_at(m));
      mean += trend;
    }
    mean /= static_cast<double>(fit.size());
    running += std::abs(y(t) - mean);
    cumulative(t - min_train) = running;
  }
  return cumulative;
}

InclusionSummary inclusion_probabilities(const PosteriorDraws& draws, InclusionMode mode) {
  if (draws.size() == 0) throw DimensionError("inclusion probabilities: no stored draws");
  if (mode == InclusionMode::SsvsGamma) {
    if (draws.gamma.rows() != draws.size()) {
      throw DimensionError("inclusion probabilities: ssvs-gamma mode needs SSVS draws");
    }
    return inclusion_frequencies(draws.gamma, draws.beta);
  }
  if (draws.beta_sparse.rows() != draws.size()) {
    throw DimensionError("inclusion probabilities: savs-nonzero mode needs horseshoe draws");
  }
  return inclusion_frequencies(draws.beta_sparse, draws.beta_sparse);
}

Vector model_size_distribution(const PosteriorDraws& draws, InclusionMode mode) {
  return model_size_distribution(mode == InclusionMode::SsvsGamma ? draws.gamma
                                                                   : draws.beta_sparse);
}

// ---------------------------------------------------------------------------
// Draw store

namespace {

struct Column {
  std::string name;
  Index rows;
  Index cols;
};

std::vector<std::pair<Column, const double*>> columns_of(const PosteriorDraws& d) {
  std::vector<std::pair<Column, const double*>> cols;
  auto add = [&](const char* name, const auto& m, Index c) {
    if (m.size() > 0) cols.push_back({Column{name, static_cast<Index>(m.rows()), c}, m.data()});
  };
  add("tau_tilde", d.tau_tilde, d.tau_tilde.cols());
  add("a_tilde", d.a_tilde, d.a_tilde.cols());
  add("theta", d.theta, 4);
  add("beta", d.beta, d.beta.cols());
  add("beta_sparse", d.beta_sparse, d.beta_sparse.cols());
  add("sigma_y2", d.sigma_y2, 1);
  add("lambda2", d.lambda2, d.lambda2.cols());
  add("nu2", d.nu2, 1);
  add("gamma", d.gamma, d.gamma.cols());
  add("delta2", d.delta2, d.delta2.cols());
  add("pi0", d.pi0, 1);
  return cols;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

}  // namespace

void write_draw_store(const PosteriorDraws& draws, const std::filesystem::path& stem) {
  static_assert(std::endian::native == std::endian::little, "draw store assumes little-endian");
  nlohmann::ordered_json meta;
  meta["schema"] = "bsts.draws/1";
  meta["prior"] = to_string(draws.prior_kind);
  meta["n_chains"] = draws.n_chains;
  meta["draws_per_chain"] = draws.draws_per_chain;
  meta["n_draws"] = draws.size();
  meta["T"] = draws.T;
  meta["K"] = draws.K;
  meta["clamp_events"] = draws.clamp_events;
  meta["dtype"] = "float64-le";
  meta["layout"] = "column-major per field: element (draw m, column j) at offset + 8*(j*rows + m)";
  meta["fields"] = nlohmann::ordered_json::array();

  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw DataError("cannot write " + with_suffix(stem, ".bin").string());
  std::uint64_t offset = 0;
  for (const auto& [col, data] : columns_of(draws)) {
    const auto n = static_cast<std::uint64_t>(col.rows * col.cols);
    bin.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
    meta["fields"].push_back(
        {{"name", col.name}, {"rows", col.rows}, {"cols", col.cols}, {"offset", offset}});
    offset += n * 8;
  }
  std::ofstream js(with_suffix(stem, ".json"));
  if (!js) throw DataError("cannot write " + with_suffix(stem, ".json").string());
  js << meta.dump(2) << "\n";
}

PosteriorDraws read_draw_store(const std::filesystem::path& stem) {
  std::ifstream js(with_suffix(stem, ".json"));
  if (!js) throw DataError("cannot read " + with_suffix(stem, ".json").string());
  const auto meta = nlohmann::json::parse(js);
  if (meta.value("schema", "") != "bsts.draws/1") throw DataError("draw store: unknown schema");
  PosteriorDraws d;
  d.prior_kind = parse_prior_kind(meta.at("prior").get<std::string>());
  d.n_chains = meta.at("n_chains").get<Index>();
  d.draws_per_chain = meta.at("draws_per_chain").get<Index>();
  d.T = meta.at("T").get<Index>();
  d.K = meta.at("K").get<Index>();
  d.clamp_events = meta.value("clamp_events", Index{0});

  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw DataError("cannot read " + with_suffix(stem, ".bin").string());
  for (const auto& f : meta.at("fields")) {
    const auto name = f.at("name").get<std::string>();
    const auto rows = f.at("rows").get<Index>();
    const auto cols = f.at("cols").get<Index>();
    Matrix m(rows, cols);
    bin.seekg(static_cast<std::streamoff>(f.at("offset").get<std::uint64_t>()));
    bin.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(rows * cols * 8));
    if (!bin) throw DataError("draw store: truncated field " + name);
    if (name == "tau_tilde") d.tau_tilde = m;
    else if (name == "a_tilde") d.a_tilde = m;
    else if (name == "theta") d.theta = m;
    else if (name == "beta") d.beta = m;
    else if (name == "beta_sparse") d.beta_sparse = m;
    else if (name == "sigma_y2") d.sigma_y2 = m.col(0);
    else if (name == "lambda2") d.lambda2 = m;
    else if (name == "nu2") d.nu2 = m.col(0);
    else if (name == "gamma") d.gamma = m;
    else if (name == "delta2") d.delta2 = m;
    else if (name == "pi0") d.pi0 = m.col(0);
  }
  return d;
}

}  // namespace bsts
