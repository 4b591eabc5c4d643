#include "bsts/config.hpp"

#include "json_util.hpp"

#include <algorithm>

namespace bsts {

using jsonutil::check_keys;
using jsonutil::get;
using jsonutil::get_or;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "bsts.config/1";

Eigen::Vector4d vec4(const json& j, const std::string& key, const Eigen::Vector4d& fallback,
                     const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto v = get<std::vector<double>>(j, key, path);
  if (v.size() != 4) throw ConfigError(path + "/" + key + ": expected 4 numbers, got " + std::to_string(v.size()));
  return {v[0], v[1], v[2], v[3]};
}

McmcSettings parse_mcmc(const json& j, McmcSettings m, const std::string& path) {
  check_keys(j, {"n_iter", "n_burn", "thin", "n_chains"}, path);
  m.n_iter = get_or(j, "n_iter", m.n_iter, path);
  m.n_burn = get_or(j, "n_burn", m.n_burn, path);
  m.thin = get_or(j, "thin", m.thin, path);
  m.n_chains = get_or(j, "n_chains", m.n_chains, path);
  return m;
}

PriorKind prior_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a prior name");
  try {
    return parse_prior_kind(j.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ModelConfig parse_model(const json& j, const std::string& path) {
  check_keys(j, {"prior", "mcmc", "state_prior", "horseshoe", "ssvs"}, path);
  ModelConfig m;
  if (j.contains("prior")) m.prior_kind = prior_at(j.at("prior"), path + "/prior");
  if (j.contains("mcmc")) m.mcmc = parse_mcmc(j.at("mcmc"), m.mcmc, path + "/mcmc");
  if (j.contains("state_prior")) {
    const auto& s = j.at("state_prior");
    const std::string p = path + "/state_prior";
    check_keys(s, {"theta_mean", "theta_var"}, p);
    m.state_prior.theta_mean = vec4(s, "theta_mean", m.state_prior.theta_mean, p);
    m.state_prior.theta_var = vec4(s, "theta_var", m.state_prior.theta_var, p);
  }
  if (j.contains("horseshoe")) {
    const auto& h = j.at("horseshoe");
    const std::string p = path + "/horseshoe";
    check_keys(h, {"sigma_shape", "sigma_scale"}, p);
    m.horseshoe.sigma_shape = get_or(h, "sigma_shape", m.horseshoe.sigma_shape, p);
    m.horseshoe.sigma_scale = get_or(h, "sigma_scale", m.horseshoe.sigma_scale, p);
  }
  if (j.contains("ssvs")) {
    const auto& s = j.at("ssvs");
    const std::string p = path + "/ssvs";
    check_keys(s, {"a1", "a2", "b1", "b2", "c", "sigma_shape", "sigma_scale"}, p);
    auto& h = m.ssvs;
    h.a1 = get_or(s, "a1", h.a1, p);
    h.a2 = get_or(s, "a2", h.a2, p);
    h.b1 = get_or(s, "b1", h.b1, p);
    h.b2 = get_or(s, "b2", h.b2, p);
    h.c = get_or(s, "c", h.c, p);
    h.sigma_shape = get_or(s, "sigma_shape", h.sigma_shape, p);
    h.sigma_scale = get_or(s, "sigma_scale", h.sigma_scale, p);
  }
  return m;
}

std::vector<PriorKind> prior_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of prior names");
  std::vector<PriorKind> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(prior_at(j[i], path + "/" + std::to_string(i)));
  return out;
}

CrpsForm parse_crps(const std::string& s, const std::string& path) {
  if (s == "energy") return CrpsForm::Energy;
  if (s == "printed") return CrpsForm::HalvedFirstTerm;
  throw ConfigError(path + ": unknown CRPS form '" + s + "' (expected energy or printed)");
}

StudyGrid parse_simulate(const json& j, const ModelConfig& model, const std::string& path) {
  check_keys(j, {"preset", "T", "K", "n_reps", "p_d", "sigma_y", "regimes", "densities", "priors", "mcmc",
                 "threads"},
             path);
  const auto preset = get_or<std::string>(j, "preset", "desk", path);
  StudyGrid g;
  if (preset == "desk") {
    g = StudyGrid::desk();
  } else if (preset == "full") {
    g = StudyGrid::full();
  } else {
    throw ConfigError(path + "/preset: unknown preset '" + preset + "' (expected desk or full)");
  }
  const McmcSettings preset_mcmc = g.model.mcmc;
  g.model = model;
  g.model.mcmc = preset_mcmc;
  g.model.mcmc.seed = model.mcmc.seed;
  if (j.contains("mcmc")) g.model.mcmc = parse_mcmc(j.at("mcmc"), g.model.mcmc, path + "/mcmc");
  g.T = get_or(j, "T", g.T, path);
  g.K = get_or(j, "K", g.K, path);
  g.n_reps = get_or(j, "n_reps", g.n_reps, path);
  g.p_d = get_or(j, "p_d", g.p_d, path);
  g.sigma_y = get_or(j, "sigma_y", g.sigma_y, path);
  g.n_threads = get_or(j, "threads", g.n_threads, path);
  if (j.contains("regimes")) {
    const auto r = get<std::vector<std::vector<double>>>(j, "regimes", path);
    g.regimes.clear();
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].size() != 2) throw ConfigError(path + "/regimes/" + std::to_string(i) + ": expected [sigma_tau, sigma_alpha]");
      g.regimes.push_back({r[i][0], r[i][1]});
    }
  }
  if (j.contains("densities")) {
    g.densities.clear();
    const auto d = get<std::vector<std::string>>(j, "densities", path);
    for (std::size_t i = 0; i < d.size(); ++i) {
      try {
        g.densities.push_back(parse_density(d[i]));
      } catch (const ConfigError& e) {
        throw ConfigError(path + "/densities/" + std::to_string(i) + ": " + e.what());
      }
    }
  }
  if (j.contains("priors")) g.priors = prior_list(j.at("priors"), path + "/priors");
  g.name = preset;
  return g;
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

RunConfig parse_root(const json& root, const std::filesystem::path& base_dir) {
  check_keys(root, {"schema", "seed", "model", "data", "evaluate", "simulate"}, "/");
  const auto schema = get<std::string>(root, "schema", "");
  if (schema != kSchema) throw ConfigError("/schema: expected \"" + std::string(kSchema) + "\", got \"" + schema + "\"");
  RunConfig c;
  c.seed = get_or<std::uint64_t>(root, "seed", c.seed, "");
  if (root.contains("model")) c.model = parse_model(root.at("model"), "/model");
  c.model.mcmc.seed = c.seed;
  if (root.contains("data")) {
    const auto& d = root.at("data");
    check_keys(d, {"monthly", "quarterly", "calendar"}, "/data");
    c.data.monthly = resolve(get_or<std::string>(d, "monthly", "", "/data"), base_dir);
    c.data.quarterly = resolve(get_or<std::string>(d, "quarterly", "", "/data"), base_dir);
    c.data.calendar = resolve(get_or<std::string>(d, "calendar", "", "/data"), base_dir);
  }
  if (root.contains("evaluate")) {
    const auto& e = root.at("evaluate");
    const std::string p = "/evaluate";
    check_keys(e, {"first_target", "last_target", "crps", "models", "ar2", "ar2_draws"}, p);
    c.evaluate.first_target = get_or<std::string>(e, "first_target", "", p);
    c.evaluate.last_target = get_or<std::string>(e, "last_target", "", p);
    c.evaluate.crps_form = parse_crps(get_or<std::string>(e, "crps", "energy", p), p + "/crps");
    if (e.contains("models")) c.evaluate.models = prior_list(e.at("models"), p + "/models");
    c.evaluate.ar2 = get_or(e, "ar2", c.evaluate.ar2, p);
    c.evaluate.ar2_draws = get_or<Index>(e, "ar2_draws", c.evaluate.ar2_draws, p);
  }
  c.simulate = parse_simulate(root.contains("simulate") ? root.at("simulate") : json::object(), c.model, "/simulate");
  return c;
}

// Line of the first occurrence of the last key in a JSON pointer, 0 if not found.
int line_of_pointer(const std::string& text, const std::string& message) {
  const auto colon = message.find(": ");
  if (message.empty() || message[0] != '/' || colon == std::string::npos) return 0;
  if (colon == 1 && message.find("unknown field '") == std::string::npos) return 0;
  std::string pointer = message.substr(0, colon);
  auto slash = pointer.find_last_of('/');
  std::string key = pointer.substr(slash + 1);
  while (!key.empty() && std::all_of(key.begin(), key.end(), ::isdigit) && slash != 0) {
    pointer = pointer.substr(0, slash);
    slash = pointer.find_last_of('/');
    key = pointer.substr(slash + 1);
  }
  // "unknown field 'x'" names the offending key itself
  const auto q = message.find("unknown field '");
  if (q != std::string::npos) {
    const auto start = q + 15;
    key = message.substr(start, message.find('\'', start) - start);
  }
  if (key.empty()) return 0;
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (evaluate.ar2_draws < 1) throw ConfigError("/evaluate/ar2_draws: must be positive");
  if (evaluate.models.empty() && !evaluate.ar2) throw ConfigError("/evaluate: no models to evaluate");
  simulate.validate();
}

RunConfig parse_run_config(const std::string& json_text, const std::string& source,
                           const std::filesystem::path& base_dir) {
  const json root = jsonutil::parse(json_text, source);
  try {
    RunConfig c = parse_root(root, base_dir);
    c.validate();
    return c;
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const int line = line_of_pointer(json_text, msg);
    throw ConfigError(source + (line > 0 ? ":" + std::to_string(line) : "") + ": " + msg);
  }
}

RunConfig read_run_config(const std::filesystem::path& path) {
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_run_config(jsonutil::slurp(path), path.string(), base);
}

std::string run_config_to_json(const RunConfig& c) {
  auto v4 = [](const Eigen::Vector4d& v) { return std::vector<double>{v(0), v(1), v(2), v(3)}; };
  auto mcmc = [](const McmcSettings& m) {
    ojson j;
    j["n_iter"] = m.n_iter;
    j["n_burn"] = m.n_burn;
    j["thin"] = m.thin;
    j["n_chains"] = m.n_chains;
    return j;
  };
  auto priors = [](const std::vector<PriorKind>& ps) {
    ojson a = ojson::array();
    for (auto p : ps) a.push_back(to_string(p));
    return a;
  };
  ojson j;
  j["schema"] = kSchema;
  j["seed"] = c.seed;
  ojson m;
  m["prior"] = to_string(c.model.prior_kind);
  m["mcmc"] = mcmc(c.model.mcmc);
  m["state_prior"] = {{"theta_mean", v4(c.model.state_prior.theta_mean)},
                      {"theta_var", v4(c.model.state_prior.theta_var)}};
  m["horseshoe"] = {{"sigma_shape", c.model.horseshoe.sigma_shape}, {"sigma_scale", c.model.horseshoe.sigma_scale}};
  const auto& s = c.model.ssvs;
  m["ssvs"] = {{"a1", s.a1}, {"a2", s.a2}, {"b1", s.b1}, {"b2", s.b2},
               {"c", s.c},   {"sigma_shape", s.sigma_shape}, {"sigma_scale", s.sigma_scale}};
  j["model"] = m;
  j["data"] = {{"monthly", c.data.monthly.string()},
               {"quarterly", c.data.quarterly.string()},
               {"calendar", c.data.calendar.string()}};
  ojson e;
  e["first_target"] = c.evaluate.first_target;
  e["last_target"] = c.evaluate.last_target;
  e["crps"] = c.evaluate.crps_form == CrpsForm::Energy ? "energy" : "printed";
  e["models"] = priors(c.evaluate.models);
  e["ar2"] = c.evaluate.ar2;
  e["ar2_draws"] = c.evaluate.ar2_draws;
  j["evaluate"] = e;
  const auto& g = c.simulate;
  ojson sim;
  sim["preset"] = g.name;
  sim["T"] = g.T;
  sim["K"] = g.K;
  sim["n_reps"] = g.n_reps;
  sim["p_d"] = g.p_d;
  sim["sigma_y"] = g.sigma_y;
  ojson regimes = ojson::array();
  for (const auto& r : g.regimes) regimes.push_back({r.sigma_tau, r.sigma_alpha});
  sim["regimes"] = regimes;
  ojson dens = ojson::array();
  for (auto d : g.densities) dens.push_back(to_string(d));
  sim["densities"] = dens;
  sim["priors"] = priors(g.priors);
  sim["mcmc"] = mcmc(g.model.mcmc);
  sim["threads"] = g.n_threads;
  j["simulate"] = sim;
  return j.dump(2) + "\n";
}

}  // namespace bsts
