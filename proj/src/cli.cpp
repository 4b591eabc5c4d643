#include "bsts/cli.hpp"

#include "bsts/random.hpp"
#include "csv.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace bsts {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestSchema = "bsts.manifest/1";

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

struct Inputs {
  QuarterlyPanel panel;  // raw regressors
  QuarterlyData quarterly;
  VintageCalendar calendar;
  Index observed = 0;  // leading quarters with a published outcome
};

Inputs load_inputs(const RunConfig& c) {
  if (c.data.monthly.empty()) throw ConfigError("/data/monthly: required for this command");
  if (c.data.quarterly.empty()) throw ConfigError("/data/quarterly: required for this command");
  Inputs in;
  in.calendar = c.data.calendar.empty() ? builtin_calendar() : read_calendar(c.data.calendar);
  const auto monthly = read_monthly_csv(c.data.monthly);
  in.quarterly = read_quarterly_csv(c.data.quarterly);
  in.panel = build_panel(monthly, in.quarterly, in.calendar);
  while (in.observed < in.panel.y.size() && std::isfinite(in.panel.y(in.observed))) ++in.observed;
  if (in.observed < 12) throw DataError(c.data.quarterly.string() + ": need at least 12 observed quarters");
  return in;
}

struct Fit {
  QuarterlyPanel standardised;
  PosteriorDraws draws;
};

Fit fit_observed(const Inputs& in, const ModelConfig& model) {
  Fit f;
  f.standardised = standardise(in.panel, in.observed);
  f.draws = run_gibbs(in.panel.y.head(in.observed), f.standardised.X.topRows(in.observed), model);
  return f;
}

InclusionMode inclusion_mode(PriorKind k) {
  return k == PriorKind::Ssvs ? InclusionMode::SsvsGamma : InclusionMode::SavsNonzero;
}

void cmd_estimate(const Invocation& inv) {
  const auto& mc = inv.config.model.mcmc;
  if (mc.kept() * mc.n_chains < 1000) {
    throw ConfigError("/model/mcmc: estimate keeps " + std::to_string(mc.kept() * mc.n_chains) +
                      " draws; the Savage-Dickey report needs at least 1000");
  }
  const auto in = load_inputs(inv.config);
  const auto fit = fit_observed(in, inv.config.model);
  const auto& d = fit.draws;
  write_draw_store(d, inv.out_dir / "draws");

  const auto inc = inclusion_probabilities(d, inclusion_mode(d.prior_kind));
  std::vector<Index> order(static_cast<std::size_t>(d.K));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return inc.probability(a) > inc.probability(b); });
  auto out = open_out(inv.out_dir / "inclusion.csv");
  out << "rank,column,series,offset,probability,sign_mean\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Index j = order[r];
    const auto& col = in.panel.columns[static_cast<std::size_t>(j)];
    out << r + 1 << "," << j << "," << col.series << "," << col.offset << "," << csv::num(inc.probability(j)) << ","
        << csv::num(inc.sign_mean(j)) << "\n";
  }

  const Vector sizes = model_size_distribution(d, inclusion_mode(d.prior_kind));
  auto ms = open_out(inv.out_dir / "model_size.csv");
  ms << "size,probability\n";
  for (Index k = 0; k < sizes.size(); ++k) ms << k << "," << csv::num(sizes(k)) << "\n";

  auto sd = open_out(inv.out_dir / "savage_dickey.csv");
  sd << "parameter,ratio,prior_density,posterior_density,bandwidth\n";
  const auto& prior = inv.config.model.state_prior.theta_var;
  const std::pair<const char*, int> params[] = {{"sigma_tau", 2}, {"sigma_alpha", 3}};
  for (const auto& [name, col] : params) {
    const auto r = savage_dickey(prior(col), d.theta.col(col));
    sd << name << "," << csv::num(r.ratio) << "," << csv::num(r.numerator) << "," << csv::num(r.denominator) << ","
       << csv::num(r.bandwidth) << "\n";
  }
}

double quantile_sorted(const std::vector<double>& v, double p) {
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void cmd_nowcast(const Invocation& inv) {
  const auto in = load_inputs(inv.config);
  if (in.observed >= in.panel.rows()) {
    throw DataError(inv.config.data.quarterly.string() + ": no unobserved quarter to nowcast");
  }
  std::vector<int> vintages;
  if (inv.all_vintages) {
    for (int v = 0; v < in.calendar.size(); ++v) vintages.push_back(v);
  } else {
    const int v = inv.vintage.value_or(in.calendar.size() - 1);
    if (v < 0 || v >= in.calendar.size()) {
      throw ConfigError("vintage " + std::to_string(v) + " out of range; valid vintages are 0.." +
                        std::to_string(in.calendar.size() - 1));
    }
    vintages.push_back(v);
  }
  const auto fit = fit_observed(in, inv.config.model);
  const Index target = in.observed;

  auto out = open_out(inv.out_dir / "nowcast.csv");
  out << "vintage,month,timing,quarter,mean,sd,q05,q25,q50,q75,q95\n";
  auto raw = open_out(inv.out_dir / "nowcast_draws.csv");
  raw << "vintage,draw,value\n";
  const std::string quarter =
      target < static_cast<Index>(in.quarterly.labels.size()) ? in.quarterly.labels[static_cast<std::size_t>(target)] : "";
  for (int v : vintages) {
    const Vector x = mask_unpublished(fit.standardised, in.calendar, v, target).X.row(target).transpose();
    Rng rng = make_stream(inv.config.seed, {0x6e6f77ULL, static_cast<std::uint64_t>(v)});
    const auto pred = predictive_draws(fit.draws, x, rng);
    std::vector<double> sorted(pred.draws.data(), pred.draws.data() + pred.size());
    std::sort(sorted.begin(), sorted.end());
    const double mean = pred.mean();
    const double sd =
        pred.size() > 1 ? std::sqrt((pred.draws.array() - mean).square().sum() / static_cast<double>(pred.size() - 1)) : 0.0;
    const auto& e = in.calendar.entries[static_cast<std::size_t>(v)];
    out << v << "," << e.month << "," << quote(e.timing) << "," << quarter << "," << csv::num(mean) << ","
        << csv::num(sd);
    for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) out << "," << csv::num(quantile_sorted(sorted, p));
    out << "\n";
    for (Index m = 0; m < pred.size(); ++m) raw << v << "," << m << "," << csv::num(pred.draws(m)) << "\n";
  }
}

Index target_row(const std::string& date, const QuarterlyData& q, const std::string& field) {
  if (date.empty()) throw ConfigError(field + ": required for evaluate");
  Index month;
  try {
    month = parse_month(date);
  } catch (const std::exception& e) {
    throw ConfigError(field + ": " + e.what());
  }
  const Index diff = month - q.first_month;
  if (diff < 0 || diff % 3 != 0 || diff / 3 >= q.values.size()) {
    throw ConfigError(field + ": " + date + " is not the first month of a quarter in the data (" +
                      format_month(q.first_month) + " .. " + format_month(q.first_month + 3 * (q.values.size() - 1)) + ")");
  }
  return diff / 3;
}

void cmd_evaluate(const Invocation& inv) {
  const auto in = load_inputs(inv.config);
  const auto& e = inv.config.evaluate;
  EvaluationOptions opts;
  opts.priors = e.models;
  opts.include_ar2 = e.ar2;
  opts.crps_form = e.crps_form;
  opts.ar2_draws = e.ar2_draws;
  opts.first_target = target_row(e.first_target, in.quarterly, "/evaluate/first_target");
  opts.last_target = target_row(e.last_target, in.quarterly, "/evaluate/last_target");
  ModelConfig model = inv.config.model;
  model.mcmc.seed = inv.config.seed;
  const auto result = run_realtime_evaluation(in.panel, in.calendar, model, opts);
  write_scores_csv(inv.out_dir / "scores.csv", result);
  write_records_csv(inv.out_dir / "records.csv", result);
}

void cmd_simulate(const Invocation& inv) {
  const auto result = run_study(inv.config.simulate, inv.config.seed);
  write_study_csv(inv.out_dir / "study.csv", result);
  write_replications_csv(inv.out_dir / "replications.csv", result);
}

std::vector<std::pair<std::string, fs::path>> data_files(const Invocation& inv) {
  std::vector<std::pair<std::string, fs::path>> out;
  if (inv.command == Command::Simulate) return out;
  const auto& d = inv.config.data;
  if (!d.monthly.empty()) out.emplace_back("monthly", d.monthly);
  if (!d.quarterly.empty()) out.emplace_back("quarterly", d.quarterly);
  if (!d.calendar.empty()) out.emplace_back("calendar", d.calendar);
  return out;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Estimate: return "estimate";
    case Command::Nowcast: return "nowcast";
    case Command::Simulate: return "simulate";
    case Command::Evaluate: return "evaluate";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (auto c : {Command::Estimate, Command::Nowcast, Command::Simulate, Command::Evaluate}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown command '" + name + "'");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

std::string fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string manifest_json(const Invocation& inv) {
  ojson m;
  m["schema"] = kManifestSchema;
  m["version"] = kVersion;
  m["command"] = to_string(inv.command);
  m["seed"] = inv.config.seed;
  m["config_path"] = inv.config_path.string();
  m["output_dir"] = inv.out_dir.string();
  ojson opts = ojson::object();
  if (inv.vintage) opts["vintage"] = *inv.vintage;
  opts["all_vintages"] = inv.all_vintages;
  m["options"] = opts;
  ojson data = ojson::array();
  for (const auto& [role, path] : data_files(inv)) {
    data.push_back({{"role", role}, {"path", path.string()}, {"fnv1a64", fnv1a64_file(path)}});
  }
  m["data"] = data;
  m["config"] = ojson::parse(run_config_to_json(inv.config));
  return m.dump(2) + "\n";
}

Invocation invocation_from_manifest(const fs::path& manifest, const fs::path& out_dir) {
  const std::string text = jsonutil::slurp(manifest);
  const auto m = jsonutil::parse(text, manifest.string());
  const std::string src = manifest.string();
  if (jsonutil::get<std::string>(m, "schema", src) != kManifestSchema) {
    throw ConfigError(src + ": not a run manifest (schema " + kManifestSchema + ")");
  }
  Invocation inv;
  inv.command = parse_command(jsonutil::get<std::string>(m, "command", src));
  inv.config = parse_run_config(m.at("config").dump(), src + "#/config", fs::path{});
  inv.config_path = jsonutil::get_or<std::string>(m, "config_path", "", src);
  inv.out_dir = out_dir;
  const auto& opts = m.at("options");
  if (opts.contains("vintage")) inv.vintage = opts.at("vintage").get<int>();
  inv.all_vintages = jsonutil::get_or(opts, "all_vintages", false, src + "/options");
  for (const auto& d : m.at("data")) {
    const fs::path path = d.at("path").get<std::string>();
    const auto recorded = d.at("fnv1a64").get<std::string>();
    const auto now = fnv1a64_file(path);
    if (now != recorded) {
      throw DataError(path.string() + ": contents changed since the manifest was written (hash " + now +
                      ", recorded " + recorded + ")");
    }
  }
  return inv;
}

void execute(const Invocation& inv) {
  inv.config.validate();
  fs::create_directories(inv.out_dir);
  {
    auto out = open_out(inv.out_dir / "manifest.json");
    out << manifest_json(inv);
  }
  switch (inv.command) {
    case Command::Estimate: cmd_estimate(inv); break;
    case Command::Nowcast: cmd_nowcast(inv); break;
    case Command::Simulate: cmd_simulate(inv); break;
    case Command::Evaluate: cmd_evaluate(inv); break;
  }
}

void write_synthetic_dataset(const fs::path& dir, std::uint64_t seed, Index quarters) {
  fs::create_directories(dir);
  const auto cal = builtin_calendar();
  NowcastDgpSpec spec;
  spec.quarters = quarters;
  Rng rng = make_stream(seed, {0x73796eULL});
  const auto data = synthetic_nowcast_data(cal, spec, rng);
  write_monthly_csv(dir / "monthly.csv", data.monthly.series, data.monthly.origin_month);
  write_quarterly_csv(dir / "quarterly.csv", data.quarterly);
  {
    auto out = open_out(dir / "calendar.json");
    out << calendar_to_json(cal);
  }
  RunConfig c;
  c.seed = seed;
  c.model.mcmc.n_iter = 3000;
  c.model.mcmc.n_burn = 1000;
  c.model.mcmc.thin = 2;
  c.data = {"monthly.csv", "quarterly.csv", "calendar.json"};
  c.evaluate.first_target = format_month(data.quarterly.first_month + 3 * (quarters - 4));
  c.evaluate.last_target = format_month(data.quarterly.first_month + 3 * (quarters - 1));
  auto out = open_out(dir / "config.json");
  out << run_config_to_json(c);
}

}  // namespace bsts
