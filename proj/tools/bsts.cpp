// bsts: estimation, nowcasting, real-time evaluation and the simulation study.

#include "bsts/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace bsts;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string monthly, quarterly, calendar;
  std::string prior;
  std::optional<int> iter, burn, thin, chains;
  std::optional<std::uint64_t> seed;
  std::optional<int> vintage;
  bool all = false;
  std::string first, last, crps;
  std::string preset;
  std::optional<int> reps, threads;
};

void add_common(CLI::App* sub, Flags& f, bool config_required) {
  auto* c = sub->add_option("-c,--config", f.config, "run configuration (bsts.config/1 JSON)");
  if (config_required) c->required();
  sub->add_option("-o,--out", f.out, "output directory")->required();
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--prior", f.prior, "ssvs | horseshoe | horseshoe-savs");
  sub->add_option("--iter", f.iter, "MCMC iterations per chain");
  sub->add_option("--burn", f.burn, "burn-in iterations");
  sub->add_option("--thin", f.thin, "thinning interval");
  sub->add_option("--chains", f.chains, "number of chains");
}

void add_data(CLI::App* sub, Flags& f) {
  sub->add_option("--monthly", f.monthly, "monthly CSV (date,series,value)");
  sub->add_option("--quarterly", f.quarterly, "quarterly CSV (date,value)");
  sub->add_option("--calendar", f.calendar, "release calendar JSON");
}

Invocation build(Command cmd, const Flags& f) {
  Invocation inv;
  inv.command = cmd;
  if (!f.config.empty()) {
    inv.config = read_run_config(f.config);
    inv.config_path = fs::absolute(f.config);
  }
  auto& c = inv.config;
  auto& m = c.model;
  if (f.seed) c.seed = *f.seed;
  m.mcmc.seed = c.seed;
  if (!f.prior.empty()) {
    try {
      m.prior_kind = parse_prior_kind(f.prior);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("--prior: ") + e.what());
    }
  }
  if (f.iter) m.mcmc.n_iter = *f.iter;
  if (f.burn) m.mcmc.n_burn = *f.burn;
  if (f.thin) m.mcmc.thin = *f.thin;
  if (f.chains) m.mcmc.n_chains = *f.chains;
  if (!f.monthly.empty()) c.data.monthly = fs::absolute(f.monthly);
  if (!f.quarterly.empty()) c.data.quarterly = fs::absolute(f.quarterly);
  if (!f.calendar.empty()) c.data.calendar = fs::absolute(f.calendar);
  if (!f.first.empty()) c.evaluate.first_target = f.first;
  if (!f.last.empty()) c.evaluate.last_target = f.last;
  if (f.crps == "energy") c.evaluate.crps_form = CrpsForm::Energy;
  else if (f.crps == "printed") c.evaluate.crps_form = CrpsForm::HalvedFirstTerm;
  else if (!f.crps.empty()) throw ConfigError("--crps: expected energy or printed");

  auto& g = c.simulate;
  if (!f.preset.empty()) {
    if (f.preset != "desk" && f.preset != "full") throw ConfigError("--preset: expected desk or full");
    g = f.preset == "desk" ? StudyGrid::desk() : StudyGrid::full();
    const auto mc = g.model.mcmc;
    g.model = m;
    g.model.mcmc = mc;
  }
  g.model.mcmc.seed = c.seed;
  if (f.reps) g.n_reps = *f.reps;
  if (f.threads) g.n_threads = *f.threads;
  inv.out_dir = fs::absolute(f.out);
  inv.vintage = f.vintage;
  inv.all_vintages = f.all;
  return inv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-centred Bayesian structural time series with shrinkage priors"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Flags f;

  auto* est = app.add_subcommand("estimate", "fit the model to all observed quarters");
  add_common(est, f, true);
  add_data(est, f);

  auto* now = app.add_subcommand("nowcast", "predictive summary for the first unobserved quarter");
  add_common(now, f, true);
  add_data(now, f);
  auto* vint = now->add_option("--vintage", f.vintage, "vintage index (default: last)");
  now->add_flag("--all", f.all, "every vintage of the calendar")->excludes(vint);

  auto* ev = app.add_subcommand("evaluate", "rolling real-time scores per vintage");
  add_common(ev, f, true);
  add_data(ev, f);
  ev->add_option("--first", f.first, "first target quarter, YYYY-MM");
  ev->add_option("--last", f.last, "last target quarter, YYYY-MM");
  ev->add_option("--crps", f.crps, "energy | printed");

  auto* sim = app.add_subcommand("simulate", "coefficient bias and Savage-Dickey simulation table");
  add_common(sim, f, false);
  sim->add_option("--preset", f.preset, "desk | full");
  sim->add_option("--reps", f.reps, "replications per cell");
  sim->add_option("--threads", f.threads, "worker threads (0: all cores)");

  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "replay a run from its manifest.json");
  rerun->add_option("manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  rerun->add_option("-o,--out", f.out, "output directory")->required();

  std::uint64_t synth_seed = 1;
  Index synth_quarters = 48;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset and a matching config");
  synth->add_option("-o,--out", f.out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "seed");
  synth->add_option("--quarters", synth_quarters, "observed quarters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rerun->parsed()) {
      execute(invocation_from_manifest(manifest, fs::absolute(f.out)));
    } else if (synth->parsed()) {
      write_synthetic_dataset(f.out, synth_seed, synth_quarters);
    } else {
      const Command cmd = est->parsed() ? Command::Estimate
                          : now->parsed() ? Command::Nowcast
                          : ev->parsed()  ? Command::Evaluate
                                          : Command::Simulate;
      execute(build(cmd, f));
    }
  } catch (const std::exception& e) {
    std::cerr << "bsts: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
