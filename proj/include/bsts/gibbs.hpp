#pragma once

#include "bsts/common.hpp"
#include "bsts/shrinkage.hpp"
#include "bsts/state_space.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace bsts {

enum class PriorKind { Ssvs, Horseshoe, HorseshoeSavs };

std::string to_string(PriorKind kind);
PriorKind parse_prior_kind(std::string_view name);

struct McmcSettings {
  int n_iter = 15000;
  int n_burn = 5000;
  int thin = 5;
  int n_chains = 2;
  std::uint64_t seed = 20200101;

  // Draws kept per chain.
  int kept() const { return (n_iter - n_burn) / thin; }
  void validate() const;
};

struct ModelConfig {
  PriorKind prior_kind = PriorKind::HorseshoeSavs;
  McmcSettings mcmc;
  StatePriorConfig state_prior;
  HorseshoeHyper horseshoe;
  SsvsHyper ssvs;
  // Dogmatic coefficient prior: when set, beta is held at this value.
  std::optional<Vector> fixed_beta;

  void validate() const;
};

enum class GibbsStep { States, Theta, SignPermutation, Regression, ObservationVariance };

// Called after each step of each iteration. Used for instrumentation.
using GibbsObserver = std::function<void(int chain, int iteration, GibbsStep step)>;

// Kept draws of all chains stacked by chain: rows [c*M, (c+1)*M) belong to chain c.
struct PosteriorDraws {
  PriorKind prior_kind = PriorKind::HorseshoeSavs;
  Index n_chains = 0;
  Index draws_per_chain = 0;
  Index T = 0;
  Index K = 0;

  Matrix tau_tilde;    // M x T
  Matrix a_tilde;      // M x T
  Matrix theta;        // M x 4: tau0, alpha0, sigma_tau, sigma_alpha
  Matrix beta;         // M x K
  Matrix beta_sparse;  // M x K, SAVS output (horseshoe priors only)
  Vector sigma_y2;     // M

  Matrix lambda2;  // horseshoe: M x K
  Vector nu2;      // horseshoe: M
  Matrix gamma;    // ssvs: M x K (0/1)
  Matrix delta2;   // ssvs: M x K
  Vector pi0;      // ssvs: M

  Index clamp_events = 0;

  Index size() const { return theta.rows(); }
  NcssStates states_at(Index m) const;
  ThetaParams theta_at(Index m) const { return ThetaParams::from_vector(theta.row(m).transpose()); }
  // Coefficients used for prediction and point estimates: SAVS output under
  // horseshoe-savs, the raw draw otherwise.
  Vector coefficients_at(Index m) const;
  Matrix coefficients() const;
};

PosteriorDraws run_gibbs(const Vector& y, const Matrix& X, const ModelConfig& config,
                         const GibbsObserver& observer = {});

// Cumulative |y_{t+1} - E[y_{t+1} | y_1..t]| from sequential re-estimation,
// refitting every `refit_stride` origins and reusing the last fit in between.
Vector insample_onestep_errors(const Vector& y, const Matrix& X, const ModelConfig& config,
                               int refit_stride, Index min_train = 12);

enum class InclusionMode { SsvsGamma, SavsNonzero };

InclusionSummary inclusion_probabilities(const PosteriorDraws& draws, InclusionMode mode);
Vector model_size_distribution(const PosteriorDraws& draws, InclusionMode mode);

// Columnar float64 file `<stem>.bin` plus `<stem>.json` metadata.
void write_draw_store(const PosteriorDraws& draws, const std::filesystem::path& stem);
PosteriorDraws read_draw_store(const std::filesystem::path& stem);

}  // namespace bsts
