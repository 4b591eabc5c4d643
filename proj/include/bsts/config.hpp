#pragma once

// Run configuration file ("bsts.config/1", JSON). Relative data paths are
// resolved against the directory holding the config file.

#include "bsts/forecast.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/simstudy.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bsts {

struct DataPaths {
  std::filesystem::path monthly;
  std::filesystem::path quarterly;
  std::filesystem::path calendar;  // empty: the built-in release calendar
};

struct EvaluateSettings {
  std::string first_target;  // "YYYY-MM" of the first quarter nowcast
  std::string last_target;
  CrpsForm crps_form = CrpsForm::Energy;
  std::vector<PriorKind> models{PriorKind::Horseshoe, PriorKind::HorseshoeSavs, PriorKind::Ssvs};
  bool ar2 = true;
  Index ar2_draws = 2000;
};

struct RunConfig {
  std::uint64_t seed = 20200101;
  ModelConfig model;
  DataPaths data;
  EvaluateSettings evaluate;
  StudyGrid simulate = StudyGrid::desk();

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text, const std::string& source,
                           const std::filesystem::path& base_dir);
RunConfig read_run_config(const std::filesystem::path& path);
// Fully resolved form; parse_run_config(run_config_to_json(c)) == c.
std::string run_config_to_json(const RunConfig& config);

}  // namespace bsts
