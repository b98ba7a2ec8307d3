#pragma once

#include <string>

#include <json.hpp>

#include "core/config.hpp"

namespace mfggp {

/// Result of one experiment run: a structured record (config echo, recovered
/// scalars, per-field L2 errors, solver diagnostics, grid-file references).
/// Every reported error is recomputable from the persisted grids.
struct ResultRecord {
  nlohmann::json data;

  std::string dump(int indent = 2) const { return data.dump(indent); }
  double number_at(const std::string& dotted_path) const;
};

/// Executes the experiment described by the config: builds the reference
/// solution, synthesizes observations, runs the requested inversion(s),
/// computes metrics, and persists the record plus grid CSVs under output_dir.
/// All randomness flows from the config seeds.
ResultRecord run_experiment(const ExperimentConfig& config);

}  // namespace mfggp
