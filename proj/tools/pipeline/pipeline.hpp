#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "qstrat/trajectory.hpp"

namespace qstrat::pipeline {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kBreakdown = 3, kInvariantFailed = 4 };

/// Builds the analytic field named by the config, or loads the recorded run from out/trajectory.
TrajectoryPtr load_source(const RunConfig& cfg, const std::filesystem::path& out);

/// Sample cloud described by cfg.cloud; random clouds draw from the run seed.
std::vector<SpaceTimePoint> make_cloud(const RunConfig& cfg);

/// Label radii: the configured strata radii, the Minkowski radii and the cover ladder R gamma^b.
std::vector<double> label_radii(const RunConfig& cfg);

/// Writes run_manifest.json and, for simulated sources, trajectory/. Returns kBreakdown when
/// the run stopped early.
int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out);

/// Writes points.csv, energies.csv, labels.csv and regularity.csv.
void cmd_analyze(const RunConfig& cfg, const std::filesystem::path& out);

/// Reads the analyze outputs, writes verify_report.json, summary.csv, exponents.csv and SVG
/// plots. Returns kInvariantFailed when an assertion-class check fails.
int cmd_verify(const RunConfig& cfg, const std::filesystem::path& out);

/// Log-log plot of a slope fit as a standalone SVG document.
std::string slope_svg(const std::string& title, const std::vector<double>& radii, const std::vector<double>& volumes,
                      double slope, double intercept);

}  // namespace qstrat::pipeline
