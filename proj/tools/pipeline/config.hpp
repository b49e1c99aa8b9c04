#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qstrat/candidates.hpp"
#include "qstrat/energies.hpp"
#include "qstrat/strata.hpp"

namespace qstrat::pipeline {

inline constexpr const char* kSchema = "qstrat.run/1";

/// Raised for malformed or invalid configuration. The message names the JSON path and line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class SourceKind { kSimulated, kConstant, kStaticCone, kQuasistaticCone, kShrinkingProfile };

std::string to_string(SourceKind k);

struct SourceConfig {
  SourceKind kind = SourceKind::kStaticCone;
  double time = 0.0;  // truncation or blow-up time for analytic kinds
  int n_cells = 16;
  double length = 1.0;
  double sigma = 0.25;
  double dt = 0.0;  // 0 selects the CFL step
  double t_end = 0.05;
  int record_every = 10;
  int modes = 3;
  double amplitude = 0.5;
};

struct StrataConfig {
  double eta = 1.0;
  std::vector<int> j{2};
  std::vector<double> r{0.25, 0.0625};
};

struct CloudConfig {
  std::string kind = "lattice";  // lattice | random
  int count = 4;                 // lattice points per axis, or total random points
  std::vector<double> center;    // defaults to the origin
  double extent = 0.5;           // half-width of the spatial box
  double t_center = 0.0;
  double t_extent = 0.0;         // half-width of the time range
  int time_count = 1;            // lattice time levels
};

struct RegularityConfig {
  double R_max = 0.5;
  double probe_step = 0.0;  // 0 uses R_max / 32 on closed-form fields
};

struct VerifyConfig {
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  bool cone_split = true;
  double rho = 0.4;
  int correlation_j = -1;  // -1 selects m - 1
};

struct RunConfig {
  int m = 3;
  int n = 2;
  SourceConfig source;
  ScaleParams scales;
  StrataConfig strata;
  DictionaryConfig dictionary;
  int window_cells = 9;
  StruweQuadrature quadrature{6.0, 0.5, 0.25};
  CloudConfig cloud;
  std::vector<double> radii;  // Minkowski radii; empty skips the fits
  RegularityConfig regularity;
  VerifyConfig verify;
  std::uint64_t seed = 0;
  std::string output;

  nlohmann::json raw;  // the document as read, echoed into manifests
};

/// Line of every JSON path in a document ("/source/kind" style pointers).
std::map<std::string, int> json_path_lines(const std::string& text);

/// Parses and validates a configuration. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace qstrat::pipeline
