#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include <CLI11.hpp>

#include "config.hpp"
#include "pipeline.hpp"
#include "qstrat/parallel.hpp"

namespace {

using namespace qstrat;
using namespace qstrat::pipeline;

int run_stage(const std::string& stage, const RunConfig& cfg, const std::filesystem::path& out) {
  if (stage == "simulate") return cmd_simulate(cfg, out);
  if (stage == "analyze") {
    cmd_analyze(cfg, out);
    return kOk;
  }
  if (stage == "verify") return cmd_verify(cfg, out);
  // all
  if (int rc = cmd_simulate(cfg, out); rc != kOk) return rc;
  cmd_analyze(cfg, out);
  return cmd_verify(cfg, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similarity, strata and regularity scales of sphere-valued heat flows"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  const std::pair<const char*, const char*> stages[] = {
      {"simulate", "Run or instantiate the source field and write run_manifest.json"},
      {"analyze", "Compute bits, labels and regularity scales for the sample cloud"},
      {"verify", "Check the analyze outputs and write verify_report.json"},
      {"all", "simulate, analyze and verify in sequence"},
  };
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads; 0 uses the hardware count")->check(CLI::NonNegativeNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.dictionary.seed = *seed;
    }
    if (!out_dir.empty()) cfg.output = out_dir;
    if (cfg.output.empty()) throw ConfigError("config error at /output: no output directory given");
    set_thread_count(threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    return run_stage(stage, cfg, cfg.output);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kConfigError;
  } catch (const BreakdownError& e) {
    std::fprintf(stderr, "numerical breakdown: %s\n", e.what());
    return kBreakdown;
  } catch (const ResolutionError& e) {
    std::fprintf(stderr, "numerical breakdown: %s\n", e.what());
    return kBreakdown;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invariant violated: %s\n", e.what());
    return kInvariantFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
}
