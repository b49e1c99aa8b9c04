#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "pipeline.hpp"

using namespace qstrat;
using namespace qstrat::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json base_config(const std::string& name) { return json::parse(slurp(fs::path(QSTRAT_CONFIG_DIR) / name)); }

// Small m = 2 constant run: cheap to analyze end to end.
json constant_config() {
  json c = base_config("smooth_run.json");
  c["source"] = {{"kind", "constant"}};
  c["cloud"] = {{"kind", "lattice"}, {"count", 2}, {"extent", 0.2}};
  c["strata"] = {{"eta", 0.5}, {"j", {0}}, {"r", {0.125}}};
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qstrat_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int line_of(const std::string& text, const std::string& needle) {
  const auto pos = text.find(needle);
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"static_cone_small.json", "smooth_run.json"})
    EXPECT_NO_THROW(load_config(fs::path(QSTRAT_CONFIG_DIR) / name)) << name;
}

TEST(Config, GammaErrorNamesPathAndLine) {
  json c = base_config("static_cone_small.json");
  c["scales"]["gamma"] = 0.6;
  const std::string text = c.dump(2);
  try {
    parse_config(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("0<gamma<1/2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/scales/gamma"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(line " + std::to_string(line_of(text, "\"gamma\"")) + ")"), std::string::npos) << msg;
  }
}

TEST(Config, UnknownKeysAndMalformedJson) {
  json c = base_config("static_cone_small.json");
  c["cloud"]["spacing"] = 1;
  try {
    parse_config(c.dump(2));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown key 'spacing'"), std::string::npos) << e.what();
  }
  try {
    parse_config("{\n  \"m\": 3,\n  \"n\": \n}");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Pipeline, ConstantSourceHasZeroEnergyAndRerunsIdentically) {
  const RunConfig cfg = parse_config(constant_config().dump());
  const fs::path out = scratch("constant");
  ASSERT_EQ(cmd_simulate(cfg, out), kOk);
  cmd_analyze(cfg, out);
  std::istringstream energies(slurp(out / "energies.csv"));
  std::string line;
  std::getline(energies, line);
  ASSERT_EQ(line.substr(0, 30), "index,determined,lambda2,K,one");
  int rows = 0;
  while (std::getline(energies, line)) {
    std::istringstream row(line);
    std::string index, determined, lambda2, K;
    std::getline(row, index, ',');
    std::getline(row, determined, ',');
    std::getline(row, lambda2, ',');
    std::getline(row, K, ',');
    EXPECT_EQ(std::stod(lambda2), 0.0) << line;
    EXPECT_EQ(K, "0") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4);

  std::map<std::string, std::string> first;
  for (const char* f : {"points.csv", "energies.csv", "labels.csv", "regularity.csv"}) first[f] = slurp(out / f);
  cmd_analyze(cfg, out);
  for (const auto& [f, text] : first) EXPECT_EQ(slurp(out / f), text) << f;
  EXPECT_EQ(cmd_verify(cfg, out), kOk);
  EXPECT_TRUE(fs::exists(out / "verify_report.json"));
}

TEST(Pipeline, MissingSnapshotFileIsReported) {
  json c = base_config("smooth_run.json");
  c["source"]["t_end"] = 0.02;
  c["cloud"]["count"] = 2;
  c["cloud"]["t_center"] = 0.01;
  c["cloud"]["t_extent"] = 0.0;
  const RunConfig cfg = parse_config(c.dump());
  const fs::path out = scratch("missing");
  ASSERT_EQ(cmd_simulate(cfg, out), kOk);
  const json manifest = json::parse(slurp(out / "trajectory" / "trajectory.json"));
  const std::string victim = manifest.at("snapshots").at(1).at("file").get<std::string>();
  fs::remove(out / "trajectory" / victim);
  try {
    cmd_analyze(cfg, out);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("missing snapshot file"), std::string::npos) << msg;
    EXPECT_NE(msg.find(victim), std::string::npos) << msg;
  }
}

TEST(Pipeline, EmptyCloudVerifiesCleanly) {
  json c = constant_config();
  c["cloud"]["count"] = 0;
  const RunConfig cfg = parse_config(c.dump());
  EXPECT_TRUE(make_cloud(cfg).empty());
  const fs::path out = scratch("empty");
  ASSERT_EQ(cmd_simulate(cfg, out), kOk);
  cmd_analyze(cfg, out);
  EXPECT_EQ(cmd_verify(cfg, out), kOk);
}

TEST(Pipeline, SlopePlotIsSvg) {
  const std::string svg = slope_svg("S^2", {0.5, 0.25}, {1.0, 0.2}, 2.3, 0.1);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
