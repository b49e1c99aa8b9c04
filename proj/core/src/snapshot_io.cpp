#include "qstrat/snapshot_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace qstrat {
namespace {

constexpr std::array<char, 4> kMagic{'H', 'M', 'F', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("snapshot: truncated header");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("snapshot: truncated data");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return std::bit_cast<double>(v);
}

std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%05zu.hmf", i);
  return buf;
}

}  // namespace

void write_snapshot(const Snapshot& s, std::ostream& out) {
  out.write(kMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(s.grid.m));
  put_u32(out, static_cast<std::uint32_t>(s.n));
  put_u32(out, static_cast<std::uint32_t>(s.grid.n_cells));
  put_f64(out, s.grid.h);
  put_f64(out, s.t);
  for (double v : s.values) put_f64(out, v);
  if (!out) throw Error("snapshot: write failed");
}

Snapshot read_snapshot(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) throw Error("snapshot: bad magic");
  const auto m = static_cast<int>(get_u32(in));
  const auto n = static_cast<int>(get_u32(in));
  const auto cells = static_cast<int>(get_u32(in));
  const double h = get_f64(in);
  const double t = get_f64(in);
  Snapshot s(GridSpec(m, cells, h, true), n, t);
  for (double& v : s.values) v = get_f64(in);
  return s;
}

void write_snapshot_file(const Snapshot& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot(s, out);
}

Snapshot read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing snapshot file: " + path.string());
  return read_snapshot(in);
}

nlohmann::json write_trajectory(const SimulatedTrajectory& traj, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < traj.snapshots().size(); ++i) {
    const auto name = snapshot_name(i);
    write_snapshot_file(traj.snapshots()[i], dir / name);
    files.push_back({{"file", name}, {"t", traj.snapshots()[i].t}});
  }
  nlohmann::json manifest = {
      {"source", "simulated"},
      {"dt", traj.dt()},
      {"record_every", traj.record_every()},
      {"blown_up", traj.blown_up},
      {"breakdown_time", traj.breakdown_time ? nlohmann::json(*traj.breakdown_time) : nlohmann::json()},
      {"snapshots", files},
  };
  std::ofstream out(dir / "trajectory.json");
  out << manifest.dump(2) << '\n';
  return manifest;
}

std::shared_ptr<SimulatedTrajectory> read_trajectory(const std::filesystem::path& dir) {
  const auto mpath = dir / "trajectory.json";
  std::ifstream in(mpath);
  if (!in) throw Error("missing trajectory manifest: " + mpath.string());
  const auto manifest = nlohmann::json::parse(in);
  std::vector<Snapshot> snaps;
  for (const auto& f : manifest.at("snapshots")) snaps.push_back(read_snapshot_file(dir / f.at("file").get<std::string>()));
  auto traj = std::make_shared<SimulatedTrajectory>(std::move(snaps), manifest.at("dt").get<double>(),
                                                    manifest.at("record_every").get<int>());
  traj->blown_up = manifest.value("blown_up", false);
  if (manifest.contains("breakdown_time") && !manifest["breakdown_time"].is_null())
    traj->breakdown_time = manifest["breakdown_time"].get<double>();
  return traj;
}

}  // namespace qstrat
