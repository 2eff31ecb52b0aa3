#include "agility/sim/dataset_io.hpp"

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "agility/error.hpp"

namespace agility::sim {

using nlohmann::json;

namespace {

json frame_to_json(const ProprioFrame& f) {
  return {{"episode", f.episode},     {"t", f.t},
          {"v_gt", f.v_gt},           {"a_imu", f.a_imu},
          {"omega_imu", f.omega_imu}, {"gravity", f.gravity},
          {"joint_pos", f.joint_pos}, {"joint_vel", f.joint_vel},
          {"contact", f.contact},     {"event", to_string(f.event)},
          {"x", f.x}};
}

ProprioFrame frame_from_json(const json& j) {
  ProprioFrame f;
  f.episode = j.at("episode").get<std::uint32_t>();
  f.t = j.at("t").get<double>();
  f.v_gt = j.at("v_gt").get<Vec3>();
  f.a_imu = j.at("a_imu").get<Vec3>();
  f.omega_imu = j.at("omega_imu").get<Vec3>();
  f.gravity = j.at("gravity").get<Vec3>();
  f.joint_pos = j.at("joint_pos").get<std::array<double, kJoints>>();
  f.joint_vel = j.at("joint_vel").get<std::array<double, kJoints>>();
  f.contact = j.at("contact").get<std::array<bool, kLegs>>();
  f.event = event_from_string(j.at("event").get<std::string>());
  f.x = j.at("x").get<double>();
  return f;
}

}  // namespace

void write_dataset(const Dataset& ds, std::ostream& out) {
  const double dt = ds.empty() ? 0.0 : ds.front().dt;
  out << json{{"schema", kDatasetSchema},
              {"version", kDatasetVersion},
              {"episodes", ds.size()},
              {"dt", dt}}
             .dump()
      << '\n';
  for (const auto& traj : ds) {
    if (traj.dt != dt) throw Error("write_dataset: mixed dt across episodes");
    for (const auto& f : traj.frames) out << frame_to_json(f).dump() << '\n';
  }
  if (!out) throw Error("write_dataset: stream write failed");
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_dataset(ds, out);
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty dataset", 1);
  ++lineno;
  double dt = 0.0;
  try {
    const json header = json::parse(line);
    if (header.at("schema").get<std::string>() != kDatasetSchema) {
      throw ParseError("unexpected schema '" + header.at("schema").get<std::string>() + "'",
                       lineno);
    }
    const int version = header.at("version").get<int>();
    if (version != kDatasetVersion) {
      throw ParseError("unsupported dataset version " + std::to_string(version) +
                           " (expected " + std::to_string(kDatasetVersion) + ")",
                       lineno);
    }
    dt = header.at("dt").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad header: ") + e.what(), lineno);
  }

  Dataset ds;
  std::map<std::uint32_t, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ProprioFrame f;
    try {
      f = frame_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    auto [it, fresh] = index.try_emplace(f.episode, ds.size());
    if (fresh) ds.push_back(Trajectory{f.episode, dt, {}});
    ds[it->second].frames.push_back(f);
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace agility::sim
