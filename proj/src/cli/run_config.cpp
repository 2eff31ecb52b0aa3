#include "agility/cli/run_config.hpp"

#include <cstdio>
#include <set>

#include "agility/error.hpp"

namespace agility::cli {

using nlohmann::json;

std::string to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::table6: return "table6";
    case Command::blindzone: return "blindzone";
    case Command::bench_latency: return "bench-latency";
    case Command::gating: return "gating";
  }
  return "simulate";
}

Command command_from_string(const std::string& s) {
  for (Command c : {Command::simulate, Command::table6, Command::blindzone,
                    Command::bench_latency, Command::gating}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("unknown command '" + s + "'");
}

void RunConfig::validate() const {
  switch (command) {
    case Command::simulate: simulate.validate(); break;
    case Command::table6: table6.validate(); break;
    case Command::blindzone:
      blindzone.validate();
      if (blindzone_seeds == 0) throw ConfigError("blindzone.seeds must be positive");
      break;
    case Command::bench_latency: bench.validate(); break;
    case Command::gating: gating.validate(); break;
  }
}

namespace {

// ---- leaf conversions -----------------------------------------------------

[[noreturn]] void bad_type(const std::string& path, const char* expected) {
  throw ConfigError(path + ": expected " + expected);
}

void read(const json& j, double& v, const std::string& path) {
  if (!j.is_number()) bad_type(path, "a number");
  v = j.get<double>();
}

void read(const json& j, bool& v, const std::string& path) {
  if (!j.is_boolean()) bad_type(path, "true or false");
  v = j.get<bool>();
}

void read(const json& j, std::string& v, const std::string& path) {
  if (!j.is_string()) bad_type(path, "a string");
  v = j.get<std::string>();
}

void read(const json& j, std::size_t& v, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    bad_type(path, "a non-negative integer");
  }
  v = j.get<std::size_t>();
}

void read(const json& j, int& v, const std::string& path) {
  if (!j.is_number_integer()) bad_type(path, "an integer");
  v = j.get<int>();
}

void read(const json& j, sim::Range& v, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    bad_type(path, "[lo, hi]");
  }
  v = {j[0].get<double>(), j[1].get<double>()};
}

void read(const json& j, sim::Vec3& v, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad_type(path, "an array of 3 numbers");
  for (std::size_t i = 0; i < 3; ++i) {
    read(j[i], v[i], path + "[" + std::to_string(i) + "]");
  }
}

void read(const json& j, std::vector<std::size_t>& v, const std::string& path) {
  if (!j.is_array()) bad_type(path, "an array of non-negative integers");
  v.assign(j.size(), 0);
  for (std::size_t i = 0; i < j.size(); ++i) {
    read(j[i], v[i], path + "[" + std::to_string(i) + "]");
  }
}

template <typename Enum, typename Parse>
void read_enum(const json& j, Enum& v, const std::string& path, Parse parse) {
  if (!j.is_string()) bad_type(path, "a string");
  try {
    v = parse(j.get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void read(const json& j, sim::TerrainKind& v, const std::string& path) {
  read_enum(j, v, path, sim::terrain_kind_from_string);
}

json write(double v) { return v; }
json write(bool v) { return v; }
json write(std::size_t v) { return v; }
json write(int v) { return v; }
json write(const sim::Range& v) { return json::array({v.lo, v.hi}); }
json write(const sim::Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json write(const std::vector<std::size_t>& v) { return v; }
json write(sim::TerrainKind v) { return sim::to_string(v); }

// ---- visitors -------------------------------------------------------------
//
// Each block lists its fields once; Reader fills them from JSON with
// unknown-key rejection, Writer serializes them.

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad_type(path_.empty() ? "config" : path_, "an object");
  }

  template <typename T>
  void operator()(const char* key, T& v) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    read(*it, v, child(key));
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + child(item.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  template <typename T>
  void operator()(const char* key, T& v) {
    j[key] = write(v);
  }
  json j = json::object();
};

template <typename V>
void fields(V& v, sim::SimConfig& c) {
  v("dt", c.dt);
  v("duration", c.duration);
  v("episodes", c.episodes);
  v("forward_speed", c.forward_speed);
  v("lateral_speed", c.lateral_speed);
  v("yaw_rate", c.yaw_rate);
  v("command_hold", c.command_hold);
  v("velocity_time_constant", c.velocity_time_constant);
  v("bounce_amplitude", c.bounce_amplitude);
  v("attitude_amplitude", c.attitude_amplitude);
  v("gait_frequency", c.gait_frequency);
  v("friction", c.friction);
  v("push_interval", c.push_interval);
  v("push_velocity", c.push_velocity);
  v("payload", c.payload);
  v("com_offset", c.com_offset);
  v("motor_strength", c.motor_strength);
  v("joint_pos_noise", c.joint_pos_noise);
  v("joint_vel_noise", c.joint_vel_noise);
  v("lin_vel_noise", c.lin_vel_noise);
  v("ang_vel_noise", c.ang_vel_noise);
  v("gravity_noise", c.gravity_noise);
  v("height_noise", c.height_noise);
  v("accel_noise", c.accel_noise);
  v("slip_rate", c.slip_rate);
  v("slip_duration", c.slip_duration);
  v("slip_jump", c.slip_jump);
  v("slip_noise_factor", c.slip_noise_factor);
  v("flight_rate", c.flight_rate);
  v("flight_duration", c.flight_duration);
}

template <typename V>
void fields(V& v, estimator::EstimatorConfig& c) {
  v("huber_delta", c.huber_delta);
  v("nll_weight", c.nll_weight);
  v("mlp_hidden", c.mlp_hidden);
  v("channels", c.channels);
  v("blocks", c.blocks);
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("learning_rate", c.learning_rate);
  v("final_lr_fraction", c.final_lr_fraction);
  v("samples_per_epoch", c.samples_per_epoch);
  v("first_frame", c.first_frame);
}

template <typename V>
void fields(V& v, ekf::EkfConfig& c) {
  v("process_noise", c.process_noise);
  v("initial_variance", c.initial_variance);
  v("dt", c.dt);
}

template <typename V>
void table6_fields(V& v, experiments::Table6Config& c) {
  v("seeds", c.seeds);
  v("train_fraction", c.train_fraction);
  v("oracle", c.oracle);
  v("oracle_sigma", c.oracle_sigma);
}

template <typename V>
void fields(V& v, sim::TerrainConfig& c) {
  v("length", c.length);
  v("grid_dx", c.grid_dx);
  v("base_height", c.base_height);
  v("lead_in", c.lead_in);
  v("spacing", c.spacing);
  v("hurdle_height", c.hurdle_height);
  v("hurdle_width", c.hurdle_width);
  v("step_height", c.step_height);
  v("gap_width", c.gap_width);
  v("pit_depth", c.pit_depth);
  v("max_obstacles", c.max_obstacles);
}

template <typename V>
void fields(V& v, sim::ScanConfig& c) {
  v("samples", c.samples);
  v("spacing", c.spacing);
}

template <typename V>
void ssm_fields(V& v, experiments::BlindZoneConfig& c) {
  v("state_dim", c.state_dim);
  v("output_dim", c.ssm_output);
}

template <typename V>
void blindzone_fields(V& v, RunConfig& r) {
  auto& c = r.blindzone;
  v("terrain_kind", c.terrain_kind);
  v("train_episodes", c.train_episodes);
  v("val_episodes", c.val_episodes);
  v("window", c.window);
  v("score_window", c.score_window);
  v("speed_noise", c.speed_noise);
  v("mlp_width", c.mlp_width);
  v("epochs", c.epochs);
  v("batch_episodes", c.batch_episodes);
  v("learning_rate", c.learning_rate);
  v("final_lr_fraction", c.final_lr_fraction);
  v("seeds", r.blindzone_seeds);
  v("control", r.blindzone_control);
}

template <typename V>
void fields(V& v, experiments::LatencyConfig& c) {
  v("histories", c.histories);
  v("steps", c.steps);
  v("warmup", c.warmup);
  v("input_dim", c.input_dim);
  v("state_dim", c.state_dim);
  v("output_dim", c.output_dim);
  v("key_dim", c.key_dim);
}

template <typename V>
void gating_fields(V& v, experiments::GatingCompareConfig& c) {
  v("tau", c.gating.tau);
  v("k", c.gating.k);
  v("gated_seeds", c.gated_seeds);
  v("fixed_seeds", c.fixed_seeds);
  v("fixed_lambda", c.fixed_lambda);
}

template <typename V>
void fields(V& v, gating::DistillConfig& c) {
  v("obs_dim", c.obs_dim);
  v("action_dim", c.action_dim);
  v("hidden", c.hidden);
  v("train_samples", c.train_samples);
  v("val_samples", c.val_samples);
  v("batch_size", c.batch_size);
  v("steps", c.steps);
  v("learning_rate", c.learning_rate);
  v("final_lr_fraction", c.final_lr_fraction);
  v("obs_noise", c.obs_noise);
  v("action_noise", c.action_noise);
  v("corruption", c.corruption);
  v("log_every", c.log_every);
}

// A named block: its field lister applied to a sub-object.
template <typename Fn>
struct Block {
  const char* name;
  Fn fn;
};
template <typename Fn>
Block(const char*, Fn) -> Block<Fn>;

template <typename Fn>
void read_block(const json& root, std::set<std::string>& seen, const Block<Fn>& b) {
  const auto it = root.find(b.name);
  if (it == root.end()) return;
  seen.insert(b.name);
  Reader r(*it, b.name);
  b.fn(r);
  r.finish();
}

template <typename Fn>
void write_block(json& root, const Block<Fn>& b) {
  Writer w;
  b.fn(w);
  root[b.name] = std::move(w.j);
}

// Calls `each(block)` for every block of the command.
template <typename Each>
void for_blocks(RunConfig& c, Each&& each) {
  switch (c.command) {
    case Command::simulate:
      each(Block{"sim", [&](auto& v) { fields(v, c.simulate); }});
      break;
    case Command::table6:
      each(Block{"sim", [&](auto& v) { fields(v, c.table6.sim); }});
      each(Block{"estimator", [&](auto& v) { fields(v, c.table6.estimator); }});
      each(Block{"ekf", [&](auto& v) { fields(v, c.table6.ekf); }});
      each(Block{"table6", [&](auto& v) { table6_fields(v, c.table6); }});
      break;
    case Command::blindzone:
      each(Block{"sim", [&](auto& v) { fields(v, c.blindzone.sim); }});
      each(Block{"terrain", [&](auto& v) { fields(v, c.blindzone.terrain); }});
      each(Block{"scan", [&](auto& v) { fields(v, c.blindzone.scan); }});
      each(Block{"ssm", [&](auto& v) { ssm_fields(v, c.blindzone); }});
      each(Block{"blindzone", [&](auto& v) { blindzone_fields(v, c); }});
      break;
    case Command::bench_latency:
      each(Block{"bench", [&](auto& v) { fields(v, c.bench); }});
      break;
    case Command::gating:
      each(Block{"gating", [&](auto& v) { gating_fields(v, c.gating); }});
      each(Block{"distill", [&](auto& v) { fields(v, c.gating.distill); }});
      break;
  }
}

}  // namespace

RunConfig parse_run_config(Command command, const json& j) {
  RunConfig c;
  c.command = command;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  std::set<std::string> seen;
  if (const auto it = j.find("seed"); it != j.end()) {
    seen.insert("seed");
    std::size_t s = 0;
    read(*it, s, "seed");
    c.seed = s;
  }
  if (const auto it = j.find("out"); it != j.end()) {
    seen.insert("out");
    read(*it, c.out, "out");
  }
  for_blocks(c, [&](const auto& block) { read_block(j, seen, block); });
  for (const auto& item : j.items()) {
    if (!seen.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' for command " + to_string(command));
    }
  }
  return c;
}

json to_json(const RunConfig& cfg) {
  RunConfig c = cfg;
  json j = json::object();
  j["command"] = to_string(c.command);
  j["seed"] = c.seed;
  j["out"] = c.out;
  for_blocks(c, [&](const auto& block) { write_block(j, block); });
  return j;
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace agility::cli
