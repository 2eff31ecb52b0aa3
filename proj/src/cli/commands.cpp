#include "agility/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "agility/error.hpp"
#include "agility/sim/dataset_io.hpp"
#include "agility/sim/generator.hpp"

namespace agility::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << text;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw Error("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

namespace {

using Clock = std::chrono::steady_clock;

// Collects a report and checks every metric is finite before it is written.
struct Report {
  json metrics = json::object();
  json curves = json::object();
  json timing = json::object();
  json details = json::object();

  void metric(const std::string& name, double v) {
    if (!std::isfinite(v)) throw NumericError("metric '" + name + "' is not finite");
    metrics[name] = v;
  }
};

std::string csv(const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
  return out.str();
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string num(std::size_t v) { return std::to_string(v); }

void add_curve(Report& r, const fs::path& dir, const std::string& name, const std::string& text) {
  const std::string file = name + ".csv";
  write_file_atomic(dir / file, text);
  r.curves[name] = file;
}

// ---- simulate --------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg, const fs::path& dir, Report& r, std::ostream& log) {
  const auto ds = sim::generate_dataset(cfg.seed, cfg.simulate);
  std::size_t frames = 0, slip = 0, flight = 0;
  for (const auto& traj : ds) {
    frames += traj.frames.size();
    for (const auto& f : traj.frames) {
      slip += f.event == sim::Event::slip;
      flight += f.event == sim::Event::flight;
    }
  }
  std::ostringstream text;
  sim::write_dataset(ds, text);
  write_file_atomic(dir / "dataset.jsonl", text.str());
  r.details["dataset"] = "dataset.jsonl";
  r.metric("episodes", static_cast<double>(ds.size()));
  r.metric("frames", static_cast<double>(frames));
  r.metric("slip_frames", static_cast<double>(slip));
  r.metric("flight_frames", static_cast<double>(flight));
  log << "simulate: " << ds.size() << " episodes, " << frames << " frames (" << slip
      << " slip, " << flight << " flight) -> " << (dir / "dataset.jsonl").string() << "\n";
}

// ---- table6 ----------------------------------------------------------------

void cmd_table6(const RunConfig& cfg, const fs::path& dir, Report& r, std::ostream& log) {
  const auto res = experiments::run_table6(cfg.table6, cfg.seed);
  std::vector<std::vector<std::string>> rmse_rows, curve_rows;
  json table = json::array();
  json failed = json::array();
  for (const auto& row : res.rows) {
    json jr{{"row", row.name}, {"failed", row.failed}};
    if (row.failed) {
      jr["failure"] = row.failure;
      failed.push_back(row.name);
      log << "table6: " << row.name << " FAILED (" << row.failure << ")\n";
    } else {
      const auto axis = row.mean_per_axis();
      r.metric("rmse." + row.name, row.mean_total());
      r.metric("rmse." + row.name + ".x", axis[0]);
      r.metric("rmse." + row.name + ".y", axis[1]);
      r.metric("rmse." + row.name + ".z", axis[2]);
      jr["mean_total"] = row.mean_total();
      jr["mean_per_axis"] = json::array({axis[0], axis[1], axis[2]});
      log << "table6: " << row.name << " rmse " << row.mean_total() << "\n";
    }
    json per_seed = json::array();
    for (std::size_t s = 0; s < row.per_seed.size(); ++s) {
      const auto& rep = row.per_seed[s];
      per_seed.push_back({{"seed", res.seeds[s]},
                          {"total", rep.total},
                          {"per_axis", json::array({rep.per_axis[0], rep.per_axis[1], rep.per_axis[2]})},
                          {"frames", rep.frames}});
      rmse_rows.push_back({row.name, std::to_string(res.seeds[s]), num(rep.per_axis[0]),
                           num(rep.per_axis[1]), num(rep.per_axis[2]), num(rep.total)});
    }
    jr["per_seed"] = per_seed;
    for (std::size_t s = 0; s < row.curves.size(); ++s) {
      for (const auto& m : row.curves[s]) {
        curve_rows.push_back({row.name, std::to_string(res.seeds[s]), num(m.epoch),
                              num(m.train_loss), num(m.train_rmse), num(m.val_rmse)});
      }
    }
    table.push_back(jr);
  }
  r.details["table"] = table;
  r.details["failed_rows"] = failed;
  r.details["seeds"] = res.seeds;
  r.details["oracle"] = cfg.table6.oracle;
  r.details["ordering"] = res.ordering_holds() ? "holds" : "violated";
  r.metric("ordering_holds", res.ordering_holds() ? 1.0 : 0.0);
  r.metric("seeds_ordered", static_cast<double>(res.seeds_ordered()));
  if (!res.calibration.empty()) {
    r.metric("sigma_ratio", res.mean_sigma_ratio());
    json cal = json::array();
    for (const auto& c : res.calibration) {
      cal.push_back({{"event_mean", c.event_mean},
                     {"nominal_mean", c.nominal_mean},
                     {"event_frames", c.event_frames},
                     {"nominal_frames", c.nominal_frames},
                     {"ratio", c.ratio()}});
    }
    r.details["sigma_calibration"] = cal;
  }
  add_curve(r, dir, "table6_rmse", csv({"row", "seed", "rmse_x", "rmse_y", "rmse_z", "rmse"}, rmse_rows));
  add_curve(r, dir, "table6_training",
            csv({"row", "seed", "epoch", "train_loss", "train_rmse", "val_rmse"}, curve_rows));
  log << "table6: ordering " << (res.ordering_holds() ? "holds" : "violated") << " ("
      << res.seeds_ordered() << "/" << res.seeds.size() << " seeds individually)\n";
}

// ---- blindzone -------------------------------------------------------------

void cmd_blindzone(const RunConfig& cfg, const fs::path& dir, Report& r, std::ostream& log) {
  struct Variant {
    std::string name;
    experiments::BlindZoneConfig cfg;
  };
  std::vector<Variant> variants{{"masked", cfg.blindzone}};
  if (cfg.blindzone_control) {
    variants.push_back({"control", cfg.blindzone});
    variants.back().cfg.window = 0.0;
  }
  std::vector<std::vector<std::string>> rows, curve_rows;
  for (const auto& v : variants) {
    double ssm = 0, mlp = 0, ssm_all = 0, mlp_all = 0;
    const auto n = static_cast<double>(cfg.blindzone_seeds);
    for (std::size_t i = 0; i < cfg.blindzone_seeds; ++i) {
      const std::uint64_t seed = cfg.seed + i;
      const auto res = experiments::run_blindzone(v.cfg, seed);
      ssm += res.ssm_rmse / n;
      mlp += res.memoryless_rmse / n;
      ssm_all += res.ssm_rmse_all / n;
      mlp_all += res.memoryless_rmse_all / n;
      rows.push_back({v.name, std::to_string(seed), num(v.cfg.window), num(res.ssm_rmse),
                      num(res.memoryless_rmse), num(res.ssm_rmse_all),
                      num(res.memoryless_rmse_all), num(res.scored_frames)});
      for (std::size_t e = 0; e < res.ssm_curve.size(); ++e) {
        curve_rows.push_back({v.name, std::to_string(seed), num(e + 1), num(res.ssm_curve[e]),
                              num(res.memoryless_curve[e])});
      }
      log << "blindzone: " << v.name << " seed " << seed << " ssm " << res.ssm_rmse
          << " memoryless " << res.memoryless_rmse << "\n";
    }
    r.metric(v.name + ".ssm_rmse", ssm);
    r.metric(v.name + ".memoryless_rmse", mlp);
    r.metric(v.name + ".improvement", 1.0 - ssm / mlp);
    r.metric(v.name + ".gap", mlp - ssm);
    r.metric(v.name + ".ssm_rmse_all", ssm_all);
    r.metric(v.name + ".memoryless_rmse_all", mlp_all);
  }
  add_curve(r, dir, "blindzone_runs",
            csv({"variant", "seed", "window", "ssm_rmse", "memoryless_rmse", "ssm_rmse_all",
                 "memoryless_rmse_all", "scored_frames"},
                rows));
  add_curve(r, dir, "blindzone_training",
            csv({"variant", "seed", "epoch", "ssm_mse", "memoryless_mse"}, curve_rows));
}

// ---- bench-latency ---------------------------------------------------------

void cmd_bench_latency(const RunConfig& cfg, const fs::path& dir, Report& r, std::ostream& log) {
  const auto res = experiments::run_latency(cfg.bench, cfg.seed);
  std::vector<std::vector<std::string>> rows;
  json stats = json::array();
  for (const auto& t : res.timings) {
    stats.push_back({{"model", t.model},
                     {"history", t.history},
                     {"median_us", t.median_us},
                     {"p99_us", t.p99_us},
                     {"mean_us", t.mean_us}});
    for (std::size_t i = 0; i < t.samples_us.size(); ++i) {
      rows.push_back({t.model, num(t.history), num(i), num(t.samples_us[i])});
    }
    log << "bench-latency: " << t.model << " history " << t.history << " median "
        << t.median_us << " us, p99 " << t.p99_us << " us\n";
  }
  r.timing["steps"] = stats;
  r.timing["ssm_median_ratio"] = res.median_ratio("ssm");
  r.timing["attention_median_ratio"] = res.median_ratio("attention");
  r.details["machine"] = {{"compiler", res.machine.compiler},
                          {"hardware_threads", res.machine.hardware_threads},
                          {"threads_used", res.machine.threads_used}};
  r.details["warmup_discarded"] = res.warmup_discarded;
  r.metric("timed_steps", static_cast<double>(cfg.bench.steps));
  add_curve(r, dir, "latency_steps", csv({"model", "history", "step", "us"}, rows));
  log << "bench-latency: median ratio ssm " << res.median_ratio("ssm") << ", attention "
      << res.median_ratio("attention") << "\n";
}

// ---- gating ----------------------------------------------------------------

void cmd_gating(const RunConfig& cfg, const fs::path& dir, Report& r, std::ostream& log) {
  const auto res = experiments::run_gating_compare(cfg.gating, cfg.seed);
  std::vector<std::vector<std::string>> rows;
  auto write_runs = [&](const std::string& variant, const std::vector<gating::DistillResult>& runs) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::ostringstream text;
      gating::write_distill_csv(runs[i].curve, text);
      add_curve(r, dir, "gating_" + variant + "_seed" + std::to_string(res.seeds[i]), text.str());
      rows.push_back({variant, std::to_string(res.seeds[i]), num(runs[i].final_val_bc),
                      num(runs[i].final_val_discrepancy)});
      r.metric(variant + ".val_bc.seed" + std::to_string(res.seeds[i]), runs[i].final_val_bc);
    }
  };
  write_runs("gated", res.gated);
  write_runs("fixed", res.fixed);
  r.metric("gated.mean_val_bc", res.gated_mean_bc());
  r.metric("fixed.mean_val_bc", res.fixed_mean_bc());
  r.details["gated_not_worse"] = res.gated_mean_bc() <= res.fixed_mean_bc();
  add_curve(r, dir, "gating_final", csv({"variant", "seed", "val_bc", "val_discrepancy"}, rows));
  log << "gating: mean final val BC gated " << res.gated_mean_bc() << ", fixed lambda "
      << cfg.gating.fixed_lambda << " " << res.fixed_mean_bc() << "\n";
}

}  // namespace

json run_command(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const json resolved = to_json(cfg);
  const std::string hash = config_hash(resolved);
  const fs::path dir = cfg.out;
  fs::create_directories(dir);
  write_file_atomic(dir / "config.json", resolved.dump(2) + "\n");

  Report r;
  const auto t0 = Clock::now();
  switch (cfg.command) {
    case Command::simulate: cmd_simulate(cfg, dir, r, log); break;
    case Command::table6: cmd_table6(cfg, dir, r, log); break;
    case Command::blindzone: cmd_blindzone(cfg, dir, r, log); break;
    case Command::bench_latency: cmd_bench_latency(cfg, dir, r, log); break;
    case Command::gating: cmd_gating(cfg, dir, r, log); break;
  }
  r.timing["wall_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();

  json report{{"command", to_string(cfg.command)},
              {"run_id", to_string(cfg.command) + "-" + hash.substr(0, 8) + "-s" +
                             std::to_string(cfg.seed)},
              {"seed", cfg.seed},
              {"config_hash", hash},
              {"metrics", r.metrics},
              {"curves", r.curves},
              {"timing", r.timing},
              {"details", r.details}};
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace agility::cli
