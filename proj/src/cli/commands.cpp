#include "tonopah/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tonopah/cli/config_file.hpp"
#include "tonopah/cli/output.hpp"
#include "tonopah/harness/grid.hpp"

#ifndef TONOPAH_VERSION
#define TONOPAH_VERSION "0.0.0"
#endif

namespace tonopah::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* tool_version() { return TONOPAH_VERSION; }

namespace {

/// Scenario flags shared by `run` and `grid`; each one maps to a config key.
struct ScenarioFlags {
  std::optional<std::string> config;
  std::optional<std::string> duration_s, seed, theta_ms, dominant_share, backoff, decision_rule,
      buffer_packets, ack_jitter_us;
  bool cross_traffic = false;
  bool no_tonopah = false;
  bool no_backoff = false;
  bool delay_one_way = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "key = value or JSON config file (summary.json works)");
    app.add_option("--duration-s", duration_s, "measured duration per run in seconds (90)");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--theta-ms", theta_ms, "detection threshold in ms (5)");
    app.add_option("--dominant-share", dominant_share, "dominant subflow share, a/b or decimal (2/3)");
    app.add_option("--backoff", backoff, "cwnd reduction on detection, a/b or decimal (1/8)");
    app.add_option("--decision-rule", decision_rule, "shared_queue_evidence or per_epoch");
    app.add_option("--buffer-packets", buffer_packets, "bottleneck buffer override, or auto");
    app.add_option("--ack-jitter-us", ack_jitter_us, "max per-ack host delay in microseconds (100)");
    app.add_flag("--cross-traffic", cross_traffic, "add a NewReno cross flow started 4 s earlier");
    app.add_flag("--no-tonopah", no_tonopah, "plain NewReno");
    app.add_flag("--no-backoff", no_backoff, "detect only, never reduce cwnd");
    app.add_flag("--delay-one-way", delay_one_way, "read delays as one-way instead of RTT");
  }

  KeyValues overrides() const {
    KeyValues kv;
    auto put = [&kv](const char* key, const std::optional<std::string>& v) {
      if (v) kv[key] = *v;
    };
    put("duration_s", duration_s);
    put("seed", seed);
    put("theta_ms", theta_ms);
    put("dominant_share", dominant_share);
    put("backoff", backoff);
    put("decision_rule", decision_rule);
    put("buffer_packets", buffer_packets);
    put("ack_jitter_us", ack_jitter_us);
    if (cross_traffic) kv["cross_traffic"] = "true";
    if (no_tonopah) kv["tonopah"] = "false";
    if (no_backoff) kv["backoff_enabled"] = "false";
    if (delay_one_way) kv["delay_one_way"] = "true";
    return kv;
  }
};

KeyValues merged(const std::optional<std::string>& config_path, const KeyValues& flags) {
  KeyValues kv;
  if (config_path) kv = read_config_file(*config_path);
  for (const auto& [k, v] : flags) kv[k] = v;
  return kv;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json config_json(const KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

json base_summary(const char* command, const KeyValues& config) {
  json j;
  j["tool"] = "tonopah";
  j["version"] = tool_version();
  j["command"] = command;
  j["config"] = config_json(config);
  return j;
}

unsigned workers_from_env() {
  if (const char* env = std::getenv("TONOPAH_WORKERS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      return 0;
    }
  }
  return 0;
}

void print_run_line(std::ostream& out, const harness::ScenarioSpec& s, const harness::RunResult& r) {
  out << "qdisc=" << qdisc::to_string(s.qdisc_kind) << " rate_mbps=" << format_rate_axis({s.link_rate})
      << " delay_ms=" << format_ms(s.delay) << " tonopah=" << (s.tonopah_enabled ? "on" : "off")
      << " accuracy=" << format_fraction(r.accuracy) << " utilization="
      << format_fraction(r.utilization) << " mean_qdelay_ms=" << format_ms(r.mean_qdelay)
      << " drops=" << r.drops << " digest=" << result_json(r).at("digest").get<std::string>()
      << '\n';
}

// --- run -------------------------------------------------------------------

struct RunFlags {
  ScenarioFlags scenario;
  std::optional<std::string> qdisc, rate_mbps, delay_ms;
  std::optional<std::string> out_dir;
  std::optional<std::string> golden;
  bool epochs = false;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  auto flags = f.scenario.overrides();
  if (f.qdisc) flags["qdisc"] = *f.qdisc;
  if (f.rate_mbps) flags["rate_mbps"] = *f.rate_mbps;
  if (f.delay_ms) flags["delay_ms"] = *f.delay_ms;
  if (f.epochs) flags["record_epochs"] = "true";

  harness::ScenarioSpec spec;
  try {
    auto kv = merged(f.scenario.config, flags);
    // Grid-only keys in a config are tolerated so grid configs can drive a run.
    for (const char* k : {"delays_ms", "rates_mbps", "reps", "workers", "compare_cc"}) kv.erase(k);
    spec = harness::from_key_values(kv);
    harness::validate(spec);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  harness::RunResult result;
  try {
    result = harness::run_scenario(spec);
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kExitFailure;
  }
  print_run_line(out, spec, result);

  try {
    const auto config = harness::to_key_values(spec);
    if (f.out_dir) {
      const fs::path dir = *f.out_dir;
      std::ostringstream runs;
      write_runs_csv(runs, {RunRow{0, &spec, &result, {}}});
      write_file(dir, "runs.csv", runs.str());
      std::ostringstream ecdf;
      write_ecdf_csv(ecdf, harness::ecdf({result.accuracy}));
      write_file(dir, "ecdf.csv", ecdf.str());
      if (spec.record_epochs) {
        std::ostringstream ep;
        const auto window_start = spec.cross_traffic ? spec.cross_traffic_head_start : sim::SimTime{0};
        write_epochs_csv(ep, result.epoch_log, window_start);
        write_file(dir, "epochs.csv", ep.str());
      }
      auto summary = base_summary("run", config);
      summary["overall_accuracy"] = result.accuracy;
      summary["result"] = result_json(result);
      write_file(dir, "summary.json", dump(summary));
    }
    if (f.golden) {
      json g;
      g["spec"] = config_json(config);
      g["result"] = result_json(result);
      const fs::path p = *f.golden;
      write_file(p.parent_path().empty() ? fs::path(".") : p.parent_path(), p.filename().string(),
                 dump(g));
    }
  } catch (const std::exception& e) {
    err << "error writing output: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

// --- grid ------------------------------------------------------------------

struct GridFlags {
  ScenarioFlags scenario;
  std::optional<std::string> qdisc, delays_ms, rates_mbps, reps, workers;
  std::optional<std::string> out_dir;
  bool compare_cc = false;
};

int cmd_grid(const GridFlags& f, std::ostream& out, std::ostream& err) {
  auto flags = f.scenario.overrides();
  if (f.qdisc) flags["qdisc"] = *f.qdisc;
  if (f.delays_ms) flags["delays_ms"] = *f.delays_ms;
  if (f.rates_mbps) flags["rates_mbps"] = *f.rates_mbps;
  if (f.reps) flags["reps"] = *f.reps;
  if (f.workers) flags["workers"] = *f.workers;
  if (f.compare_cc) flags["compare_cc"] = "true";

  auto settings = default_grid_settings();
  settings.workers = workers_from_env();
  try {
    auto kv = merged(f.scenario.config, flags);
    // A run's summary.json carries single-run keys; the grid axes replace them.
    kv.erase("delay_ms");
    kv.erase("rate_mbps");
    apply_grid_keys(kv, settings);
    harness::validate(settings.base);
    if (settings.compare_cc) {
      for (auto k : settings.qdiscs)
        if (k == qdisc::QdiscKind::DropTail)
          throw ConfigError("--compare-cc needs a fair-queuing qdisc (fq or fq_codel)");
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  // Keep every grid alive until the outputs are written.
  struct Block {
    qdisc::QdiscKind kind;
    harness::GridResult primary;
    std::optional<harness::Comparison> comparison;
  };
  std::vector<Block> blocks;
  for (auto kind : settings.qdiscs) {
    auto base = settings.base;
    base.qdisc_kind = kind;
    Block b{kind, {}, std::nullopt};
    if (settings.compare_cc) {
      b.comparison = harness::compare_cc(base, settings.delays, settings.rates, settings.reps,
                                         settings.workers);
      b.primary = b.comparison->tonopah;
    } else {
      b.primary =
          harness::run_grid(base, settings.delays, settings.rates, settings.reps, settings.workers);
    }
    out << "qdisc=" << qdisc::to_string(kind) << " runs=" << b.primary.cells.size()
        << " failures=" << b.primary.failures << " overall_accuracy="
        << format_fraction(b.primary.overall_accuracy)
        << " mean_utilization=" << format_fraction(b.primary.mean_utilization)
        << " mean_qdelay_ms=" << format_ms(b.primary.mean_qdelay) << '\n';
    if (b.comparison) {
      const auto& c = *b.comparison;
      out << "  compare-cc newreno: utilization=" << format_fraction(c.newreno_summary.mean_utilization)
          << " mean_qdelay_ms=" << format_ms(c.newreno_summary.mean_qdelay)
          << " | tonopah: utilization=" << format_fraction(c.tonopah_summary.mean_utilization)
          << " mean_qdelay_ms=" << format_ms(c.tonopah_summary.mean_qdelay);
      if (c.qdelay_test) out << " | welch p=" << c.qdelay_test->p;
      out << '\n';
    }
    blocks.push_back(std::move(b));
  }

  std::size_t failures = 0;
  std::vector<double> accuracies;
  for (const auto& b : blocks) {
    failures += b.primary.failures;
    if (b.comparison) failures += b.comparison->newreno.failures;
    for (const auto* r : b.primary.successful()) accuracies.push_back(r->accuracy);
    for (const auto& c : b.primary.cells)
      if (!c.result) err << "cell failed: " << c.error << '\n';
  }

  if (f.out_dir) {
    try {
      const fs::path dir = *f.out_dir;
      std::vector<RunRow> rows;
      std::vector<LabelledGrid> labelled;
      for (const auto& b : blocks) {
        auto add = [&](const harness::GridResult& g) {
          for (const auto& c : g.cells)
            rows.push_back(RunRow{c.rep, &c.spec, c.result ? &*c.result : nullptr, c.error});
          labelled.push_back({b.kind, &g});
        };
        if (b.comparison) add(b.comparison->newreno);
        add(b.primary);
      }
      std::ostringstream runs;
      write_runs_csv(runs, rows);
      write_file(dir, "runs.csv", runs.str());
      std::ostringstream ecdf;
      write_ecdf_csv(ecdf, harness::ecdf(accuracies));
      write_file(dir, "ecdf.csv", ecdf.str());
      std::ostringstream cells;
      write_cells_csv(cells, labelled);
      write_file(dir, "cells.csv", cells.str());

      auto summary = base_summary("grid", to_key_values(settings));
      summary["overall_accuracy"] = harness::mean(accuracies);
      summary["failures"] = failures;
      json per = json::object();
      json cmp = json::object();
      std::ostringstream comparison_csv;
      bool header = true;
      for (const auto& b : blocks) {
        const std::string name(qdisc::to_string(b.kind));
        per[name] = summary_of(b.primary);
        if (b.comparison) {
          cmp[name] = comparison_json(*b.comparison);
          write_comparison_csv(comparison_csv, b.kind, *b.comparison, header);
          header = false;
        }
      }
      summary["per_qdisc"] = per;
      if (settings.compare_cc) {
        summary["comparison"] = cmp;
        write_file(dir, "comparison.csv", comparison_csv.str());
      }
      write_file(dir, "summary.json", dump(summary));
    } catch (const std::exception& e) {
      err << "error writing output: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return failures == 0 ? kExitOk : kExitFailure;
}

// --- verify ----------------------------------------------------------------

struct Golden {
  fs::path path;
  KeyValues spec;
  json result;
};

Golden load_golden(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  const json doc = json::parse(in);
  Golden g{p, {}, doc.at("result")};
  for (const auto& [k, v] : doc.at("spec").items()) g.spec[k] = v.get<std::string>();
  return g;
}

int cmd_verify(const std::string& dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(dir)) {
    err << "error: goldens directory '" << dir << "' does not exist\n";
    return kExitFailure;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    err << "warning: no golden files in " << dir << '\n';
    return kExitOk;
  }

  std::size_t bad = 0;
  for (const auto& file : files) {
    const auto name = file.filename().string();
    try {
      const auto g = load_golden(file);
      const auto spec = harness::from_key_values(g.spec);
      const auto fresh = result_json(harness::run_scenario(spec));
      std::vector<std::string> diffs;
      for (const auto& [k, expected] : g.result.items()) {
        if (!fresh.contains(k)) {
          diffs.push_back(k + ": missing");
        } else if (fresh.at(k) != expected) {
          diffs.push_back(k + ": expected " + expected.dump() + ", got " + fresh.at(k).dump());
        }
      }
      if (diffs.empty()) {
        out << "ok       " << name << '\n';
      } else {
        ++bad;
        out << "MISMATCH " << name << '\n';
        for (const auto& d : diffs) out << "  " << d << '\n';
      }
    } catch (const std::exception& e) {
      ++bad;
      out << "ERROR    " << name << ": " << e.what() << '\n';
    }
  }
  out << (files.size() - bad) << "/" << files.size() << " goldens match\n";
  return bad == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Packet-level simulator for fair-queuing detection on NewReno", "tonopah"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "simulate one scenario");
  run.scenario.add_to(*run_cmd);
  run_cmd->add_option("--qdisc", run.qdisc, "pfifo, fq or fq_codel");
  run_cmd->add_option("--rate-mbps", run.rate_mbps, "bottleneck rate in Mbit/s");
  run_cmd->add_option("--delay-ms", run.delay_ms, "base delay in ms (RTT unless --delay-one-way)");
  run_cmd->add_option("--out", run.out_dir, "output directory");
  run_cmd->add_option("--golden", run.golden, "also record a golden file for `verify`");
  run_cmd->add_flag("--epochs", run.epochs, "record per-epoch detector state to epochs.csv");

  GridFlags grid;
  auto* grid_cmd = app.add_subcommand("grid", "sweep delays x rates x repetitions");
  grid.scenario.add_to(*grid_cmd);
  grid_cmd->add_option("--qdisc", grid.qdisc, "comma list of pfifo, fq, fq_codel");
  grid_cmd->add_option("--delays-ms", grid.delays_ms, "list or lo..hi/step (10,50,100)");
  grid_cmd->add_option("--rates-mbps", grid.rates_mbps, "list or lo..hi/step (10,50,100)");
  grid_cmd->add_option("--reps", grid.reps, "repetitions per cell (3)");
  grid_cmd->add_option("--workers", grid.workers, "parallel runs (TONOPAH_WORKERS, else all cores)");
  grid_cmd->add_option("--out", grid.out_dir, "output directory");
  grid_cmd->add_flag("--compare-cc", grid.compare_cc, "run plain NewReno and Tonopah on the same seeds");

  std::string goldens;
  auto* verify_cmd = app.add_subcommand("verify", "re-run golden scenarios and compare digests");
  verify_cmd->add_option("--goldens", goldens, "directory of golden JSON files")->required();

  std::vector<const char*> argv{"tonopah"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, out, err);
    if (*grid_cmd) return cmd_grid(grid, out, err);
    if (*verify_cmd) return cmd_verify(goldens, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace tonopah::cli
