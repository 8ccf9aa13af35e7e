#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tonopah/cli/commands.hpp"
#include "tonopah/cli/config_file.hpp"
#include "tonopah/cli/output.hpp"

using namespace tonopah;
using namespace tonopah::cli;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("tonopah_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("delay axis parsing") {
    CHECK(parse_delay_axis("10,50,100") == std::vector<sim::SimTime>{10ms, 50ms, 100ms});
    const auto range = parse_delay_axis("10..100/10");
    REQUIRE(range.size() == 10);
    CHECK(range.front() == sim::SimTime{10ms});
    CHECK(range.back() == sim::SimTime{100ms});
    CHECK(parse_delay_axis("0.5") == std::vector<sim::SimTime>{500us});
    CHECK(parse_delay_axis("5, 1..3/1") == std::vector<sim::SimTime>{5ms, 1ms, 2ms, 3ms});
    CHECK_THROWS_AS(parse_delay_axis(""), ConfigError);
    CHECK_THROWS_AS(parse_delay_axis("10..5/1"), ConfigError);
    CHECK_THROWS_AS(parse_delay_axis("1..5/0"), ConfigError);
    CHECK_THROWS_AS(parse_delay_axis("ten"), ConfigError);
    CHECK(format_delay_axis(range) == "10,20,30,40,50,60,70,80,90,100");
  }

  TEST_CASE("rate axis and qdisc list") {
    CHECK(parse_rate_axis("10,50") == std::vector<sim::BitRate>{sim::BitRate::mbps(10), sim::BitRate::mbps(50)});
    CHECK(parse_rate_axis("1.5") == std::vector<sim::BitRate>{sim::BitRate{1'500'000}});
    CHECK(format_rate_axis(parse_rate_axis("10..30/10")) == "10,20,30");
    CHECK(parse_qdisc_list("fq,fq_codel") ==
          std::vector<qdisc::QdiscKind>{qdisc::QdiscKind::FqDrr, qdisc::QdiscKind::FqCodel});
    CHECK_THROWS_AS(parse_qdisc_list("fq,red"), ConfigError);
    CHECK(format_qdisc_list({qdisc::QdiscKind::DropTail, qdisc::QdiscKind::FqCodel}) == "pfifo,fq_codel");
  }

  TEST_CASE("config text format") {
    const auto kv = parse_config_text("# comment\nqdisc = fq\n\n  seed=9  # trailing\nreps = 2\n");
    CHECK(kv.at("qdisc") == "fq");
    CHECK(kv.at("seed") == "9");
    CHECK(kv.at("reps") == "2");
    CHECK(kv.size() == 3);
    CHECK_THROWS_AS(parse_config_text("justakey\n"), ConfigError);
  }

  TEST_CASE("config json format") {
    const auto flat = parse_config_json(R"({"qdisc": "fq_codel", "reps": 4, "cross_traffic": true})");
    CHECK(flat.at("qdisc") == "fq_codel");
    CHECK(flat.at("reps") == "4");
    CHECK(flat.at("cross_traffic") == "true");
    const auto nested = parse_config_json(R"({"tool": "tonopah", "config": {"seed": "5"}})");
    CHECK(nested.at("seed") == "5");
    CHECK(nested.count("tool") == 0);
    CHECK_THROWS_AS(parse_config_json("{not json"), ConfigError);
  }

  TEST_CASE("grid keys apply and echo back") {
    auto settings = default_grid_settings();
    CHECK(settings.delays.size() == 3);
    CHECK(settings.rates.size() == 3);
    apply_grid_keys({{"qdisc", "fq,fq_codel"}, {"delays_ms", "10,20"}, {"reps", "5"}, {"seed", "3"}},
                    settings);
    CHECK(settings.qdiscs.size() == 2);
    CHECK(settings.base.qdisc_kind == qdisc::QdiscKind::FqDrr);
    CHECK(settings.reps == 5);
    CHECK(settings.base.seed == 3);
    const auto echo = to_key_values(settings);
    CHECK(echo.at("qdisc") == "fq,fq_codel");
    CHECK(echo.at("delays_ms") == "10,20");
    CHECK(echo.count("delay_ms") == 0);
    auto again = default_grid_settings();
    apply_grid_keys(echo, again);
    CHECK(to_key_values(again) == echo);
    CHECK_THROWS(apply_grid_keys({{"bogus", "1"}}, settings));
  }

  TEST_CASE("millisecond formatting rounds half up") {
    CHECK(format_ms(sim::SimTime{1'234'500}) == "1.235");
    CHECK(format_ms(sim::SimTime{1'234'499}) == "1.234");
    CHECK(format_ms(sim::SimTime{0}) == "0.000");
    CHECK(format_ms(sim::SimTime{90'000'000'000}) == "90000.000");
    CHECK(format_fraction(0.5) == "0.500000");
  }

  TEST_CASE("usage errors exit with 2") {
    CHECK(invoke({}).code == kExitUsage);
    CHECK(invoke({"run", "--no-such-flag"}).code == kExitUsage);
    CHECK(invoke({"run", "--rate-mbps", "abc"}).code == kExitUsage);
    CHECK(invoke({"grid", "--qdisc", "pfifo", "--compare-cc"}).code == kExitUsage);
    CHECK(invoke({"--help"}).code == kExitOk);
  }

  TEST_CASE("run writes its outputs") {
    const auto dir = scratch_dir("run");
    const auto r = invoke({"run", "--qdisc", "fq", "--rate-mbps", "10", "--delay-ms", "20",
                        "--duration-s", "5", "--epochs", "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("digest=0x") != std::string::npos);
    const auto runs = slurp(dir / "runs.csv");
    CHECK(runs.rfind(std::string(kRunsHeader) + "\n", 0) == 0);
    CHECK(slurp(dir / "ecdf.csv").rfind(kEcdfHeader, 0) == 0);
    CHECK(slurp(dir / "epochs.csv").rfind(kEpochsHeader, 0) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("command") == "run");
    CHECK(summary.at("config").at("qdisc") == "fq");

    // The summary replays as a config file.
    const auto dir2 = scratch_dir("run_replay");
    REQUIRE(invoke({"run", "--config", (dir / "summary.json").string(), "--out", dir2.string()}).code == kExitOk);
    CHECK(slurp(dir2 / "runs.csv") == runs);
  }

  TEST_CASE("grid writes per-qdisc cells and rejects invalid specs") {
    const auto dir = scratch_dir("grid");
    const auto r = invoke({"grid", "--qdisc", "pfifo,fq", "--delays-ms", "10", "--rates-mbps", "10",
                        "--reps", "1", "--duration-s", "3", "--workers", "2", "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    const auto cells = slurp(dir / "cells.csv");
    CHECK(cells.rfind(kCellsHeader, 0) == 0);
    CHECK(std::count(cells.begin(), cells.end(), '\n') == 3);
    const auto bad = invoke({"grid", "--delays-ms", "10", "--rates-mbps", "10", "--reps", "1",
                          "--duration-s", "0", "--out", scratch_dir("grid_bad").string()});
    CHECK(bad.code == kExitUsage);
  }

  TEST_CASE("verify accepts the recorded goldens") {
    const auto r = invoke({"verify", "--goldens", TONOPAH_GOLDENS_DIR});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("MISMATCH") == std::string::npos);
    CHECK(r.out.find("goldens match") != std::string::npos);
  }

  TEST_CASE("verify flags a golden whose seed was changed") {
    const auto dir = scratch_dir("verify_perturbed");
    const fs::path src = fs::path(TONOPAH_GOLDENS_DIR) / "pfifo_10mbps_20ms.json";
    auto golden = nlohmann::json::parse(slurp(src));
    golden["spec"]["seed"] = "12";
    std::ofstream(dir / "perturbed.json") << golden.dump(2);
    const auto r = invoke({"verify", "--goldens", dir.string()});
    CHECK(r.code == kExitFailure);
    CHECK(r.out.find("MISMATCH") != std::string::npos);
    CHECK(r.out.find("seed") != std::string::npos);
    CHECK(r.out.find("digest") != std::string::npos);
  }

  TEST_CASE("verify on an empty directory warns and succeeds") {
    const auto r = invoke({"verify", "--goldens", scratch_dir("verify_empty").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(invoke({"verify", "--goldens", "/nonexistent/tonopah"}).code == kExitFailure);
  }
}
