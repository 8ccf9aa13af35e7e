#include "tonopah/harness/grid.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace tonopah::harness {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t base_seed, SimTime delay, BitRate rate, std::uint32_t rep) {
  std::uint64_t h = splitmix(base_seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(delay.count()));
  h = splitmix(h ^ rate.bits_per_second);
  h = splitmix(h ^ rep);
  return h;
}

std::vector<const RunResult*> GridResult::successful() const {
  std::vector<const RunResult*> out;
  for (const auto& c : cells)
    if (c.result) out.push_back(&*c.result);
  return out;
}

void aggregate(GridResult& grid) {
  std::vector<double> acc;
  std::vector<double> util;
  SimTime::rep qdelay_sum = 0;
  grid.failures = 0;
  for (const auto& c : grid.cells) {
    if (!c.result) {
      ++grid.failures;
      continue;
    }
    acc.push_back(c.result->accuracy);
    util.push_back(c.result->utilization);
    qdelay_sum += c.result->mean_qdelay.count();
  }
  grid.overall_accuracy = mean(acc);
  grid.mean_utilization = mean(util);
  grid.mean_qdelay = acc.empty() ? SimTime{0}
                                 : SimTime{qdelay_sum / static_cast<SimTime::rep>(acc.size())};
  grid.ecdf = ecdf(acc);
}

GridResult run_grid(const ScenarioSpec& base, const std::vector<SimTime>& delays,
                    const std::vector<BitRate>& rates, std::uint32_t reps, unsigned workers) {
  if (delays.empty() || rates.empty()) throw std::invalid_argument("grid axes must be non-empty");
  if (reps < 1) throw std::invalid_argument("grid needs at least one repetition");

  GridResult grid;
  for (auto d : delays)
    for (auto r : rates)
      for (std::uint32_t k = 0; k < reps; ++k) {
        GridCell cell{d, r, k, base, std::nullopt, {}};
        cell.spec.delay = d;
        cell.spec.link_rate = r;
        cell.spec.seed = cell_seed(base.seed, d, r, k);
        grid.cells.push_back(std::move(cell));
      }

  auto run_cell = [](GridCell& cell) {
    try {
      cell.result = run_scenario(cell.spec);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(grid.cells.size()));
  if (workers <= 1) {
    for (auto& c : grid.cells) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.cells.size(); i = next++) run_cell(grid.cells[i]);
      });
    }
  }
  aggregate(grid);
  return grid;
}

double Comparison::utilization_ratio() const {
  return tonopah_summary.mean_utilization == 0
             ? 0
             : newreno_summary.mean_utilization / tonopah_summary.mean_utilization;
}

double Comparison::qdelay_ratio() const {
  return newreno_summary.mean_qdelay.count() == 0
             ? 0
             : static_cast<double>(tonopah_summary.mean_qdelay.count()) /
                   static_cast<double>(newreno_summary.mean_qdelay.count());
}

Comparison compare_cc(const ScenarioSpec& base, const std::vector<SimTime>& delays,
                      const std::vector<BitRate>& rates, std::uint32_t reps, unsigned workers) {
  Comparison cmp;
  ScenarioSpec plain = base;
  plain.tonopah_enabled = false;
  ScenarioSpec with = base;
  with.tonopah_enabled = true;
  cmp.newreno = run_grid(plain, delays, rates, reps, workers);
  cmp.tonopah = run_grid(with, delays, rates, reps, workers);
  cmp.newreno_summary = {cmp.newreno.mean_utilization, cmp.newreno.mean_qdelay};
  cmp.tonopah_summary = {cmp.tonopah.mean_utilization, cmp.tonopah.mean_qdelay};

  std::vector<double> a;
  std::vector<double> b;
  for (const auto* r : cmp.newreno.successful()) a.push_back(sim::to_ms(r->mean_qdelay));
  for (const auto* r : cmp.tonopah.successful()) b.push_back(sim::to_ms(r->mean_qdelay));
  try {
    cmp.qdelay_test = welch_t_test(a, b);
  } catch (const StatisticsError& e) {
    cmp.qdelay_test_error = e.what();
  }

  for (std::size_t i = 0; i < cmp.newreno.cells.size(); i += reps) {
    CellComparison cc{cmp.newreno.cells[i].delay, cmp.newreno.cells[i].rate, {}, {}, 0, 0};
    SimTime::rep nq = 0;
    SimTime::rep tq = 0;
    std::uint32_t n = 0;
    for (std::uint32_t k = 0; k < reps; ++k) {
      const auto& nr = cmp.newreno.cells[i + k].result;
      const auto& tr = cmp.tonopah.cells[i + k].result;
      if (!nr || !tr) continue;
      nq += nr->mean_qdelay.count();
      tq += tr->mean_qdelay.count();
      cc.newreno_utilization += nr->utilization;
      cc.tonopah_utilization += tr->utilization;
      ++n;
    }
    if (n > 0) {
      cc.newreno_qdelay = SimTime{nq / n};
      cc.tonopah_qdelay = SimTime{tq / n};
      cc.newreno_utilization /= n;
      cc.tonopah_utilization /= n;
    }
    cmp.per_cell.push_back(cc);
  }
  return cmp;
}

}  // namespace tonopah::harness
