#include "regcal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "regcal/csv.hpp"
#include "regcal/rng.hpp"

namespace regcal {

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(hw, 1u);
  workers = std::min<std::size_t>(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t run_seed_for_row(std::uint64_t table_seed, std::size_t row) {
  return derive_seed(table_seed, SeedStream::run, row);
}

std::vector<std::vector<double>> sample_parameters(const ParameterSpace& space,
                                                   std::size_t n,
                                                   std::uint64_t seed) {
  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, SeedStream::draw, i));
    std::vector<double> theta(space.size());
    for (std::size_t k = 0; k < space.size(); ++k) {
      theta[k] = rng.uniform(space.at(k).low, space.at(k).high);
    }
    out[i] = std::move(theta);
  }
  return out;
}

namespace {

std::string format_theta(const std::vector<double>& theta) {
  std::string out = "(";
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (k) out += ", ";
    out += csv::format_double(theta[k]);
  }
  out += ")";
  return out;
}

}  // namespace

ExperimentTable run_experiment(const Simulator& sim, const ParameterSpace& space,
                               std::size_t n, std::uint64_t seed, int jobs) {
  auto thetas = sample_parameters(space, n, seed);
  std::vector<SummaryVector> results(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    std::uint64_t run_seed = run_seed_for_row(seed, i);
    try {
      results[i] = sim.run(thetas[i], run_seed);
    } catch (const std::exception& e) {
      throw SimulationError("simulator failed on row " + std::to_string(i) +
                            ", theta=" + format_theta(thetas[i]) + ", run_seed=" +
                            std::to_string(run_seed) + ": " + e.what());
    }
  });

  std::vector<std::string> names;
  std::vector<std::vector<double>> stats(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      names = results[i].names;
    } else if (results[i].names != names) {
      throw SimulationError("simulator changed statistic names on row " +
                            std::to_string(i));
    }
    stats[i] = std::move(results[i].values);
  }
  if (n == 0) {
    // An empty experiment still needs statistic names; run the simulator
    // once at the box midpoint to learn them, discarding the draw.
    std::vector<double> mid(space.size());
    for (std::size_t k = 0; k < space.size(); ++k) {
      mid[k] = 0.5 * (space.at(k).low + space.at(k).high);
    }
    names = sim.run(mid, derive_seed(seed, SeedStream::run, 0)).names;
  }
  return ExperimentTable(space, std::move(names), std::move(thetas),
                         std::move(stats), seed);
}

std::pair<ExperimentTable, ExperimentTable> split_table(const ExperimentTable& table,
                                                        double fraction,
                                                        std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("split fraction must lie in [0,1]");
  }
  std::size_t n = table.n();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, SeedStream::split, 0));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  std::size_t n_first = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<std::size_t> first(order.begin(), order.begin() + n_first);
  std::vector<std::size_t> second(order.begin() + n_first, order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {table.subset(first, derive_seed(seed, SeedStream::split, 1)),
          table.subset(second, derive_seed(seed, SeedStream::split, 2))};
}

}  // namespace regcal
