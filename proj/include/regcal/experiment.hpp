#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "regcal/types.hpp"

namespace regcal {

// Runs body(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). Work is assigned by index, so results never depend on the
// thread count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

// n i.i.d. uniform draws from the box. Draw i depends only on (seed, i),
// so a prefix of a larger design equals a smaller design with the same seed.
std::vector<std::vector<double>> sample_parameters(const ParameterSpace& space,
                                                   std::size_t n,
                                                   std::uint64_t seed);

// Samples n parameter vectors and runs the simulator once per row with a
// per-row derived run seed. Simulator failures are rethrown as
// SimulationError naming the row, theta and run seed.
ExperimentTable run_experiment(const Simulator& sim, const ParameterSpace& space,
                               std::size_t n, std::uint64_t seed, int jobs = 0);

// Deterministic disjoint partition: floor(fraction*n) rows in the first
// table, remainder in the second. Row order within each part follows the
// parent table.
std::pair<ExperimentTable, ExperimentTable> split_table(const ExperimentTable& table,
                                                        double fraction,
                                                        std::uint64_t seed);

std::uint64_t run_seed_for_row(std::uint64_t table_seed, std::size_t row);

}  // namespace regcal
