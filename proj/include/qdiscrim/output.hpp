#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "qdiscrim/montecarlo.hpp"

namespace qdiscrim {

/// Bumped whenever a CSV column set changes.
inline constexpr int kCsvSchemaVersion = 1;

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

/// time, x, y, z, dY. dY on row k is the increment over (t_{k-1}, t_k]; empty on row 0.
void write_trajectory_csv(std::ostream& out, const SimulationResult& sim);

/// time, x0, y0, z0, x1, y1, z1, loglik0, loglik1, log_ratio, p0, p1, cond_error, decision
void write_discriminate_csv(std::ostream& out, const SimGrid& grid, const TrialResult& trial,
                            const TrialTrace& trace);

/// time, qe, stderr, n_trials, estimator
void write_qe_csv(std::ostream& out, const QeCurve& curve);

/// n_trials, estimator, first_passage_time, wall_clock_seconds, seed
void write_bench_csv(std::ostream& out, const BenchTable& table);

}  // namespace qdiscrim
