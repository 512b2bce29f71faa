#include "qdiscrim/output.hpp"

#include <array>
#include <charconv>

namespace qdiscrim {

namespace {

void header(std::ostream& out, const char* kind, const char* columns) {
  out << "# qdiscrim " << kind << " schema v" << kCsvSchemaVersion
      << "; frequencies in gamma, times in 1/gamma\n"
      << columns << '\n';
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

void write_trajectory_csv(std::ostream& out, const SimulationResult& sim) {
  header(out, "trajectory", "time,x,y,z,dY");
  const auto& states = sim.truth.states;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const BlochVector b = density_to_bloch(states[k]);
    out << format_double(sim.record.grid.time(k)) << ',' << format_double(b.x) << ','
        << format_double(b.y) << ',' << format_double(b.z) << ',';
    if (k > 0) out << format_double(sim.record.dY[k - 1]);
    out << '\n';
  }
}

void write_discriminate_csv(std::ostream& out, const SimGrid& grid, const TrialResult& trial,
                            const TrialTrace& trace) {
  header(out, "discriminate",
         "time,x0,y0,z0,x1,y1,z1,loglik0,loglik1,log_ratio,p0,p1,cond_error,decision");
  for (std::size_t k = 0; k < trial.posterior_path.size(); ++k) {
    const BlochVector& b0 = trace.bloch0[k];
    const BlochVector& b1 = trace.bloch1[k];
    const Decision& d = trial.decision_path[k];
    out << format_double(grid.time(k)) << ',' << format_double(b0.x) << ',' << format_double(b0.y)
        << ',' << format_double(b0.z) << ',' << format_double(b1.x) << ',' << format_double(b1.y)
        << ',' << format_double(b1.z) << ',' << format_double(trace.loglik0[k]) << ','
        << format_double(trace.loglik1[k]) << ',' << format_double(d.log_ratio) << ','
        << format_double(trial.posterior_path[k].p0) << ','
        << format_double(trial.posterior_path[k].p1) << ','
        << format_double(trial.conditional_error_path[k]) << ',' << to_string(d.accepted) << '\n';
  }
}

void write_qe_csv(std::ostream& out, const QeCurve& curve) {
  header(out, "qe", "time,qe,stderr,n_trials,estimator");
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    out << format_double(curve.times[k]) << ',' << format_double(curve.qe[k]) << ','
        << format_double(curve.std_error[k]) << ',' << curve.n_trials << ','
        << to_string(curve.estimator) << '\n';
  }
}

void write_bench_csv(std::ostream& out, const BenchTable& table) {
  header(out, "bench", "n_trials,estimator,first_passage_time,wall_clock_seconds,seed");
  for (const BenchRow& row : table) {
    out << row.n_trials << ',' << to_string(row.estimator) << ','
        << format_optional(row.first_passage_time) << ',' << format_double(row.wall_clock_seconds)
        << ',' << row.seed << '\n';
  }
}

}  // namespace qdiscrim
