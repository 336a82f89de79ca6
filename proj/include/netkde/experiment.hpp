#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "netkde/adaptive.hpp"
#include "netkde/heat.hpp"
#include "netkde/lattice.hpp"
#include "netkde/sim.hpp"

namespace netkde {

/// Integrated squared error sum_i w_i (a_i - b_i)^2 over a shared lattice.
double ise(const LatticeFunction& estimate, const LatticeFunction& reference);

inline const std::vector<double> kStudyDeltas{0.1, 0.05, 0.025, 0.01};

struct StudyOptions {
  std::string scenario = "loggaussian-1";
  std::vector<double> deltas = kStudyDeltas;
  int replicates = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  SimulationOptions simulation;
  double sim_dx = 0.01;           // lattice spacing used to draw patterns
  double global_bandwidth = 0.0;  // <= 0 selects heuristic_global_bandwidth per replicate
  double dx = 0.0;                // <= 0 selects adaptive_dx per replicate
  GammaMode gamma = GammaMode::ScaleFree;
  BatchSchedule schedule = BatchSchedule::Independent;
  HeatConfig heat;
  bool timing = true;
};

struct StudyRow {
  std::string scenario;
  int replicate = 0;
  double delta = 0.0;
  std::size_t n_points = 0;
  double ise = 0.0;
  double time_direct_s = 0.0;
  double time_partition_s = 0.0;
  double time_ratio = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;  // replicate-major, deltas in option order
  std::vector<double> dx_used;
  std::vector<double> global_used;
};

/// Simulates `replicates` patterns on `net` (which must lie in the unit
/// square) and compares each partition estimate with the direct adaptive
/// estimate. Replicate r uses seed + r. One untimed warmup run precedes the
/// timed replicates.
StudyResult run_partition_study(std::shared_ptr<const LinearNetwork> net, const StudyOptions& options);

/// Columns scenario, replicate, delta, n_points, ise, time_direct_s,
/// time_partition_s, time_ratio. Timing columns hold NA when `timing` is false.
void write_study_csv(const StudyResult& result, std::ostream& out, bool timing = true);

struct DeltaSummary {
  double delta = 0.0;
  double median_ise = 0.0;
  double median_time_ratio = 0.0;
  double median_n_points = 0.0;
};

std::vector<DeltaSummary> summarize_study(const StudyResult& result, const std::vector<double>& deltas);

double median(std::vector<double> values);

}  // namespace netkde
