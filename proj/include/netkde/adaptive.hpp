#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "netkde/heat.hpp"
#include "netkde/lattice.hpp"

namespace netkde {

/// How the geometric-mean normalizer is formed.
enum class GammaMode {
  /// gamma = geometric mean of (pilot / n)^(-1/2); a constant pilot returns the
  /// global bandwidth and any rescaling of the pilot cancels.
  ScaleFree,
  /// gamma = exp(mean log(pilot^-2)) with h = (global / gamma) sqrt(n / pilot).
  /// Not scale-free; kept for comparison.
  Literal,
};

inline constexpr double kPilotFloor = 1e-12;

struct BandwidthSet {
  double global = 0.0;
  GammaMode mode = GammaMode::ScaleFree;
  LatticeFunction pilot;
  Eigen::VectorXd pilot_at_points;  // after flooring
  Eigen::VectorXd bandwidths;
  double gamma = 1.0;
  std::size_t clamped = 0;  // points whose pilot fell below kPilotFloor
};

/// Abramson square-root rule: h_i proportional to pilot(u_i)^(-1/2),
/// normalized by a geometric mean. Pilot values are read by linear
/// interpolation and floored at kPilotFloor.
BandwidthSet abramson_bandwidths(const PointPattern& pattern, const LatticeFunction& pilot,
                                 double global, GammaMode mode = GammaMode::ScaleFree);

/// gamma recomputed from the stored pilot values (self-consistency check).
double recompute_gamma(const BandwidthSet& bw);

/// Fixed-bandwidth heat estimate at the global bandwidth on its own lattice.
LatticeFunction pilot_estimate(const PointPattern& pattern, double global, const HeatConfig& cfg);

/// |L| / (2 sqrt(n)): a rough starting point, not a selector.
double heuristic_global_bandwidth(const LinearNetwork& net, std::size_t n);

/// Number of bins D = 1/delta; throws BadDelta unless that is an integer
/// (within 1e-9) and delta is in (0, 1].
int bins_for_delta(double delta);

/// Linear-interpolation empirical quantile of sorted data.
double quantile_type7(const std::vector<double>& sorted, double p);

struct PartitionPlan {
  double delta = 1.0;
  int bins = 1;
  std::vector<double> edges;      // bins + 1 quantiles
  std::vector<double> midpoints;  // bins
  std::vector<int> assignment;    // point index -> bin

  /// Point indices per bin, in ascending order.
  std::vector<std::vector<std::size_t>> members() const;
};

/// Quantile bins [q0, q_delta], (q_delta, q_2delta], ..., (q_(1-delta), q1].
PartitionPlan make_partition(const Eigen::VectorXd& bandwidths, double delta);
PartitionPlan make_partition(const BandwidthSet& bw, double delta);

/// Lattice spacing for an adaptive estimate: default_dx at the smallest bandwidth.
double adaptive_dx(const LinearNetwork& net, const BandwidthSet& bw);

/// Sum of n single-point heat solves, each to its own h_i^2.
LatticeFunction estimate_adaptive_direct(const PointPattern& pattern,
                                         std::shared_ptr<const Lattice> lattice,
                                         const BandwidthSet& bw, const HeatConfig& cfg,
                                         int jobs = 1);

/// Partition approximation: one fixed-bandwidth solve per quantile bin at the
/// bin midpoint.
LatticeFunction estimate_adaptive_partition(const PointPattern& pattern,
                                            std::shared_ptr<const Lattice> lattice,
                                            const BandwidthSet& bw, double delta,
                                            const HeatConfig& cfg,
                                            BatchSchedule schedule = BatchSchedule::Incremental,
                                            int jobs = 1);

}  // namespace netkde
