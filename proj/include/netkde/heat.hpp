#pragma once

#include <span>
#include <vector>

#include "netkde/lattice.hpp"
#include "netkde/network.hpp"

namespace netkde {

/// Explicit finite-difference settings for diffusion on a lattice.
///
/// With diffusivity 1/2 the variance of the heat kernel after time t is t, so
/// smoothing with bandwidth sigma means solving to t = sigma^2.
struct HeatConfig {
  double diffusivity = 0.5;
  double stability = 0.9;  // alpha in (0, 1]

  /// Uniform time step alpha * dx_min^2 / (2 * diffusivity).
  double time_step(const Lattice& lattice) const;
  void validate() const;
};

/// Default lattice spacing for smoothing at bandwidths >= `sigma_min`:
/// min(sigma_min / 3, shortest edge length).
double default_dx(const LinearNetwork& net, double sigma_min);

/// Unit mass per point, split linearly between the two bracketing lattice
/// nodes and divided by node weight, so the discrete mass equals the count.
LatticeFunction deposit_initial_mass(std::span<const NetworkLocation> points,
                                     std::shared_ptr<const Lattice> lattice);
LatticeFunction deposit_initial_mass(const PointPattern& pattern,
                                     std::shared_ptr<const Lattice> lattice);

/// Conservative graph Laplacian of a lattice in CSR form:
/// (L f)_i = (1 / w_i) * sum_j diffusivity * (f_j - f_i) / h_ij.
class HeatOperator {
 public:
  HeatOperator(std::shared_ptr<const Lattice> lattice, const HeatConfig& cfg);

  const Lattice& lattice() const { return *lattice_; }
  double time_step() const { return dt_; }

  /// out = f + tau * L f. Throws StabilityViolation if tau exceeds the
  /// largest step that keeps the update a convex combination.
  void step(const Eigen::VectorXd& f, Eigen::VectorXd& out, double tau) const;

  /// Applies `count` full steps in place.
  void advance(Eigen::VectorXd& f, long count) const;

  /// Largest stable step: 1 / max_i sum_j c_ij.
  double max_stable_step() const { return max_stable_; }

 private:
  std::shared_ptr<const Lattice> lattice_;
  double dt_;
  double max_stable_;
  std::vector<std::size_t> offsets_;
  std::vector<Eigen::Index> cols_;
  std::vector<double> coeffs_;
};

/// One explicit Euler step with the configured time step.
LatticeFunction heat_step(const LatticeFunction& f, const HeatConfig& cfg);

/// Solves the heat equation to time t: one shortened step of t - n*dt followed
/// by n = floor(t / dt) full steps. t = 0 returns f0 unchanged.
LatticeFunction heat_solve(const LatticeFunction& f0, double t, const HeatConfig& cfg);
LatticeFunction heat_solve(const LatticeFunction& f0, double t, const HeatOperator& op);

/// Fixed-bandwidth diffusion estimate: solve from the point masses to sigma^2.
LatticeFunction estimate_heat(const PointPattern& pattern,
                              std::shared_ptr<const Lattice> lattice, double sigma,
                              const HeatConfig& cfg);

struct BandwidthSubset {
  std::vector<NetworkLocation> points;
  double bandwidth = 0.0;
};

enum class BatchSchedule {
  /// One pass to the largest time; smaller-bandwidth masses join on the way.
  Incremental,
  /// Sum of separate solves (reference route, parallel over subsets).
  Independent,
};

/// sum_d heat_solve(deposit(subset_d), sigma_d^2). Throws OverlappingSubsets if
/// the same location appears in two subsets.
LatticeFunction estimate_heat_batch(std::span<const BandwidthSubset> subsets,
                                    std::shared_ptr<const Lattice> lattice,
                                    const HeatConfig& cfg,
                                    BatchSchedule schedule = BatchSchedule::Incremental,
                                    int jobs = 1);

}  // namespace netkde
