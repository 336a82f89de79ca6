#include "netkde/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netkde/parallel.hpp"

namespace netkde {

namespace {

constexpr std::size_t kDirectBlock = 16;

// Mean of x computed relative to x[0], so identical entries give x[0] exactly.
double anchored_mean(const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += x[i] - x[0];
  return x[0] + acc / static_cast<double>(x.size());
}

}  // namespace

BandwidthSet abramson_bandwidths(const PointPattern& pattern, const LatticeFunction& pilot,
                                 double global, GammaMode mode) {
  if (pattern.empty()) throw Error(ErrorCode::EmptyPattern, "point pattern is empty");
  if (!(global > 0.0)) throw Error(ErrorCode::InvalidArgument, "global bandwidth must be positive");
  const auto n = static_cast<Eigen::Index>(pattern.size());
  const double count = static_cast<double>(n);

  Eigen::VectorXd at_points(n);
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = pilot.at(pattern[static_cast<std::size_t>(i)]);
    if (!(v >= kPilotFloor)) {
      v = kPilotFloor;
      ++clamped;
    }
    at_points[i] = v;
  }

  Eigen::VectorXd h(n);
  double gamma;
  if (mode == GammaMode::ScaleFree) {
    // Work with ratios to the first pilot value so any common scale cancels
    // before logarithms are taken.
    Eigen::VectorXd log_factor(n);
    for (Eigen::Index i = 0; i < n; ++i) log_factor[i] = -0.5 * std::log(at_points[i] / at_points[0]);
    const double mean = anchored_mean(log_factor);
    for (Eigen::Index i = 0; i < n; ++i) h[i] = global * std::exp(log_factor[i] - mean);
    gamma = std::exp(mean - 0.5 * std::log(at_points[0] / count));
  } else {
    Eigen::VectorXd log_term(n);
    for (Eigen::Index i = 0; i < n; ++i) log_term[i] = -2.0 * std::log(at_points[i]);
    gamma = std::exp(anchored_mean(log_term));
    for (Eigen::Index i = 0; i < n; ++i) h[i] = global / gamma * std::sqrt(count / at_points[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(h[i] > 0.0) || !std::isfinite(h[i])) {
      std::ostringstream msg;
      msg << "bandwidth for point " << i << " is not finite and positive (" << h[i] << ")";
      throw Error(ErrorCode::NonpositivePilot, msg.str());
    }
  }
  return BandwidthSet{global, mode, pilot, std::move(at_points), std::move(h), gamma, clamped};
}

double recompute_gamma(const BandwidthSet& bw) {
  const auto n = bw.pilot_at_points.size();
  Eigen::VectorXd logs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    logs[i] = bw.mode == GammaMode::ScaleFree
                  ? -0.5 * std::log(bw.pilot_at_points[i] / static_cast<double>(n))
                  : -2.0 * std::log(bw.pilot_at_points[i]);
  }
  return std::exp(anchored_mean(logs));
}

LatticeFunction pilot_estimate(const PointPattern& pattern, double global, const HeatConfig& cfg) {
  auto lattice = discretize(pattern.network_ptr(), default_dx(pattern.network(), global));
  return estimate_heat(pattern, lattice, global, cfg);
}

double heuristic_global_bandwidth(const LinearNetwork& net, std::size_t n) {
  return net.total_length() / (2.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1))));
}

int bins_for_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::BadDelta, "delta must lie in (0, 1]");
  }
  const double inv = 1.0 / delta;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-9) {
    throw Error(ErrorCode::BadDelta, "1/delta must be an integer");
  }
  return static_cast<int>(rounded);
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<std::vector<std::size_t>> PartitionPlan::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

PartitionPlan make_partition(const Eigen::VectorXd& bandwidths, double delta) {
  const int bins = bins_for_delta(delta);
  if (bandwidths.size() == 0) throw Error(ErrorCode::EmptyPattern, "no bandwidths to partition");
  std::vector<double> sorted(bandwidths.data(), bandwidths.data() + bandwidths.size());
  std::sort(sorted.begin(), sorted.end());

  PartitionPlan plan;
  plan.delta = delta;
  plan.bins = bins;
  plan.edges.resize(bins + 1);
  plan.edges.front() = sorted.front();
  plan.edges.back() = sorted.back();
  for (int k = 1; k < bins; ++k) {
    plan.edges[k] = quantile_type7(sorted, static_cast<double>(k) / bins);
  }
  plan.midpoints.resize(bins);
  for (int d = 0; d < bins; ++d) plan.midpoints[d] = 0.5 * (plan.edges[d] + plan.edges[d + 1]);

  plan.assignment.resize(static_cast<std::size_t>(bandwidths.size()));
  for (Eigen::Index i = 0; i < bandwidths.size(); ++i) {
    // First upper edge >= h; the lowest bin is closed on the left.
    const auto it = std::lower_bound(plan.edges.begin() + 1, plan.edges.end(), bandwidths[i]);
    plan.assignment[static_cast<std::size_t>(i)] =
        static_cast<int>(std::distance(plan.edges.begin() + 1, it));
  }
  return plan;
}

PartitionPlan make_partition(const BandwidthSet& bw, double delta) {
  return make_partition(bw.bandwidths, delta);
}

double adaptive_dx(const LinearNetwork& net, const BandwidthSet& bw) {
  return default_dx(net, bw.bandwidths.minCoeff());
}

LatticeFunction estimate_adaptive_direct(const PointPattern& pattern,
                                         std::shared_ptr<const Lattice> lattice,
                                         const BandwidthSet& bw, const HeatConfig& cfg, int jobs) {
  if (static_cast<std::size_t>(bw.bandwidths.size()) != pattern.size()) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth count does not match the pattern");
  }
  const HeatOperator op(lattice, cfg);
  LatticeFunction total(lattice);
  const std::size_t n = pattern.size();
  const std::size_t blocks = (n + kDirectBlock - 1) / kDirectBlock;
  const std::size_t wave = static_cast<std::size_t>(std::max(1, jobs));

  // Fixed-size blocks summed in block order keep the result independent of
  // the number of workers.
  for (std::size_t first = 0; first < blocks; first += wave) {
    const std::size_t count = std::min(wave, blocks - first);
    std::vector<Eigen::VectorXd> partial(count, Eigen::VectorXd::Zero(lattice->size()));
    parallel_for(count, jobs, [&](std::size_t b) {
      const std::size_t lo = (first + b) * kDirectBlock;
      const std::size_t hi = std::min(n, lo + kDirectBlock);
      for (std::size_t i = lo; i < hi; ++i) {
        const NetworkLocation p = pattern[i];
        const LatticeFunction f0 = deposit_initial_mass(std::span<const NetworkLocation>(&p, 1), lattice);
        const double h = bw.bandwidths[static_cast<Eigen::Index>(i)];
        partial[b] += heat_solve(f0, h * h, op).values();
      }
    });
    for (const auto& p : partial) total.values() += p;
  }
  return total;
}

LatticeFunction estimate_adaptive_partition(const PointPattern& pattern,
                                            std::shared_ptr<const Lattice> lattice,
                                            const BandwidthSet& bw, double delta,
                                            const HeatConfig& cfg, BatchSchedule schedule,
                                            int jobs) {
  if (static_cast<std::size_t>(bw.bandwidths.size()) != pattern.size()) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth count does not match the pattern");
  }
  const PartitionPlan plan = make_partition(bw, delta);
  const auto members = plan.members();
  std::vector<BandwidthSubset> subsets;
  for (int d = 0; d < plan.bins; ++d) {
    if (members[d].empty()) continue;
    BandwidthSubset s;
    s.bandwidth = plan.midpoints[d];
    for (std::size_t i : members[d]) s.points.push_back(pattern[i]);
    subsets.push_back(std::move(s));
  }
  return estimate_heat_batch(subsets, std::move(lattice), cfg, schedule, jobs);
}

}  // namespace netkde
