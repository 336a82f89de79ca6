#include "netkde/heat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "netkde/parallel.hpp"

namespace netkde {

namespace {

struct Split {
  long full_steps;
  double remainder;
};

Split split_time(double t, double dt) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "diffusion time must be finite and nonnegative");
  }
  const double ratio = t / dt;
  if (ratio > 1e11) {
    throw Error(ErrorCode::InvalidArgument, "diffusion time needs too many steps; increase dx");
  }
  const auto n = static_cast<long>(std::floor(ratio));
  const double r = std::max(0.0, t - static_cast<double>(n) * dt);
  return {n, r};
}

void check_same_network(const Lattice& lattice, const LinearNetwork& net) {
  if (&lattice.network() != &net) {
    throw Error(ErrorCode::LatticeMismatch, "pattern and lattice use different networks");
  }
}

}  // namespace

double HeatConfig::time_step(const Lattice& lattice) const {
  validate();
  const double h = lattice.min_spacing();
  return stability * h * h / (2.0 * diffusivity);
}

void HeatConfig::validate() const {
  if (!(diffusivity > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "diffusivity must be positive");
  }
  if (!(stability > 0.0 && stability <= 1.0)) {
    std::ostringstream msg;
    msg << "stability factor " << stability << " outside (0, 1]";
    throw Error(ErrorCode::StabilityViolation, msg.str());
  }
}

double default_dx(const LinearNetwork& net, double sigma_min) {
  if (!(sigma_min > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  }
  return std::min(sigma_min / 3.0, net.min_edge_length());
}

LatticeFunction deposit_initial_mass(std::span<const NetworkLocation> points,
                                     std::shared_ptr<const Lattice> lattice) {
  LatticeFunction f(lattice);
  Eigen::VectorXd& v = f.values();
  for (const auto& p : points) {
    const Bracket b = lattice->bracket(p);
    v[b.lower] += (1.0 - b.fraction) / lattice->node(b.lower).weight;
    v[b.upper] += b.fraction / lattice->node(b.upper).weight;
  }
  return f;
}

LatticeFunction deposit_initial_mass(const PointPattern& pattern,
                                     std::shared_ptr<const Lattice> lattice) {
  check_same_network(*lattice, pattern.network());
  return deposit_initial_mass(std::span<const NetworkLocation>(pattern.points()), std::move(lattice));
}

HeatOperator::HeatOperator(std::shared_ptr<const Lattice> lattice, const HeatConfig& cfg)
    : lattice_(std::move(lattice)) {
  cfg.validate();
  dt_ = cfg.time_step(*lattice_);
  const Eigen::Index n = lattice_->size();
  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  double max_rate = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto links = lattice_->neighbors(i);
    const double w = lattice_->node(i).weight;
    double rate = 0.0;
    for (const auto& link : links) {
      const double c = cfg.diffusivity / (link.spacing * w);
      cols_.push_back(link.node);
      coeffs_.push_back(c);
      rate += c;
    }
    offsets_[static_cast<std::size_t>(i) + 1] = cols_.size();
    max_rate = std::max(max_rate, rate);
  }
  max_stable_ = max_rate > 0.0 ? 1.0 / max_rate : kInfinity;
  if (dt_ > max_stable_ * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time step " << dt_ << " exceeds the stable limit " << max_stable_;
    throw Error(ErrorCode::StabilityViolation, msg.str());
  }
}

void HeatOperator::step(const Eigen::VectorXd& f, Eigen::VectorXd& out, double tau) const {
  if (tau > max_stable_ * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time step " << tau << " exceeds the stable limit " << max_stable_;
    throw Error(ErrorCode::StabilityViolation, msg.str());
  }
  const Eigen::Index n = lattice_->size();
  out.resize(n);
  const double* fv = f.data();
  double* ov = out.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fi = fv[i];
    double acc = 0.0;
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += coeffs_[k] * (fv[cols_[k]] - fi);
    ov[i] = fi + tau * acc;
  }
}

void HeatOperator::advance(Eigen::VectorXd& f, long count) const {
  Eigen::VectorXd buffer(f.size());
  for (long s = 0; s < count; ++s) {
    step(f, buffer, dt_);
    f.swap(buffer);
  }
}

LatticeFunction heat_step(const LatticeFunction& f, const HeatConfig& cfg) {
  const HeatOperator op(f.lattice_ptr(), cfg);
  LatticeFunction out(f.lattice_ptr());
  op.step(f.values(), out.values(), op.time_step());
  return out;
}

LatticeFunction heat_solve(const LatticeFunction& f0, double t, const HeatOperator& op) {
  if (f0.lattice_ptr().get() != &op.lattice()) {
    throw Error(ErrorCode::LatticeMismatch, "operator built for a different lattice");
  }
  const Split split = split_time(t, op.time_step());
  if (t == 0.0) return f0;
  // All steps are polynomials in the same operator and commute, so the
  // shortened step may go first; batch solves rely on that ordering.
  LatticeFunction out(f0.lattice_ptr());
  op.step(f0.values(), out.values(), split.remainder);
  op.advance(out.values(), split.full_steps);
  return out;
}

LatticeFunction heat_solve(const LatticeFunction& f0, double t, const HeatConfig& cfg) {
  return heat_solve(f0, t, HeatOperator(f0.lattice_ptr(), cfg));
}

LatticeFunction estimate_heat(const PointPattern& pattern, std::shared_ptr<const Lattice> lattice,
                              double sigma, const HeatConfig& cfg) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  check_same_network(*lattice, pattern.network());
  const LatticeFunction f0 = deposit_initial_mass(pattern, lattice);
  return heat_solve(f0, sigma * sigma, cfg);
}

LatticeFunction estimate_heat_batch(std::span<const BandwidthSubset> subsets,
                                    std::shared_ptr<const Lattice> lattice, const HeatConfig& cfg,
                                    BatchSchedule schedule, int jobs) {
  for (const auto& s : subsets) {
    if (!(s.bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  }
  {
    std::vector<std::tuple<int, double, std::size_t>> keys;
    for (std::size_t d = 0; d < subsets.size(); ++d) {
      for (const auto& p : subsets[d].points) {
        const NetworkLocation c = lattice->network().canonical(p);
        keys.emplace_back(c.edge, c.offset, d);
      }
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 1; i < keys.size(); ++i) {
      if (std::get<0>(keys[i]) == std::get<0>(keys[i - 1]) &&
          std::get<1>(keys[i]) == std::get<1>(keys[i - 1]) &&
          std::get<2>(keys[i]) != std::get<2>(keys[i - 1])) {
        throw Error(ErrorCode::OverlappingSubsets, "a point belongs to more than one subset");
      }
    }
  }

  const HeatOperator op(lattice, cfg);
  LatticeFunction total(lattice);

  if (schedule == BatchSchedule::Independent) {
    std::vector<LatticeFunction> parts(subsets.size(), LatticeFunction(lattice));
    parallel_for(subsets.size(), jobs, [&](std::size_t d) {
      const auto& s = subsets[d];
      if (s.points.empty()) return;
      parts[d] = heat_solve(deposit_initial_mass(s.points, lattice), s.bandwidth * s.bandwidth, op);
    });
    for (const auto& p : parts) total.values() += p.values();
    return total;
  }

  // Subset d must see exactly its own shortened step plus n_d full steps. Walk
  // subsets from the longest time down: advance the running sum to the next
  // subset's step count, then add that subset after its shortened step.
  std::vector<std::size_t> order;
  for (std::size_t d = 0; d < subsets.size(); ++d)
    if (!subsets[d].points.empty()) order.push_back(d);
  std::vector<Split> splits;
  splits.reserve(subsets.size());
  for (const auto& s : subsets) splits.push_back(split_time(s.bandwidth * s.bandwidth, op.time_step()));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return splits[a].full_steps > splits[b].full_steps;
  });

  Eigen::VectorXd& g = total.values();
  Eigen::VectorXd shortened(lattice->size());
  long current = order.empty() ? 0 : splits[order.front()].full_steps;
  for (std::size_t d : order) {
    op.advance(g, current - splits[d].full_steps);
    current = splits[d].full_steps;
    const LatticeFunction mass = deposit_initial_mass(subsets[d].points, lattice);
    op.step(mass.values(), shortened, splits[d].remainder);
    g += shortened;
  }
  op.advance(g, current);
  return total;
}

}  // namespace netkde
