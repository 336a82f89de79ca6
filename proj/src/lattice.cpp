#include "netkde/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace netkde {

Lattice::Lattice(std::shared_ptr<const LinearNetwork> net, double dx_target)
    : net_(std::move(net)), dx_target_(dx_target) {
  if (!(dx_target > 0.0) || !std::isfinite(dx_target)) {
    throw Error(ErrorCode::InvalidArgument, "lattice spacing must be positive and finite");
  }
  const LinearNetwork& g = *net_;
  const int nv = static_cast<int>(g.num_vertices());
  const int ne = static_cast<int>(g.num_edges());

  nodes_.reserve(nv);
  for (int v = 0; v < nv; ++v) {
    nodes_.push_back({g.vertex_location(v), g.vertex(v), 0.0, v});
  }

  chains_.resize(ne);
  spacing_.resize(ne);
  min_spacing_ = kInfinity;
  max_spacing_ = 0.0;
  for (int e = 0; e < ne; ++e) {
    const Edge& edge = g.edge(e);
    // Guard against ceil() rounding an exact ratio up by one ulp.
    const double ratio = edge.length / dx_target * (1.0 - 1e-12);
    const auto pieces = std::max<long>(1, static_cast<long>(std::ceil(ratio)));
    if (pieces > 100'000'000) {
      throw Error(ErrorCode::InvalidArgument,
                  "lattice spacing too small for edge " + std::to_string(e));
    }
    const double h = edge.length / static_cast<double>(pieces);
    spacing_[e] = h;
    min_spacing_ = std::min(min_spacing_, h);
    max_spacing_ = std::max(max_spacing_, h);

    auto& chain = chains_[e];
    chain.reserve(pieces + 1);
    chain.push_back(edge.from);
    const Eigen::Vector2d a = g.vertex(edge.from);
    const Eigen::Vector2d d = g.vertex(edge.to) - a;
    for (long j = 1; j < pieces; ++j) {
      const double offset = static_cast<double>(j) * h;
      chain.push_back(static_cast<Eigen::Index>(nodes_.size()));
      nodes_.push_back({{e, offset}, a + (offset / edge.length) * d, h, -1});
    }
    chain.push_back(edge.to);
    nodes_[edge.from].weight += 0.5 * h;
    nodes_[edge.to].weight += 0.5 * h;
  }
  if (ne == 0) min_spacing_ = 0.0;

  weights_.resize(static_cast<Eigen::Index>(nodes_.size()));
  for (std::size_t i = 0; i < nodes_.size(); ++i) weights_[static_cast<Eigen::Index>(i)] = nodes_[i].weight;

  // Neighbour lists in CSR form.
  std::vector<std::size_t> count(nodes_.size(), 0);
  for (int e = 0; e < ne; ++e) {
    const auto& chain = chains_[e];
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
      ++count[chain[j]];
      ++count[chain[j + 1]];
    }
  }
  link_offsets_.assign(nodes_.size() + 1, 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) link_offsets_[i + 1] = link_offsets_[i] + count[i];
  links_.resize(link_offsets_.back());
  std::vector<std::size_t> fill(link_offsets_.begin(), link_offsets_.end() - 1);
  for (int e = 0; e < ne; ++e) {
    const auto& chain = chains_[e];
    const double h = spacing_[e];
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
      links_[fill[chain[j]]++] = {chain[j + 1], h};
      links_[fill[chain[j + 1]]++] = {chain[j], h};
    }
  }
}

Bracket Lattice::bracket(const NetworkLocation& loc) const {
  net_->check(loc);
  const auto& chain = chains_[loc.edge];
  const double h = spacing_[loc.edge];
  const long pieces = static_cast<long>(chain.size()) - 1;
  const double p = loc.offset / h;
  const long i = std::clamp(static_cast<long>(std::floor(p)), 0L, pieces - 1);
  const double frac = std::clamp(p - static_cast<double>(i), 0.0, 1.0);
  return {chain[i], chain[i + 1], frac};
}

std::pair<double, double> Lattice::cell_on_edge(int e, std::size_t pos) const {
  const double h = spacing_[e];
  const double len = net_->edge(e).length;
  const std::size_t last = chains_[e].size() - 1;
  const double center = pos == last ? len : static_cast<double>(pos) * h;
  const double lo = pos == 0 ? 0.0 : center - 0.5 * h;
  const double hi = pos == last ? len : center + 0.5 * h;
  return {lo, hi};
}

std::shared_ptr<const Lattice> discretize(std::shared_ptr<const LinearNetwork> net,
                                          double dx_target) {
  return std::make_shared<const Lattice>(std::move(net), dx_target);
}

LatticeFunction::LatticeFunction(std::shared_ptr<const Lattice> lattice)
    : lattice_(std::move(lattice)), values_(Eigen::VectorXd::Zero(lattice_->size())) {}

LatticeFunction::LatticeFunction(std::shared_ptr<const Lattice> lattice, Eigen::VectorXd values)
    : lattice_(std::move(lattice)), values_(std::move(values)) {
  if (values_.size() != lattice_->size()) {
    throw Error(ErrorCode::LatticeMismatch, "value count does not match lattice size");
  }
}

double LatticeFunction::at(const NetworkLocation& loc) const {
  const Bracket b = lattice_->bracket(loc);
  const double lo = values_[b.lower];
  return lo + b.fraction * (values_[b.upper] - lo);
}

LatticeFunction& LatticeFunction::operator+=(const LatticeFunction& other) {
  require_same_lattice(*this, other);
  values_ += other.values_;
  return *this;
}

void require_same_lattice(const LatticeFunction& a, const LatticeFunction& b) {
  if (a.lattice_ptr() != b.lattice_ptr()) {
    throw Error(ErrorCode::LatticeMismatch, "functions are defined on different lattices");
  }
}

}  // namespace netkde
