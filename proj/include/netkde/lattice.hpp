#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "netkde/network.hpp"

namespace netkde {

struct LatticeNode {
  NetworkLocation location;  // canonical form
  Eigen::Vector2d xy;
  double weight = 0.0;       // quadrature weight (arc length of the node cell)
  int vertex = -1;           // network vertex id, or -1 for edge-interior nodes
};

/// One directed link of the lattice neighbour structure.
struct LatticeLink {
  Eigen::Index node;
  double spacing;
};

/// Two lattice nodes bracketing a location on an edge chain, with the linear
/// interpolation weight of the upper one.
struct Bracket {
  Eigen::Index lower;
  Eigen::Index upper;
  double fraction;  // in [0, 1]
};

/// Discretization of a network into equally spaced nodes per edge.
///
/// Vertex nodes come first (node id == vertex id), followed by the interior
/// nodes of each edge in edge order. Edge `e` of length l is cut into
/// ceil(l / dx_target) equal pieces, so its spacing never exceeds dx_target.
class Lattice {
 public:
  Lattice(std::shared_ptr<const LinearNetwork> net, double dx_target);

  const LinearNetwork& network() const { return *net_; }
  const std::shared_ptr<const LinearNetwork>& network_ptr() const { return net_; }

  double dx_target() const { return dx_target_; }
  double min_spacing() const { return min_spacing_; }
  double max_spacing() const { return max_spacing_; }

  Eigen::Index size() const { return static_cast<Eigen::Index>(nodes_.size()); }
  const LatticeNode& node(Eigen::Index i) const { return nodes_[i]; }
  const std::vector<LatticeNode>& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Node ids along edge `e` from its `from` vertex to its `to` vertex.
  std::span<const Eigen::Index> chain(int e) const { return chains_[e]; }
  double spacing(int e) const { return spacing_[e]; }
  Eigen::Index vertex_node(int v) const { return v; }

  std::span<const LatticeLink> neighbors(Eigen::Index i) const {
    return {links_.data() + link_offsets_[i], links_.data() + link_offsets_[i + 1]};
  }

  Bracket bracket(const NetworkLocation& loc) const;

  /// Offset interval covered by the part of node `pos`'s cell lying on edge `e`.
  std::pair<double, double> cell_on_edge(int e, std::size_t pos) const;

 private:
  std::shared_ptr<const LinearNetwork> net_;
  double dx_target_;
  double min_spacing_ = 0.0;
  double max_spacing_ = 0.0;
  std::vector<LatticeNode> nodes_;
  Eigen::VectorXd weights_;
  std::vector<std::vector<Eigen::Index>> chains_;
  std::vector<double> spacing_;
  std::vector<std::size_t> link_offsets_;
  std::vector<LatticeLink> links_;
};

std::shared_ptr<const Lattice> discretize(std::shared_ptr<const LinearNetwork> net,
                                          double dx_target);

/// Real-valued function sampled on lattice nodes.
class LatticeFunction {
 public:
  explicit LatticeFunction(std::shared_ptr<const Lattice> lattice);
  LatticeFunction(std::shared_ptr<const Lattice> lattice, Eigen::VectorXd values);

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }
  double& operator[](Eigen::Index i) { return values_[i]; }

  /// Trapezoidal integral over the network.
  double integral() const { return lattice_->weights().dot(values_); }

  /// Linear interpolation along the containing edge chain.
  double at(const NetworkLocation& loc) const;

  LatticeFunction& operator+=(const LatticeFunction& other);

 private:
  std::shared_ptr<const Lattice> lattice_;
  Eigen::VectorXd values_;
};

/// Throws LatticeMismatch unless both functions live on the same lattice.
void require_same_lattice(const LatticeFunction& a, const LatticeFunction& b);

}  // namespace netkde
