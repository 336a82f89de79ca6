#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "netkde/error.hpp"

namespace netkde {

/// Default tolerance under which two planar vertices are considered the same.
inline constexpr double kVertexMergeTolerance = 1e-8;

/// Absolute tolerance on orientation (cross product) tests in the segment
/// intersection predicates.
inline constexpr double kOrientationTolerance = 1e-12;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Edge {
  int from = 0;
  int to = 0;
  double length = 0.0;
};

/// Linear-referenced position: arc length `offset` from the `from` vertex of
/// `edge`. Offsets 0 and the edge length identify the endpoint vertices.
struct NetworkLocation {
  int edge = 0;
  double offset = 0.0;

  friend bool operator==(const NetworkLocation&, const NetworkLocation&) = default;
};

/// Closed sub-interval [lo, hi] of an edge, in arc length from its `from` end.
struct EdgeInterval {
  int edge = 0;
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
};

/// Immutable union of straight segments meeting only at shared endpoints.
class LinearNetwork {
 public:
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  const Eigen::Vector2d& vertex(int v) const { return vertices_[v]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  std::span<const int> incident(int v) const {
    return {adjacency_.data() + adjacency_offsets_[v],
            adjacency_.data() + adjacency_offsets_[v + 1]};
  }
  int degree(int v) const {
    return static_cast<int>(adjacency_offsets_[v + 1] - adjacency_offsets_[v]);
  }
  /// The vertex at the other end of `e` as seen from `v`.
  int opposite(int e, int v) const {
    return edges_[e].from == v ? edges_[e].to : edges_[e].from;
  }

  double total_length() const { return total_length_; }
  double min_edge_length() const { return min_edge_length_; }

  int num_components() const { return num_components_; }
  int component_of_vertex(int v) const { return component_[v]; }
  int component_of_edge(int e) const { return component_[edges_[e].from]; }

  Eigen::Vector2d bbox_min() const { return bbox_min_; }
  Eigen::Vector2d bbox_max() const { return bbox_max_; }

  /// Throws LocationOffNetwork unless `loc` lies on this network.
  void check(const NetworkLocation& loc) const;

  /// Canonical representative: endpoint locations are rewritten onto the
  /// lowest-id incident edge of that vertex, so equal points compare equal.
  NetworkLocation canonical(const NetworkLocation& loc) const;

  /// Vertex id if `loc` sits exactly on an endpoint, otherwise -1.
  int vertex_at(const NetworkLocation& loc) const;

  Eigen::Vector2d position(const NetworkLocation& loc) const;

  /// Location of vertex `v` expressed on its lowest-id incident edge.
  NetworkLocation vertex_location(int v) const;

 private:
  friend LinearNetwork build_network(std::vector<Eigen::Vector2d>,
                                     const std::vector<std::pair<int, int>>&,
                                     double);

  std::vector<Eigen::Vector2d> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> adjacency_offsets_;
  std::vector<int> adjacency_;
  std::vector<int> component_;
  int num_components_ = 0;
  double total_length_ = 0.0;
  double min_edge_length_ = 0.0;
  Eigen::Vector2d bbox_min_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d bbox_max_ = Eigen::Vector2d::Zero();
};

/// Validates and assembles a network from planar vertices and index pairs.
///
/// Throws DanglingReference, ZeroLengthEdge, IsolatedVertex,
/// CoincidentVertices (two vertices within `merge_tolerance`) and
/// InteriorIntersection (segments touching away from a shared endpoint).
LinearNetwork build_network(std::vector<Eigen::Vector2d> vertices,
                            const std::vector<std::pair<int, int>>& segments,
                            double merge_tolerance = kVertexMergeTolerance);

/// Axis-aligned grid with `cols` x `rows` vertices spanning [lo, hi].
LinearNetwork grid_network(int cols, int rows, const Eigen::Vector2d& lo,
                           const Eigen::Vector2d& hi);

/// Single-source shortest-path distances from a network location.
///
/// Vertex distances come from a Dijkstra sweep seeded at both ends of the
/// source edge; distances to arbitrary locations are then closed-form per edge.
class DistanceField {
 public:
  DistanceField(const LinearNetwork& net, const NetworkLocation& source,
                double cutoff = kInfinity);

  const NetworkLocation& source() const { return source_; }
  /// Exact up to `cutoff`; vertices beyond it report +infinity.
  double to_vertex(int v) const { return vertex_distance_[v]; }
  double at(const NetworkLocation& loc) const;
  /// Distance to the point at `offset` along `edge`, without validation.
  double at(int edge, double offset) const;

 private:
  const LinearNetwork* net_;
  NetworkLocation source_;
  std::vector<double> vertex_distance_;
};

/// d_L(a, b); +infinity across connected components.
double shortest_path_distance(const LinearNetwork& net, const NetworkLocation& a,
                              const NetworkLocation& b);

/// {v : d_L(center, v) <= r} as disjoint per-edge closed intervals, ordered by
/// edge id then offset.
std::vector<EdgeInterval> network_disc(const LinearNetwork& net,
                                       const NetworkLocation& center, double r);

double total_length(std::span<const EdgeInterval> intervals);

struct SnapResult {
  NetworkLocation location;
  double distance = 0.0;
};

/// Nearest network location to a planar point; ties go to the lowest edge id,
/// then the lowest offset. Throws TooFarFromNetwork beyond `max_dist`.
SnapResult snap_to_network(const LinearNetwork& net, const Eigen::Vector2d& p,
                           double max_dist);

/// Uniform-grid bucket index over edges for bulk snapping. Gives the same
/// answer as snap_to_network.
class SnapIndex {
 public:
  explicit SnapIndex(const LinearNetwork& net);

  SnapResult nearest(const Eigen::Vector2d& p, double max_dist) const;

 private:
  const LinearNetwork* net_;
  Eigen::Vector2d origin_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Finite set of locations on a shared network.
class PointPattern {
 public:
  PointPattern() = default;
  PointPattern(std::shared_ptr<const LinearNetwork> net,
               std::vector<NetworkLocation> points);

  const LinearNetwork& network() const { return *net_; }
  const std::shared_ptr<const LinearNetwork>& network_ptr() const { return net_; }
  const std::vector<NetworkLocation>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const NetworkLocation& operator[](std::size_t i) const { return points_[i]; }

  PointPattern subset(std::span<const std::size_t> indices) const;

 private:
  std::shared_ptr<const LinearNetwork> net_;
  std::vector<NetworkLocation> points_;
};

}  // namespace netkde
