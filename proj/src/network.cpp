#include "netkde/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>

namespace netkde {

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Sign of the orientation of (a, b, c) with the absolute tolerance zeroed out.
int orientation(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& c) {
  const double o = cross(b - a, c - a);
  if (o > kOrientationTolerance) return 1;
  if (o < -kOrientationTolerance) return -1;
  return 0;
}

bool within_box(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& p) {
  constexpr double tol = kOrientationTolerance;
  return p.x() >= std::min(a.x(), b.x()) - tol && p.x() <= std::max(a.x(), b.x()) + tol &&
         p.y() >= std::min(a.y(), b.y()) - tol && p.y() <= std::max(a.y(), b.y()) + tol;
}

bool segments_touch(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                    const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && within_box(p1, p2, q1)) return true;
  if (o2 == 0 && within_box(p1, p2, q2)) return true;
  if (o3 == 0 && within_box(q1, q2, p1)) return true;
  if (o4 == 0 && within_box(q1, q2, p2)) return true;
  return false;
}

// True when edges a and b share points other than a common endpoint vertex.
bool interior_intersection(const std::vector<Eigen::Vector2d>& xy, const Edge& a,
                           const Edge& b) {
  const bool s1 = a.from == b.from || a.from == b.to;
  const bool s2 = a.to == b.from || a.to == b.to;
  if (s1 && s2) return true;
  if (s1 || s2) {
    const int shared = s1 ? a.from : a.to;
    const int other_a = s1 ? a.to : a.from;
    const int other_b = b.from == shared ? b.to : b.from;
    const Eigen::Vector2d da = xy[other_a] - xy[shared];
    const Eigen::Vector2d db = xy[other_b] - xy[shared];
    return std::abs(cross(da, db)) <= kOrientationTolerance && da.dot(db) > 0.0;
  }
  return segments_touch(xy[a.from], xy[a.to], xy[b.from], xy[b.to]);
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

SnapResult project(const LinearNetwork& net, int e, const Eigen::Vector2d& p) {
  const Edge& edge = net.edge(e);
  const Eigen::Vector2d& a = net.vertex(edge.from);
  const Eigen::Vector2d d = net.vertex(edge.to) - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  const Eigen::Vector2d q = a + t * d;
  double offset = t * edge.length;
  if (t == 1.0) offset = edge.length;
  return {{e, offset}, (p - q).norm()};
}

double tie_tolerance(const LinearNetwork& net) {
  const double extent = (net.bbox_max() - net.bbox_min()).cwiseAbs().maxCoeff();
  return 1e-12 * std::max(1.0, extent);
}

// Lower distance wins; within tolerance the lower edge id wins.
bool better(const SnapResult& cand, const SnapResult& best, double tol) {
  if (cand.distance < best.distance - tol) return true;
  if (std::abs(cand.distance - best.distance) <= tol) {
    if (cand.location.edge != best.location.edge)
      return cand.location.edge < best.location.edge;
    return cand.location.offset < best.location.offset;
  }
  return false;
}

[[noreturn]] void too_far(const Eigen::Vector2d& p, double d, double max_dist) {
  std::ostringstream msg;
  msg << "point (" << p.x() << ", " << p.y() << ") is " << d
      << " from the network, beyond max distance " << max_dist;
  throw Error(ErrorCode::TooFarFromNetwork, msg.str());
}

}  // namespace

LinearNetwork build_network(std::vector<Eigen::Vector2d> vertices,
                            const std::vector<std::pair<int, int>>& segments,
                            double merge_tolerance) {
  const int nv = static_cast<int>(vertices.size());
  LinearNetwork net;

  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto [u, v] = segments[i];
    if (u < 0 || v < 0 || u >= nv || v >= nv) {
      throw Error(ErrorCode::DanglingReference,
                  "segment " + std::to_string(i) + " references a missing vertex");
    }
  }
  for (int i = 0; i < nv; ++i) {
    if (!vertices[i].allFinite()) {
      throw Error(ErrorCode::InvalidArgument,
                  "vertex " + std::to_string(i) + " has non-finite coordinates");
    }
  }

  {
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return vertices[a].x() < vertices[b].x(); });
    for (int i = 0; i < nv; ++i) {
      for (int j = i + 1; j < nv; ++j) {
        const auto& a = vertices[order[i]];
        const auto& b = vertices[order[j]];
        if (b.x() - a.x() > merge_tolerance) break;
        if ((a - b).norm() <= merge_tolerance) {
          throw Error(ErrorCode::CoincidentVertices,
                      "vertices " + std::to_string(order[i]) + " and " +
                          std::to_string(order[j]) + " are within the merge tolerance");
        }
      }
    }
  }

  net.edges_.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto [u, v] = segments[i];
    const double len = (vertices[u] - vertices[v]).norm();
    if (u == v || !(len > 0.0)) {
      throw Error(ErrorCode::ZeroLengthEdge,
                  "segment " + std::to_string(i) + " has zero length");
    }
    net.edges_.push_back({u, v, len});
  }

  std::vector<int> degree(nv, 0);
  for (const Edge& e : net.edges_) {
    ++degree[e.from];
    ++degree[e.to];
  }
  for (int v = 0; v < nv; ++v) {
    if (degree[v] == 0) {
      throw Error(ErrorCode::IsolatedVertex,
                  "vertex " + std::to_string(v) + " has no incident edge");
    }
  }

  // Sweep over edges sorted by their left x extent.
  {
    const auto& xy = vertices;
    const int ne = static_cast<int>(net.edges_.size());
    std::vector<int> order(ne);
    std::iota(order.begin(), order.end(), 0);
    auto xmin = [&](int e) {
      return std::min(xy[net.edges_[e].from].x(), xy[net.edges_[e].to].x());
    };
    auto xmax = [&](int e) {
      return std::max(xy[net.edges_[e].from].x(), xy[net.edges_[e].to].x());
    };
    auto ymin = [&](int e) {
      return std::min(xy[net.edges_[e].from].y(), xy[net.edges_[e].to].y());
    };
    auto ymax = [&](int e) {
      return std::max(xy[net.edges_[e].from].y(), xy[net.edges_[e].to].y());
    };
    std::sort(order.begin(), order.end(), [&](int a, int b) { return xmin(a) < xmin(b); });
    constexpr double tol = kOrientationTolerance;
    for (int i = 0; i < ne; ++i) {
      const int a = order[i];
      const double ax1 = xmax(a);
      for (int j = i + 1; j < ne; ++j) {
        const int b = order[j];
        if (xmin(b) > ax1 + tol) break;
        if (ymin(b) > ymax(a) + tol || ymin(a) > ymax(b) + tol) continue;
        if (interior_intersection(xy, net.edges_[a], net.edges_[b])) {
          throw Error(ErrorCode::InteriorIntersection,
                      "edges " + std::to_string(std::min(a, b)) + " and " +
                          std::to_string(std::max(a, b)) +
                          " intersect away from a shared endpoint");
        }
      }
    }
  }

  net.adjacency_offsets_.assign(nv + 1, 0);
  for (int v = 0; v < nv; ++v) net.adjacency_offsets_[v + 1] = net.adjacency_offsets_[v] + degree[v];
  net.adjacency_.resize(net.adjacency_offsets_[nv]);
  {
    std::vector<std::size_t> fill(net.adjacency_offsets_.begin(), net.adjacency_offsets_.end() - 1);
    for (int e = 0; e < static_cast<int>(net.edges_.size()); ++e) {
      net.adjacency_[fill[net.edges_[e].from]++] = e;
      net.adjacency_[fill[net.edges_[e].to]++] = e;
    }
  }

  DisjointSets sets(nv);
  for (const Edge& e : net.edges_) sets.unite(e.from, e.to);
  net.component_.resize(nv);
  std::vector<int> label(nv, -1);
  for (int v = 0; v < nv; ++v) {
    const int root = sets.find(v);
    if (label[root] < 0) label[root] = net.num_components_++;
    net.component_[v] = label[root];
  }

  net.total_length_ = 0.0;
  net.min_edge_length_ = net.edges_.empty() ? 0.0 : kInfinity;
  for (const Edge& e : net.edges_) {
    net.total_length_ += e.length;
    net.min_edge_length_ = std::min(net.min_edge_length_, e.length);
  }
  if (nv > 0) {
    net.bbox_min_ = vertices[0];
    net.bbox_max_ = vertices[0];
    for (const auto& p : vertices) {
      net.bbox_min_ = net.bbox_min_.cwiseMin(p);
      net.bbox_max_ = net.bbox_max_.cwiseMax(p);
    }
  }
  net.vertices_ = std::move(vertices);
  return net;
}

LinearNetwork grid_network(int cols, int rows, const Eigen::Vector2d& lo,
                           const Eigen::Vector2d& hi) {
  if (cols < 2 || rows < 2) {
    throw Error(ErrorCode::InvalidArgument, "grid needs at least 2x2 vertices");
  }
  std::vector<Eigen::Vector2d> xy;
  std::vector<std::pair<int, int>> segs;
  auto id = [cols](int i, int j) { return j * cols + i; };
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const double fx = static_cast<double>(i) / (cols - 1);
      const double fy = static_cast<double>(j) / (rows - 1);
      xy.emplace_back(lo.x() + fx * (hi.x() - lo.x()), lo.y() + fy * (hi.y() - lo.y()));
    }
  }
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i + 1 < cols; ++i) segs.emplace_back(id(i, j), id(i + 1, j));
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j + 1 < rows; ++j) segs.emplace_back(id(i, j), id(i, j + 1));
  return build_network(std::move(xy), segs);
}

void LinearNetwork::check(const NetworkLocation& loc) const {
  if (loc.edge < 0 || loc.edge >= static_cast<int>(edges_.size()) ||
      !(loc.offset >= 0.0 && loc.offset <= edges_[loc.edge].length)) {
    std::ostringstream msg;
    msg << "location (edge " << loc.edge << ", offset " << loc.offset
        << ") is not on the network";
    throw Error(ErrorCode::LocationOffNetwork, msg.str());
  }
}

int LinearNetwork::vertex_at(const NetworkLocation& loc) const {
  const Edge& e = edges_[loc.edge];
  if (loc.offset == 0.0) return e.from;
  if (loc.offset == e.length) return e.to;
  return -1;
}

NetworkLocation LinearNetwork::vertex_location(int v) const {
  const int e = incident(v).front();
  return {e, edges_[e].from == v ? 0.0 : edges_[e].length};
}

NetworkLocation LinearNetwork::canonical(const NetworkLocation& loc) const {
  check(loc);
  const int v = vertex_at(loc);
  return v >= 0 ? vertex_location(v) : loc;
}

Eigen::Vector2d LinearNetwork::position(const NetworkLocation& loc) const {
  const Edge& e = edges_[loc.edge];
  if (loc.offset == e.length) return vertices_[e.to];
  const double t = loc.offset / e.length;
  return vertices_[e.from] + t * (vertices_[e.to] - vertices_[e.from]);
}

DistanceField::DistanceField(const LinearNetwork& net, const NetworkLocation& source,
                             double cutoff)
    : net_(&net), source_(source), vertex_distance_(net.num_vertices(), kInfinity) {
  net.check(source);
  const Edge& se = net.edge(source.edge);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  auto relax = [&](int v, double d) {
    if (d <= cutoff && d < vertex_distance_[v]) {
      vertex_distance_[v] = d;
      queue.emplace(d, v);
    }
  };
  relax(se.from, source.offset);
  relax(se.to, se.length - source.offset);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > vertex_distance_[v]) continue;
    for (int e : net.incident(v)) relax(net.opposite(e, v), d + net.edge(e).length);
  }
}

double DistanceField::at(int edge, double offset) const {
  const Edge& e = net_->edge(edge);
  double d = std::min(vertex_distance_[e.from] + offset,
                      vertex_distance_[e.to] + (e.length - offset));
  if (edge == source_.edge) d = std::min(d, std::abs(offset - source_.offset));
  return d;
}

double DistanceField::at(const NetworkLocation& loc) const {
  net_->check(loc);
  return at(loc.edge, loc.offset);
}

double shortest_path_distance(const LinearNetwork& net, const NetworkLocation& a,
                              const NetworkLocation& b) {
  net.check(b);
  const NetworkLocation ca = net.canonical(a), cb = net.canonical(b);
  if (ca == cb) return 0.0;
  // Always sum from the same end so that d(a, b) == d(b, a) bit for bit.
  const bool swap = std::tie(cb.edge, cb.offset) < std::tie(ca.edge, ca.offset);
  return swap ? DistanceField(net, b).at(a) : DistanceField(net, a).at(b);
}

std::vector<EdgeInterval> network_disc(const LinearNetwork& net,
                                       const NetworkLocation& center, double r) {
  if (!(r >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "disc radius must be nonnegative");
  }
  const NetworkLocation c = net.canonical(center);
  if (r == 0.0) return {{c.edge, c.offset, c.offset}};

  const DistanceField field(net, c, r);
  std::vector<EdgeInterval> out;
  std::vector<std::pair<double, double>> pieces;
  for (int e = 0; e < static_cast<int>(net.num_edges()); ++e) {
    const Edge& edge = net.edge(e);
    pieces.clear();
    const double df = field.to_vertex(edge.from);
    const double dt = field.to_vertex(edge.to);
    if (df <= r) pieces.emplace_back(0.0, std::min(edge.length, r - df));
    if (dt <= r) pieces.emplace_back(std::max(0.0, edge.length - (r - dt)), edge.length);
    if (e == c.edge) {
      pieces.emplace_back(std::max(0.0, c.offset - r), std::min(edge.length, c.offset + r));
    }
    if (pieces.empty()) continue;
    std::sort(pieces.begin(), pieces.end());
    double lo = pieces[0].first;
    double hi = pieces[0].second;
    for (std::size_t i = 1; i < pieces.size(); ++i) {
      if (pieces[i].first <= hi) {
        hi = std::max(hi, pieces[i].second);
      } else {
        out.push_back({e, lo, hi});
        lo = pieces[i].first;
        hi = pieces[i].second;
      }
    }
    out.push_back({e, lo, hi});
  }
  return out;
}

double total_length(std::span<const EdgeInterval> intervals) {
  double sum = 0.0;
  for (const auto& iv : intervals) sum += iv.length();
  return sum;
}

SnapResult snap_to_network(const LinearNetwork& net, const Eigen::Vector2d& p,
                           double max_dist) {
  if (!(max_dist > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max snap distance must be positive");
  }
  const double tol = tie_tolerance(net);
  SnapResult best{{-1, 0.0}, kInfinity};
  for (int e = 0; e < static_cast<int>(net.num_edges()); ++e) {
    const SnapResult cand = project(net, e, p);
    if (best.location.edge < 0 || better(cand, best, tol)) best = cand;
  }
  if (best.location.edge < 0 || best.distance > max_dist) too_far(p, best.distance, max_dist);
  return best;
}

SnapIndex::SnapIndex(const LinearNetwork& net) : net_(&net) {
  origin_ = net.bbox_min();
  const Eigen::Vector2d extent = net.bbox_max() - net.bbox_min();
  const double ne = std::max<double>(1.0, static_cast<double>(net.num_edges()));
  cell_ = std::max({std::sqrt(extent.x() * extent.y() / ne), extent.maxCoeff() / ne, 1e-12});
  nx_ = std::max(1, static_cast<int>(std::ceil(extent.x() / cell_)) + 1);
  ny_ = std::max(1, static_cast<int>(std::ceil(extent.y() / cell_)) + 1);
  buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (int e = 0; e < static_cast<int>(net.num_edges()); ++e) {
    const Eigen::Vector2d a = net.vertex(net.edge(e).from) - origin_;
    const Eigen::Vector2d b = net.vertex(net.edge(e).to) - origin_;
    const int i0 = std::clamp(static_cast<int>(std::floor(std::min(a.x(), b.x()) / cell_)), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor(std::max(a.x(), b.x()) / cell_)), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>(std::floor(std::min(a.y(), b.y()) / cell_)), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>(std::floor(std::max(a.y(), b.y()) / cell_)), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(e);
  }
}

SnapResult SnapIndex::nearest(const Eigen::Vector2d& p, double max_dist) const {
  if (!(max_dist > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max snap distance must be positive");
  }
  const double tol = tie_tolerance(*net_);
  const Eigen::Vector2d q = (p - origin_) / cell_;
  const long ci = static_cast<long>(std::floor(q.x()));
  const long cj = static_cast<long>(std::floor(q.y()));
  const long reach = std::max({std::abs(ci), std::abs(ci - (nx_ - 1)), std::abs(cj),
                               std::abs(cj - (ny_ - 1))});
  SnapResult best{{-1, 0.0}, kInfinity};
  for (long k = 0; k <= reach; ++k) {
    for (long j = cj - k; j <= cj + k; ++j) {
      if (j < 0 || j >= ny_) continue;
      const bool edge_row = (j == cj - k || j == cj + k);
      for (long i = ci - k; i <= ci + k; i += (edge_row ? 1 : 2 * k)) {
        if (i >= 0 && i < nx_) {
          for (int e : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
            const SnapResult cand = project(*net_, e, p);
            if (best.location.edge < 0 || better(cand, best, tol)) best = cand;
          }
        }
        if (k == 0) break;
      }
    }
    // Anything not yet visited lies at least k cells away.
    const double bound = static_cast<double>(k) * cell_;
    if (best.location.edge >= 0 && best.distance < bound - tol) break;
    if (bound > max_dist + tol) break;
  }
  if (best.location.edge < 0 || best.distance > max_dist) too_far(p, best.distance, max_dist);
  return best;
}

PointPattern::PointPattern(std::shared_ptr<const LinearNetwork> net,
                           std::vector<NetworkLocation> points)
    : net_(std::move(net)), points_(std::move(points)) {
  for (const auto& p : points_) net_->check(p);
}

PointPattern PointPattern::subset(std::span<const std::size_t> indices) const {
  std::vector<NetworkLocation> pts;
  pts.reserve(indices.size());
  for (std::size_t i : indices) pts.push_back(points_.at(i));
  return PointPattern(net_, std::move(pts));
}

}  // namespace netkde
