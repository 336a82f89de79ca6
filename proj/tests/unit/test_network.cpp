#include <doctest.h>

#include <random>

#include "netkde/error.hpp"
#include "netkde/lattice.hpp"
#include "netkde/network.hpp"
#include "oracles.hpp"

using namespace netkde;

namespace {

LinearNetwork unit_triangle() {
  return build_network({{0, 0}, {1, 0}, {0.5, std::sqrt(0.75)}}, {{0, 1}, {1, 2}, {2, 0}});
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("build_network: triangle, Y and validation errors") {
  const auto tri = unit_triangle();
  CHECK(tri.total_length() == doctest::Approx(3.0).epsilon(1e-12));
  for (int v = 0; v < 3; ++v) CHECK(tri.degree(v) == 2);
  CHECK(tri.num_components() == 1);

  const auto y = oracle::y_network();
  CHECK(y.degree(0) == 3);
  for (int v = 1; v < 4; ++v) CHECK(y.degree(v) == 1);
  CHECK(y.total_length() == doctest::Approx(3.0).epsilon(1e-12));

  CHECK(code_of([] { build_network({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {{0, 1}, {2, 3}}); }) ==
        ErrorCode::InteriorIntersection);
  CHECK(code_of([] { build_network({{0, 0}, {1, 0}}, {{0, 2}}); }) == ErrorCode::DanglingReference);
  CHECK(code_of([] { build_network({{0, 0}, {1, 0}}, {{0, 0}}); }) == ErrorCode::ZeroLengthEdge);
  CHECK(code_of([] { build_network({{0, 0}, {1, 0}, {5, 5}}, {{0, 1}}); }) == ErrorCode::IsolatedVertex);
  CHECK(code_of([] { build_network({{0, 0}, {1, 0}, {1, 1e-10}, {2, 0}}, {{0, 1}, {2, 3}}); }) ==
        ErrorCode::CoincidentVertices);
  // T junction: an endpoint lying on another edge's interior
  CHECK(code_of([] { build_network({{0, 0}, {2, 0}, {1, 0}, {1, 1}}, {{0, 1}, {2, 3}}); }) ==
        ErrorCode::InteriorIntersection);
  // overlapping collinear edges sharing one endpoint
  CHECK(code_of([] { build_network({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {0, 2}}); }) ==
        ErrorCode::InteriorIntersection);
  // a straight chain through a degree-2 vertex is fine
  CHECK(build_network({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}}).num_edges() == 2);
}

TEST_CASE("edge lengths equal Euclidean endpoint distances") {
  std::mt19937_64 rng(5);
  for (int r = 0; r < 20; ++r) {
    const auto net = oracle::random_network(rng, 4, 20);
    for (const auto& e : net.edges()) {
      CHECK(e.length == doctest::Approx((net.vertex(e.from) - net.vertex(e.to)).norm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("shortest_path_distance examples") {
  const auto tri = unit_triangle();
  const NetworkLocation a{0, 0.5}, b{1, 0.5};
  CHECK(shortest_path_distance(tri, a, a) == 0.0);
  CHECK(shortest_path_distance(tri, a, b) == oracle::brute_force_distance(tri, a, b));
  CHECK(shortest_path_distance(tri, a, b) == doctest::Approx(1.0).epsilon(1e-15));

  const auto two = build_network({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {2, 3}});
  CHECK(two.num_components() == 2);
  CHECK(std::isinf(shortest_path_distance(two, {0, 0.3}, {1, 0.3})));

  CHECK(code_of([&] { shortest_path_distance(tri, {0, 1.5}, a); }) == ErrorCode::LocationOffNetwork);
  CHECK(code_of([&] { shortest_path_distance(tri, {7, 0.1}, a); }) == ErrorCode::LocationOffNetwork);
}

TEST_CASE("vertex locations compare equal in canonical form") {
  const auto tri = unit_triangle();
  // edge 0 ends at vertex 1 where edge 1 starts
  CHECK(tri.canonical({0, 1.0}) == tri.canonical({1, 0.0}));
  CHECK(shortest_path_distance(tri, {0, 1.0}, {1, 0.0}) == 0.0);
}

TEST_CASE("metric axioms on random networks") {
  std::mt19937_64 rng(11);
  for (int r = 0; r < 40; ++r) {
    const auto net = oracle::random_network(rng, 4, 12);
    for (int k = 0; k < 10; ++k) {
      const auto a = oracle::random_location(rng, net);
      const auto b = oracle::random_location(rng, net);
      const auto c = oracle::random_location(rng, net);
      const double ab = shortest_path_distance(net, a, b);
      CHECK(ab == shortest_path_distance(net, b, a));
      CHECK(ab == oracle::brute_force_distance(net, a, b));
      if (std::isfinite(ab)) {
        const double ac = shortest_path_distance(net, a, c);
        const double bc = shortest_path_distance(net, b, c);
        if (std::isfinite(ac)) CHECK(ac <= ab + bc + 1e-12);
        CHECK(ab > 0.0);
      }
    }
  }
}

TEST_CASE("network_disc") {
  const auto y = oracle::y_network();
  SUBCASE("r = 0 gives the centre") {
    const auto d = network_disc(y, {1, 0.4}, 0.0);
    REQUIRE(d.size() == 1);
    CHECK(d[0].edge == 1);
    CHECK(d[0].lo == 0.4);
    CHECK(d[0].hi == 0.4);
  }
  SUBCASE("Y centre, r = 0.3, checked by dense sampling") {
    const auto disc = network_disc(y, y.vertex_location(0), 0.3);
    CHECK(disc.size() == 3);
    CHECK(total_length(disc) == doctest::Approx(0.9).epsilon(1e-12));
    // dense sampling of d_L against the interval membership
    for (int e = 0; e < 3; ++e) {
      for (int k = 0; k <= 1000; ++k) {
        const double t = k / 1000.0 * y.edge(e).length;
        const bool inside_oracle = oracle::brute_force_distance(y, y.vertex_location(0), {e, t}) <= 0.3;
        bool inside = false;
        for (const auto& iv : disc)
          if (iv.edge == e && t >= iv.lo && t <= iv.hi) inside = true;
        CHECK(inside == inside_oracle);
      }
    }
  }
  SUBCASE("large radius covers the network") {
    const auto tri = unit_triangle();
    CHECK(total_length(network_disc(tri, {2, 0.1}, 10.0)) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("length is non-decreasing in r") {
    std::mt19937_64 rng(3);
    for (int r = 0; r < 20; ++r) {
      const auto net = oracle::random_network(rng, 4, 15);
      const auto c = oracle::random_location(rng, net);
      double prev = 0.0;
      for (double radius = 0.0; radius < 2.0; radius += 0.05) {
        const double len = total_length(network_disc(net, c, radius));
        CHECK(len >= prev - 1e-12);
        CHECK(len <= net.total_length() * (1 + 1e-12));
        prev = len;
      }
    }
  }
}

TEST_CASE("discretize") {
  auto seg = std::make_shared<const LinearNetwork>(build_network({{0, 0}, {1, 0}}, {{0, 1}}));
  const Lattice lat(seg, 0.25);
  CHECK(lat.size() == 5);
  const auto chain = lat.chain(0);
  const std::vector<double> offsets{0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> weights{0.125, 0.25, 0.25, 0.25, 0.125};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& node = lat.node(chain[k]);
    CHECK(seg->position(node.location).x() == doctest::Approx(offsets[k]).epsilon(1e-15));
    CHECK(node.weight == doctest::Approx(weights[k]).epsilon(1e-15));
  }
  CHECK(lat.weights().sum() == doctest::Approx(1.0).epsilon(1e-15));

  auto y = std::make_shared<const LinearNetwork>(oracle::y_network());
  const Lattice ly(y, 0.5);
  CHECK(ly.node(ly.vertex_node(0)).weight == doctest::Approx(0.75).epsilon(1e-15));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dx(0.003, 0.4);
  for (int r = 0; r < 30; ++r) {
    auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 5, 40));
    const Lattice l(net, dx(rng));
    CHECK(l.weights().sum() == doctest::Approx(net->total_length()).epsilon(1e-9));
    for (std::size_t e = 0; e < net->num_edges(); ++e) {
      CHECK(l.spacing(static_cast<int>(e)) <= l.dx_target() * (1 + 1e-12));
      CHECK(l.chain(static_cast<int>(e)).size() ==
            static_cast<std::size_t>(std::ceil(net->edge(static_cast<int>(e)).length / l.dx_target() - 1e-9)) + 1);
    }
    // neighbour lists are symmetric
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      for (const auto& link : l.neighbors(i)) {
        bool back = false;
        for (const auto& other : l.neighbors(link.node)) back = back || other.node == i;
        CHECK(back);
      }
    }
  }
}

TEST_CASE("snap_to_network") {
  const auto seg = build_network({{0, 0}, {1, 0}}, {{0, 1}});
  auto s = snap_to_network(seg, {0.25, 0.0}, 1.0);
  CHECK(s.location.edge == 0);
  CHECK(s.location.offset == 0.25);
  CHECK(s.distance == 0.0);
  s = snap_to_network(seg, {0.5, 0.3}, 1.0);
  CHECK(s.location.offset == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.distance == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(code_of([&] { snap_to_network(seg, {0.5, 3.0}, 1.0); }) == ErrorCode::TooFarFromNetwork);

  // equidistant from two parallel edges: lowest edge id
  const auto par = build_network({{0, 1}, {1, 1}, {0, 0}, {1, 0}}, {{0, 1}, {2, 3}});
  CHECK(snap_to_network(par, {0.5, 0.5}, 1.0).location.edge == 0);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int r = 0; r < 10; ++r) {
    const auto net = oracle::random_network(rng, 5, 30);
    const SnapIndex index(net);
    for (int k = 0; k < 200; ++k) {
      const Eigen::Vector2d p(u(rng), u(rng));
      const auto a = snap_to_network(net, p, 10.0);
      const auto b = index.nearest(p, 10.0);
      CHECK(a.location == b.location);
      CHECK(a.distance == b.distance);
    }
  }
}

TEST_CASE("PointPattern subset") {
  auto net = std::make_shared<const LinearNetwork>(unit_triangle());
  const PointPattern p(net, {{0, 0.1}, {1, 0.2}, {2, 0.3}});
  const std::vector<std::size_t> idx{2, 0};
  const auto s = p.subset(idx);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == NetworkLocation{2, 0.3});
  CHECK(s[1] == NetworkLocation{0, 0.1});
  CHECK(code_of([&] { PointPattern(net, {{0, 2.0}}); }) == ErrorCode::LocationOffNetwork);
}
