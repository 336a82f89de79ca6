#include <doctest.h>

#include <algorithm>
#include <random>

#include "netkde/adaptive.hpp"
#include "netkde/error.hpp"
#include "oracles.hpp"

using namespace netkde;

namespace {

std::shared_ptr<const LinearNetwork> segment(double len) {
  return std::make_shared<const LinearNetwork>(build_network({{0, 0}, {len, 0}}, {{0, 1}}));
}

struct Fixture {
  std::shared_ptr<const LinearNetwork> net;
  PointPattern pattern;
  LatticeFunction pilot;
};

Fixture random_fixture(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 4, 18));
  std::vector<NetworkLocation> pts;
  for (int i = 0; i < n; ++i) pts.push_back(oracle::random_location(rng, *net));
  PointPattern p(net, pts);
  auto pilot = pilot_estimate(p, 0.2, HeatConfig{});
  return {net, std::move(p), std::move(pilot)};
}

}  // namespace

TEST_CASE("abramson bandwidths") {
  SUBCASE("constant pilot returns the global bandwidth") {
    auto seg = segment(1.0);
    auto lat = discretize(seg, 0.1);
    const LatticeFunction pilot(lat, Eigen::VectorXd::Constant(lat->size(), 7.3));
    const PointPattern p(seg, {{0, 0.11}, {0, 0.5}, {0, 0.77}, {0, 0.93}});
    const auto bw = abramson_bandwidths(p, pilot, 0.1);
    for (Eigen::Index i = 0; i < bw.bandwidths.size(); ++i) CHECK(bw.bandwidths[i] == 0.1);
  }
  SUBCASE("two points with pilot 2 and 8") {
    auto seg = segment(1.0);
    auto lat = discretize(seg, 0.25);
    LatticeFunction pilot(lat, Eigen::VectorXd::Constant(lat->size(), 1.0));
    const auto chain = lat->chain(0);
    pilot[chain[1]] = 2.0;
    pilot[chain[3]] = 8.0;
    const PointPattern p(seg, {{0, 0.25}, {0, 0.75}});
    const auto bw = abramson_bandwidths(p, pilot, 0.1);
    CHECK(bw.bandwidths[0] == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(bw.bandwidths[1] == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(bw.gamma == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(recompute_gamma(bw) == doctest::Approx(bw.gamma).epsilon(1e-12));
    // h_i sqrt(pilot_i) is constant under the square-root rule
    CHECK(bw.bandwidths[0] * std::sqrt(2.0) == doctest::Approx(bw.bandwidths[1] * std::sqrt(8.0)).epsilon(1e-12));
  }
  SUBCASE("rescaling the pilot leaves bandwidths unchanged") {
    auto fx = random_fixture(3, 40);
    const auto base = abramson_bandwidths(fx.pattern, fx.pilot, 0.1);
    for (double c : {0.25, 4.0, 1024.0}) {
      const LatticeFunction scaled(fx.pilot.lattice_ptr(), c * fx.pilot.values());
      CHECK(abramson_bandwidths(fx.pattern, scaled, 0.1).bandwidths == base.bandwidths);
    }
    const LatticeFunction odd(fx.pilot.lattice_ptr(), 3.7 * fx.pilot.values());
    CHECK((abramson_bandwidths(fx.pattern, odd, 0.1).bandwidths - base.bandwidths).cwiseAbs().maxCoeff() <=
          1e-14 * base.bandwidths.maxCoeff());
  }
  SUBCASE("geometric mean of the factors is one") {
    auto fx = random_fixture(5, 60);
    const auto bw = abramson_bandwidths(fx.pattern, fx.pilot, 0.15);
    CHECK((bw.bandwidths.array() / 0.15).log().mean() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(recompute_gamma(bw) == doctest::Approx(bw.gamma).epsilon(1e-12));
    const auto lit = abramson_bandwidths(fx.pattern, fx.pilot, 0.15, GammaMode::Literal);
    CHECK(recompute_gamma(lit) == doctest::Approx(lit.gamma).epsilon(1e-12));
  }
  SUBCASE("floored pilot") {
    auto seg = segment(1.0);
    auto lat = discretize(seg, 0.25);
    const LatticeFunction pilot(lat, Eigen::VectorXd::Zero(lat->size()));
    const auto bw = abramson_bandwidths(PointPattern(seg, {{0, 0.5}}), pilot, 0.1);
    CHECK(bw.clamped == 1);
    CHECK(bw.pilot_at_points[0] == kPilotFloor);
  }
  CHECK(heuristic_global_bandwidth(*segment(4.0), 4) == 1.0);
}

TEST_CASE("bins and quantiles") {
  CHECK(bins_for_delta(0.1) == 10);
  CHECK(bins_for_delta(0.01) == 100);
  CHECK(bins_for_delta(1.0) == 1);
  for (double bad : {0.3, 0.0, -0.5, 1.5}) {
    try {
      bins_for_delta(bad);
      FAIL("expected BadDelta");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadDelta);
      if (bad == 0.3) CHECK(std::string(e.what()).find("1/delta must be an integer") != std::string::npos);
    }
  }
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(quantile_type7(s, 0.0) == 1.0);
  CHECK(quantile_type7(s, 1.0) == 4.0);
  CHECK(quantile_type7(s, 0.5) == 2.5);
  CHECK(quantile_type7(s, 1.0 / 3) == doctest::Approx(2.0).epsilon(1e-15));

  Eigen::VectorXd h(100);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.2);
  for (auto& v : h) v = u(rng);
  const auto plan = make_partition(h, 0.1);
  for (const auto& m : plan.members()) CHECK(m.size() == 10);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const int d = plan.assignment[static_cast<std::size_t>(i)];
    CHECK(h[i] <= plan.edges[d + 1]);
    CHECK((d == 0 ? h[i] >= plan.edges[0] : h[i] > plan.edges[d]));
    CHECK(std::abs(h[i] - plan.midpoints[d]) <= 0.5 * (plan.edges[d + 1] - plan.edges[d]) + 1e-15);
  }
  const auto one = make_partition(h, 1.0);
  CHECK(one.bins == 1);
  CHECK(one.members()[0].size() == 100);
  CHECK(one.midpoints[0] == 0.5 * (h.minCoeff() + h.maxCoeff()));
}

TEST_CASE("adaptive estimators") {
  const HeatConfig cfg;
  auto fx = random_fixture(11, 50);
  const auto bw = abramson_bandwidths(fx.pattern, fx.pilot, 0.12);
  auto lat = discretize(fx.net, adaptive_dx(*fx.net, bw));
  const auto direct = estimate_adaptive_direct(fx.pattern, lat, bw, cfg);
  CHECK(direct.integral() == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(direct.values().minCoeff() >= 0.0);
  for (double delta : {1.0, 0.5, 0.1, 0.02}) {
    const auto part = estimate_adaptive_partition(fx.pattern, lat, bw, delta, cfg);
    CHECK(part.integral() == doctest::Approx(50.0).epsilon(1e-9));
  }
  CHECK((estimate_adaptive_direct(fx.pattern, lat, bw, cfg, 4).values() - direct.values()).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("equal bandwidths make the partition exact") {
    BandwidthSet flat = bw;
    flat.bandwidths.setConstant(0.08);
    const auto a = estimate_adaptive_direct(fx.pattern, lat, flat, cfg);
    const auto b = estimate_adaptive_partition(fx.pattern, lat, flat, 0.1, cfg);
    CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() <= 1e-12 * a.values().maxCoeff());
  }
  SUBCASE("single point: direct equals the fixed estimate") {
    const PointPattern one(fx.net, {fx.pattern[0]});
    const auto b1 = abramson_bandwidths(one, fx.pilot, 0.1);
    CHECK(b1.bandwidths[0] == 0.1);
    const auto d = estimate_adaptive_direct(one, lat, b1, cfg);
    CHECK((d.values() - estimate_heat(one, lat, 0.1, cfg).values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("point order does not matter") {
    std::vector<std::size_t> perm(fx.pattern.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::mt19937_64 rng(2);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto shuffled = fx.pattern.subset(perm);
    const auto bw2 = abramson_bandwidths(shuffled, fx.pilot, 0.12);
    const auto a = estimate_adaptive_partition(fx.pattern, lat, bw, 0.1, cfg);
    const auto b = estimate_adaptive_partition(shuffled, lat, bw2, 0.1, cfg);
    CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() <= 1e-12 * a.values().maxCoeff());
  }
  SUBCASE("bad delta propagates") {
    try {
      estimate_adaptive_partition(fx.pattern, lat, bw, 0.3, cfg);
      FAIL("expected BadDelta");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadDelta);
    }
  }
}
