#include <doctest.h>

#include <random>

#include "netkde/error.hpp"
#include "netkde/heat.hpp"
#include "oracles.hpp"

using namespace netkde;

namespace {

std::shared_ptr<const LinearNetwork> segment(double len) {
  return std::make_shared<const LinearNetwork>(build_network({{0, 0}, {len, 0}}, {{0, 1}}));
}

double node_x(const Lattice& lat, Eigen::Index i) {
  return lat.network().position(lat.node(i).location).x();
}

}  // namespace

TEST_CASE("deposit_initial_mass") {
  auto seg = segment(1.0);
  auto lat = discretize(seg, 0.25);
  const auto chain = lat->chain(0);
  auto f = deposit_initial_mass(PointPattern(seg, {{0, 0.5}}), lat);
  CHECK(f[chain[2]] == 1.0 / 0.25);
  CHECK(f.values().sum() == f[chain[2]]);
  f = deposit_initial_mass(PointPattern(seg, {{0, 0.375}}), lat);
  CHECK(f[chain[1]] == doctest::Approx(0.5 / 0.25).epsilon(1e-15));
  CHECK(f[chain[2]] == doctest::Approx(0.5 / 0.25).epsilon(1e-15));

  std::mt19937_64 rng(1);
  for (int r = 0; r < 20; ++r) {
    auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 4, 20));
    auto l = discretize(net, 0.037);
    std::vector<NetworkLocation> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(oracle::random_location(rng, *net));
    CHECK(deposit_initial_mass(pts, l).integral() == doctest::Approx(30.0).epsilon(1e-12));
  }
}

TEST_CASE("heat_step") {
  std::mt19937_64 rng(2);
  auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 4, 20));
  auto lat = discretize(net, 0.05);
  const HeatConfig cfg;
  const LatticeFunction c(lat, Eigen::VectorXd::Constant(lat->size(), 3.5));
  CHECK((heat_step(c, cfg).values().array() - 3.5).abs().maxCoeff() <= 1e-14);

  LatticeFunction f(lat, Eigen::VectorXd::Random(lat->size()).cwiseAbs());
  const HeatOperator op(lat, cfg);
  const double mass = f.integral();
  Eigen::VectorXd buf;
  for (int s = 0; s < 10000; ++s) {
    op.step(f.values(), buf, op.time_step());
    f.values().swap(buf);
    if (s % 1000 == 0) CHECK(f.values().minCoeff() >= -1e-15);
  }
  CHECK(std::abs(f.integral() - mass) <= 1e-12 * mass);

  SUBCASE("symmetric bump stays symmetric") {
    auto seg = segment(1.0);
    auto l = discretize(seg, 1.0 / 64);
    LatticeFunction g(l);
    const auto chain = l->chain(0);
    const std::size_t n = chain.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double x = static_cast<double>(k) / (n - 1);
      g[chain[k]] = std::exp(-50 * (x - 0.5) * (x - 0.5));
    }
    for (std::size_t k = 0; k < n; ++k) g[chain[n - 1 - k]] = g[chain[k]];
    const auto out = heat_solve(g, 0.003, cfg);
    for (std::size_t k = 0; k < n; ++k) CHECK(out[chain[k]] == out[chain[n - 1 - k]]);
  }

  HeatConfig bad;
  bad.stability = 1.5;
  CHECK_THROWS_AS(heat_step(c, bad), Error);
  try {
    op.step(c.values(), buf, 2 * op.max_stable_step());
    FAIL("expected StabilityViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StabilityViolation);
  }
}

TEST_CASE("heat_solve") {
  auto seg = segment(1.0);
  const HeatConfig cfg;

  SUBCASE("t = 0 is the identity") {
    auto lat = discretize(seg, 0.1);
    LatticeFunction f(lat, Eigen::VectorXd::Random(lat->size()));
    CHECK(heat_solve(f, 0.0, cfg).values() == f.values());
  }
  SUBCASE("method of images") {
    auto lat = discretize(seg, 1.0 / 512);
    const auto f0 = deposit_initial_mass(PointPattern(seg, {{0, 0.5}}), lat);
    const auto f = heat_solve(f0, 0.01, cfg);
    double err = 0.0, top = 0.0;
    for (Eigen::Index i = 0; i < lat->size(); ++i) {
      const double exact = oracle::images_heat_kernel(node_x(*lat, i), 0.5, 0.01);
      err = std::max(err, std::abs(f[i] - exact));
      top = std::max(top, exact);
    }
    CHECK(err / top <= 1e-3);
  }
  SUBCASE("convergence under dx refinement") {
    auto sup_err = [&](double dx) {
      auto lat = discretize(seg, dx);
      const auto f = heat_solve(deposit_initial_mass(PointPattern(seg, {{0, 0.3}}), lat), 0.01, cfg);
      double err = 0.0;
      for (Eigen::Index i = 0; i < lat->size(); ++i)
        err = std::max(err, std::abs(f[i] - oracle::images_heat_kernel(node_x(*lat, i), 0.3, 0.01)));
      return err;
    };
    CHECK(sup_err(1.0 / 64) / sup_err(1.0 / 128) >= 3.0);
  }
  SUBCASE("long time flattens to the mean") {
    auto lat = discretize(seg, 0.05);
    const auto f = heat_solve(deposit_initial_mass(PointPattern(seg, {{0, 0.1}}), lat), 100.0, cfg);
    CHECK((f.values().array() - 1.0).abs().maxCoeff() <= 1e-6);
  }
  CHECK_THROWS_AS(heat_solve(LatticeFunction(discretize(seg, 0.1)), -1.0, cfg), Error);
}

TEST_CASE("estimate_heat") {
  const HeatConfig cfg;
  auto seg = segment(2.0);
  auto lat = discretize(seg, default_dx(*seg, 0.05));
  CHECK(lat->dx_target() == doctest::Approx(0.05 / 3));

  const PointPattern one(seg, {{0, 1.0}});
  const auto f = estimate_heat(one, lat, 0.05, cfg);
  // second moment of the discrete solution is sigma^2
  double m2 = 0.0;
  for (Eigen::Index i = 0; i < lat->size(); ++i) {
    const double x = node_x(*lat, i) - 1.0;
    m2 += lat->node(i).weight * f[i] * x * x;
  }
  CHECK(m2 == doctest::Approx(0.0025).epsilon(1e-3));

  auto fine = discretize(seg, 0.05 / 40);
  const auto g = estimate_heat(one, fine, 0.05, cfg);
  double err = 0.0;
  for (Eigen::Index i = 0; i < fine->size(); ++i)
    err = std::max(err, std::abs(g[i] - oracle::gaussian_density(node_x(*fine, i) - 1.0, 0.0025)));
  CHECK(err <= 1e-3 * oracle::gaussian_density(0, 0.0025));

  const PointPattern twice(seg, {{0, 1.0}, {0, 1.0}});
  CHECK(estimate_heat(twice, lat, 0.05, cfg).values() == 2.0 * f.values());

  std::mt19937_64 rng(5);
  for (int r = 0; r < 10; ++r) {
    auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 5, 40));
    std::vector<NetworkLocation> pts;
    const int n = std::uniform_int_distribution<int>(1, 60)(rng);
    for (int i = 0; i < n; ++i) pts.push_back(oracle::random_location(rng, *net));
    auto l = discretize(net, default_dx(*net, 0.1));
    CHECK(estimate_heat(PointPattern(net, pts), l, 0.1, cfg).integral() == doctest::Approx(n).epsilon(1e-9));
  }
  CHECK_THROWS_AS(estimate_heat(one, lat, 0.0, cfg), Error);
}

TEST_CASE("multi-component networks keep mass per component") {
  auto two = std::make_shared<const LinearNetwork>(
      build_network({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {2, 3}}));
  auto lat = discretize(two, 0.01);
  const auto f = estimate_heat(PointPattern(two, {{0, 0.5}}), lat, 0.3, HeatConfig{});
  double other = 0.0;
  for (Eigen::Index i = 0; i < lat->size(); ++i)
    if (two->component_of_edge(lat->node(i).location.edge) == two->component_of_edge(1)) other += std::abs(f[i]);
  CHECK(other == 0.0);
}

TEST_CASE("estimate_heat_batch") {
  const HeatConfig cfg;
  std::mt19937_64 rng(7);
  auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 4, 20));
  auto lat = discretize(net, 0.02);
  std::vector<NetworkLocation> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(oracle::random_location(rng, *net));
  const PointPattern all(net, pts);

  const BandwidthSubset s1{pts, 0.07};
  const auto single = estimate_heat_batch(std::span(&s1, 1), lat, cfg);
  CHECK((single.values() - estimate_heat(all, lat, 0.07, cfg).values()).cwiseAbs().maxCoeff() <= 1e-12);

  std::vector<BandwidthSubset> halves{{{pts.begin(), pts.begin() + 10}, 0.07}, {{pts.begin() + 10, pts.end()}, 0.07}};
  CHECK((estimate_heat_batch(halves, lat, cfg).values() - single.values()).cwiseAbs().maxCoeff() <= 1e-12);

  // naive sum of separate solves as the oracle
  std::vector<BandwidthSubset> bins{{{pts.begin(), pts.begin() + 7}, 0.03},
                                    {{pts.begin() + 7, pts.begin() + 19}, 0.11},
                                    {{pts.begin() + 19, pts.end()}, 0.06}};
  Eigen::VectorXd naive = Eigen::VectorXd::Zero(lat->size());
  for (const auto& b : bins)
    naive += heat_solve(deposit_initial_mass(b.points, lat), b.bandwidth * b.bandwidth, cfg).values();
  const auto inc = estimate_heat_batch(bins, lat, cfg, BatchSchedule::Incremental);
  const auto ind = estimate_heat_batch(bins, lat, cfg, BatchSchedule::Independent, 3);
  CHECK((inc.values() - naive).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((ind.values() - naive).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(inc.integral() == doctest::Approx(30.0).epsilon(1e-9));

  std::vector<BandwidthSubset> overlap{{{pts[0], pts[1]}, 0.05}, {{pts[1]}, 0.08}};
  try {
    estimate_heat_batch(overlap, lat, cfg);
    FAIL("expected OverlappingSubsets");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlappingSubsets);
  }
}
