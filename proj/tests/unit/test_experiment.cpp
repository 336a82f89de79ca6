#include <doctest.h>

#include <sstream>

#include "netkde/error.hpp"
#include "netkde/experiment.hpp"
#include "oracles.hpp"

using namespace netkde;

namespace {

std::shared_ptr<const LinearNetwork> small_grid() {
  std::vector<Eigen::Vector2d> xy;
  std::vector<std::pair<int, int>> edges;
  const int k = 4;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) xy.emplace_back(i / double(k - 1), j / double(k - 1));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      if (i + 1 < k) edges.emplace_back(j * k + i, j * k + i + 1);
      if (j + 1 < k) edges.emplace_back(j * k + i, (j + 1) * k + i);
    }
  return std::make_shared<const LinearNetwork>(build_network(std::move(xy), edges));
}

StudyOptions quick_options() {
  StudyOptions opt;
  opt.deltas = {1.0, 0.5, 0.1};
  opt.replicates = 3;
  opt.seed = 5;
  opt.simulation.target_points = 40;
  opt.simulation.field_resolution = 12;
  opt.sim_dx = 0.02;
  opt.global_bandwidth = 0.15;
  opt.timing = false;
  return opt;
}

}  // namespace

TEST_CASE("integrated squared error") {
  std::mt19937_64 rng(3);
  auto net = std::make_shared<const LinearNetwork>(oracle::random_network(rng, 4, 20));
  auto lat = discretize(net, 0.02);
  const LatticeFunction a(lat, Eigen::VectorXd::Random(lat->size()));
  const LatticeFunction b(lat, Eigen::VectorXd::Random(lat->size()));
  CHECK(ise(a, a) == 0.0);
  CHECK(ise(a, b) == ise(b, a));
  CHECK(ise(a, b) > 0.0);
  const LatticeFunction shifted(lat, a.values().array() + 0.3);
  CHECK(ise(shifted, a) == doctest::Approx(0.09 * net->total_length()).epsilon(1e-12));
  CHECK_THROWS_AS(ise(a, LatticeFunction(discretize(net, 0.02))), Error);

  // the lattice quadrature of a smooth function converges at second order
  auto seg = std::make_shared<const LinearNetwork>(build_network({{0, 0}, {1, 0}}, {{0, 1}}));
  auto err = [&](double dx) {
    auto l = discretize(seg, dx);
    LatticeFunction s(l), z(l);
    for (Eigen::Index i = 0; i < l->size(); ++i) s[i] = std::sin(3.0 * seg->position(l->node(i).location).x());
    const double exact = 0.5 - std::sin(6.0) / 12.0;
    return std::abs(ise(s, z) - exact);
  };
  CHECK(err(0.02) / err(0.01) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("median and summaries") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(median({1, std::nan(""), 3}) == 2.0);
  CHECK(std::isnan(median({})));
}

TEST_CASE("partition study") {
  auto net = small_grid();
  const auto opt = quick_options();
  const auto res = run_partition_study(net, opt);
  REQUIRE(res.rows.size() == 9);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& row = res.rows[r * 3 + k];
      CHECK(row.replicate == static_cast<int>(r));
      CHECK(row.delta == opt.deltas[k]);
      CHECK(row.scenario == "loggaussian-1");
      if (row.n_points > 1) CHECK(row.ise >= 0.0);
    }
    CHECK(res.global_used[r] == 0.15);
  }

  std::ostringstream a, b;
  write_study_csv(res, a, false);
  auto parallel = opt;
  parallel.jobs = 3;
  write_study_csv(run_partition_study(net, parallel), b, false);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("scenario,replicate,delta,n_points,ise,time_direct_s,time_partition_s,time_ratio\n", 0) == 0);
  CHECK(a.str().find(",NA,NA,NA\n") != std::string::npos);

  const auto summary = summarize_study(res, opt.deltas);
  REQUIRE(summary.size() == 3);
  CHECK(summary[0].median_ise >= summary[2].median_ise);

  auto bad = opt;
  bad.deltas = {0.3};
  CHECK_THROWS_AS(run_partition_study(net, bad), Error);
}
