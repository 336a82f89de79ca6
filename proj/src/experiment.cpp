#include "netkde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>

#include "netkde/ingest.hpp"
#include "netkde/parallel.hpp"

namespace netkde {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ReplicateSetup {
  PointPattern pattern;
  double global = 0.0;
  std::optional<BandwidthSet> bw;
  std::shared_ptr<const Lattice> lattice;
};

ReplicateSetup prepare(const ScenarioSimulator& simulator, const LinearNetwork& net,
                       const StudyOptions& opt, int replicate) {
  ReplicateSetup s;
  s.pattern = simulator.draw(opt.seed + static_cast<std::uint64_t>(replicate)).pattern;
  if (s.pattern.empty()) return s;
  s.global = opt.global_bandwidth > 0.0 ? opt.global_bandwidth
                                        : heuristic_global_bandwidth(net, s.pattern.size());
  const LatticeFunction pilot = pilot_estimate(s.pattern, s.global, opt.heat);
  s.bw.emplace(abramson_bandwidths(s.pattern, pilot, s.global, opt.gamma));
  s.lattice = discretize(s.pattern.network_ptr(), opt.dx > 0.0 ? opt.dx : adaptive_dx(net, *s.bw));
  return s;
}

}  // namespace

double ise(const LatticeFunction& estimate, const LatticeFunction& reference) {
  require_same_lattice(estimate, reference);
  const Eigen::ArrayXd diff = estimate.values().array() - reference.values().array();
  return (estimate.lattice().weights().array() * diff.square()).sum();
}

StudyResult run_partition_study(std::shared_ptr<const LinearNetwork> net, const StudyOptions& opt) {
  if (opt.replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (opt.deltas.empty()) throw Error(ErrorCode::InvalidArgument, "no delta values given");
  for (double d : opt.deltas) bins_for_delta(d);
  opt.heat.validate();

  const auto sim_lattice = discretize(net, std::min(opt.sim_dx, net->min_edge_length()));
  const ScenarioSimulator simulator(parse_scenario(opt.scenario), sim_lattice, opt.simulation);

  const std::size_t R = static_cast<std::size_t>(opt.replicates);
  const std::size_t D = opt.deltas.size();
  StudyResult result;
  result.rows.resize(R * D);
  result.dx_used.assign(R, 0.0);
  result.global_used.assign(R, 0.0);

  if (opt.timing) {
    const ReplicateSetup warm = prepare(simulator, *net, opt, 0);
    if (warm.bw) {
      estimate_adaptive_direct(warm.pattern, warm.lattice, *warm.bw, opt.heat, 1);
      estimate_adaptive_partition(warm.pattern, warm.lattice, *warm.bw, opt.deltas.front(), opt.heat,
                                  opt.schedule, 1);
    }
  }

  parallel_for(R, opt.jobs, [&](std::size_t r) {
    const ReplicateSetup s = prepare(simulator, *net, opt, static_cast<int>(r));
    result.global_used[r] = s.global;
    for (std::size_t k = 0; k < D; ++k) {
      StudyRow& row = result.rows[r * D + k];
      row.scenario = opt.scenario;
      row.replicate = static_cast<int>(r);
      row.delta = opt.deltas[k];
      row.n_points = s.pattern.size();
      row.ise = row.time_direct_s = row.time_partition_s = row.time_ratio = std::nan("");
    }
    if (!s.bw) return;
    result.dx_used[r] = s.lattice->dx_target();

    const auto t0 = Clock::now();
    const LatticeFunction direct = estimate_adaptive_direct(s.pattern, s.lattice, *s.bw, opt.heat, 1);
    const double t_direct = seconds_since(t0);
    for (std::size_t k = 0; k < D; ++k) {
      const auto t1 = Clock::now();
      const LatticeFunction part = estimate_adaptive_partition(s.pattern, s.lattice, *s.bw, opt.deltas[k],
                                                               opt.heat, opt.schedule, 1);
      const double t_part = seconds_since(t1);
      StudyRow& row = result.rows[r * D + k];
      row.ise = ise(part, direct);
      row.time_direct_s = t_direct;
      row.time_partition_s = t_part;
      row.time_ratio = t_direct > 0.0 ? t_part / t_direct : std::nan("");
    }
  });
  return result;
}

void write_study_csv(const StudyResult& result, std::ostream& out, bool timing) {
  auto num = [](double v) { return std::isnan(v) ? std::string("NA") : format_double(v); };
  out << "scenario,replicate,delta,n_points,ise,time_direct_s,time_partition_s,time_ratio\n";
  for (const auto& row : result.rows) {
    out << row.scenario << ',' << row.replicate << ',' << format_double(row.delta) << ','
        << row.n_points << ',' << num(row.ise) << ',';
    if (timing) {
      out << num(row.time_direct_s) << ',' << num(row.time_partition_s) << ',' << num(row.time_ratio);
    } else {
      out << "NA,NA,NA";
    }
    out << '\n';
  }
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::vector<DeltaSummary> summarize_study(const StudyResult& result, const std::vector<double>& deltas) {
  std::vector<DeltaSummary> out;
  for (double d : deltas) {
    std::vector<double> e, t, n;
    for (const auto& row : result.rows) {
      if (row.delta != d) continue;
      e.push_back(row.ise);
      t.push_back(row.time_ratio);
      n.push_back(static_cast<double>(row.n_points));
    }
    out.push_back({d, median(e), median(t), median(n)});
  }
  return out;
}

}  // namespace netkde
