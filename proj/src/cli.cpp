#include "netkde/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "netkde/adaptive.hpp"
#include "netkde/experiment.hpp"
#include "netkde/heat.hpp"
#include "netkde/ingest.hpp"
#include "netkde/kernels.hpp"
#include "netkde/sim.hpp"

namespace netkde {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct NetworkArgs {
  std::string path;
  std::string grid;
  double merge_tol = kVertexMergeTolerance;
  std::string units = "units";
};

struct EstimateArgs {
  NetworkArgs net;
  std::string points;
  double snap_dist = kInfinity;
  std::string method = "heat";
  bool adaptive = false;
  double bw = 0.0;
  double bw_global = 0.0;
  double delta = 0.0;
  double dx = 0.0;
  std::string out = "-";
  std::string format = "lattice-csv";
  int raster_res = kDefaultRasterResolution;
  std::string kernel = "quartic";
  std::string gamma = "scale-free";
  std::string schedule = "incremental";
  double alpha = 0.9;
  std::size_t path_cap = kDefaultPathCap;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool no_timing = false;
  int repeat = 3;
};

struct SimulateArgs {
  NetworkArgs net;
  std::string scenario = "loggaussian-1";
  std::uint64_t seed = 1;
  double target_points = 520.0;
  int field_res = kMaxCholeskyResolution;
  std::string field_method = "auto";
  double dx = 0.01;
  bool rescale = false;
  std::string points_out = "-";
  std::string intensity_out;
  std::string network_out;
  std::string format = "lattice-csv";
  int raster_res = kDefaultRasterResolution;
};

struct StudyArgs {
  NetworkArgs net;
  std::string scenario = "loggaussian-1";
  std::vector<double> deltas = kStudyDeltas;
  int replicates = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  double target_points = 520.0;
  int field_res = kMaxCholeskyResolution;
  std::string field_method = "auto";
  double sim_dx = 0.01;
  double bw_global = 0.0;
  double dx = 0.0;
  std::string gamma = "scale-free";
  std::string schedule = "independent";
  double alpha = 0.9;
  bool rescale = false;
  bool no_timing = false;
  std::string out = "-";
};

json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

GammaMode parse_gamma(const std::string& s) {
  if (s == "scale-free") return GammaMode::ScaleFree;
  if (s == "literal") return GammaMode::Literal;
  throw Error(ErrorCode::InvalidArgument, "unknown gamma mode '" + s + "'");
}

BatchSchedule parse_schedule(const std::string& s) {
  if (s == "incremental") return BatchSchedule::Incremental;
  if (s == "independent") return BatchSchedule::Independent;
  throw Error(ErrorCode::InvalidArgument, "unknown schedule '" + s + "'");
}

void add_network_options(CLI::App* app, NetworkArgs& a, const std::string& default_grid = "") {
  a.grid = default_grid;
  app->add_option("--network", a.path, "Network GeoJSON (LineString / MultiLineString features)");
  app->add_option("--grid", a.grid, "Use a COLSxROWS grid network on the unit square instead")
      ->default_str(default_grid);
  app->add_option("--merge-tol", a.merge_tol, "Vertex merge tolerance")->capture_default_str();
  app->add_option("--units", a.units, "Unit label for reports")->capture_default_str();
}

std::shared_ptr<const LinearNetwork> load_network(const NetworkArgs& a) {
  if (!a.path.empty()) {
    return std::make_shared<const LinearNetwork>(read_network_geojson(a.path, a.merge_tol));
  }
  if (a.grid.empty()) throw Error(ErrorCode::InvalidArgument, "one of --network or --grid is required");
  int cols = 0, rows = 0;
  char sep = 0;
  std::istringstream in(a.grid);
  if (!(in >> cols >> sep >> rows) || sep != 'x' || !in.eof()) {
    throw Error(ErrorCode::InvalidArgument, "--grid expects COLSxROWS, got '" + a.grid + "'");
  }
  return std::make_shared<const LinearNetwork>(
      grid_network(cols, rows, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
}

json network_config(const NetworkArgs& a) {
  return {{"network", a.path.empty() ? json(nullptr) : json(a.path)},
          {"grid", a.path.empty() ? json(a.grid) : json(nullptr)},
          {"merge_tol", a.merge_tol},
          {"units", a.units}};
}

std::string config_line(const json& cfg) { return "#CONFIG " + cfg.dump(); }

// Runs `fn` on the stream for `path`; "-" means `out`.
void with_output(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& fn) {
  if (path == "-") {
    fn(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  fn(file);
  file.flush();
  if (!file) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

void emit_function(const LatticeFunction& f, const std::string& path, OutputFormat format, int raster_res,
                   const std::string& header, std::ostream& out) {
  with_output(path, out, [&](std::ostream& s) {
    if (path != "-") s << header << '\n';
    if (format == OutputFormat::LatticeCsv) write_lattice_csv(f, s);
    else write_raster_csv(f, s, raster_res);
  });
}

std::shared_ptr<const LinearNetwork> prepare_unit_square(std::shared_ptr<const LinearNetwork> net, bool rescale) {
  if (!rescale) return net;
  return std::make_shared<const LinearNetwork>(transform_network(*net, unit_square_transform(*net)));
}

int run_validate(const NetworkArgs& a, std::ostream& out) {
  const auto net = load_network(a);
  json cfg{{"command", "validate"}, {"version", kVersion}};
  cfg.update(network_config(a));
  out << config_line(cfg) << '\n';
  std::map<int, int> hist;
  for (std::size_t v = 0; v < net->num_vertices(); ++v) ++hist[net->degree(static_cast<int>(v))];
  json degrees = json::object();
  for (const auto& [d, c] : hist) degrees[std::to_string(d)] = c;
  out << "vertices: " << net->num_vertices() << '\n'
      << "edges: " << net->num_edges() << '\n'
      << "total_length: " << format_double(net->total_length()) << ' ' << a.units << '\n'
      << "min_edge_length: " << format_double(net->min_edge_length()) << ' ' << a.units << '\n'
      << "components: " << net->num_components() << '\n'
      << "degree_histogram: " << degrees.dump() << '\n'
      << "bbox: " << format_double(net->bbox_min().x()) << ' ' << format_double(net->bbox_min().y()) << ' '
      << format_double(net->bbox_max().x()) << ' ' << format_double(net->bbox_max().y()) << '\n';
  return kExitOk;
}

int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto net = prepare_unit_square(load_network(a.net), a.rescale);
  const Scenario scenario = parse_scenario(a.scenario);
  SimulationOptions opt;
  opt.target_points = a.target_points;
  opt.field_resolution = a.field_res;
  opt.field_method = parse_field_method(a.field_method);
  const OutputFormat format = parse_output_format(a.format);
  if (!(a.dx > 0.0)) throw Error(ErrorCode::InvalidArgument, "--dx must be positive");
  const auto lattice = discretize(net, a.dx);

  json cfg{{"command", "simulate"},     {"version", kVersion},       {"scenario", a.scenario},
           {"seed", a.seed},            {"target_points", a.target_points},
           {"field_res", a.field_res},  {"field_method", a.field_method},
           {"dx", a.dx},                {"rescale", a.rescale},      {"format", a.format},
           {"raster_res", a.raster_res}};
  cfg.update(network_config(a.net));
  const ScenarioSimulator simulator(scenario, lattice, opt);
  cfg["mean_offset"] = number(simulator.mean_offset());
  const std::string header = config_line(cfg);
  out << header << '\n';

  const ScenarioDraw draw = simulator.draw(a.seed);
  if (!a.network_out.empty()) write_network_geojson(*net, a.network_out);
  with_output(a.points_out, out, [&](std::ostream& s) {
    if (a.points_out != "-") s << header << '\n';
    write_points_csv(draw.pattern, s);
  });
  if (!a.intensity_out.empty()) {
    emit_function(draw.intensity, a.intensity_out, format, a.raster_res, header, out);
  }
  err << "simulated " << draw.pattern.size() << " points (expected "
      << format_double(draw.intensity.integral()) << ")\n";
  return kExitOk;
}

// Everything resolved from the flags before any estimation work.
struct EstimatePlan {
  std::shared_ptr<const LinearNetwork> net;
  PointReadResult points;
  json cfg;
};

EstimatePlan plan_estimate(const EstimateArgs& a, const char* command) {
  if (a.adaptive && a.delta != 0.0) bins_for_delta(a.delta);
  if (!a.adaptive && a.delta != 0.0) throw Error(ErrorCode::InvalidArgument, "--delta requires --adaptive");
  if (a.adaptive && a.method != "heat") {
    throw Error(ErrorCode::InvalidArgument, "--adaptive is only available with --method heat");
  }
  if (!a.adaptive && !(a.bw > 0.0)) throw Error(ErrorCode::InvalidArgument, "--bw is required and must be positive");
  static const std::vector<std::string> methods{"heat", "uniform-corrected", "jones-diggle", "esd", "esc"};
  if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + a.method + "'");
  }
  parse_output_format(a.format);
  parse_kernel_family(a.kernel);
  parse_gamma(a.gamma);
  parse_schedule(a.schedule);
  if (a.dx < 0.0) throw Error(ErrorCode::InvalidArgument, "--dx must be positive");
  if (a.points.empty()) throw Error(ErrorCode::InvalidArgument, "--points is required");

  EstimatePlan p;
  p.net = load_network(a.net);
  p.points = read_points(a.points, p.net, a.snap_dist);
  if (p.points.pattern.empty()) throw Error(ErrorCode::EmptyPattern, "no points to estimate from");
  p.cfg = {{"command", command},      {"version", kVersion},     {"points", a.points},
           {"snap_dist", number(a.snap_dist)},                   {"method", a.method},
           {"adaptive", a.adaptive},  {"format", a.format},      {"raster_res", a.raster_res},
           {"alpha", a.alpha},        {"jobs", a.jobs},          {"seed", a.seed},
           {"n_points", p.points.pattern.size()},                {"dropped", p.points.report.dropped}};
  p.cfg.update(network_config(a.net));
  return p;
}

LatticeFunction run_estimate_core(const EstimateArgs& a, EstimatePlan& p) {
  HeatConfig heat;
  heat.stability = a.alpha;
  json& cfg = p.cfg;
  const PointPattern& pattern = p.points.pattern;

  if (a.adaptive) {
    const double global = a.bw_global > 0.0 ? a.bw_global : heuristic_global_bandwidth(*p.net, pattern.size());
    const LatticeFunction pilot = pilot_estimate(pattern, global, heat);
    const BandwidthSet bw = abramson_bandwidths(pattern, pilot, global, parse_gamma(a.gamma));
    const double dx = a.dx > 0.0 ? a.dx : adaptive_dx(*p.net, bw);
    const auto lattice = discretize(p.net, dx);
    cfg["bw_global"] = global;
    cfg["bw_global_source"] = a.bw_global > 0.0 ? "flag" : "heuristic";
    cfg["gamma"] = a.gamma;
    cfg["dx"] = dx;
    cfg["delta"] = a.delta != 0.0 ? json(a.delta) : json(nullptr);
    cfg["schedule"] = a.schedule;
    cfg["pilot_clamped"] = bw.clamped;
    cfg["bw_min"] = bw.bandwidths.minCoeff();
    cfg["bw_max"] = bw.bandwidths.maxCoeff();
    LatticeFunction est =
        a.delta != 0.0
            ? estimate_adaptive_partition(pattern, lattice, bw, a.delta, heat, parse_schedule(a.schedule), a.jobs)
            : estimate_adaptive_direct(pattern, lattice, bw, heat, a.jobs);
    return est;
  }

  const double dx = a.dx > 0.0 ? a.dx : default_dx(*p.net, a.bw);
  const auto lattice = discretize(p.net, dx);
  cfg["bw"] = a.bw;
  cfg["dx"] = dx;
  if (a.method == "heat") return estimate_heat(pattern, lattice, a.bw, heat);
  cfg["kernel"] = a.kernel;
  const Kernel1D kernel(parse_kernel_family(a.kernel), a.bw);
  if (a.method == "uniform-corrected") return estimate_uniform_corrected(pattern, lattice, kernel);
  if (a.method == "jones-diggle") return estimate_jones_diggle(pattern, lattice, kernel);
  cfg["path_cap"] = a.path_cap;
  if (a.method == "esd") return equal_split_discontinuous(pattern, lattice, kernel, a.path_cap);
  return equal_split_continuous(pattern, lattice, kernel, a.path_cap);
}

void report_points(const PointReadReport& r, std::ostream& err) {
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
}

int run_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  EstimatePlan plan = plan_estimate(a, "estimate");
  report_points(plan.points.report, err);
  const LatticeFunction estimate = run_estimate_core(a, plan);
  plan.cfg["integral"] = estimate.integral();
  const std::string header = config_line(plan.cfg);
  out << header << '\n';
  emit_function(estimate, a.out, parse_output_format(a.format), a.raster_res, header, out);
  return kExitOk;
}

int run_bench(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.repeat < 1) throw Error(ErrorCode::InvalidArgument, "--repeat must be >= 1");
  EstimatePlan plan = plan_estimate(a, "bench");
  report_points(plan.points.report, err);
  run_estimate_core(a, plan);  // warmup
  std::vector<double> times;
  for (int k = 0; k < a.repeat; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    run_estimate_core(a, plan);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  plan.cfg["repeat"] = a.repeat;
  out << config_line(plan.cfg) << '\n';
  json result{{"median_s", median(times)}, {"min_s", *std::min_element(times.begin(), times.end())}};
  if (a.no_timing) result = {{"median_s", "NA"}, {"min_s", "NA"}};
  out << result.dump() << '\n';
  return kExitOk;
}

int run_study(const StudyArgs& a, std::ostream& out, std::ostream& err) {
  for (double d : a.deltas) bins_for_delta(d);
  const auto net = prepare_unit_square(load_network(a.net), a.rescale);
  StudyOptions opt;
  opt.scenario = a.scenario;
  parse_scenario(a.scenario);
  opt.deltas = a.deltas;
  opt.replicates = a.replicates;
  opt.seed = a.seed;
  opt.jobs = a.jobs;
  opt.simulation.target_points = a.target_points;
  opt.simulation.field_resolution = a.field_res;
  opt.simulation.field_method = parse_field_method(a.field_method);
  opt.sim_dx = a.sim_dx;
  opt.global_bandwidth = a.bw_global;
  opt.dx = a.dx;
  opt.gamma = parse_gamma(a.gamma);
  opt.schedule = parse_schedule(a.schedule);
  opt.heat.stability = a.alpha;
  opt.timing = !a.no_timing;

  json cfg{{"command", "study"},        {"version", kVersion},       {"scenario", a.scenario},
           {"deltas", a.deltas},        {"replicates", a.replicates}, {"seed", a.seed},
           {"jobs", a.jobs},            {"target_points", a.target_points},
           {"field_res", a.field_res},  {"field_method", a.field_method},
           {"sim_dx", a.sim_dx},        {"bw_global", a.bw_global > 0.0 ? json(a.bw_global) : json("heuristic")},
           {"dx", a.dx > 0.0 ? json(a.dx) : json("adaptive")},
           {"gamma", a.gamma},          {"schedule", a.schedule},    {"alpha", a.alpha},
           {"rescale", a.rescale},      {"timing", !a.no_timing}};
  cfg.update(network_config(a.net));
  const std::string header = config_line(cfg);
  out << header << '\n';

  const StudyResult result = run_partition_study(net, opt);
  with_output(a.out, out, [&](std::ostream& s) {
    if (a.out != "-") s << header << '\n';
    write_study_csv(result, s, opt.timing);
  });
  for (const auto& s : summarize_study(result, a.deltas)) {
    err << "delta " << s.delta << ": median ise " << s.median_ise;
    if (opt.timing) err << ", median time ratio " << s.median_time_ratio;
    err << '\n';
  }
  return kExitOk;
}

void add_estimate_options(CLI::App* app, EstimateArgs& a) {
  add_network_options(app, a.net);
  app->add_option("--points", a.points, "Points CSV (x,y[,edge_id,offset]) or GeoJSON Points");
  app->add_option("--snap-dist", a.snap_dist, "Drop points farther than this from the network");
  app->add_option("--method", a.method, "heat, uniform-corrected, jones-diggle, esd or esc")
      ->capture_default_str();
  app->add_flag("--adaptive", a.adaptive, "Adaptive (Abramson) bandwidths, heat method only");
  app->add_option("--bw", a.bw, "Fixed bandwidth");
  app->add_option("--bw-global", a.bw_global, "Global bandwidth for --adaptive (default: |L|/(2 sqrt n))");
  app->add_option("--delta", a.delta, "Quantile step of the bandwidth partition; omit for the direct sum");
  app->add_option("--dx", a.dx, "Target lattice spacing");
  app->add_option("--out", a.out, "Output path, '-' for stdout")->capture_default_str();
  app->add_option("--format", a.format, "lattice-csv or raster-csv")->capture_default_str();
  app->add_option("--raster-res", a.raster_res, "Raster side length")->capture_default_str();
  app->add_option("--kernel", a.kernel, "gaussian, epanechnikov or quartic")->capture_default_str();
  app->add_option("--gamma", a.gamma, "scale-free or literal")->capture_default_str();
  app->add_option("--schedule", a.schedule, "incremental or independent")->capture_default_str();
  app->add_option("--alpha", a.alpha, "Stability factor of the time step")->capture_default_str();
  app->add_option("--path-cap", a.path_cap, "Path limit for esd/esc")->capture_default_str();
  app->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str();
  app->add_option("--seed", a.seed, "Recorded in the configuration header")->capture_default_str();
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intensity estimation for point patterns on linear networks", "netkde"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  NetworkArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Print network statistics");
  validate->add_option("file", validate_args.path, "Network GeoJSON");
  add_network_options(validate, validate_args);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a pattern and its true intensity");
  add_network_options(simulate, sim.net, "11x10");
  simulate->add_option("--scenario", sim.scenario, "loggaussian-1..4 or paper-gm5")->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--target-points", sim.target_points)->capture_default_str();
  simulate->add_option("--field-res", sim.field_res)->capture_default_str();
  simulate->add_option("--field-method", sim.field_method, "auto, cholesky or circulant")->capture_default_str();
  simulate->add_option("--dx", sim.dx, "Lattice spacing of the intensity")->capture_default_str();
  simulate->add_flag("--rescale", sim.rescale, "Rescale the network into the unit square");
  simulate->add_option("--points-out", sim.points_out)->capture_default_str();
  simulate->add_option("--intensity-out", sim.intensity_out);
  simulate->add_option("--network-out", sim.network_out, "Write the (rescaled) network as GeoJSON");
  simulate->add_option("--format", sim.format)->capture_default_str();
  simulate->add_option("--raster-res", sim.raster_res)->capture_default_str();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate an intensity");
  add_estimate_options(estimate, est);

  EstimateArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time a single estimate");
  add_estimate_options(bench, bench_args);
  bench->add_option("--repeat", bench_args.repeat)->capture_default_str();
  bench->add_flag("--no-timing", bench_args.no_timing, "Print NA instead of times");

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Partition versus direct adaptive estimation");
  add_network_options(study, st.net, "11x10");
  study->add_option("--scenario", st.scenario)->capture_default_str();
  study->add_option("--deltas", st.deltas)->delimiter(',');
  study->add_option("--replicates", st.replicates)->capture_default_str();
  study->add_option("--seed", st.seed)->capture_default_str();
  study->add_option("--jobs", st.jobs)->capture_default_str();
  study->add_option("--target-points", st.target_points)->capture_default_str();
  study->add_option("--field-res", st.field_res)->capture_default_str();
  study->add_option("--field-method", st.field_method)->capture_default_str();
  study->add_option("--sim-dx", st.sim_dx)->capture_default_str();
  study->add_option("--bw-global", st.bw_global);
  study->add_option("--dx", st.dx);
  study->add_option("--gamma", st.gamma)->capture_default_str();
  study->add_option("--schedule", st.schedule)->capture_default_str();
  study->add_option("--alpha", st.alpha)->capture_default_str();
  study->add_flag("--rescale", st.rescale);
  study->add_flag("--no-timing", st.no_timing, "Write NA in the timing columns");
  study->add_option("--out", st.out)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*validate) return run_validate(validate_args, out);
    if (*simulate) return run_simulate(sim, out, err);
    if (*estimate) return run_estimate(est, out, err);
    if (*bench) return run_bench(bench_args, out, err);
    if (*study) return run_study(st, out, err);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return is_numerical(e.code()) ? kExitNumerical : kExitInput;
  } catch (const json::exception& e) {
    err << "error [ParseError]: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitInput;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace netkde
