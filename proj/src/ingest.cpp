#include "netkde/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace netkde {

using nlohmann::json;

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
}

const json& feature_array(const json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(ErrorCode::ParseError, "expected a GeoJSON FeatureCollection");
  }
  return doc["features"];
}

Eigen::Vector2d read_position(const json& p) {
  if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) {
    throw Error(ErrorCode::ParseError, "malformed GeoJSON position");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

// Merges points lying within `tol` of an earlier point, using a hash grid.
class VertexMerger {
 public:
  explicit VertexMerger(double tol) : tol_(tol), cell_(tol > 0.0 ? 2.0 * tol : 1.0) {}

  int add(const Eigen::Vector2d& p) {
    const long long cx = key(p.x()), cy = key(p.y());
    if (tol_ > 0.0) {
      int best = -1;
      double best_d = kInfinity;
      for (long long dx = -1; dx <= 1; ++dx) {
        for (long long dy = -1; dy <= 1; ++dy) {
          const auto it = cells_.find(pack(cx + dx, cy + dy));
          if (it == cells_.end()) continue;
          for (int v : it->second) {
            const double d = (points_[v] - p).norm();
            if (d <= tol_ && (d < best_d || (d == best_d && v < best))) {
              best = v;
              best_d = d;
            }
          }
        }
      }
      if (best >= 0) return best;
    } else {
      const auto it = cells_.find(pack(cx, cy));
      if (it != cells_.end())
        for (int v : it->second)
          if (points_[v] == p) return v;
    }
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    cells_[pack(cx, cy)].push_back(id);
    return id;
  }

  std::vector<Eigen::Vector2d> take() { return std::move(points_); }

 private:
  long long key(double v) const { return static_cast<long long>(std::floor(v / cell_)); }
  static std::uint64_t pack(long long a, long long b) {
    return static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(b);
  }

  double tol_;
  double cell_;
  std::vector<Eigen::Vector2d> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string out(s.substr(a, b - a));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": '" + cell + "' is not a finite number");
  }
  return v;
}

bool is_skippable(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

struct Snapper {
  std::shared_ptr<const LinearNetwork> net;
  SnapIndex index;
  double max_dist;
  PointReadReport report;
  std::vector<NetworkLocation> points;

  Snapper(std::shared_ptr<const LinearNetwork> n, double max_d)
      : net(std::move(n)), index(*net), max_dist(max_d) {
    if (!(max_d >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snap distance must be nonnegative");
  }

  void add(const Eigen::Vector2d& p) {
    ++report.records;
    try {
      const SnapResult r = index.nearest(p, max_dist);
      report.max_snap_distance = std::max(report.max_snap_distance, r.distance);
      points.push_back(r.location);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFarFromNetwork) throw;
      ++report.dropped;
    }
  }

  void add(const NetworkLocation& loc) {
    ++report.records;
    net->check(loc);
    points.push_back(loc);
  }

  PointReadResult finish() {
    if (report.records == 0) report.warnings.push_back("no point records found");
    if (report.records > 0 && points.empty()) {
      throw Error(ErrorCode::AllPointsTooFar,
                  "all " + std::to_string(report.records) + " points lie farther than " +
                      format_double(max_dist) + " from the network");
    }
    if (report.dropped > 0) {
      report.warnings.push_back(std::to_string(report.dropped) +
                                " points dropped beyond the snap distance");
    }
    return {PointPattern(net, std::move(points)), std::move(report)};
  }
};

bool has_suffix(const std::string& s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
  return tail == suffix;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LinearNetwork parse_network_geojson(std::string_view text, double merge_tolerance) {
  const json doc = parse_json(text);
  VertexMerger merger(merge_tolerance);
  std::vector<std::pair<int, int>> segments;

  auto add_line = [&](const json& coords) {
    if (!coords.is_array() || coords.size() < 2) {
      throw Error(ErrorCode::ParseError, "a LineString needs at least two positions");
    }
    int prev = merger.add(read_position(coords[0]));
    for (std::size_t k = 1; k < coords.size(); ++k) {
      const int cur = merger.add(read_position(coords[k]));
      if (cur != prev) segments.emplace_back(prev, cur);
      prev = cur;
    }
  };

  for (const json& feature : feature_array(doc)) {
    if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw Error(ErrorCode::GeometryTypeError, "feature without a line geometry");
    }
    const json& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (type == "LineString") {
      add_line(geom.at("coordinates"));
    } else if (type == "MultiLineString") {
      if (!geom.at("coordinates").is_array()) throw Error(ErrorCode::ParseError, "malformed MultiLineString");
      for (const json& line : geom["coordinates"]) add_line(line);
    } else {
      throw Error(ErrorCode::GeometryTypeError, "unsupported geometry type '" + type + "'");
    }
  }
  if (segments.empty()) throw Error(ErrorCode::ParseError, "network has no edges");
  return build_network(merger.take(), segments, merge_tolerance);
}

LinearNetwork read_network_geojson(const std::string& path, double merge_tolerance) {
  return parse_network_geojson(read_text_file(path), merge_tolerance);
}

std::string network_to_geojson(const LinearNetwork& net) {
  json features = json::array();
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const Edge& edge = net.edge(static_cast<int>(e));
    const Eigen::Vector2d& a = net.vertex(edge.from);
    const Eigen::Vector2d& b = net.vertex(edge.to);
    features.push_back({{"type", "Feature"},
                        {"properties", {{"edge_id", e}}},
                        {"geometry",
                         {{"type", "LineString"},
                          {"coordinates", {{a.x(), a.y()}, {b.x(), b.y()}}}}}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump() + "\n";
}

void write_network_geojson(const LinearNetwork& net, const std::string& path) {
  auto out = open_output(path);
  out << network_to_geojson(net);
  finish_output(out, path);
}

PointReadResult read_points_csv(std::istream& in, std::shared_ptr<const LinearNetwork> net,
                                double max_snap_dist) {
  Snapper snapper(std::move(net), max_snap_dist);
  std::string line;
  std::size_t line_no = 0;
  int cx = -1, cy = -1, ce = -1, co = -1;
  std::size_t columns = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_skippable(line)) continue;
    const auto cells = split_csv(line);
    if (!header) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        std::string name = cells[k];
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        const int idx = static_cast<int>(k);
        if (name == "x") cx = idx;
        else if (name == "y") cy = idx;
        else if (name == "edge_id") ce = idx;
        else if (name == "offset") co = idx;
      }
      if ((cx < 0 || cy < 0) && (ce < 0 || co < 0)) {
        throw Error(ErrorCode::ParseError, "CSV header needs x,y (or edge_id,offset) columns");
      }
      columns = cells.size();
      header = true;
      continue;
    }
    if (cells.size() != columns) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(columns) + " fields");
    }
    if (ce >= 0 && co >= 0 && !cells[ce].empty() && cells[ce] != "NA") {
      const double e = parse_number(cells[ce], line_no);
      if (e != std::floor(e) || e < 0 || e > 2e9) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad edge_id");
      }
      snapper.add(NetworkLocation{static_cast<int>(e), parse_number(cells[co], line_no)});
    } else {
      if (cx < 0 || cy < 0) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing location");
      }
      snapper.add(Eigen::Vector2d(parse_number(cells[cx], line_no), parse_number(cells[cy], line_no)));
    }
  }
  if (!header) throw Error(ErrorCode::ParseError, "CSV has no header line");
  return snapper.finish();
}

PointReadResult parse_points_geojson(std::string_view text,
                                     std::shared_ptr<const LinearNetwork> net,
                                     double max_snap_dist) {
  const json doc = parse_json(text);
  Snapper snapper(std::move(net), max_snap_dist);
  for (const json& feature : feature_array(doc)) {
    if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw Error(ErrorCode::GeometryTypeError, "feature without a point geometry");
    }
    const json& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (type == "Point") {
      snapper.add(read_position(geom.at("coordinates")));
    } else if (type == "MultiPoint") {
      for (const json& p : geom.at("coordinates")) snapper.add(read_position(p));
    } else {
      throw Error(ErrorCode::GeometryTypeError, "unsupported geometry type '" + type + "'");
    }
  }
  return snapper.finish();
}

PointReadResult read_points(const std::string& path, std::shared_ptr<const LinearNetwork> net,
                            double max_snap_dist) {
  if (has_suffix(path, ".geojson") || has_suffix(path, ".json")) {
    return parse_points_geojson(read_text_file(path), std::move(net), max_snap_dist);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_points_csv(in, std::move(net), max_snap_dist);
}

void write_points_csv(const PointPattern& pattern, std::ostream& out) {
  out << "x,y,edge_id,offset\n";
  for (const auto& p : pattern.points()) {
    const Eigen::Vector2d xy = pattern.network().position(p);
    out << format_double(xy.x()) << ',' << format_double(xy.y()) << ',' << p.edge << ','
        << format_double(p.offset) << '\n';
  }
}

void write_points_csv(const PointPattern& pattern, const std::string& path) {
  if (path == "-") {
    write_points_csv(pattern, std::cout);
    return;
  }
  auto out = open_output(path);
  write_points_csv(pattern, out);
  finish_output(out, path);
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "lattice-csv") return OutputFormat::LatticeCsv;
  if (name == "raster-csv") return OutputFormat::RasterCsv;
  throw Error(ErrorCode::InvalidArgument, "unknown output format '" + std::string(name) + "'");
}

std::string_view to_string(OutputFormat format) {
  return format == OutputFormat::LatticeCsv ? "lattice-csv" : "raster-csv";
}

void write_lattice_csv(const LatticeFunction& f, std::ostream& out) {
  const Lattice& lattice = f.lattice();
  out << "edge_id,offset_start,offset_end,value\n";
  for (std::size_t e = 0; e < lattice.network().num_edges(); ++e) {
    const auto chain = lattice.chain(static_cast<int>(e));
    for (std::size_t pos = 0; pos < chain.size(); ++pos) {
      const auto [lo, hi] = lattice.cell_on_edge(static_cast<int>(e), pos);
      out << e << ',' << format_double(lo) << ',' << format_double(hi) << ','
          << format_double(f[chain[pos]]) << '\n';
    }
  }
}

void write_raster_csv(const LatticeFunction& f, std::ostream& out, int resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "raster resolution must be >= 1");
  const Lattice& lattice = f.lattice();
  const LinearNetwork& net = lattice.network();
  const Eigen::Vector2d lo = net.bbox_min();
  Eigen::Vector2d extent = net.bbox_max() - lo;
  const double span = extent.maxCoeff();
  for (int k = 0; k < 2; ++k)
    if (!(extent[k] > 1e-12 * span)) extent[k] = span;
  const Eigen::Vector2d cell = extent / resolution;
  const double radius = 0.5 * cell.norm();

  // Bucket nodes on the raster grid itself; the search radius never exceeds
  // one cell, so the 3x3 neighbourhood suffices.
  auto bucket_of = [&](double v, int k) {
    return std::clamp(static_cast<int>(std::floor((v - lo[k]) / cell[k])), 0, resolution - 1);
  };
  std::vector<std::vector<Eigen::Index>> buckets(static_cast<std::size_t>(resolution) * resolution);
  for (Eigen::Index i = 0; i < lattice.size(); ++i) {
    const Eigen::Vector2d& p = lattice.node(i).xy;
    buckets[static_cast<std::size_t>(bucket_of(p.y(), 1)) * resolution + bucket_of(p.x(), 0)].push_back(i);
  }

  const double denom = 2.0 * resolution;
  out << "ix,iy,x,y,value\n";
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = lo.y() + extent.y() * ((2.0 * iy + 1.0) / denom);
    for (int ix = 0; ix < resolution; ++ix) {
      const double x = lo.x() + extent.x() * ((2.0 * ix + 1.0) / denom);
      Eigen::Index best = -1;
      double best_d = kInfinity;
      for (int by = std::max(0, iy - 1); by <= std::min(resolution - 1, iy + 1); ++by) {
        for (int bx = std::max(0, ix - 1); bx <= std::min(resolution - 1, ix + 1); ++bx) {
          for (Eigen::Index i : buckets[static_cast<std::size_t>(by) * resolution + bx]) {
            const double d = (lattice.node(i).xy - Eigen::Vector2d(x, y)).norm();
            if (d < best_d || (d == best_d && i < best)) {
              best = i;
              best_d = d;
            }
          }
        }
      }
      out << ix << ',' << iy << ',' << format_double(x) << ',' << format_double(y) << ',';
      if (best >= 0 && best_d <= radius) out << format_double(f[best]);
      else out << "NA";
      out << '\n';
    }
  }
}

void write_lattice_function(const LatticeFunction& f, const std::string& path, OutputFormat format,
                            int raster_resolution, const std::vector<std::string>& header) {
  auto emit = [&](std::ostream& out) {
    for (const auto& h : header) out << '#' << h << '\n';
    if (format == OutputFormat::LatticeCsv) write_lattice_csv(f, out);
    else write_raster_csv(f, out, raster_resolution);
  };
  if (path == "-") {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  auto out = open_output(path);
  emit(out);
  finish_output(out, path);
}

LatticeFunction read_lattice_csv(std::istream& in, std::shared_ptr<const Lattice> lattice) {
  LatticeFunction f(lattice);
  std::vector<char> seen(static_cast<std::size_t>(lattice->size()), 0);
  const LinearNetwork& net = lattice->network();
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_skippable(line)) continue;
    const auto cells = split_csv(line);
    if (!header) {
      if (cells.size() != 4 || cells[0] != "edge_id" || cells[3] != "value") {
        throw Error(ErrorCode::ParseError, "expected lattice-csv header edge_id,offset_start,offset_end,value");
      }
      header = true;
      continue;
    }
    if (cells.size() != 4) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const double e = parse_number(cells[0], line_no);
    if (e != std::floor(e) || e < 0 || e >= static_cast<double>(net.num_edges())) {
      throw Error(ErrorCode::LatticeMismatch, "line " + std::to_string(line_no) + ": unknown edge");
    }
    const int edge = static_cast<int>(e);
    const double mid = 0.5 * (parse_number(cells[1], line_no) + parse_number(cells[2], line_no));
    const auto chain = lattice->chain(edge);
    const double pos = std::round(mid / lattice->spacing(edge));
    if (pos < 0 || pos >= static_cast<double>(chain.size())) {
      throw Error(ErrorCode::LatticeMismatch, "line " + std::to_string(line_no) + ": offset outside edge");
    }
    const Eigen::Index node = chain[static_cast<std::size_t>(pos)];
    const double value = parse_number(cells[3], line_no);
    if (seen[node] && f[node] != value) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": conflicting values for a shared vertex");
    }
    f[node] = value;
    seen[node] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::LatticeMismatch, "lattice-csv does not cover every lattice node");
  }
  return f;
}

LatticeFunction read_lattice_function(const std::string& path,
                                      std::shared_ptr<const Lattice> lattice) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_lattice_csv(in, std::move(lattice));
}

UnitSquareTransform unit_square_transform(const LinearNetwork& net) {
  const Eigen::Vector2d extent = net.bbox_max() - net.bbox_min();
  const double span = extent.maxCoeff();
  if (!(span > 0.0)) throw Error(ErrorCode::InvalidArgument, "network has zero extent");
  return {net.bbox_min(), 1.0 / span};
}

LinearNetwork transform_network(const LinearNetwork& net, const UnitSquareTransform& t) {
  std::vector<Eigen::Vector2d> xy;
  xy.reserve(net.num_vertices());
  for (const auto& v : net.vertices()) xy.push_back(t.apply(v).cwiseMax(0.0).cwiseMin(1.0));
  std::vector<std::pair<int, int>> segs;
  segs.reserve(net.num_edges());
  for (const auto& e : net.edges()) segs.emplace_back(e.from, e.to);
  return build_network(std::move(xy), segs, kVertexMergeTolerance * t.scale);
}

}  // namespace netkde
