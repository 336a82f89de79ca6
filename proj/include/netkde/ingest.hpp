#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "netkde/lattice.hpp"
#include "netkde/network.hpp"

namespace netkde {

/// Reads a FeatureCollection of LineString / MultiLineString features. Each
/// polyline becomes a chain of straight edges; endpoints within
/// `merge_tolerance` of an earlier vertex are merged into it.
LinearNetwork read_network_geojson(const std::string& path,
                                   double merge_tolerance = kVertexMergeTolerance);
LinearNetwork parse_network_geojson(std::string_view text,
                                    double merge_tolerance = kVertexMergeTolerance);

/// One LineString feature per edge, with an `edge_id` property.
void write_network_geojson(const LinearNetwork& net, const std::string& path);
std::string network_to_geojson(const LinearNetwork& net);

struct PointReadReport {
  std::size_t records = 0;
  std::size_t dropped = 0;
  double max_snap_distance = 0.0;  // largest distance actually moved
  std::vector<std::string> warnings;
};

struct PointReadResult {
  PointPattern pattern;
  PointReadReport report;
};

/// Reads event points from CSV (header with x,y; optional edge_id,offset
/// columns are used as given) or from GeoJSON Point features. Records farther
/// than `max_snap_dist` from the network are dropped and counted.
PointReadResult read_points(const std::string& path, std::shared_ptr<const LinearNetwork> net,
                            double max_snap_dist);
PointReadResult read_points_csv(std::istream& in, std::shared_ptr<const LinearNetwork> net,
                                double max_snap_dist);
PointReadResult parse_points_geojson(std::string_view text,
                                     std::shared_ptr<const LinearNetwork> net,
                                     double max_snap_dist);

/// Columns x, y, edge_id, offset.
void write_points_csv(const PointPattern& pattern, std::ostream& out);
void write_points_csv(const PointPattern& pattern, const std::string& path);

enum class OutputFormat { LatticeCsv, RasterCsv };

OutputFormat parse_output_format(std::string_view name);
std::string_view to_string(OutputFormat format);

inline constexpr int kDefaultRasterResolution = 128;

/// lattice-csv: one row per (edge, node cell) with columns
/// edge_id, offset_start, offset_end, value.
void write_lattice_csv(const LatticeFunction& f, std::ostream& out);

/// raster-csv: long format ix, iy, x, y, value over an R x R grid of the
/// network bounding box; cells with no lattice node within half a cell
/// diagonal of their centre hold NA.
void write_raster_csv(const LatticeFunction& f, std::ostream& out,
                      int resolution = kDefaultRasterResolution);

/// Writes to `path`, or to stdout when `path` is "-". `header` lines are
/// written first, each prefixed with '#'.
void write_lattice_function(const LatticeFunction& f, const std::string& path, OutputFormat format,
                            int raster_resolution = kDefaultRasterResolution,
                            const std::vector<std::string>& header = {});

/// Reads lattice-csv back onto `lattice`. Lines starting with '#' are skipped.
LatticeFunction read_lattice_csv(std::istream& in, std::shared_ptr<const Lattice> lattice);
LatticeFunction read_lattice_function(const std::string& path,
                                      std::shared_ptr<const Lattice> lattice);

/// Shortest decimal text that reads back to the same double (17 significant digits).
std::string format_double(double v);

/// Uniform scale plus translation taking a network into the unit square.
struct UnitSquareTransform {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double scale = 1.0;

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return (p - origin) * scale; }
};

UnitSquareTransform unit_square_transform(const LinearNetwork& net);
LinearNetwork transform_network(const LinearNetwork& net, const UnitSquareTransform& t);

std::string read_text_file(const std::string& path);

}  // namespace netkde
