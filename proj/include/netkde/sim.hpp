#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "netkde/lattice.hpp"
#include "netkde/network.hpp"

namespace netkde {

/// Stationary exponential covariance sigma^2 exp(-|u| / phi).
struct ExpCovSpec {
  double variance = 1.0;
  double scale = 0.1;
  double mean = 0.0;

  void validate() const;
  double operator()(double distance) const;
};

enum class FieldMethod { Auto, Cholesky, Circulant };

FieldMethod parse_field_method(std::string_view name);
std::string_view to_string(FieldMethod method);

/// Largest grid side sampled by dense Cholesky under FieldMethod::Auto.
inline constexpr int kMaxCholeskyResolution = 64;

/// Zero-mean Gaussian field on an R x R grid covering the unit square; grid
/// value (i, j) sits at (i / (R - 1), j / (R - 1)).
///
/// The factorization is computed once, so repeated draws are cheap. Dense
/// Cholesky is exact; circulant embedding is exact when the embedded spectrum
/// is nonnegative (the embedding is enlarged until it is, and negative
/// eigenvalues left after 8x are clipped and counted).
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(int resolution, const ExpCovSpec& spec,
                       FieldMethod method = FieldMethod::Auto);

  int resolution() const { return resolution_; }
  FieldMethod method() const { return method_; }
  const ExpCovSpec& spec() const { return spec_; }
  std::size_t clipped_eigenvalues() const { return clipped_; }

  Eigen::MatrixXd sample(std::uint64_t seed) const;

 private:
  int resolution_;
  ExpCovSpec spec_;
  FieldMethod method_;
  Eigen::MatrixXd factor_;    // Cholesky: lower factor
  Eigen::MatrixXd spectrum_;  // circulant: sqrt(eigenvalues / m^2)
  std::size_t clipped_ = 0;
};

Eigen::MatrixXd sample_gaussian_field(int resolution, const ExpCovSpec& spec, std::uint64_t seed,
                                      FieldMethod method = FieldMethod::Auto);

/// Bilinear interpolation of a unit-square grid; OutOfDomain outside [0, 1]^2.
double bilinear(const Eigen::MatrixXd& grid, const Eigen::Vector2d& xy);

/// Variance of the bilinear interpolant of the field at `xy`.
double interpolated_variance(int resolution, const ExpCovSpec& spec, const Eigen::Vector2d& xy);

/// exp(mu + interpolated field) at every lattice node.
LatticeFunction field_to_network_intensity(const Eigen::MatrixXd& grid,
                                           std::shared_ptr<const Lattice> lattice, double mu);

/// log(n / |L|) - sigma^2 / 2: mean offset for an expected count of n when the
/// field keeps its full variance everywhere.
double lognormal_mean_offset(double total_length, double variance, double target_count);

/// Offset making the expected lattice integral of exp(mu + Z_interp) equal
/// `target_count`, using the exact pointwise variance of the interpolant.
double calibrated_mean_offset(const Lattice& lattice, int resolution, const ExpCovSpec& spec,
                              double target_count);

struct GaussianComponent {
  Eigen::Vector2d mean;
  Eigen::Matrix2d covariance;
  double weight = 0.0;
};

struct MixtureSpec {
  std::vector<GaussianComponent> components;
  double scale = 1.0;  // multiplies the mixture density

  void validate() const;
  double density(const Eigen::Vector2d& xy) const;
};

/// Five-component mixture with equal weights, fixed covariances and means
/// drawn uniformly in the unit square.
MixtureSpec paper_gm5_mixture(std::uint64_t seed);

LatticeFunction mixture_to_network_intensity(const MixtureSpec& spec,
                                             std::shared_ptr<const Lattice> lattice);

/// Inhomogeneous Poisson sample: N ~ Poisson(integral), cells chosen with
/// probability w_i * lambda_i, positions uniform within the cell.
PointPattern sample_poisson_on_network(const LatticeFunction& intensity, std::uint64_t seed);

/// Independent substream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct Scenario {
  enum class Kind { LogGaussian, Mixture };
  std::string name;
  Kind kind = Kind::LogGaussian;
  ExpCovSpec covariance;
};

/// loggaussian-1..4 or paper-gm5.
Scenario parse_scenario(std::string_view name);

struct SimulationOptions {
  double target_points = 520.0;
  int field_resolution = kMaxCholeskyResolution;
  FieldMethod field_method = FieldMethod::Auto;
};

struct ScenarioDraw {
  LatticeFunction intensity;
  PointPattern pattern;
};

/// Draws intensities and patterns for one scenario on a fixed lattice. The
/// network must lie inside the unit square.
class ScenarioSimulator {
 public:
  ScenarioSimulator(Scenario scenario, std::shared_ptr<const Lattice> lattice,
                    const SimulationOptions& options);

  const Scenario& scenario() const { return scenario_; }
  double mean_offset() const { return mu_; }

  ScenarioDraw draw(std::uint64_t seed) const;

 private:
  Scenario scenario_;
  std::shared_ptr<const Lattice> lattice_;
  SimulationOptions options_;
  std::optional<GaussianFieldSampler> sampler_;
  double mu_ = 0.0;
};

}  // namespace netkde
