#include "netkde/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <unsupported/Eigen/FFT>

namespace netkde {

namespace {

using ComplexGrid = std::vector<std::complex<double>>;

// In-place 2D DFT of an m x m row-major grid (index a * m + b).
void fft2(ComplexGrid& grid, int m, Eigen::FFT<double>& fft) {
  ComplexGrid in(m), out(m);
  for (int a = 0; a < m; ++a) {
    std::copy(grid.begin() + a * m, grid.begin() + (a + 1) * m, in.begin());
    fft.fwd(out, in);
    std::copy(out.begin(), out.end(), grid.begin() + a * m);
  }
  for (int b = 0; b < m; ++b) {
    for (int a = 0; a < m; ++a) in[a] = grid[a * m + b];
    fft.fwd(out, in);
    for (int a = 0; a < m; ++a) grid[a * m + b] = out[a];
  }
}

int next_power_of_two(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

void check_unit_square(const Eigen::Vector2d& xy) {
  constexpr double tol = 1e-12;
  if (!(xy.x() >= -tol && xy.x() <= 1.0 + tol && xy.y() >= -tol && xy.y() <= 1.0 + tol)) {
    std::ostringstream msg;
    msg << "point (" << xy.x() << ", " << xy.y() << ") lies outside the unit square";
    throw Error(ErrorCode::OutOfDomain, msg.str());
  }
}

struct Stencil {
  int i, j;
  double fx, fy;
};

Stencil locate(int resolution, const Eigen::Vector2d& xy) {
  check_unit_square(xy);
  const double span = resolution - 1;
  const double gx = std::clamp(xy.x(), 0.0, 1.0) * span;
  const double gy = std::clamp(xy.y(), 0.0, 1.0) * span;
  const int i = std::min(static_cast<int>(std::floor(gx)), resolution - 2);
  const int j = std::min(static_cast<int>(std::floor(gy)), resolution - 2);
  return {i, j, gx - i, gy - j};
}

}  // namespace

void ExpCovSpec::validate() const {
  if (!(variance > 0.0) || !(scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "covariance variance and scale must be positive");
  }
}

double ExpCovSpec::operator()(double distance) const {
  return variance * std::exp(-distance / scale);
}

FieldMethod parse_field_method(std::string_view name) {
  if (name == "auto") return FieldMethod::Auto;
  if (name == "cholesky") return FieldMethod::Cholesky;
  if (name == "circulant") return FieldMethod::Circulant;
  throw Error(ErrorCode::InvalidArgument, "unknown field method '" + std::string(name) + "'");
}

std::string_view to_string(FieldMethod method) {
  switch (method) {
    case FieldMethod::Auto: return "auto";
    case FieldMethod::Cholesky: return "cholesky";
    case FieldMethod::Circulant: return "circulant";
  }
  return "unknown";
}

GaussianFieldSampler::GaussianFieldSampler(int resolution, const ExpCovSpec& spec,
                                           FieldMethod method)
    : resolution_(resolution), spec_(spec), method_(method) {
  spec_.validate();
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "field resolution must be >= 2");
  if (method_ == FieldMethod::Auto) {
    method_ = resolution <= kMaxCholeskyResolution ? FieldMethod::Cholesky : FieldMethod::Circulant;
  }
  const int R = resolution_;
  const double h = 1.0 / (R - 1);

  if (method_ == FieldMethod::Cholesky) {
    const Eigen::Index n = static_cast<Eigen::Index>(R) * R;
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const double xa = static_cast<double>(a % R) * h, ya = static_cast<double>(a / R) * h;
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double xb = static_cast<double>(b % R) * h, yb = static_cast<double>(b / R) * h;
        cov(a, b) = spec_(std::hypot(xa - xb, ya - yb));
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      cov.diagonal().array() += 1e-10 * spec_.variance;
      llt.compute(cov);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::CholeskyFailure, "covariance matrix is not positive definite");
      }
    }
    factor_ = llt.matrixL();
    return;
  }

  Eigen::FFT<double> fft;
  const int base = next_power_of_two(2 * (R - 1));
  for (int m = base;; m *= 2) {
    ComplexGrid c(static_cast<std::size_t>(m) * m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const double dx = std::min(a, m - a) * h, dy = std::min(b, m - b) * h;
        c[static_cast<std::size_t>(a) * m + b] = spec_(std::hypot(dx, dy));
      }
    }
    fft2(c, m, fft);
    double lo = kInfinity, hi = 0.0;
    for (const auto& v : c) {
      lo = std::min(lo, v.real());
      hi = std::max(hi, v.real());
    }
    if (lo >= -1e-10 * hi || m >= 8 * base) {
      spectrum_.resize(m, m);
      clipped_ = 0;
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          double v = c[static_cast<std::size_t>(a) * m + b].real();
          if (v < 0.0) {
            if (v < -1e-10 * hi) ++clipped_;
            v = 0.0;
          }
          spectrum_(a, b) = std::sqrt(v / (static_cast<double>(m) * m));
        }
      }
      return;
    }
  }
}

Eigen::MatrixXd GaussianFieldSampler::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int R = resolution_;
  Eigen::MatrixXd field(R, R);
  if (method_ == FieldMethod::Cholesky) {
    Eigen::VectorXd eps(factor_.rows());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = normal(rng);
    const Eigen::VectorXd z = factor_.triangularView<Eigen::Lower>() * eps;
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < R; ++i) field(i, j) = z[static_cast<Eigen::Index>(j) * R + i];
    return field;
  }
  const int m = static_cast<int>(spectrum_.rows());
  ComplexGrid w(static_cast<std::size_t>(m) * m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double re = normal(rng);
      const double im = normal(rng);
      w[static_cast<std::size_t>(a) * m + b] = spectrum_(a, b) * std::complex<double>(re, im);
    }
  }
  Eigen::FFT<double> fft;
  fft2(w, m, fft);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < R; ++j) field(i, j) = w[static_cast<std::size_t>(i) * m + j].real();
  return field;
}

Eigen::MatrixXd sample_gaussian_field(int resolution, const ExpCovSpec& spec, std::uint64_t seed,
                                      FieldMethod method) {
  return GaussianFieldSampler(resolution, spec, method).sample(seed);
}

double bilinear(const Eigen::MatrixXd& grid, const Eigen::Vector2d& xy) {
  const Stencil s = locate(static_cast<int>(grid.rows()), xy);
  return (1 - s.fx) * (1 - s.fy) * grid(s.i, s.j) + s.fx * (1 - s.fy) * grid(s.i + 1, s.j) +
         (1 - s.fx) * s.fy * grid(s.i, s.j + 1) + s.fx * s.fy * grid(s.i + 1, s.j + 1);
}

double interpolated_variance(int resolution, const ExpCovSpec& spec, const Eigen::Vector2d& xy) {
  const Stencil s = locate(resolution, xy);
  const double h = 1.0 / (resolution - 1);
  const std::array<Eigen::Vector2d, 4> corner{
      Eigen::Vector2d(s.i * h, s.j * h), Eigen::Vector2d((s.i + 1) * h, s.j * h),
      Eigen::Vector2d(s.i * h, (s.j + 1) * h), Eigen::Vector2d((s.i + 1) * h, (s.j + 1) * h)};
  const std::array<double, 4> w{(1 - s.fx) * (1 - s.fy), s.fx * (1 - s.fy), (1 - s.fx) * s.fy,
                                s.fx * s.fy};
  double v = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) v += w[a] * w[b] * spec((corner[a] - corner[b]).norm());
  return v;
}

LatticeFunction field_to_network_intensity(const Eigen::MatrixXd& grid,
                                           std::shared_ptr<const Lattice> lattice, double mu) {
  LatticeFunction out(lattice);
  for (Eigen::Index i = 0; i < lattice->size(); ++i) {
    out[i] = std::exp(mu + bilinear(grid, lattice->node(i).xy));
  }
  return out;
}

double lognormal_mean_offset(double total_length, double variance, double target_count) {
  return std::log(target_count / total_length) - 0.5 * variance;
}

double calibrated_mean_offset(const Lattice& lattice, int resolution, const ExpCovSpec& spec,
                              double target_count) {
  if (!(target_count > 0.0)) throw Error(ErrorCode::InvalidArgument, "target count must be positive");
  double expected = 0.0;
  for (Eigen::Index i = 0; i < lattice.size(); ++i) {
    const auto& node = lattice.node(i);
    expected += node.weight * std::exp(0.5 * interpolated_variance(resolution, spec, node.xy));
  }
  return std::log(target_count / expected);
}

void MixtureSpec::validate() const {
  if (components.empty()) throw Error(ErrorCode::InvalidArgument, "mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative mixture weight");
    total += c.weight;
    Eigen::LLT<Eigen::Matrix2d> llt(c.covariance);
    if (llt.info() != Eigen::Success || (c.covariance - c.covariance.transpose()).norm() > 0.0) {
      throw Error(ErrorCode::InvalidArgument, "mixture covariance is not symmetric positive definite");
    }
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
  }
}

double MixtureSpec::density(const Eigen::Vector2d& xy) const {
  double sum = 0.0;
  for (const auto& c : components) {
    const Eigen::Vector2d d = xy - c.mean;
    const double det = c.covariance.determinant();
    const double q = d.dot(c.covariance.inverse() * d);
    sum += c.weight * std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  }
  return scale * sum;
}

MixtureSpec paper_gm5_mixture(std::uint64_t seed) {
  const std::array<Eigen::Matrix2d, 5> covs = [] {
    std::array<Eigen::Matrix2d, 5> m;
    m[0] << 0.01, -0.01, -0.01, 0.02;
    m[1] << 0.016, 0.02, 0.02, 0.05;
    m[2] << 0.01, 0.01, 0.01, 0.03;
    m[3] << 0.02, -0.01, -0.01, 0.05;
    m[4] << 0.01, 0.001, 0.001, 0.005;
    return m;
  }();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MixtureSpec spec;
  for (const auto& cov : covs) {
    const double x = unit(rng);
    const double y = unit(rng);
    spec.components.push_back({Eigen::Vector2d(x, y), cov, 0.2});
  }
  return spec;
}

LatticeFunction mixture_to_network_intensity(const MixtureSpec& spec,
                                             std::shared_ptr<const Lattice> lattice) {
  spec.validate();
  LatticeFunction out(lattice);
  for (Eigen::Index i = 0; i < lattice->size(); ++i) out[i] = spec.density(lattice->node(i).xy);
  return out;
}

PointPattern sample_poisson_on_network(const LatticeFunction& intensity, std::uint64_t seed) {
  const Lattice& lattice = intensity.lattice();
  const LinearNetwork& net = lattice.network();
  const Eigen::VectorXd& lambda = intensity.values();
  if ((lambda.array() < 0.0).any() || !lambda.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "intensity must be finite and nonnegative");
  }
  const Eigen::VectorXd cell_mass = lattice.weights().cwiseProduct(lambda);
  const double mass = cell_mass.sum();
  std::vector<NetworkLocation> points;
  if (!(mass > 0.0)) return PointPattern(lattice.network_ptr(), std::move(points));

  std::mt19937_64 rng(seed);
  const long count = std::poisson_distribution<long>(mass)(rng);
  std::discrete_distribution<Eigen::Index> pick(cell_mass.data(), cell_mass.data() + cell_mass.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  points.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) {
    const Eigen::Index node = pick(rng);
    const LatticeNode& info = lattice.node(node);
    int edge;
    std::size_t pos;
    if (info.vertex < 0) {
      edge = info.location.edge;
      pos = static_cast<std::size_t>(std::lround(info.location.offset / lattice.spacing(edge)));
    } else {
      // Vertex cells are spread over half a spacing of every incident edge.
      double u = unit(rng) * info.weight;
      const auto inc = net.incident(info.vertex);
      edge = inc.back();
      for (int e : inc) {
        u -= 0.5 * lattice.spacing(e);
        if (u < 0.0) {
          edge = e;
          break;
        }
      }
      pos = net.edge(edge).from == info.vertex ? 0 : lattice.chain(edge).size() - 1;
    }
    const auto [lo, hi] = lattice.cell_on_edge(edge, pos);
    const double offset = std::clamp(lo + unit(rng) * (hi - lo), 0.0, net.edge(edge).length);
    points.push_back({edge, offset});
  }
  return PointPattern(lattice.network_ptr(), std::move(points));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Scenario parse_scenario(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  if (name == "loggaussian-1") s.covariance = {0.9, 0.03, 0.0};
  else if (name == "loggaussian-2") s.covariance = {0.9, 0.09, 0.0};
  else if (name == "loggaussian-3") s.covariance = {2.0, 0.03, 0.0};
  else if (name == "loggaussian-4") s.covariance = {2.0, 0.09, 0.0};
  else if (name == "paper-gm5") s.kind = Scenario::Kind::Mixture;
  else throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(name) + "'");
  return s;
}

ScenarioSimulator::ScenarioSimulator(Scenario scenario, std::shared_ptr<const Lattice> lattice,
                                     const SimulationOptions& options)
    : scenario_(std::move(scenario)), lattice_(std::move(lattice)), options_(options) {
  const LinearNetwork& net = lattice_->network();
  check_unit_square(net.bbox_min());
  check_unit_square(net.bbox_max());
  if (scenario_.kind == Scenario::Kind::LogGaussian) {
    sampler_.emplace(options_.field_resolution, scenario_.covariance, options_.field_method);
    mu_ = scenario_.covariance.mean +
          calibrated_mean_offset(*lattice_, options_.field_resolution, scenario_.covariance,
                                 options_.target_points);
  }
}

ScenarioDraw ScenarioSimulator::draw(std::uint64_t seed) const {
  if (scenario_.kind == Scenario::Kind::LogGaussian) {
    const Eigen::MatrixXd field = sampler_->sample(derive_seed(seed, 1));
    LatticeFunction intensity = field_to_network_intensity(field, lattice_, mu_);
    PointPattern pattern = sample_poisson_on_network(intensity, derive_seed(seed, 2));
    return {std::move(intensity), std::move(pattern)};
  }
  MixtureSpec spec = paper_gm5_mixture(derive_seed(seed, 1));
  const LatticeFunction unit = mixture_to_network_intensity(spec, lattice_);
  spec.scale = options_.target_points / unit.integral();
  LatticeFunction intensity(lattice_, unit.values() * spec.scale);
  PointPattern pattern = sample_poisson_on_network(intensity, derive_seed(seed, 2));
  return {std::move(intensity), std::move(pattern)};
}

}  // namespace netkde
