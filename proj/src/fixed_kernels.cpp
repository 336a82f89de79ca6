#include "netkde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace netkde {

namespace {

constexpr double kGaussianTruncation = 4.0;

void require_pattern(const PointPattern& pattern, const Lattice& lattice) {
  if (pattern.empty()) throw Error(ErrorCode::EmptyPattern, "point pattern is empty");
  if (&pattern.network() != &lattice.network()) {
    throw Error(ErrorCode::LatticeMismatch, "pattern and lattice use different networks");
  }
}

// Integral over [0, w] of k(min(p + x, q + w - x)): distance p at the left end,
// q at the right end, unit slope in between.
double integrate_tent(const Kernel1D& k, double p, double q, double w) {
  if (std::isinf(p) && std::isinf(q)) return 0.0;
  const double x = std::clamp(0.5 * (q + w - p), 0.0, w);
  return (k.half_mass(p + x) - k.half_mass(p)) + (k.half_mass(q + w - x) - k.half_mass(q));
}

// Adds weight * k(d_L(source, node)) to every lattice node within the support.
void add_kernel(const Lattice& lattice, const DistanceField& field, const Kernel1D& k,
                double weight, Eigen::VectorXd& out) {
  const LinearNetwork& net = lattice.network();
  const double R = k.support();
  for (int v = 0; v < static_cast<int>(net.num_vertices()); ++v) {
    const double d = field.to_vertex(v);
    if (d <= R) out[lattice.vertex_node(v)] += weight * k(d);
  }
  const int src = field.source().edge;
  for (int e = 0; e < static_cast<int>(net.num_edges()); ++e) {
    const Edge& edge = net.edge(e);
    if (e != src && field.to_vertex(edge.from) > R && field.to_vertex(edge.to) > R) continue;
    const auto chain = lattice.chain(e);
    for (std::size_t j = 1; j + 1 < chain.size(); ++j) {
      const double d = field.at(e, lattice.node(chain[j]).location.offset);
      if (d <= R) out[chain[j]] += weight * k(d);
    }
  }
}

class SplitWalker {
 public:
  SplitWalker(const Lattice& lattice, const Kernel1D& kernel, bool continuous,
              std::size_t cap, Eigen::VectorXd& out)
      : lattice_(lattice), net_(lattice.network()), kernel_(kernel),
        continuous_(continuous), cap_(cap), out_(out) {}

  void run(const NetworkLocation& source) {
    const NetworkLocation s = net_.canonical(source);
    paths_ = 0;
    stack_.clear();
    const int v = net_.vertex_at(s);
    if (v >= 0) {
      // Sources on a vertex start with no incoming branch.
      expand(v, -1, 0.0, 1.0);
    } else {
      const Edge& e = net_.edge(s.edge);
      deposit_direct(s);
      stack_.push_back({e.from, s.edge, s.offset, 1.0});
      stack_.push_back({e.to, s.edge, e.length - s.offset, 1.0});
    }
    while (!stack_.empty()) {
      const Step step = stack_.back();
      stack_.pop_back();
      expand(step.vertex, step.arrived, step.length, step.weight);
    }
  }

 private:
  struct Step {
    int vertex;
    int arrived;
    double length;
    double weight;
  };

  void count_path() {
    if (++paths_ > cap_) {
      throw Error(ErrorCode::PathExplosion,
                  "equal-split path enumeration exceeded " + std::to_string(cap_) +
                      " paths for one source; reduce the bandwidth");
    }
  }

  // Node value along one edge is its one-sided limit; vertex nodes receive
  // only their half-cell share so quadrature stays consistent.
  void add_node(Eigen::Index node, std::size_t pos, std::size_t last, double h, double value) {
    const double share = (pos == 0 || pos == last) ? 0.5 * h : h;
    out_[node] += value * share / lattice_.node(node).weight;
  }

  void deposit_direct(const NetworkLocation& s) {
    const auto chain = lattice_.chain(s.edge);
    const double h = lattice_.spacing(s.edge);
    const std::size_t last = chain.size() - 1;
    const double R = kernel_.support();
    for (std::size_t pos = 0; pos <= last; ++pos) {
      const double x = pos == last ? net_.edge(s.edge).length : lattice_.node(chain[pos]).location.offset;
      const double d = std::abs(x - s.offset);
      if (d <= R) add_node(chain[pos], pos, last, h, kernel_(d));
    }
  }

  // Deposits weight * k(length + x) along edge `e` leaving vertex `v`.
  void deposit_along(int e, int v, double length, double weight) {
    const auto chain = lattice_.chain(e);
    const double h = lattice_.spacing(e);
    const double len = net_.edge(e).length;
    const std::size_t last = chain.size() - 1;
    const bool forward = net_.edge(e).from == v;
    const double R = kernel_.support();
    for (std::size_t k = 0; k <= last; ++k) {
      const std::size_t pos = forward ? k : last - k;
      const double offset = pos == last ? len : (pos == 0 ? 0.0 : lattice_.node(chain[pos]).location.offset);
      const double x = forward ? offset : len - offset;
      const double d = length + x;
      if (d > R) break;
      add_node(chain[pos], pos, last, h, weight * kernel_(d));
    }
  }

  void expand(int v, int arrived, double length, double weight) {
    const int m = net_.degree(v);
    const double R = kernel_.support();
    for (int f : net_.incident(v)) {
      double a;
      if (arrived < 0) {
        a = 2.0 / m;
      } else if (continuous_) {
        a = 2.0 / m - (f == arrived ? 1.0 : 0.0);
      } else {
        if (f == arrived) continue;
        a = 1.0 / (m - 1);
      }
      if (a == 0.0) continue;
      count_path();
      const double w = weight * a;
      deposit_along(f, v, length, w);
      const double next = length + net_.edge(f).length;
      if (next < R) stack_.push_back({net_.opposite(f, v), f, next, w});
    }
  }

  const Lattice& lattice_;
  const LinearNetwork& net_;
  const Kernel1D& kernel_;
  bool continuous_;
  std::size_t cap_;
  Eigen::VectorXd& out_;
  std::size_t paths_ = 0;
  std::vector<Step> stack_;
};

LatticeFunction equal_split(const PointPattern& pattern, std::shared_ptr<const Lattice> lattice,
                            const Kernel1D& kernel, std::size_t path_cap, bool continuous) {
  require_pattern(pattern, *lattice);
  if (!kernel.bounded()) {
    throw Error(ErrorCode::UnboundedKernel,
                "equal-split estimators need a bounded kernel (epanechnikov or quartic)");
  }
  LatticeFunction out(lattice);
  SplitWalker walker(*lattice, kernel, continuous, path_cap, out.values());
  for (const auto& p : pattern.points()) walker.run(p);
  return out;
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "epanechnikov") return KernelFamily::Epanechnikov;
  if (name == "quartic") return KernelFamily::Quartic;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Quartic: return "quartic";
  }
  return "unknown";
}

Kernel1D::Kernel1D(KernelFamily family, double bandwidth)
    : family_(family), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorCode::InvalidArgument, "kernel bandwidth must be positive");
  }
  switch (family_) {
    case KernelFamily::Gaussian:
      support_ = kGaussianTruncation * bandwidth_;
      norm_ = 1.0 / (bandwidth_ * std::sqrt(2.0 * std::numbers::pi) *
                     std::erf(kGaussianTruncation / std::numbers::sqrt2));
      break;
    case KernelFamily::Epanechnikov:
      support_ = bandwidth_;
      norm_ = 0.75 / bandwidth_;
      break;
    case KernelFamily::Quartic:
      support_ = bandwidth_;
      norm_ = 15.0 / (16.0 * bandwidth_);
      break;
  }
}

double Kernel1D::operator()(double d) const {
  d = std::abs(d);
  if (d > support_) return 0.0;
  const double u = d / bandwidth_;
  switch (family_) {
    case KernelFamily::Gaussian: return norm_ * std::exp(-0.5 * u * u);
    case KernelFamily::Epanechnikov: return norm_ * (1.0 - u * u);
    case KernelFamily::Quartic: {
      const double s = 1.0 - u * u;
      return norm_ * s * s;
    }
  }
  return 0.0;
}

double Kernel1D::half_mass(double r) const {
  if (!(r < support_)) return 0.5;
  const double u = r / bandwidth_;
  switch (family_) {
    case KernelFamily::Gaussian:
      return 0.5 * std::erf(u / std::numbers::sqrt2) /
             std::erf(kGaussianTruncation / std::numbers::sqrt2);
    case KernelFamily::Epanechnikov: return 0.75 * (u - u * u * u / 3.0);
    case KernelFamily::Quartic: {
      const double u3 = u * u * u;
      return 15.0 / 16.0 * (u - 2.0 * u3 / 3.0 + u3 * u * u / 5.0);
    }
  }
  return 0.5;
}

double edge_correction(const LinearNetwork& net, const NetworkLocation& u,
                       const Kernel1D& kernel) {
  const NetworkLocation s = net.canonical(u);
  const DistanceField field(net, s, kernel.support());
  double total = 0.0;
  for (int e = 0; e < static_cast<int>(net.num_edges()); ++e) {
    const Edge& edge = net.edge(e);
    const double df = field.to_vertex(edge.from);
    const double dt = field.to_vertex(edge.to);
    if (e == s.edge) {
      total += integrate_tent(kernel, df, 0.0, s.offset);
      total += integrate_tent(kernel, 0.0, dt, edge.length - s.offset);
    } else {
      total += integrate_tent(kernel, df, dt, edge.length);
    }
  }
  return total;
}

LatticeFunction estimate_uniform_corrected(const PointPattern& pattern,
                                           std::shared_ptr<const Lattice> lattice,
                                           const Kernel1D& kernel) {
  require_pattern(pattern, *lattice);
  LatticeFunction out(lattice);
  Eigen::VectorXd& v = out.values();
  for (const auto& p : pattern.points()) {
    const DistanceField field(pattern.network(), p, kernel.support());
    add_kernel(*lattice, field, kernel, 1.0, v);
  }
  for (Eigen::Index i = 0; i < lattice->size(); ++i) {
    if (v[i] != 0.0) v[i] /= edge_correction(lattice->network(), lattice->node(i).location, kernel);
  }
  return out;
}

LatticeFunction estimate_jones_diggle(const PointPattern& pattern,
                                      std::shared_ptr<const Lattice> lattice,
                                      const Kernel1D& kernel) {
  require_pattern(pattern, *lattice);
  LatticeFunction out(lattice);
  for (const auto& p : pattern.points()) {
    const double c = edge_correction(pattern.network(), p, kernel);
    const DistanceField field(pattern.network(), p, kernel.support());
    add_kernel(*lattice, field, kernel, 1.0 / c, out.values());
  }
  return out;
}

LatticeFunction equal_split_discontinuous(const PointPattern& pattern,
                                          std::shared_ptr<const Lattice> lattice,
                                          const Kernel1D& kernel, std::size_t path_cap) {
  return equal_split(pattern, std::move(lattice), kernel, path_cap, false);
}

LatticeFunction equal_split_continuous(const PointPattern& pattern,
                                       std::shared_ptr<const Lattice> lattice,
                                       const Kernel1D& kernel, std::size_t path_cap) {
  return equal_split(pattern, std::move(lattice), kernel, path_cap, true);
}

}  // namespace netkde
