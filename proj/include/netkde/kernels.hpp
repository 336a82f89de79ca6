#pragma once

#include <cstddef>
#include <string_view>

#include "netkde/lattice.hpp"
#include "netkde/network.hpp"

namespace netkde {

enum class KernelFamily { Gaussian, Epanechnikov, Quartic };

KernelFamily parse_kernel_family(std::string_view name);
std::string_view to_string(KernelFamily family);

/// Symmetric smoothing kernel on the real line.
///
/// For the Gaussian, `bandwidth` is the standard deviation and the density is
/// truncated at 4 sd and renormalized; for the bounded families it is the
/// support half-width.
class Kernel1D {
 public:
  Kernel1D(KernelFamily family, double bandwidth);

  KernelFamily family() const { return family_; }
  double bandwidth() const { return bandwidth_; }
  double support() const { return support_; }
  bool bounded() const { return family_ != KernelFamily::Gaussian; }

  /// Density at |d|; zero beyond the support.
  double operator()(double d) const;

  /// Integral of the density over [0, r] for r >= 0 (saturates at 1/2).
  double half_mass(double r) const;

 private:
  KernelFamily family_;
  double bandwidth_;
  double support_;
  double norm_;
};

/// c_L(u): network integral of the kernel centred at `u`. Computed exactly
/// per edge from the kernel's cumulative mass, since distance is piecewise
/// linear with unit slope along every edge.
double edge_correction(const LinearNetwork& net, const NetworkLocation& u,
                       const Kernel1D& kernel);

/// Uniform-corrected kernel sum: c_L(u)^-1 * sum_i k(d_L(u, u_i)).
LatticeFunction estimate_uniform_corrected(const PointPattern& pattern,
                                           std::shared_ptr<const Lattice> lattice,
                                           const Kernel1D& kernel);

/// Jones-Diggle corrected kernel sum: sum_i k(d_L(u, u_i)) / c_L(u_i).
LatticeFunction estimate_jones_diggle(const PointPattern& pattern,
                                      std::shared_ptr<const Lattice> lattice,
                                      const Kernel1D& kernel);

inline constexpr std::size_t kDefaultPathCap = 1'000'000;

/// Equal-split discontinuous rule: non-reflecting paths, tail mass divided by
/// (m - 1) at each vertex of degree m.
LatticeFunction equal_split_discontinuous(const PointPattern& pattern,
                                          std::shared_ptr<const Lattice> lattice,
                                          const Kernel1D& kernel,
                                          std::size_t path_cap = kDefaultPathCap);

/// Equal-split continuous rule: paths may reflect; each outgoing branch at a
/// vertex of degree m is weighted 2/m and the incoming branch 2/m - 1.
LatticeFunction equal_split_continuous(const PointPattern& pattern,
                                       std::shared_ptr<const Lattice> lattice,
                                       const Kernel1D& kernel,
                                       std::size_t path_cap = kDefaultPathCap);

}  // namespace netkde
