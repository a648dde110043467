#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core/clustering.hpp"
#include "core/feature_set.hpp"

namespace qm {

enum class Kernel {
  // exp(-|x1 - x2| / (2 sigma^2)), unsquared norm.
  Gaussian,
  // exp(-|x1 - x2|^2 / (2 sigma^2)).
  GaussianSquared,
  // max(0, 1 - (d / sigma)^2): finite support, continuous at d = sigma.
  Quadratic,
  // 1 - d^2 / sigma for d < sigma, else 0; discontinuous at d = sigma unless sigma = 1.
  QuadraticAsPrinted,
};

std::string to_string(Kernel k);
Kernel kernel_from_string(const std::string& name);

double kernel_value(Kernel k, double d, double sigma);

// Finite quadratic kernel. Throws InputError when sigma <= 0.
double quadratic_kernel(double d, double sigma);

inline constexpr double kSigmaFloor = 1e-12;

struct MatchParams {
  double rho = 1.1;
  Kernel kernel = Kernel::Gaussian;

  void check() const;
};

// Per-image distinctiveness, indexed by dense image index of the source set.
struct Distinctiveness {
  std::vector<double> sigma;

  double min_over(std::span<const std::size_t> images) const;
};

// Per-image minimum intra-image distance. Images with fewer than two features
// borrow the smallest sigma of the other images; if no image has two
// features, every image gets the minimum pairwise distance of the whole set.
// Zero sigmas (duplicate features) are clamped to kSigmaFloor.
Distinctiveness compute_distinctiveness(const FeatureSet& fs);

// D(x) = sum over all features y (x included) of h(x, y; sigma_image(y)).
std::vector<double> compute_density(const FeatureSet& fs, const Distinctiveness& dist,
                                    Kernel kernel);

// Density-ascent forest. parent[r] is the nearest row that ranks strictly
// higher in (density, id) order; the single top-ranked row is the root.
struct DensityTree {
  std::vector<std::optional<std::size_t>> parent;
  std::vector<double> edge_length;  // NaN for the root
  std::vector<double> density;

  std::size_t size() const { return parent.size(); }
  bool is_root(std::size_t row) const { return !parent[row].has_value(); }
};

// True when row a ranks above row b: higher density, ties to the higher id.
bool ranks_above(const FeatureSet& fs, std::span<const double> density, std::size_t a,
                 std::size_t b);

DensityTree build_tree(const FeatureSet& fs, std::vector<double> density);

// Clusters as lists of rows, before conversion to ids.
using RowClusters = std::vector<std::vector<std::size_t>>;

// Visits tree edges from shortest to longest and merges the two endpoint
// clusters when their image sets are disjoint and the edge is no longer than
// rho times the smallest sigma among the images of both clusters.
RowClusters break_and_merge_rows(const FeatureSet& fs, const DensityTree& tree,
                                 const Distinctiveness& dist, double rho);

Clustering break_and_merge(const FeatureSet& fs, const DensityTree& tree,
                           const Distinctiveness& dist, const MatchParams& params);

Clustering to_clustering(const FeatureSet& fs, const RowClusters& rows);

// Everything one QuickMatch pass produces.
struct MatchResult {
  Distinctiveness distinctiveness;
  DensityTree tree;
  RowClusters rows;
  Clustering clustering;
};

MatchResult run_quickmatch(const FeatureSet& fs, const MatchParams& params);

Clustering quickmatch(const FeatureSet& fs, const MatchParams& params = {});

}  // namespace qm
