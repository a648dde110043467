#include "match/quickmatch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "core/error.hpp"

namespace qm {

std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::Gaussian: return "gaussian";
    case Kernel::GaussianSquared: return "gaussian-squared";
    case Kernel::Quadratic: return "quadratic";
    case Kernel::QuadraticAsPrinted: return "quadratic-as-printed";
  }
  return "unknown";
}

Kernel kernel_from_string(const std::string& name) {
  if (name == "gaussian") return Kernel::Gaussian;
  if (name == "gaussian-squared") return Kernel::GaussianSquared;
  if (name == "quadratic") return Kernel::Quadratic;
  if (name == "quadratic-as-printed") return Kernel::QuadraticAsPrinted;
  throw InputError("unknown kernel `" + name + "`");
}

double quadratic_kernel(double d, double sigma) {
  if (!(sigma > 0.0)) throw InputError("quadratic kernel needs sigma > 0");
  if (d >= sigma) return 0.0;
  const double r = d / sigma;
  return 1.0 - r * r;
}

double kernel_value(Kernel k, double d, double sigma) {
  switch (k) {
    case Kernel::Gaussian: return std::exp(-d / (2.0 * sigma * sigma));
    case Kernel::GaussianSquared: return std::exp(-(d * d) / (2.0 * sigma * sigma));
    case Kernel::Quadratic: return quadratic_kernel(d, sigma);
    case Kernel::QuadraticAsPrinted: return d < sigma ? 1.0 - d * d / sigma : 0.0;
  }
  return 0.0;
}

void MatchParams::check() const {
  if (std::isnan(rho) || rho < 0.0) throw InputError("rho must be >= 0");
}

double Distinctiveness::min_over(std::span<const std::size_t> images) const {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i : images) out = std::min(out, sigma.at(i));
  return out;
}

Distinctiveness compute_distinctiveness(const FeatureSet& fs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Distinctiveness out;
  out.sigma.assign(fs.image_count(), inf);
  double global_pair_min = inf;
  for (std::size_t a = 0; a < fs.size(); ++a) {
    for (std::size_t b = a + 1; b < fs.size(); ++b) {
      const double d = fs.distance(a, b);
      global_pair_min = std::min(global_pair_min, d);
      if (fs.image(a) == fs.image(b)) {
        double& s = out.sigma[fs.image(a)];
        s = std::min(s, d);
      }
    }
  }
  double min_defined = inf;
  for (double& s : out.sigma) {
    if (std::isfinite(s)) {
      s = std::max(s, kSigmaFloor);
      min_defined = std::min(min_defined, s);
    }
  }
  double fallback = min_defined;
  if (!std::isfinite(fallback)) fallback = global_pair_min;
  // A single feature has no distance scale at all.
  if (!std::isfinite(fallback)) fallback = 1.0;
  fallback = std::max(fallback, kSigmaFloor);
  for (double& s : out.sigma) {
    if (!std::isfinite(s)) s = fallback;
  }
  return out;
}

std::vector<double> compute_density(const FeatureSet& fs, const Distinctiveness& dist,
                                    Kernel kernel) {
  std::vector<double> density(fs.size(), 0.0);
  for (std::size_t a = 0; a < fs.size(); ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < fs.size(); ++b) {
      acc += kernel_value(kernel, fs.distance(a, b), dist.sigma[fs.image(b)]);
    }
    density[a] = acc;
  }
  return density;
}

bool ranks_above(const FeatureSet& fs, std::span<const double> density, std::size_t a,
                 std::size_t b) {
  if (density[a] != density[b]) return density[a] > density[b];
  return fs.id(a) > fs.id(b);
}

DensityTree build_tree(const FeatureSet& fs, std::vector<double> density) {
  DensityTree tree;
  tree.parent.assign(fs.size(), std::nullopt);
  tree.edge_length.assign(fs.size(), std::numeric_limits<double>::quiet_NaN());
  tree.density = std::move(density);
  for (std::size_t a = 0; a < fs.size(); ++a) {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t b = 0; b < fs.size(); ++b) {
      if (b == a || !ranks_above(fs, tree.density, b, a)) continue;
      const double d = fs.distance(a, b);
      if (!best || d < best_d || (d == best_d && fs.id(b) < fs.id(*best))) {
        best = b;
        best_d = d;
      }
    }
    if (best) {
      tree.parent[a] = best;
      tree.edge_length[a] = best_d;
    }
  }
  return tree;
}

namespace {

// Union-find over rows; each root carries its cluster's sorted image set and
// the smallest sigma among those images.
class ClusterForest {
 public:
  ClusterForest(const FeatureSet& fs, const Distinctiveness& dist)
      : parent_(fs.size()), images_(fs.size()), min_sigma_(fs.size()) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    for (std::size_t r = 0; r < fs.size(); ++r) {
      images_[r] = {fs.image(r)};
      min_sigma_[r] = dist.sigma[fs.image(r)];
    }
  }

  std::size_t find(std::size_t r) {
    while (parent_[r] != r) {
      parent_[r] = parent_[parent_[r]];
      r = parent_[r];
    }
    return r;
  }

  bool images_disjoint(std::size_t ra, std::size_t rb) const {
    const auto& a = images_[ra];
    const auto& b = images_[rb];
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
      if (*ia == *ib) return false;
      if (*ia < *ib) ++ia; else ++ib;
    }
    return true;
  }

  double min_sigma(std::size_t ra, std::size_t rb) const {
    return std::min(min_sigma_[ra], min_sigma_[rb]);
  }

  void merge(std::size_t ra, std::size_t rb) {
    if (images_[ra].size() < images_[rb].size()) std::swap(ra, rb);
    std::vector<std::size_t> merged;
    merged.reserve(images_[ra].size() + images_[rb].size());
    std::merge(images_[ra].begin(), images_[ra].end(), images_[rb].begin(), images_[rb].end(),
               std::back_inserter(merged));
    images_[ra] = std::move(merged);
    images_[rb].clear();
    min_sigma_[ra] = std::min(min_sigma_[ra], min_sigma_[rb]);
    parent_[rb] = ra;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::vector<std::size_t>> images_;
  std::vector<double> min_sigma_;
};

}  // namespace

RowClusters break_and_merge_rows(const FeatureSet& fs, const DensityTree& tree,
                                 const Distinctiveness& dist, double rho) {
  if (tree.size() != fs.size()) throw InputError("tree does not match feature set");
  struct Edge {
    double length;
    std::size_t child;
    std::size_t parent;
  };
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < fs.size(); ++r) {
    if (tree.parent[r]) edges.push_back({tree.edge_length[r], r, *tree.parent[r]});
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return std::tie(a.length, fs.id(a.child), fs.id(a.parent)) <
           std::tie(b.length, fs.id(b.child), fs.id(b.parent));
  });

  ClusterForest forest(fs, dist);
  for (const Edge& e : edges) {
    const std::size_t ra = forest.find(e.child);
    const std::size_t rb = forest.find(e.parent);
    if (ra == rb) continue;
    if (forest.images_disjoint(ra, rb) && e.length <= rho * forest.min_sigma(ra, rb)) {
      forest.merge(ra, rb);
    }
  }

  std::vector<std::size_t> slot(fs.size(), SIZE_MAX);
  RowClusters out;
  for (std::size_t r = 0; r < fs.size(); ++r) {
    const std::size_t root = forest.find(r);
    if (slot[root] == SIZE_MAX) {
      slot[root] = out.size();
      out.emplace_back();
    }
    out[slot[root]].push_back(r);
  }
  return out;
}

Clustering to_clustering(const FeatureSet& fs, const RowClusters& rows) {
  Clustering out;
  out.clusters.reserve(rows.size());
  for (const auto& members : rows) {
    Cluster c;
    c.reserve(members.size());
    for (std::size_t r : members) c.push_back(fs.id(r));
    out.clusters.push_back(std::move(c));
  }
  out.canonicalize();
  return out;
}

Clustering break_and_merge(const FeatureSet& fs, const DensityTree& tree,
                           const Distinctiveness& dist, const MatchParams& params) {
  params.check();
  return to_clustering(fs, break_and_merge_rows(fs, tree, dist, params.rho));
}

MatchResult run_quickmatch(const FeatureSet& fs, const MatchParams& params) {
  params.check();
  MatchResult out;
  if (fs.empty()) {
    out.clustering.provenance = {{"algorithm", "quickmatch"},
                                 {"rho", params.rho},
                                 {"kernel", to_string(params.kernel)}};
    return out;
  }
  out.distinctiveness = compute_distinctiveness(fs);
  out.tree = build_tree(fs, compute_density(fs, out.distinctiveness, params.kernel));
  out.rows = break_and_merge_rows(fs, out.tree, out.distinctiveness, params.rho);
  out.clustering = to_clustering(fs, out.rows);
  out.clustering.provenance = {{"algorithm", "quickmatch"},
                               {"rho", params.rho},
                               {"kernel", to_string(params.kernel)}};
  return out;
}

Clustering quickmatch(const FeatureSet& fs, const MatchParams& params) {
  return run_quickmatch(fs, params).clustering;
}

}  // namespace qm
