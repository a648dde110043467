#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core/feature_set.hpp"

namespace qm {

// Voronoi partition of feature space into one region per agent.
class Partition {
 public:
  Partition() = default;

  // Seeds are m rows of `dim` values. Assignment is computed as nearest seed,
  // ties to the lower agent index. Throws InputError on coincident seeds.
  Partition(const FeatureSet& fs, std::vector<std::vector<double>> seeds, std::string method);

  std::size_t agents() const { return seeds_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::vector<double>>& seeds() const { return seeds_; }
  std::span<const double> seed(std::size_t a) const { return seeds_[a]; }

  // Agent owning each row of the set the partition was built on.
  const std::vector<std::size_t>& assignment() const { return assignment_; }
  std::size_t owner(std::size_t row) const { return assignment_[row]; }
  const std::string& method() const { return method_; }

  // Nearest seed, ties to the lower agent index.
  std::size_t label(std::span<const double> x) const;

  // Rows of each agent, ascending.
  std::vector<std::vector<std::size_t>> members() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> seeds_;
  std::vector<std::size_t> assignment_;
  std::string method_;
};

// Sum of squared distances from every row to its assigned seed.
double kmeans_objective(const FeatureSet& fs, const Partition& part);

struct KMeansTrace {
  std::vector<double> objective;  // after each assignment step
  std::size_t iterations = 0;
};

inline constexpr std::size_t kKMeansIterations = 100;

// Lloyd iterations from m points drawn uniformly in the bounding box. Runs
// kKMeansIterations updates or stops at a fixed point. An empty region is
// reseeded at the feature farthest from its current seed.
Partition kmeans_seeds(const FeatureSet& fs, std::size_t m, std::uint64_t seed,
                       KMeansTrace* trace = nullptr);

// Widened bounding box used for random seeding: zero-width dimensions grow by
// kBoxWiden on each side.
inline constexpr double kBoxWiden = 1e-6;

std::vector<std::vector<double>> random_seed_points(std::span<const double> lo,
                                                    std::span<const double> hi, std::size_t m,
                                                    std::uint64_t seed);

// Seeds drawn uniformly in the bounding box of `fs` from a shared integer.
Partition random_seeds(const FeatureSet& fs, std::size_t m, std::uint64_t seed);

struct BoundaryDistance {
  double d_min = 0.0;
  std::size_t nearest_other = 0;
  std::vector<double> x_min;
};

// Distance from x (in region `from`) to the bisector hyperplane between the
// seeds of `from` and `to`: the solution of
//   min |x - y|^2  s.t.  u.(y - P_from) - |P_to - P_from| / 2 >= 0
// with u the unit vector from P_from to P_to. The minimizer is the orthogonal
// projection of x onto the bisector.
BoundaryDistance boundary_distance(std::span<const double> x, const Partition& part,
                                   std::size_t from, std::size_t to);

// Same, with `from` taken as the label of x.
BoundaryDistance boundary_distance(std::span<const double> x, const Partition& part,
                                   std::size_t to);

// Scalar-only variant for hot loops.
double bisector_distance(std::span<const double> x, const Partition& part, std::size_t from,
                         std::size_t to);

struct MinBoundary {
  double distance = std::numeric_limits<double>::infinity();
  std::size_t agent = 0;  // meaningless when distance is infinite
};

// Smallest boundary distance over all other agents, ties to the lower index.
// A single-agent partition has no boundary: distance is +inf.
MinBoundary min_boundary_distance(std::span<const double> x, const Partition& part);

// JSON: {"method", "agents", "dim", "seeds": [[...]], "assignment": [[i,k,a],...]}.
std::string partition_to_json(const Partition& part, const FeatureSet& fs);
Partition partition_from_json(const std::string& text, const FeatureSet& fs);

}  // namespace qm
