#include "partition/partition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "json.hpp"

namespace qm {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

std::size_t nearest_seed(std::span<const double> x,
                         const std::vector<std::vector<double>>& seeds) {
  std::size_t best = 0;
  double best_d = squared_distance(x, seeds[0]);
  for (std::size_t a = 1; a < seeds.size(); ++a) {
    const double d = squared_distance(x, seeds[a]);
    if (d < best_d) {
      best = a;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

Partition::Partition(const FeatureSet& fs, std::vector<std::vector<double>> seeds,
                     std::string method)
    : dim_(fs.dim()), seeds_(std::move(seeds)), method_(std::move(method)) {
  if (seeds_.empty()) throw InputError("partition needs at least one agent");
  for (const auto& s : seeds_) {
    if (s.size() != dim_) throw InputError("seed dimension does not match features");
    for (double v : s) {
      if (!std::isfinite(v)) throw InputError("seed value is not finite");
    }
  }
  std::set<std::vector<double>> distinct(seeds_.begin(), seeds_.end());
  if (distinct.size() != seeds_.size()) throw InputError("partition seeds must be distinct");
  assignment_.resize(fs.size());
  for (std::size_t r = 0; r < fs.size(); ++r) assignment_[r] = nearest_seed(fs.vector(r), seeds_);
}

std::size_t Partition::label(std::span<const double> x) const {
  if (x.size() != dim_) throw InputError("label: dimension mismatch");
  return nearest_seed(x, seeds_);
}

std::vector<std::vector<std::size_t>> Partition::members() const {
  std::vector<std::vector<std::size_t>> out(agents());
  for (std::size_t r = 0; r < assignment_.size(); ++r) out[assignment_[r]].push_back(r);
  return out;
}

double kmeans_objective(const FeatureSet& fs, const Partition& part) {
  double acc = 0.0;
  for (std::size_t r = 0; r < fs.size(); ++r) {
    acc += squared_distance(fs.vector(r), part.seed(part.owner(r)));
  }
  return acc;
}

std::vector<std::vector<double>> random_seed_points(std::span<const double> lo,
                                                    std::span<const double> hi, std::size_t m,
                                                    std::uint64_t seed) {
  if (lo.size() != hi.size()) throw InputError("bounding box dimension mismatch");
  std::vector<double> a(lo.begin(), lo.end());
  std::vector<double> b(hi.begin(), hi.end());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(b[j] > a[j])) {
      a[j] -= kBoxWiden;
      b[j] += kBoxWiden;
    }
  }
  Rng rng(seed);
  std::vector<std::vector<double>> seeds(m, std::vector<double>(a.size()));
  for (auto& s : seeds) {
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = rng.uniform(a[j], b[j]);
  }
  return seeds;
}

Partition random_seeds(const FeatureSet& fs, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw InputError("agent count must be at least 1");
  if (fs.empty()) throw InputError("random seeding needs at least one feature");
  const auto [lo, hi] = fs.bounds();
  return Partition(fs, random_seed_points(lo, hi, m, seed), "random");
}

Partition kmeans_seeds(const FeatureSet& fs, std::size_t m, std::uint64_t seed,
                       KMeansTrace* trace) {
  if (m == 0) throw InputError("agent count must be at least 1");
  if (m > fs.size()) {
    throw InputError("agent count " + std::to_string(m) + " exceeds feature count " +
                     std::to_string(fs.size()));
  }
  {
    std::set<std::vector<double>> distinct;
    for (std::size_t r = 0; r < fs.size() && distinct.size() < m; ++r) {
      const auto v = fs.vector(r);
      distinct.emplace(v.begin(), v.end());
    }
    if (distinct.size() < m) {
      throw InputError("fewer distinct features than agents");
    }
  }

  const std::size_t dim = fs.dim();
  const auto [lo, hi] = fs.bounds();
  auto seeds = random_seed_points(lo, hi, m, seed);
  std::vector<std::size_t> assign(fs.size(), 0);

  auto assign_all = [&] {
    double objective = 0.0;
    for (std::size_t r = 0; r < fs.size(); ++r) {
      assign[r] = nearest_seed(fs.vector(r), seeds);
      objective += squared_distance(fs.vector(r), seeds[assign[r]]);
    }
    return objective;
  };

  // Moves each empty region's seed onto the row farthest from its own seed.
  auto repair_empty = [&] {
    for (std::size_t pass = 0; pass < m; ++pass) {
      std::vector<std::size_t> counts(m, 0);
      for (std::size_t a : assign) ++counts[a];
      const auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
      if (empty == counts.end()) return;
      const std::size_t target = static_cast<std::size_t>(empty - counts.begin());
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t r = 0; r < fs.size(); ++r) {
        if (counts[assign[r]] < 2) continue;  // never empty another region
        const double d = squared_distance(fs.vector(r), seeds[assign[r]]);
        if (d > far_d) {
          far = r;
          far_d = d;
        }
      }
      const auto v = fs.vector(far);
      seeds[target].assign(v.begin(), v.end());
      assign_all();
    }
  };

  if (trace) *trace = {};
  double objective = assign_all();
  repair_empty();
  objective = assign_all();
  if (trace) trace->objective.push_back(objective);

  for (std::size_t iter = 0; iter < kKMeansIterations; ++iter) {
    std::vector<std::vector<double>> next(m, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t r = 0; r < fs.size(); ++r) {
      const auto v = fs.vector(r);
      auto& acc = next[assign[r]];
      for (std::size_t j = 0; j < dim; ++j) acc[j] += v[j];
      ++counts[assign[r]];
    }
    for (std::size_t a = 0; a < m; ++a) {
      if (counts[a] == 0) {
        next[a] = seeds[a];
        continue;
      }
      for (double& v : next[a]) v /= static_cast<double>(counts[a]);
    }
    if (trace) trace->iterations = iter + 1;
    if (next == seeds) break;
    seeds = std::move(next);
    assign_all();
    repair_empty();
    objective = assign_all();
    if (trace) trace->objective.push_back(objective);
  }
  return Partition(fs, std::move(seeds), "kmeans");
}

double bisector_distance(std::span<const double> x, const Partition& part, std::size_t from,
                         std::size_t to) {
  const auto pt = part.seed(from);
  const auto pe = part.seed(to);
  double sep2 = 0.0;
  double proj = 0.0;
  for (std::size_t j = 0; j < pt.size(); ++j) {
    const double u = pe[j] - pt[j];
    sep2 += u * u;
    proj += u * (x[j] - pt[j]);
  }
  const double sep = std::sqrt(sep2);
  return std::max(0.0, sep / 2.0 - proj / sep);
}

BoundaryDistance boundary_distance(std::span<const double> x, const Partition& part,
                                   std::size_t from, std::size_t to) {
  if (x.size() != part.dim()) throw InputError("boundary_distance: dimension mismatch");
  if (from >= part.agents() || to >= part.agents()) {
    throw InputError("boundary_distance: agent index out of range");
  }
  if (from == to) throw InputError("boundary_distance: target agent equals own agent");
  const auto pt = part.seed(from);
  const auto pe = part.seed(to);
  std::vector<double> u(pt.size());
  double sep2 = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] = pe[j] - pt[j];
    sep2 += u[j] * u[j];
  }
  const double sep = std::sqrt(sep2);
  double proj = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] /= sep;
    proj += u[j] * (x[j] - pt[j]);
  }
  BoundaryDistance out;
  out.nearest_other = to;
  out.d_min = std::max(0.0, sep / 2.0 - proj);
  out.x_min.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out.x_min[j] = x[j] + out.d_min * u[j];
  return out;
}

BoundaryDistance boundary_distance(std::span<const double> x, const Partition& part,
                                   std::size_t to) {
  return boundary_distance(x, part, part.label(x), to);
}

MinBoundary min_boundary_distance(std::span<const double> x, const Partition& part) {
  MinBoundary out;
  const std::size_t own = part.label(x);
  for (std::size_t e = 0; e < part.agents(); ++e) {
    if (e == own) continue;
    const double d = bisector_distance(x, part, own, e);
    if (d < out.distance) {
      out.distance = d;
      out.agent = e;
    }
  }
  return out;
}

std::string partition_to_json(const Partition& part, const FeatureSet& fs) {
  nlohmann::json doc;
  doc["method"] = part.method();
  doc["agents"] = part.agents();
  doc["dim"] = part.dim();
  doc["seeds"] = part.seeds();
  nlohmann::json assignment = nlohmann::json::array();
  for (std::size_t r = 0; r < fs.size(); ++r) {
    assignment.push_back({fs.id(r).image, fs.id(r).index, part.owner(r)});
  }
  doc["assignment"] = std::move(assignment);
  return doc.dump() + "\n";
}

Partition partition_from_json(const std::string& text, const FeatureSet& fs) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("partition: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("seeds")) {
    throw InputError("partition: expected an object with \"seeds\"");
  }
  std::vector<std::vector<double>> seeds;
  try {
    seeds = doc["seeds"].get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("partition: bad seeds: ") + e.what());
  }
  return Partition(fs, std::move(seeds), doc.value("method", std::string("explicit")));
}

}  // namespace qm
