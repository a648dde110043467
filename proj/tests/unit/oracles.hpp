#pragma once
// Slow, independent reference implementations used to check the library.
// They work on plain arrays and share no code with src/ beyond reading a
// FeatureSet's rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "core/clustering.hpp"
#include "core/feature_set.hpp"
#include "core/rng.hpp"

namespace oracle {

using Vec = std::vector<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vec row(const qm::FeatureSet& fs, std::size_t r) {
  auto v = fs.vector(r);
  return Vec(v.begin(), v.end());
}

// Componentwise sum of squares in long double, then sqrt.
inline double distance(const Vec& a, const Vec& b) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    acc += d * d;
  }
  return static_cast<double>(std::sqrt(acc));
}

// sigma keyed by original image id.
inline std::map<std::int64_t, double> sigma(const qm::FeatureSet& fs) {
  std::map<std::int64_t, std::vector<Vec>> by_image;
  for (std::size_t r = 0; r < fs.size(); ++r) by_image[fs.id(r).image].push_back(row(fs, r));
  std::map<std::int64_t, double> out;
  double smallest = kInf;
  for (auto& [image, rows] : by_image) {
    double s = kInf;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j)
        if (i != j) s = std::min(s, distance(rows[i], rows[j]));
    if (s != kInf) s = std::max(s, 1e-12);
    out[image] = s;
    smallest = std::min(smallest, s);
  }
  if (smallest == kInf) {
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = 0; j < fs.size(); ++j)
        if (i != j) smallest = std::min(smallest, distance(row(fs, i), row(fs, j)));
    if (smallest == kInf) smallest = 1.0;
    smallest = std::max(smallest, 1e-12);
  }
  for (auto& [image, s] : out)
    if (s == kInf) s = smallest;
  return out;
}

enum class K { Gaussian, GaussianSquared, Quadratic, QuadraticAsPrinted };

inline double kernel(K k, double d, double s) {
  switch (k) {
    case K::Gaussian: return std::exp(-d / (2.0 * s * s));
    case K::GaussianSquared: return std::exp(-(d * d) / (2.0 * s * s));
    case K::Quadratic: return d >= s ? 0.0 : 1.0 - (d * d) / (s * s);
    case K::QuadraticAsPrinted: return d < s ? 1.0 - d * d / s : 0.0;
  }
  return 0.0;
}

inline std::vector<double> density(const qm::FeatureSet& fs, K k) {
  const auto s = sigma(fs);
  std::vector<double> out(fs.size(), 0.0);
  for (std::size_t x = 0; x < fs.size(); ++x)
    for (std::size_t y = 0; y < fs.size(); ++y)
      out[x] += kernel(k, distance(row(fs, x), row(fs, y)), s.at(fs.id(y).image));
  return out;
}

// Nearest feature of strictly higher (density, id) rank; distance ties go to
// the smaller id.
inline std::vector<std::optional<std::size_t>> parents(const qm::FeatureSet& fs,
                                                       const std::vector<double>& dens) {
  std::vector<std::optional<std::size_t>> out(fs.size());
  for (std::size_t x = 0; x < fs.size(); ++x) {
    std::vector<std::pair<std::pair<double, qm::FeatureId>, std::size_t>> higher;
    for (std::size_t y = 0; y < fs.size(); ++y) {
      const bool above = dens[y] > dens[x] || (dens[y] == dens[x] && fs.id(y) > fs.id(x));
      if (above) higher.push_back({{distance(row(fs, x), row(fs, y)), fs.id(y)}, y});
    }
    if (!higher.empty()) out[x] = std::min_element(higher.begin(), higher.end())->second;
  }
  return out;
}

// Minimizes |x - y|^2 subject to a.y >= b by bisection on the multiplier of
// the Lagrangian; y(l) = x + l a / 2. Returns |x - y*| and y*.
inline std::pair<double, Vec> halfspace_qp(const Vec& x, const Vec& a, double b) {
  auto at = [&](double l) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + 0.5 * l * a[i];
    return y;
  };
  auto dot = [](const Vec& u, const Vec& v) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < u.size(); ++i) s += static_cast<long double>(u[i]) * v[i];
    return static_cast<double>(s);
  };
  if (dot(a, x) >= b) return {0.0, x};
  double lo = 0.0, hi = 1.0;
  while (dot(a, at(hi)) < b) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dot(a, at(mid)) < b) lo = mid; else hi = mid;
  }
  const Vec y = at(hi);
  return {distance(x, y), y};
}

// Distance from x to the part of space closer to pe than to pt, written as
// the half-space 2 (pe - pt).y >= |pe|^2 - |pt|^2.
inline double boundary_qp(const Vec& x, const Vec& pt, const Vec& pe) {
  Vec a(x.size());
  double b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a[i] = 2.0 * (pe[i] - pt[i]);
    b += pe[i] * pe[i] - pt[i] * pt[i];
  }
  return halfspace_qp(x, a, b).first;
}

// d[a][b]: smallest boundary distance toward region a over b's features.
inline std::vector<std::vector<double>> scalars(const qm::FeatureSet& fs,
                                                const std::vector<Vec>& seeds) {
  const std::size_t m = seeds.size();
  std::vector<std::size_t> owner(fs.size());
  for (std::size_t r = 0; r < fs.size(); ++r) {
    double best = kInf;
    for (std::size_t a = 0; a < m; ++a) {
      const double d = distance(row(fs, r), seeds[a]);
      if (d < best) {
        best = d;
        owner[r] = a;
      }
    }
  }
  std::vector<std::vector<double>> out(m, std::vector<double>(m, kInf));
  for (std::size_t r = 0; r < fs.size(); ++r) {
    const std::size_t b = owner[r];
    for (std::size_t a = 0; a < m; ++a) {
      if (a == b) continue;
      out[a][b] = std::min(out[a][b], boundary_qp(row(fs, r), seeds[b], seeds[a]));
    }
  }
  return out;
}

// F1 over unordered same-cluster pairs, by enumerating every pair.
inline double pairwise_f1(const qm::Clustering& truth, const qm::Clustering& pred) {
  std::map<qm::FeatureId, std::size_t> lt, lp;
  for (std::size_t c = 0; c < truth.clusters.size(); ++c)
    for (const auto& id : truth.clusters[c]) lt[id] = c;
  for (std::size_t c = 0; c < pred.clusters.size(); ++c)
    for (const auto& id : pred.clusters[c]) lp[id] = c;
  std::vector<qm::FeatureId> ids;
  for (const auto& [id, c] : lt) ids.push_back(id);
  double tp = 0, in_t = 0, in_p = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const bool t = lt[ids[i]] == lt[ids[j]];
      const bool p = lp[ids[i]] == lp[ids[j]];
      in_t += t;
      in_p += p;
      tp += t && p;
    }
  }
  if (in_t + in_p == 0) return 1.0;
  return 2.0 * tp / (in_t + in_p);
}

// Ratio test by sorting all train distances per query.
inline std::vector<std::pair<std::size_t, std::size_t>> ratio_match(const qm::FeatureSet& query,
                                                                    const qm::FeatureSet& train,
                                                                    double ratio) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t q = 0; q < query.size(); ++q) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t t = 0; t < train.size(); ++t) d.push_back({distance(row(query, q), row(train, t)), t});
    std::sort(d.begin(), d.end());
    if (d.size() >= 2 && d[0].first < ratio * d[1].first) out.push_back({q, d[0].second});
  }
  return out;
}

// Random feature set: `images` images with 1..max_per_image features each.
inline qm::FeatureSet random_set(std::uint64_t seed, std::size_t images, std::size_t max_per_image,
                                 std::size_t dim, double extent = 10.0) {
  qm::Rng rng(seed);
  std::vector<qm::FeatureId> ids;
  std::vector<double> values;
  for (std::size_t i = 0; i < images; ++i) {
    const std::size_t n = 1 + rng.below(max_per_image);
    for (std::size_t k = 0; k < n; ++k) {
      ids.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(k)});
      for (std::size_t j = 0; j < dim; ++j) values.push_back(rng.uniform(0.0, extent));
    }
  }
  return qm::FeatureSet(dim, std::move(ids), std::move(values));
}

}  // namespace oracle
