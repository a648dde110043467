#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "core/error.hpp"

namespace qm {

namespace {

nlohmann::json cluster_json(const Cluster& c) {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureId& id : c) out.push_back({id.image, id.index});
  return out;
}

std::size_t pairs_of(std::size_t n) { return n * (n - (n > 0)) / 2; }

}  // namespace

nlohmann::json SplitReport::to_json() const {
  nlohmann::json j;
  j["quality"] = quality;
  j["contested_cluster_count"] = contested_cluster_count;
  j["p_contested"] = p_contested;
  j["split_feature_count"] = split_feature_count;
  if (detected_count) j["detected_count"] = *detected_count;
  if (p_split) j["p_split"] = *p_split;
  if (split_recall) j["split_recall"] = *split_recall;
  return j;
}

SplitReport split_quality(const Clustering& clustering, const FeatureSet& fs,
                          std::span<const std::size_t> owner,
                          const std::vector<bool>* detected) {
  if (owner.size() != fs.size()) throw InputError("owner labels do not match feature set");
  if (detected && detected->size() != fs.size()) {
    throw InputError("detected flags do not match feature set");
  }
  try {
    validate(clustering, fs);
  } catch (const ValidationError& e) {
    throw InputError(std::string("clustering does not match feature set: ") + e.what());
  }
  const Clustering canon = clustering.canonical();
  SplitReport out;
  std::size_t split_detected = 0;
  for (const Cluster& c : canon.clusters) {
    std::map<std::size_t, std::size_t> per_agent;
    std::vector<std::size_t> rows;
    for (const FeatureId& id : c) {
      const std::size_t row = *fs.find(id);
      rows.push_back(row);
      ++per_agent[owner[row]];
    }
    std::size_t best = 0;
    for (const auto& [agent, q] : per_agent) best = std::max(best, q);
    const double quality = static_cast<double>(best) / static_cast<double>(c.size());
    out.quality.push_back(quality);
    if (best < c.size()) {
      ++out.contested_cluster_count;
      out.split_feature_count += c.size();
      if (detected) {
        for (std::size_t row : rows) split_detected += (*detected)[row];
      }
    }
  }
  out.p_contested = canon.clusters.empty()
                        ? 0.0
                        : static_cast<double>(out.contested_cluster_count) /
                              static_cast<double>(canon.clusters.size());
  if (detected) {
    const std::size_t n = static_cast<std::size_t>(std::count(detected->begin(), detected->end(), true));
    out.detected_count = n;
    if (out.split_feature_count > 0) {
      out.p_split = static_cast<double>(n) / static_cast<double>(out.split_feature_count);
      out.split_recall =
          static_cast<double>(split_detected) / static_cast<double>(out.split_feature_count);
    }
  }
  return out;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json j;
  j["exact_equal"] = exact_equal;
  j["pairwise_f1"] = pairwise_f1;
  j["pairwise_precision"] = pairwise_precision;
  j["pairwise_recall"] = pairwise_recall;
  j["pairs_a"] = pairs_a;
  j["pairs_b"] = pairs_b;
  j["pairs_both"] = pairs_both;
  nlohmann::json only_a = nlohmann::json::array();
  nlohmann::json only_b = nlohmann::json::array();
  for (const Cluster& c : diff.only_in_a) only_a.push_back(cluster_json(c));
  for (const Cluster& c : diff.only_in_b) only_b.push_back(cluster_json(c));
  j["only_in_a"] = std::move(only_a);
  j["only_in_b"] = std::move(only_b);
  return j;
}

ComparisonReport compare_clusterings(const Clustering& a, const Clustering& b) {
  const Clustering ca = a.canonical();
  const Clustering cb = b.canonical();
  std::map<FeatureId, std::size_t> label_a, label_b;
  for (std::size_t i = 0; i < ca.clusters.size(); ++i) {
    for (const FeatureId& id : ca.clusters[i]) label_a[id] = i;
  }
  for (std::size_t i = 0; i < cb.clusters.size(); ++i) {
    for (const FeatureId& id : cb.clusters[i]) label_b[id] = i;
  }
  if (label_a.size() != label_b.size()) {
    throw InputError("clusterings cover different features");
  }
  // Contingency counts n_ij; same-cluster pairs in both = sum C(n_ij, 2).
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> overlap;
  for (const auto& [id, la] : label_a) {
    const auto it = label_b.find(id);
    if (it == label_b.end()) {
      throw InputError("feature " + to_string(id) + " missing from second clustering");
    }
    ++overlap[{la, it->second}];
  }
  ComparisonReport out;
  for (const Cluster& c : ca.clusters) out.pairs_a += pairs_of(c.size());
  for (const Cluster& c : cb.clusters) out.pairs_b += pairs_of(c.size());
  for (const auto& [key, n] : overlap) out.pairs_both += pairs_of(n);

  const std::size_t denom = out.pairs_a + out.pairs_b;
  out.pairwise_f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(out.pairs_both) / static_cast<double>(denom);
  out.pairwise_precision = out.pairs_b == 0 ? 1.0 : static_cast<double>(out.pairs_both) / static_cast<double>(out.pairs_b);
  out.pairwise_recall = out.pairs_a == 0 ? 1.0 : static_cast<double>(out.pairs_both) / static_cast<double>(out.pairs_a);

  std::set<Cluster> sa(ca.clusters.begin(), ca.clusters.end());
  std::set<Cluster> sb(cb.clusters.begin(), cb.clusters.end());
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                      std::back_inserter(out.diff.only_in_a));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(),
                      std::back_inserter(out.diff.only_in_b));
  out.exact_equal = out.diff.only_in_a.empty() && out.diff.only_in_b.empty();
  return out;
}

std::vector<PairMatch> baseline_ratio_match(const FeatureSet& query, const FeatureSet& train,
                                            const RatioTestOptions& opts) {
  if (!query.empty() && !train.empty() && query.dim() != train.dim()) {
    throw InputError("query and train dimensions differ");
  }
  if (!(opts.ratio > 0.0)) throw InputError("ratio must be > 0");
  std::vector<PairMatch> out;
  if (train.empty()) return out;
  for (std::size_t q = 0; q < query.size(); ++q) {
    std::size_t best = 0;
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < train.size(); ++t) {
      const double d = distance_unchecked(query.data(q), train.data(t), query.dim());
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = t;
      } else if (d < d2) {
        d2 = d;
      }
    }
    const bool keep = train.size() == 1 ? d1 <= opts.max_distance : d1 < opts.ratio * d2;
    if (keep) out.push_back({q, best, d1});
  }
  return out;
}

nlohmann::json PRCurve::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"threshold", p.threshold},
                   {"precision", p.precision},
                   {"recall", p.recall},
                   {"detections", p.detections}});
  }
  return {{"points", std::move(pts)}, {"auc", auc}};
}

PRCurve pr_curve(std::span<const double> counts, const std::vector<bool>& truth,
                 std::span<const double> thresholds) {
  if (counts.size() != truth.size()) throw InputError("counts and truth differ in length");
  const std::size_t positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
  if (positives == 0) throw InputError("no positive images: recall is undefined");
  PRCurve out;
  for (double th : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > th) {
        if (truth[i]) ++tp; else ++fp;
      }
    }
    PRPoint p;
    p.threshold = th;
    p.detections = tp + fp;
    p.precision = p.detections == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(p.detections);
    p.recall = static_cast<double>(tp) / static_cast<double>(positives);
    out.points.push_back(p);
  }
  std::vector<PRPoint> sorted = out.points;
  std::sort(sorted.begin(), sorted.end(), [](const PRPoint& a, const PRPoint& b) {
    if (a.recall != b.recall) return a.recall < b.recall;
    return a.precision > b.precision;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double dr = sorted[i].recall - sorted[i - 1].recall;
    out.auc += dr * 0.5 * (sorted[i].precision + sorted[i - 1].precision);
  }
  return out;
}

std::vector<double> default_thresholds(std::span<const double> counts) {
  std::set<double> distinct(counts.begin(), counts.end());
  std::vector<double> out;
  if (distinct.empty()) return out;
  out.push_back(*distinct.begin() - 1.0);
  out.insert(out.end(), distinct.begin(), distinct.end());
  return out;
}

}  // namespace qm
